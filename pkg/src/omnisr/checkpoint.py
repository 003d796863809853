"""Versioned binary checkpoint format ("OSR1").

Layout (all integers little-endian):

    magic   4 bytes  b"OSR1"
    payload:
        u32  format version (currently 1)
        u32  config length, then that many bytes of INI config text
        u32  parameter count, then per parameter:
             u16 name length + utf-8 name
             u8  rank, then rank u32 dims
             float32 data, C order
        u8   optimizer-state flag; if set:
             u64 iteration
             u32 rng-state length, then that many bytes of JSON
             per parameter: float32 first-moment then second-moment arrays
    u32     CRC-32 of the payload

The checksum is verified before any parsing, so a truncated or corrupted
file never yields partial state.  Writes go through a temp file and rename.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
import zlib
from pathlib import Path

import numpy as np

from .errors import CheckpointError

MAGIC = b"OSR1"
VERSION = 1


def _pack_str(chunks: list, text: str, width: str) -> None:
    raw = text.encode("utf-8")
    chunks.append(struct.pack("<" + width, len(raw)))
    chunks.append(raw)


def checkpoint_save(path, model, config, optimizer=None, iteration: int = 0,
                    rng_state=None) -> None:
    """Serialize a model (and optionally its optimizer state) atomically."""
    from .config import Config, config_to_ini

    ini = config_to_ini(Config(network=config))
    named = model.named_parameters()
    chunks: list[bytes] = [struct.pack("<I", VERSION)]
    _pack_str(chunks, ini, "I")
    chunks.append(struct.pack("<I", len(named)))
    for name, p in named:
        raw = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(raw)))
        chunks.append(raw)
        chunks.append(struct.pack("<B", p.data.ndim))
        chunks.append(struct.pack("<%dI" % p.data.ndim, *p.data.shape))
        chunks.append(np.ascontiguousarray(p.data, dtype="<f4").tobytes())
    if optimizer is not None:
        chunks.append(struct.pack("<B", 1))
        chunks.append(struct.pack("<Q", iteration))
        _pack_str(chunks, json.dumps(rng_state) if rng_state is not None else "null", "I")
        for m, v in zip(optimizer.m, optimizer.v):
            chunks.append(np.ascontiguousarray(m, dtype="<f4").tobytes())
            chunks.append(np.ascontiguousarray(v, dtype="<f4").tobytes())
    else:
        chunks.append(struct.pack("<B", 0))
    payload = b"".join(chunks)
    blob = MAGIC + payload + struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)

    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".osr1.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Reader:
    def __init__(self, buf: bytes):
        self.buf, self.off = buf, 0

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.buf):
            raise CheckpointError("checkpoint ended mid-record (internal inconsistency)")
        out = self.buf[self.off:self.off + n]
        self.off += n
        return out

    def u(self, fmt: str) -> int:
        return struct.unpack("<" + fmt, self.take(struct.calcsize(fmt)))[0]


def checkpoint_load(path) -> dict:
    """Parse a checkpoint into a dict:

    config (network configuration), params ({name: float32 array}),
    iteration, rng (JSON-decoded generator state or None) and
    optimizer ({"m": [...], "v": [...]} or None).
    """
    from .config import config_from_ini

    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if len(blob) < len(MAGIC) + 4 or blob[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
    payload, stored = blob[4:-4], struct.unpack("<I", blob[-4:])[0]
    actual = zlib.crc32(payload) & 0xFFFFFFFF
    if actual != stored:
        raise CheckpointError(
            f"{path}: checksum mismatch (stored {stored:#010x}, computed {actual:#010x}); "
            "file is truncated or corrupted")

    r = _Reader(payload)
    version = r.u("I")
    if version != VERSION:
        raise CheckpointError(
            f"{path}: format version {version} not supported (this build reads version {VERSION})")
    config = config_from_ini(r.take(r.u("I")).decode("utf-8")).network
    n_params = r.u("I")
    params: dict[str, np.ndarray] = {}
    order: list[str] = []
    for _ in range(n_params):
        name = r.take(r.u("H")).decode("utf-8")
        shape = tuple(r.u("I") for _ in range(r.u("B")))
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        arr = np.frombuffer(r.take(4 * count), dtype="<f4").reshape(shape).copy()
        params[name] = arr
        order.append(name)
    out = {"config": config, "params": params, "iteration": 0,
           "rng": None, "optimizer": None}
    if r.u("B"):
        out["iteration"] = r.u("Q")
        rng_json = r.take(r.u("I")).decode("utf-8")
        out["rng"] = json.loads(rng_json)
        m, v = [], []
        for name in order:
            count = params[name].size
            m.append(np.frombuffer(r.take(4 * count), dtype="<f4")
                     .reshape(params[name].shape).copy())
            v.append(np.frombuffer(r.take(4 * count), dtype="<f4")
                     .reshape(params[name].shape).copy())
        out["optimizer"] = {"m": m, "v": v}
    if r.off != len(payload):
        raise CheckpointError(f"{path}: {len(payload) - r.off} trailing bytes after payload")
    return out


def checkpoint_restore(path):
    """Build a model from a checkpoint; returns (model, loaded-dict)."""
    from .network import OmniSR

    loaded = checkpoint_load(path)
    model = OmniSR(loaded["config"])
    named = dict(model.named_parameters())
    missing = set(named) - set(loaded["params"])
    extra = set(loaded["params"]) - set(named)
    if missing or extra:
        raise CheckpointError(
            f"{path}: parameter names do not match the configured network "
            f"(missing {sorted(missing)[:3]}, unexpected {sorted(extra)[:3]})")
    for name, arr in loaded["params"].items():
        p = named[name]
        if p.data.shape != arr.shape:
            raise CheckpointError(
                f"{path}: shape mismatch for {name}: file {arr.shape}, model {p.data.shape}")
        p.data[...] = arr
    return model, loaded
