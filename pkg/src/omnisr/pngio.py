"""8-bit PNG reading/writing as float [3,H,W] arrays in [0,1].

Grayscale inputs are replicated to three channels, alpha is dropped, and
16-bit files are down-converted with a warning.  Writing quantizes with
round-half-away-from-zero after clamping, and is atomic (temp file plus
rename), so partial outputs never appear."""

from __future__ import annotations

import os
import tempfile
import warnings
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError


def png_read(path: str | Path) -> np.ndarray:
    path = Path(path)
    try:
        with Image.open(path) as im:
            mode = im.mode
            if mode in ("I", "I;16", "I;16B", "I;16L"):
                warnings.warn(f"{path}: 16-bit PNG down-converted to 8-bit")
                arr = np.asarray(im, dtype=np.float64)
                arr = arr / 65535.0 if arr.max() > 255 else arr / 255.0
                arr = np.clip(arr, 0.0, 1.0)
                if arr.ndim == 2:
                    arr = arr[..., None].repeat(3, axis=-1)
            else:
                im = im.convert("RGB")
                arr = np.asarray(im, dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise DecodeError(f"cannot decode {path}: {exc}") from exc
    if arr.ndim == 2:
        arr = arr[..., None].repeat(3, axis=-1)
    return np.ascontiguousarray(arr.transpose(2, 0, 1).astype(np.float32))


def to_bytes(img: np.ndarray) -> np.ndarray:
    """Float [0,1] -> uint8 with round-half-away-from-zero."""
    x = np.clip(img, 0.0, 1.0) * 255.0
    return np.floor(x + 0.5).astype(np.uint8)  # values >= 0: half-up == half-away


def png_write(path: str | Path, img: np.ndarray) -> None:
    if img.ndim != 3 or img.shape[0] != 3:
        raise DecodeError(f"png_write expects [3,H,W], got {img.shape}")
    data = to_bytes(img).transpose(1, 2, 0)
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".png.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            Image.fromarray(data, "RGB").save(fh, format="PNG")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
