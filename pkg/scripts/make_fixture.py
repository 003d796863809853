#!/usr/bin/env python3
"""Regenerate the committed golden checkpoint fixture.

The fixture is a deterministic tiny x2 model (seeded initialization, no
training) saved in the OSR1 format.  Tests load it and compare a SHA-256
digest of the parameter bytes, which pins both the initializer and the
on-disk encoding across platforms.  Only rerun this if the checkpoint
format version changes, then update the digest in tests/test_io.py.
"""

import hashlib
from pathlib import Path

from omnisr.blocks import BlockConfig
from omnisr.checkpoint import checkpoint_load, checkpoint_save
from omnisr.network import NetworkConfig, OmniSR

FIXTURE = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "tiny_x2.osr1"


def fixture_config() -> NetworkConfig:
    return NetworkConfig(groups=1, channels=8, scale=2, seed=1234,
                         block=BlockConfig(channels=8, heads=2, window=4))


def param_digest(path) -> str:
    loaded = checkpoint_load(path)
    h = hashlib.sha256()
    for name in sorted(loaded["params"]):
        h.update(name.encode())
        h.update(loaded["params"][name].tobytes())
    return h.hexdigest()


def main():
    FIXTURE.parent.mkdir(parents=True, exist_ok=True)
    model = OmniSR(fixture_config())
    checkpoint_save(FIXTURE, model, model.config)
    print(f"wrote {FIXTURE} ({FIXTURE.stat().st_size} bytes)")
    print(f"param sha256: {param_digest(FIXTURE)}")


if __name__ == "__main__":
    main()
