#!/usr/bin/env python3
"""Generate a small synthetic PNG dataset for demos and smoke tests.

Images mix smooth gradients, sinusoidal texture and hard-edged rectangles
so that super-resolution has both easy and hard content to learn from.

Usage: python3 scripts/make_demo_dataset.py OUTDIR [--count 16] [--size 96] [--seed 0]
"""

import argparse
from pathlib import Path

import numpy as np

from omnisr.pngio import png_write


def synth_image(rng: np.random.Generator, size: int) -> np.ndarray:
    yy, xx = np.meshgrid(np.linspace(0, 1, size), np.linspace(0, 1, size), indexing="ij")
    img = np.zeros((3, size, size))
    for c in range(3):
        a, b = rng.uniform(-1, 1, 2)
        fx, fy = rng.uniform(2, 9, 2)
        phase = rng.uniform(0, 2 * np.pi)
        img[c] = 0.5 + 0.25 * (a * xx + b * yy) \
            + 0.2 * np.sin(2 * np.pi * (fx * xx + fy * yy) + phase)
    for _ in range(rng.integers(2, 6)):
        y0, x0 = rng.integers(0, size - 8, 2)
        h, w = rng.integers(6, size // 3, 2)
        img[:, y0:y0 + h, x0:x0 + w] = rng.uniform(0, 1, (3, 1, 1))
    return np.clip(img, 0, 1).astype(np.float32)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("outdir")
    ap.add_argument("--count", type=int, default=16)
    ap.add_argument("--size", type=int, default=96)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    for i in range(args.count):
        png_write(outdir / f"demo_{i:03d}.png", synth_image(rng, args.size))
    print(f"wrote {args.count} {args.size}x{args.size} images to {outdir}")


if __name__ == "__main__":
    main()
