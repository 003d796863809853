"""Measurement protocol: PSNR/SSIM on the luma channel of YCbCr, the
normalized feature-entropy diagnostic, benchmark-directory evaluation with
tiled inference, and the reduced attention variants used for ablations."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, ShapeError
from .network import NetworkConfig, OmniSR
from .tensor import Tensor
from .training import bicubic_resize

# ITU-R BT.601 studio-swing luma coefficients (inputs in [0,1])
_Y_COEF = np.array([65.481, 128.553, 24.966]) / 255.0
_Y_OFFSET = 16.0 / 255.0


def rgb_to_y(img: np.ndarray) -> np.ndarray:
    """[3,H,W] RGB in [0,1] -> [1,H,W] luma in [16/255, 235/255]."""
    if img.ndim != 3 or img.shape[0] != 3:
        raise ShapeError(f"expected [3,H,W], got {img.shape}")
    y = np.tensordot(_Y_COEF, img, axes=(0, 0)) + _Y_OFFSET
    return y[None].astype(img.dtype)


def _shaved_y(a: np.ndarray, b: np.ndarray, shave: int):
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    ya = rgb_to_y(a)[0].astype(np.float64)
    yb = rgb_to_y(b)[0].astype(np.float64)
    if shave:
        ya = ya[shave:-shave, shave:-shave]
        yb = yb[shave:-shave, shave:-shave]
    return ya, yb


def psnr(a: np.ndarray, b: np.ndarray, shave: int = 0) -> float:
    """Peak signal-to-noise ratio in dB over shaved luma; +inf for identical inputs."""
    ya, yb = _shaved_y(a, b, shave)
    mse = float(np.mean((ya - yb) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(r * r) / (2 * sigma * sigma))
    return g / g.sum()


def _filter_valid(img: np.ndarray, win: np.ndarray) -> np.ndarray:
    """Separable filtering keeping only fully-covered (valid) positions."""
    k = win.size
    v = np.lib.stride_tricks.sliding_window_view(img, k, axis=0)
    v = np.tensordot(v, win, axes=(-1, 0))
    v = np.lib.stride_tricks.sliding_window_view(v, k, axis=1)
    return np.tensordot(v, win, axes=(-1, 0))


def ssim(a: np.ndarray, b: np.ndarray, shave: int = 0) -> float:
    """Single-scale SSIM on shaved luma: 11x11 Gaussian window (sigma 1.5),
    C1=0.01^2, C2=0.03^2 on unit dynamic range, mean over valid positions."""
    ya, yb = _shaved_y(a, b, shave)
    win = _gaussian_window()
    c1, c2 = 0.01 ** 2, 0.03 ** 2
    mu_a = _filter_valid(ya, win)
    mu_b = _filter_valid(yb, win)
    saa = _filter_valid(ya * ya, win) - mu_a * mu_a
    sbb = _filter_valid(yb * yb, win) - mu_b * mu_b
    sab = _filter_valid(ya * yb, win) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * sab + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (saa + sbb + c2)
    return float(np.mean(num / den))


def feature_entropy(features: np.ndarray, bins: int = 64) -> float:
    """Normalized Shannon entropy of per-channel activation histograms.

    features: [N, C].  Each channel is histogrammed into ``bins`` uniform
    bins over its observed min-max range; entropies (normalized by log bins)
    are averaged across channels.  Constant channels contribute zero.
    """
    if features.ndim != 2 or features.shape[0] < 2:
        raise ShapeError("feature_entropy expects [N>=2, C]")
    total = 0.0
    n, c = features.shape
    for ch in range(c):
        col = features[:, ch]
        lo, hi = float(col.min()), float(col.max())
        if hi <= lo:
            continue  # constant feature: zero entropy
        hist, _ = np.histogram(col, bins=bins, range=(lo, hi))
        p = hist[hist > 0] / n
        total += float(-(p * np.log(p)).sum() / math.log(bins))
    return total / c


def infer_tiled(model: OmniSR, lr: np.ndarray, tile: int = 192, overlap: int = 16) -> np.ndarray:
    """Forward pass on [3,H,W], tiled with overlap-averaged seams."""
    s = model.config.scale
    _, h, w = lr.shape
    if h <= tile and w <= tile:
        return model.forward(Tensor(lr[None])).data[0]
    out = np.zeros((lr.shape[0], h * s, w * s), dtype=np.float32)
    weight = np.zeros((1, h * s, w * s), dtype=np.float32)
    step = tile - overlap
    ys = list(range(0, max(h - overlap, 1), step))
    xs = list(range(0, max(w - overlap, 1), step))
    for y0 in ys:
        for x0 in xs:
            y1, x1 = min(y0 + tile, h), min(x0 + tile, w)
            y0c, x0c = max(0, y1 - tile), max(0, x1 - tile)
            pred = model.forward(Tensor(lr[None, :, y0c:y1, x0c:x1])).data[0]
            out[:, y0c * s:y1 * s, x0c * s:x1 * s] += pred
            weight[:, y0c * s:y1 * s, x0c * s:x1 * s] += 1.0
    return out / weight


@dataclass
class EvalReport:
    """Per-image metrics plus arithmetic-mean aggregates."""

    scale: int
    fingerprint: str = ""
    records: list = field(default_factory=list)  # (name, psnr, ssim)
    failures: list = field(default_factory=list)
    runtime: float = 0.0

    @property
    def mean_psnr(self) -> float:
        return float(np.mean([r[1] for r in self.records])) if self.records else math.nan

    @property
    def mean_ssim(self) -> float:
        return float(np.mean([r[2] for r in self.records])) if self.records else math.nan

    def render(self) -> str:
        """Stable diffable text: one record per image plus aggregate footer."""
        lines = [f"# scale={self.scale} config={self.fingerprint}"]
        for name, p, s in sorted(self.records):
            lines.append(f"{name}\tpsnr={p:.4f}\tssim={s:.6f}")
        for name, err in sorted(self.failures):
            lines.append(f"{name}\tFAILED\t{err}")
        lines.append(f"aggregate\tpsnr={self.mean_psnr:.4f}\tssim={self.mean_ssim:.6f}"
                     f"\timages={len(self.records)}\truntime={self.runtime:.2f}s")
        return "\n".join(lines) + "\n"


def run_benchmark(forward, dataset_dir: str | Path, scale: int,
                  shave: int | None = None, tile: int = 192, overlap: int = 16,
                  fingerprint: str = "") -> EvalReport:
    """Evaluate over a directory of HR PNGs: generate bicubic LR on the fly,
    super-resolve, and aggregate shaved-luma PSNR/SSIM.

    ``forward(lr, hr)`` must return an HR-shaped [3,h*scale,w*scale] array;
    model and baseline adapters ignore the ground-truth argument, while the
    passthrough oracle returns it directly.
    Unreadable images are recorded as failures and the run continues.
    """
    from .pngio import png_read

    shave = scale if shave is None else shave
    report = EvalReport(scale=scale, fingerprint=fingerprint)
    t0 = time.time()
    paths = sorted(Path(dataset_dir).glob("*.png"))
    if not paths:
        raise ConfigError(f"no PNG files in {dataset_dir}")
    for path in paths:
        try:
            hr = png_read(path)
            ch, h, w = hr.shape
            hr = hr[:, :h - h % scale, :w - w % scale]
            lr = bicubic_resize(hr, hr.shape[1] // scale, hr.shape[2] // scale)
            pred = np.clip(forward(lr, hr), 0.0, 1.0).astype(np.float32)
            report.records.append((path.name, psnr(hr, pred, shave), ssim(hr, pred, shave)))
        except Exception as exc:  # noqa: BLE001 - per-image failures must not stop the run
            report.failures.append((path.name, f"{type(exc).__name__}: {exc}"))
    report.runtime = time.time() - t0
    return report


def model_forward(model: OmniSR, tile: int = 192, overlap: int = 16):
    """Adapter turning a network into a benchmark ``forward`` callable."""
    return lambda lr, hr: infer_tiled(model, lr.astype(np.float32), tile, overlap)


def bicubic_forward(scale: int):
    """Bicubic-upsampling baseline with the same interface as a model."""
    return lambda lr, hr: bicubic_resize(lr, lr.shape[1] * scale, lr.shape[2] * scale)


def passthrough_forward():
    """Ground-truth oracle: returns the HR reference (PSNR +inf, SSIM 1)."""
    return lambda lr, hr: hr


VARIANTS = ("omni", "spatial_only", "channel_only", "se_hybrid")


def ablation_variant(kind: str, config: NetworkConfig) -> OmniSR:
    """Reduced-attention network factories for the ablation grid.

    spatial_only drops the channel stage, channel_only drops the spatial
    stage, se_hybrid replaces the channel stage with scalar SE gating; the
    omni variant is the unmodified network.  Parameter budgets stay within a
    few percent since the removed pieces are almost parameter-free.
    """
    if kind not in VARIANTS:
        raise ConfigError(f"unknown ablation variant {kind!r}; pick from {VARIANTS}")
    block = config.block
    if kind == "spatial_only":
        block = replace(block, channel_stage=False)
    elif kind == "channel_only":
        block = replace(block, spatial_stage=False)
    elif kind == "se_hybrid":
        block = replace(block, se_in_attention=True)
    return OmniSR(replace(config, block=block))
