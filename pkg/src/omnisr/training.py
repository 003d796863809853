"""Training protocol: bicubic degradation pipeline, paired random crops with
flip/rotation augmentation, mean-L1 objective, decoupled-weight-decay Adam and
the step-halving learning-rate schedule.  Everything is driven by one RNG
owned by the sampler, so a (seed, config, dataset) triple fixes the entire
run bit-for-bit."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tensor as T
from .errors import ConfigError, ShapeError
from .network import NetworkConfig, OmniSR
from .tensor import Tape, Tensor


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    total_iters: int = 800_000
    base_lr: float = 5e-4
    lr_halve_every: int = 200_000
    crop: int = 64               # LR patch size
    weight_decay: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    hflip_prob: float = 0.5
    rotation_prob: float = 0.5
    rotations: tuple = (90, 270)
    log_every: int = 100
    checkpoint_every: int = 1000
    dataset_dir: str = ""

    def __post_init__(self):
        if self.base_lr <= 0 or self.batch_size < 1 or self.crop < 1:
            raise ConfigError("batch size, crop and learning rate must be positive")


def lr_at(t: int, config: TrainConfig) -> float:
    """Step schedule: base rate halved after every ``lr_halve_every`` iterations."""
    if t < 0:
        raise ConfigError("iteration must be non-negative")
    return config.base_lr * 0.5 ** (t // config.lr_halve_every)


def bicubic_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Separable Catmull-Rom (a=-0.5) resize of [C,H,W] with edge clamping.

    The kernel is widened by the scale factor on downsample (antialiasing).
    """
    if out_h < 1 or out_w < 1:
        raise ShapeError("resize target dims must be positive")
    c, h, w = img.shape
    rh = T._resize_weights(h, out_h, "cubic", True, img.dtype)
    rw = T._resize_weights(w, out_w, "cubic", True, img.dtype)
    return np.ascontiguousarray(np.matmul(np.matmul(rh, img), rw.T))


class CropDataset:
    """HR image list with cached bicubic LR counterparts for one scale."""

    def __init__(self, images: list[np.ndarray], scale: int, crop: int):
        self.scale, self.crop = scale, crop
        self.hr: list[np.ndarray] = []
        self.lr: list[np.ndarray] = []
        for i, hr in enumerate(images):
            ch, hh, wh = hr.shape
            hh, wh = hh - hh % scale, wh - wh % scale
            if hh < crop * scale or wh < crop * scale:
                warnings.warn(f"image {i} smaller than {crop * scale} px HR crop, skipped")
                continue
            hr = np.ascontiguousarray(hr[:, :hh, :wh])
            self.hr.append(hr)
            self.lr.append(bicubic_resize(hr, hh // scale, wh // scale))
        if not self.hr:
            raise ConfigError("dataset empty after filtering undersized images")

    def __len__(self):
        return len(self.hr)


def _augment(patch: np.ndarray, flip: bool, rot: int) -> np.ndarray:
    if flip:
        patch = patch[:, :, ::-1]
    k = {0: 0, 90: 1, 270: 3}[rot]
    if k:
        patch = np.rot90(patch, k, axes=(1, 2))
    return np.ascontiguousarray(patch)


def sample_batch(dataset: CropDataset, config: TrainConfig,
                 rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Aligned (lr, hr) crop batches with identical augmentation per pair."""
    s, c = dataset.scale, config.crop
    lrs, hrs = [], []
    for _ in range(config.batch_size):
        i = int(rng.integers(len(dataset)))
        lr_img, hr_img = dataset.lr[i], dataset.hr[i]
        y = int(rng.integers(lr_img.shape[1] - c + 1))
        x = int(rng.integers(lr_img.shape[2] - c + 1))
        flip = bool(rng.random() < config.hflip_prob)
        rot = 0
        if config.rotations and rng.random() < config.rotation_prob:
            rot = int(rng.choice(np.asarray(config.rotations)))
        lrs.append(_augment(lr_img[:, y:y + c, x:x + c], flip, rot))
        hrs.append(_augment(hr_img[:, y * s:(y + c) * s, x * s:(x + c) * s], flip, rot))
    return np.stack(lrs), np.stack(hrs)


def l1_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean absolute error; subgradient sign(0) = 0."""
    if pred.shape != target.shape:
        raise ShapeError(f"l1_loss shape mismatch: {pred.shape} vs {target.shape}")
    return T.mean(T.absolute(T.sub(pred, target)))


class AdamWState:
    """Per-parameter first/second moments plus the shared step counter."""

    def __init__(self, params: list[Tensor]):
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]
        self.step = 0


def adamw_step(state: AdamWState, params: list[Tensor], lr: float,
               config: TrainConfig) -> None:
    """One decoupled-weight-decay Adam update in place.

    theta <- theta - lr * (mhat / (sqrt(vhat) + eps) + wd * theta).
    Aborts (before touching any parameter) if a gradient is non-finite.
    """
    grads = []
    for i, p in enumerate(params):
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(
                f"non-finite gradient in parameter {i} at step {state.step}; aborting update")
        grads.append(g)
    state.step += 1
    t = state.step
    b1, b2, eps, wd = config.beta1, config.beta2, config.eps, config.weight_decay
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        mhat = m / c1
        vhat = v / c2
        p.data -= (lr * (mhat / (np.sqrt(vhat) + eps) + wd * p.data)).astype(p.data.dtype)


@dataclass
class TrainResult:
    iterations: int
    final_loss: float
    log: list = field(default_factory=list)  # (iter, lr, loss, wall)


def train_loop(model: OmniSR, dataset: CropDataset, config: TrainConfig,
               log_path: str | Path | None = None,
               checkpoint_path: str | Path | None = None,
               resume_state: dict | None = None,
               start_iter: int = 0, optimizer: AdamWState | None = None,
               rng: np.random.Generator | None = None) -> TrainResult:
    """Run the optimization loop; resumable with bit-identical continuation.

    ``resume_state`` (as produced by checkpoint loading) supplies the RNG
    state; otherwise a fresh generator is seeded from the config.
    """
    from .checkpoint import checkpoint_save  # cycle avoidance

    params = [p for _, p in model.named_parameters()]
    if optimizer is None:
        optimizer = AdamWState(params)
    if rng is None:
        rng = np.random.default_rng(config.seed)
        if resume_state is not None:
            rng.bit_generator.state = resume_state["rng"]

    result = TrainResult(iterations=start_iter, final_loss=float("nan"))
    log_file = open(log_path, "a") if log_path else None
    t_start = time.time()
    try:
        for t in range(start_iter, config.total_iters):
            lr = lr_at(t, config)
            lr_np, hr_np = sample_batch(dataset, config, rng)
            T.zero_grads(params)
            with Tape() as tape:
                pred = model.forward(Tensor(lr_np))
                loss = l1_loss(pred, Tensor(hr_np))
            tape.backward(loss)
            adamw_step(optimizer, params, lr, config)
            result.iterations = t + 1
            result.final_loss = loss.item()
            if (t + 1) % config.log_every == 0 or t + 1 == config.total_iters:
                rec = (t + 1, lr, result.final_loss, time.time() - t_start)
                result.log.append(rec)
                if log_file:
                    log_file.write("iter=%d lr=%.8g loss=%.8g wall=%.2f\n" % rec)
                    log_file.flush()
            if checkpoint_path and ((t + 1) % config.checkpoint_every == 0
                                    or t + 1 == config.total_iters):
                checkpoint_save(checkpoint_path, model, model.config,
                                optimizer=optimizer, iteration=t + 1,
                                rng_state=rng.bit_generator.state)
    finally:
        if log_file:
            log_file.close()
    return result
