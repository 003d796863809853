"""Cascaded spatial+channel self-attention and the two window partitions.

The operator first runs windowed spatial attention, then rotates the token
and channel axes and runs channel attention on the result, so information is
mixed along both axes in one pass.  Two partition strategies feed it:

* meso: non-overlapping contiguous PxP blocks (mid-scale interaction);
* global: a GxG grid where each window gathers one sample per grid cell at a
  matching intra-cell offset (dilated sampling), giving global reach at
  window-attention cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ConfigError, ShapeError
from .module import Module, trunc_normal, zeros
from .tensor import Tensor


@dataclass(frozen=True)
class WindowSpec:
    """Partition mode and extent. ``size`` is P (meso) or G (global)."""

    mode: str  # "meso" | "global"
    size: int

    def __post_init__(self):
        if self.mode not in ("meso", "global"):
            raise ConfigError(f"unknown window mode {self.mode!r}")
        if self.size < 1:
            raise ConfigError("window size must be positive")


def _check_divisible(h: int, w: int, s: int, what: str) -> None:
    if h % s or w % s:
        raise ShapeError(f"{what}: spatial extent {h}x{w} not divisible by {s}")


def meso_partition(x: Tensor, p: int) -> Tensor:
    """[B,H,W,C] -> [B*HW/P^2, P^2, C]; each window is one contiguous PxP block."""
    b, h, w, c = x.shape
    _check_divisible(h, w, p, "meso_partition")
    x = T.reshape(x, (b, h // p, p, w // p, p, c))
    x = T.transpose(x, (0, 1, 3, 2, 4, 5))
    return T.reshape(x, (b * (h // p) * (w // p), p * p, c))


def meso_merge(x: Tensor, h: int, w: int, p: int) -> Tensor:
    """Inverse of :func:`meso_partition`; bit-exact round trip."""
    nw, pp, c = x.shape
    b = nw * p * p // (h * w)
    x = T.reshape(x, (b, h // p, w // p, p, p, c))
    x = T.transpose(x, (0, 1, 3, 2, 4, 5))
    return T.reshape(x, (b, h, w, c))


def global_partition(x: Tensor, g: int) -> Tensor:
    """[B,H,W,C] -> [B*HW/G^2, G^2, C] with dilated (one sample per cell) windows.

    Splitting each spatial axis into G cells of size H/G, window (a, b)
    collects the pixel at intra-cell offset (a, b) from every cell, i.e. a
    stride-(H/G, W/G) subgrid.
    """
    b, h, w, c = x.shape
    _check_divisible(h, w, g, "global_partition")
    ch, cw = h // g, w // g
    x = T.reshape(x, (b, g, ch, g, cw, c))
    x = T.transpose(x, (0, 2, 4, 1, 3, 5))  # [B, ch, cw, G, G, C]
    return T.reshape(x, (b * ch * cw, g * g, c))


def global_merge(x: Tensor, h: int, w: int, g: int) -> Tensor:
    """Inverse of :func:`global_partition`; bit-exact round trip."""
    nw, gg, c = x.shape
    ch, cw = h // g, w // g
    b = nw // (ch * cw)
    x = T.reshape(x, (b, ch, cw, g, g, c))
    x = T.transpose(x, (0, 3, 1, 4, 2, 5))
    return T.reshape(x, (b, h, w, c))


def partition(x: Tensor, window: WindowSpec) -> Tensor:
    if window.mode == "meso":
        return meso_partition(x, window.size)
    return global_partition(x, window.size)


def merge(x: Tensor, h: int, w: int, window: WindowSpec) -> Tensor:
    if window.mode == "meso":
        return meso_merge(x, h, w, window.size)
    return global_merge(x, h, w, window.size)


def _split_heads(x: Tensor, heads: int) -> Tensor:
    """[B,N,C] -> [B,heads,N,C/heads] (head split on the channel axis)."""
    b, n, c = x.shape
    if c % heads:
        raise ShapeError(f"channels {c} not divisible by {heads} heads")
    x = T.reshape(x, (b, n, heads, c // heads))
    return T.transpose(x, (0, 2, 1, 3))


def _join_heads(x: Tensor) -> Tensor:
    b, heads, n, ch = x.shape
    x = T.transpose(x, (0, 2, 1, 3))
    return T.reshape(x, (b, n, heads * ch))


def spatial_attention(q: Tensor, k: Tensor, v: Tensor, heads: int) -> Tensor:
    """Multi-head scaled dot-product attention over tokens: [B,N,C] -> [B,N,C].

    Per head the attention map is NxN; logits are scaled by 1/sqrt(C/heads).
    """
    qh, kh, vh = (_split_heads(t, heads) for t in (q, k, v))
    d = qh.shape[-1]
    logits = T.matmul(T.scale(qh, 1.0 / math.sqrt(d)),
                      T.transpose(kh, (0, 1, 3, 2)), mac_tag="attention")
    attn = T.softmax_lastdim(logits)
    out = T.matmul(attn, vh, mac_tag="attention")
    return _join_heads(out)


def _l2_normalize_lastdim(x: Tensor, eps: float = 1e-8) -> Tensor:
    n2 = T.sum_(T.mul(x, x), axis=-1, keepdims=True)
    return T.div(x, T.sqrt(T.add(n2, eps)))


def channel_attention(q: Tensor, k: Tensor, v: Tensor, heads: int, tau: Tensor) -> Tensor:
    """Covariance-style channel attention: rotate to channel-major, attend, rotate back.

    q, k, v: [B,N,C].  Per head the map is (C/heads)x(C/heads), built as
    softmax(Kc Qc^T / tau) with L2-normalized q/k channel rows; tau holds one
    strictly-positive temperature per head (shape [heads, 1, 1]).
    """
    b, n, c = q.shape
    qc = _split_heads(q, heads)  # [B,h,N,Ch]
    kc = _split_heads(k, heads)
    vc = _split_heads(v, heads)
    # rotate: channel-major [B,h,Ch,N]
    qc, kc, vc = (T.transpose(t, (0, 1, 3, 2)) for t in (qc, kc, vc))
    qn = _l2_normalize_lastdim(qc)
    kn = _l2_normalize_lastdim(kc)
    logits = T.div(T.matmul(kn, T.transpose(qn, (0, 1, 3, 2)), mac_tag="attention"), tau)
    attn = T.softmax_lastdim(logits)
    yc = T.matmul(attn, vc, mac_tag="attention")  # [B,h,Ch,N]
    # inverse rotation back to token-major
    return _join_heads(T.transpose(yc, (0, 1, 3, 2)))


class AttentionParams(Module):
    """Projections and per-head temperature for the cascaded operator.

    The temperature is stored as a free exponent (tau = exp(log_tau)) so it
    stays strictly positive; initialized to one.
    """

    def __init__(self, channels: int, heads: int, rng: np.random.Generator,
                 channel_wiring: str = "copy", spatial_stage: bool = True,
                 channel_stage: bool = True):
        if channels % heads:
            raise ConfigError(f"channels {channels} not divisible by heads {heads}")
        if channel_wiring not in ("copy", "cascade"):
            raise ConfigError(f"unknown channel wiring {channel_wiring!r}")
        self.channels = channels
        self.heads = heads
        self.channel_wiring = channel_wiring
        self.spatial_stage = spatial_stage
        self.channel_stage = channel_stage
        self.wq = trunc_normal(rng, (channels, channels))
        self.wk = trunc_normal(rng, (channels, channels))
        self.wv = trunc_normal(rng, (channels, channels))
        self.wo = trunc_normal(rng, (channels, channels))
        self.bq = zeros((channels,))
        self.bk = zeros((channels,))
        self.bv = zeros((channels,))
        self.bo = zeros((channels,))
        self.log_tau = zeros((heads, 1, 1))

    def tau(self) -> Tensor:
        return T.exp(self.log_tau)


def omni_self_attention(x: Tensor, params: AttentionParams) -> Tensor:
    """Cascaded attention on pre-partitioned windows: [B,N,C] -> [B,N,C].

    Projects q/k/v, runs the spatial stage, then feeds the channel stage with
    the spatial output as values (q/k reused from the spatial projections by
    default, or re-derived from the spatial output under ``cascade`` wiring),
    and applies one shared output projection.
    """
    p = params
    q = T.add(T.matmul(x, p.wq), p.bq)
    k = T.add(T.matmul(x, p.wk), p.bk)
    v = T.add(T.matmul(x, p.wv), p.bv)
    if p.spatial_stage:
        ys = spatial_attention(q, k, v, p.heads)
    else:
        ys = v
    if p.channel_stage:
        if p.channel_wiring == "copy":
            qc, kc = q, k
        else:  # cascade: everything re-derived from the spatial output
            qc, kc = ys, ys
        y = channel_attention(qc, kc, ys, p.heads, p.tau())
    else:
        y = ys
    return T.add(T.matmul(y, p.wo), p.bo)


def attention_macs(batch_windows: int, tokens: int, channels: int, heads: int,
                   spatial_stage: bool = True, channel_stage: bool = True) -> dict:
    """Analytic MAC counts for one operator call, mirroring the kernels exactly."""
    b, n, c = batch_windows, tokens, channels
    ch = c // heads
    linear = 4 * b * n * c * c  # q,k,v,out projections
    attn = 0
    if spatial_stage:
        attn += 2 * b * heads * n * n * ch  # logits + value mix
    if channel_stage:
        attn += 2 * b * heads * ch * ch * n
    return {"linear": linear, "attention": attn}
