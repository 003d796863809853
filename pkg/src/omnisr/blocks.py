"""Composite building blocks: local conv block, windowed attention blocks,
gated feed-forward, squeeze-excitation gating and enhanced spatial attention.

All blocks preserve spatial shape and channel count.  Window divisibility is
handled internally with reflect padding plus a final crop, so callers never
see the padded extent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import attention as A
from . import tensor as T
from .errors import ConfigError
from .module import Module, kaiming_uniform, ones, zeros
from .tensor import Tensor


@dataclass(frozen=True)
class BlockConfig:
    channels: int = 64
    heads: int = 4
    window: int = 8
    ffn_expansion: float = 1.5
    lcb_expansion: float = 2.0
    se_reduction: int = 16
    esa_reduction: int = 4
    lcb_depth: int = 1
    channel_wiring: str = "copy"  # "copy" | "cascade"
    spatial_stage: bool = True
    channel_stage: bool = True
    use_esa: bool = True
    se_in_attention: bool = False  # scalar channel gating replacing the channel stage

    def __post_init__(self):
        if self.channels % self.heads:
            raise ConfigError(f"channels {self.channels} not divisible by heads {self.heads}")
        if self.channels % self.esa_reduction:
            raise ConfigError(f"esa_reduction {self.esa_reduction} must divide channels {self.channels}")
        if min(self.ffn_expansion, self.lcb_expansion) <= 0 or self.lcb_depth < 1:
            raise ConfigError("expansions and lcb_depth must be positive")


class Conv2d(Module):
    def __init__(self, rng: np.random.Generator, cin: int, cout: int, kernel: int,
                 stride: int = 1, padding: int = 0, groups: int = 1, bias: bool = True):
        self.stride, self.padding, self.groups = stride, padding, groups
        self.weight = kaiming_uniform(rng, (cout, cin // groups, kernel, kernel))
        self.bias = zeros((cout,)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return T.conv2d(x, self.weight, self.bias, self.stride, self.padding, self.groups)

    def out_hw(self, h: int, w: int) -> tuple[int, int]:
        k = self.weight.shape[-1]
        oh = (h + 2 * self.padding - k) // self.stride + 1
        ow = (w + 2 * self.padding - k) // self.stride + 1
        return oh, ow

    def macs(self, h: int, w: int, batch: int = 1) -> int:
        cout, cin_g, kh, kw = self.weight.shape
        oh, ow = self.out_hw(h, w)
        return batch * cout * oh * ow * cin_g * kh * kw


class SEAttention(Module):
    """Scalar channel gating from globally pooled features."""

    def __init__(self, rng, channels: int, reduction: int):
        if channels % reduction:
            raise ConfigError(f"SE reduction {reduction} must divide channels {channels}")
        hidden = channels // reduction
        self.reduce = Conv2d(rng, channels, hidden, 1)
        self.expand = Conv2d(rng, hidden, channels, 1)

    def forward(self, x: Tensor) -> Tensor:
        s = T.mean_pool_spatial(x)
        s = T.relu(self.reduce.forward(s))
        s = T.sigmoid(self.expand.forward(s))
        return T.mul(x, s)

    def macs(self, h: int, w: int, batch: int = 1) -> int:
        return self.reduce.macs(1, 1, batch) + self.expand.macs(1, 1, batch)


class LCB(Module):
    """Inverted bottleneck: pointwise expand, depthwise 3x3, SE gate,
    pointwise project; residual add of the input."""

    def __init__(self, rng, cfg: BlockConfig):
        c = cfg.channels
        hidden = int(round(c * cfg.lcb_expansion))
        self.units = []
        for _ in range(cfg.lcb_depth):
            self.units.append(Conv2d(rng, c, hidden, 1))
            self.units.append(Conv2d(rng, hidden, hidden, 3, padding=1, groups=hidden))
            self.units.append(SEAttention(rng, hidden, cfg.se_reduction))
            self.units.append(Conv2d(rng, hidden, c, 1))

    def forward(self, x: Tensor) -> Tensor:
        y = x
        for i in range(0, len(self.units), 4):
            pw1, dw, se, pw2 = self.units[i:i + 4]
            z = T.gelu(pw1.forward(y))
            z = T.gelu(dw.forward(z))
            z = se.forward(z)
            y = T.add(y, pw2.forward(z))
        return y

    def macs(self, h: int, w: int, batch: int = 1) -> int:
        total = 0
        for i in range(0, len(self.units), 4):
            pw1, dw, se, pw2 = self.units[i:i + 4]
            total += pw1.macs(h, w, batch) + dw.macs(h, w, batch)
            total += se.macs(h, w, batch) + pw2.macs(h, w, batch)
        return total


class GDFN(Module):
    """Gated feed-forward: two expand+depthwise branches, GELU gate, project."""

    def __init__(self, rng, cfg: BlockConfig):
        c = cfg.channels
        hidden = int(round(c * cfg.ffn_expansion))
        self.gate_pw = Conv2d(rng, c, hidden, 1)
        self.gate_dw = Conv2d(rng, hidden, hidden, 3, padding=1, groups=hidden)
        self.value_pw = Conv2d(rng, c, hidden, 1)
        self.value_dw = Conv2d(rng, hidden, hidden, 3, padding=1, groups=hidden)
        self.project = Conv2d(rng, hidden, c, 1)

    def forward(self, x: Tensor) -> Tensor:
        g = T.gelu(self.gate_dw.forward(self.gate_pw.forward(x)))
        v = self.value_dw.forward(self.value_pw.forward(x))
        return self.project.forward(T.mul(g, v))

    def macs(self, h: int, w: int, batch: int = 1) -> int:
        return sum(m.macs(h, w, batch) for m in
                   (self.gate_pw, self.gate_dw, self.value_pw, self.value_dw, self.project))


class ESA(Module):
    """Sigmoid spatial mask from a downsample-process-upsample path.

    Geometry follows the established lightweight-SR convention: 7x7 max pool
    with stride 3 after a stride-2 conv, a group of three 3x3 convs, bilinear
    resize back.  Inputs too small for the pooling window fall back to global
    max pooling.
    """

    POOL, POOL_STRIDE = 7, 3

    def __init__(self, rng, cfg: BlockConfig):
        c = cfg.channels
        f = c // cfg.esa_reduction
        self.reduce = Conv2d(rng, c, f, 1)
        self.down = Conv2d(rng, f, f, 3, stride=2)
        self.group = [Conv2d(rng, f, f, 3, padding=1) for _ in range(3)]
        self.expand = Conv2d(rng, f, c, 1)

    def _pool_hw(self, h: int, w: int):
        h2, w2 = self.down.out_hw(h, w)
        if h2 < self.POOL or w2 < self.POOL:
            return h2, w2, 1, 1
        ph = (h2 - self.POOL) // self.POOL_STRIDE + 1
        pw = (w2 - self.POOL) // self.POOL_STRIDE + 1
        return h2, w2, ph, pw

    def forward(self, x: Tensor) -> Tensor:
        h, w = x.shape[-2:]
        c1 = self.reduce.forward(x)
        v = self.down.forward(c1)
        if v.shape[-2] < self.POOL or v.shape[-1] < self.POOL:
            v = T.global_max_pool(v)
        else:
            v = T.max_pool2d(v, self.POOL, self.POOL_STRIDE)
        v = T.relu(self.group[0].forward(v))
        v = T.relu(self.group[1].forward(v))
        v = self.group[2].forward(v)
        up = T.interp_resize(v, h, w, kind="linear", antialias=False)
        mask = T.sigmoid(self.expand.forward(T.add(up, c1)))
        return T.mul(x, mask)

    def macs(self, h: int, w: int, batch: int = 1) -> int:
        _, _, ph, pw = self._pool_hw(h, w)
        total = self.reduce.macs(h, w, batch) + self.down.macs(h, w, batch)
        total += sum(g.macs(ph, pw, batch) for g in self.group)
        total += self.expand.macs(h, w, batch)
        return total


class OSABlock(Module):
    """Pre-norm transformer block around the cascaded attention operator:
    y = x + Attn(LN(x)) on windows, then y = y + GDFN(LN(y))."""

    def __init__(self, rng, cfg: BlockConfig, mode: str):
        c = cfg.channels
        self.window = A.WindowSpec(mode, cfg.window)
        self.norm1_g, self.norm1_b = ones((c,)), zeros((c,))
        self.norm2_g, self.norm2_b = ones((c,)), zeros((c,))
        self.attn = A.AttentionParams(c, cfg.heads, rng, channel_wiring=cfg.channel_wiring,
                                      spatial_stage=cfg.spatial_stage,
                                      channel_stage=cfg.channel_stage and not cfg.se_in_attention)
        self.se_gate = SEAttention(rng, c, cfg.se_reduction) if cfg.se_in_attention else None
        self.ffn = GDFN(rng, cfg)

    @staticmethod
    def padded_hw(h: int, w: int, window: int) -> tuple[int, int]:
        return h + (-h) % window, w + (-w) % window

    def attend(self, x: Tensor) -> Tensor:
        """Windowed attention residual only (no feed-forward): NCHW -> NCHW."""
        b, c, h, w = x.shape
        hp, wp = self.padded_hw(h, w, self.window.size)
        xp = T.pad2d(x, (0, hp - h), (0, wp - w), "reflect") if (hp, wp) != (h, w) else x
        nhwc = T.transpose(xp, (0, 2, 3, 1))
        win = A.partition(T.layernorm(nhwc, self.norm1_g, self.norm1_b), self.window)
        y = A.omni_self_attention(win, self.attn)
        y = T.add(nhwc, A.merge(y, hp, wp, self.window))
        y = T.transpose(y, (0, 3, 1, 2))
        if self.se_gate is not None:
            y = self.se_gate.forward(y)
        if (hp, wp) != (h, w):
            y = T.crop2d(y, 0, h, 0, w)
        return y

    def forward(self, x: Tensor) -> Tensor:
        y = self.attend(x)
        nhwc = T.transpose(y, (0, 2, 3, 1))
        z = T.transpose(T.layernorm(nhwc, self.norm2_g, self.norm2_b), (0, 3, 1, 2))
        return T.add(y, self.ffn.forward(z))

    def macs(self, h: int, w: int, batch: int = 1) -> dict:
        hp, wp = self.padded_hw(h, w, self.window.size)
        tokens = self.window.size ** 2
        windows = batch * hp * wp // tokens
        counts = A.attention_macs(windows, tokens, self.attn.channels, self.attn.heads,
                                  self.attn.spatial_stage, self.attn.channel_stage)
        conv = self.ffn.macs(h, w, batch)
        if self.se_gate is not None:
            conv += self.se_gate.macs(h, w, batch)
        counts["conv"] = counts.get("conv", 0) + conv
        return counts


class OSAG(Module):
    """One aggregation group: local conv block, meso window block, global grid
    block, group residual, trailing 3x3 conv and spatial-mask refinement."""

    def __init__(self, rng, cfg: BlockConfig):
        c = cfg.channels
        self.lcb = LCB(rng, cfg)
        self.meso = OSABlock(rng, cfg, "meso")
        self.glob = OSABlock(rng, cfg, "global")
        self.conv = Conv2d(rng, c, c, 3, padding=1)
        self.esa = ESA(rng, cfg) if cfg.use_esa else None

    def forward(self, x: Tensor) -> Tensor:
        res = self.glob.forward(self.meso.forward(self.lcb.forward(x)))
        y = self.conv.forward(T.add(res, x))
        if self.esa is not None:
            y = self.esa.forward(y)
        return y

    def macs(self, h: int, w: int, batch: int = 1) -> dict:
        counts: dict[str, int] = {"conv": self.lcb.macs(h, w, batch) + self.conv.macs(h, w, batch)}
        if self.esa is not None:
            counts["conv"] += self.esa.macs(h, w, batch)
        for block in (self.meso, self.glob):
            for k, v in block.macs(h, w, batch).items():
                counts[k] = counts.get(k, 0) + v
        return counts
