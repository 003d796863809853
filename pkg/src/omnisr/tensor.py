"""Dense float tensors with tape-based reverse-mode automatic differentiation.

Forward kernels are plain numpy and fully deterministic.  When a ``Tape`` is
active, every operation whose inputs are tracked records a backward rule on
the tape; ``Tape.backward`` replays the rules in reverse order and accumulates
gradients additively, so the accumulation order is fixed by the tape order.

Without an active tape all operations are pure functions and safe to call
concurrently.  A tape and the tensors recorded on it belong to one thread.
"""

from __future__ import annotations

import math
import threading

import numpy as np

from .errors import ShapeError, UsageError

_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_A = 0.044715


class MacCounter:
    """Instrumented multiply-accumulate counter, keyed by op category.

    Enabled via ``with MacCounter() as mc: ...``; only matmul and conv2d
    report counts (``linear`` / ``attention`` / ``conv``).  Interpolation,
    pooling, normalization and element-wise work are not counted; this is the
    counting convention used throughout the analytic cost model as well.
    """

    _active: "MacCounter | None" = None

    def __init__(self):
        self.macs: dict[str, int] = {}

    def __enter__(self):
        if MacCounter._active is not None:
            raise UsageError("nested MacCounter not supported")
        MacCounter._active = self
        return self

    def __exit__(self, *exc):
        MacCounter._active = None
        return False

    def total(self) -> int:
        return sum(self.macs.values())

    @classmethod
    def add(cls, category: str, n: int) -> None:
        mc = cls._active
        if mc is not None and category is not None:
            mc.macs[category] = mc.macs.get(category, 0) + int(n)


class Tape:
    """Ordered record of differentiable operations for one backward pass."""

    _local = threading.local()

    def __init__(self):
        self._records: list = []  # (out, inputs, rule)

    @classmethod
    def current(cls) -> "Tape | None":
        stack = getattr(cls._local, "stack", None)
        return stack[-1] if stack else None

    def __enter__(self):
        if not hasattr(Tape._local, "stack") or Tape._local.stack is None:
            Tape._local.stack = []
        Tape._local.stack.append(self)
        return self

    def __exit__(self, *exc):
        Tape._local.stack.pop()
        return False

    def backward(self, loss: "Tensor") -> None:
        """Populate ``grad`` on every tracked tensor reachable from ``loss``."""
        if loss.data.size != 1:
            raise UsageError(f"backward expects a scalar loss, got shape {loss.shape}")
        loss.grad = np.ones_like(loss.data)
        for out, inputs, rule in reversed(self._records):
            if out.grad is None:
                continue
            grads = rule(out.grad)
            for t, g in zip(inputs, grads):
                if g is None or not t._tracked:
                    continue
                if t.grad is None:
                    t.grad = g.astype(t.data.dtype, copy=False)
                else:
                    t.grad = t.grad + g.astype(t.data.dtype, copy=False)


class Tensor:
    """Dense N-d float array, optionally participating in gradient taping."""

    __slots__ = ("data", "grad", "requires_grad", "_tracked")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data)
        if dtype is None:
            dtype = arr.dtype if arr.dtype in (np.float32, np.float64) else np.float32
        self.data = np.ascontiguousarray(arr, dtype=dtype)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._tracked = self.requires_grad

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    # operator sugar for the common arithmetic ops
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return sub(self, other)

    def __neg__(self):
        return scale(self, -1.0)

    def __truediv__(self, other):
        return div(self, other)


def _wrap(x, like: Tensor) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=like.data.dtype))


def _record(out: Tensor, inputs, rule) -> None:
    tape = Tape.current()
    if tape is None or not any(t._tracked for t in inputs):
        return
    out._tracked = True
    tape._records.append((out, inputs, rule))


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``g`` down to ``shape`` (inverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# element-wise arithmetic


def add(a: Tensor, b) -> Tensor:
    a, b = a, _wrap(b, a)
    out = Tensor(a.data + b.data)
    _record(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))
    return out


def sub(a: Tensor, b) -> Tensor:
    a, b = a, _wrap(b, a)
    out = Tensor(a.data - b.data)
    _record(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))
    return out


def mul(a: Tensor, b) -> Tensor:
    a, b = a, _wrap(b, a)
    out = Tensor(a.data * b.data)
    _record(out, (a, b), lambda g: (_unbroadcast(g * b.data, a.shape),
                                    _unbroadcast(g * a.data, b.shape)))
    return out


def div(a: Tensor, b) -> Tensor:
    a, b = a, _wrap(b, a)
    out = Tensor(a.data / b.data)
    _record(out, (a, b), lambda g: (_unbroadcast(g / b.data, a.shape),
                                    _unbroadcast(-g * a.data / (b.data * b.data), b.shape)))
    return out


def scale(a: Tensor, s: float) -> Tensor:
    out = Tensor(a.data * a.data.dtype.type(s))
    _record(out, (a,), lambda g: (g * a.data.dtype.type(s),))
    return out


def exp(a: Tensor) -> Tensor:
    y = np.exp(a.data)
    out = Tensor(y)
    _record(out, (a,), lambda g: (g * y,))
    return out


def sqrt(a: Tensor) -> Tensor:
    y = np.sqrt(a.data)
    out = Tensor(y)
    _record(out, (a,), lambda g: (g * (0.5 / y),))
    return out


def absolute(a: Tensor) -> Tensor:
    out = Tensor(np.abs(a.data))
    # subgradient with sign(0) = 0
    _record(out, (a,), lambda g: (g * np.sign(a.data),))
    return out


def relu(a: Tensor) -> Tensor:
    out = Tensor(np.maximum(a.data, 0))
    _record(out, (a,), lambda g: (g * (a.data > 0),))
    return out


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    e = np.exp(-np.abs(x))  # stable: argument always <= 0
    y = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    out = Tensor(y)
    _record(out, (a,), lambda g: (g * y * (1.0 - y),))
    return out


def gelu(a: Tensor) -> Tensor:
    """GELU, tanh approximation (deterministic across platforms)."""
    x = a.data
    u = _GELU_C * (x + _GELU_A * x * x * x)
    t = np.tanh(u)
    out = Tensor(0.5 * x * (1.0 + t))

    def rule(g):
        du = _GELU_C * (1.0 + 3.0 * _GELU_A * x * x)
        return (g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du),)

    _record(out, (a,), rule)
    return out


# ---------------------------------------------------------------------------
# reductions and shape manipulation


def sum_(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = Tensor(a.data.sum(axis=axis, keepdims=keepdims))

    def rule(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        axes = axis if isinstance(axis, tuple) else (axis,)
        if not keepdims:
            for ax in sorted(ax % a.ndim for ax in axes):
                g = np.expand_dims(g, ax)
        return (np.broadcast_to(g, a.shape).copy(),)

    _record(out, (a,), rule)
    return out


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        n = a.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        n = 1
        for ax in axes:
            n *= a.shape[ax]
    s = sum_(a, axis=axis, keepdims=keepdims)
    return scale(s, 1.0 / n)


def reshape(a: Tensor, shape) -> Tensor:
    out = Tensor(a.data.reshape(shape))
    _record(out, (a,), lambda g: (g.reshape(a.shape),))
    return out


def transpose(a: Tensor, axes) -> Tensor:
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    out = Tensor(np.ascontiguousarray(a.data.transpose(axes)))
    _record(out, (a,), lambda g: (np.ascontiguousarray(g.transpose(inv)),))
    return out


def concat(tensors, axis: int) -> Tensor:
    datas = [t.data for t in tensors]
    out = Tensor(np.concatenate(datas, axis=axis))
    sizes = [d.shape[axis] for d in datas]
    splits = np.cumsum(sizes)[:-1]

    def rule(g):
        return tuple(np.ascontiguousarray(p) for p in np.split(g, splits, axis=axis))

    _record(out, tuple(tensors), rule)
    return out


def crop2d(a: Tensor, h0: int, h1: int, w0: int, w1: int) -> Tensor:
    """Slice the trailing two axes to ``[h0:h1, w0:w1]``."""
    out = Tensor(np.ascontiguousarray(a.data[..., h0:h1, w0:w1]))

    def rule(g):
        full = np.zeros(a.shape, dtype=g.dtype)
        full[..., h0:h1, w0:w1] = g
        return (full,)

    _record(out, (a,), rule)
    return out


def pad2d(a: Tensor, pad_h: tuple, pad_w: tuple, mode: str = "reflect") -> Tensor:
    """Pad the trailing two axes; mode ``reflect`` or ``zero``."""
    width = [(0, 0)] * (a.ndim - 2) + [pad_h, pad_w]
    if mode == "zero":
        out = Tensor(np.pad(a.data, width))

        def rule(g):
            sl = [slice(None)] * (a.ndim - 2)
            sl += [slice(pad_h[0], pad_h[0] + a.shape[-2]), slice(pad_w[0], pad_w[0] + a.shape[-1])]
            return (np.ascontiguousarray(g[tuple(sl)]),)

    elif mode == "reflect":
        out = Tensor(np.pad(a.data, width, mode="reflect"))
        src_h = np.pad(np.arange(a.shape[-2]), pad_h, mode="reflect")
        src_w = np.pad(np.arange(a.shape[-1]), pad_w, mode="reflect")

        def rule(g):
            acc_h = np.zeros(g.shape[:-2] + (a.shape[-2], g.shape[-1]), dtype=g.dtype)
            np.add.at(acc_h, (..., src_h, slice(None)), g)
            acc = np.zeros(a.shape[:-2] + (a.shape[-2], a.shape[-1]), dtype=g.dtype)
            np.add.at(acc, (..., slice(None), src_w), acc_h)
            return (acc,)

    else:
        raise UsageError(f"unknown pad mode {mode!r}")
    _record(out, (a,), rule)
    return out


# ---------------------------------------------------------------------------
# linear algebra


def matmul(a: Tensor, b: Tensor, mac_tag: str = "linear") -> Tensor:
    """Batched matrix product with broadcasting over leading axes.

    ``mac_tag`` categorizes the multiply-accumulates for the cost counter
    (``linear``, ``attention``, or None to leave uncounted).
    """
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul shapes incompatible: {a.shape} @ {b.shape}")
    y = np.matmul(a.data, b.data)
    if mac_tag is not None:
        batch = int(np.prod(y.shape[:-2], dtype=np.int64)) if y.ndim > 2 else 1
        MacCounter.add(mac_tag, batch * y.shape[-2] * y.shape[-1] * a.shape[-1])
    out = Tensor(y)

    def rule(g):
        da = _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape)
        db = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape)
        return (da, db)

    _record(out, (a, b), rule)
    return out


def rotate(a: Tensor) -> Tensor:
    """Transpose a rank-3 tensor [B,S,C] -> [B,C,S] (token/channel rotation)."""
    if a.ndim != 3:
        raise ShapeError(f"rotate expects rank-3 input, got shape {a.shape}")
    return transpose(a, (0, 2, 1))


def rotate_inverse(a: Tensor) -> Tensor:
    """Inverse of :func:`rotate`; element-wise exact round trip."""
    if a.ndim != 3:
        raise ShapeError(f"rotate_inverse expects rank-3 input, got shape {a.shape}")
    return transpose(a, (0, 2, 1))


# ---------------------------------------------------------------------------
# normalizations and softmax


def softmax_lastdim(a: Tensor) -> Tensor:
    """Numerically stable softmax over the last axis (max-subtraction)."""
    z = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(y)

    def rule(g):
        dot = (g * y).sum(axis=-1, keepdims=True)
        return (y * (g - dot),)

    _record(out, (a,), rule)
    return out


def layernorm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-6) -> Tensor:
    """LayerNorm over the last (channel) axis with affine parameters."""
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = Tensor(xhat * gamma.data + beta.data)

    def rule(g):
        red = tuple(range(g.ndim - 1))
        dgamma = (g * xhat).sum(axis=red)
        dbeta = g.sum(axis=red)
        gg = g * gamma.data
        m1 = gg.mean(axis=-1, keepdims=True)
        m2 = (gg * xhat).mean(axis=-1, keepdims=True)
        dx = inv * (gg - m1 - xhat * m2)
        return (dx, dgamma, dbeta)

    _record(out, (x, gamma, beta), rule)
    return out


# ---------------------------------------------------------------------------
# convolution and spatial ops


def conv2d(x: Tensor, w: Tensor, bias: Tensor | None = None, stride: int = 1,
           padding: int = 0, groups: int = 1) -> Tensor:
    """Cross-correlation convolution on [B,Cin,H,W] with grouped kernels.

    Supports dense (groups=1), depthwise (groups=Cin) and pointwise (1x1)
    cases.  Zero padding; stride uniform over both spatial axes.
    """
    b_, cin, h, wdt = x.shape
    cout, cin_g, kh, kw = w.shape
    if cin % groups or cout % groups or cin_g != cin // groups:
        raise ShapeError(
            f"conv2d channel/group mismatch: x has {cin} channels, weight {w.shape}, groups={groups}")
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x.data
    hp, wp = xp.shape[-2:]
    oh = (hp - kh) // stride + 1
    ow = (wp - kw) // stride + 1
    if oh < 1 or ow < 1:
        raise ShapeError(f"conv2d kernel {kh}x{kw} does not fit input {h}x{wdt} with padding {padding}")

    # im2col: [B, G, Cin/g*KH*KW, OH*OW]
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(2, 3))
    win = win[:, :, ::stride, ::stride]  # [B,Cin,OH,OW,KH,KW]
    cols = win.transpose(0, 1, 4, 5, 2, 3).reshape(b_, groups, cin_g * kh * kw, oh * ow)
    wg = w.data.reshape(groups, cout // groups, cin_g * kh * kw)
    y = np.matmul(wg, cols)  # [B,G,Cout/g,OH*OW]
    y = y.reshape(b_, cout, oh, ow)
    if bias is not None:
        y = y + bias.data.reshape(1, cout, 1, 1)
    MacCounter.add("conv", b_ * cout * oh * ow * cin_g * kh * kw)
    out = Tensor(np.ascontiguousarray(y))

    def rule(g):
        gg = g.reshape(b_, groups, cout // groups, oh * ow)
        dw = np.matmul(gg, cols.swapaxes(-1, -2)).sum(axis=0).reshape(w.shape)
        dcols = np.matmul(wg.swapaxes(-1, -2), gg)  # [B,G,Cin/g*KH*KW,OH*OW]
        dcols = dcols.reshape(b_, cin, kh, kw, oh, ow)
        dxp = np.zeros_like(xp)
        for i in range(kh):
            for j in range(kw):
                dxp[:, :, i:i + oh * stride:stride, j:j + ow * stride:stride] += dcols[:, :, i, j]
        dx = dxp[:, :, padding:padding + h, padding:padding + wdt] if padding else dxp
        grads = [np.ascontiguousarray(dx), dw]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2, 3)))
        return tuple(grads)

    inputs = (x, w) if bias is None else (x, w, bias)
    _record(out, inputs, rule)
    return out


def max_pool2d(x: Tensor, kernel: int, stride: int) -> Tensor:
    b_, c, h, w = x.shape
    if h < kernel or w < kernel:
        raise ShapeError(f"max_pool2d kernel {kernel} larger than input {h}x{w}")
    win = np.lib.stride_tricks.sliding_window_view(x.data, (kernel, kernel), axis=(2, 3))
    win = win[:, :, ::stride, ::stride]
    oh, ow = win.shape[2], win.shape[3]
    flat = win.reshape(b_, c, oh, ow, kernel * kernel)
    arg = flat.argmax(axis=-1)
    out = Tensor(np.ascontiguousarray(np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]))

    def rule(g):
        dx = np.zeros_like(x.data)
        ki, kj = np.divmod(arg, kernel)
        bi, ci, oi, oj = np.indices(arg.shape, sparse=False)
        np.add.at(dx, (bi, ci, oi * stride + ki, oj * stride + kj), g)
        return (dx,)

    _record(out, (x,), rule)
    return out


def global_max_pool(x: Tensor) -> Tensor:
    """Max over the trailing two axes of [B,C,H,W], keepdims."""
    b_, c, h, w = x.shape
    flat = x.data.reshape(b_, c, h * w)
    arg = flat.argmax(axis=-1)
    out = Tensor(np.ascontiguousarray(np.take_along_axis(flat, arg[..., None], -1).reshape(b_, c, 1, 1)))

    def rule(g):
        dflat = np.zeros_like(flat)
        np.put_along_axis(dflat, arg[..., None], g.reshape(b_, c, 1), -1)
        return (dflat.reshape(x.shape),)

    _record(out, (x,), rule)
    return out


def mean_pool_spatial(x: Tensor) -> Tensor:
    """Global average pool over the trailing two axes, keepdims."""
    return mean(x, axis=(-2, -1), keepdims=True)


def pixel_shuffle(x: Tensor, r: int) -> Tensor:
    """Depth-to-space: [B, C*r*r, H, W] -> [B, C, r*H, r*W] (a permutation)."""
    b_, crr, h, w = x.shape
    if r < 1 or crr % (r * r):
        raise ShapeError(f"pixel_shuffle: {crr} channels not divisible by r^2={r * r}")
    c = crr // (r * r)
    y = x.data.reshape(b_, c, r, r, h, w).transpose(0, 1, 4, 2, 5, 3).reshape(b_, c, h * r, w * r)
    out = Tensor(np.ascontiguousarray(y))

    def rule(g):
        gg = g.reshape(b_, c, h, r, w, r).transpose(0, 1, 3, 5, 2, 4).reshape(x.shape)
        return (np.ascontiguousarray(gg),)

    _record(out, (x,), rule)
    return out


def pixel_unshuffle(x: Tensor, r: int) -> Tensor:
    """Space-to-depth inverse of :func:`pixel_shuffle`."""
    b_, c, hr, wr = x.shape
    if hr % r or wr % r:
        raise ShapeError(f"pixel_unshuffle: spatial {hr}x{wr} not divisible by r={r}")
    h, w = hr // r, wr // r
    y = x.data.reshape(b_, c, h, r, w, r).transpose(0, 1, 3, 5, 2, 4).reshape(b_, c * r * r, h, w)
    out = Tensor(np.ascontiguousarray(y))

    def rule(g):
        gg = g.reshape(b_, c, r, r, h, w).transpose(0, 1, 4, 2, 5, 3).reshape(x.shape)
        return (np.ascontiguousarray(gg),)

    _record(out, (x,), rule)
    return out


# ---------------------------------------------------------------------------
# interpolated resize (linear in the input, so backward is the transpose map)

_KERNELS = {}


def _resize_weights(n_in: int, n_out: int, kind: str, antialias: bool, dtype) -> np.ndarray:
    """Dense [n_out, n_in] interpolation matrix with edge clamping.

    ``cubic`` is Catmull-Rom (a=-0.5); on downsample the kernel is widened by
    the scale factor when ``antialias`` is set.  Rows are normalized to sum
    to one (partition of unity).
    """
    key = (n_in, n_out, kind, antialias, np.dtype(dtype).str)
    if key in _KERNELS:
        return _KERNELS[key]
    scale = n_out / n_in

    def cubic(t):
        t = np.abs(t)
        a = -0.5
        return np.where(t <= 1, (a + 2) * t**3 - (a + 3) * t**2 + 1,
                        np.where(t < 2, a * t**3 - 5 * a * t**2 + 8 * a * t - 4 * a, 0.0))

    def linear(t):
        t = np.abs(t)
        return np.maximum(0.0, 1.0 - t)

    if kind == "cubic":
        kern, support = cubic, 2.0
    elif kind == "linear":
        kern, support = linear, 1.0
    elif kind == "nearest":
        kern, support = None, 0.5
    else:
        raise UsageError(f"unknown resize kind {kind!r}")

    kscale = 1.0
    if antialias and scale < 1.0:
        kscale = scale
    mat = np.zeros((n_out, n_in), dtype=np.float64)
    for i in range(n_out):
        src = (i + 0.5) / scale - 0.5
        if kind == "nearest":
            j = min(n_in - 1, max(0, int(np.floor(src + 0.5))))
            mat[i, j] = 1.0
            continue
        radius = support / kscale
        j0 = int(np.floor(src - radius)) + 1
        j1 = int(np.floor(src + radius)) + 1
        js = np.arange(j0, j1 + 1)
        wts = kern((src - js) * kscale)
        wts = wts / wts.sum()
        js = np.clip(js, 0, n_in - 1)  # edge clamp
        np.add.at(mat[i], js, wts)
    mat = mat.astype(dtype)
    _KERNELS[key] = mat
    return mat


def interp_resize(x: Tensor, out_h: int, out_w: int, kind: str = "linear",
                  antialias: bool = True) -> Tensor:
    """Separable resize of [...,H,W] via interpolation matrices (differentiable).

    Not included in the multiply-accumulate cost counter (interpolation
    convention; see :class:`MacCounter`).
    """
    if out_h < 1 or out_w < 1:
        raise ShapeError("resize target dims must be positive")
    h, w = x.shape[-2:]
    rh = _resize_weights(h, out_h, kind, antialias, x.data.dtype)
    rw = _resize_weights(w, out_w, kind, antialias, x.data.dtype)
    y = np.matmul(np.matmul(rh, x.data), rw.T)
    out = Tensor(np.ascontiguousarray(y))

    def rule(g):
        return (np.ascontiguousarray(np.matmul(rh.T, np.matmul(g, rw))),)

    _record(out, (x,), rule)
    return out


def zero_grads(tensors) -> None:
    for t in tensors:
        t.grad = None


def assert_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"non-finite values in {what}")
