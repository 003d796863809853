"""Built-in diagnostic suite, runnable without pytest or test files.

Each check is a named function returning nothing (pass) or raising
(fail).  ``run_selftest`` executes every check whose name contains the
filter substring and reports one line per check plus a summary."""

from __future__ import annotations

import math
import sys

import numpy as np

from . import tensor as T
from .attention import (AttentionParams, WindowSpec, merge,
                        omni_self_attention, partition)
from .blocks import BlockConfig
from .gradcheck import max_rel_error
from .network import NetworkConfig, OmniSR
from .tensor import MacCounter, Tensor


def _rng(seed=0):
    return np.random.default_rng(seed)


def check_grad_elementwise():
    """Finite differences agree with the tape on pointwise ops."""
    rng = _rng(1)
    x = rng.standard_normal((4, 5)).astype(np.float32)
    for op in (T.exp, T.relu, T.sigmoid, T.gelu, T.absolute):
        err = max_rel_error(lambda t, op=op: T.sum_(op(t)), [x])
        assert err < 1e-3, f"{op.__name__}: rel err {err:.3g}"


def check_grad_matmul_softmax():
    rng = _rng(2)
    a = rng.standard_normal((3, 4)).astype(np.float32)
    b = rng.standard_normal((4, 5)).astype(np.float32)
    w = rng.standard_normal((3, 5)).astype(np.float32)
    err = max_rel_error(lambda x, y: T.sum_(T.mul(T.matmul(x, y), Tensor(w))), [a, b])
    assert err < 1e-3, f"matmul: rel err {err:.3g}"
    mask = rng.standard_normal(a.shape).astype(np.float32)
    err = max_rel_error(
        lambda x: T.sum_(T.mul(T.softmax_lastdim(x), Tensor(mask))), [a])
    assert err < 1e-3, f"softmax: rel err {err:.3g}"


def check_grad_conv_norm():
    rng = _rng(3)
    x = rng.standard_normal((1, 2, 6, 6)).astype(np.float32)
    w = rng.standard_normal((3, 2, 3, 3)).astype(np.float32) * 0.3
    bias = rng.standard_normal(3).astype(np.float32)
    mask = rng.standard_normal((1, 3, 6, 6)).astype(np.float32)
    err = max_rel_error(
        lambda xx, ww, bb: T.sum_(T.mul(T.conv2d(xx, ww, bb, padding=1), Tensor(mask))),
        [x, w, bias])
    assert err < 1e-3, f"conv2d: rel err {err:.3g}"
    g = rng.standard_normal(6).astype(np.float32)
    b2 = rng.standard_normal(6).astype(np.float32)
    xf = rng.standard_normal((5, 6)).astype(np.float32)
    mf = rng.standard_normal((5, 6)).astype(np.float32)
    err = max_rel_error(
        lambda xx, gg, bb: T.sum_(T.mul(T.layernorm(xx, gg, bb), Tensor(mf))),
        [xf, g, b2])
    assert err < 1e-3, f"layernorm: rel err {err:.3g}"


def check_grad_attention():
    rng = _rng(4)
    params = AttentionParams(8, heads=2, rng=rng)
    for _, p in params.named_parameters():
        p.data += rng.normal(0, 0.05, p.data.shape).astype(p.data.dtype)
    x = rng.standard_normal((2, 9, 8)).astype(np.float32)
    mask = rng.standard_normal((2, 9, 8)).astype(np.float32)
    err = max_rel_error(
        lambda xx: T.sum_(T.mul(omni_self_attention(xx, params), Tensor(mask))),
        [x], sample=24)
    assert err < 1e-3, f"attention: rel err {err:.3g}"


def check_grad_network():
    cfg = NetworkConfig(groups=1, channels=8, scale=2, seed=5,
                        block=BlockConfig(channels=8, heads=2, window=4, lcb_depth=1))
    model = OmniSR(cfg)
    rng = _rng(6)
    for _, p in model.named_parameters():
        p.data += rng.normal(0, 0.05, p.data.shape).astype(p.data.dtype)
    x = rng.standard_normal((1, 3, 8, 8)).astype(np.float32) * 0.5
    err = max_rel_error(lambda xx: T.mean(T.absolute(model.forward(xx))),
                        [x], sample=12)
    assert err < 1e-3, f"network input grad: rel err {err:.3g}"


def check_attention_oracle():
    """Library attention matches an explicit per-element loop."""
    from .attention import channel_attention, spatial_attention

    rng = _rng(7)
    b, n, c, h = 2, 5, 6, 2
    d = c // h
    q = rng.standard_normal((b, n, c)).astype(np.float64)
    k = rng.standard_normal((b, n, c)).astype(np.float64)
    v = rng.standard_normal((b, n, c)).astype(np.float64)
    got = spatial_attention(Tensor(q), Tensor(k), Tensor(v), h).data
    want = np.zeros_like(q)
    for bi in range(b):
        for hi in range(h):
            qs = q[bi, :, hi * d:(hi + 1) * d]
            ks = k[bi, :, hi * d:(hi + 1) * d]
            vs = v[bi, :, hi * d:(hi + 1) * d]
            logits = qs @ ks.T / math.sqrt(d)
            e = np.exp(logits - logits.max(axis=1, keepdims=True))
            want[bi, :, hi * d:(hi + 1) * d] = (e / e.sum(axis=1, keepdims=True)) @ vs
    assert np.max(np.abs(got - want)) < 1e-10, "spatial attention mismatch"


def check_window_round_trip():
    rng = _rng(8)
    x = rng.standard_normal((2, 16, 16, 6)).astype(np.float32)
    for spec in (WindowSpec("meso", 4), WindowSpec("global", 4)):
        wins = partition(Tensor(x), spec)
        back = merge(wins, 16, 16, spec)
        assert np.array_equal(back.data, x), f"{spec.mode} round trip not exact"


def check_mac_consistency():
    """Instrumented counts equal the analytic formulas."""
    cfg = NetworkConfig(groups=1, channels=8, scale=2,
                        block=BlockConfig(channels=8, heads=2, window=4))
    model = OmniSR(cfg)
    x = np.zeros((1, 3, 8, 8), dtype=np.float32)
    with MacCounter() as counter:
        model.forward(Tensor(x))
    analytic = model.mac_counts(8, 8, batch=1)
    for key in ("conv", "linear", "attention"):
        assert counter.macs.get(key, 0) == analytic[key], \
            f"{key}: instrumented {counter.macs.get(key, 0)} != analytic {analytic[key]}"


def check_resize_partition_of_unity():
    """Interpolation rows sum to one: constants map to constants."""
    for n_in, n_out in ((17, 5), (5, 17), (8, 8)):
        w = T._resize_weights(n_in, n_out, "cubic", True, np.float64)
        assert np.allclose(w.sum(axis=1), 1.0, atol=1e-12), f"{n_in}->{n_out} rows not normalized"


def check_checkpoint_round_trip():
    import tempfile
    from pathlib import Path

    from .checkpoint import checkpoint_restore, checkpoint_save

    cfg = NetworkConfig(groups=1, channels=8, scale=2, seed=11,
                        block=BlockConfig(channels=8, heads=2, window=4))
    model = OmniSR(cfg)
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "m.osr1"
        checkpoint_save(path, model, model.config)
        twin, _ = checkpoint_restore(path)
        for (n1, p1), (n2, p2) in zip(model.named_parameters(), twin.named_parameters()):
            assert n1 == n2 and np.array_equal(p1.data, p2.data), n1


def check_forward_determinism():
    cfg = NetworkConfig(groups=1, channels=8, scale=2, seed=13,
                        block=BlockConfig(channels=8, heads=2, window=4))
    model = OmniSR(cfg)
    x = _rng(14).standard_normal((1, 3, 12, 12)).astype(np.float32)
    a = model.forward(Tensor(x)).data
    b = model.forward(Tensor(x)).data
    assert np.array_equal(a, b), "repeated forward passes differ"


CHECKS = [
    check_grad_elementwise,
    check_grad_matmul_softmax,
    check_grad_conv_norm,
    check_grad_attention,
    check_grad_network,
    check_attention_oracle,
    check_window_round_trip,
    check_mac_consistency,
    check_resize_partition_of_unity,
    check_checkpoint_round_trip,
    check_forward_determinism,
]


def run_selftest(filter_: str = "", out=None) -> int:
    """Run matching checks; returns the number of failures."""
    out = out if out is not None else sys.stdout
    selected = [c for c in CHECKS if filter_ in c.__name__]
    if not selected:
        print(f"no checks match filter {filter_!r}", file=out)
        return 1
    failures = 0
    for check in selected:
        try:
            check()
        except Exception as exc:  # noqa: BLE001 - report and keep going
            failures += 1
            print(f"FAIL {check.__name__}: {type(exc).__name__}: {exc}", file=out)
        else:
            print(f"ok   {check.__name__}", file=out)
    print(f"{len(selected) - failures}/{len(selected)} checks passed", file=out)
    return failures
