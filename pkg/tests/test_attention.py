"""Window partitions and the cascaded spatial+channel attention operator,
verified against literal per-element loop oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omnisr import tensor as T
from omnisr.attention import (AttentionParams, WindowSpec, attention_macs,
                              channel_attention, global_merge, global_partition,
                              merge, meso_merge, meso_partition,
                              omni_self_attention, partition, spatial_attention)
from omnisr.errors import ConfigError, ShapeError
from omnisr.gradcheck import max_rel_error
from omnisr.tensor import MacCounter, Tensor

RNG = np.random.default_rng(0)


def spatial_oracle(q, k, v, heads):
    """Literal loop implementation of multi-head token attention."""
    b, n, c = q.shape
    d = c // heads
    out = np.zeros_like(q)
    for bi in range(b):
        for h in range(heads):
            qs, ks, vs = (t[bi, :, h * d:(h + 1) * d] for t in (q, k, v))
            logits = qs @ ks.T / math.sqrt(d)
            e = np.exp(logits - logits.max(axis=1, keepdims=True))
            out[bi, :, h * d:(h + 1) * d] = (e / e.sum(axis=1, keepdims=True)) @ vs
    return out


def channel_oracle(q, k, v, heads, tau):
    """Literal loop implementation of channel (covariance) attention."""
    b, n, c = q.shape
    d = c // heads
    out = np.zeros_like(q)
    for bi in range(b):
        for h in range(heads):
            qs = q[bi, :, h * d:(h + 1) * d].T  # [Ch, N] channel rows
            ks = k[bi, :, h * d:(h + 1) * d].T
            vs = v[bi, :, h * d:(h + 1) * d].T
            qn = qs / np.sqrt((qs * qs).sum(axis=1, keepdims=True) + 1e-8)
            kn = ks / np.sqrt((ks * ks).sum(axis=1, keepdims=True) + 1e-8)
            logits = kn @ qn.T / tau[h]
            e = np.exp(logits - logits.max(axis=1, keepdims=True))
            out[bi, :, h * d:(h + 1) * d] = ((e / e.sum(axis=1, keepdims=True)) @ vs).T
    return out


class TestPartitions:
    def test_meso_round_trip_exact(self):
        x = RNG.standard_normal((2, 8, 12, 5)).astype(np.float32)
        y = meso_merge(meso_partition(Tensor(x), 4), 8, 12, 4)
        assert np.array_equal(y.data, x)

    def test_global_round_trip_exact(self):
        x = RNG.standard_normal((2, 12, 8, 5)).astype(np.float32)
        y = global_merge(global_partition(Tensor(x), 4), 12, 8, 4)
        assert np.array_equal(y.data, x)

    def test_meso_window_content(self):
        h = w = 8
        x = np.arange(h * w, dtype=np.float32).reshape(1, h, w, 1)
        wins = meso_partition(Tensor(x), 4).data
        first = {int(v) for v in wins[0, :, 0]}
        want = {r * w + c for r in range(4) for c in range(4)}
        assert first == want

    def test_global_window_dilated_golden_map(self):
        """With H=W=16, G=8 the first window holds positions {(2i, 2j)}."""
        h = w = 16
        g = 8
        x = np.arange(h * w, dtype=np.float32).reshape(1, h, w, 1)
        wins = global_partition(Tensor(x), g).data
        got = [int(v) for v in wins[0, :, 0]]
        want = [(2 * i) * w + (2 * j) for i in range(g) for j in range(g)]
        assert got == want

    def test_degenerate_single_window(self):
        x = RNG.standard_normal((1, 4, 4, 3)).astype(np.float32)
        for spec in (WindowSpec("meso", 4), WindowSpec("global", 4)):
            wins = partition(Tensor(x), spec)
            assert wins.shape == (1, 16, 3)
            back = merge(wins, 4, 4, spec)
            assert np.array_equal(back.data, x)

    def test_indivisible_extent_rejected(self):
        x = Tensor(np.zeros((1, 7, 8, 2), dtype=np.float32))
        with pytest.raises(ShapeError):
            meso_partition(x, 4)
        with pytest.raises(ShapeError):
            global_partition(x, 4)

    def test_bad_window_spec(self):
        with pytest.raises(ConfigError):
            WindowSpec("diagonal", 4)
        with pytest.raises(ConfigError):
            WindowSpec("meso", 0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 3), st.integers(1, 4), st.integers(1, 4),
           st.integers(1, 4), st.integers(1, 4))
    def test_round_trip_property(self, b, hs, ws, s, c):
        """Randomized (H, W, window) grids round-trip bit-exact in both modes."""
        h, w = hs * s, ws * s
        x = np.random.default_rng(b).standard_normal((b, h, w, c)).astype(np.float32)
        for spec in (WindowSpec("meso", s), WindowSpec("global", s)):
            back = merge(partition(Tensor(x), spec), h, w, spec)
            assert np.array_equal(back.data, x)


class TestSpatialAttention:
    def test_matches_loop_oracle_randomized(self):
        rng = np.random.default_rng(1)
        for trial in range(40):
            b = int(rng.integers(1, 3))
            heads = int(rng.choice([1, 2, 3]))
            n = int(rng.integers(1, 9))
            c = heads * int(rng.integers(1, 5))
            q, k, v = (rng.standard_normal((b, n, c)) for _ in range(3))
            got = spatial_attention(Tensor(q), Tensor(k), Tensor(v), heads).data
            assert np.max(np.abs(got - spatial_oracle(q, k, v, heads))) < 1e-5

    def test_uniform_weights_closed_form(self):
        """Identical keys give uniform attention: output = mean of values."""
        rng = np.random.default_rng(2)
        q = rng.standard_normal((1, 6, 4))
        k = np.tile(rng.standard_normal((1, 1, 4)), (1, 6, 1))
        v = rng.standard_normal((1, 6, 4))
        got = spatial_attention(Tensor(q), Tensor(k), Tensor(v), 2).data
        assert np.allclose(got, v.mean(axis=1, keepdims=True), atol=1e-6)

    def test_output_in_value_convex_hull(self):
        """Each output coordinate lies within the per-head value range."""
        rng = np.random.default_rng(3)
        q, k, v = (rng.standard_normal((2, 7, 6)) for _ in range(3))
        got = spatial_attention(Tensor(q), Tensor(k), Tensor(v), 3).data
        for h in range(3):
            sl = slice(2 * h, 2 * h + 2)
            assert np.all(got[:, :, sl] <= v[:, :, sl].max(axis=1, keepdims=True) + 1e-6)
            assert np.all(got[:, :, sl] >= v[:, :, sl].min(axis=1, keepdims=True) - 1e-6)


class TestChannelAttention:
    def test_matches_loop_oracle_randomized(self):
        rng = np.random.default_rng(4)
        for trial in range(40):
            b = int(rng.integers(1, 3))
            heads = int(rng.choice([1, 2]))
            n = int(rng.integers(2, 8))
            c = heads * int(rng.integers(1, 5))
            q, k, v = (rng.standard_normal((b, n, c)) for _ in range(3))
            tau = rng.uniform(0.5, 2.0, heads)
            got = channel_attention(Tensor(q), Tensor(k), Tensor(v), heads,
                                    Tensor(tau.reshape(heads, 1, 1))).data
            assert np.max(np.abs(got - channel_oracle(q, k, v, heads, tau))) < 1e-5

    def test_token_axis_preserved(self):
        """Channel mixing only: each output token is a recombination of that
        token's channel values, so a zero token stays zero."""
        rng = np.random.default_rng(5)
        v = rng.standard_normal((1, 5, 4))
        v[0, 2] = 0.0
        q, k = rng.standard_normal((1, 5, 4)), rng.standard_normal((1, 5, 4))
        got = channel_attention(Tensor(q), Tensor(k), Tensor(v), 1,
                                Tensor(np.ones((1, 1, 1)))).data
        assert np.allclose(got[0, 2], 0.0, atol=1e-7)


class TestOmniOperator:
    def make(self, c=8, heads=2, seed=0, **kw):
        return AttentionParams(c, heads, np.random.default_rng(seed), **kw)

    def test_matches_composed_oracle(self):
        """Full operator == project, spatial oracle, channel oracle, project."""
        rng = np.random.default_rng(6)
        for trial in range(20):
            p = self.make(c=6, heads=2, seed=trial)
            x = rng.standard_normal((2, 5, 6))
            q = x @ p.wq.data + p.bq.data
            k = x @ p.wk.data + p.bk.data
            v = x @ p.wv.data + p.bv.data
            ys = spatial_oracle(q, k, v, 2)
            yc = channel_oracle(q, k, ys, 2, np.exp(p.log_tau.data[:, 0, 0]))
            want = yc @ p.wo.data + p.bo.data
            got = omni_self_attention(Tensor(x), p).data
            assert np.max(np.abs(got - want)) < 1e-5

    def test_cascade_wiring_rederives_qk(self):
        p = self.make(c=6, heads=2, seed=9, channel_wiring="cascade")
        rng = np.random.default_rng(7)
        x = rng.standard_normal((1, 4, 6))
        q = x @ p.wq.data + p.bq.data
        k = x @ p.wk.data + p.bk.data
        v = x @ p.wv.data + p.bv.data
        ys = spatial_oracle(q, k, v, 2)
        want = channel_oracle(ys, ys, ys, 2, np.ones(2)) @ p.wo.data + p.bo.data
        assert np.max(np.abs(omni_self_attention(Tensor(x), p).data - want)) < 1e-5

    def test_stage_flags(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((1, 4, 6))
        p = self.make(c=6, heads=2, seed=3, channel_stage=False)
        q = x @ p.wq.data + p.bq.data
        k = x @ p.wk.data + p.bk.data
        v = x @ p.wv.data + p.bv.data
        want = spatial_oracle(q, k, v, 2) @ p.wo.data + p.bo.data
        assert np.max(np.abs(omni_self_attention(Tensor(x), p).data - want)) < 1e-5
        p2 = self.make(c=6, heads=2, seed=3, spatial_stage=False)
        want2 = channel_oracle(q, k, v, 2, np.ones(2)) @ p2.wo.data + p2.bo.data
        assert np.max(np.abs(omni_self_attention(Tensor(x), p2).data - want2)) < 1e-5

    def test_tau_positive_and_learnable(self):
        p = self.make()
        assert np.all(p.tau().data > 0)
        p.log_tau.data[:] = -3.0
        assert np.allclose(p.tau().data, math.exp(-3.0), atol=1e-6)

    def test_gradients_through_operator(self):
        p = self.make(c=8, heads=2, seed=10)
        rng = np.random.default_rng(11)
        for _, t in p.named_parameters():
            t.data += rng.normal(0, 0.05, t.data.shape).astype(t.data.dtype)
        x = rng.standard_normal((2, 9, 8)).astype(np.float32)
        mask = Tensor(rng.standard_normal((2, 9, 8)).astype(np.float32))
        err = max_rel_error(lambda xx: T.sum_(T.mul(omni_self_attention(xx, p), mask)),
                            [x], sample=32)
        assert err < 1e-3

    def test_mac_formula_matches_instrumented(self):
        p = self.make(c=8, heads=2, seed=12)
        x = Tensor(np.zeros((3, 16, 8), dtype=np.float32))
        with MacCounter() as mc:
            omni_self_attention(x, p)
        want = attention_macs(3, 16, 8, 2)
        assert mc.macs["linear"] == want["linear"]
        assert mc.macs["attention"] == want["attention"]

    def test_indivisible_heads_rejected(self):
        with pytest.raises(ConfigError):
            self.make(c=7, heads=2)
