"""Core tensor engine: forward semantics, broadcasting, and finite-difference
gradient verification of every differentiable op."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omnisr import tensor as T
from omnisr.errors import ShapeError, UsageError
from omnisr.gradcheck import max_rel_error
from omnisr.tensor import MacCounter, Tape, Tensor

RNG = np.random.default_rng(0)


def rand(*shape, scale=1.0):
    return (RNG.standard_normal(shape) * scale).astype(np.float32)


def weighted_sum(op, *arrays, mask=None):
    """Scalar objective sum(op(x) * mask), mask fixed outside the closure."""
    out_shape = op(*[Tensor(a.copy()) for a in arrays]).shape
    m = Tensor(RNG.standard_normal(out_shape).astype(np.float32)) if mask is None else mask
    return lambda *ts: T.sum_(T.mul(op(*ts), m))


class TestForward:
    def test_add_broadcast(self):
        a, b = rand(3, 4), rand(4)
        assert np.allclose(T.add(Tensor(a), Tensor(b)).data, a + b)

    def test_div(self):
        a, b = rand(5), rand(5) + 3.0
        assert np.allclose(T.div(Tensor(a), Tensor(b)).data, a / b)

    def test_relu_values(self):
        x = np.array([-2.0, 0.0, 3.0], dtype=np.float32)
        assert np.array_equal(T.relu(Tensor(x)).data, [0, 0, 3])

    def test_sigmoid_stable_at_large_inputs(self):
        x = np.array([-500.0, 500.0], dtype=np.float32)
        y = T.sigmoid(Tensor(x)).data
        assert np.all(np.isfinite(y)) and y[0] == 0.0 and y[1] == 1.0

    def test_softmax_rows_sum_to_one(self):
        x = rand(6, 7, scale=10)
        y = T.softmax_lastdim(Tensor(x)).data
        assert np.allclose(y.sum(axis=-1), 1.0, atol=1e-6)
        assert np.all(y >= 0)

    def test_softmax_shift_invariance(self):
        x = rand(4, 5)
        a = T.softmax_lastdim(Tensor(x)).data
        b = T.softmax_lastdim(Tensor(x + 100.0)).data
        assert np.allclose(a, b, atol=1e-6)

    def test_layernorm_already_normalized(self):
        x = np.array([[1.0, -1.0]], dtype=np.float32)
        g, b = Tensor(np.ones(2, np.float32)), Tensor(np.zeros(2, np.float32))
        y = T.layernorm(Tensor(x), g, b).data
        assert np.allclose(y, [[1.0, -1.0]], atol=1e-4)

    def test_layernorm_zero_mean_unit_var(self):
        x = rand(3, 8, scale=5)
        g, b = Tensor(np.ones(8, np.float32)), Tensor(np.zeros(8, np.float32))
        y = T.layernorm(Tensor(x), g, b).data
        assert np.allclose(y.mean(axis=-1), 0.0, atol=1e-5)
        assert np.allclose(y.var(axis=-1), 1.0, atol=1e-3)

    def test_rotate_inverse_round_trip(self):
        x = rand(2, 5, 3)
        y = T.rotate_inverse(T.rotate(Tensor(x)))
        assert np.array_equal(y.data, x)

    def test_rotate_is_last_two_transpose(self):
        x = rand(2, 5, 3)
        assert np.array_equal(T.rotate(Tensor(x)).data, x.transpose(0, 2, 1))

    def test_conv2d_identity_kernel(self):
        x = rand(1, 2, 6, 6)
        w = np.zeros((2, 2, 3, 3), dtype=np.float32)
        w[0, 0, 1, 1] = 1.0
        w[1, 1, 1, 1] = 1.0
        y = T.conv2d(Tensor(x), Tensor(w), padding=1).data
        assert np.allclose(y, x, atol=1e-6)

    def test_conv2d_matches_loop_oracle(self):
        x, w = rand(1, 2, 5, 5), rand(3, 2, 3, 3)
        got = T.conv2d(Tensor(x), Tensor(w)).data
        want = np.zeros((1, 3, 3, 3))
        for co in range(3):
            for i in range(3):
                for j in range(3):
                    want[0, co, i, j] = np.sum(x[0, :, i:i + 3, j:j + 3] * w[co])
        assert np.allclose(got, want, atol=1e-4)

    def test_conv2d_grouped(self):
        x, w = rand(1, 4, 5, 5), rand(4, 1, 3, 3)
        got = T.conv2d(Tensor(x), Tensor(w), padding=1, groups=4).data
        for c in range(4):
            solo = T.conv2d(Tensor(x[:, c:c + 1]), Tensor(w[c:c + 1]), padding=1).data
            assert np.allclose(got[:, c:c + 1], solo, atol=1e-5)

    def test_pixel_shuffle_unshuffle_inverse(self):
        x = rand(2, 12, 3, 3)
        y = T.pixel_unshuffle(T.pixel_shuffle(Tensor(x), 2), 2)
        assert np.array_equal(y.data, x)

    def test_pixel_shuffle_known_layout(self):
        x = np.arange(4, dtype=np.float32).reshape(1, 4, 1, 1)
        y = T.pixel_shuffle(Tensor(x), 2).data
        assert np.array_equal(y[0, 0], [[0, 1], [2, 3]])

    def test_pad_reflect_values(self):
        x = np.arange(9, dtype=np.float32).reshape(1, 1, 3, 3)
        y = T.pad2d(Tensor(x), (1, 1), (0, 0)).data
        assert np.array_equal(y[0, 0, 0], x[0, 0, 1])
        assert np.array_equal(y[0, 0, -1], x[0, 0, 1])

    def test_crop_of_pad_is_identity(self):
        x = rand(1, 2, 4, 5)
        y = T.crop2d(T.pad2d(Tensor(x), (2, 2), (1, 3)), 2, 6, 1, 6)
        assert np.array_equal(y.data, x)

    def test_max_pool_values(self):
        x = np.arange(16, dtype=np.float32).reshape(1, 1, 4, 4)
        y = T.max_pool2d(Tensor(x), 2, 2).data
        assert np.array_equal(y[0, 0], [[5, 7], [13, 15]])

    def test_interp_resize_constant_preserved(self):
        x = np.full((1, 2, 7, 9), 0.37, dtype=np.float32)
        for kind in ("linear", "cubic"):
            y = T.interp_resize(Tensor(x), 13, 4, kind=kind).data
            assert np.allclose(y, 0.37, atol=1e-6)

    def test_interp_resize_identity(self):
        x = rand(1, 1, 6, 6)
        y = T.interp_resize(Tensor(x), 6, 6, kind="cubic").data
        assert np.allclose(y, x, atol=1e-6)

    def test_concat_and_split_shapes(self):
        a, b = rand(2, 3), rand(2, 5)
        y = T.concat([Tensor(a), Tensor(b)], axis=1)
        assert y.shape == (2, 8)
        assert np.array_equal(y.data[:, :3], a)


class TestTape:
    def test_backward_requires_scalar(self):
        x = Tensor(rand(3), requires_grad=True)
        with Tape() as tape:
            y = T.scale(x, 2.0)
        with pytest.raises(UsageError):
            tape.backward(y)

    def test_gradient_accumulates_over_reuse(self):
        x = Tensor(rand(3), requires_grad=True)
        with Tape() as tape:
            loss = T.sum_(T.add(x, x))
        tape.backward(loss)
        assert np.allclose(x.grad, 2.0)

    def test_no_tape_no_graph(self):
        x = Tensor(rand(3), requires_grad=True)
        y = T.sum_(T.mul(x, x))
        assert y.item() == pytest.approx(float((x.data ** 2).sum()), rel=1e-6)
        assert x.grad is None

    def test_determinism(self):
        x = rand(4, 4)
        w = rand(4, 4)

        def run():
            xt, wt = Tensor(x.copy(), requires_grad=True), Tensor(w.copy(), requires_grad=True)
            with Tape() as tape:
                loss = T.mean(T.absolute(T.matmul(xt, wt)))
            tape.backward(loss)
            return xt.grad.copy(), wt.grad.copy()

        g1, g2 = run(), run()
        assert np.array_equal(g1[0], g2[0]) and np.array_equal(g1[1], g2[1])


class TestGradients:
    """Central finite differences on a 64-bit shadow path, rel err < 1e-4."""

    TOL = 1e-4

    def test_elementwise(self):
        x = rand(4, 5)
        for op in (T.exp, T.relu, T.sigmoid, T.gelu, T.absolute, T.sqrt):
            arg = np.abs(x) + 0.5 if op in (T.sqrt,) else x + 0.01
            err = max_rel_error(weighted_sum(op, arg), [arg])
            assert err < self.TOL, f"{op.__name__}: {err:.3g}"

    def test_binary_broadcast(self):
        a, b = rand(3, 4), rand(4) + 2.0
        for op in (T.add, T.sub, T.mul, T.div):
            err = max_rel_error(weighted_sum(op, a, b), [a, b])
            assert err < self.TOL, f"{op.__name__}: {err:.3g}"

    def test_matmul_3x4_by_4x2(self):
        a, b = rand(3, 4), rand(4, 2)
        err = max_rel_error(weighted_sum(T.matmul, a, b), [a, b], h=1e-3)
        assert err < self.TOL

    def test_batched_matmul(self):
        a, b = rand(2, 3, 4), rand(2, 4, 5)
        err = max_rel_error(weighted_sum(T.matmul, a, b), [a, b])
        assert err < self.TOL

    def test_reductions(self):
        x = rand(3, 4)
        assert max_rel_error(lambda t: T.sum_(t), [x]) < self.TOL
        assert max_rel_error(lambda t: T.mean(t), [x]) < self.TOL
        err = max_rel_error(weighted_sum(lambda t: T.mean(t, axis=1), x), [x])
        assert err < self.TOL

    def test_softmax(self):
        x = rand(4, 8)
        err = max_rel_error(weighted_sum(T.softmax_lastdim, x), [x])
        assert err < self.TOL

    def test_layernorm_all_inputs(self):
        x, g, b = rand(5, 6), rand(6) + 1.0, rand(6)
        err = max_rel_error(weighted_sum(T.layernorm, x, g, b), [x, g, b])
        assert err < self.TOL

    def test_conv2d_wrt_input_weight_bias(self):
        x = rand(1, 2, 5, 5)
        w = rand(3, 2, 3, 3, scale=0.3)
        bias = rand(3)
        err = max_rel_error(weighted_sum(lambda xx, ww, bb: T.conv2d(xx, ww, bb, padding=1),
                                         x, w, bias), [x, w, bias])
        assert err < self.TOL

    def test_conv2d_strided_grouped(self):
        x = rand(1, 4, 6, 6)
        w = rand(4, 2, 3, 3, scale=0.3)
        err = max_rel_error(weighted_sum(
            lambda xx, ww: T.conv2d(xx, ww, stride=2, padding=1, groups=2), x, w), [x, w])
        assert err < self.TOL

    def test_rotate_gradient_is_inverse_rotation(self):
        x = rand(2, 3, 4)
        m = Tensor(RNG.standard_normal((2, 4, 3)).astype(np.float32))
        err = max_rel_error(lambda t: T.sum_(T.mul(T.rotate(t), m)), [x])
        assert err < self.TOL
        xt = Tensor(x.astype(np.float64), requires_grad=True)
        with Tape() as tape:
            loss = T.sum_(T.mul(T.rotate(xt), Tensor(m.data.astype(np.float64))))
        tape.backward(loss)
        assert np.allclose(xt.grad, m.data.transpose(0, 2, 1))

    def test_pad_crop_pool(self):
        x = rand(1, 2, 6, 6)
        err = max_rel_error(weighted_sum(lambda t: T.pad2d(t, (1, 1), (2, 2)), x), [x])
        assert err < self.TOL
        err = max_rel_error(weighted_sum(lambda t: T.crop2d(t, 1, 5, 0, 4), x), [x])
        assert err < self.TOL
        err = max_rel_error(weighted_sum(lambda t: T.max_pool2d(t, 2, 2), x), [x])
        assert err < self.TOL

    def test_pixel_shuffle_pair(self):
        x = rand(1, 8, 3, 3)
        err = max_rel_error(weighted_sum(lambda t: T.pixel_shuffle(t, 2), x), [x])
        assert err < self.TOL
        y = rand(1, 2, 6, 6)
        err = max_rel_error(weighted_sum(lambda t: T.pixel_unshuffle(t, 2), y), [y])
        assert err < self.TOL

    def test_interp_resize(self):
        x = rand(1, 2, 6, 6)
        for kind in ("linear", "cubic"):
            err = max_rel_error(weighted_sum(
                lambda t, k=kind: T.interp_resize(t, 9, 4, kind=k), x), [x])
            assert err < self.TOL, kind

    def test_concat(self):
        a, b = rand(2, 3), rand(2, 4)
        err = max_rel_error(weighted_sum(lambda x, y: T.concat([x, y], axis=1), a, b), [a, b])
        assert err < self.TOL


class TestShapeErrors:
    def test_matmul_mismatch(self):
        with pytest.raises(ShapeError):
            T.matmul(Tensor(rand(3, 4)), Tensor(rand(3, 4)))

    def test_conv_channel_mismatch(self):
        with pytest.raises(ShapeError):
            T.conv2d(Tensor(rand(1, 3, 5, 5)), Tensor(rand(4, 2, 3, 3)))

    def test_rotate_needs_rank3(self):
        with pytest.raises(ShapeError):
            T.rotate(Tensor(rand(3, 4)))


class TestMacCounter:
    def test_matmul_macs(self):
        with MacCounter() as mc:
            T.matmul(Tensor(rand(3, 4)), Tensor(rand(4, 5)))
        assert mc.macs["linear"] == 3 * 4 * 5

    def test_conv_macs(self):
        with MacCounter() as mc:
            T.conv2d(Tensor(rand(2, 3, 8, 8)), Tensor(rand(5, 3, 3, 3)), padding=1)
        assert mc.macs["conv"] == 2 * 5 * 8 * 8 * 3 * 3 * 3

    def test_nested_counter_rejected(self):
        with MacCounter():
            with pytest.raises(UsageError):
                with MacCounter():
                    pass


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 6), st.integers(1, 6))
def test_transpose_reshape_round_trip(b, h, w):
    x = np.arange(b * h * w, dtype=np.float32).reshape(b, h, w)
    y = T.transpose(T.transpose(Tensor(x), (2, 0, 1)), (1, 2, 0))
    assert np.array_equal(y.data, x)
    z = T.reshape(T.reshape(Tensor(x), (b * h * w,)), (b, h, w))
    assert np.array_equal(z.data, x)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.sampled_from([1, 2, 3]), st.integers(2, 5), st.integers(2, 5))
def test_pixel_shuffle_round_trip_property(b, r, h, w):
    x = np.random.default_rng(0).standard_normal((b, 3 * r * r, h, w)).astype(np.float32)
    y = T.pixel_unshuffle(T.pixel_shuffle(Tensor(x), r), r)
    assert np.array_equal(y.data, x)
