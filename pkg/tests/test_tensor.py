"""Autodiff engine: primitive forward values and gradients."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import mixsep.tensor as T
from mixsep.errors import AutogradError, ShapeError
from mixsep.gradcheck import check_gradients


def randt(rng, *shape, scale=1.0):
    return T.parameter(scale * rng.standard_normal(shape), dtype=np.float64)


class TestMatmul:
    def test_identity(self):
        eye = T.tensor(np.eye(2))
        vec = T.tensor([[5.0], [6.0]])
        assert np.array_equal(T.matmul(eye, vec).data, [[5.0], [6.0]])

    def test_hand_value(self):
        a = T.tensor([[1.0, 2.0], [3.0, 4.0]])
        b = T.tensor([[5.0], [6.0]])
        assert np.array_equal(T.matmul(a, b).data, [[17.0], [39.0]])

    def test_dimension_error_names_both_shapes(self):
        a = T.tensor([[1.0, 2.0]])
        b = T.tensor([[1.0], [2.0], [3.0]])
        with pytest.raises(ShapeError, match=r"\(1, 2\).*\(3, 1\)"):
            T.matmul(a, b)

    def test_batched(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((3, 2, 4))
        b = rng.standard_normal((3, 4, 5))
        out = T.matmul(T.tensor(a), T.tensor(b))
        np.testing.assert_allclose(out.data, a @ b, rtol=1e-6)


class TestBackwardBasics:
    def test_square_gradient(self):
        x = T.parameter([3.0], dtype=np.float64)
        (x * x).sum().backward()
        assert x.grad == pytest.approx([6.0])

    def test_bilinear_gradient_equals_other_factor(self):
        rng = np.random.default_rng(1)
        a = T.parameter(rng.standard_normal(7), dtype=np.float64)
        b = T.tensor(rng.standard_normal(7), dtype=np.float64)
        (a * b).sum().backward()
        np.testing.assert_allclose(a.grad, b.data, rtol=1e-12)

    def test_repeated_backward_accumulates(self):
        x = T.parameter([2.0], dtype=np.float64)
        loss = (x * x).sum()
        loss.backward()
        loss.backward()
        assert x.grad == pytest.approx([8.0])

    def test_clearing_grad_resets(self):
        x = T.parameter([2.0], dtype=np.float64)
        loss = (x * x).sum()
        loss.backward()
        x.zero_grad()
        loss.backward()
        assert x.grad == pytest.approx([4.0])

    def test_non_scalar_loss_rejected(self):
        x = T.parameter([1.0, 2.0], dtype=np.float64)
        with pytest.raises(AutogradError, match="scalar"):
            (x * x).backward()

    def test_no_grad_blocks_recording(self):
        x = T.parameter([1.0], dtype=np.float64)
        with T.no_grad():
            y = x * x
        assert not y.requires_grad

    def test_mixed_dtype_rejected(self):
        a = T.tensor([1.0], dtype=np.float32)
        b = T.tensor([1.0], dtype=np.float64)
        with pytest.raises(AutogradError, match="mixed dtypes"):
            a + b

    def test_shared_parent_grads_sum(self):
        # x used twice: d(x*x)/dx = 2x through two mul parents
        x = T.parameter([1.5], dtype=np.float64)
        T.mul(x, x).sum().backward()
        assert x.grad == pytest.approx([3.0])


class TestPrimitiveGradients:
    """Analytic vs central finite differences, rel. error < 1e-4."""

    def check(self, loss_fn, params):
        assert check_gradients(loss_fn, params) < 1e-4

    def test_add_sub_broadcast(self):
        rng = np.random.default_rng(2)
        a = randt(rng, 4, 5)
        b = randt(rng, 5)
        self.check(lambda: ((a + b) - (b - a)).sum(), [a, b])

    def test_mul_div_broadcast(self):
        rng = np.random.default_rng(3)
        a = randt(rng, 3, 4)
        b = T.parameter(rng.uniform(0.5, 2.0, (4,)), dtype=np.float64)
        self.check(lambda: ((a * b) / b + a / 2.0).sum(), [a, b])

    def test_matmul_2d(self):
        rng = np.random.default_rng(4)
        a, b = randt(rng, 3, 4), randt(rng, 4, 2)
        w = T.tensor(rng.standard_normal((3, 2)), dtype=np.float64)
        self.check(lambda: (T.matmul(a, b) * w).sum(), [a, b])

    def test_matmul_batched(self):
        rng = np.random.default_rng(5)
        a, b = randt(rng, 2, 3, 4), randt(rng, 2, 4, 2)
        w = T.tensor(rng.standard_normal((2, 3, 2)), dtype=np.float64)
        self.check(lambda: (T.matmul(a, b) * w).sum(), [a, b])

    def test_reshape_transpose(self):
        rng = np.random.default_rng(6)
        a = randt(rng, 2, 3, 4)
        w = T.tensor(rng.standard_normal((4, 6)), dtype=np.float64)

        def loss():
            return (T.reshape(T.transpose(a, (2, 0, 1)), (4, 6)) * w).sum()

        self.check(loss, [a])

    def test_concat_narrow_pad(self):
        rng = np.random.default_rng(7)
        a, b = randt(rng, 3, 2), randt(rng, 2, 2)
        w = T.tensor(rng.standard_normal((4, 4)), dtype=np.float64)

        def loss():
            cat = T.concat([a, b], axis=0)               # (5, 2)
            sl = T.narrow(cat, 0, 1, 2)                  # (2, 2)
            padded = T.pad(sl, ((1, 1), (1, 1)))         # (4, 4)
            return (padded * w).sum()

        self.check(loss, [a, b])

    def test_reductions(self):
        rng = np.random.default_rng(8)
        a = randt(rng, 3, 4, 2)

        def loss():
            return (a.sum(axis=0) * a.mean(axis=(0, 2), keepdims=True).sum()
                    + a.mean()).sum()

        self.check(loss, [a])

    def test_elementwise_nonlinear(self):
        rng = np.random.default_rng(9)
        a = T.parameter(rng.uniform(0.3, 2.0, (4, 3)), dtype=np.float64)
        self.check(lambda: (T.exp(a) + T.log(a) + T.sqrt(a)).sum(), [a])

    def test_relu_away_from_kink(self):
        rng = np.random.default_rng(10)
        vals = rng.uniform(0.05, 1.0, (4, 4)) * rng.choice([-1.0, 1.0], (4, 4))
        a = T.parameter(vals, dtype=np.float64)
        self.check(lambda: (T.relu(a) * T.relu(a)).sum(), [a])

    def test_sigmoid_softmax(self):
        rng = np.random.default_rng(11)
        a = randt(rng, 3, 5)
        w = T.tensor(rng.standard_normal((3, 5)), dtype=np.float64)
        self.check(lambda: (T.softmax(a, axis=-1) * w + T.sigmoid(a)).sum(), [a])


class TestActivationValues:
    def test_relu(self):
        assert np.array_equal(T.relu(T.tensor([-1.0, 2.0])).data, [0.0, 2.0])

    def test_origin_values(self):
        from mixsep.functional import silu
        assert silu(T.tensor([0.0])).data[0] == 0.0
        assert T.sigmoid(T.tensor([0.0])).data[0] == pytest.approx(0.5)

    def test_softmax_symmetry(self):
        out = T.softmax(T.tensor([0.0, 0.0]), axis=-1)
        np.testing.assert_allclose(out.data, [0.5, 0.5])

    @given(st.lists(st.floats(-30, 30), min_size=2, max_size=8))
    @settings(max_examples=50, deadline=None)
    def test_softmax_rows_normalized(self, logits):
        out = T.softmax(T.tensor(np.array(logits, dtype=np.float64)), axis=-1).data
        assert out.min() >= 0.0
        assert abs(out.sum() - 1.0) <= 1e-6
