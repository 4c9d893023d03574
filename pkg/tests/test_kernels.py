"""Convolution primitives: hand oracles, adjoint identities, backend parity."""

import numpy as np
import pytest

import mixsep.tensor as T
from mixsep import kernels
from mixsep.errors import LengthError, ShapeError
from mixsep.gradcheck import check_gradients

from oracles import naive_conv1d, naive_conv_transpose1d, naive_gconv2d


class TestConv1d:
    def test_identity_kernel(self):
        x = T.tensor([[1.0, 2.0, 3.0]])
        w = T.tensor(np.ones((1, 1, 1)))
        np.testing.assert_allclose(T.conv1d(x, w).data, [[1.0, 2.0, 3.0]])

    def test_hand_value(self):
        x = T.tensor([[1.0, 2.0, 3.0]])
        w = T.tensor(np.ones((1, 1, 2)))
        np.testing.assert_allclose(T.conv1d(x, w).data, [[3.0, 5.0]])

    def test_length_formula(self):
        x = T.tensor(np.zeros((1, 4)))
        w = T.tensor(np.zeros((1, 1, 2)))
        assert T.conv1d(x, w, stride=2).shape == (1, 2)

    def test_too_short_input(self):
        x = T.tensor(np.zeros((1, 2)))
        w = T.tensor(np.zeros((1, 1, 5)))
        with pytest.raises(LengthError, match="too short"):
            T.conv1d(x, w)

    def test_channel_mismatch(self):
        with pytest.raises(ShapeError):
            T.conv1d(T.tensor(np.zeros((2, 8))), T.tensor(np.zeros((1, 3, 2))))

    @pytest.mark.parametrize("stride,pad", [(1, 0), (2, 0), (1, 2), (3, 1)])
    def test_matches_naive(self, stride, pad):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((3, 11))
        w = rng.standard_normal((4, 3, 3))
        got = kernels.conv1d_fwd(x, w, stride, pad)
        np.testing.assert_allclose(got, naive_conv1d(x, w, stride, pad), rtol=1e-10)


class TestConvTranspose1d:
    def test_length_formula(self):
        x = T.tensor(np.zeros((1, 3)))
        w = T.tensor(np.zeros((1, 1, 4)))
        assert T.conv_transpose1d(x, w, stride=2).shape == (1, 8)

    def test_hand_value(self):
        x = T.tensor([[1.0, 2.0]])
        w = T.tensor(np.ones((1, 1, 2)))
        np.testing.assert_allclose(T.conv_transpose1d(x, w).data, [[1.0, 3.0, 2.0]])

    @pytest.mark.parametrize("k1,t", [(8, 16), (8, 160), (16, 16000)])
    def test_encoder_decoder_length_algebra(self, k1, t):
        # S = 2T/K - 1 at stride K/2, and the adjoint maps S back to exactly T
        s = 2 * t // k1 - 1
        x = T.tensor(np.zeros((1, s)))
        w = T.tensor(np.zeros((1, 1, k1)))
        assert T.conv_transpose1d(x, w, stride=k1 // 2).shape == (1, t)

    def test_matches_naive(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((2, 6))
        w = rng.standard_normal((2, 3, 4))
        got = kernels.convt1d_fwd(x, w, 2)
        np.testing.assert_allclose(got, naive_conv_transpose1d(x, w, 2), rtol=1e-10)

    def test_adjoint_of_conv1d(self):
        # <conv1d(x), y> == <x, conv_transpose1d(y)> with shared weights
        rng = np.random.default_rng(2)
        cin, cout, kw, stride, t = 3, 5, 8, 4, 64
        x = rng.standard_normal((cin, t))
        w = rng.standard_normal((cout, cin, kw))
        s = (t - kw) // stride + 1
        y = rng.standard_normal((cout, s))
        fwd = kernels.conv1d_fwd(x, w, stride, 0)
        # the (Cout, Cin, Kw) conv weight *is* a (Cin', Cout', Kw) transpose weight
        adj = kernels.convt1d_fwd(y, w, stride)
        assert adj.shape == (cin, t)
        lhs = float((fwd * y).sum())
        rhs = float((x * adj).sum())
        assert lhs == pytest.approx(rhs, rel=1e-5)


class TestGroupedConv2d:
    def test_per_channel_identity(self):
        c, h, w_ = 3, 2, 5
        x = np.random.default_rng(3).standard_normal((c, h, w_))
        weight = np.ones((c, 1, 1, 1))
        out = kernels.gconv2d_fwd(x, weight, c, 1, 1, 0, 0)
        np.testing.assert_allclose(out, x, rtol=1e-12)

    def test_dilated_taps(self):
        # kernel (1,3) dilation (1,2): output at t reads inputs {t-2, t, t+2}
        x = np.zeros((1, 1, 9))
        x[0, 0, 4] = 1.0
        weight = np.ones((1, 1, 1, 3))
        out = kernels.gconv2d_fwd(x, weight, 1, 1, 2, 0, 2)
        np.testing.assert_allclose(np.nonzero(out[0, 0])[0], [2, 4, 6])

    def test_group_independence(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((2, 1, 7))
        weight = rng.standard_normal((2, 1, 1, 3))
        full = kernels.gconv2d_fwd(x, weight, 2, 1, 1, 0, 1)
        weight2 = weight.copy()
        weight2[1] = 0.0
        zeroed = kernels.gconv2d_fwd(x, weight2, 2, 1, 1, 0, 1)
        np.testing.assert_allclose(zeroed[0], full[0], rtol=1e-12)
        assert np.all(zeroed[1] == 0.0)

    @pytest.mark.parametrize("groups,dil", [(1, (1, 1)), (2, (1, 2)), (4, (1, 4))])
    def test_matches_naive(self, groups, dil):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((4, 2, 10))
        weight = rng.standard_normal((4, 4 // groups, 1, 3))
        pad = (0, dil[1])
        got = kernels.gconv2d_fwd(x, weight, groups, dil[0], dil[1], pad[0], pad[1])
        np.testing.assert_allclose(got, naive_gconv2d(x, weight, groups, dil, pad),
                                   rtol=1e-9)

    def test_groups_must_divide(self):
        with pytest.raises(ShapeError, match="groups"):
            T.grouped_conv2d(T.tensor(np.zeros((3, 1, 4))),
                             T.tensor(np.zeros((4, 1, 1, 1))), groups=2)


class TestConvGradients:
    def check(self, loss_fn, params):
        assert check_gradients(loss_fn, params) < 1e-4

    def test_conv1d(self):
        rng = np.random.default_rng(6)
        x = T.parameter(rng.standard_normal((2, 9)), dtype=np.float64)
        w = T.parameter(rng.standard_normal((3, 2, 3)), dtype=np.float64)
        probe = T.tensor(rng.standard_normal((3, 5)), dtype=np.float64)
        self.check(lambda: (T.conv1d(x, w, 2, 1) * probe).sum(), [x, w])

    def test_conv_transpose1d(self):
        rng = np.random.default_rng(7)
        x = T.parameter(rng.standard_normal((2, 5)), dtype=np.float64)
        w = T.parameter(rng.standard_normal((2, 3, 4)), dtype=np.float64)
        probe = T.tensor(rng.standard_normal((3, 12)), dtype=np.float64)
        self.check(lambda: (T.conv_transpose1d(x, w, 2) * probe).sum(), [x, w])

    def test_grouped_conv2d(self):
        rng = np.random.default_rng(8)
        x = T.parameter(rng.standard_normal((4, 1, 7)), dtype=np.float64)
        w = T.parameter(rng.standard_normal((4, 2, 1, 3)), dtype=np.float64)
        probe = T.tensor(rng.standard_normal((4, 1, 7)), dtype=np.float64)
        self.check(
            lambda: (T.grouped_conv2d(x, w, groups=2, dilation=(1, 2)) * probe).sum(),
            [x, w])


@pytest.mark.skipif(not kernels.HAS_NUMBA, reason="numba unavailable")
class TestBackendParity:
    """numpy and numba kernels agree on every function and dtype."""

    cases = {
        "conv1d_fwd": lambda r, dt: (r.standard_normal((3, 17)).astype(dt),
                                     r.standard_normal((5, 3, 4)).astype(dt), 2, 1),
        "conv1d_bwd_x": lambda r, dt: (r.standard_normal((5, 8)).astype(dt),
                                       r.standard_normal((5, 3, 4)).astype(dt), 2, 1, 17),
        "conv1d_bwd_w": lambda r, dt: (r.standard_normal((5, 8)).astype(dt),
                                       r.standard_normal((3, 17)).astype(dt), 2, 1, 4),
        "convt1d_fwd": lambda r, dt: (r.standard_normal((3, 9)).astype(dt),
                                      r.standard_normal((3, 2, 6)).astype(dt), 3),
        "convt1d_bwd_x": lambda r, dt: (r.standard_normal((2, 30)).astype(dt),
                                        r.standard_normal((3, 2, 6)).astype(dt), 3, 9),
        "convt1d_bwd_w": lambda r, dt: (r.standard_normal((2, 30)).astype(dt),
                                        r.standard_normal((3, 9)).astype(dt), 3, 6),
        "gconv2d_fwd": lambda r, dt: (r.standard_normal((6, 2, 11)).astype(dt),
                                      r.standard_normal((6, 3, 1, 5)).astype(dt),
                                      2, 1, 2, 0, 4),
        "gconv2d_bwd_x": lambda r, dt: (r.standard_normal((6, 2, 11)).astype(dt),
                                        r.standard_normal((6, 3, 1, 5)).astype(dt),
                                        2, 1, 2, 0, 4, 2, 11),
        "gconv2d_bwd_w": lambda r, dt: (r.standard_normal((6, 2, 11)).astype(dt),
                                        r.standard_normal((6, 2, 11)).astype(dt),
                                        2, 1, 2, 0, 4, 1, 5),
    }

    @pytest.mark.parametrize("name", sorted(cases))
    @pytest.mark.parametrize("dtype", [np.float32, np.float64])
    def test_backends_agree(self, name, dtype):
        args = self.cases[name](np.random.default_rng(9), dtype)
        ref = getattr(kernels.numpy_backend, name)(*args)
        got = getattr(kernels.numba_backend, name)(*args)
        assert got.dtype == ref.dtype
        tol = 1e-5 if dtype == np.float32 else 1e-10
        np.testing.assert_allclose(got, ref, rtol=tol, atol=tol)

    def test_env_selection(self):
        previous = kernels.active_backend_name()
        try:
            kernels.use_backend("numpy")
            assert kernels.active_backend_name() == "numpy"
            kernels.use_backend("numba")
            assert kernels.active_backend_name() == "numba"
        finally:
            kernels.use_backend(previous)
