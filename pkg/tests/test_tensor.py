import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from aifgtm import tensor


def translated_sum(g, w):
    """Brute-force sum_ij w_ij T_{-i,-j}(g) with zero-fill shifts."""
    k = w.shape[0]
    c = (k - 1) // 2
    out = np.zeros_like(g)
    for a in range(k):
        for b in range(k):
            out += w[a, b] * tensor.translate(g, -(a - c), -(b - c))
    return out


class TestClipBall:
    def test_upper_bound(self):
        assert tensor.clip_ball(np.full((1, 1, 1), 100.0), np.full((1, 1, 1), 130.0), 16)[0, 0, 0] == 116

    def test_zero_bound(self):
        assert tensor.clip_ball(np.full((1, 1, 1), 5.0), np.full((1, 1, 1), -40.0), 16)[0, 0, 0] == 0

    @pytest.mark.parametrize("eps", [0, 1, 16, 300])
    def test_identity(self, rng, eps):
        x = rng.uniform(0, 255, (4, 4, 3))
        np.testing.assert_array_equal(tensor.clip_ball(x, x, eps), x)

    def test_shape_mismatch(self):
        with pytest.raises(tensor.DimensionError):
            tensor.clip_ball(np.zeros((2, 2, 1)), np.zeros((2, 3, 1)), 1)

    @settings(max_examples=50, deadline=None)
    @given(
        arrays(np.float64, (3, 4, 2), elements=st.integers(0, 255).map(float)),
        arrays(np.float64, (3, 4, 2), elements=st.floats(-500, 800)),
        st.integers(0, 40),
    )
    def test_idempotent_and_bounded(self, x, cand, eps):
        once = tensor.clip_ball(x, cand, eps)
        np.testing.assert_array_equal(tensor.clip_ball(x, once, eps), once)
        assert np.max(np.abs(once - x)) <= eps
        assert once.min() >= 0 and once.max() <= 255


class TestGaussianKernel:
    def test_single(self):
        np.testing.assert_array_equal(tensor.gaussian_kernel(1, 0.7), [[1.0]])

    def test_center_value(self):
        # exp(0) at the centre, exp(-1/2) on the 4 edges, exp(-1) on the 4 corners
        expected = 1.0 / (1.0 + 4 * np.exp(-0.5) + 4 * np.exp(-1.0))
        w = tensor.gaussian_kernel(3, 1.0)
        assert w[1, 1] == pytest.approx(expected, abs=1e-15)
        assert w[1, 1] == pytest.approx(0.2042, abs=1e-4)

    @pytest.mark.parametrize("k,sigma", [(3, 0.5), (5, None), (9, 3.0), (15, None), (7, 10.0)])
    def test_invariants(self, k, sigma):
        tensor.check_kernel(tensor.gaussian_kernel(k, sigma))

    def test_default_sigma(self):
        np.testing.assert_allclose(tensor.gaussian_kernel(9), tensor.gaussian_kernel(9, 3.0))

    @pytest.mark.parametrize("k", [0, 2, 4, -3])
    def test_bad_size(self, k):
        with pytest.raises(tensor.ParameterError):
            tensor.gaussian_kernel(k, 1.0)


class TestConv:
    def test_identity_kernel(self, rng):
        g = rng.standard_normal((6, 5, 3))
        np.testing.assert_array_equal(tensor.conv2d_same(g, np.ones((1, 1))), g)

    def test_constant_interior(self):
        g = np.full((9, 9, 2), 3.5)
        out = tensor.conv2d_same(g, tensor.gaussian_kernel(5, 1.3))
        np.testing.assert_allclose(out[2:-2, 2:-2], 3.5, rtol=0, atol=1e-12)

    def test_matches_translated_sum(self, rng):
        g = rng.standard_normal((5, 5, 1))
        w = tensor.gaussian_kernel(3, 0.8)
        np.testing.assert_allclose(tensor.conv2d_same(g, w), translated_sum(g, w), atol=1e-12)

    def test_asymmetric_kernel_is_correlation(self, rng):
        g = rng.standard_normal((6, 6, 2))
        w = rng.uniform(0, 1, (3, 3))
        np.testing.assert_allclose(tensor.conv2d_same(g, w), translated_sum(g, w), atol=1e-12)

    def test_kernel_too_large(self):
        with pytest.raises(tensor.ParameterError):
            tensor.conv2d_same(np.zeros((4, 8, 1)), tensor.gaussian_kernel(5))


class TestTranslate:
    def test_identity(self, rng):
        g = rng.standard_normal((4, 5, 2))
        np.testing.assert_array_equal(tensor.translate(g, 0, 0), g)

    def test_direction(self):
        g = np.zeros((3, 3, 1))
        g[0, 0] = 1
        assert tensor.translate(g, 1, 2)[1, 2, 0] == 1

    @pytest.mark.parametrize("di,dj", [(1, 0), (0, -2), (2, 3), (-3, -1)])
    def test_roundtrip_zeroes_band(self, rng, di, dj):
        g = rng.standard_normal((6, 7, 2))
        back = tensor.translate(tensor.translate(g, di, dj), -di, -dj)
        mask = np.zeros(g.shape, dtype=bool)
        rows = slice(0, 6 - di) if di >= 0 else slice(-di, 6)
        cols = slice(0, 7 - dj) if dj >= 0 else slice(-dj, 7)
        mask[rows, cols] = True
        np.testing.assert_array_equal(back[mask], g[mask])
        assert np.all(back[~mask] == 0)

    def test_sum_does_not_grow(self, rng):
        g = rng.uniform(0, 1, (5, 5, 3))
        assert tensor.translate(g, 2, -1).sum() <= g.sum()

    def test_out_of_range(self):
        with pytest.raises(tensor.ParameterError):
            tensor.translate(np.zeros((3, 3, 1)), 3, 0)


class TestResizePad:
    def test_resize_identity(self, rng):
        x = rng.uniform(0, 255, (4, 6, 3))
        np.testing.assert_array_equal(tensor.resize_nearest(x, 4, 6), x)
        np.testing.assert_array_equal(tensor.route_resize_grad(x, 4, 6), x)

    def test_floor_convention(self):
        x = np.arange(4.0).reshape(2, 2, 1)
        assert tensor.resize_nearest(x, 1, 1)[0, 0, 0] == 0.0

    @pytest.mark.parametrize("h2,w2", [(4, 4), (3, 2), (7, 5), (1, 4)])
    def test_resize_adjoint(self, rng, h2, w2):
        x = rng.standard_normal((4, 4, 2))
        y = rng.standard_normal((h2, w2, 2))
        lhs = np.sum(tensor.resize_nearest(x, h2, w2) * y)
        rhs = np.sum(x * tensor.route_resize_grad(y, 4, 4))
        assert abs(lhs - rhs) < 1e-9

    def test_pad_identity(self, rng):
        x = rng.uniform(0, 255, (3, 4, 1))
        np.testing.assert_array_equal(tensor.pad_zero(x, 0, 0, 3, 4), x)

    @pytest.mark.parametrize("top,left", [(0, 0), (2, 1), (3, 4)])
    def test_crop_pad_roundtrip_and_mean(self, rng, top, left):
        x = rng.uniform(0, 255, (3, 4, 2))
        p = tensor.pad_zero(x, top, left, 6, 8)
        np.testing.assert_array_equal(tensor.crop(p, top, left, 3, 4), x)
        assert p.mean() == pytest.approx(x.mean() * 12 / 48, rel=1e-12)

    def test_pad_adjoint(self, rng):
        x = rng.standard_normal((3, 4, 2))
        y = rng.standard_normal((6, 8, 2))
        lhs = np.sum(tensor.pad_zero(x, 1, 2, 6, 8) * y)
        rhs = np.sum(x * tensor.crop(y, 1, 2, 3, 4))
        assert abs(lhs - rhs) < 1e-9

    def test_pad_out_of_bounds(self):
        with pytest.raises(tensor.ParameterError):
            tensor.pad_zero(np.zeros((3, 3, 1)), 2, 0, 4, 4)
