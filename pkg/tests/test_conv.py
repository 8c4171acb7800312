import numpy as np
import pytest

from tgd.conv import convolve, valid_region
from tgd.errors import ConfigError, ShapeError
from tgd.operators import (
    KernelProfile,
    Operator,
    build_directional_2d,
    build_first_order_1d,
    build_first_order_3d,
    build_second_order_1d,
)


def naive_convolve(x, w, padding):
    """Direct-summation oracle: out[p] = sum_q w[q] * x[p - q], looped
    over kernel offsets on an explicitly padded copy."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != x.ndim:
        raise ValueError("oracle expects equal ranks")
    radii = [(m - 1) // 2 for m in w.shape]
    if padding == "valid":
        out_shape = tuple(n - 2 * r for n, r in zip(x.shape, radii))
        padded = x
    else:
        mode = {"replicate": "edge", "reflect": "symmetric", "zero": "constant"}[padding]
        padded = np.pad(x, [(r, r) for r in radii], mode=mode)
        out_shape = x.shape
    out = np.zeros(out_shape)
    for offset in np.ndindex(*w.shape):
        coeff = w[offset]
        sl = tuple(slice(2 * r - o, 2 * r - o + n)
                   for r, o, n in zip(radii, offset, out_shape))
        out += coeff * padded[sl]
    return out


def pure_python_convolve_1d(x, w):
    """Tap-by-tap zero-padding oracle with no numpy arithmetic."""
    r = (len(w) - 1) // 2
    out = []
    for p in range(len(x)):
        acc = 0.0
        for q in range(-r, r + 1):
            src = p - q
            if 0 <= src < len(x):
                acc += w[q + r] * x[src]
        out.append(acc)
    return np.array(out)


class TestConvolveBasics:
    def test_constant_annihilated(self):
        op = build_first_order_1d(KernelProfile("gaussian", 4))
        out = convolve(np.full(50, 7.3), op, "replicate")
        np.testing.assert_allclose(out, 0.0, atol=1e-12)

    def test_ramp_first_order_linear_r1(self):
        # weights [+1, 0, -1]: out[n] = x[n+1] - x[n-1] = 2 on a unit ramp
        op = build_first_order_1d(KernelProfile("linear", 1))
        out = convolve(np.arange(20, dtype=float), op, "valid")
        np.testing.assert_allclose(out, naive_convolve(np.arange(20.0), op.weights, "valid"))
        np.testing.assert_allclose(out, 2.0)

    def test_impulse_response_is_weights(self):
        op = build_first_order_1d(KernelProfile("gaussian", 3))
        x = np.zeros(9)
        x[4] = 1.0
        out = convolve(x, op, "zero")
        np.testing.assert_array_equal(out[1:8], op.weights)

    def test_rising_edge_positive_response(self):
        op = build_first_order_1d(KernelProfile("gaussian", 3))
        step = np.concatenate([np.zeros(10), np.ones(10)])
        out = convolve(step, op, "replicate")
        assert out[10] > 0

    def test_unknown_padding(self):
        op = build_first_order_1d(KernelProfile("linear", 1))
        with pytest.raises(ConfigError):
            convolve(np.zeros(5), op, "wrap")

    def test_valid_too_short(self):
        op = build_first_order_1d(KernelProfile("linear", 3))
        with pytest.raises(ShapeError):
            convolve(np.zeros(5), op, "valid")

    def test_nan_propagates(self):
        op = build_first_order_1d(KernelProfile("linear", 2))
        x = np.ones(20)
        x[10] = np.nan
        out = convolve(x, op, "replicate")
        assert np.isnan(out[9])
        assert not np.isnan(out[0])


class TestOracleEquivalence:
    @pytest.mark.parametrize("padding", ["replicate", "reflect", "zero", "valid"])
    def test_1d(self, padding):
        rng = np.random.default_rng(11)
        x = rng.normal(size=31)
        op = build_second_order_1d(KernelProfile("gaussian", 4))
        np.testing.assert_allclose(
            convolve(x, op, padding), naive_convolve(x, op.weights, padding), atol=1e-12)

    @pytest.mark.parametrize("padding", ["replicate", "reflect", "zero", "valid"])
    def test_2d(self, padding):
        rng = np.random.default_rng(12)
        x = rng.normal(size=(24, 17))
        op = build_directional_2d(KernelProfile("exponential", 3), 1, "45", "rotational")
        np.testing.assert_allclose(
            convolve(x, op, padding), naive_convolve(x, op.weights, padding), atol=1e-12)

    @pytest.mark.parametrize("padding", ["replicate", "zero", "valid"])
    def test_3d(self, padding):
        rng = np.random.default_rng(13)
        x = rng.normal(size=(9, 12, 11))
        op = build_first_order_3d(KernelProfile("linear", 2), "y")
        np.testing.assert_allclose(
            convolve(x, op, padding), naive_convolve(x, op.weights, padding), atol=1e-12)

    def test_pure_python_cross_check(self):
        rng = np.random.default_rng(14)
        x = rng.normal(size=8)
        op = build_first_order_1d(KernelProfile("linear", 2))
        np.testing.assert_allclose(
            convolve(x, op, "zero"), pure_python_convolve_1d(x, op.weights), atol=1e-12)


class TestProperties:
    def test_linearity(self):
        rng = np.random.default_rng(21)
        f, g = rng.normal(size=40), rng.normal(size=40)
        op = build_second_order_1d(KernelProfile("gaussian", 5))
        lhs = convolve(2.5 * f - 1.25 * g, op, "replicate")
        rhs = 2.5 * convolve(f, op, "replicate") - 1.25 * convolve(g, op, "replicate")
        np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-12)

    def test_shift_commutation_valid(self):
        rng = np.random.default_rng(22)
        base = rng.normal(size=60)
        op = build_first_order_1d(KernelProfile("gaussian", 4))
        out_a = convolve(base[0:40], op, "valid")
        out_b = convolve(base[5:45], op, "valid")
        np.testing.assert_array_equal(out_a[5:], out_b[:-5])

    def test_separable_consistency(self):
        # the rank-3 stencil equals sequential 1D passes of its factors
        rng = np.random.default_rng(23)
        vol = rng.normal(size=(11, 13, 12))
        profile = KernelProfile("linear", 2)
        op3 = build_first_order_3d(profile, "x")
        from tgd.operators import build_first_order_1d, smoothing_profile
        base = build_first_order_1d(profile)
        s = smoothing_profile(profile)
        smooth_op = Operator(s / s.sum(), order=2)  # any tag; used per-axis below
        import scipy.ndimage as ndi
        seq = ndi.convolve1d(vol, base.weights, axis=2, mode="constant")
        seq = ndi.convolve1d(seq, s, axis=1, mode="constant")
        seq = ndi.convolve1d(seq, s, axis=0, mode="constant")
        direct = convolve(vol, op3, "zero")
        np.testing.assert_allclose(direct, seq, rtol=1e-10, atol=1e-12)

    def test_rank1_on_volume_tagged_axis(self):
        rng = np.random.default_rng(24)
        vol = rng.normal(size=(9, 6, 7))
        op = build_first_order_1d(KernelProfile("linear", 2), direction="t")
        out = convolve(vol, op, "replicate")
        assert out.shape == vol.shape
        for r in range(6):
            for c in range(7):
                col = convolve(vol[:, r, c], op, "replicate")
                np.testing.assert_allclose(out[:, r, c], col, atol=1e-12)

    def test_rank_mismatch_rejected(self):
        op = build_directional_2d(KernelProfile("linear", 1), 1, "0", "orthogonal")
        with pytest.raises(ShapeError):
            convolve(np.zeros((4, 5, 6)), op)
        op1 = build_first_order_1d(KernelProfile("linear", 1))
        with pytest.raises(ShapeError):
            convolve(np.zeros((6, 6)), op1)  # untagged rank-1 op on an image


class TestValidRegion:
    def test_basic(self):
        op = build_first_order_1d(KernelProfile("gaussian", 25))
        assert valid_region(1000, op) == [(25, 975)]

    def test_degenerate_empty(self):
        op = build_first_order_1d(KernelProfile("gaussian", 7))
        (start, stop), = valid_region(10, op)
        assert stop <= start

    def test_rank1_on_volume(self):
        op = build_first_order_1d(KernelProfile("linear", 2), direction="t")
        assert valid_region((9, 20, 30), op) == [(2, 7), (0, 20), (0, 30)]
