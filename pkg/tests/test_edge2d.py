import numpy as np
import pytest

from tgd.conv import convolve
from tgd.edge2d import (
    default_first_order_ops,
    default_lot_op,
    default_second_order_ops,
    detect_edges_first_order,
    detect_edges_gaussian_derivative,
    detect_edges_log,
    detect_edges_lot,
    gradient_field,
    hysteresis,
    log_kernel,
    non_max_suppression,
    percentile_threshold,
    quantize_theta,
    zero_crossings,
)
from tgd.errors import ConfigError, ShapeError
from tgd.metrics import synth_phantom
from tgd.operators import KernelProfile, build_directional_2d


def blob_image(h=48, w=48):
    """Smooth irregular test image: two off-center bumps."""
    rows = np.arange(h)[:, None]
    cols = np.arange(w)[None, :]
    img = 200.0 * np.exp(-((rows - 17) ** 2 + (cols - 14) ** 2) / 60.0)
    img += 140.0 * np.exp(-((rows - 33) ** 2 + (cols - 31) ** 2) / 110.0)
    return img


class TestGradientField:
    def test_constant_zero(self):
        ops = default_first_order_ops(7)
        gf = gradient_field(np.full((32, 32), 9.0), ops)
        np.testing.assert_allclose(gf.grad, 0.0, atol=1e-10)

    def test_vertical_step_against_oracle(self):
        from test_conv import naive_convolve
        ph = synth_phantom("step", height=32, width=32, edge_col=16)
        img = ph.data
        ops = default_first_order_ops(7)
        gf = gradient_field(img, ops)
        for resp, op in zip((gf.dx, gf.d45, gf.dy, gf.d135), ops):
            np.testing.assert_allclose(resp, naive_convolve(img, op.weights, "replicate"),
                                       atol=1e-10)
        # responses peak on the step; the angle there is 0 (x gradient)
        mid = gf.grad[16]
        assert np.argmax(mid) in (15, 16)
        assert abs(gf.theta[16, 16]) < 1e-12
        assert gf.grad.min() >= 0.0

    def test_rotated_image_swaps_axes(self):
        ops = default_first_order_ops(5)
        img = blob_image()
        gf = gradient_field(img, ops)
        gf_rot = gradient_field(np.rot90(img), ops)
        np.testing.assert_allclose(gf_rot.grad, np.rot90(gf.grad), atol=1e-10)
        np.testing.assert_allclose(np.abs(gf_rot.dx), np.rot90(np.abs(gf.dy)), atol=1e-10)

    def test_image_smaller_than_operator(self):
        ops = default_first_order_ops(13)
        with pytest.raises(ShapeError):
            gradient_field(np.zeros((8, 8)), ops)

    def test_needs_four_ops(self):
        ops = default_first_order_ops(5)
        with pytest.raises(ConfigError):
            gradient_field(np.zeros((16, 16)), ops[:2])


class TestQuantizeTheta:
    def test_bins(self):
        theta = np.radians(np.array([0.0, 10.0, -10.0, 30.0, 60.0, 80.0, 90.0,
                                     -30.0, -60.0, -80.0, 22.5, 67.5, -22.5, -67.5]))
        q = quantize_theta(theta)
        expected = [0, 0, 0, 45, 45, 90, 90, 135, 135, 90, 45, 90, 0, 135]
        np.testing.assert_array_equal(q, expected)

    def test_boundaries_left_closed(self):
        # each bin owns its lower boundary: -22.5 opens the 0 bin, 22.5
        # the 45 bin; -80 is nearest the vertical bin
        assert quantize_theta(np.radians(np.array([-22.5])))[0] == 0
        assert quantize_theta(np.radians(np.array([22.5])))[0] == 45
        assert quantize_theta(np.radians(np.array([-80.0])))[0] == 90


class TestNonMaxSuppression:
    def test_single_peak_retained(self):
        grad = np.zeros((7, 7))
        grad[3, 3] = 5.0
        out = non_max_suppression(grad, np.zeros((7, 7)))
        assert out[3, 3] == 5.0
        assert out.sum() == 5.0

    def test_equal_neighbors_both_kept(self):
        grad = np.zeros((5, 7))
        grad[2, 3] = grad[2, 4] = 2.0  # tie along the 0-degree direction
        out = non_max_suppression(grad, np.zeros((5, 7)))
        assert out[2, 3] == 2.0 and out[2, 4] == 2.0

    def test_ramp_edge_center_column_survives(self):
        # 3-px-wide ramp: with radius-2 linear stencils the response has a
        # unique maximum at the ramp center column (hand-traced)
        ph = synth_phantom("ramp", height=16, width=16, center_col=8, ramp_width=3)
        ops = tuple(build_directional_2d(KernelProfile("linear", 2), 1, d, "orthogonal")
                    for d in ("0", "45", "90", "135"))
        gf = gradient_field(ph.data, ops)
        out = non_max_suppression(gf)
        row = out[8, 2:14]
        surviving = np.nonzero(row > 1.0)[0] + 2  # ignore flat-region float dust
        assert surviving.tolist() == [8]

    def test_idempotent(self):
        img = blob_image()
        gf = gradient_field(img, default_first_order_ops(5))
        once = non_max_suppression(gf)
        twice = non_max_suppression(once, gf.theta)
        np.testing.assert_array_equal(once, twice)

    def test_boundary_pixels_compare_in_bounds_only(self):
        grad = np.zeros((4, 4))
        grad[0, 0] = 1.0  # corner peak: only in-bounds neighbor is (0,1)
        out = non_max_suppression(grad, np.zeros((4, 4)))
        assert out[0, 0] == 1.0


class TestHysteresis:
    def test_all_below_low_empty(self):
        assert not hysteresis(np.full((8, 8), 0.5), 1.0, 2.0).any()

    def test_weak_chain_anchored_by_strong(self):
        # flood-fill oracle on a 5-pixel hand-built chain
        nms = np.zeros((5, 9))
        chain = [(2, 2), (2, 3), (3, 4), (2, 5), (2, 6)]
        for r, c in chain:
            nms[r, c] = 1.0
        nms[2, 6] = 5.0  # single strong anchor
        out = hysteresis(nms, 1.0, 4.0)
        assert sorted(map(tuple, np.argwhere(out))) == sorted(chain)

    def test_isolated_weak_dropped(self):
        nms = np.zeros((5, 5))
        nms[2, 2] = 1.5
        assert not hysteresis(nms, 1.0, 4.0).any()

    def test_monotone_in_thresholds(self):
        img = blob_image()
        gf = gradient_field(img, default_first_order_ops(5))
        nms = non_max_suppression(gf)
        base = hysteresis(nms, 1.0, 4.0)
        assert not (hysteresis(nms, 2.0, 4.0) & ~base).any()
        assert not (hysteresis(nms, 1.0, 6.0) & ~base).any()

    def test_bad_thresholds(self):
        with pytest.raises(ConfigError):
            hysteresis(np.zeros((3, 3)), 2.0, 1.0)


class TestDetectFirstOrder:
    def test_constant_empty(self):
        result = detect_edges_first_order(np.full((24, 24), 8.0),
                                          default_first_order_ops(5), 1.0, 2.0)
        assert not result.edges.any()
        assert not result.orientation.any()

    def test_step_edge_found_at_both_sizes(self):
        ph = synth_phantom("step", edge_col=32)
        for size in (13, 17):
            ops = default_first_order_ops(size)
            result = detect_edges_first_order(ph.data, ops, 10.0, 50.0)
            cols = np.unique(np.argwhere(result.edges)[:, 1])
            assert set(cols) <= {31, 32}
            assert 32 in cols

    def test_rotation_consistency(self):
        img = blob_image()
        ops = default_first_order_ops(5)
        a = detect_edges_first_order(img, ops, 1.0, 4.0)
        b = detect_edges_first_order(np.rot90(img), ops, 1.0, 4.0)
        np.testing.assert_array_equal(b.edges, np.rot90(a.edges))

    def test_orientation_support(self):
        img = blob_image()
        result = detect_edges_first_order(img, default_first_order_ops(5), 1.0, 4.0)
        assert not result.orientation[~result.edges].any()


class TestZeroCrossings:
    def test_exact_zero_between_signs(self):
        g = np.zeros((3, 5))
        g[1] = [2.0, 1.0, 0.0, -1.0, -2.0]
        out = zero_crossings(g)
        assert out[1, 2]
        assert out[1].sum() == 1

    def test_sign_change_marks_smaller_side(self):
        g = np.zeros((3, 6))
        g[1] = [4.0, 3.0, 1.0, -2.0, -3.0, -4.0]
        out = zero_crossings(g)
        assert out[1, 2] and not out[1, 3]

    def test_tie_marks_both(self):
        g = np.zeros((3, 4))
        g[1] = [3.0, 1.0, -1.0, -3.0]
        out = zero_crossings(g)
        assert out[1, 1] and out[1, 2]

    def test_no_crossing_same_sign(self):
        g = np.ones((4, 4))
        assert not zero_crossings(g).any()


class TestDetectLot:
    def test_constant_empty(self):
        result = detect_edges_lot(np.full((20, 20), 3.0),
                                  default_second_order_ops(5), default_lot_op(5), 0.0)
        assert not result.edges.any()

    def test_extruded_step_crossing_on_smaller_side(self):
        # scan-line oracle: mark the smaller-|response| side of each sign change
        ph = synth_phantom("ramp", height=16, width=16, center_col=8, ramp_width=2)
        lot_op = default_lot_op(5)
        gl = convolve(ph.data, lot_op)
        result = detect_edges_lot(ph.data, default_second_order_ops(5), lot_op, 0.0)
        row_gl = gl[8]
        marked = set(np.nonzero(result.edges[8])[0])
        oracle = set()
        for c in range(15):
            a, b = row_gl[c], row_gl[c + 1]
            if a * b < 0:
                if abs(a) <= abs(b):
                    oracle.add(c)
                if abs(b) <= abs(a):
                    oracle.add(c + 1)
        for c in range(16):
            if row_gl[c] == 0:
                nbs = [row_gl[c + d] for d in (-1, 1) if 0 <= c + d < 16]
                if any(v > 0 for v in nbs) and any(v < 0 for v in nbs):
                    oracle.add(c)
        assert oracle <= marked  # column scan misses vertical-pair crossings

    def test_text_stroke_marked_within_one_pixel(self):
        ph = synth_phantom("text-stroke")
        lot_op = default_lot_op(13)
        gl = convolve(ph.data, lot_op)
        thr = percentile_threshold(gl, "p50")
        result = detect_edges_lot(ph.data, default_second_order_ops(13), lot_op, thr)
        stroke = ph.truth["stroke_mask"]
        import scipy.ndimage as ndi
        halo = ndi.binary_dilation(stroke, np.ones((3, 3), dtype=bool))
        assert result.edges.any()
        assert not (result.edges & ~halo).any()      # nothing far from the ink
        covered = ndi.binary_dilation(result.edges, np.ones((3, 3), dtype=bool))
        assert (stroke & ~covered).sum() == 0        # every stroke pixel adjacent

    @pytest.mark.parametrize("size", range(5, 27, 2))
    def test_zero_crossing_unbiased_at_every_size(self, size):
        # symmetric edge profile: the marked column never moves with size
        ph = synth_phantom("sigmoid-edge", center_col=32, edge_width=4.0)
        lot_op = default_lot_op(size, "gaussian")
        gl = convolve(ph.data, lot_op)
        thr = percentile_threshold(gl, "p50")
        result = detect_edges_lot(ph.data, default_second_order_ops(size, "gaussian"),
                                  lot_op, thr)
        assert np.argwhere(result.edges[32]).ravel().tolist() == [32]

    def test_orientation_angles_canonical(self):
        img = blob_image()
        result = detect_edges_lot(img, default_second_order_ops(5), default_lot_op(5), 0.0)
        angles = np.unique(result.orientation[result.edges])
        canonical = {0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4}
        assert set(np.round(angles, 12)) <= set(np.round(sorted(canonical), 12))

    def test_negative_threshold_rejected(self):
        with pytest.raises(ConfigError):
            detect_edges_lot(np.zeros((12, 12)), default_second_order_ops(5),
                             default_lot_op(5), -1.0)


class TestBaselines:
    def test_log_kernel_center_negative(self):
        op = log_kernel(13)
        assert op.weights[6, 6] == -2.0
        # distributed negatives: more than one negative cell
        assert (op.weights < 0).sum() > 1

    def test_log_detects_step(self):
        ph = synth_phantom("step", edge_col=32)
        result = detect_edges_log(ph.data, 9, 0.0)
        cols = np.unique(np.argwhere(result.edges)[:, 1])
        assert len(cols) > 0
        assert np.min(np.abs(cols - 32)) <= 2

    def test_gaussian_derivative_detects_step(self):
        ph = synth_phantom("step", edge_col=32)
        result = detect_edges_gaussian_derivative(ph.data, 9, 10.0, 50.0)
        cols = np.unique(np.argwhere(result.edges)[:, 1])
        assert len(cols) > 0
        assert np.min(np.abs(cols - 32)) <= 2


class TestPercentileThreshold:
    def test_passthrough_number(self):
        assert percentile_threshold(np.arange(10.0), 3.5) == 3.5

    def test_percentile_of_magnitudes(self):
        vals = np.array([-4.0, -2.0, 0.0, 2.0, 4.0])
        assert percentile_threshold(vals, "p50") == 2.0

    def test_bad_spec(self):
        with pytest.raises(ConfigError):
            percentile_threshold(np.arange(4.0), "q50")
        with pytest.raises(ConfigError):
            percentile_threshold(np.arange(4.0), "p150")
