"""First- and second-order 2D edge detection.

The first-order pipeline convolves with four directional stencils,
combines the responses into a gradient magnitude, thins it by
non-maximum suppression along the quantized gradient direction, and
keeps pixels by double-threshold hysteresis.  The second-order pipeline
thresholds the radial (Laplacian-style) response and marks
zero-crossings; orientation comes from the argmax of four directional
second-order responses.

Gaussian-derivative and Laplacian-of-Gaussian reference kernels are
provided for localization-drift comparisons; they run through the same
suppression, hysteresis, and zero-crossing stages so the only difference
is the kernel.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.ndimage as ndi

from .conv import convolve
from .errors import ConfigError, ShapeError
from .operators import DIRECTIONS_2D, KernelProfile, Operator, build_directional_2d, build_lot_2d

ANGLES = {"0": 0.0, "45": math.pi / 4, "90": math.pi / 2, "135": 3 * math.pi / 4}


@dataclass(frozen=True)
class GradientField:
    dx: np.ndarray
    d45: np.ndarray
    dy: np.ndarray
    d135: np.ndarray
    grad: np.ndarray
    theta: np.ndarray


@dataclass(frozen=True)
class EdgeResult:
    edges: np.ndarray   # binary edge map
    orientation: np.ndarray  # radians at edge pixels, 0 elsewhere


def _theta_from(dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """arctan(dy/dx) in (-pi/2, pi/2]; dx = 0 maps to pi/2, or 0 if dy = 0 too."""
    theta = np.full(dx.shape, math.pi / 2)
    nz = dx != 0
    theta[nz] = np.arctan(dy[nz] / dx[nz])
    theta[(dx == 0) & (dy == 0)] = 0.0
    return theta


def gradient_field(image, ops: tuple[Operator, Operator, Operator, Operator],
                   padding: str = "replicate") -> GradientField:
    """Four-direction responses, combined magnitude, and gradient angle.

    ``ops`` are the 0/45/90/135-degree first-order stencils, equal extent.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ShapeError(f"expected a 2D image, got rank {image.ndim}")
    if len(ops) != 4:
        raise ConfigError("gradient_field needs exactly four directional operators")
    extents = {op.extent for op in ops}
    if len(extents) != 1:
        raise ConfigError(f"directional operators must share one extent, got {extents}")
    if any(n < m for n, m in zip(image.shape, ops[0].extent)):
        raise ShapeError(f"image {image.shape} smaller than operator {ops[0].extent}")
    dx, d45, dy, d135 = (convolve(image, op, padding) for op in ops)
    grad = (np.sqrt(dx * dx + dy * dy) + np.sqrt(d45 * d45 + d135 * d135)) / 2.0
    return GradientField(dx, d45, dy, d135, grad, _theta_from(dx, dy))


_QUANT_OFFSETS = {
    0: ((0, 1), (0, -1)),
    45: ((1, 1), (-1, -1)),
    90: ((1, 0), (-1, 0)),
    135: ((1, -1), (-1, 1)),
}


def quantize_theta(theta: np.ndarray) -> np.ndarray:
    """Nearest canonical angle (0/45/90/135 degrees), bins +-22.5 degrees."""
    deg = np.degrees(theta)
    q = np.full(theta.shape, 90, dtype=np.int32)
    q[(deg >= -22.5) & (deg < 22.5)] = 0
    q[(deg >= 22.5) & (deg < 67.5)] = 45
    q[(deg >= -67.5) & (deg < -22.5)] = 135
    return q


def _shifted(grad: np.ndarray, dr: int, dc: int, fill: float = -np.inf) -> np.ndarray:
    """Neighbor values at offset (dr, dc); out-of-bounds read as ``fill``."""
    out = np.full(grad.shape, fill)
    h, w = grad.shape
    rs = slice(max(dr, 0), h + min(dr, 0))
    cs = slice(max(dc, 0), w + min(dc, 0))
    rs_src = slice(max(-dr, 0), h + min(-dr, 0))
    cs_src = slice(max(-dc, 0), w + min(-dc, 0))
    out[rs_src, cs_src] = grad[rs, cs]
    return out


def non_max_suppression(grad, theta=None) -> np.ndarray:
    """Keep pixels that are >= both neighbors along the gradient direction.

    Accepts a GradientField or explicit (grad, theta) arrays.  Boundary
    pixels compare against in-bounds neighbors only.  Kept pixels retain
    their magnitude; suppressed pixels become 0.
    """
    if isinstance(grad, GradientField):
        theta = grad.theta
        grad = grad.grad
    grad = np.asarray(grad, dtype=np.float64)
    q = quantize_theta(np.asarray(theta, dtype=np.float64))
    keep = np.zeros(grad.shape, dtype=bool)
    for angle, (off1, off2) in _QUANT_OFFSETS.items():
        sel = q == angle
        n1 = _shifted(grad, *off1)
        n2 = _shifted(grad, *off2)
        keep |= sel & (grad >= n1) & (grad >= n2)
    return np.where(keep, grad, 0.0)


_EIGHT = np.ones((3, 3), dtype=bool)


def hysteresis(nms: np.ndarray, low_thr: float, high_thr: float) -> np.ndarray:
    """Strong pixels (>= high) plus weak pixels (>= low) 8-connected to one."""
    if not 0 <= low_thr <= high_thr:
        raise ConfigError(f"need 0 <= low <= high, got low={low_thr} high={high_thr}")
    nms = np.asarray(nms, dtype=np.float64)
    strong = nms >= high_thr
    candidate = nms >= low_thr
    labels, n = ndi.label(candidate, structure=_EIGHT)
    if n == 0:
        return np.zeros(nms.shape, dtype=bool)
    anchored = np.zeros(n + 1, dtype=bool)
    anchored[np.unique(labels[strong])] = True
    anchored[0] = False
    return anchored[labels]


def default_first_order_ops(size: int = 13, kind: str = "exponential",
                            method: str = "rotational") -> tuple[Operator, ...]:
    """The four directional first-order stencils used by the pipeline."""
    profile = _profile_for_size(size, kind)
    return tuple(build_directional_2d(profile, 1, d, method) for d in DIRECTIONS_2D)


def default_second_order_ops(size: int = 13, kind: str = "gaussian",
                             method: str = "orthogonal") -> tuple[Operator, ...]:
    profile = _profile_for_size(size, kind)
    return tuple(build_directional_2d(profile, 2, d, method) for d in DIRECTIONS_2D)


def default_lot_op(size: int = 13, kind: str = "gaussian") -> Operator:
    return build_lot_2d(_profile_for_size(size, kind))


def _profile_for_size(size: int, kind: str) -> KernelProfile:
    if size < 3 or size % 2 == 0:
        raise ConfigError(f"kernel size must be odd and >= 3, got {size}")
    return KernelProfile(kind, (size - 1) // 2)


def detect_edges_first_order(image, ops, low_thr: float, high_thr: float,
                             padding: str = "replicate") -> EdgeResult:
    """Gradient, suppression, hysteresis; orientation masked to edge pixels."""
    gf = gradient_field(image, ops, padding)
    nms = non_max_suppression(gf)
    edges = hysteresis(nms, low_thr, high_thr)
    return EdgeResult(edges, np.where(edges, gf.theta, 0.0))


def zero_crossings(response: np.ndarray) -> np.ndarray:
    """Mark sign changes in a second-order response.

    A pixel is marked if it is exactly zero with a strictly positive and
    a strictly negative 4-neighbor, or if some 4-neighbor has the
    opposite sign and magnitude at least as large (ties mark both sides).
    """
    g = np.asarray(response, dtype=np.float64)
    pos_nb = np.zeros(g.shape, dtype=bool)
    neg_nb = np.zeros(g.shape, dtype=bool)
    crossing = np.zeros(g.shape, dtype=bool)
    for dr, dc in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        nb = _shifted(g, dr, dc, fill=0.0)  # missing neighbors never trigger
        pos_nb |= nb > 0
        neg_nb |= nb < 0
        crossing |= (g * nb < 0) & (np.abs(g) <= np.abs(nb))
    crossing |= (g == 0) & pos_nb & neg_nb
    return crossing


def detect_edges_lot(image, directional_ops, lot_op: Operator, lot_thr: float,
                     padding: str = "replicate") -> EdgeResult:
    """Second-order pipeline: threshold the radial response, mark
    zero-crossings, orient by the strongest directional response.

    Argmax ties pick the lowest canonical angle.
    """
    image = np.asarray(image, dtype=np.float64)
    if lot_thr < 0:
        raise ConfigError(f"lot threshold must be >= 0, got {lot_thr}")
    grad_l = convolve(image, lot_op, padding)
    grad_l = np.where(np.abs(grad_l) < lot_thr, 0.0, grad_l)
    edges = zero_crossings(grad_l)
    responses = np.stack([convolve(image, op, padding) for op in directional_ops])
    angle_values = np.array([ANGLES[d] for d in DIRECTIONS_2D])
    theta = angle_values[np.argmax(responses, axis=0)]
    return EdgeResult(edges, np.where(edges, theta, 0.0))


# ---------------------------------------------------------------------------
# Reference kernels (drift baselines)

def _gaussian_1d(size: int, sigma: float) -> np.ndarray:
    r = (size - 1) // 2
    offs = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-offs ** 2 / (2.0 * sigma * sigma))
    return g / g.sum()


_SOBEL_X = np.array([[1.0, 0.0, -1.0], [2.0, 0.0, -2.0], [1.0, 0.0, -1.0]])


def gaussian_sobel_gradient(image, size: int, sigma: float | None = None,
                            integer_smoothing: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Classic staged gradient: Gaussian smooth, then 3x3 Sobel.

    ``integer_smoothing`` rounds the smoothed image to the integer grid
    first, as the traditional 8-bit pipelines do; the Sobel signs match
    this module's convention (rising ramp gives a positive response).
    sigma defaults to size/6.
    """
    if size < 3 or size % 2 == 0:
        raise ConfigError(f"kernel size must be odd and >= 3, got {size}")
    if sigma is None:
        sigma = size / 6.0
    image = np.asarray(image, dtype=np.float64)
    g = _gaussian_1d(size, sigma)
    smooth = ndi.convolve(image, np.outer(g, g), mode="nearest")
    if integer_smoothing:
        smooth = np.round(smooth)
    dx = ndi.convolve(smooth, _SOBEL_X, mode="nearest")
    dy = ndi.convolve(smooth, _SOBEL_X.T, mode="nearest")
    return dx, dy


def log_kernel(size: int, sigma: float | None = None) -> Operator:
    """Sampled Laplacian-of-Gaussian, center-negative, truncated as-is.

    No zero-sum correction is applied: the truncation residue is part of
    what the localization comparison measures.  sigma defaults to size/6.
    """
    if size < 3 or size % 2 == 0:
        raise ConfigError(f"kernel size must be odd and >= 3, got {size}")
    if sigma is None:
        sigma = size / 6.0
    r = (size - 1) // 2
    ax = np.arange(-r, r + 1, dtype=np.float64)
    xx, yy = np.meshgrid(ax, ax)
    rho2 = xx * xx + yy * yy
    s2 = sigma * sigma
    w = (rho2 - 2.0 * s2) / (s2 * s2) * np.exp(-rho2 / (2.0 * s2))
    w = w * (-2.0 / w[r, r])  # center -2, matching the radial stencils
    return Operator(w, order=2, direction="laplacian", provenance="preset", name="log")


def detect_edges_gaussian_derivative(image, size: int, low_thr: float, high_thr: float,
                                     sigma: float | None = None,
                                     integer_smoothing: bool = True) -> EdgeResult:
    """Smoothed-Sobel gradient with the shared suppression and hysteresis."""
    dx, dy = gaussian_sobel_gradient(image, size, sigma, integer_smoothing)
    grad = np.sqrt(dx * dx + dy * dy)
    theta = _theta_from(dx, dy)
    nms = non_max_suppression(grad, theta)
    edges = hysteresis(nms, low_thr, high_thr)
    return EdgeResult(edges, np.where(edges, theta, 0.0))


def detect_edges_log(image, size: int, lot_thr: float, sigma: float | None = None,
                     padding: str = "replicate") -> EdgeResult:
    """Laplacian-of-Gaussian with the shared threshold and zero-crossing stages."""
    image = np.asarray(image, dtype=np.float64)
    op = log_kernel(size, sigma)
    grad_l = convolve(image, op, padding)
    grad_l = np.where(np.abs(grad_l) < lot_thr, 0.0, grad_l)
    edges = zero_crossings(grad_l)
    return EdgeResult(edges, np.zeros(image.shape))


def percentile_threshold(values: np.ndarray, spec: str | float) -> float:
    """Resolve 'p<NN>' strings against |values|; numbers pass through."""
    if isinstance(spec, str):
        if not spec.startswith("p"):
            raise ConfigError(f"threshold must be a number or 'p<percentile>', got {spec!r}")
        try:
            q = float(spec[1:])
        except ValueError:
            raise ConfigError(f"bad percentile threshold {spec!r}") from None
        if not 0 <= q <= 100:
            raise ConfigError(f"percentile {q} out of range 0..100")
        return float(np.percentile(np.abs(values), q))
    return float(spec)
