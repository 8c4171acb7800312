"""Construction of discrete TGD stencils in 1, 2, and 3 dimensions.

All constructed operators obey the defining constraints of the family:
first-order stencils are zero-sum and point-antisymmetric with the
positive lobe on the negative-offset side; second-order stencils are
zero-sum with non-negative off-center weights; weight magnitudes decay
monotonically away from the center.  First-order operators are scaled so
the positive weights sum to 1, second-order operators so the center (or
center line) equals -2.
"""

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, OperatorNotFoundError, ShapeError

KINDS = ("gaussian", "exponential", "linear")
DIRECTIONS_2D = ("0", "45", "90", "135")
AXES_3D = ("x", "y", "t")


@dataclass(frozen=True)
class KernelProfile:
    """Positive, monotonically decaying weight profile k(d), d = 0..radius.

    ``shape`` is the Gaussian sigma or the exponential decay rate; it is
    ignored for the linear kind.  Defaults (sigma = r/3, rate = 3/r) put
    the boundary weight near exp(-4.5) so truncation is negligible.
    """

    kind: str
    radius: int
    shape: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown profile kind {self.kind!r}; expected one of {KINDS}")
        if self.radius < 1:
            raise ConfigError(f"profile radius must be >= 1, got {self.radius}")
        if self.shape is not None and self.shape <= 0:
            raise ConfigError(f"profile shape parameter must be > 0, got {self.shape}")

    @property
    def shape_param(self) -> float:
        if self.shape is not None:
            return self.shape
        if self.kind == "gaussian":
            return self.radius / 3.0
        if self.kind == "exponential":
            return 3.0 / self.radius
        return 1.0  # linear: unused

    def value(self, d: int | float) -> float:
        """Profile value at integer offset d (|d| <= radius)."""
        if abs(d) > self.radius:
            raise ConfigError(f"offset {d} outside profile radius {self.radius}")
        if self.kind == "gaussian":
            s = self.shape_param
            return math.exp(-(d * d) / (2.0 * s * s))
        if self.kind == "exponential":
            return math.exp(-self.shape_param * abs(d))
        return self.radius + 1.0 - abs(d)

    def values(self, start: int, stop: int) -> np.ndarray:
        return np.array([self.value(d) for d in range(start, stop)])


def profile_value(profile: KernelProfile, d: int) -> float:
    return profile.value(d)


@dataclass(frozen=True)
class Operator:
    """A dense difference stencil with odd extent along every axis.

    ``order`` is 1 or 2, ``direction`` tags the differentiated axis or
    angle ("x", "y", "t", "0", "45", "90", "135", "laplacian") and
    ``provenance`` is "constructed" for operators built from a profile or
    "preset" for verbatim literal weights.
    """

    weights: np.ndarray
    order: int
    direction: str | None = None
    provenance: str = "constructed"
    name: str = ""

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if any(n % 2 == 0 for n in w.shape):
            raise ConfigError(f"operator extents must be odd, got {w.shape}")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        if self.order not in (1, 2):
            raise ConfigError(f"operator order must be 1 or 2, got {self.order}")

    @property
    def rank(self) -> int:
        return self.weights.ndim

    @property
    def radius(self) -> int:
        return (self.weights.shape[-1] - 1) // 2

    @property
    def extent(self) -> tuple[int, ...]:
        return self.weights.shape


def _check_radius(profile: KernelProfile):
    if profile.radius < 1:
        raise ConfigError(f"cannot build operator with radius {profile.radius}")


def _first_order_halves(profile: KernelProfile) -> np.ndarray:
    """k(1..r) scaled so the positive half sums to 1."""
    k = profile.values(1, profile.radius + 1)
    return k / k.sum()


def build_first_order_1d(profile: KernelProfile, direction: str | None = None) -> Operator:
    """Antisymmetric first-order stencil: +k(i) at offset -i, -k(i) at +i, 0 center."""
    _check_radius(profile)
    r = profile.radius
    k = _first_order_halves(profile)
    w = np.zeros(2 * r + 1)
    w[:r] = k[::-1]
    w[r + 1:] = -k
    return Operator(w, order=1, direction=direction)


def build_second_order_1d(profile: KernelProfile, direction: str | None = None) -> Operator:
    """Symmetric second-order stencil: k(i) at offsets +-i, center fixed at -2."""
    _check_radius(profile)
    r = profile.radius
    k = profile.values(1, r + 1)
    k = k / k.sum()
    w = np.zeros(2 * r + 1)
    w[:r] = k[::-1]
    w[r + 1:] = k
    w[r] = -2.0
    return Operator(w, order=2, direction=direction)


def smoothing_profile(profile: KernelProfile) -> np.ndarray:
    """Normalized low-pass profile s(j) = k(|j|) / sum(k), j = -r..r."""
    r = profile.radius
    s = np.array([profile.value(abs(j)) for j in range(-r, r + 1)])
    return s / s.sum()


def _normalize(w: np.ndarray, order: int) -> np.ndarray:
    # fsum: normalization independent of cell ordering, so grid rotations
    # of the same construction stay bitwise identical
    if order == 1:
        pos = math.fsum(w[w > 0])
        return w / pos
    mid = tuple(n // 2 for n in w.shape)
    out = w * (-2.0 / w[mid])
    out[mid] = -2.0  # exact, not scaled-and-rounded
    return out


def _rotate45_diagonal(w: np.ndarray) -> np.ndarray:
    """Rotate a 2D stencil by 45 degrees on the diagonal lattice.

    Cell at offset (u, v) moves to (u - v, u + v); offsets falling outside
    the original square support are clipped, and the clipped mass is put
    back proportionally onto the retained weights of the same sign so the
    total of each sign class (hence the zero sum) is preserved.
    """
    n = w.shape[0]
    r = (n - 1) // 2
    out = np.zeros_like(w)
    clipped_pos = 0.0
    clipped_neg = 0.0
    for row in range(n):
        for col in range(n):
            val = w[row, col]
            if val == 0.0:
                continue
            u, v = col - r, row - r
            u2, v2 = u - v, u + v
            if abs(u2) <= r and abs(v2) <= r:
                out[v2 + r, u2 + r] += val
            elif val > 0:
                clipped_pos += val
            else:
                clipped_neg += val
    pos = math.fsum(out[out > 0])
    neg = math.fsum(out[out < 0])
    if clipped_pos and pos:
        out[out > 0] *= (pos + clipped_pos) / pos
    if clipped_neg and neg:
        out[out < 0] *= (neg + clipped_neg) / neg
    return out


_HALF_SQRT2 = math.sqrt(0.5)

# (x, y) unit vector of the differentiated axis; y grows with row index.
# Exact component values keep the four constructions bitwise symmetric
# under 90-degree grid rotation.
_DIRECTION_UNIT = {
    "0": (1.0, 0.0),
    "45": (_HALF_SQRT2, _HALF_SQRT2),
    "90": (0.0, 1.0),
    "135": (-_HALF_SQRT2, _HALF_SQRT2),
}


def build_directional_2d(
    profile: KernelProfile,
    order: int,
    direction: str,
    method: str = "rotational",
) -> Operator:
    """Directional 2D stencil for one of the four canonical angles.

    ``orthogonal`` takes the outer product of the 1D stencil along the
    differentiated axis with the smoothing profile along the other, then
    moves to the diagonal lattice for 45/135.  ``rotational`` samples the
    radial profile on nearest-integer rings weighted by the cosine of the
    angle to the operator axis (first order keeps the signed cosine, so
    the stencil is point-antisymmetric with a hard zero on the
    perpendicular; second order takes its magnitude and forces the zero
    sum through the center weight).
    """
    if direction not in DIRECTIONS_2D:
        raise ConfigError(f"unsupported direction {direction!r}; expected one of {DIRECTIONS_2D}")
    if method not in ("rotational", "orthogonal"):
        raise ConfigError(f"unknown construction method {method!r}")
    _check_radius(profile)
    r = profile.radius

    if method == "orthogonal":
        base = (build_first_order_1d if order == 1 else build_second_order_1d)(profile)
        smooth = smoothing_profile(profile)
        if direction in ("0", "45"):
            w = np.outer(smooth, base.weights)  # rows smoothed, columns differentiated
        else:
            w = np.outer(base.weights, smooth)
        if direction in ("45", "135"):
            w = _rotate45_diagonal(w)
    else:
        ux, uy = _DIRECTION_UNIT[direction]
        w = np.zeros((2 * r + 1, 2 * r + 1))
        for row in range(2 * r + 1):
            for col in range(2 * r + 1):
                x, y = col - r, row - r
                if x == 0 and y == 0:
                    continue
                rho = math.hypot(x, y)
                ring = round(rho)
                if ring > r:
                    continue
                cos_phi = (x * ux + y * uy) / rho
                if order == 1:
                    w[row, col] = -profile.value(ring) * cos_phi
                else:
                    w[row, col] = profile.value(ring) * abs(cos_phi)
        if order == 2:
            w[r, r] = -math.fsum(w.ravel())

    w = _normalize(w, order) + 0.0  # clear negative zeros
    return Operator(w, order=order, direction=direction)


def build_lot_2d(profile: KernelProfile) -> Operator:
    """Radial second-order 2D stencil, negative only at the center.

    Off-center weight is k(ring) on nearest-integer rings up to the
    radius; the center weight is minus the off-center total, then the
    whole grid is scaled so the center equals -2.
    """
    _check_radius(profile)
    r = profile.radius
    w = np.zeros((2 * r + 1, 2 * r + 1))
    for row in range(2 * r + 1):
        for col in range(2 * r + 1):
            x, y = col - r, row - r
            if x == 0 and y == 0:
                continue
            ring = round(math.hypot(x, y))
            if ring <= r:
                w[row, col] = profile.value(ring)
    w[r, r] = -math.fsum(w.ravel())
    w = _normalize(w, 2)
    return Operator(w, order=2, direction="laplacian")


def build_first_order_3d(profile: KernelProfile, axis: str) -> Operator:
    """Separable 3D first-order stencil (t, y, x layout).

    The 1D first-order stencil runs along ``axis`` and the normalized
    smoothing profile along both orthogonal axes.
    """
    if axis not in AXES_3D:
        raise ConfigError(f"unknown axis {axis!r}; expected one of {AXES_3D}")
    _check_radius(profile)
    base = build_first_order_1d(profile).weights
    s = smoothing_profile(profile)
    parts = {"t": s, "y": s, "x": s}
    parts[axis] = base
    w = np.einsum("i,j,k->ijk", parts["t"], parts["y"], parts["x"])
    w = _normalize(w, 1)
    return Operator(w, order=1, direction=axis)


_PRESET_T_GAUSSIAN_15 = (
    np.array([1, 3, 8, 18, 32, 50, 64, 0, -64, -50, -32, -18, -8, -3, -1], dtype=np.float64)
    / 131.0
)
_PRESET_R_GAUSSIAN_15 = (
    np.array([1, 3, 8, 18, 32, 50, 64, -356, 64, 50, 32, 18, 8, 3, 1], dtype=np.float64)
    / 178.0
)

_PRESETS = {
    "T_Gaussian_15": (_PRESET_T_GAUSSIAN_15, 1),
    "R_Gaussian_15": (_PRESET_R_GAUSSIAN_15, 2),
}


def preset(name: str) -> Operator:
    """Literal published stencils, kept verbatim (R_Gaussian_15 does not
    sum exactly to zero; it is reproduced digit for digit anyway)."""
    try:
        weights, order = _PRESETS[name]
    except KeyError:
        raise OperatorNotFoundError(
            f"unknown preset {name!r}; available: {sorted(_PRESETS)}"
        ) from None
    return Operator(weights, order=order, provenance="preset", name=name)


def preset_names() -> tuple[str, ...]:
    return tuple(sorted(_PRESETS))


def to_text(op: Operator) -> str:
    """Serialize to the ``tgd-op v1`` plain-text grid format.

    Header: ``tgd-op v1 <rank> <order> <extent...>``; weights follow in
    row-major order, 17 significant digits (exact float64 round-trip).
    """
    header = f"tgd-op v1 {op.rank} {op.order} " + " ".join(str(n) for n in op.extent)
    flat = op.weights.ravel()
    lines = [header]
    row_len = op.extent[-1]
    for start in range(0, flat.size, row_len):
        lines.append(" ".join(f"{v:.17g}" for v in flat[start:start + row_len]))
    return "\n".join(lines) + "\n"


def from_text(text: str, source: str = "<string>") -> Operator:
    """Parse the ``tgd-op v1`` format; inverse of :func:`to_text`."""
    stream = io.StringIO(text)
    header = stream.readline()
    fields = header.split()
    if len(fields) < 4 or fields[0] != "tgd-op" or fields[1] != "v1":
        raise DataError(f"{source}: byte 0: not a tgd-op v1 header: {header.strip()!r}")
    try:
        rank = int(fields[2])
        order = int(fields[3])
        extent = tuple(int(f) for f in fields[4:])
    except ValueError as exc:
        raise DataError(f"{source}: byte 0: bad header field: {exc}") from None
    if len(extent) != rank:
        raise DataError(f"{source}: byte 0: header declares rank {rank} but {len(extent)} extents")
    body = stream.read()
    tokens = body.split()
    expected = int(np.prod(extent))
    if len(tokens) != expected:
        offset = len(header.encode())
        raise DataError(
            f"{source}: byte {offset}: expected {expected} weights, found {len(tokens)}"
        )
    try:
        flat = np.array([float(t) for t in tokens])
    except ValueError as exc:
        offset = len(header.encode())
        raise DataError(f"{source}: byte {offset}: bad weight value: {exc}") from None
    return Operator(flat.reshape(extent), order=order, provenance="preset")
