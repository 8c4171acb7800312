"""Dense convolution of rank-1/2/3 arrays with operators.

True convolution (kernel flipped relative to correlation):
``out[p] = sum_q w[q] * in[p - q]``.  Accumulation is double precision
and single-threaded with a fixed summation order, so results are
deterministic.  NaNs in the input propagate to every output whose
footprint touches them.
"""

import numpy as np
import scipy.ndimage as ndi

from .errors import ConfigError, ShapeError
from .operators import Operator

PADDINGS = ("replicate", "reflect", "zero", "valid")

_NDI_MODE = {"replicate": "nearest", "reflect": "reflect", "zero": "constant"}

_AXIS_FOR_TAG = {"t": 0, "y": 1, "x": 2}


def _resolve_axis(op: Operator, ndim: int, axis: int | None) -> int:
    if axis is not None:
        if not -ndim <= axis < ndim:
            raise ShapeError(f"axis {axis} out of range for rank-{ndim} input")
        return axis % ndim
    if ndim == 1:
        return 0
    tag = op.direction
    if tag in _AXIS_FOR_TAG and _AXIS_FOR_TAG[tag] < ndim:
        return _AXIS_FOR_TAG[tag]
    raise ShapeError(
        f"rank-1 operator on rank-{ndim} input needs an axis tag (x/y/t) or explicit axis"
    )


def convolve(data: np.ndarray, op: Operator, padding: str = "replicate",
             axis: int | None = None) -> np.ndarray:
    """Convolve ``data`` with ``op`` under the given boundary policy.

    A rank-1 operator applied to a higher-rank input convolves along its
    tagged axis only.  "valid" output shrinks by 2*radius along every
    convolved axis; all other paddings preserve shape.
    """
    if padding not in PADDINGS:
        raise ConfigError(f"unknown padding {padding!r}; expected one of {PADDINGS}")
    x = np.asarray(data, dtype=np.float64)
    w = op.weights
    r = op.radius
    if w.ndim > x.ndim:
        raise ShapeError(f"operator rank {w.ndim} exceeds input rank {x.ndim}")

    if w.ndim == 1 and x.ndim > 1:
        ax = _resolve_axis(op, x.ndim, axis)
        if padding == "valid":
            if x.shape[ax] < w.shape[0]:
                raise ShapeError(
                    f"valid convolution needs extent >= {w.shape[0]} on axis {ax}, "
                    f"got {x.shape[ax]}"
                )
            out = ndi.convolve1d(x, w, axis=ax, mode="constant")
            sl = [slice(None)] * x.ndim
            sl[ax] = slice(r, x.shape[ax] - r)
            return out[tuple(sl)]
        return ndi.convolve1d(x, w, axis=ax, mode=_NDI_MODE[padding])

    if w.ndim != x.ndim:
        raise ShapeError(f"rank-{w.ndim} operator on rank-{x.ndim} input is not supported")

    if x.ndim == 1:
        if padding == "valid":
            if x.shape[0] < w.shape[0]:
                raise ShapeError(
                    f"valid convolution needs length >= {w.shape[0]}, got {x.shape[0]}"
                )
            return np.convolve(x, w, mode="valid")
        pad_mode = {"replicate": "edge", "reflect": "symmetric", "zero": "constant"}[padding]
        padded = np.pad(x, r, mode=pad_mode)
        return np.convolve(padded, w, mode="valid")

    if padding == "valid":
        if any(n < m for n, m in zip(x.shape, w.shape)):
            raise ShapeError(f"valid convolution needs extents >= {w.shape}, got {x.shape}")
        out = ndi.convolve(x, w, mode="constant")
        sl = tuple(slice(rad, n - rad) for rad, n in
                   (((m - 1) // 2, n) for m, n in zip(w.shape, x.shape)))
        return out[sl]
    return ndi.convolve(x, w, mode=_NDI_MODE[padding])


def valid_region(input_shape: tuple[int, ...] | int, op: Operator,
                 axis: int | None = None) -> list[tuple[int, int]]:
    """Index window per axis untouched by padding: [radius, extent - radius).

    Non-convolved axes get their full range.  A window with stop <= start
    is empty (the input is shorter than the operator), which is not an
    error.
    """
    shape = (input_shape,) if isinstance(input_shape, int) else tuple(input_shape)
    ndim = len(shape)
    w = op.weights
    if w.ndim == 1 and ndim > 1:
        ax = _resolve_axis(op, ndim, axis)
        radii = [0] * ndim
        radii[ax] = op.radius
    elif w.ndim == ndim:
        radii = [(m - 1) // 2 for m in w.shape]
    else:
        raise ShapeError(f"rank-{w.ndim} operator on rank-{ndim} input is not supported")
    return [(rad, n - rad) for rad, n in zip(radii, shape)]
