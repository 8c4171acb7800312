"""Spatio-temporal edge detection on frame sequences (t, y, x layout).

One invocation analyzes one temporal window at its center frame: spatial
responses come from 3D stencils, temporal responses from per-pixel 1D
stencils, static edges from the thinned and thresholded spatial
gradient, kinetic edges from thresholded temporal responses, and the
merge view encodes both in HSV.
"""

import math
from dataclasses import dataclass

import numpy as np

from .conv import convolve
from .edge2d import _theta_from, hysteresis, non_max_suppression
from .errors import ConfigError, ShapeError
from .operators import Operator


@dataclass(frozen=True)
class FrameSequence:
    """A (t, y, x) volume plus the copy/skip bookkeeping that produced it."""

    frames: np.ndarray
    effective_count: int
    repeat: int = 1
    stride: int = 1

    def __post_init__(self):
        f = np.asarray(self.frames, dtype=np.float64)
        if f.ndim != 3:
            raise ShapeError(f"frame sequence must be rank 3 (t, y, x), got rank {f.ndim}")
        f = f.copy()
        f.flags.writeable = False
        object.__setattr__(self, "frames", f)


@dataclass(frozen=True)
class Edge3DResult:
    static: np.ndarray       # binary static-edge map at the center frame
    kinetic: np.ndarray      # binary kinetic-edge map
    theta_xy: np.ndarray     # spatial gradient angle
    merge: np.ndarray        # HSV visualization as uint8 RGB
    dt: np.ndarray           # first-order temporal response
    d2t: np.ndarray          # second-order temporal response


def scale_time(frames, repeat: int = 1, stride: int = 1) -> FrameSequence:
    """Skip frames by ``stride``, then duplicate each ``repeat`` times."""
    if repeat < 1 or stride < 1:
        raise ConfigError(f"repeat and stride must be >= 1, got {repeat}, {stride}")
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 3:
        raise ShapeError(f"frame sequence must be rank 3 (t, y, x), got rank {frames.ndim}")
    kept = frames[::stride]
    if kept.shape[0] < 1:
        raise ConfigError("no frames left after stride")
    scaled = np.repeat(kept, repeat, axis=0)
    return FrameSequence(scaled, effective_count=kept.shape[0], repeat=repeat, stride=stride)


def detect_3d(seq: FrameSequence, op_x: Operator, op_y: Operator,
              op_t: Operator, op_tt: Operator,
              motion_thr1: float, motion_thr2: float,
              low_thr: float, high_thr: float) -> Edge3DResult:
    """Static and kinetic edges of the window's center frame.

    ``op_x``/``op_y`` are 3D first-order stencils, ``op_t``/``op_tt``
    1D temporal stencils applied per pixel.  Kinetic pixels satisfy
    |dt| > motion_thr1 or |d2t| > motion_thr2; static edges run through
    the shared suppression and hysteresis stages.
    """
    if min(motion_thr1, motion_thr2, low_thr) < 0:
        raise ConfigError("thresholds must be >= 0")
    vol = seq.frames
    t_extents = [op.extent[0] for op in (op_x, op_y)] + \
                [op.extent[0] for op in (op_t, op_tt)]
    if vol.shape[0] < max(t_extents):
        raise ShapeError(
            f"window has {vol.shape[0]} frames; operators need >= {max(t_extents)}"
        )
    center = vol.shape[0] // 2
    dx = convolve(vol, op_x)[center]
    dy = convolve(vol, op_y)[center]
    dt = convolve(vol, op_t, axis=0)[center]
    d2t = convolve(vol, op_tt, axis=0)[center]
    grad = np.sqrt(dx * dx + dy * dy)
    theta = _theta_from(dx, dy)
    nms = non_max_suppression(grad, theta)
    static = hysteresis(nms, low_thr, high_thr)
    kinetic = (np.abs(dt) > motion_thr1) | (np.abs(d2t) > motion_thr2)
    merge = hsv_merge(theta, kinetic, static)
    return Edge3DResult(static, kinetic, theta, merge, dt, d2t)


def _hsv_to_rgb(h, s, v):
    """Vectorized HSV (h in degrees) to uint8 RGB."""
    h = np.asarray(h, dtype=np.float64) % 360.0
    s = np.asarray(s, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    c = v * s
    hp = h / 60.0
    x = c * (1.0 - np.abs(hp % 2.0 - 1.0))
    zeros = np.zeros_like(c)
    sector = np.floor(hp).astype(int) % 6
    r = np.choose(sector, [c, x, zeros, zeros, x, c])
    g = np.choose(sector, [x, c, c, x, zeros, zeros])
    b = np.choose(sector, [zeros, zeros, x, c, c, x])
    m = v - c
    rgb = np.stack([r + m, g + m, b + m], axis=-1)
    return np.round(rgb * 255.0).astype(np.uint8)


def hsv_merge(theta_xy: np.ndarray, kinetic: np.ndarray, static: np.ndarray) -> np.ndarray:
    """Fuse edge classes into one color image.

    Static pixels: hue from the gradient angle (theta -pi/2..pi/2 mapped
    to 0..360 degrees), full saturation and value.  Kinetic-only pixels:
    white.  Pixels both static and kinetic: angle hue at half saturation.
    Background: black.
    """
    theta_xy = np.asarray(theta_xy, dtype=np.float64)
    kinetic = np.asarray(kinetic, dtype=bool)
    static = np.asarray(static, dtype=bool)
    if not (theta_xy.shape == kinetic.shape == static.shape):
        raise ShapeError("theta/kinetic/static extents differ")
    hue = (theta_xy + math.pi / 2.0) / math.pi * 360.0
    sat = np.zeros(theta_xy.shape)
    val = np.zeros(theta_xy.shape)
    sat[static] = 1.0
    val[static] = 1.0
    val[kinetic] = 1.0
    sat[kinetic & static] = 0.5
    sat[kinetic & ~static] = 0.0
    return _hsv_to_rgb(hue, sat, val)
