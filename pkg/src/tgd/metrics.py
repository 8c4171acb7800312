"""Quality metrics, controlled noise injection, and synthetic test data.

Conventions pinned here: PSNR's MAX defaults to the maximum of the
reference signal; SSIM uses whole-signal statistics with population
(1/N) variance and L defaulting to the reference dynamic range; signal
power is the mean square.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .rng import SplitMix64

K1 = 0.01
K2 = 0.03


def _check_same_length(x: np.ndarray, y: np.ndarray):
    if x.shape != y.shape:
        raise ShapeError(f"shape mismatch: {x.shape} vs {y.shape}")


def rmse(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_same_length(x, y)
    return float(np.sqrt(np.mean((x - y) ** 2)))


def psnr(x, y, max_value: float | None = None) -> float:
    """20*log10(MAX / rmse); MAX defaults to max(x) of the reference x.

    Identical signals give +inf rather than an error.
    """
    x = np.asarray(x, dtype=np.float64)
    err = rmse(x, y)
    if max_value is None:
        max_value = float(np.max(x))
    if err == 0.0:
        return math.inf
    return 20.0 * math.log10(max_value / err)


def ssim(x, y, dynamic_range: float | None = None) -> float:
    """Structural similarity from whole-signal statistics.

    Population (1/N) variance and covariance; ``dynamic_range`` (L)
    defaults to max(x) - min(x) of the reference.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_same_length(x, y)
    if x.size < 2:
        raise ShapeError("ssim needs at least 2 samples")
    L = float(np.max(x) - np.min(x)) if dynamic_range is None else float(dynamic_range)
    if L == 0.0:
        L = 1.0  # degenerate constant reference
    c1 = (K1 * L) ** 2
    c2 = (K2 * L) ** 2
    mx, my = x.mean(), y.mean()
    vx = np.mean((x - mx) ** 2)
    vy = np.mean((y - my) ** 2)
    cov = np.mean((x - mx) * (y - my))
    return float(((2 * mx * my + c1) * (2 * cov + c2))
                 / ((mx * mx + my * my + c1) * (vx + vy + c2)))


def power(x) -> float:
    """Mean square of the samples."""
    x = np.asarray(x, dtype=np.float64)
    return float(np.mean(x ** 2))


def snr_db(signal, noise) -> float:
    signal = np.asarray(signal, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    _check_same_length(signal, noise)
    p_noise = power(noise)
    if p_noise == 0.0:
        return math.inf
    return 10.0 * math.log10(power(signal) / p_noise)


@dataclass(frozen=True)
class NoiseSpec:
    """Additive noise: Gaussian or uniform, sized by sigma or target SNR.

    For uniform noise ``sigma`` is the standard deviation, i.e. the draw
    is U(-a, a) with a = sigma * sqrt(3).  Exactly one of ``sigma`` /
    ``target_snr_db`` must be set.
    """

    kind: str = "gaussian"
    sigma: float | None = None
    target_snr_db: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("gaussian", "uniform"):
            raise ConfigError(f"unknown noise kind {self.kind!r}")
        if (self.sigma is None) == (self.target_snr_db is None):
            raise ConfigError("set exactly one of sigma / target_snr_db")
        if self.sigma is not None and self.sigma <= 0:
            raise ConfigError("sigma must be > 0")


def add_noise(x, spec: NoiseSpec) -> tuple[np.ndarray, np.ndarray]:
    """Return (noisy, noise) for the given spec; deterministic per seed."""
    x = np.asarray(x, dtype=np.float64)
    gen = SplitMix64(spec.seed)
    if spec.kind == "gaussian":
        draw = gen.normal(x.size).reshape(x.shape)
    else:
        draw = (2.0 * gen.uniform(x.size) - 1.0).reshape(x.shape) * math.sqrt(3.0)
    if spec.sigma is not None:
        noise = draw * spec.sigma
    else:
        p_draw = power(draw)
        target = power(x) / (10.0 ** (spec.target_snr_db / 10.0))
        noise = draw * math.sqrt(target / p_draw)
    return x + noise, noise


@dataclass(frozen=True)
class MetricReport:
    rmse: float
    psnr_db: float
    ssim: float
    snr_db: float | None = None
    max_value: float = 0.0
    dynamic_range: float = 0.0

    @property
    def c1(self) -> float:
        return (K1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (K2 * self.dynamic_range) ** 2

    def csv_line(self) -> str:
        snr = "" if self.snr_db is None else f"{self.snr_db:.6f}"
        return (f"{self.rmse:.10g},{self.psnr_db:.6f},{self.ssim:.8f},{snr},"
                f"{self.max_value:.10g},{self.dynamic_range:.10g}")

    @staticmethod
    def csv_header() -> str:
        return "rmse,psnr_db,ssim,snr_db,max_value,dynamic_range"

    def __str__(self):
        lines = [
            f"rmse          {self.rmse:.6f}",
            f"psnr_db       {self.psnr_db:.4f}",
            f"ssim          {self.ssim:.6f}",
        ]
        if self.snr_db is not None:
            lines.append(f"snr_db        {self.snr_db:.4f}")
        lines.append(f"max_value     {self.max_value:.6f}")
        lines.append(f"dynamic_range {self.dynamic_range:.6f}")
        return "\n".join(lines)


def report(reference, estimate, noise=None) -> MetricReport:
    """Bundle rmse/psnr/ssim (and snr if the noise is known)."""
    reference = np.asarray(reference, dtype=np.float64)
    max_value = float(np.max(reference))
    dyn = float(np.max(reference) - np.min(reference))
    return MetricReport(
        rmse=rmse(reference, estimate),
        psnr_db=psnr(reference, estimate),
        ssim=ssim(reference, estimate),
        snr_db=None if noise is None else snr_db(reference, noise),
        max_value=max_value,
        dynamic_range=dyn,
    )


def synth_signal(which: str, n_start: int = 0, n_stop: int = 1000) -> np.ndarray:
    """Clean benchmark signals sampled at integer n in [n_start, n_stop].

    X1(n) = 20*sin(n/40) + n^2/20000
    X2(n) = arctan((n-500)/40) + n^2/20000
    """
    n = np.arange(n_start, n_stop + 1, dtype=np.float64)
    if which == "X1":
        return 20.0 * np.sin(n / 40.0) + n * n / 20000.0
    if which == "X2":
        return np.arctan((n - 500.0) / 40.0) + n * n / 20000.0
    raise ConfigError(f"unknown signal {which!r}; expected X1 or X2")


@dataclass(frozen=True)
class Phantom:
    """Synthetic image or frame sequence with machine-checkable ground truth."""

    data: np.ndarray
    truth: dict

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        d.flags.writeable = False
        object.__setattr__(self, "data", d)


def _logistic(z):
    return 1.0 / (1.0 + np.exp(-z))


def synth_phantom(kind: str, **params) -> Phantom:
    """Deterministic phantoms for edge and motion pipelines.

    Kinds: step, ramp, sigmoid-edge, text-stroke, moving-square, pendulum.
    """
    builders = {
        "step": _phantom_step,
        "ramp": _phantom_ramp,
        "sigmoid-edge": _phantom_sigmoid_edge,
        "text-stroke": _phantom_text_stroke,
        "moving-square": _phantom_moving_square,
        "pendulum": _phantom_pendulum,
    }
    try:
        builder = builders[kind]
    except KeyError:
        raise ConfigError(f"unknown phantom kind {kind!r}; expected one of {sorted(builders)}")
    return builder(**params)


def _check_dims(*dims):
    if any(d < 1 for d in dims):
        raise ConfigError(f"degenerate phantom dimensions {dims}")


def _phantom_step(height=64, width=64, edge_col=32, low=0.0, high=255.0) -> Phantom:
    _check_dims(height, width, edge_col)
    img = np.full((height, width), low)
    img[:, edge_col:] = high
    return Phantom(img, {"edge_col": edge_col, "low": low, "high": high})


def _phantom_ramp(height=64, width=64, center_col=32, ramp_width=3,
                  low=0.0, high=255.0) -> Phantom:
    _check_dims(height, width, ramp_width)
    cols = np.arange(width, dtype=np.float64)
    t = np.clip((cols - center_col) / ramp_width + 0.5, 0.0, 1.0)
    img = np.tile(low + (high - low) * t, (height, 1))
    return Phantom(img, {"edge_col": center_col, "ramp_width": ramp_width})


def _phantom_sigmoid_edge(height=64, width=64, center_col=32, edge_width=4.0,
                          low=0.0, high=255.0, clip=None) -> Phantom:
    """Logistic edge profile, point-symmetric about (center_col, mid level).

    ``clip=(lo, hi)`` optionally saturates the profile the way an 8-bit
    sensor would, which makes the recorded edge asymmetric while leaving
    the underlying sigmoid centered at ``center_col``.
    """
    _check_dims(height, width)
    cols = np.arange(width, dtype=np.float64)
    row = low + (high - low) * _logistic((cols - center_col) / edge_width)
    if clip is not None:
        row = np.clip(row, clip[0], clip[1])
    img = np.tile(row, (height, 1))
    return Phantom(img, {"edge_col": center_col, "edge_width": edge_width})


def _phantom_text_stroke(height=64, width=64, stroke_cols=(20, 40), stroke_row=32,
                         dark=0.0, bright=255.0) -> Phantom:
    """One-pixel dark strokes on a bright background (two vertical, one
    horizontal), mimicking thin black text."""
    _check_dims(height, width)
    img = np.full((height, width), bright)
    mask = np.zeros((height, width), dtype=bool)
    for col in stroke_cols:
        img[8:-8, col] = dark
        mask[8:-8, col] = True
    img[stroke_row, 8:-8] = dark
    mask[stroke_row, 8:-8] = True
    return Phantom(img, {"stroke_mask": mask})


def _phantom_moving_square(height=64, width=64, frames=5, size=12, velocity=2,
                           start_col=10, top_row=26, brightness=255.0) -> Phantom:
    """Bright square translating left to right on black, constant velocity.

    Truth: per-frame occupancy, the motion mask (pixels occupied in some
    frames but not all), and the always-occupied core.
    """
    _check_dims(height, width, frames, size)
    vol = np.zeros((frames, height, width))
    occupancy = np.zeros((frames, height, width), dtype=bool)
    for t in range(frames):
        c0 = start_col + velocity * t
        vol[t, top_row:top_row + size, c0:c0 + size] = brightness
        occupancy[t, top_row:top_row + size, c0:c0 + size] = True
    union = occupancy.any(axis=0)
    core = occupancy.all(axis=0)
    return Phantom(vol, {
        "occupancy": occupancy,
        "motion_mask": union & ~core,
        "union": union,
        "core": core,
    })


def _phantom_pendulum(height=64, width=64, frames=15, bob_radius=6, amplitude=18,
                      period=30.0, pivot_col=32, bob_row=40, brightness=255.0) -> Phantom:
    """Bright disc swinging horizontally on a black background."""
    _check_dims(height, width, frames, bob_radius)
    vol = np.zeros((frames, height, width))
    occupancy = np.zeros((frames, height, width), dtype=bool)
    rows = np.arange(height)[:, None]
    cols = np.arange(width)[None, :]
    for t in range(frames):
        cx = pivot_col + amplitude * math.sin(2.0 * math.pi * t / period)
        disc = (rows - bob_row) ** 2 + (cols - cx) ** 2 <= bob_radius ** 2
        vol[t][disc] = brightness
        occupancy[t] = disc
    union = occupancy.any(axis=0)
    core = occupancy.all(axis=0)
    return Phantom(vol, {
        "occupancy": occupancy,
        "motion_mask": union & ~core,
        "union": union,
        "core": core,
    })
