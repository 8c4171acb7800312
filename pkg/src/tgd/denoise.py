"""Signal denoising by difference-continuity minimization.

The denoised estimate Y starts at the noisy input X and is optimized
with Adam to minimize

    lambda_1st * L_1st + lambda_2nd * L_2nd + lambda_offset * L_offset

where L_offset is the squared offset sum((Y - X)^2) and each continuity
term penalizes adjacent differences of the first- or second-order
difference responses of Y: sum_j |T[j] - T[j+1]|^p, optionally under the
outer 1/p root (``squared=False``).  Responses are evaluated on the
padding-free valid region only, so no boundary values are invented.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DivergenceError
from .operators import KernelProfile, Operator, build_first_order_1d, build_second_order_1d

HISTORY_COLUMNS = ("epoch", "loss_total", "loss_1st", "loss_2nd", "loss_offset", "lr")


def default_operators(size: int = 51, kind: str = "gaussian") -> tuple[Operator, Operator]:
    """The one first-order and one second-order stencil used by default."""
    if size < 3 or size % 2 == 0:
        raise ConfigError(f"operator size must be odd and >= 3, got {size}")
    profile = KernelProfile(kind, (size - 1) // 2)
    return build_first_order_1d(profile), build_second_order_1d(profile)


@dataclass
class DenoiseConfig:
    lambda_1st: float = 1.0
    lambda_2nd: float = 10.0
    lambda_offset: float = 0.01
    p: int = 2
    squared: bool = True
    first_ops: list = field(default_factory=lambda: [default_operators()[0]])
    second_ops: list = field(default_factory=lambda: [default_operators()[1]])
    epochs: int = 20000
    lr: float = 0.01
    decay_every: int = 10000
    decay_factor: float = 0.1
    seed: int = 0  # reserved; the optimization itself is deterministic

    def __post_init__(self):
        if self.p not in (1, 2, 3):
            raise ConfigError(f"norm exponent p must be 1, 2 or 3, got {self.p}")
        if self.lambda_1st < 0 or self.lambda_2nd < 0 or self.lambda_offset < 0:
            raise ConfigError("loss factors must be >= 0")
        if self.lambda_1st == 0 and self.lambda_2nd == 0 and self.lambda_offset == 0:
            raise ConfigError("at least one loss factor must be > 0")
        if self.lambda_1st > 0 and not self.first_ops:
            raise ConfigError("lambda_1st > 0 requires at least one first-order operator")
        if self.lambda_2nd > 0 and not self.second_ops:
            raise ConfigError("lambda_2nd > 0 requires at least one second-order operator")

    def max_radius(self) -> int:
        ops = list(self.first_ops) + list(self.second_ops)
        return max((op.radius for op in ops), default=0)


def _check_length(n: int, cfg: DenoiseConfig):
    need = 2 * cfg.max_radius() + 2
    if n < need:
        raise ConfigError(f"signal length {n} too short; need >= {need} "
                          f"for the configured operators")


def _continuity_term(y: np.ndarray, op: Operator, p: int, squared: bool) -> float:
    t = np.convolve(y, op.weights, mode="valid")
    d = t[:-1] - t[1:]
    s = float(np.sum(np.abs(d) ** p))
    if squared or s == 0.0:
        return s
    return s ** (1.0 / p)


def loss_terms(y, x, cfg: DenoiseConfig) -> tuple[float, float, float]:
    """(L_1st, L_2nd, L_offset) for the current estimate y against x."""
    y = np.asarray(y, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if y.shape != x.shape:
        raise ConfigError(f"estimate/input length mismatch: {y.shape} vs {x.shape}")
    _check_length(y.size, cfg)
    l1 = sum(_continuity_term(y, op, cfg.p, cfg.squared) for op in cfg.first_ops)
    l2 = sum(_continuity_term(y, op, cfg.p, cfg.squared) for op in cfg.second_ops)
    loff = float(np.sum((y - x) ** 2))
    return l1, l2, loff


def total_loss(terms: tuple[float, float, float], cfg: DenoiseConfig) -> float:
    l1, l2, loff = terms
    return cfg.lambda_1st * l1 + cfg.lambda_2nd * l2 + cfg.lambda_offset * loff


def _continuity_gradient(y: np.ndarray, op: Operator, p: int, squared: bool) -> np.ndarray:
    t = np.convolve(y, op.weights, mode="valid")
    d = t[:-1] - t[1:]
    if p == 1:
        g_d = np.sign(d)
    else:
        g_d = p * np.abs(d) ** (p - 1) * np.sign(d)
    if not squared:
        s = float(np.sum(np.abs(d) ** p))
        if s == 0.0:
            return np.zeros_like(y)
        g_d = g_d * (s ** (1.0 / p - 1.0) / p)
    # adjoint of the forward difference d[j] = t[j] - t[j+1]
    g_t = np.zeros(t.shape[0])
    g_t[:-1] += g_d
    g_t[1:] -= g_d
    # adjoint of the valid convolution: full correlation with the kernel
    return np.convolve(g_t, op.weights[::-1], mode="full")


def loss_gradient(y, x, cfg: DenoiseConfig) -> np.ndarray:
    """Analytic dL/dY (subgradient sign(0) = 0 for p = 1)."""
    y = np.asarray(y, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if y.shape != x.shape:
        raise ConfigError(f"estimate/input length mismatch: {y.shape} vs {x.shape}")
    _check_length(y.size, cfg)
    g = 2.0 * cfg.lambda_offset * (y - x)
    if cfg.lambda_1st > 0:
        for op in cfg.first_ops:
            g += cfg.lambda_1st * _continuity_gradient(y, op, cfg.p, cfg.squared)
    if cfg.lambda_2nd > 0:
        for op in cfg.second_ops:
            g += cfg.lambda_2nd * _continuity_gradient(y, op, cfg.p, cfg.squared)
    return g


def denoise(x, cfg: DenoiseConfig) -> tuple[np.ndarray, np.ndarray]:
    """Run the optimization; returns (denoised, history).

    Y is initialized to X and updated with Adam (beta1=0.9, beta2=0.999,
    eps=1e-8); the learning rate is multiplied by ``decay_factor`` every
    ``decay_every`` epochs.  History rows are (epoch, total, L_1st,
    L_2nd, L_offset, lr) with the loss measured before each update.  The
    run is deterministic.  Aborts if the loss exceeds 1e6 times the
    initial loss.
    """
    x = np.asarray(x, dtype=np.float64)
    _check_length(x.size, cfg)
    y = x.copy()
    m = np.zeros_like(y)
    v = np.zeros_like(y)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    history = np.empty((cfg.epochs, 6))
    initial = None
    for epoch in range(cfg.epochs):
        lr = cfg.lr * cfg.decay_factor ** (epoch // cfg.decay_every)
        terms = loss_terms(y, x, cfg)
        loss = total_loss(terms, cfg)
        history[epoch] = (epoch, loss, terms[0], terms[1], terms[2], lr)
        if initial is None:
            initial = loss
        elif initial > 0 and loss > 1e6 * initial:
            raise DivergenceError(
                f"loss {loss:.6g} at epoch {epoch} exceeds 1e6 x initial loss {initial:.6g}"
            )
        g = loss_gradient(y, x, cfg)
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        t = epoch + 1
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        y -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return y, history


def gaussian_smooth(x, size: int = 51, sigma: float | None = None) -> np.ndarray:
    """Reference smoother: normalized sampled Gaussian, replicate padding."""
    if size < 3 or size % 2 == 0:
        raise ConfigError(f"smoothing size must be odd and >= 3, got {size}")
    x = np.asarray(x, dtype=np.float64)
    r = (size - 1) // 2
    if sigma is None:
        sigma = r / 3.0
    offs = np.arange(-r, r + 1, dtype=np.float64)
    kernel = np.exp(-offs ** 2 / (2.0 * sigma * sigma))
    kernel /= kernel.sum()
    padded = np.pad(x, r, mode="edge")
    return np.convolve(padded, kernel, mode="valid")
