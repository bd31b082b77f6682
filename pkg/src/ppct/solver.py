"""FCSA-LEM: weighted compressed-sensing recovery from pseudo-polar data.

Each iteration takes a weighted gradient (E-) step from the momentum point,

    z = r + alpha^2 A^T (c*y - c*A r),

solves the wavelet-l1 and the TV denoising subproblems at ``z``, blends
their solutions with ``delta = f2 / (f1 + f2)`` and applies FISTA momentum.
``A`` is the pseudo-polar transform; images are real so ``A^T`` keeps the
real part.
"""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DivergenceError, InvalidArgumentError
from .ppfft import _check_coeffs, ppft_adjoint, ppft_forward, spectral_norm_sq
from .priors import (LEVELS, WAVELET, soft_threshold_prox, tv_prox, tv_value, wavelet_l1)

log = logging.getLogger(__name__)

DIVERGENCE_FACTOR = 1e3


@dataclass(frozen=True)
class SolverConfig:
    """Tunables of :func:`fcsa_lem`.

    ``alpha=None`` picks the largest admissible step, ``1/sqrt(sigma_max)``.
    ``lambda1``/``lambda2=None`` default to ``1e-3 * max|A^T(c*y)|``.  A
    regulariser whose lambda is 0 is left out of the splitting altogether.
    """

    alpha: float = None
    lambda1: float = None
    lambda2: float = None
    tol: float = 1e-4
    maxiter: int = 200
    tv_inner_iters: int = 10
    record_history: bool = True
    warm_start: bool = False
    wavelet: str = WAVELET
    levels: int = LEVELS

    def __post_init__(self):
        if self.alpha is not None and not self.alpha > 0:
            raise InvalidArgumentError("alpha must be positive", )
        for name in ("lambda1", "lambda2"):
            v = getattr(self, name)
            if v is not None and not v >= 0:
                raise InvalidArgumentError(f"{name} must be non-negative")
        if not self.tol > 0:
            raise InvalidArgumentError("tol must be positive")
        if int(self.maxiter) < 1:
            raise InvalidArgumentError("maxiter must be at least 1")
        if int(self.tv_inner_iters) < 1:
            raise InvalidArgumentError("tv_inner_iters must be at least 1")


@dataclass
class ReconResult:
    image: np.ndarray
    iterations: int
    f1: list = field(default_factory=list)
    f2: list = field(default_factory=list)
    rel_change: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    seconds: float = 0.0
    converged: bool = False
    config: SolverConfig = None


def _forward(x):
    return ppft_forward(x)


def _adjoint(c):
    return ppft_adjoint(c).real


def e_step(r, y, c, alpha):
    """Latent-variable update ``r + alpha^2 A^T(c*y - c*A r)``."""
    r = np.asarray(r, dtype=float)
    y = _check_coeffs(y)
    c = np.broadcast_to(np.asarray(c, dtype=float), y.shape)
    if r.shape != (y.shape[2], y.shape[2]):
        raise InvalidArgumentError(f"image shape {r.shape} does not match data for n={y.shape[2]}")
    return r + alpha**2 * _adjoint(c * y - c * _forward(r))


def momentum_step(t_k, x_k, x_prev):
    """FISTA extrapolation; returns ``(t_next, r_next)``."""
    if t_k < 1:
        raise InvalidArgumentError("t_k must be >= 1")
    t_next = (1.0 + np.sqrt(1.0 + 4.0 * t_k * t_k)) / 2.0
    return t_next, x_k + ((t_k - 1.0) / t_next) * (x_k - x_prev)


def split_combine(x1, x2, f1, f2):
    """Blend the two subproblem solutions; returns ``(delta, x)``.

    ``delta = f2 / (f1 + f2)`` weights the wavelet solution ``x1``, so the
    solution with the smaller objective gets the larger share.
    """
    delta = f2 / (f1 + f2) if f1 + f2 > 0 else 0.5
    return delta, delta * x1 + (1 - delta) * x2


def step_scale_check(alpha, n):
    """Clamp ``alpha`` so that ``alpha^2 <= 1 / sigma_max(A A^T)``."""
    limit = 1.0 / np.sqrt(spectral_norm_sq(int(n)))
    if alpha > limit * (1 + 1e-12):
        warnings.warn(f"alpha={alpha:.4g} exceeds 1/sqrt(sigma_max)={limit:.4g}; clamped",
                      RuntimeWarning, stacklevel=2)
        return limit
    return float(alpha)


def default_lambda(y, c):
    return 1e-3 * float(np.max(np.abs(_adjoint(c * y))))


def _data_term(c, y, Ax):
    return 0.5 * float(np.sum(np.abs(c * (y - Ax)) ** 2))


def fcsa_lem(y, c, cfg=None):
    """Run the FCSA-LEM iteration.

    Parameters
    ----------
    y : (2, 2n, n) complex
        Pseudo-polar data.
    c : array broadcastable to ``y``
        Error Adaptation Weights (use ``1.0`` for none).
    cfg : SolverConfig

    Returns
    -------
    ReconResult

    Raises
    ------
    DivergenceError
        When the objective exceeds ``1e3`` times its value at zero.
    """
    cfg = cfg or SolverConfig()
    y = _check_coeffs(y)
    if not np.all(np.isfinite(y)):
        raise InvalidArgumentError("data contain non-finite values")
    n = y.shape[2]
    c = np.ascontiguousarray(np.broadcast_to(np.asarray(c, dtype=float), y.shape))
    if np.any(c < 0) or not np.all(np.isfinite(c)):
        raise InvalidArgumentError("weights must be finite and non-negative")
    alpha = step_scale_check(cfg.alpha, n) if cfg.alpha is not None else 1.0 / np.sqrt(spectral_norm_sq(n))
    lam1 = default_lambda(y, c) if cfg.lambda1 is None else cfg.lambda1
    lam2 = default_lambda(y, c) if cfg.lambda2 is None else cfg.lambda2
    a2 = alpha * alpha
    use1, use2 = lam1 > 0, lam2 > 0
    cy = c * y
    f_zero = _data_term(c, y, 0.0)

    t0 = time.perf_counter()
    if cfg.warm_start:
        x0 = _adjoint(c * cy)
        Ax0 = _forward(x0)
        den = float(np.sum(np.abs(c * Ax0) ** 2))
        s = float(np.real(np.vdot(c * Ax0, cy))) / den if den > 0 else 0.0
        x_prev, Ax_prev = s * x0, s * Ax0
    else:
        x_prev, Ax_prev = np.zeros((n, n)), np.zeros_like(y)
    r, Ar = x_prev, Ax_prev
    t = 1.0
    res = ReconResult(image=x_prev, iterations=0, config=replace(cfg, alpha=alpha, lambda1=lam1, lambda2=lam2))
    for k in range(1, int(cfg.maxiter) + 1):
        z = r + a2 * _adjoint(cy - c * Ar)
        if use1 or not use2:
            x1 = soft_threshold_prox(z, lam1 * a2, cfg.levels, cfg.wavelet) if use1 else z
            Ax1 = _forward(x1)
            f1 = _data_term(c, y, Ax1) + (lam1 * wavelet_l1(x1, cfg.levels, cfg.wavelet) if use1 else 0.0)
        if use2:
            x2 = tv_prox(z, lam2 * a2, cfg.tv_inner_iters)
            Ax2 = _forward(x2)
            f2 = _data_term(c, y, Ax2) + lam2 * tv_value(x2)
        if use1 and use2:
            delta, x = split_combine(x1, x2, f1, f2)
            Ax = delta * Ax1 + (1 - delta) * Ax2
            f_now = min(f1, f2)
        elif use2:
            x, Ax, f1, f_now = x2, Ax2, float("nan"), f2
        else:
            x, Ax, f2, f_now = x1, Ax1, float("nan"), f1
        if not np.isfinite(f_now) or f_now > DIVERGENCE_FACTOR * max(f_zero, 1e-300):
            culprit = "alpha" if cfg.alpha is not None else ("lambda1" if use1 else "lambda2")
            raise DivergenceError(
                f"objective grew to {f_now:.3g} (>{DIVERGENCE_FACTOR:g}x initial) at iteration {k}; "
                f"alpha={alpha:.4g}, lambda1={lam1:.4g}, lambda2={lam2:.4g}", parameter=culprit)
        xn = np.linalg.norm(x)
        change = np.linalg.norm(x - x_prev) / xn if xn > 0 else 0.0
        if cfg.record_history or k == 1:
            res.f1.append(f1)
            res.f2.append(f2)
            res.rel_change.append(float(change))
            res.residual.append(np.sqrt(2 * _data_term(c, y, Ax)))
        t_next, r = momentum_step(t, x, x_prev)
        beta = (t - 1.0) / t_next
        Ar = Ax + beta * (Ax - Ax_prev)
        t = t_next
        x_prev, Ax_prev = x, Ax
        res.iterations = k
        if k > 1 and change < cfg.tol:
            res.converged = True
            break
    res.image = x_prev
    res.seconds = time.perf_counter() - t0
    log.debug("fcsa_lem: %d iterations, %.2fs", res.iterations, res.seconds)
    return res


def ista_baseline(y, cfg=None):
    """Unweighted wavelet soft thresholding with the same operator and momentum."""
    cfg = cfg or SolverConfig()
    y = _check_coeffs(y)
    lam1 = cfg.lambda1 if cfg.lambda1 is not None else default_lambda(y, 1.0)
    return fcsa_lem(y, 1.0, replace(cfg, lambda1=lam1, lambda2=0.0))
