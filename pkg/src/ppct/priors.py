"""Wavelet-sparsity and total-variation regularisers and their proxes.

Both proxes solve ``argmin_x 0.5 * ||x - z||^2 + tau * R(x)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import pywt
import scipy.fft as sfft

from .errors import InvalidArgumentError

WAVELET = "db4"
LEVELS = 4


@dataclass
class WaveletCoeffs:
    """All ``n*n`` coefficients packed into one array, plus the band layout."""

    array: np.ndarray
    slices: list
    levels: int
    wavelet: str = WAVELET

    @property
    def bands(self):
        return pywt.array_to_coeffs(self.array, self.slices, output_format="wavedec2")


def max_levels(n):
    """Deepest decomposition allowed for side ``n``."""
    k = 0
    while n % 2 == 0 and n > 1:
        n //= 2
        k += 1
    return k


def _check_depth(n, levels):
    if levels < 1 or n % (2**levels):
        raise InvalidArgumentError(f"side {n} is not divisible by 2**{levels}")


def dwt_forward(img, levels=LEVELS, wavelet=WAVELET):
    """Orthonormal periodic 2-D wavelet analysis."""
    img = np.asarray(img, dtype=float)
    _check_depth(img.shape[0], levels)
    with warnings.catch_warnings():
        # deep levels on small images only trigger pywt's boundary warning
        warnings.simplefilter("ignore", UserWarning)
        coeffs = pywt.wavedec2(img, wavelet, mode="periodization", level=levels)
    arr, slices = pywt.coeffs_to_array(coeffs)
    return WaveletCoeffs(arr, slices, levels, wavelet)


def dwt_inverse(coeffs):
    """Inverse of :func:`dwt_forward`."""
    return pywt.waverec2(coeffs.bands, coeffs.wavelet, mode="periodization")


def soft_threshold(v, tau):
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def soft_threshold_prox(z, tau, levels=LEVELS, wavelet=WAVELET):
    """Closed-form prox of ``tau * ||W^T x||_1`` for orthonormal ``W``.

    Every band, approximation included, is shrunk.
    """
    if tau < 0:
        raise InvalidArgumentError("tau must be non-negative")
    z = np.asarray(z, dtype=float)
    if tau == 0:
        return z.copy()
    c = dwt_forward(z, levels, wavelet)
    c.array = soft_threshold(c.array, tau)
    return dwt_inverse(c)


def wavelet_l1(x, levels=LEVELS, wavelet=WAVELET):
    return float(np.abs(dwt_forward(x, levels, wavelet).array).sum())


def gradient(f):
    """Forward differences; the difference leaving the image is zero."""
    gx = np.zeros_like(f)
    gy = np.zeros_like(f)
    gx[:, :-1] = f[:, 1:] - f[:, :-1]
    gy[:-1, :] = f[1:, :] - f[:-1, :]
    return gx, gy


def divergence(px, py):
    """Negative adjoint of :func:`gradient`."""
    d = np.zeros_like(px)
    d[:, :-1] += px[:, :-1]
    d[:, 1:] -= px[:, :-1]
    d[:-1, :] += py[:-1, :]
    d[1:, :] -= py[:-1, :]
    return d


def tv_value(img):
    """Isotropic total variation with forward differences."""
    gx, gy = gradient(np.asarray(img, dtype=float))
    return float(np.sqrt(gx**2 + gy**2).sum())


def _neumann_eigs(shape):
    ny, nx = shape
    ey = 2 - 2 * np.cos(np.pi * np.arange(ny) / ny)
    ex = 2 - 2 * np.cos(np.pi * np.arange(nx) / nx)
    return ey[:, None] + ex[None, :]


def tv_prox(z, tau, inner_iters=10, mu=None):
    """Split-Bregman solution of ``argmin 0.5||x - z||^2 + tau * TV(x)``.

    ``mu`` is the splitting penalty (default ``10 * tau``); each inner step
    solves ``(I + mu * grad^T grad) u = rhs`` exactly with a DCT.  The result is
    never worse than ``z`` itself in the prox objective.
    """
    if tau < 0:
        raise InvalidArgumentError("tau must be non-negative")
    z = np.asarray(z, dtype=float)
    if tau == 0:
        return z.copy()
    if mu is None:
        mu = 10.0 * tau
    denom = 1.0 + mu * _neumann_eigs(z.shape)
    dx = np.zeros_like(z)
    dy = np.zeros_like(z)
    bx = np.zeros_like(z)
    by = np.zeros_like(z)
    u = z
    thresh = tau / mu
    for _ in range(inner_iters):
        rhs = z - mu * divergence(dx - bx, dy - by)
        u = sfft.idctn(sfft.dctn(rhs, norm="ortho") / denom, norm="ortho")
        gx, gy = gradient(u)
        sx = gx + bx
        sy = gy + by
        mag = np.sqrt(sx**2 + sy**2)
        scale = np.maximum(mag - thresh, 0.0) / np.where(mag > 0, mag, 1.0)
        dx = scale * sx
        dy = scale * sy
        bx = sx - dx
        by = sy - dy
    if tv_objective(u, z, tau) > tv_objective(z, z, tau):
        return z.copy()
    return u


def tv_objective(x, z, tau):
    return 0.5 * float(np.sum((x - z) ** 2)) + tau * tv_value(x)
