"""Pseudo-polar Fourier transform, its adjoint and a least-squares inverse.

Conventions
-----------
Pixel ``(r, c)`` of an ``n x n`` image has centred coordinates
``a = c - (n - 1) / 2`` (x, to the right) and ``b = (n - 1) / 2 - r``
(y, upwards), in pixels.  Coefficients are stored as a complex array of
shape ``(2, 2n, n)``: block 0 is basically-horizontal (BH), block 1
basically-vertical (BV); axis 1 is the radial index ``l + n`` for
``l in [-n, n)`` and axis 2 the slope index ``m + n/2`` for
``m in [-n/2, n/2)``.  With ``s = 2m/n``::

    BH[l, m] = sum_{r,c} x[r,c] exp(-2j*pi * l/(2n) * (a + s*b))
    BV[l, m] = sum_{r,c} x[r,c] exp(-2j*pi * l/(2n) * (b - s*a))

BH line ``m`` lies at angle ``arctan(s)`` and BV line ``m`` at
``arctan(s) + pi/2``; sample ``l`` sits at radius
``l/4 * sqrt(1 + s**2)`` cycles per unit length when the image spans
[-1, 1]^2.  No normalisation is applied in either direction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _fft
from .errors import InvalidArgumentError
from .phantoms import check_image


def frac_dft(vec, slope):
    """Fractional DFT ``y[m] = sum_k vec[k] exp(-2j*pi*k*m*slope/K)``.

    Works along the last axis; ``slope`` may be a scalar or an array
    broadcastable to ``vec.shape[:-1]``.  Uses Bluestein's chirp-z
    factorisation, O(K log K) per vector.
    """
    vec = np.asarray(vec, dtype=complex)
    K = vec.shape[-1]
    if K < 1:
        raise InvalidArgumentError("frac_dft needs a non-empty vector")
    slope = np.asarray(slope, dtype=float)[..., None]
    k = np.arange(K)
    # exp(-2j pi a k m / K) = w(k) w(m) / w(m - k) with w(t) = exp(-j pi a t^2 / K)
    chirp = np.exp(-1j * np.pi * slope * (k * k) / K)
    L = _fft.next_fast_len(2 * K - 1)
    d = np.arange(L)
    d = np.where(d < K, d, d - L)  # lags 0..K-1 then negative lags
    kernel = np.exp(1j * np.pi * slope * (d * d) / K)
    kernel = np.where(np.abs(d) < K, kernel, 0.0)
    conv = _fft.ifft(_fft.fft(vec * chirp, n=L) * _fft.fft(kernel, n=L))
    return chirp * conv[..., :K]


def _check_coeffs(c, n=None):
    c = np.asarray(c)
    if c.ndim != 3 or c.shape[0] != 2 or c.shape[1] != 2 * c.shape[2] or c.shape[2] % 2:
        raise InvalidArgumentError(
            f"pseudo-polar coefficients must have shape (2, 2n, n) with n even, got {c.shape}"
        )
    if n is not None and c.shape[2] != n:
        raise InvalidArgumentError(f"expected coefficients for n={n}, got n={c.shape[2]}")
    return c


@lru_cache(maxsize=8)
def _plan(n):
    """Precomputed chirp-z factors for the BH block of an ``n x n`` image."""
    l = np.arange(-n, n)
    m = np.arange(-n // 2, n // 2)
    j = np.arange(n)
    alpha = (l / n)[:, None]
    # row FFT centring: exp(-2j pi l a / 2n) = exp(-2j pi l c / 2n) * pre[l]
    pre = np.exp(1j * np.pi * l * (n - 1) / (2 * n))
    # slope index shift [0, n) -> [-n/2, n/2), and centring b = j - (n-1)/2
    shift = np.exp(1j * np.pi * alpha * j)
    post = np.exp(1j * np.pi * np.outer(l, m) * (n - 1) / n**2)
    chirp = np.exp(-1j * np.pi * alpha * (j * j) / n)
    L = _fft.next_fast_len(2 * n - 1)
    d = np.arange(L)
    d = np.where(d < n, d, d - L)
    kern = np.where(np.abs(d) < n, np.exp(1j * np.pi * alpha * (d * d) / n), 0.0)
    return {
        "L": L,
        "pre": pre,
        "fwd_in": shift * chirp,
        "fwd_out": chirp * post,
        "fwd_kernel": _fft.fft(kern, axis=1),
        # the adjoint uses slope -alpha: conjugate chirps and kernel
        "adj_in": np.conj(post) * np.conj(chirp),
        "adj_out": np.conj(chirp) * np.conj(shift),
        "adj_kernel": _fft.fft(np.conj(kern), axis=1),
    }


def _chirp_apply(v, pin, kernel, pout, L, n):
    return pout * _fft.ifft(_fft.fft(v * pin, n=L, axis=1) * kernel, axis=1)[:, :n]


def _bh_forward(x):
    n = x.shape[0]
    P = _plan(n)
    F = _fft.fft(x, n=2 * n, axis=1)  # (n rows, 2n freqs)
    F = np.roll(F, n, axis=1) * P["pre"]  # column index now l + n
    G = F[::-1].T  # (2n, n): [l, j] with j = n - 1 - r
    return _chirp_apply(G, P["fwd_in"], P["fwd_kernel"], P["fwd_out"], P["L"], n)


def _bh_adjoint(C):
    n = C.shape[1]
    P = _plan(n)
    G = _chirp_apply(C, P["adj_in"], P["adj_kernel"], P["adj_out"], P["L"], n)  # [l, j]
    F = G.T[::-1] * np.conj(P["pre"])  # [r, l + n]
    F = np.roll(F, -n, axis=1)
    return (2 * n) * _fft.ifft(F, axis=1)[:, :n]


def ppft_forward(img):
    """Pseudo-polar Fourier coefficients of ``img``, shape ``(2, 2n, n)``."""
    x = np.asarray(img)
    if not np.iscomplexobj(x):
        x = check_image(x)
    elif x.ndim != 2 or x.shape[0] != x.shape[1] or x.shape[0] % 2:
        raise InvalidArgumentError("image must be square with even side")
    return np.stack([_bh_forward(x), _bh_forward(np.rot90(x, -1))])


def ppft_adjoint(coeffs):
    """Exact adjoint (conjugate transpose) of :func:`ppft_forward`.

    Returns a complex image; callers working with real images take the
    real part.
    """
    c = _check_coeffs(coeffs)
    return _bh_adjoint(c[0]) + np.rot90(_bh_adjoint(c[1]), 1)


def ppft_bruteforce(img):
    """Direct O(n^4) evaluation of the defining double sum."""
    x = np.asarray(img)
    n = x.shape[0]
    a = np.arange(n) - (n - 1) / 2
    b = (n - 1) / 2 - np.arange(n)
    B, A = np.meshgrid(b, a, indexing="ij")  # B[r,c] = b_r, A[r,c] = a_c
    l = np.arange(-n, n)[:, None, None, None]
    s = (2 * np.arange(-n // 2, n // 2) / n)[None, :, None, None]
    bh = np.sum(x * np.exp(-2j * np.pi * l / (2 * n) * (A + s * B)), axis=(2, 3))
    bv = np.sum(x * np.exp(-2j * np.pi * l / (2 * n) * (B - s * A)), axis=(2, 3))
    return np.stack([bh, bv])


def pp_angles(n):
    """Line angles as an array of shape ``(2, n)`` (BH row then BV row)."""
    t = np.arctan(2 * np.arange(-n // 2, n // 2) / n)
    return np.stack([t, t + np.pi / 2])


def pp_radii(n):
    """Radius of every sample in cycles per unit length, shape ``(2, 2n, n)``."""
    s = 2 * np.arange(-n // 2, n // 2) / n
    r = np.outer(np.arange(-n, n) / 4.0, np.sqrt(1 + s**2))
    return np.stack([r, r])


def radial_weights(n):
    """Density-compensating weight ``max(|l|, 1)`` per sample."""
    w = np.maximum(np.abs(np.arange(-n, n)), 1).astype(float)
    return np.broadcast_to(w[None, :, None], (2, 2 * n, n))


@dataclass
class LSInfo:
    iterations: int
    residual: float
    converged: bool


def ppft_ls_inverse(coeffs, tol=1e-8, maxiter=200, precondition=True, return_info=False):
    """Least-squares image from pseudo-polar coefficients.

    Runs conjugate gradients on the real normal equations
    ``Re(A^H W A) x = Re(A^H W c)``, where ``W`` is the radial weight
    ``max(|l|, 1)`` when ``precondition`` is set and the identity otherwise.
    For consistent data both choices share the same solution; the weighted
    form is far better conditioned.  Stops when the normal-equation
    residual falls below ``tol`` relative to the right-hand side.
    """
    c = _check_coeffs(coeffs)
    n = c.shape[2]
    w = radial_weights(n) if precondition else 1.0

    def normal(x):
        return ppft_adjoint(w * ppft_forward(x)).real

    b = ppft_adjoint(w * c).real
    x = np.zeros((n, n))
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        info = LSInfo(0, 0.0, True)
        return (x, info) if return_info else x
    r = b.copy()
    p = r.copy()
    rr = np.vdot(r, r).real
    k = 0
    res = 1.0
    while k < maxiter:
        q = normal(p)
        step = rr / np.vdot(p, q).real
        x += step * p
        r -= step * q
        k += 1
        rr_new = np.vdot(r, r).real
        res = np.sqrt(rr_new) / bnorm
        if res < tol:
            break
        p = r + (rr_new / rr) * p
        rr = rr_new
    info = LSInfo(k, float(res), res < tol)
    return (x, info) if return_info else x


@lru_cache(maxsize=16)
def spectral_norm_sq(n, iters=60, seed=0):
    """Largest eigenvalue of ``A^H A`` (i.e. of ``A A^H``) by power iteration."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, n))
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(iters):
        y = ppft_adjoint(ppft_forward(x)).real
        lam_new = np.linalg.norm(y)
        x = y / lam_new
        if abs(lam_new - lam) <= 1e-9 * lam_new:
            lam = lam_new
            break
        lam = lam_new
    return float(lam)
