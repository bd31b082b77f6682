"""Filtered back projection for parallel-beam sinograms."""

from __future__ import annotations

import numpy as np

from . import _fft
from .errors import InvalidArgumentError
from .phantoms import pixel_centers
from .projector import ParallelSinogram

FILTERS = ("ram-lak", "shepp-logan", "hann")
_ALIASES = {"shepp-logan-filter": "shepp-logan"}


def ramp_kernel(n_pad, spacing):
    """Frequency response of the band-limited discrete ramp filter.

    Built from the spatial kernel ``h[0] = 1/(4 d^2)``,
    ``h[k] = -1/(pi k d)^2`` for odd ``k`` and 0 for even ``k``, which avoids
    the DC offset of sampling ``|f|`` directly.
    """
    k = np.fft.fftfreq(n_pad, d=1.0 / n_pad).astype(int)
    h = np.zeros(n_pad)
    h[0] = 1.0 / (4 * spacing**2)
    odd = k % 2 == 1
    h[odd] = -1.0 / (np.pi * k[odd] * spacing) ** 2
    return np.real(_fft.fft(h))


def _window(name, n_pad):
    f = np.abs(np.fft.fftfreq(n_pad))  # cycles per sample, Nyquist = 0.5
    if name == "ram-lak":
        return np.ones(n_pad)
    if name == "shepp-logan":
        return np.sinc(f)
    return 0.5 * (1 + np.cos(2 * np.pi * f))


def _angle_weights(angles):
    """Angular quadrature weights on the half circle (midpoint rule)."""
    phi = np.mod(angles, np.pi)
    order = np.argsort(phi)
    s = phi[order]
    ext = np.concatenate([s[-1:] - np.pi, s, s[:1] + np.pi])
    w_sorted = 0.5 * (ext[2:] - ext[:-2])
    w = np.empty_like(w_sorted)
    w[order] = w_sorted
    return w


def fbp_parallel(ps, n, filter="ram-lak"):
    """Reconstruct an ``n x n`` image from a parallel sinogram.

    Each profile is ramp filtered (optionally apodised by a Shepp-Logan sinc
    or Hann window), back projected with linear interpolation, and weighted
    by its share of the half circle.  For uniformly spaced angles that share
    is ``pi / n_angles``.
    """
    if not isinstance(ps, ParallelSinogram):
        raise InvalidArgumentError("expected a ParallelSinogram")
    filter = _ALIASES.get(filter, filter)
    if filter not in FILTERS:
        raise InvalidArgumentError(f"filter must be one of {FILTERS}, got {filter!r}")
    if n < 2 or n % 2:
        raise InvalidArgumentError(f"n must be even, got {n}")
    angles = np.asarray(ps.angles, dtype=float)
    if angles.size < 2:
        raise InvalidArgumentError("FBP needs at least two angles")
    phi = np.sort(np.mod(angles, np.pi))
    gaps = np.diff(np.concatenate([phi, phi[:1] + np.pi]))
    if gaps.max() > 0.5 * np.pi:
        raise InvalidArgumentError("projection angles do not span a half turn")
    offs = ps.offsets
    step = np.diff(offs)
    if not np.allclose(step, step[0], rtol=1e-9):
        raise InvalidArgumentError("FBP needs uniform detector offsets")
    d = step[0]
    J = offs.size
    n_pad = _fft.next_fast_len(2 * J)
    H = ramp_kernel(n_pad, d) * _window(filter, n_pad)
    q = np.real(_fft.ifft(_fft.fft(ps.data, n=n_pad, axis=1) * H, axis=1))[:, :J] * d
    x, y = pixel_centers(n)
    img = np.zeros((n, n))
    for a, w, row in zip(angles, _angle_weights(angles), q):
        l = x * np.cos(a) + y * np.sin(a)
        img += w * np.interp(l, offs, row, left=0.0, right=0.0)
    return img
