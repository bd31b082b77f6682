"""End-to-end glue: measured data -> pseudo-polar samples + error map -> image.

Used by the CLI and the sweep harness so that both run the same chain.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .fbp import fbp_parallel
from .ppfft import ppft_ls_inverse
from .projector import (ConeSinogram, FanGeometry, FanSinogram, ParallelSinogram,
                        default_offsets)
from .rebin import (cb_ssrb, equally_sloped_angles, interpolation_error, line_to_samples,
                    parallel_to_ppdata, ray_error_to_lines, rebin_fan_to_parallel)
from .solver import SolverConfig, fcsa_lem, ista_baseline
from .weights import eaw, propagate_weights_to_ppgrid

DEFAULT_R = 3.0
METHODS = ("fcsa-lem", "ista", "ls", "fbp")


def fan_geometry(n, views, R=DEFAULT_R, detectors=None):
    """Full-turn equiangular fan covering the image, ``3n`` detectors by default."""
    return FanGeometry.covering(R, views, detectors or 3 * n)


@dataclass
class Rebinned:
    """Pseudo-polar data with everything needed to weight and reconstruct it."""

    n: int
    y: np.ndarray
    eps: np.ndarray
    sinogram: ParallelSinogram
    d: np.ndarray = None

    def weights(self, use_eaw=True):
        if not use_eaw:
            return np.ones(self.y.shape)
        return eaw(self.d, self.eps)


def _finish(ps, eps_lines, n, radial, d_rays=None):
    y, eps_r = parallel_to_ppdata(ps, n, radial=radial)
    d = propagate_weights_to_ppgrid(d_rays, n) if d_rays is not None else None
    return Rebinned(n, y, line_to_samples(eps_lines, n) + eps_r, ps, d)


def rebin_fan(fan, n, radial="exact", combine="nearest", support=1.0, d=None):
    """Fan sinogram -> :class:`Rebinned` on the ``n x n`` pseudo-polar grid.

    ``d`` (same shape as the fan data) are per-ray statistical weights; they
    are rebinned alongside the data.
    """
    aset = equally_sloped_angles(n)
    ps, eps_rays = rebin_fan_to_parallel(fan, aset, combine=combine)
    d_rays = None
    if d is not None:
        dfan = FanSinogram(fan.geometry, d, fan.weights)
        d_rays = rebin_fan_to_parallel(dfan, aset, combine=combine)[0].data
    return _finish(ps, ray_error_to_lines(eps_rays, ps.offsets, support), n, radial, d_rays)


def rebin_parallel(ps, n, radial="exact", d=None):
    """Parallel sinogram at arbitrary angles -> :class:`Rebinned`.

    Profiles are interpolated linearly in angle (using ``g(l, phi + pi) =
    g(-l, phi)`` to wrap around), and each line's error factor comes from
    :func:`interpolation_error`.
    """
    aset = equally_sloped_angles(n)
    offs = np.asarray(ps.offsets)
    if not np.allclose(offs, -offs[::-1]):
        raise InvalidArgumentError("offsets must be symmetric about 0 to rebin in angle")
    if ps.angles.size == aset.angles.size and np.allclose(ps.angles, aset.angles, atol=1e-12):
        out = ps
        dr = d
    else:
        out = ParallelSinogram(aset.angles, offs, _angle_interp(ps.angles, ps.data, aset.angles))
        dr = _angle_interp(ps.angles, d, aset.angles) if d is not None else None
    eps_lines = interpolation_error(ps.angles, aset)[:, 0, :].ravel()
    return _finish(out, eps_lines, n, radial, dr)


def _angle_interp(angles, data, target):
    """Linear interpolation in angle over the half turn with profile reversal."""
    phi = np.mod(angles, np.pi)
    flip = np.mod(angles, 2 * np.pi) >= np.pi  # those profiles equal g(-l, phi mod pi)
    rows = np.where(flip[:, None], data[:, ::-1], data)
    order = np.argsort(phi)
    phi, rows = phi[order], rows[order]
    # extend periodically: g(l, phi - pi) = g(-l, phi)
    ext_phi = np.concatenate([phi[-1:] - np.pi, phi, phi[:1] + np.pi])
    ext_rows = np.vstack([rows[-1:, ::-1], rows, rows[:1, ::-1]])
    out = np.empty((target.size, data.shape[1]))
    for i, t in enumerate(target):
        tm = np.mod(t, np.pi)
        j = np.searchsorted(ext_phi, tm, side="right")
        a = (tm - ext_phi[j - 1]) / (ext_phi[j] - ext_phi[j - 1])
        val = (1 - a) * ext_rows[j - 1] + a * ext_rows[j]
        # target in [pi, 3pi/4)?  equally sloped angles lie in [-pi/4, 3pi/4)
        out[i] = val if np.mod(t, 2 * np.pi) < np.pi else val[::-1]
    return out


def rebin_helical(cone, z, n, radial="exact", combine="nearest", support=1.0):
    """One slice of helical data -> :class:`Rebinned` via CB-SSRB."""
    if not isinstance(cone, ConeSinogram):
        raise InvalidArgumentError("expected a ConeSinogram")
    fan, eps_ss = cb_ssrb(cone, z)
    aset = equally_sloped_angles(n)
    offsets = default_offsets(n)
    ps, eps_rays = rebin_fan_to_parallel(fan, aset, offsets=offsets, combine=combine)
    # carry the SSRB error along the same (linear) resampling
    q_ss = FanSinogram(fan.geometry, eps_ss / (1.0 + eps_ss), fan.weights)
    q_rays = rebin_fan_to_parallel(q_ss, aset, offsets=offsets, combine=combine)[0].data
    eps_rays = eps_rays + q_rays / np.maximum(1.0 - q_rays, 1e-6)
    return _finish(ps, ray_error_to_lines(eps_rays, offsets, support), n, radial)


def reconstruct(method, data, cfg=None, use_eaw=True, filter="ram-lak"):
    """Run one method on rebinned data; returns ``(image, seconds, result)``.

    ``result`` is the solver's :class:`~ppct.solver.ReconResult` for the
    iterative methods and ``None`` otherwise.
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    res = None
    if method == "fcsa-lem":
        res = fcsa_lem(data.y, data.weights(use_eaw), cfg)
        img = res.image
    elif method == "ista":
        res = ista_baseline(data.y, cfg)
        img = res.image
    elif method == "ls":
        img = ppft_ls_inverse(data.y, maxiter=min(cfg.maxiter, 200))
    elif method == "fbp":
        img = fbp_parallel(data.sinogram, data.n, filter)
    else:
        raise InvalidArgumentError(f"unknown method {method!r}; choose from {METHODS}")
    return img, time.perf_counter() - t0, res
