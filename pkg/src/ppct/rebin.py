"""Rebinning of fan and helical data onto equally sloped parallel rays.

The chain is::

    cone data --cb_ssrb--> fan data --rebin_fan_to_parallel--> parallel data
        --parallel_to_ppdata--> pseudo-polar Fourier samples

Every step also reports how far its output sits from what was actually
measured, as an error factor ``eps >= 0`` (0 on a measured sample, large
half-way between two).  The factors feed the weights module.

Angles of the pseudo-polar lines are ordered as in :func:`equally_sloped_angles`:
index ``k < n`` is BH line ``m = k - n/2`` and ``k >= n`` is BV line
``m = k - 3n/2``, so a per-line array of length ``2n`` reshapes to
``(2, n)`` and broadcasts over the radial axis of the ``(2, 2n, n)`` layout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _fft
from .errors import InvalidArgumentError
from .ppfft import frac_dft, pp_angles
from .projector import (ConeSinogram, FanGeometry, FanSinogram, ParallelSinogram,
                        default_offsets)

EPS_CAP = 1e6
TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class AngleSet:
    """The ``2n`` equally sloped angles for an ``n x n`` image, ascending."""

    n: int
    angles: np.ndarray

    def __len__(self):
        return self.angles.size


def equally_sloped_angles(n):
    if not isinstance(n, (int, np.integer)) or n < 2 or n % 2:
        raise InvalidArgumentError(f"n must be an even integer >= 2, got {n!r}")
    # BH angles lie in [-pi/4, pi/4), BV angles in [pi/4, 3pi/4): already sorted
    return AngleSet(int(n), pp_angles(n).ravel())


def _as_angleset(target):
    if isinstance(target, AngleSet):
        return target
    if isinstance(target, (int, np.integer)):
        return equally_sloped_angles(target)
    raise InvalidArgumentError("target must be an AngleSet or an image size")


def eps_from_fraction(q, cap=EPS_CAP):
    """Map the normalised distance ``q = Delta / H`` in [0, 1] to ``q / (1 - q)``."""
    q = np.clip(np.asarray(q, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore"):
        eps = np.where(q < 1.0, q / np.where(q < 1.0, 1.0 - q, 1.0), np.inf)
    return np.minimum(eps, cap)


def fraction_from_eps(eps):
    eps = np.asarray(eps, dtype=float)
    return np.where(np.isinf(eps), 1.0, eps / (1.0 + np.where(np.isinf(eps), 0.0, eps)))


def line_to_samples(per_line, n):
    """Broadcast a length-``2n`` per-line array to the ``(2, 2n, n)`` layout."""
    per_line = np.asarray(per_line)
    if per_line.shape != (2 * n,):
        raise InvalidArgumentError(f"expected {2 * n} per-line values, got {per_line.shape}")
    return np.broadcast_to(per_line.reshape(2, 1, n), (2, 2 * n, n)).copy()


def interpolation_error(measured_angles, target, n=None, cap=EPS_CAP):
    """Per-sample error factor from angular distance to the measured lines.

    For each equally sloped line at angle ``phi`` let ``Delta`` be the
    distance (modulo pi) to the nearest measured angle and ``H`` half the gap
    between the two measured angles around ``phi``; every sample on the line
    gets ``Delta / (H - Delta)``, capped at ``cap``.
    """
    if not isinstance(target, AngleSet):
        target = n if n is not None else target
    target = _as_angleset(target)
    meas = np.unique(np.mod(np.asarray(measured_angles, dtype=float).ravel(), np.pi))
    if meas.size == 0:
        raise InvalidArgumentError("need at least one measured angle")
    phi = np.mod(target.angles, np.pi)
    if meas.size == 1:
        gap_lo = gap_hi = np.full(phi.shape, np.pi)
        lo = hi = np.full(phi.shape, meas[0])
    else:
        ext = np.concatenate([meas[-1:] - np.pi, meas, meas[:1] + np.pi])
        j = np.searchsorted(ext, phi, side="right")
        lo, hi = ext[j - 1], ext[j]
        gap_lo = gap_hi = hi - lo
    d_lo = np.abs(phi - lo)
    d_hi = np.abs(hi - phi)
    d_lo = np.minimum(d_lo, np.pi - d_lo)
    d_hi = np.minimum(d_hi, np.pi - d_hi)
    delta = np.minimum(d_lo, d_hi)
    H = 0.5 * np.where(d_lo <= d_hi, gap_lo, gap_hi)
    q = np.where(delta <= 1e-12 * np.pi, 0.0, delta / H)
    return line_to_samples(eps_from_fraction(q, cap), target.n)


# ---------------------------------------------------------------------------
# fan -> parallel


def _beta_index(betas, beta):
    """Fractional node index of ``beta`` on the source-angle grid.

    Returns ``(i0, i1, t, ok)`` with the value at ``beta`` interpolated as
    ``(1 - t) * data[i0] + t * data[i1]``.  A uniform grid covering the whole
    circle is treated as periodic.
    """
    nb = betas.size
    step = np.diff(betas)
    periodic = nb > 1 and np.allclose(step, step[0]) and abs(nb * step[0] - TWO_PI) < 1e-9 * TWO_PI
    if periodic:
        f = np.mod(beta - betas[0], TWO_PI) / step[0]
        i0 = np.floor(f).astype(int)
        t = f - i0
        i0 = np.mod(i0, nb)
        return i0, np.mod(i0 + 1, nb), t, np.ones(beta.shape, bool)
    # shift each beta by a whole number of turns into [betas[0], betas[0] + 2pi)
    b = betas[0] + np.mod(beta - betas[0], TWO_PI)
    ok = b <= betas[-1] + 1e-12
    i1 = np.clip(np.searchsorted(betas, b, side="right"), 1, nb - 1)
    i0 = i1 - 1
    t = np.clip((b - betas[i0]) / (betas[i1] - betas[i0]), 0.0, 1.0)
    return i0, i1, t, ok


def _gamma_index(geom, gamma):
    g = geom.gammas
    step = g[1] - g[0]
    f = np.clip((gamma - g[0]) / step, 0.0, g.size - 1.0)
    i0 = np.minimum(np.floor(f).astype(int), g.size - 2)
    return i0, i0 + 1, f - i0


def rebin_fan_to_parallel(fan, target, n_offsets=None, offsets=None, combine="proximity",
                          cap=EPS_CAP):
    """Resample fan data onto parallel rays at the target angles.

    Each target ray ``(l, phi)`` is seen by the fan at ``gamma = arcsin(l/R)``,
    ``beta = phi - gamma`` and again, reversed, at ``-gamma``,
    ``beta + pi + 2 gamma``.  Both are bilinearly interpolated in
    ``(gamma, beta)`` where available and combined with weights

    * ``"mean"``: the fan's redundancy weights (1 if none);
    * ``"proximity"``: those weights times ``1 - q``, with ``q`` the normalised
      distance to the nearest measured view, so the better-sampled copy
      dominates;
    * ``"nearest"``: only the copy with the smaller ``q``.

    Returns ``(ParallelSinogram, eps)`` where ``eps`` has the sinogram's shape
    and is ``q / (1 - q)`` for the weighted mean ``q`` of the copies used.
    """
    if not isinstance(fan, FanSinogram):
        raise InvalidArgumentError("expected a FanSinogram")
    if combine not in ("mean", "proximity", "nearest"):
        raise InvalidArgumentError(f"unknown combine mode {combine!r}")
    geom = fan.geometry
    if isinstance(target, (AngleSet, int, np.integer)):
        tset = _as_angleset(target)
        angles, n = tset.angles, tset.n
    else:
        angles, n = np.asarray(target, dtype=float).ravel(), None
    if offsets is None:
        if n is None and n_offsets is None:
            raise InvalidArgumentError("give offsets or n_offsets for a bare angle list")
        offsets = default_offsets(n or n_offsets, n_offsets)
    offsets = np.asarray(offsets, dtype=float)
    betas = np.asarray(geom.betas, dtype=float)
    if betas.size < 2 or np.any(np.diff(betas) <= 0):
        raise InvalidArgumentError("fan source angles must be strictly increasing")
    if betas[-1] - betas[0] >= TWO_PI + 1e-9:
        raise InvalidArgumentError("fan source angles must span less than one turn")
    l_max = geom.R * np.sin(geom.gamma_max)
    if np.max(np.abs(offsets)) > l_max:
        raise InvalidArgumentError(f"offsets reach {np.max(np.abs(offsets)):.4g} but the fan covers |l| <= {l_max:.4g}")

    Phi, L = np.meshgrid(angles, offsets, indexing="ij")
    gamma = np.arcsin(L / geom.R)
    data = fan.data
    w_arr = fan.weights
    cands = []
    for g_sign, beta in ((1.0, Phi - gamma), (-1.0, Phi + np.pi + gamma)):
        gam = g_sign * gamma
        ib0, ib1, tb, ok = _beta_index(betas, beta)
        ig0, ig1, tg = _gamma_index(geom, gam)

        def bilerp(a):
            return ((1 - tb) * ((1 - tg) * a[ib0, ig0] + tg * a[ib0, ig1])
                    + tb * ((1 - tg) * a[ib1, ig0] + tg * a[ib1, ig1]))

        val = bilerp(data)
        w = bilerp(w_arr) if w_arr is not None else np.ones_like(val)
        w = np.where(ok, w, 0.0)
        q = 2.0 * np.minimum(tb, 1.0 - tb)
        cands.append((val, w, q))

    (v1, w1, q1), (v2, w2, q2) = cands
    if combine == "proximity":
        w1 = w1 * (1.0 - q1 + 1e-3)
        w2 = w2 * (1.0 - q2 + 1e-3)
    elif combine == "nearest":
        pick1 = (w1 > 0) & ((q1 <= q2) | (w2 <= 0))
        w1 = np.where(pick1, 1.0, 0.0) * (w1 > 0)
        w2 = np.where(pick1, 0.0, 1.0) * (w2 > 0)
    total = w1 + w2
    if np.any(total <= 0):
        raise InvalidArgumentError("fan data do not cover every target ray (need pi + fan angle)")
    out = (w1 * v1 + w2 * v2) / total
    q = (w1 * q1 + w2 * q2) / total
    return ParallelSinogram(angles, offsets, out), eps_from_fraction(q, cap)


def ray_error_to_lines(eps_rays, offsets, support=1.0, cap=EPS_CAP):
    """Collapse a per-ray error map to one factor per angle.

    The normalised distances ``q`` of the rays with ``|l| <= support`` are
    averaged and mapped back through ``q / (1 - q)``.
    """
    offsets = np.asarray(offsets, dtype=float)
    mask = np.abs(offsets) <= support
    if not np.any(mask):
        mask = np.ones_like(mask)
    q = fraction_from_eps(eps_rays)[:, mask].mean(axis=1)
    return eps_from_fraction(q, cap)


# ---------------------------------------------------------------------------
# helical -> fan


def ssrb_weight(phi_ss, gamma, gamma_t):
    """Redundancy weight for a short-scan view at ``phi_ss`` in ``[0, pi + 2 gamma_T]``.

    Written for rays ``phi = beta + gamma``, whose reverse is met at
    ``beta + pi + 2 gamma``: ``w(phi_ss, gamma) + w(phi_ss + pi + 2 gamma, -gamma) = 1``.
    Outside ``[0, pi + 2 gamma_T]`` the weight is 0.
    """
    phi_ss, gamma = np.broadcast_arrays(np.asarray(phi_ss, float), np.asarray(gamma, float))
    rise_end = 2 * gamma_t - 2 * gamma
    fall_start = np.pi - 2 * gamma
    end = np.pi + 2 * gamma_t
    w = np.ones(phi_ss.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        rise = np.sin(np.pi * phi_ss / (2 * rise_end)) ** 2
        fall = np.sin(np.pi * (end - phi_ss) / (2 * (2 * gamma_t + 2 * gamma))) ** 2
    w = np.where(phi_ss < rise_end, rise, w)
    w = np.where(phi_ss > fall_start, fall, w)
    w = np.where((phi_ss < 0) | (phi_ss > end), 0.0, w)
    return w


def cb_ssrb(cone, z, cap=EPS_CAP):
    """Single-slice rebinning of helical cone data to fan data at height ``z``.

    Uses every source position with ``|z - z_source| <= d``, ``d`` being the
    geometry's window, plus the next one on either side (with zero weight).  For each one the detector row at
    ``v = (u^2 + D^2) dz / (R D)`` is interpolated linearly between rows and
    scaled by ``sqrt(u^2 + D^2) / sqrt(u^2 + v^2 + D^2)``.  The returned fan
    sinogram carries the short-scan weights of :func:`ssrb_weight`; the
    error factor per sample is ``q_v / (1 - q_v) + |dz| / d`` with ``q_v`` the
    normalised distance of ``v`` to the nearest detector row.
    """
    if not isinstance(cone, ConeSinogram):
        raise InvalidArgumentError("expected a ConeSinogram")
    g = cone.geometry
    d = g.window
    dz_all = z - g.source_z
    zs = g.source_z
    inside = np.flatnonzero(np.abs(dz_all) <= d + 1e-12)
    if inside.size < 2 or zs.min() > z - d + 1e-9 or zs.max() < z + d - 1e-9:
        raise InvalidArgumentError(f"z = {z:.4g} is outside the helix coverage")
    # one more view past each end of the window (weight 0) so that angular
    # interpolation near the ends of the short scan has a partner
    sel = np.arange(max(inside[0] - 1, 0), min(inside[-1] + 2, zs.size))
    dz = dz_all[sel][:, None]
    u = g.u[None, :]
    gam = g.gammas
    v = (u**2 + g.D**2) * dz / (g.R * g.D)
    rv = v / g.row_spacing + (g.n_rows - 1) / 2.0
    if rv.min() < -1e-9 or rv.max() > g.n_rows - 1 + 1e-9:
        raise InvalidArgumentError("detector rows do not reach the rebinning window")
    rv = np.clip(rv, 0.0, g.n_rows - 1.0)
    r0 = np.minimum(np.floor(rv).astype(int), max(g.n_rows - 2, 0))
    t = rv - r0
    views = np.arange(sel.size)[:, None]
    cols = np.arange(g.n_cols)[None, :]
    data = cone.data[sel]
    if g.n_rows == 1:
        val = data[:, 0, :]
    else:
        val = (1 - t) * data[views, r0, cols] + t * data[views, r0 + 1, cols]
    val = val * np.sqrt(u**2 + g.D**2) / np.sqrt(u**2 + v**2 + g.D**2)
    phi_ss = (np.pi / 2 + g.gamma_max) * (1 - dz / d)
    w = ssrb_weight(phi_ss, gam[None, :], g.gamma_max)
    q = 2.0 * np.minimum(t, 1.0 - t) if g.n_rows > 1 else np.zeros_like(t)
    eps = eps_from_fraction(q, cap) + np.abs(dz) / d
    fan_geom = FanGeometry(g.R, g.gamma_max, g.n_cols, g.phis[sel])
    return FanSinogram(fan_geom, val, w), np.minimum(eps, cap)


# ---------------------------------------------------------------------------
# parallel -> pseudo-polar


def _check_angles(ps, n):
    target = equally_sloped_angles(n).angles
    if ps.angles.shape != target.shape or not np.allclose(ps.angles, target, atol=1e-9):
        raise InvalidArgumentError(f"sinogram angles are not the equally sloped set for n={n}")
    step = np.diff(ps.offsets)
    if ps.offsets.size < 2 or not np.allclose(step, step[0], rtol=1e-9):
        raise InvalidArgumentError("detector offsets must be uniform")
    return step[0]


def _line_geometry(n):
    """Radial step (cycles per unit) and direction of each of the 2n lines."""
    s = 2 * np.arange(-n // 2, n // 2) / n
    drho = np.tile(np.sqrt(1 + s**2) / 4.0, 2)
    theta = pp_angles(n).ravel()
    return drho, theta


def bilinear_transfer(n):
    """Fourier transfer of the bilinear pixel model at every pseudo-polar sample.

    ``sinc(kx h)^2 sinc(ky h)^2`` with ``h = 2/n``: the continuous Fourier
    transform of the bilinearly interpolated image equals ``h^2`` times this
    factor times the pixel-sum transform the pseudo-polar operator computes.
    """
    h = 2.0 / n
    drho, theta = _line_geometry(n)
    l = np.arange(-n, n)[:, None]
    rho = l * drho[None, :]
    kx = rho * np.cos(theta)[None, :]
    ky = rho * np.sin(theta)[None, :]
    T = (np.sinc(kx * h) * np.sinc(ky * h)) ** 2
    return T.reshape(2 * n, 2, n).transpose(1, 0, 2)


def parallel_to_ppdata(ps, n, radial="exact", oversample=2, compensation="bilinear"):
    """Fourier-transform each profile and sample it on the pseudo-polar radii.

    Parameters
    ----------
    ps : ParallelSinogram
        Data on ``equally_sloped_angles(n)`` with uniform offsets.
    radial : {"exact", "linear"}
        ``"exact"`` evaluates the profile's discrete-time Fourier sum at each
        radius directly (a chirp-z transform per line, no radial error).
        ``"linear"`` zero-pads the profile so its FFT bins are ``oversample``
        times finer than the coarsest pseudo-polar radial step and
        interpolates linearly between bins.
    compensation : {"bilinear", "none"}
        Divide by :func:`bilinear_transfer` so that the result matches
        the pseudo-polar transform of the pixel values, for data integrated
        through the bilinear image model.

    Returns
    -------
    y : ndarray, complex, shape (2, 2n, n)
    eps : ndarray, shape (2, 2n, n)
        Radial interpolation error factor: zero for ``"exact"``, and
        ``t (1 - t) / oversample**2`` for ``"linear"`` with ``t`` the
        fractional bin position.
    """
    if not isinstance(ps, ParallelSinogram):
        raise InvalidArgumentError("expected a ParallelSinogram")
    if radial not in ("exact", "linear"):
        raise InvalidArgumentError(f"unknown radial mode {radial!r}")
    if compensation not in ("bilinear", "none"):
        raise InvalidArgumentError(f"unknown compensation {compensation!r}")
    delta = _check_angles(ps, n)
    g = ps.data
    J = g.shape[1]
    l0 = ps.offsets[0]
    drho, _ = _line_geometry(n)
    p = np.arange(2 * n)
    l = p - n
    if radial == "exact":
        K = max(J, 2 * n)
        vec = np.zeros((2 * n, K), dtype=complex)
        j = np.arange(J)
        vec[:, :J] = g * np.exp(2j * np.pi * n * drho[:, None] * delta * j[None, :])
        out = frac_dft(vec, drho * delta * K)[:, : 2 * n]
        out *= delta * np.exp(-2j * np.pi * l[None, :] * drho[:, None] * l0)
        eps = np.zeros((2 * n, 2 * n))
    else:
        if oversample < 1:
            raise InvalidArgumentError("oversample must be >= 1")
        M = _fft.next_fast_len(max(J, int(np.ceil(4 * oversample / delta))))
        spec = _fft.fft(g, n=M, axis=1)
        q = np.fft.fftfreq(M, d=1.0 / M)  # integer bin numbers
        # reference the phase to l = 0 so the spectrum is smooth in rho
        spec *= delta * np.exp(-2j * np.pi * q[None, :] * l0 / (M * delta))
        spec = np.fft.fftshift(spec, axes=1)
        bins = l[None, :] * drho[:, None] * (M * delta) + M // 2
        b0 = np.floor(bins).astype(int)
        t = bins - b0
        rows = np.arange(2 * n)[:, None]
        out = (1 - t) * spec[rows, b0] + t * spec[rows, b0 + 1]
        eps = t * (1 - t) / oversample**2
    y = out.reshape(2, n, 2 * n).transpose(0, 2, 1)
    eps = eps.reshape(2, n, 2 * n).transpose(0, 2, 1)
    h = 2.0 / n
    if compensation == "bilinear":
        y = y / (h * h * bilinear_transfer(n))
    else:
        y = y / (h * h)
    return np.ascontiguousarray(y), np.ascontiguousarray(eps)
