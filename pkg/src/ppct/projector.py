"""Forward projection by ray marching, and the photon-counting chain.

All geometry is in normalised units: the image occupies [-1, 1]^2.  A
parallel ray ``(l, phi)`` is the line ``x cos(phi) + y sin(phi) = l``.  The
fan source for view angle ``beta`` sits at ``R * (-sin(beta), cos(beta))``
so that the ray leaving it at fan angle ``gamma`` is the parallel ray
``l = R sin(gamma)``, ``phi = beta + gamma``.  Helical sources follow the
same transaxial path and rise by ``P`` per turn.

Line integrals are midpoint sums of the bilinearly (trilinearly)
interpolated image, which is taken to vanish half a pixel outside the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import InvalidArgumentError
from .phantoms import Volume, check_image

SQRT2 = np.sqrt(2.0)


@dataclass
class ParallelSinogram:
    angles: np.ndarray
    offsets: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=float)
        self.offsets = np.asarray(self.offsets, dtype=float)
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != (self.angles.size, self.offsets.size):
            raise InvalidArgumentError("sinogram data must be (angles, offsets)")
        if np.any(np.diff(self.offsets) <= 0):
            raise InvalidArgumentError("offsets must be strictly increasing")


@dataclass
class FanGeometry:
    """Equiangular fan; detector ``j`` sits at fan angle ``gammas[j]``."""

    R: float
    gamma_max: float
    n_detectors: int
    betas: np.ndarray

    def __post_init__(self):
        self.betas = np.asarray(self.betas, dtype=float)
        if not self.R > 1:
            raise InvalidArgumentError("source radius R must exceed 1")
        if not 0 < self.gamma_max < np.pi / 2:
            raise InvalidArgumentError("gamma_max must lie in (0, pi/2)")
        if self.n_detectors < 2 or self.betas.size < 1:
            raise InvalidArgumentError("need at least two detectors and one view")

    @property
    def gammas(self):
        step = 2 * self.gamma_max / self.n_detectors
        return -self.gamma_max + (np.arange(self.n_detectors) + 0.5) * step

    @classmethod
    def covering(cls, R, n_views, n_detectors, extent=SQRT2, arc=2 * np.pi, start=0.0):
        """Fan wide enough to see the disk of radius ``extent``, views over ``arc``."""
        gamma_max = np.arcsin(min(extent / R, 1.0)) * 1.0001
        betas = start + np.arange(n_views) * (arc / n_views)
        return cls(R, gamma_max, n_detectors, betas)


@dataclass
class FanSinogram:
    """Fan data; ``weights`` (same shape, optional) mark redundancy weighting."""

    geometry: FanGeometry
    data: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        g = self.geometry
        if self.data.shape != (g.betas.size, g.n_detectors):
            raise InvalidArgumentError("fan data must be (views, detectors)")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.shape != self.data.shape:
                raise InvalidArgumentError("fan weights must match the data shape")


@dataclass
class HelixGeometry:
    """Helical source with a flat detector.

    Detector columns are placed at equiangular fan angles, ``u = D tan(gamma)``;
    rows are uniform in ``v`` with spacing ``row_spacing`` and centred on the
    source plane.
    """

    R: float
    D: float
    P: float
    gamma_max: float
    n_cols: int
    n_rows: int
    row_spacing: float
    phis: np.ndarray

    def __post_init__(self):
        self.phis = np.asarray(self.phis, dtype=float)
        if not (self.R > 1 and self.D > 0 and self.P > 0 and self.row_spacing > 0):
            raise InvalidArgumentError("R > 1 and D, P, row_spacing > 0 are required")
        if not 0 < self.gamma_max < np.pi / 2 or self.n_cols < 2 or self.n_rows < 1:
            raise InvalidArgumentError("invalid detector specification")

    @property
    def gammas(self):
        step = 2 * self.gamma_max / self.n_cols
        return -self.gamma_max + (np.arange(self.n_cols) + 0.5) * step

    @property
    def u(self):
        return self.D * np.tan(self.gammas)

    @property
    def v(self):
        return (np.arange(self.n_rows) - (self.n_rows - 1) / 2) * self.row_spacing

    @property
    def source_z(self):
        return self.P * self.phis / (2 * np.pi)

    @property
    def window(self):
        """Half-width in z of the source positions feeding one rebinned slice."""
        return self.P * (np.pi / 2 + self.gamma_max) / (2 * np.pi)

    @classmethod
    def for_volume(cls, vol, R=3.0, D=6.0, P=0.5, n_cols=None, views_per_turn=360,
                   n_rows=None, margin=None):
        """Helix covering ``vol`` plus one rebinning window at each end."""
        n_cols = n_cols or 4 * vol.n
        gamma_max = np.arcsin(SQRT2 / R) * 1.0001
        g = cls(R, D, P, gamma_max, n_cols, 1, 1.0, np.zeros(1))
        d = g.window
        margin = d + 0.5 * vol.z_spacing if margin is None else margin
        z0, z1 = vol.z[0] - margin, vol.z[-1] + margin
        dphi = 2 * np.pi / views_per_turn
        phis = np.arange(np.floor(2 * np.pi * z0 / P / dphi), np.ceil(2 * np.pi * z1 / P / dphi) + 1) * dphi
        u_max = D * np.tan(gamma_max)
        v_max = (u_max**2 + D**2) * d / (R * D)
        row_spacing = vol.z_spacing * D / R
        if n_rows is None:
            n_rows = 2 * int(np.ceil(v_max / row_spacing)) + 3
        return cls(R, D, P, gamma_max, n_cols, n_rows, row_spacing, phis)


@dataclass
class ConeSinogram:
    geometry: HelixGeometry
    data: np.ndarray  # (views, rows, cols)


@dataclass
class CountsSinogram:
    counts: np.ndarray
    lambda_T: float
    sigma_n: float = 0.0
    floor: float = field(default=1.0)


@numba.njit(cache=True, inline="always")
def _bilinear(img, r, c):
    """Bilinear sample at fractional (row, col); zero beyond the outer pixel centres."""
    n0, n1 = img.shape
    r0 = int(np.floor(r))
    c0 = int(np.floor(c))
    if r0 < -1 or c0 < -1 or r0 >= n0 or c0 >= n1:
        return 0.0
    tr = r - r0
    tc = c - c0
    v = 0.0
    if r0 >= 0:
        if c0 >= 0:
            v += (1.0 - tr) * (1.0 - tc) * img[r0, c0]
        if c0 + 1 < n1:
            v += (1.0 - tr) * tc * img[r0, c0 + 1]
    if r0 + 1 < n0:
        if c0 >= 0:
            v += tr * (1.0 - tc) * img[r0 + 1, c0]
        if c0 + 1 < n1:
            v += tr * tc * img[r0 + 1, c0 + 1]
    return v


@numba.njit(cache=True)
def _march(img, ox, oy, dx, dy, s0, length, step):
    """Midpoint-rule integral of ``img`` along rays ``o + s d``, ``s0 <= s <= s0 + length``.

    ``ox, oy, dx, dy, s0`` are flat arrays (one entry per ray); the step is
    shrunk so that it divides ``length`` evenly.  Each ray is summed in a
    fixed order.
    """
    n = img.shape[0]
    h = 2.0 / n
    n_steps = int(np.ceil(length / step))
    ds = length / n_steps
    out = np.empty(ox.size)
    for i in range(ox.size):
        acc = 0.0
        for k in range(n_steps):
            s = s0[i] + (k + 0.5) * ds
            x = ox[i] + s * dx[i]
            y = oy[i] + s * dy[i]
            acc += _bilinear(img, (1.0 - y) / h - 0.5, (x + 1.0) / h - 0.5)
        out[i] = acc * ds
    return out


@numba.njit(cache=True)
def _march3(vol, z0, dz_slice, ox, oy, oz, dx, dy, dz, s0, length, n_steps):
    """Trilinear version of :func:`_march` with a per-ray length."""
    ns, n, _ = vol.shape
    h = 2.0 / n
    out = np.empty(dx.size)
    for i in range(dx.size):
        ds = length[i] / n_steps
        acc = 0.0
        for k in range(n_steps):
            s = s0[i] + (k + 0.5) * ds
            x = ox + s * dx[i]
            y = oy + s * dy[i]
            zf = (oz + s * dz[i] - z0) / dz_slice
            k0 = int(np.floor(zf))
            if k0 < -1 or k0 >= ns:
                continue
            t = zf - k0
            r = (1.0 - y) / h - 0.5
            c = (x + 1.0) / h - 0.5
            if k0 >= 0:
                acc += (1.0 - t) * _bilinear(vol[k0], r, c)
            if k0 + 1 < ns:
                acc += t * _bilinear(vol[k0 + 1], r, c)
        out[i] = acc * ds
    return out


def default_offsets(n, n_offsets=None, extent=SQRT2):
    """Centred uniform detector offsets spanning ``[-extent, extent]``."""
    if n_offsets is None:
        n_offsets = 2 * int(np.ceil(extent * n))
    d = 2 * extent / n_offsets
    return -extent + (np.arange(n_offsets) + 0.5) * d


def radon_parallel(img, angles, n_offsets=None, offsets=None, step=None):
    """Parallel-beam line integrals on uniform offsets.

    ``n_offsets`` defaults to a half-pixel detector pitch over the image
    diagonal; ``step`` defaults to half a pixel.
    """
    img = check_image(img)
    n = img.shape[0]
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    if angles.size == 0:
        raise InvalidArgumentError("need at least one projection angle")
    if offsets is None:
        if n_offsets is not None and n_offsets < n:
            raise InvalidArgumentError(f"n_offsets must be >= n ({n})")
        offsets = default_offsets(n, n_offsets)
    offsets = np.asarray(offsets, dtype=float)
    step = step or 1.0 / n
    P, L = np.meshgrid(angles, offsets, indexing="ij")
    c, s = np.cos(P).ravel(), np.sin(P).ravel()
    Lr = L.ravel()
    data = _march(img, Lr * c, Lr * s, -s, c, np.full(Lr.size, -SQRT2), 2 * SQRT2, step)
    return ParallelSinogram(angles, offsets, data.reshape(P.shape))


def project_fan(img, geom, step=None):
    """Equiangular fan-beam line integrals, shape ``(views, detectors)``."""
    img = check_image(img)
    if not isinstance(geom, FanGeometry):
        raise InvalidArgumentError("geometry must be a FanGeometry")
    n = img.shape[0]
    step = step or 1.0 / n
    B, G = np.meshgrid(geom.betas, geom.gammas, indexing="ij")
    B, G = B.ravel(), G.ravel()
    ox, oy = -geom.R * np.sin(B), geom.R * np.cos(B)
    dx, dy = np.sin(B + G), -np.cos(B + G)
    s0 = geom.R * np.cos(G) - SQRT2
    data = _march(img, ox, oy, dx, dy, s0, 2 * SQRT2, step)
    return FanSinogram(geom, data.reshape(geom.betas.size, geom.n_detectors))


def project_helical(vol, geom, step=None):
    """Cone-beam line integrals through a slice stack along a helix."""
    if not isinstance(vol, Volume):
        raise InvalidArgumentError("expected a Volume")
    zs = vol.z
    src_z = geom.source_z
    if src_z.min() > zs[0] or src_z.max() < zs[-1]:
        raise InvalidArgumentError("helix does not cover the volume")
    n = vol.n
    step = step or 1.0 / n
    u, v = geom.u, geom.v
    out = np.empty((geom.phis.size, geom.n_rows, geom.n_cols))
    U, V = np.meshgrid(u, v)  # (rows, cols)
    U, V = U.ravel(), V.ravel()
    norm = np.sqrt(geom.D**2 + U**2 + V**2)
    trans = np.sqrt(geom.D**2 + U**2) / norm  # transaxial share of the unit direction
    gam = np.arctan(U / geom.D)
    for i, phi in enumerate(geom.phis):
        c = np.array([np.sin(phi), -np.cos(phi)])
        t = np.array([np.cos(phi), np.sin(phi)])
        dx = (geom.D * c[0] + U * t[0]) / norm
        dy = (geom.D * c[1] + U * t[1]) / norm
        dz = V / norm
        ox, oy, oz = -geom.R * np.sin(phi), geom.R * np.cos(phi), src_z[i]
        s0 = (geom.R * np.cos(gam) - SQRT2) / trans
        length = 2 * SQRT2 / trans
        n_steps = int(np.ceil(length.max() / step))
        vals = _march3(vol.slices, zs[0], vol.z_spacing, ox, oy, oz, dx, dy, dz, s0, length, n_steps)
        out[i] = vals.reshape(geom.n_rows, geom.n_cols)
    return ConeSinogram(geom, out)


def simulate_counts(sino, lambda_T, sigma_n=0.0, rng_seed=0, floor=1.0):
    """Poisson photon counts plus Gaussian electronic noise.

    ``sino`` is an array (or anything with a ``data`` attribute) of line
    integrals.  Each leading-axis row draws from its own child seed, so the
    result does not depend on how rows are scheduled.  Counts are floored
    at ``floor`` to keep the log finite.
    """
    if not lambda_T > 0:
        raise InvalidArgumentError("lambda_T must be positive")
    g = np.asarray(getattr(sino, "data", sino), dtype=float)
    mean = lambda_T * np.exp(-g)
    rows = mean.reshape(mean.shape[0], -1) if mean.ndim > 1 else mean.reshape(1, -1)
    out = np.empty_like(rows)
    seeds = np.random.SeedSequence(rng_seed).spawn(rows.shape[0])
    for i, (row, ss) in enumerate(zip(rows, seeds)):
        rng = np.random.default_rng(ss)
        draw = rng.poisson(row).astype(float)
        if sigma_n > 0:
            draw += rng.normal(0.0, sigma_n, size=row.shape)
        out[i] = draw
    counts = np.maximum(out.reshape(mean.shape), floor)
    return CountsSinogram(counts, float(lambda_T), float(sigma_n), floor)


def counts_to_projections(c):
    """Log-transformed projections and their inverse-variance weights."""
    lam = np.asarray(c.counts, dtype=float)
    if np.any(lam <= 0):
        raise RuntimeError("non-positive count after flooring")
    y = np.log(c.lambda_T / lam)
    d = lam**2 / (c.sigma_n**2 + lam)
    return y, d
