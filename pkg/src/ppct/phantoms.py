"""Synthetic test objects.

Images are plain ``(n, n)`` float64 arrays covering the square [-1, 1]^2.
Row 0 is the top of the image (y = +1) and column 0 the left edge
(x = -1); pixel centres sit at half-pixel offsets so the grid is symmetric
about both axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class Ellipse:
    """Additive ellipse in normalised coordinates; ``angle`` is in degrees."""

    intensity: float
    a: float
    b: float
    x0: float = 0.0
    y0: float = 0.0
    angle: float = 0.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise InvalidArgumentError("ellipse semi-axes must be positive")

    def contains(self, x, y):
        """Boolean mask of points strictly inside or on the ellipse."""
        t = np.deg2rad(self.angle)
        dx = np.asarray(x) - self.x0
        dy = np.asarray(y) - self.y0
        xr = dx * np.cos(t) + dy * np.sin(t)
        yr = -dx * np.sin(t) + dy * np.cos(t)
        return (xr / self.a) ** 2 + (yr / self.b) ** 2 <= 1.0


# Classic (unmodified) Shepp-Logan table.
SHEPP_LOGAN = (
    Ellipse(1.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
    Ellipse(-0.98, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
    Ellipse(-0.02, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
    Ellipse(-0.02, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
    Ellipse(0.01, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
    Ellipse(0.01, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
    Ellipse(0.01, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
    Ellipse(0.01, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
    Ellipse(0.01, 0.0230, 0.0230, 0.00, -0.6060, 0.0),
    Ellipse(0.01, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
)


def pixel_centers(n):
    """Return ``(x, y)`` coordinate grids of the pixel centres."""
    h = 2.0 / n
    c = -1.0 + (np.arange(n) + 0.5) * h
    return np.meshgrid(c, -c)


def check_image(img, name="image"):
    """Validate an image array and return it as float64."""
    img = np.asarray(img, dtype=float)
    if img.ndim != 2 or img.shape[0] != img.shape[1]:
        raise InvalidArgumentError(f"{name} must be a square 2-D array")
    n = img.shape[0]
    if n < 2 or n % 2:
        raise InvalidArgumentError(f"{name} side must be even and >= 2, got {n}")
    if not np.all(np.isfinite(img)):
        raise InvalidArgumentError(f"{name} contains non-finite values")
    return img


def render_ellipses(n, ellipses, clip=True):
    """Rasterise a sum of ellipses by pixel-centre sampling."""
    x, y = pixel_centers(n)
    img = np.zeros((n, n))
    for e in ellipses:
        img[e.contains(x, y)] += e.intensity
    if clip:
        np.maximum(img, 0.0, out=img)
    return img


def shepp_logan(n):
    """Classic Shepp-Logan head phantom on an ``n x n`` grid."""
    if not isinstance(n, (int, np.integer)) or n < 8 or n % 2:
        raise InvalidArgumentError(f"n must be an even integer >= 8, got {n!r}")
    return render_ellipses(int(n), SHEPP_LOGAN)


def disk(n, r, v=1.0):
    """Centred disk of radius ``r`` (normalised units) and value ``v``."""
    if not 0 < r <= 1:
        raise InvalidArgumentError(f"radius must be in (0, 1], got {r}")
    if n < 2 or n % 2:
        raise InvalidArgumentError(f"n must be even, got {n}")
    x, y = pixel_centers(n)
    return np.where(x**2 + y**2 <= r**2, float(v), 0.0)


@dataclass
class Volume:
    """Stack of equally spaced axial slices, centred on z = 0."""

    slices: np.ndarray
    z_spacing: float = field(default=None)

    def __post_init__(self):
        self.slices = np.asarray(self.slices, dtype=float)
        if self.slices.ndim != 3 or self.slices.shape[0] < 1:
            raise InvalidArgumentError("volume needs a (n_slices, n, n) array")
        check_image(self.slices[0], "slice")
        if self.z_spacing is None:
            self.z_spacing = 2.0 / self.n
        if self.z_spacing <= 0:
            raise InvalidArgumentError("z_spacing must be positive")

    @property
    def n(self):
        return self.slices.shape[1]

    @property
    def n_slices(self):
        return self.slices.shape[0]

    @property
    def z(self):
        """Axial position of every slice centre."""
        k = np.arange(self.n_slices)
        return (k - (self.n_slices - 1) / 2.0) * self.z_spacing


HELICAL_OUTER = Ellipse(1.0, 0.75, 0.75)
HELICAL_INSERTS = (
    Ellipse(0.5, 0.18, 0.18, 0.35, 0.10),
    Ellipse(-0.4, 0.12, 0.12, -0.30, -0.25),
    Ellipse(1.0, 0.08, 0.08, -0.15, 0.40),
)


def helical_test_volume(n, n_slices, z_spacing=None):
    """Cylinder with off-axis inserts that occupy only the middle slices.

    Inserts are present for slices ``k0 <= k < n_slices - k0`` with
    ``k0 = max(1, n_slices // 4)``, so the end slices hold only the outer
    cylinder and the central third is z-invariant.
    """
    if n < 8 or n % 2:
        raise InvalidArgumentError(f"n must be even and >= 8, got {n}")
    if n_slices < 3:
        raise InvalidArgumentError(f"need at least 3 slices, got {n_slices}")
    base = render_ellipses(n, [HELICAL_OUTER])
    full = render_ellipses(n, (HELICAL_OUTER,) + HELICAL_INSERTS)
    k0 = max(1, n_slices // 4)
    slices = np.stack([full if k0 <= k < n_slices - k0 else base for k in range(n_slices)])
    return Volume(slices, z_spacing)
