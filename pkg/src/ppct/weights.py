"""Error Adaptation Weights: one confidence value per pseudo-polar sample."""

from __future__ import annotations

import numpy as np

from .errors import InvalidArgumentError
from .rebin import AngleSet, equally_sloped_angles, line_to_samples


def eaw(d, eps):
    """Combine statistical weights ``d`` and interpolation errors ``eps``.

    Without ``d`` each weight is ``1 / (1 + eps)``.  With ``d`` it is
    ``sqrt(d) / (1 + eps)`` rescaled so that the largest weight is 1.
    Infinite ``eps`` gives a zero weight.

    Examples
    --------
    >>> eaw(None, np.array([0.0, 1.0, 3.0]))
    array([1.  , 0.5 , 0.25])
    """
    eps = np.asarray(eps, dtype=float)
    if np.any(np.isnan(eps)) or np.any(eps < 0):
        raise InvalidArgumentError("error factors must be non-negative")
    with np.errstate(divide="ignore"):
        conf = np.where(np.isinf(eps), 0.0, 1.0 / (1.0 + np.where(np.isinf(eps), 0.0, eps)))
    if d is None:
        return conf
    d = np.asarray(d, dtype=float)
    if d.shape != eps.shape:
        raise InvalidArgumentError(f"d has shape {d.shape} but eps has shape {eps.shape}")
    if np.any(~np.isfinite(d)) or np.any(d < 0):
        raise InvalidArgumentError("statistical weights must be finite and non-negative")
    c = np.sqrt(d) * conf
    top = c.max()
    return c / top if top > 0 else c


def propagate_weights_to_ppgrid(d, angles, n=None):
    """Spread per-ray statistical weights over the pseudo-polar samples.

    ``d`` has shape ``(2n, n_offsets)``, one row per equally sloped angle;
    every sample on a line gets the mean of its row.
    """
    if isinstance(angles, AngleSet):
        n = angles.n
    elif n is None:
        n = int(angles)
    aset = equally_sloped_angles(n)
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != len(aset):
        raise InvalidArgumentError(f"d must have one row per angle ({len(aset)}), got {d.shape}")
    if np.any(~np.isfinite(d)):
        raise InvalidArgumentError("d must be finite")
    return line_to_samples(d.mean(axis=1), n)
