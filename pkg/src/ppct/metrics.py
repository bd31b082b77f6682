"""Image-quality measures and the view-count sweep."""

from __future__ import annotations

import csv
import io as _io
import logging
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .phantoms import shepp_logan
from .projector import counts_to_projections, project_fan, simulate_counts
from .solver import SolverConfig

log = logging.getLogger(__name__)

CSV_HEADER = ("method", "views", "n", "normalized_error", "seconds")


def normalized_error(x, ref):
    """``||x - ref|| / ||ref||``."""
    x = np.asarray(x, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if x.shape != ref.shape:
        raise InvalidArgumentError(f"shape mismatch {x.shape} vs {ref.shape}")
    den = np.linalg.norm(ref)
    if den == 0:
        raise InvalidArgumentError("reference image is zero")
    return float(np.linalg.norm(x - ref) / den)


def psnr(x, ref):
    """Peak signal-to-noise ratio in dB, peak = ``max(ref)``."""
    x = np.asarray(x, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if x.shape != ref.shape:
        raise InvalidArgumentError(f"shape mismatch {x.shape} vs {ref.shape}")
    mse = float(np.mean((x - ref) ** 2))
    peak = float(ref.max())
    if peak <= 0:
        raise InvalidArgumentError("reference peak must be positive")
    return float("inf") if mse == 0 else 10 * np.log10(peak**2 / mse)


@dataclass
class SweepRow:
    method: str
    views: int
    n: int
    normalized_error: float
    seconds: float
    message: str = ""


def sweep(view_counts, methods, phantom=None, n=128, seed=0, lambda_T=None, sigma_n=0.0,
          cfg=None, R=None, detectors=None, use_eaw=True):
    """Reconstruct ``phantom`` from every view count with every method.

    Fan data over a full turn are simulated per view count (noiseless unless
    ``lambda_T`` is given, in which case counts are drawn with ``seed``),
    rebinned once and handed to each method.  A failing method yields a row
    with ``nan`` error and the exception text in ``message``; the sweep goes on.
    Rows come out in input order: views outer, methods inner.
    """
    from . import pipeline

    if phantom is None:
        phantom = shepp_logan(n)
    phantom = np.asarray(phantom, dtype=float)
    n = phantom.shape[0]
    cfg = cfg or SolverConfig()
    rows = []
    for views in view_counts:
        geom = pipeline.fan_geometry(n, int(views), R or pipeline.DEFAULT_R, detectors)
        fan = project_fan(phantom, geom)
        d = None
        if lambda_T is not None:
            counts = simulate_counts(fan, lambda_T, sigma_n, rng_seed=seed)
            y_fan, d = counts_to_projections(counts)
            fan = type(fan)(geom, y_fan)
        data = pipeline.rebin_fan(fan, n, d=d)
        for method in methods:
            try:
                img, secs, _ = pipeline.reconstruct(method, data, cfg, use_eaw=use_eaw)
                rows.append(SweepRow(method, int(views), n, normalized_error(img, phantom), secs))
            except Exception as exc:  # keep sweeping; the row records the failure
                log.warning("sweep: %s at %d views failed: %s", method, views, exc)
                rows.append(SweepRow(method, int(views), n, float("nan"), float("nan"), str(exc)))
    return rows


def rows_to_csv(rows, timing=True):
    """CSV text with header ``method,views,n,normalized_error,seconds``.

    Wall-clock times differ between runs; with ``timing=False`` the seconds
    column is written as ``nan`` so that the table is reproducible.
    """
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        secs = repr(float(r.seconds)) if timing else "nan"
        w.writerow([r.method, r.views, r.n, repr(float(r.normalized_error)), secs])
    return buf.getvalue()
