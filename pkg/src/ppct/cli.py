"""``ppct`` command-line driver.

Exit codes: 0 success, 2 usage error, 3 unreadable or malformed input,
4 numerical failure.  Failures print one ``ppct: error: ...`` line on stderr.

Options may also come from a plain-text ``--config`` file of ``key = value``
lines (keys are option names without dashes, ``-`` or ``_`` both accepted);
command-line flags take precedence over the file, which takes precedence
over built-in defaults.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import _fft, io, metrics, pipeline
from .errors import DivergenceError, FormatError, InvalidArgumentError
from .phantoms import Volume, disk, helical_test_volume, shepp_logan
from .projector import (ConeSinogram, FanSinogram, HelixGeometry, ParallelSinogram,
                        counts_to_projections, project_fan, project_helical, radon_parallel,
                        simulate_counts)
from .rebin import equally_sloped_angles
from .fbp import fbp_parallel
from .ppfft import ppft_ls_inverse
from .solver import SolverConfig, fcsa_lem, ista_baseline

log = logging.getLogger("ppct")

EXIT_OK, EXIT_USAGE, EXIT_FORMAT, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _str_list(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=int, default=None,
                        help="FFT worker threads (default: all cores); results do not depend on it")
    common.add_argument("--config", default=None, help="key = value file with option defaults")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = _Parser(prog="ppct", description="Few-view CT reconstruction with pseudo-polar FFTs.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("phantom", parents=[common], help="generate a test object")
    s.add_argument("--kind", choices=["shepp-logan", "disk", "helical"], default="shepp-logan")
    s.add_argument("--n", type=int, default=256)
    s.add_argument("--radius", type=float, default=0.5)
    s.add_argument("--value", type=float, default=1.0)
    s.add_argument("--slices", type=int, default=16)
    s.add_argument("--out", required=True)

    s = sub.add_parser("project", parents=[common], help="simulate projections")
    s.add_argument("geometry", choices=["parallel", "fan", "helical"])
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--views", type=int, default=None,
                   help="parallel: uniform angles over a half turn (default: the equally "
                        "sloped set); fan: views over a full turn; helical: views per turn")
    s.add_argument("--detectors", type=int, default=None)
    s.add_argument("--R", type=float, default=pipeline.DEFAULT_R)
    s.add_argument("--D", type=float, default=6.0)
    s.add_argument("--P", type=float, default=0.5)
    s.add_argument("--lambda-t", type=float, default=None, help="source photons; enables noise")
    s.add_argument("--sigma-n", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--stats-out", default=None, help="also write per-ray weights d (noise only)")

    s = sub.add_parser("rebin", parents=[common], help="sinogram -> pseudo-polar data + weights")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--weights-out", required=True)
    s.add_argument("--sinogram-out", default=None, help="also write the rebinned parallel sinogram")
    s.add_argument("--stats", default=None, help="per-ray weights d from 'project --stats-out'")
    s.add_argument("--z", type=float, default=0.0, help="slice height for helical input")
    s.add_argument("--radial", choices=["exact", "linear"], default="exact")

    s = sub.add_parser("recon", parents=[common], help="reconstruct an image")
    s.add_argument("--method", choices=list(pipeline.METHODS), default="fcsa-lem")
    s.add_argument("--in", dest="input", required=True,
                   help="ppdata for fcsa-lem/ista/ls; a parallel or fan sinogram for fbp")
    s.add_argument("--weights", default=None)
    s.add_argument("--n", type=int, default=None, help="image size (fbp)")
    s.add_argument("--out", required=True)
    s.add_argument("--no-eaw", action="store_true")
    s.add_argument("--alpha", type=float, default=None)
    s.add_argument("--lambda1", type=float, default=None)
    s.add_argument("--lambda2", type=float, default=None)
    s.add_argument("--tol", type=float, default=1e-4)
    s.add_argument("--maxiter", type=int, default=200)
    s.add_argument("--tv-iters", type=int, default=10)
    s.add_argument("--warm-start", action="store_true")
    s.add_argument("--filter", choices=["ram-lak", "shepp-logan", "shepp-logan-filter", "hann"], default="ram-lak")

    s = sub.add_parser("sweep", parents=[common], help="error versus number of views")
    s.add_argument("--views", type=_int_list, default=[64, 128, 256])
    s.add_argument("--methods", type=_str_list, default=["ls", "ista", "fcsa-lem"])
    s.add_argument("--n", type=int, default=128)
    s.add_argument("--phantom", default="shepp-logan",
                   help="'shepp-logan' or a PPCT1 image file")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--lambda-t", type=float, default=None)
    s.add_argument("--sigma-n", type=float, default=0.0)
    s.add_argument("--maxiter", type=int, default=200)
    s.add_argument("--lambda1", type=float, default=None)
    s.add_argument("--lambda2", type=float, default=None)
    s.add_argument("--no-eaw", action="store_true")
    s.add_argument("--timing", action="store_true",
                   help="record wall-clock seconds (otherwise 'nan', keeping output reproducible)")
    s.add_argument("--out", required=True)

    s = sub.add_parser("report", parents=[common], help="render PNG images")
    s.add_argument("--image", required=True)
    s.add_argument("--reference", default=None)
    s.add_argument("--out", required=True, help="PNG of the image; with --reference also "
                                                "<out>-diff.png and <out>-error.png")
    s.add_argument("--window", type=float, nargs=2, metavar=("MIN", "MAX"), default=None)
    return p


# ---------------------------------------------------------------------------
# config handling


def read_config(path):
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise FormatError(f"cannot read config {path}: {exc.strerror}") from exc
    for i, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{i}: expected 'key = value'")
        key, value = (t.strip() for t in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _apply_config(parser, argv):
    """Parse ``argv`` with config-file values as defaults of the chosen subcommand."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    cfg = read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, text in cfg.items():
        if key not in known:
            raise UsageError(f"unknown config key {key!r}")
        action = known[key]
        if isinstance(action, (argparse._StoreTrueAction,)):
            defaults[key] = text.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            try:
                defaults[key] = action.type(text)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"config key {key}: {exc}") from exc
        else:
            if action.choices and text not in action.choices:
                raise UsageError(f"config key {key}: {text!r} not in {list(action.choices)}")
            defaults[key] = text
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


# ---------------------------------------------------------------------------
# subcommands


def _load_image(path):
    obj = io.read(path)
    if isinstance(obj, np.ndarray) or isinstance(obj, Volume):
        return obj
    raise FormatError(f"{path} holds a {io.kind_name(obj)}, expected an image")


def cmd_phantom(a):
    if a.kind == "shepp-logan":
        obj = shepp_logan(a.n)
    elif a.kind == "disk":
        obj = disk(a.n, a.radius, a.value)
    else:
        obj = helical_test_volume(a.n, a.slices)
    io.write(a.out, obj)


def cmd_project(a):
    obj = _load_image(a.input)
    if a.geometry == "helical":
        if not isinstance(obj, Volume):
            raise FormatError("helical projection needs a volume (3-D image)")
        geom = HelixGeometry.for_volume(obj, R=a.R, D=a.D, P=a.P, n_cols=a.detectors,
                                        views_per_turn=a.views or 360)
        sino = project_helical(obj, geom)
    else:
        if isinstance(obj, Volume):
            raise FormatError("parallel/fan projection needs a 2-D image")
        n = obj.shape[0]
        if a.geometry == "parallel":
            angles = (equally_sloped_angles(n).angles if a.views is None
                      else np.arange(a.views) * np.pi / a.views)
            sino = radon_parallel(obj, angles)
        else:
            sino = project_fan(obj, pipeline.fan_geometry(n, a.views or 128, a.R, a.detectors))
    if a.lambda_t is not None:
        counts = simulate_counts(sino, a.lambda_t, a.sigma_n, rng_seed=a.seed)
        y, d = counts_to_projections(counts)
        stats = _with_data(sino, d)
        sino = _with_data(sino, y)
        if a.stats_out:
            io.write(a.stats_out, stats)
    elif a.stats_out:
        raise UsageError("--stats-out needs --lambda-t")
    io.write(a.out, sino)


def _with_data(sino, data):
    if isinstance(sino, ParallelSinogram):
        return ParallelSinogram(sino.angles, sino.offsets, data)
    if isinstance(sino, FanSinogram):
        return FanSinogram(sino.geometry, data, sino.weights)
    return ConeSinogram(sino.geometry, data)


def cmd_rebin(a):
    obj = io.read(a.input)
    d = io.read(a.stats).data if a.stats else None
    if isinstance(obj, FanSinogram):
        data = pipeline.rebin_fan(obj, a.n, radial=a.radial, d=d)
    elif isinstance(obj, ParallelSinogram):
        data = pipeline.rebin_parallel(obj, a.n, radial=a.radial, d=d)
    elif isinstance(obj, ConeSinogram):
        if d is not None:
            raise UsageError("--stats is not supported for helical data")
        data = pipeline.rebin_helical(obj, a.z, a.n, radial=a.radial)
    else:
        raise FormatError(f"cannot rebin a {io.kind_name(obj)}")
    io.write(a.out, io.PPData(data.y))
    io.write(a.weights_out, io.Weights(data.weights(True)))
    if a.sinogram_out:
        io.write(a.sinogram_out, data.sinogram)


def _solver_config(a):
    return SolverConfig(alpha=a.alpha, lambda1=a.lambda1, lambda2=a.lambda2, tol=a.tol,
                        maxiter=a.maxiter, tv_inner_iters=a.tv_iters, warm_start=a.warm_start)


def cmd_recon(a):
    obj = io.read(a.input)
    cfg = _solver_config(a)
    if a.method == "fbp":
        if isinstance(obj, FanSinogram):
            if a.n is None:
                raise UsageError("--n is required to reconstruct fan data")
            data = pipeline.rebin_fan(obj, a.n)
            ps, n = data.sinogram, a.n
        elif isinstance(obj, ParallelSinogram):
            ps = obj
            n = a.n or 2 * int(round(len(obj.offsets) / (2 * np.sqrt(2)) / 2))
        else:
            raise FormatError(f"fbp needs a parallel or fan sinogram, got {io.kind_name(obj)}")
        img = fbp_parallel(ps, n, a.filter)
    else:
        if not isinstance(obj, io.PPData):
            raise FormatError(f"{a.method} needs ppdata, got {io.kind_name(obj)}")
        if a.no_eaw or a.weights is None:
            c = np.ones(obj.y.shape)
        else:
            w = io.read(a.weights)
            if not isinstance(w, io.Weights) or w.c.shape != obj.y.shape:
                raise FormatError("weights file does not match the data")
            c = w.c
        if a.method == "fcsa-lem":
            img = fcsa_lem(obj.y, c, cfg).image
        elif a.method == "ista":
            img = ista_baseline(obj.y, cfg).image
        else:
            img = ppft_ls_inverse(obj.y, maxiter=a.maxiter)
    io.write(a.out, img)


def cmd_sweep(a):
    if a.phantom == "shepp-logan":
        ph = shepp_logan(a.n)
    else:
        ph = _load_image(a.phantom)
        if isinstance(ph, Volume):
            raise FormatError("sweep needs a 2-D phantom")
    for m in a.methods:
        if m not in pipeline.METHODS:
            raise UsageError(f"unknown method {m!r}; choose from {', '.join(pipeline.METHODS)}")
    cfg = SolverConfig(lambda1=a.lambda1, lambda2=a.lambda2, maxiter=a.maxiter)
    rows = metrics.sweep(a.views, a.methods, ph, seed=a.seed, lambda_T=a.lambda_t,
                         sigma_n=a.sigma_n, cfg=cfg, use_eaw=not a.no_eaw)
    with open(a.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(metrics.rows_to_csv(rows, timing=a.timing))


def to_gray8(img, lo, hi):
    """Linear window ``[lo, hi] -> [0, 255]``, clipped, rounded to nearest."""
    if not hi > lo:
        hi = lo + 1.0
    scaled = (np.asarray(img, dtype=float) - lo) / (hi - lo)
    return np.rint(np.clip(scaled, 0.0, 1.0) * 255).astype(np.uint8)


def _png(path, arr):
    from PIL import Image

    Image.fromarray(arr, mode="L").save(path, format="PNG")


def cmd_report(a):
    """Image window: ``--window`` or the reference's (else the image's) min/max.

    Difference ``image - reference`` uses the symmetric window
    ``[-m, m]`` with ``m = max|difference|`` (mid-grey is zero); the error map
    ``|difference|`` uses ``[0, m]``.
    """
    img = _load_image(a.image)
    ref = _load_image(a.reference) if a.reference else None
    if isinstance(img, Volume) or isinstance(ref, Volume):
        raise FormatError("report renders 2-D images only")
    if a.window:
        lo, hi = a.window
    else:
        base = ref if ref is not None else img
        lo, hi = float(base.min()), float(base.max())
    _png(a.out, to_gray8(img, lo, hi))
    if ref is not None:
        if ref.shape != img.shape:
            raise FormatError("image and reference sizes differ")
        diff = img - ref
        m = float(np.abs(diff).max()) or 1.0
        stem = a.out[:-4] if a.out.lower().endswith(".png") else a.out
        _png(stem + "-diff.png", to_gray8(diff, -m, m))
        _png(stem + "-error.png", to_gray8(np.abs(diff), 0.0, m))
        print(f"normalized_error={metrics.normalized_error(img, ref):.6g} "
              f"psnr={metrics.psnr(img, ref):.3f}")


COMMANDS = {"phantom": cmd_phantom, "project": cmd_project, "rebin": cmd_rebin,
            "recon": cmd_recon, "sweep": cmd_sweep, "report": cmd_report}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except UsageError as exc:
        print(f"ppct: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print(f"ppct: error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    _fft.set_threads(args.threads)
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover - optional
        threadpool_limits = None
    try:
        if threadpool_limits is not None:
            # BLAS reductions are kept single-threaded so sums never reorder
            with threadpool_limits(limits=1, user_api="blas"):
                COMMANDS[args.command](args)
        else:
            COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ppct: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidArgumentError as exc:
        print(f"ppct: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print(f"ppct: error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except DivergenceError as exc:
        print(f"ppct: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FloatingPointError as exc:
        print(f"ppct: error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
