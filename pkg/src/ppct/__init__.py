"""Few-view CT reconstruction on the pseudo-polar Fourier grid.

Fan and helical projections are rebinned to parallel rays at equally sloped
angles, converted to pseudo-polar Fourier samples, weighted by how much each
sample can be trusted, and reconstructed with a composite-splitting
compressed-sensing solver.
"""

from .errors import DivergenceError, FormatError, InvalidArgumentError
from .fbp import fbp_parallel
from .metrics import normalized_error, psnr, sweep
from .phantoms import Volume, disk, helical_test_volume, shepp_logan
from .ppfft import (pp_angles, ppft_adjoint, ppft_bruteforce, ppft_forward, ppft_ls_inverse,
                    spectral_norm_sq)
from .priors import dwt_forward, dwt_inverse, soft_threshold, tv_prox, tv_value
from .projector import (ConeSinogram, FanGeometry, FanSinogram, HelixGeometry, ParallelSinogram,
                        counts_to_projections, project_fan, project_helical, radon_parallel,
                        simulate_counts)
from .rebin import (AngleSet, cb_ssrb, equally_sloped_angles, interpolation_error,
                    parallel_to_ppdata, rebin_fan_to_parallel)
from .solver import ReconResult, SolverConfig, e_step, fcsa_lem, ista_baseline
from .weights import eaw, propagate_weights_to_ppgrid

__version__ = "0.1.0"

__all__ = [
    "AngleSet", "ConeSinogram", "DivergenceError", "FanGeometry", "FanSinogram", "FormatError",
    "HelixGeometry", "InvalidArgumentError", "ParallelSinogram", "ReconResult", "SolverConfig",
    "Volume", "cb_ssrb", "counts_to_projections", "disk", "dwt_forward", "dwt_inverse", "e_step",
    "eaw", "equally_sloped_angles", "fbp_parallel", "fcsa_lem", "helical_test_volume",
    "interpolation_error", "ista_baseline", "normalized_error", "parallel_to_ppdata", "pp_angles",
    "ppft_adjoint", "ppft_bruteforce", "ppft_forward", "ppft_ls_inverse", "project_fan",
    "project_helical", "propagate_weights_to_ppgrid", "psnr", "radon_parallel",
    "rebin_fan_to_parallel", "shepp_logan", "simulate_counts", "soft_threshold",
    "spectral_norm_sq", "sweep", "tv_prox", "tv_value",
]
