"""Finite-difference splitting schemes for option pricing under NIG, GH and Meixner jump-diffusions."""

from .cos import COSConfig, cos_price
from .diffusion import DiffusionSpec, bs_closed_form, cn_step
from .errors import (CapacityError, ConvergenceError, DomainError, GridError, LevyPideError,
                     SolveError, StabilityError)
from .gh import bessel_asymp_coeffs, build_gh_operator, build_Z, gh_jump_step, max_step_bound
from .grid import BandedMatrix, CompositeGrid, build_grid, build_stencil
from .harness import ConvergenceReport, StudyConfig, run_convergence, timing_regression
from .matfuncs import eventual_nonneg_probe, expm, is_em_matrix, logm, powm, spectral_radius, sqrtm
from .meixner import build_meixner_factors, meixner_step_interp, meixner_step_product
from .nig import build_nig_generator, nig_jump_step_expm, nig_jump_step_pade
from .params import (GHParams, MarketParams, MeixnerParams, NIGParams, Payoff, char_exponent,
                     compensator, validate)
from .splitting import (SplitPlan, experiment_price, experiment_two_step, price_at_strike,
                        strang_step)

__all__ = [name for name in dir() if not name.startswith("_")]
