"""Two-parameter mean-residual-life process toolkit.

Measure families over the first quadrant, stochastic-order and total-
positivity checks on their integrated survival functions, and Monte Carlo
realization of the associated (sub)martingales by Brownian stopping.
"""

from .measures import (
    DensityKernel, Measure, MeasureError, PiecewiseFn, Segment,
    affine_pushforward, convex_combine, convolve, hardy_littlewood,
    integrated_survival, integrated_survival_fn, mean,
    measure_from_integrated_survival, upper_support,
    validate_integrated_survival,
)
from .ordering import (
    GridFunction2, GridFunction3, OrderReport, compose_mtp2, det2_criterion,
    icx_compare, mrl_compare, mtp2_check, pairwise_implies_mtp2_crosscheck,
    tp2_pair_check,
)
from .families import (
    Kernel, NonMrlSplit, ProcessFamily, censor, censor_eps, censor_mzero,
    counterexample_mrl_not_mtp2, c_field, diatomic, family_from_spec,
    family_mrl_report, kemperman_phi, kernel_binomial,
    kernel_from_continuous_rows, kernel_from_rows, kernel_identity,
    kernel_negbinomial, kernel_qbinomial, nonmrl_eps, reflected_family,
    subordinate,
)
from .montecarlo import (
    EmpiricalLaw, PathConfig, bridge_max_cdf, bridge_max_step, ks_distance,
    w1_distance,
)
from .coxhobson import (
    ChainEmbedResult, CoxHobsonBarrier, EmbedError, EmbedResult, PHI_LIBRARY,
    double_barrier_martingale, embed, embed_family, make_barrier,
    mixture_submartingale, pi_function, psi_via_tangents,
    submartingale_statistic, tangent_params,
)
from . import pathsim

__version__ = "0.1.0"
