"""divkde: plug-in kernel estimators of divergence measures.

Estimates Renyi-alpha, Tsallis-alpha, Kullback-Leibler, Hellinger, and
Bhattacharyya divergences between a sampled density f and a known density g
by substituting a kernel density estimate into the core functional
int f^alpha g^(1-alpha), restricted to the region where the estimate clears
a vanishing threshold.  Companion experiment drivers verify
uniform-in-bandwidth consistency rates, the stochastic/bias error
decomposition, and asymptotic certainty intervals.

The kernel-sum inner loop runs in a compiled extension when available and
falls back to pure NumPy otherwise; see ``divkde.kde.ACTIVE_BACKEND``.
"""

__version__ = "0.1.0"

from .confidence import (
    CertaintyInterval,
    HalfWidths,
    ZetaEstimate,
    build_intervals,
    compute_half_widths,
    estimate_zeta,
    run_coverage,
    zeta_oracle,
)
from .divergence import (
    DivergenceEstimate,
    ThresholdSchedule,
    bhattacharyya_estimate,
    centered_expectation_dalpha,
    dalpha_monte_carlo,
    dalpha_quadrature,
    hellinger_estimate,
    kl_monte_carlo,
    kl_plugin,
    renyi_estimate,
    tsallis_estimate,
)
from .distributions import (
    AnalyticDensity,
    TrueDivergences,
    density_from_config,
    draw_sample,
    g_power_integral,
    gaussian,
    gaussian_mixture,
    true_divergences,
    truncated_gaussian,
    uniform_box,
)
from .kde import (
    ACTIVE_BACKEND,
    EvaluationGrid,
    KDEDensity,
    SampleMatrix,
    grid_for_sample,
    kde_evaluate,
    kde_evaluate_batch,
    kde_evaluate_points,
    smoothed_density,
    smoothed_density_batch,
    sup_deviation,
)
from .kernels import (
    KernelSpec,
    evaluate_kernel,
    kernel_square_integral,
    validate_kernel,
)
from .sweep import (
    BandwidthRange,
    DecompositionRecord,
    RateFit,
    SweepResult,
    decompose_error,
    fit_rate,
    rate_bound,
    run_sweep,
)

__all__ = [
    "ACTIVE_BACKEND",
    "AnalyticDensity",
    "BandwidthRange",
    "CertaintyInterval",
    "DecompositionRecord",
    "DivergenceEstimate",
    "EvaluationGrid",
    "HalfWidths",
    "KDEDensity",
    "KernelSpec",
    "RateFit",
    "SampleMatrix",
    "SweepResult",
    "ThresholdSchedule",
    "TrueDivergences",
    "ZetaEstimate",
    "bhattacharyya_estimate",
    "build_intervals",
    "centered_expectation_dalpha",
    "compute_half_widths",
    "dalpha_monte_carlo",
    "dalpha_quadrature",
    "decompose_error",
    "density_from_config",
    "draw_sample",
    "estimate_zeta",
    "evaluate_kernel",
    "fit_rate",
    "g_power_integral",
    "gaussian",
    "gaussian_mixture",
    "grid_for_sample",
    "hellinger_estimate",
    "kde_evaluate",
    "kde_evaluate_batch",
    "kde_evaluate_points",
    "kernel_square_integral",
    "kl_monte_carlo",
    "kl_plugin",
    "rate_bound",
    "renyi_estimate",
    "run_coverage",
    "run_sweep",
    "smoothed_density",
    "smoothed_density_batch",
    "sup_deviation",
    "true_divergences",
    "truncated_gaussian",
    "tsallis_estimate",
    "uniform_box",
    "validate_kernel",
    "zeta_oracle",
]
