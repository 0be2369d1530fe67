"""Thresholded plug-in divergence estimators.

The common core is the functional D_alpha(f, g) = int f^alpha g^(1-alpha).
With f replaced by a kernel density estimate fhat, the plug-in estimator
restricts integration to the thresholded region A = {x : fhat(x) >= gamma}:

    Dhat_alpha = int_A fhat^alpha(x) g^(1-alpha)(x) dx,   alpha in (0, 1),

computed here either by a Riemann sum on an evaluation grid or by Monte
Carlo under g (draw Y_j ~ g, average (fhat/g)^alpha over draws that clear
the threshold).  Renyi, Tsallis, Hellinger, and Bhattacharyya divergences
are deterministic transforms of the stored core value; Kullback-Leibler has
its own direct plug-in form int_A fhat log(fhat/g).

The vanishing threshold keeps the g^(1-alpha) weighting from amplifying
regions where the estimate carries no evidence; its default schedule
gamma_n = beta (log n)^(-delta) decreases in n as the definition requires.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ParameterError
from .kde import EvaluationGrid, KernelSpec, smoothed_density_batch
from .rng import PURPOSE_MC, cell_stream, make_generator

MC_BLOCK = 1 << 16


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise ParameterError(f"alpha must lie strictly in (0, 1), got {alpha}")
    return alpha


@dataclass(frozen=True)
class ThresholdSchedule:
    """gamma_n = beta * (log n)^(-delta); positive and nonincreasing in n."""

    beta: float = 0.01
    delta: float = 1.0

    def __post_init__(self):
        if self.beta <= 0:
            raise ParameterError("threshold beta must be positive")
        if self.delta < 0:
            raise ParameterError("threshold delta must be nonnegative")

    def gamma(self, n: int) -> float:
        if n < 2:
            raise ParameterError("threshold schedule needs n >= 2")
        return self.beta * math.log(n) ** (-self.delta)


@dataclass(frozen=True)
class DivergenceEstimate:
    """The core value Dhat_alpha plus its Renyi/Tsallis transforms.

    ``renyi`` and ``tsallis`` are always recomputed from the stored
    ``d_alpha``, so the algebraic identities between the derived divergences
    hold to floating rounding.  ``mass_below_threshold`` is the g-weighted
    fraction of the integration domain excluded by the threshold.
    """

    d_alpha: float
    alpha: float
    method: str
    threshold_used: float
    mass_below_threshold: float
    mc_std_error: float | None = None
    warning: str | None = None

    @property
    def renyi(self) -> float:
        return renyi_from_dalpha(self.d_alpha, self.alpha)

    @property
    def tsallis(self) -> float:
        return tsallis_from_dalpha(self.d_alpha, self.alpha)


def renyi_from_dalpha(d_alpha: float, alpha: float) -> float:
    """log(D_alpha)/(alpha - 1); +inf signals D_alpha = 0 rather than raising."""
    check_alpha(alpha)
    if d_alpha < 0:
        raise NumericError(f"negative core functional value {d_alpha!r}")
    if d_alpha == 0.0:
        return math.inf
    return math.log(d_alpha) / (alpha - 1.0)


def tsallis_from_dalpha(d_alpha: float, alpha: float) -> float:
    check_alpha(alpha)
    return (d_alpha - 1.0) / (alpha - 1.0)


def renyi_estimate(est: DivergenceEstimate, alpha: float | None = None) -> float:
    return renyi_from_dalpha(est.d_alpha, est.alpha if alpha is None else alpha)


def tsallis_estimate(est: DivergenceEstimate, alpha: float | None = None) -> float:
    return tsallis_from_dalpha(est.d_alpha, est.alpha if alpha is None else alpha)


def hellinger_estimate(d_half: DivergenceEstimate) -> float:
    """1 - Dhat_{1/2}; reported raw (a warning, not a clamp, past tolerance)."""
    if abs(d_half.alpha - 0.5) > 1e-12:
        raise ParameterError("Hellinger requires the alpha = 1/2 core value")
    if d_half.d_alpha > 1.0 + 1e-6:
        import warnings

        warnings.warn(
            f"Dhat_{{1/2}} = {d_half.d_alpha!r} exceeds 1; estimator noise", stacklevel=2
        )
    return 1.0 - d_half.d_alpha


def bhattacharyya_estimate(d_half: DivergenceEstimate) -> float:
    """-log Dhat_{1/2}; +inf signals a vanished core value."""
    if abs(d_half.alpha - 0.5) > 1e-12:
        raise ParameterError("Bhattacharyya requires the alpha = 1/2 core value")
    if d_half.d_alpha == 0.0:
        return math.inf
    return -math.log(d_half.d_alpha)


def _as_pdf(obj):
    """Accept an AnalyticDensity-like (has .pdf) or a vectorized callable."""
    return obj.pdf if hasattr(obj, "pdf") else obj


def _g_power(g_vals: np.ndarray, alpha: float) -> np.ndarray:
    # 0^(1-alpha) = 0 for alpha in (0,1): nodes outside g's support contribute nothing
    return np.where(g_vals > 0.0, g_vals ** (1.0 - alpha), 0.0)


def thresholded_functional(f_vals, g_vals, weights, alpha: float, gamma: float):
    """Grid core shared by the quadrature estimators.

    Returns ``(d_alpha, mask, mass_below)`` where ``mask`` is the realized
    membership of each node in A = {fhat >= gamma} and ``mass_below`` the
    g-weighted excluded fraction.
    """
    check_alpha(alpha)
    if gamma < 0:
        raise ParameterError("threshold gamma must be nonnegative")
    f_vals = np.asarray(f_vals, dtype=float)
    g_vals = np.asarray(g_vals, dtype=float)
    weights = np.asarray(weights, dtype=float)
    mask = f_vals >= gamma
    integrand = np.where(mask, np.where(f_vals > 0, f_vals, 0.0) ** alpha, 0.0) * _g_power(
        g_vals, alpha
    )
    if not np.all(np.isfinite(integrand)):
        raise NumericError("non-finite integrand in the thresholded functional")
    d_alpha = float(weights @ integrand)
    g_total = float(weights @ g_vals)
    excluded = float(weights[~mask] @ g_vals[~mask]) if g_total > 0 else 0.0
    mass_below = excluded / g_total if g_total > 0 else 0.0
    return d_alpha, mask, mass_below


def dalpha_quadrature(fhat, g, alpha: float, gamma: float, grid: EvaluationGrid) -> DivergenceEstimate:
    """Riemann-sum plug-in estimate of the core functional over the grid box."""
    f_vals = np.asarray(_as_pdf(fhat)(grid.nodes), dtype=float)
    g_vals = np.asarray(_as_pdf(g)(grid.nodes), dtype=float)
    d_alpha, _, mass_below = thresholded_functional(f_vals, g_vals, grid.weights, alpha, gamma)
    return DivergenceEstimate(
        d_alpha=d_alpha,
        alpha=float(alpha),
        method="quadrature",
        threshold_used=float(gamma),
        mass_below_threshold=mass_below,
        warning="core value exceeds 1 beyond tolerance" if d_alpha > 1.0 + 1e-6 else None,
    )


def dalpha_monte_carlo(
    fhat, g, alpha: float, gamma: float, m: int, seed: int
) -> DivergenceEstimate:
    """Monte-Carlo plug-in estimate under g.

    Draws Y_1..Y_m from g in fixed-size blocks, one counter-based substream
    per block, and averages (fhat(Y)/g(Y))^alpha 1{fhat(Y) >= gamma}.  The
    result depends only on (inputs, seed, m), never on thread count.
    """
    check_alpha(alpha)
    if m < 2:
        raise ParameterError("Monte Carlo needs m >= 2 draws")
    if gamma < 0:
        raise ParameterError("threshold gamma must be nonnegative")
    fhat_pdf = _as_pdf(fhat)
    total = 0.0
    total_sq = 0.0
    n_below = 0
    for block_idx, start in enumerate(range(0, m, MC_BLOCK)):
        size = min(MC_BLOCK, m - start)
        gen = make_generator(seed, stream=cell_stream(PURPOSE_MC, block_idx))
        y = g.draw(gen, size)
        g_vals = np.asarray(g.pdf(y), dtype=float)
        if np.any(g_vals <= 0.0):
            raise NumericError("sampler produced a point where g vanishes")
        f_vals = np.asarray(fhat_pdf(y), dtype=float)
        keep = f_vals >= gamma
        ratio = np.where(keep, np.where(f_vals > 0, f_vals, 0.0) / g_vals, 0.0) ** alpha
        ratio = np.where(keep, ratio, 0.0)
        total += float(ratio.sum())
        total_sq += float((ratio * ratio).sum())
        n_below += int(np.count_nonzero(~keep))
    mean = total / m
    var = max(total_sq / m - mean * mean, 0.0) * m / (m - 1)
    return DivergenceEstimate(
        d_alpha=mean,
        alpha=float(alpha),
        method="monte_carlo",
        threshold_used=float(gamma),
        mass_below_threshold=n_below / m,
        mc_std_error=math.sqrt(var / m),
    )


def kl_plugin(fhat, g, gamma: float, grid: EvaluationGrid) -> float:
    """Direct plug-in Kullback-Leibler: Riemann sum of fhat log(fhat/g) on A."""
    if gamma < 0:
        raise ParameterError("threshold gamma must be nonnegative")
    f_vals = np.asarray(_as_pdf(fhat)(grid.nodes), dtype=float)
    g_vals = np.asarray(_as_pdf(g)(grid.nodes), dtype=float)
    mask = f_vals >= gamma
    active = mask & (f_vals > 0.0)
    if np.any(active & (g_vals <= 0.0)):
        raise NumericError(
            "fhat clears the threshold where g vanishes; the KL integrand is infinite"
        )
    integrand = np.zeros(f_vals.shape)
    integrand[active] = f_vals[active] * np.log(f_vals[active] / g_vals[active])
    return float(grid.weights @ integrand)


def kl_monte_carlo(fhat, g, gamma: float, m: int, seed: int) -> tuple[float, float]:
    """Monte-Carlo KL under g: average of r log r, r = fhat/g, over A draws.

    Returns ``(estimate, std_error)``; same blocked substream scheme as
    ``dalpha_monte_carlo``.
    """
    if gamma < 0:
        raise ParameterError("threshold gamma must be nonnegative")
    if m < 2:
        raise ParameterError("Monte Carlo needs m >= 2 draws")
    fhat_pdf = _as_pdf(fhat)
    total = 0.0
    total_sq = 0.0
    for block_idx, start in enumerate(range(0, m, MC_BLOCK)):
        size = min(MC_BLOCK, m - start)
        gen = make_generator(seed, stream=cell_stream(PURPOSE_MC, block_idx))
        y = g.draw(gen, size)
        g_vals = np.asarray(g.pdf(y), dtype=float)
        if np.any(g_vals <= 0.0):
            raise NumericError("sampler produced a point where g vanishes")
        f_vals = np.asarray(fhat_pdf(y), dtype=float)
        keep = (f_vals >= gamma) & (f_vals > 0.0)
        ratio = np.where(keep, f_vals / g_vals, 1.0)
        terms = np.where(keep, ratio * np.log(ratio), 0.0)
        total += float(terms.sum())
        total_sq += float((terms * terms).sum())
    mean = total / m
    var = max(total_sq / m - mean * mean, 0.0) * m / (m - 1)
    return mean, math.sqrt(var / m)


def centered_expectation_dalpha(
    f,
    g,
    spec: KernelSpec,
    h: float,
    alpha: float,
    region_mask,
    grid: EvaluationGrid,
    smoothed_values: np.ndarray | None = None,
) -> float:
    """Centering factor: int over the realized region of (E fhat)^alpha g^(1-alpha).

    ``region_mask`` is the node-wise membership of the set A realized by an
    actual estimate (see ``thresholded_functional``).  ``smoothed_values``
    may carry precomputed E fhat grid values to avoid repeating the
    smoothing quadrature.
    """
    check_alpha(alpha)
    region_mask = np.asarray(region_mask, dtype=bool)
    if region_mask.shape[0] != grid.n_nodes:
        raise ParameterError("region indicator length does not match the grid")
    if smoothed_values is None:
        smoothed_values = smoothed_density_batch(f, spec, h, grid.nodes)
    e_vals = np.asarray(smoothed_values, dtype=float)
    g_vals = np.asarray(_as_pdf(g)(grid.nodes), dtype=float)
    integrand = np.where(region_mask, np.where(e_vals > 0, e_vals, 0.0) ** alpha, 0.0)
    integrand = integrand * _g_power(g_vals, alpha)
    if not np.all(np.isfinite(integrand)):
        raise NumericError("non-finite integrand in the centering factor")
    return float(grid.weights @ integrand)
