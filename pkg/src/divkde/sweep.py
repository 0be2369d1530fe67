"""Uniform-in-bandwidth sweep experiments and convergence-rate fits.

For each sample size n the estimator is evaluated at every bandwidth of a
geometric grid inside [h'_n, h''_n], where

    h'_n  = c_lower * (log n / n)^exponent_lower,
    h''_n = min(c_upper * n^(-exponent_upper), 1),

and the error against the oracle truth is decomposed through the centering
factor Ehat = int_A (E fhat)^alpha g^(1-alpha):

    delta1 = Dhat - Ehat                      (stochastic part)
    delta2 = int_A ((E fhat)^alpha - f^alpha) g^(1-alpha)   (bias on A)
    delta3 = -int_{A^c} f^alpha g^(1-alpha)   (mass lost to the threshold)

so that delta1 + delta2 + delta3 equals Dhat minus the grid value of the
true functional exactly (all three share one Riemann rule; delta3 must
enter negatively for the split to be additive, and |delta3| is the
functional mass excluded by the threshold).  The sup over
the bandwidth grid per replication, averaged over replications, is the
quantity whose decay the rate fit measures against the envelope

    ((log(1/h'_n) v log log n)/(n h'_n))^(alpha/2)  v  gamma_n^alpha  v  h''_n^(alpha/d).
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .divergence import ThresholdSchedule, check_alpha, renyi_from_dalpha, thresholded_functional, tsallis_from_dalpha
from .distributions import AnalyticDensity, true_divergences
from .errors import ConfigError, FitUndefinedError, ParameterError
from .kde import EvaluationGrid, KernelSpec, SampleMatrix, kde_evaluate_points, smoothed_density_batch
from .rng import PURPOSE_SWEEP, cell_stream, make_generator


@dataclass(frozen=True)
class BandwidthRange:
    """Bandwidth interval rule plus the geometric evaluation grid inside it."""

    c_lower: float
    c_upper: float
    exponent_lower: float
    exponent_upper: float
    grid_size: int = 12

    def __post_init__(self):
        if self.c_lower <= 0 or self.c_upper <= 0:
            raise ParameterError("bandwidth constants must be positive")
        if not (0 < self.exponent_lower < 1) or not (0 < self.exponent_upper < 1):
            raise ParameterError("bandwidth exponents must lie in (0, 1)")
        if self.grid_size < 1:
            raise ParameterError("bandwidth grid needs at least one point")

    @classmethod
    def default(cls, d: int) -> "BandwidthRange":
        return cls(
            c_lower=0.15,
            c_upper=2.0,
            exponent_lower=1.0 / (d + 2),
            exponent_upper=1.0 / (d + 4),
            grid_size=12,
        )

    def h_lower(self, n: int) -> float:
        return self.c_lower * (math.log(n) / n) ** self.exponent_lower

    def h_upper(self, n: int) -> float:
        return min(self.c_upper * n ** (-self.exponent_upper), 1.0)

    def h_grid(self, n: int) -> np.ndarray:
        lo, hi = self.h_lower(n), self.h_upper(n)
        if self.grid_size == 1:
            return np.array([hi])
        return np.geomspace(lo, hi, self.grid_size)

    def validate(self, n_schedule) -> None:
        """Reject ranges that are infeasible or degenerate on the schedule."""
        prev_ratio = None
        for n in n_schedule:
            if n < 2:
                raise ConfigError(f"sample size {n} too small for a bandwidth range")
            lo, hi = self.h_lower(n), self.h_upper(n)
            if not (0 < lo < hi <= 1.0):
                raise ConfigError(
                    f"infeasible bandwidth range at n={n}: h'={lo:.6g}, h''={hi:.6g}"
                )
            ratio = n * lo / math.log(n)
            if prev_ratio is not None and ratio <= prev_ratio:
                raise ConfigError(
                    "n h'_n / log n does not increase over the schedule; "
                    "the stochastic rate condition fails numerically"
                )
            prev_ratio = ratio


@dataclass(frozen=True)
class SweepCell:
    """One (replication, n, h) evaluation with its error decomposition."""

    replication: int
    n: int
    h: float
    d_alpha: float
    err_dalpha: float
    err_renyi: float
    err_tsallis: float
    delta1: float
    delta2: float
    delta3: float
    rate_bound: float
    gamma: float
    sup_dev: float
    bias_sup: float
    mass_below_threshold: float


@dataclass
class SweepResult:
    alpha: float
    n_schedule: list
    replications: int
    seed: int
    true_d_alpha: float
    true_renyi: float
    true_tsallis: float
    d_alpha_grid_true: float
    g_power_integral_grid: float
    rate_bounds: dict
    cells: list = field(default_factory=list)

    def sup_errors(self, which: str = "err_dalpha") -> dict:
        """Per n: the sup over the bandwidth grid for each replication."""
        out = {n: [0.0] * self.replications for n in self.n_schedule}
        for c in self.cells:
            val = getattr(c, which)
            if val > out[c.n][c.replication]:
                out[c.n][c.replication] = val
        return out

    def mean_sup_errors(self, which: str = "err_dalpha") -> dict:
        sups = self.sup_errors(which)
        return {n: float(np.mean(vals)) for n, vals in sups.items()}

    def to_rows(self):
        """CSV rows in the fixed column order of the sweep output schema."""
        for c in self.cells:
            yield (
                c.replication,
                c.n,
                c.h,
                c.d_alpha,
                c.err_dalpha,
                c.err_renyi,
                c.err_tsallis,
                c.delta1,
                c.delta2,
                c.delta3,
                c.rate_bound,
            )

    CSV_COLUMNS = (
        "replication",
        "n",
        "h",
        "d_alpha",
        "err_dalpha",
        "err_renyi",
        "err_tsallis",
        "delta1",
        "delta2",
        "delta3",
        "rate_bound",
    )


def rate_bound(n: int, alpha: float, brange: BandwidthRange, thresholds: ThresholdSchedule, d: int) -> float:
    """Theoretical error envelope at sample size n (max of the three pieces)."""
    lo = brange.h_lower(n)
    hi = brange.h_upper(n)
    stochastic = (max(math.log(1.0 / lo), math.log(math.log(n))) / (n * lo)) ** (alpha / 2.0)
    return max(stochastic, thresholds.gamma(n) ** alpha, hi ** (alpha / d))


def run_sweep(
    f: AnalyticDensity,
    g: AnalyticDensity,
    alpha: float,
    spec: KernelSpec,
    brange: BandwidthRange,
    thresholds: ThresholdSchedule,
    n_schedule,
    replications: int,
    seed: int,
    grid: EvaluationGrid,
    threads: int = 1,
) -> SweepResult:
    """Run the seeded uniform-in-bandwidth experiment.

    Each (replication, n) cell draws a fresh sample from its own counter
    substream and evaluates the estimator at every bandwidth of the grid;
    the smoothing quadrature E fhat is shared across replications since it
    does not depend on the sample.  Cells may be evaluated by a thread pool;
    aggregation order is fixed, so results are independent of ``threads``.
    """
    check_alpha(alpha)
    n_schedule = [int(n) for n in n_schedule]
    if replications < 1:
        raise ParameterError("need at least one replication")
    brange.validate(n_schedule)
    truth = true_divergences(f, g, alpha)

    nodes = grid.nodes
    weights = grid.weights
    g_vals = np.asarray(g.pdf(nodes), dtype=float)
    f_true = np.asarray(f.pdf(nodes), dtype=float)
    g_pow = np.where(g_vals > 0.0, g_vals ** (1.0 - alpha), 0.0)
    g_pow_int = float(weights @ g_pow)
    f_pow_w = np.where(f_true > 0, f_true, 0.0) ** alpha * g_pow * weights
    d_grid_true = float(f_pow_w.sum())

    # smoothing quadrature per (n, h): sample-independent, computed once
    per_n = {}
    for n in n_schedule:
        h_list = brange.h_grid(n)
        entries = []
        for h in h_list:
            e_vals = smoothed_density_batch(f, spec, float(h), nodes)
            e_pow_w = np.where(e_vals > 0, e_vals, 0.0) ** alpha * g_pow * weights
            entries.append(
                {
                    "h": float(h),
                    "e_vals": e_vals,
                    "e_pow_w": e_pow_w,
                    "bias_sup": float(np.max(np.abs(e_vals - f_true))),
                }
            )
        per_n[n] = entries

    bounds = {
        n: rate_bound(n, alpha, brange, thresholds, spec.dimension) for n in n_schedule
    }

    def eval_cell(task):
        n_idx, rep = task
        n = n_schedule[n_idx]
        gamma = thresholds.gamma(n)
        gen = make_generator(seed, stream=cell_stream(PURPOSE_SWEEP, n_idx, rep))
        sample = SampleMatrix(data=f.draw(gen, n), seed=seed)
        cells = []
        for entry in per_n[n]:
            h = entry["h"]
            fh = kde_evaluate_points(sample, spec, h, nodes)
            d_hat, mask, mass_below = thresholded_functional(fh, g_vals, weights, alpha, gamma)
            e_hat = float(entry["e_pow_w"][mask].sum())
            delta1 = d_hat - e_hat
            delta2 = float(entry["e_pow_w"][mask].sum() - f_pow_w[mask].sum())
            delta3 = -float(f_pow_w[~mask].sum())
            err = abs(d_hat - truth.d_alpha)
            err_renyi = abs(renyi_from_dalpha(d_hat, alpha) - truth.renyi) if d_hat > 0 else math.inf
            err_tsallis = abs(tsallis_from_dalpha(d_hat, alpha) - truth.tsallis)
            cells.append(
                SweepCell(
                    replication=rep,
                    n=n,
                    h=h,
                    d_alpha=d_hat,
                    err_dalpha=err,
                    err_renyi=err_renyi,
                    err_tsallis=err_tsallis,
                    delta1=delta1,
                    delta2=delta2,
                    delta3=delta3,
                    rate_bound=bounds[n],
                    gamma=gamma,
                    sup_dev=float(np.max(np.abs(fh - entry["e_vals"]))),
                    bias_sup=entry["bias_sup"],
                    mass_below_threshold=mass_below,
                )
            )
        return cells

    tasks = [(n_idx, rep) for n_idx in range(len(n_schedule)) for rep in range(replications)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_task = list(pool.map(eval_cell, tasks))
    else:
        per_task = [eval_cell(t) for t in tasks]

    result = SweepResult(
        alpha=float(alpha),
        n_schedule=n_schedule,
        replications=replications,
        seed=int(seed),
        true_d_alpha=truth.d_alpha,
        true_renyi=truth.renyi,
        true_tsallis=truth.tsallis,
        d_alpha_grid_true=d_grid_true,
        g_power_integral_grid=g_pow_int,
        rate_bounds=bounds,
    )
    for chunk in per_task:
        result.cells.extend(chunk)
    return result


@dataclass(frozen=True)
class DecompositionRecord:
    delta1: float
    delta2: float
    delta3: float
    d_alpha_hat: float
    e_hat: float
    d_alpha_grid_true: float


def decompose_error(
    f: AnalyticDensity,
    g,
    alpha: float,
    spec: KernelSpec,
    h: float,
    sample: SampleMatrix,
    gamma: float,
    grid: EvaluationGrid,
) -> DecompositionRecord:
    """Error decomposition for one realized (sample, h) cell.

    By construction delta1 + delta2 + delta3 = Dhat - D_grid to rounding,
    where D_grid is the true functional evaluated on the same Riemann rule.
    """
    check_alpha(alpha)
    nodes = grid.nodes
    weights = grid.weights
    g_vals = np.asarray(g.pdf(nodes), dtype=float)
    f_true = np.asarray(f.pdf(nodes), dtype=float)
    g_pow = np.where(g_vals > 0.0, g_vals ** (1.0 - alpha), 0.0)
    f_pow_w = np.where(f_true > 0, f_true, 0.0) ** alpha * g_pow * weights

    fh = kde_evaluate_points(sample, spec, h, nodes)
    d_hat, mask, _ = thresholded_functional(fh, g_vals, weights, alpha, gamma)
    e_vals = smoothed_density_batch(f, spec, h, nodes)
    e_pow_w = np.where(e_vals > 0, e_vals, 0.0) ** alpha * g_pow * weights
    e_hat = float(e_pow_w[mask].sum())
    return DecompositionRecord(
        delta1=d_hat - e_hat,
        delta2=float(e_pow_w[mask].sum() - f_pow_w[mask].sum()),
        delta3=-float(f_pow_w[~mask].sum()),
        d_alpha_hat=d_hat,
        e_hat=e_hat,
        d_alpha_grid_true=float(f_pow_w.sum()),
    )


@dataclass(frozen=True)
class RateFit:
    fitted_exponent: float
    theoretical_exponent: float
    r_squared: float
    pieces: dict


def fit_rate(result: SweepResult, brange: BandwidthRange, spec: KernelSpec) -> RateFit:
    """Least-squares slope of log mean-sup-error against log n.

    The theoretical exponent is the slowest-decaying polynomial piece of the
    envelope under the configured range rule (log factors ignored; the
    threshold piece decays only logarithmically and is excluded).
    """
    means = result.mean_sup_errors()
    ns = sorted(means)
    if len(ns) < 3:
        raise FitUndefinedError("rate fit needs at least 3 distinct sample sizes")
    ys = [means[n] for n in ns]
    if any(y <= 0 for y in ys):
        raise FitUndefinedError("rate fit undefined: nonpositive mean sup-error (identity case?)")
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(ys, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    alpha = result.alpha
    pieces = {
        "stochastic": -alpha * (1.0 - brange.exponent_lower) / 2.0,
        "smoothing_bias": -alpha * brange.exponent_upper / spec.dimension,
    }
    return RateFit(
        fitted_exponent=float(slope),
        theoretical_exponent=max(pieces.values()),
        r_squared=r2,
        pieces=pieces,
    )
