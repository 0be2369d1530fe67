"""Asymptotic certainty intervals for the Tsallis and Renyi estimates.

The driver quantity is

    zeta_n(I_n) = sup_{x in I_n} { fhat_{n,h}(x) * int K^2 }^(alpha/2),

a plug-in for the same functional of the true density over its support.
With r = ((log(1/h) v log log n)/(n h))^(alpha/2) the half-widths are

    B_n^T = zeta_n * int g^(1-alpha) * r / (1 - alpha)
    B_n^R = zeta_n * r / ((1 - alpha) * gamma_floor^alpha)

and the reported intervals are [estimate - B, estimate + B]: the limsup
bounds state |Dhat - D| <= B_n (1 + eps) eventually, so B_n is the
half-width (the inflation factor is available as a knob and defaults to
off).  gamma_floor is a positive lower bound for f on its support; it is
unobservable from data, so it must come from the density's recorded support
floor or from the caller.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .divergence import (
    ThresholdSchedule,
    check_alpha,
    renyi_from_dalpha,
    thresholded_functional,
    tsallis_from_dalpha,
)
from .distributions import AnalyticDensity, g_power_integral, true_divergences
from .errors import ParameterError
from .kde import EvaluationGrid, KernelSpec, SampleMatrix, kde_evaluate_points
from .kernels import kernel_square_integral
from .rng import PURPOSE_COVERAGE, cell_stream, make_generator


@dataclass(frozen=True)
class ZetaEstimate:
    value: float
    region_nodes: int
    k_square_integral: float
    alpha: float


def estimate_zeta(fhat_values, k_square_integral: float, alpha: float) -> ZetaEstimate:
    """Plug-in zeta over a realized region: max node-wise (fhat * int K^2)^(alpha/2)."""
    check_alpha(alpha)
    vals = np.asarray(fhat_values, dtype=float)
    if vals.size == 0:
        raise ParameterError("zeta needs a nonempty node region")
    if k_square_integral <= 0:
        raise ParameterError("int K^2 must be positive")
    peak = float(np.max(vals))
    value = (max(peak, 0.0) * k_square_integral) ** (alpha / 2.0)
    return ZetaEstimate(
        value=value,
        region_nodes=int(vals.size),
        k_square_integral=float(k_square_integral),
        alpha=float(alpha),
    )


def zeta_oracle(f: AnalyticDensity, k_square_integral: float, alpha: float, nodes) -> float:
    """zeta of the true density over probe nodes (the target of zeta_n)."""
    check_alpha(alpha)
    vals = np.asarray(f.pdf(nodes), dtype=float)
    return (float(np.max(vals)) * k_square_integral) ** (alpha / 2.0)


@dataclass(frozen=True)
class HalfWidths:
    b_tsallis: float
    b_renyi: float
    rate_factor: float
    n: float
    h: float
    alpha: float
    gamma_floor: float


def compute_half_widths(
    zeta,
    n,
    h: float,
    alpha: float,
    g_integral: float,
    gamma_floor: float,
) -> HalfWidths:
    """Interval half-widths B_n^T and B_n^R at the given (n, h).

    ``n`` may be any real >= 3 (only log log n and n h enter); ``h`` must
    lie in (0, 1); ``gamma_floor`` must be a positive density floor.
    """
    check_alpha(alpha)
    value = zeta.value if hasattr(zeta, "value") else float(zeta)
    if n < 3:
        raise ParameterError("half-widths need n >= 3 so that log log n > 0")
    if not (0.0 < h < 1.0):
        raise ParameterError(f"half-widths need h in (0, 1), got {h}")
    if gamma_floor <= 0:
        raise ParameterError("gamma_floor must be positive (density floor on the support)")
    if g_integral <= 0:
        raise ParameterError("int g^(1-alpha) must be positive")
    r = (max(math.log(1.0 / h), math.log(math.log(n))) / (n * h)) ** (alpha / 2.0)
    return HalfWidths(
        b_tsallis=value * g_integral * r / (1.0 - alpha),
        b_renyi=value * r / ((1.0 - alpha) * gamma_floor**alpha),
        rate_factor=r,
        n=float(n),
        h=float(h),
        alpha=float(alpha),
        gamma_floor=float(gamma_floor),
    )


@dataclass(frozen=True)
class CertaintyInterval:
    center: float
    half_width: float
    kind: str
    n: float
    h: float
    alpha: float
    gamma_floor: float

    @property
    def lower(self) -> float:
        return self.center - self.half_width

    @property
    def upper(self) -> float:
        return self.center + self.half_width

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def build_intervals(tsallis_est: float, renyi_est: float, widths: HalfWidths):
    """Pair each divergence estimate with its own half-width."""
    if not (math.isfinite(widths.b_tsallis) and math.isfinite(widths.b_renyi)):
        raise ParameterError("half-widths must be finite")
    if widths.b_tsallis < 0 or widths.b_renyi < 0:
        raise ParameterError("half-widths must be nonnegative")
    common = dict(n=widths.n, h=widths.h, alpha=widths.alpha, gamma_floor=widths.gamma_floor)
    return (
        CertaintyInterval(center=float(tsallis_est), half_width=widths.b_tsallis, kind="tsallis", **common),
        CertaintyInterval(center=float(renyi_est), half_width=widths.b_renyi, kind="renyi", **common),
    )


@dataclass(frozen=True)
class IntervalRow:
    kind: str
    replication: int
    n: int
    h: float
    alpha: float
    estimate: float
    half_width: float
    lower: float
    upper: float
    true_value: float
    covered: bool


@dataclass
class CoverageResult:
    n: int
    h: float
    alpha: float
    replications: int
    seed: int
    rows: list = field(default_factory=list)

    def covered_count(self, kind: str) -> int:
        return sum(1 for r in self.rows if r.kind == kind and r.covered)

    def coverage(self, kind: str) -> float:
        total = sum(1 for r in self.rows if r.kind == kind)
        return self.covered_count(kind) / total if total else float("nan")

    CSV_COLUMNS = (
        "kind",
        "replication",
        "n",
        "h",
        "alpha",
        "estimate",
        "half_width",
        "lower",
        "upper",
        "true_value",
        "covered",
    )


def run_coverage(
    f: AnalyticDensity,
    g: AnalyticDensity,
    alpha: float,
    spec: KernelSpec,
    n: int,
    h: float,
    replications: int,
    seed: int,
    grid: EvaluationGrid,
    thresholds: ThresholdSchedule,
    gamma_floor: float | None = None,
    inflation: float = 0.0,
    threads: int = 1,
) -> CoverageResult:
    """Seeded coverage experiment for both certainty intervals.

    Per replication: draw a sample, form the plug-in estimates at bandwidth
    ``h``, take I_n as the grid nodes where fhat clears the threshold, and
    record whether each interval covers the oracle truth.  ``gamma_floor``
    defaults to the support floor recorded on f and is required when f has
    none.  ``inflation`` applies the optional (1 + eps) factor.
    """
    check_alpha(alpha)
    if n < 3:
        raise ParameterError("coverage needs n >= 3")
    if gamma_floor is None:
        gamma_floor = f.gamma_floor
    if gamma_floor is None:
        raise ParameterError(
            "f has no recorded support floor; pass gamma_floor explicitly "
            "(it is unobservable from data)"
        )
    truth = true_divergences(f, g, alpha)
    k2 = kernel_square_integral(spec)
    g_int = g_power_integral(g, alpha)
    gamma = thresholds.gamma(n)
    nodes = grid.nodes
    weights = grid.weights
    g_vals = np.asarray(g.pdf(nodes), dtype=float)

    def eval_rep(rep: int):
        gen = make_generator(seed, stream=cell_stream(PURPOSE_COVERAGE, rep))
        sample = SampleMatrix(data=f.draw(gen, n), seed=seed)
        fh = kde_evaluate_points(sample, spec, h, nodes)
        d_hat, mask, _ = thresholded_functional(fh, g_vals, weights, alpha, gamma)
        region = fh[mask]
        if region.size == 0:
            region = fh  # threshold excluded everything; fall back to the full grid
        zeta_n = estimate_zeta(region, k2, alpha)
        widths = compute_half_widths(zeta_n, n, h, alpha, g_int, gamma_floor)
        if inflation:
            widths = HalfWidths(
                b_tsallis=widths.b_tsallis * (1.0 + inflation),
                b_renyi=widths.b_renyi * (1.0 + inflation),
                rate_factor=widths.rate_factor,
                n=widths.n,
                h=widths.h,
                alpha=widths.alpha,
                gamma_floor=widths.gamma_floor,
            )
        ts = tsallis_from_dalpha(d_hat, alpha)
        ry = renyi_from_dalpha(d_hat, alpha)
        iv_t, iv_r = build_intervals(ts, ry, widths)
        out = []
        for iv, true_val in ((iv_t, truth.tsallis), (iv_r, truth.renyi)):
            out.append(
                IntervalRow(
                    kind=iv.kind,
                    replication=rep,
                    n=n,
                    h=float(h),
                    alpha=float(alpha),
                    estimate=iv.center,
                    half_width=iv.half_width,
                    lower=iv.lower,
                    upper=iv.upper,
                    true_value=true_val,
                    covered=iv.covers(true_val),
                )
            )
        return out

    reps = range(replications)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_rep = list(pool.map(eval_rep, reps))
    else:
        per_rep = [eval_rep(r) for r in reps]

    result = CoverageResult(
        n=int(n), h=float(h), alpha=float(alpha), replications=replications, seed=int(seed)
    )
    for rows in per_rep:
        result.rows.extend(rows)
    return result
