"""Config-driven experiment front end.

Subcommands: ``estimate`` (one-shot divergence report), ``sweep``
(uniform-in-bandwidth experiment + rate fit), ``ci`` (certainty-interval
coverage table), and ``validate-kernel``.  Every command is a pure function
of the config bytes and the seed: outputs carry no timestamps, floats are
printed with 17 significant digits, and JSON keys are sorted, so reruns are
byte-identical at any ``--threads`` value.

Exit codes: 0 success, 1 validation/assertion failure, 2 config error,
3 numeric failure.
"""

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .confidence import CoverageResult, run_coverage
from .divergence import (
    ThresholdSchedule,
    bhattacharyya_estimate,
    dalpha_monte_carlo,
    dalpha_quadrature,
    hellinger_estimate,
    kl_monte_carlo,
    kl_plugin,
)
from .distributions import density_from_config, draw_sample, g_power_integral
from .errors import ConfigError, DomainError, FitUndefinedError, NumericError, ParameterError
from .kde import ACTIVE_BACKEND, EvaluationGrid, KDEDensity
from .kernels import FAMILIES, KernelSpec, validate_kernel
from .sweep import BandwidthRange, fit_rate, run_sweep

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return "%.17g" % x
    return str(x)


def _write_csv(path: Path, columns, rows):
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _load_config(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"config is missing required key {key!r}")
    return cfg[key]


class Experiment:
    """Validated, fully-defaulted experiment configuration."""

    def __init__(self, cfg: dict, seed_override: int | None = None):
        try:
            self.f = density_from_config(_require(cfg, "f"))
            self.g = density_from_config(_require(cfg, "g"))
        except ParameterError as exc:
            raise ConfigError(str(exc)) from None
        if self.f.dimension != self.g.dimension:
            raise ConfigError("f and g must share one dimension")
        d = self.f.dimension

        kernel_cfg = cfg.get("kernel", {"family": "gaussian", "order": 2})
        try:
            self.kernel = KernelSpec(
                family=kernel_cfg.get("family", "gaussian"),
                dimension=d,
                claimed_order=int(kernel_cfg.get("order", 2)),
            )
        except ParameterError as exc:
            raise ConfigError(str(exc)) from None

        self.alphas = [float(a) for a in cfg.get("alphas", [0.5])]
        for a in self.alphas:
            if not (0.0 < a < 1.0):
                raise ConfigError(f"alpha must lie strictly in (0, 1), got {a}")

        grid_cfg = _require(cfg, "grid")
        try:
            self.grid = EvaluationGrid(
                lower=tuple(grid_cfg["lower"]),
                upper=tuple(grid_cfg["upper"]),
                points_per_axis=int(grid_cfg.get("points_per_axis", 801)),
            )
        except (KeyError, ParameterError) as exc:
            raise ConfigError(f"bad grid spec: {exc}") from None
        if self.grid.d != d:
            raise ConfigError("grid dimension does not match the densities")

        bw = cfg.get("bandwidth", {})
        default = BandwidthRange.default(d)
        try:
            self.bandwidth = BandwidthRange(
                c_lower=float(bw.get("c_lower", default.c_lower)),
                c_upper=float(bw.get("c_upper", default.c_upper)),
                exponent_lower=float(bw.get("exponent_lower", default.exponent_lower)),
                exponent_upper=float(bw.get("exponent_upper", default.exponent_upper)),
                grid_size=int(bw.get("grid_size", default.grid_size)),
            )
        except ParameterError as exc:
            raise ConfigError(str(exc)) from None

        th = cfg.get("threshold", {})
        try:
            self.threshold = ThresholdSchedule(
                beta=float(th.get("beta", 0.01)), delta=float(th.get("delta", 1.0))
            )
        except ParameterError as exc:
            raise ConfigError(str(exc)) from None

        self.n = int(cfg["n"]) if "n" in cfg else None
        self.n_schedule = [int(v) for v in cfg.get("n_schedule", [])]
        self.replications = int(cfg.get("replications", 10))
        self.seed = int(seed_override if seed_override is not None else cfg.get("seed", 0))
        self.mc_samples = int(cfg.get("mc_samples", 100_000))
        self.h = float(cfg["h"]) if cfg.get("h") is not None else None
        self.gamma_floor = float(cfg["gamma_floor"]) if cfg.get("gamma_floor") is not None else None
        self.inflation = float(cfg.get("inflation", 0.0))

        # g must be positive on the grid box: zero-density nodes would make
        # the g^(1-alpha) weighting silently drop regions the user asked for
        g_min = float(np.min(np.asarray(self.g.pdf(self.grid.nodes), dtype=float)))
        if g_min <= 0.0:
            raise ConfigError("g vanishes somewhere on the grid box; shrink the grid to g's support")
        # integrability of int g^(1-alpha) per the oracle tail check
        try:
            self.g_integrals = {a: g_power_integral(self.g, a) for a in self.alphas}
        except (DomainError, NumericError) as exc:
            raise ConfigError(f"int g^(1-alpha) failed the tail check: {exc}") from None

    def default_h(self, n: int) -> float:
        lo, hi = self.bandwidth.h_lower(n), self.bandwidth.h_upper(n)
        return math.sqrt(lo * hi)

    def resolved(self) -> dict:
        """Config echo with all defaults materialized (reports self-describe)."""
        out = {
            "f": self.f.config(),
            "g": self.g.config(),
            "kernel": {"family": self.kernel.family, "order": self.kernel.claimed_order},
            "alphas": self.alphas,
            "grid": {
                "lower": list(self.grid.lower),
                "upper": list(self.grid.upper),
                "points_per_axis": self.grid.points_per_axis,
            },
            "bandwidth": {
                "c_lower": self.bandwidth.c_lower,
                "c_upper": self.bandwidth.c_upper,
                "exponent_lower": self.bandwidth.exponent_lower,
                "exponent_upper": self.bandwidth.exponent_upper,
                "grid_size": self.bandwidth.grid_size,
            },
            "threshold": {"beta": self.threshold.beta, "delta": self.threshold.delta},
            "replications": self.replications,
            "seed": self.seed,
            "mc_samples": self.mc_samples,
            "inflation": self.inflation,
        }
        if self.n is not None:
            out["n"] = self.n
        if self.n_schedule:
            out["n_schedule"] = self.n_schedule
        if self.h is not None:
            out["h"] = self.h
        if self.gamma_floor is not None:
            out["gamma_floor"] = self.gamma_floor
        return out


def cmd_estimate(exp: Experiment, out_dir: Path) -> int:
    if exp.n is None:
        raise ConfigError("estimate needs config key 'n'")
    exp.bandwidth.validate([exp.n])
    h = exp.h if exp.h is not None else exp.default_h(exp.n)
    if not (0.0 < h <= 1.0):
        raise ConfigError(f"bandwidth h={h} outside (0, 1]")
    gamma = exp.threshold.gamma(exp.n)
    sample = draw_sample(exp.f, exp.n, exp.seed)
    fhat = KDEDensity(sample, exp.kernel, h)

    def est_to_dict(est):
        out = {
            "d_alpha": est.d_alpha,
            "renyi": est.renyi,
            "tsallis": est.tsallis,
            "mass_below_threshold": est.mass_below_threshold,
            "threshold_used": est.threshold_used,
        }
        if est.mc_std_error is not None:
            out["mc_std_error"] = est.mc_std_error
        if est.warning:
            out["warning"] = est.warning
        return out

    per_alpha = {}
    for a in exp.alphas:
        quad = dalpha_quadrature(fhat, exp.g, a, gamma, exp.grid)
        mc = dalpha_monte_carlo(fhat, exp.g, a, gamma, exp.mc_samples, exp.seed)
        per_alpha["%.17g" % a] = {"quadrature": est_to_dict(quad), "monte_carlo": est_to_dict(mc)}

    quad_half = dalpha_quadrature(fhat, exp.g, 0.5, gamma, exp.grid)
    mc_half = dalpha_monte_carlo(fhat, exp.g, 0.5, gamma, exp.mc_samples, exp.seed)
    kl_q = kl_plugin(fhat, exp.g, gamma, exp.grid)
    kl_mc, kl_se = kl_monte_carlo(fhat, exp.g, gamma, exp.mc_samples, exp.seed)

    report = {
        "backend": ACTIVE_BACKEND,
        "version": __version__,
        "config": exp.resolved(),
        "h": h,
        "gamma": gamma,
        "alpha": per_alpha,
        "hellinger": {
            "quadrature": hellinger_estimate(quad_half),
            "monte_carlo": hellinger_estimate(mc_half),
        },
        "bhattacharyya": {
            "quadrature": bhattacharyya_estimate(quad_half),
            "monte_carlo": bhattacharyya_estimate(mc_half),
        },
        "kl": {"quadrature": kl_q, "monte_carlo": kl_mc, "mc_std_error": kl_se},
    }
    _write_json(out_dir / "estimate.json", report)
    return EXIT_OK


def cmd_sweep(exp: Experiment, out_dir: Path, threads: int) -> int:
    if not exp.n_schedule:
        raise ConfigError("sweep needs config key 'n_schedule'")
    if len(exp.alphas) != 1:
        raise ConfigError("sweep runs one alpha at a time; give a single-entry 'alphas'")
    alpha = exp.alphas[0]
    result = run_sweep(
        exp.f,
        exp.g,
        alpha,
        exp.kernel,
        exp.bandwidth,
        exp.threshold,
        exp.n_schedule,
        exp.replications,
        exp.seed,
        exp.grid,
        threads=threads,
    )
    _write_csv(out_dir / "sweep.csv", result.CSV_COLUMNS, result.to_rows())
    fit_obj = {
        "backend": ACTIVE_BACKEND,
        "version": __version__,
        "config": exp.resolved(),
        "alpha": alpha,
        "true_d_alpha": result.true_d_alpha,
        "mean_sup_errors": {str(n): v for n, v in result.mean_sup_errors().items()},
        "rate_bounds": {str(n): v for n, v in result.rate_bounds.items()},
        "notes": "theoretical exponent ignores envelope log factors",
    }
    try:
        fit = fit_rate(result, exp.bandwidth, exp.kernel)
        fit_obj["fit"] = {
            "fitted_exponent": fit.fitted_exponent,
            "theoretical_exponent": fit.theoretical_exponent,
            "r_squared": fit.r_squared,
            "pieces": fit.pieces,
        }
    except FitUndefinedError as exc:
        fit_obj["fit"] = {"undefined": str(exc)}
    _write_json(out_dir / "rate_fit.json", fit_obj)
    return EXIT_OK


def cmd_ci(exp: Experiment, out_dir: Path, threads: int) -> int:
    if exp.n is None:
        raise ConfigError("ci needs config key 'n'")
    if exp.n < 3:
        raise ConfigError("ci needs n >= 3 (log log n must be positive)")
    if len(exp.alphas) != 1:
        raise ConfigError("ci runs one alpha at a time; give a single-entry 'alphas'")
    alpha = exp.alphas[0]
    exp.bandwidth.validate([exp.n])
    h = exp.h if exp.h is not None else exp.default_h(exp.n)
    if not (0.0 < h < 1.0):
        raise ConfigError(f"ci needs h in (0, 1), got {h}")
    gamma_floor = exp.gamma_floor if exp.gamma_floor is not None else exp.f.gamma_floor
    if gamma_floor is None:
        raise ConfigError(
            "f has no recorded support floor; set 'gamma_floor' in the config"
        )
    result = run_coverage(
        exp.f,
        exp.g,
        alpha,
        exp.kernel,
        exp.n,
        h,
        exp.replications,
        exp.seed,
        exp.grid,
        exp.threshold,
        gamma_floor=gamma_floor,
        inflation=exp.inflation,
        threads=threads,
    )
    rows = (
        (r.kind, r.n, r.h, r.alpha, r.estimate, r.half_width, r.lower, r.upper, r.true_value, r.covered)
        for r in result.rows
    )
    columns = tuple(c for c in CoverageResult.CSV_COLUMNS if c != "replication")
    _write_csv(out_dir / "intervals.csv", columns, rows)
    summary = {
        "backend": ACTIVE_BACKEND,
        "version": __version__,
        "config": exp.resolved(),
        "h": h,
        "gamma_floor": gamma_floor,
        "coverage": {
            kind: {
                "covered": result.covered_count(kind),
                "total": exp.replications,
                "fraction": result.coverage(kind),
            }
            for kind in ("tsallis", "renyi")
        },
    }
    _write_json(out_dir / "ci_summary.json", summary)
    return EXIT_OK


def cmd_validate_kernel(args) -> int:
    if args.family not in FAMILIES:
        print(f"unknown kernel family {args.family!r}; choose from {FAMILIES}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        spec = KernelSpec(family=args.family, dimension=args.dimension, claimed_order=args.order)
        report = validate_kernel(spec, tolerance=args.tolerance)
    except ParameterError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    print(f"kernel {args.family} d={args.dimension} claimed order s={args.order}")
    for line in report.lines():
        print(line)
    return EXIT_OK if report.all_passed else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="divkde",
        description="Plug-in kernel divergence estimators and their experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("estimate", "estimate all divergences for one sample (JSON report)"),
        ("sweep", "uniform-in-bandwidth sweep with error decomposition (CSV + rate fit)"),
        ("ci", "certainty-interval coverage experiment (CSV + summary)"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON experiment config")
        p.add_argument("--out", default=None, help="output directory (default: config out_dir or '.')")
        p.add_argument("--threads", type=int, default=1, help="worker threads (outputs are identical for any value)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")

    v = sub.add_parser("validate-kernel", help="numeric check of the kernel conditions")
    v.add_argument("family", help="kernel family name")
    v.add_argument("order", type=int, help="claimed kernel order s")
    v.add_argument("--dimension", type=int, default=1)
    v.add_argument("--tolerance", type=float, default=1e-6)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate-kernel":
        return cmd_validate_kernel(args)
    try:
        cfg = _load_config(args.config)
        exp = Experiment(cfg, seed_override=args.seed)
        out_dir = Path(args.out if args.out is not None else cfg.get("out_dir", "."))
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "estimate":
            return cmd_estimate(exp, out_dir)
        if args.command == "sweep":
            return cmd_sweep(exp, out_dir, args.threads)
        return cmd_ci(exp, out_dir, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParameterError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
