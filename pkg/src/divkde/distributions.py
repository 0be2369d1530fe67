"""Analytic densities with seeded samplers and the ground-truth oracle.

Shipped families: diagonal Gaussians, Gaussian mixtures, uniform boxes, and
box-truncated Gaussians.  Each instance checks its own normalization by
quadrature at construction.  ``true_divergences`` supplies the reference
values every experiment is scored against: closed forms for
Gaussian-Gaussian pairs, adaptive quadrature otherwise, and both when a
closed form exists (disagreement fails loudly instead of returning a bad
oracle).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ._quad import tensor_rule
from .errors import DomainError, NumericError, ParameterError
from .kde import SampleMatrix
from .rng import PURPOSE_SAMPLE, cell_stream, make_generator

_SQRT_2PI = math.sqrt(2.0 * math.pi)

# effective support half-width for Gaussian factors, in standard deviations
_GAUSS_PAD_SD = 10.0


@dataclass(frozen=True)
class AnalyticDensity:
    """An evaluatable, sampleable density with known support.

    ``support`` is a (lower, upper) box for compact families and ``None``
    for densities on all of R^d.  ``gamma_floor`` records the infimum of the
    density over a compact support (used by the Renyi interval half-width);
    it is ``None`` when the support is unbounded.
    """

    family: str
    params: dict
    dimension: int
    support: tuple | None
    lipschitz_bound: float | None = None
    smoothness_order: int | None = None
    gamma_floor: float | None = None

    def __post_init__(self):
        total = self._normalization_quadrature()
        if abs(total - 1.0) > 1e-8:
            raise NumericError(
                f"{self.family} density integrates to {total!r}, not 1, over its support"
            )

    # -- evaluation ---------------------------------------------------------

    def pdf(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        single = x.ndim <= 1
        pts = np.atleast_2d(x)
        if pts.shape[1] != self.dimension:
            raise ParameterError(f"points have dimension {pts.shape[1]}, expected {self.dimension}")
        vals = self._pdf_impl(pts)
        return float(vals[0]) if single else vals

    def _pdf_impl(self, pts: np.ndarray) -> np.ndarray:
        p = self.params
        if self.family == "gaussian":
            return _diag_gauss_pdf(pts, p["mean"], p["sigma"])
        if self.family == "gaussian_mixture":
            out = np.zeros(pts.shape[0])
            for w, m, s in zip(p["weights"], p["means"], p["sigmas"]):
                out += w * _diag_gauss_pdf(pts, m, s)
            return out
        if self.family == "uniform_box":
            lo, hi = self.support
            inside = np.all((pts >= lo) & (pts <= hi), axis=1)
            return np.where(inside, 1.0 / p["volume"], 0.0)
        # truncated_gaussian
        lo, hi = self.support
        inside = np.all((pts >= lo) & (pts <= hi), axis=1)
        base = _diag_gauss_pdf(pts, p["mean"], p["sigma"])
        return np.where(inside, base / p["mass"], 0.0)

    # -- sampling -----------------------------------------------------------

    def draw(self, gen: np.random.Generator, n: int) -> np.ndarray:
        """Draw n i.i.d. rows using the supplied generator stream."""
        if n < 1:
            raise ParameterError("need n >= 1 draws")
        p = self.params
        if self.family == "gaussian":
            z = gen.standard_normal((n, self.dimension))
            return p["mean"] + p["sigma"] * z
        if self.family == "gaussian_mixture":
            comp = gen.choice(len(p["weights"]), size=n, p=p["weights"])
            z = gen.standard_normal((n, self.dimension))
            return p["means"][comp] + p["sigmas"][comp] * z
        if self.family == "uniform_box":
            lo, hi = self.support
            return lo + (hi - lo) * gen.random((n, self.dimension))
        # truncated_gaussian: rejection against the untruncated base
        lo, hi = self.support
        out = np.empty((n, self.dimension))
        got = 0
        while got < n:
            want = n - got
            batch = max(32, int(1.5 * want / max(p["mass"], 1e-12)))
            z = p["mean"] + p["sigma"] * gen.standard_normal((batch, self.dimension))
            keep = z[np.all((z >= lo) & (z <= hi), axis=1)]
            take = min(keep.shape[0], want)
            out[got : got + take] = keep[:take]
            got += take
        return out

    # -- geometry -----------------------------------------------------------

    def quadrature_box(self, pad_scale: float = 1.0):
        """Box outside which the density (or a fractional power of it, when
        ``pad_scale`` > 1 widens Gaussian tails) is numerically negligible."""
        if self.support is not None:
            return self.support
        p = self.params
        if self.family == "gaussian":
            r = _GAUSS_PAD_SD * pad_scale * p["sigma"]
            return p["mean"] - r, p["mean"] + r
        los = [m - _GAUSS_PAD_SD * pad_scale * s for m, s in zip(p["means"], p["sigmas"])]
        his = [m + _GAUSS_PAD_SD * pad_scale * s for m, s in zip(p["means"], p["sigmas"])]
        return np.min(los, axis=0), np.max(his, axis=0)

    def _normalization_quadrature(self) -> float:
        lo, hi = self.quadrature_box()
        n = {1: 400, 2: 160, 3: 80}.get(self.dimension, 64)
        nodes, weights = tensor_rule(lo, hi, n)
        return float(weights @ self._pdf_impl(nodes))

    def config(self) -> dict:
        """JSON-serializable spec (family name + parameter lists)."""
        p = self.params
        if self.family == "gaussian":
            return {"family": "gaussian", "mean": p["mean"].tolist(), "sigma": p["sigma"].tolist()}
        if self.family == "gaussian_mixture":
            return {
                "family": "gaussian_mixture",
                "weights": p["weights"].tolist(),
                "means": p["means"].tolist(),
                "sigmas": p["sigmas"].tolist(),
            }
        if self.family == "uniform_box":
            lo, hi = self.support
            return {"family": "uniform_box", "lower": lo.tolist(), "upper": hi.tolist()}
        lo, hi = self.support
        return {
            "family": "truncated_gaussian",
            "mean": p["mean"].tolist(),
            "sigma": p["sigma"].tolist(),
            "lower": lo.tolist(),
            "upper": hi.tolist(),
        }


def _diag_gauss_pdf(pts, mean, sigma):
    z = (pts - mean) / sigma
    norm = _SQRT_2PI ** pts.shape[1] * float(np.prod(sigma))
    return np.exp(-0.5 * np.sum(z * z, axis=1)) / norm


def _as_vec(v, d=None):
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if d is not None and arr.size == 1:
        arr = np.full(d, arr[0])
    return arr


# -- constructors -----------------------------------------------------------


def gaussian(mean, sigma) -> AnalyticDensity:
    """Diagonal Gaussian N(mean, diag(sigma^2))."""
    mean = _as_vec(mean)
    sigma = _as_vec(sigma, mean.size)
    if np.any(sigma <= 0):
        raise ParameterError("sigma must be positive")
    d = mean.size
    lip = _gauss_lipschitz(sigma)
    return AnalyticDensity(
        family="gaussian",
        params={"mean": mean, "sigma": sigma},
        dimension=d,
        support=None,
        lipschitz_bound=lip,
    )


def gaussian_mixture(weights, means, sigmas) -> AnalyticDensity:
    weights = _as_vec(weights)
    means = np.atleast_2d(np.asarray(means, dtype=float))
    sigmas = np.atleast_2d(np.asarray(sigmas, dtype=float))
    if means.shape != sigmas.shape or means.shape[0] != weights.size:
        raise ParameterError("mixture weights/means/sigmas shapes disagree")
    if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise ParameterError("mixture weights must be positive and sum to 1")
    if np.any(sigmas <= 0):
        raise ParameterError("mixture sigmas must be positive")
    lip = float(np.sum(weights * np.array([_gauss_lipschitz(s) for s in sigmas])))
    return AnalyticDensity(
        family="gaussian_mixture",
        params={"weights": weights, "means": means, "sigmas": sigmas},
        dimension=means.shape[1],
        support=None,
        lipschitz_bound=lip,
    )


def uniform_box(lower, upper) -> AnalyticDensity:
    lower = _as_vec(lower)
    upper = _as_vec(upper, lower.size)
    if np.any(lower >= upper):
        raise ParameterError("uniform box needs lower < upper")
    vol = float(np.prod(upper - lower))
    return AnalyticDensity(
        family="uniform_box",
        params={"volume": vol},
        dimension=lower.size,
        support=(lower, upper),
        smoothness_order=0,
        gamma_floor=1.0 / vol,
    )


def truncated_gaussian(mean, sigma, lower, upper) -> AnalyticDensity:
    """Diagonal Gaussian restricted and renormalized to a box."""
    mean = _as_vec(mean)
    sigma = _as_vec(sigma, mean.size)
    lower = _as_vec(lower, mean.size)
    upper = _as_vec(upper, mean.size)
    if np.any(lower >= upper):
        raise ParameterError("truncation box needs lower < upper")
    if np.any(sigma <= 0):
        raise ParameterError("sigma must be positive")
    from scipy.stats import norm

    per_axis = norm.cdf((upper - mean) / sigma) - norm.cdf((lower - mean) / sigma)
    mass = float(np.prod(per_axis))
    if mass < 1e-12:
        raise ParameterError("truncation box carries negligible Gaussian mass")
    # infimum over the box: separable, attained at the endpoint farther from
    # the mean on each axis
    edge = np.where(np.abs(lower - mean) > np.abs(upper - mean), lower, upper)
    z = (edge - mean) / sigma
    floor = float(np.exp(-0.5 * np.sum(z * z)) / (_SQRT_2PI ** mean.size * np.prod(sigma)) / mass)
    return AnalyticDensity(
        family="truncated_gaussian",
        params={"mean": mean, "sigma": sigma, "mass": mass},
        dimension=mean.size,
        support=(lower, upper),
        smoothness_order=0,
        gamma_floor=floor,
    )


def _gauss_lipschitz(sigma) -> float:
    # |grad f| <= sqrt(sum_k b_k^2) with b_k the per-axis derivative bound
    sigma = np.asarray(sigma, dtype=float)
    sup_axis = 1.0 / (_SQRT_2PI * sigma)
    b = []
    for k in range(sigma.size):
        deriv = math.exp(-0.5) / (_SQRT_2PI * sigma[k] ** 2)
        others = np.prod(np.delete(sup_axis, k))
        b.append(deriv * others)
    return float(np.sqrt(np.sum(np.square(b))))


def density_from_config(cfg: dict) -> AnalyticDensity:
    """Build a density from its JSON spec (see ``AnalyticDensity.config``)."""
    try:
        family = cfg["family"]
        if family == "gaussian":
            return gaussian(cfg["mean"], cfg["sigma"])
        if family == "gaussian_mixture":
            return gaussian_mixture(cfg["weights"], cfg["means"], cfg["sigmas"])
        if family == "uniform_box":
            return uniform_box(cfg["lower"], cfg["upper"])
        if family == "truncated_gaussian":
            return truncated_gaussian(cfg["mean"], cfg["sigma"], cfg["lower"], cfg["upper"])
    except KeyError as exc:
        raise ParameterError(f"distribution spec missing key {exc}") from None
    raise ParameterError(f"unknown distribution family {cfg.get('family')!r}")


def draw_sample(density: AnalyticDensity, n: int, seed: int) -> SampleMatrix:
    """n i.i.d. draws as a SampleMatrix; identical bytes for identical (n, seed)."""
    gen = make_generator(seed, stream=cell_stream(PURPOSE_SAMPLE))
    return SampleMatrix(data=density.draw(gen, n), seed=seed)


# -- ground-truth divergences ------------------------------------------------


@dataclass(frozen=True)
class TrueDivergences:
    d_alpha: float
    renyi: float
    tsallis: float
    kl: float
    hellinger: float
    bhattacharyya: float


def _check_alpha(alpha: float):
    if not (0.0 < alpha < 1.0):
        raise ParameterError(f"alpha must lie strictly in (0, 1), got {alpha}")


def true_divergences(f: AnalyticDensity, g: AnalyticDensity, alpha: float) -> TrueDivergences:
    """Reference divergence values for a density pair.

    The core functional int f^alpha g^(1-alpha) is evaluated in closed form
    for Gaussian-Gaussian pairs and by adaptive quadrature otherwise; when a
    closed form exists the quadrature must agree to 1e-6 relative or the
    oracle refuses to answer.
    """
    _check_alpha(alpha)
    if f.dimension != g.dimension:
        raise ParameterError("density dimensions disagree")
    d_alpha = float(_core_integral(f, g, alpha))
    d_half = float(_core_integral(f, g, 0.5))
    kl = float(_kl_integral(f, g))
    return TrueDivergences(
        d_alpha=d_alpha,
        renyi=math.log(d_alpha) / (alpha - 1.0) if d_alpha > 0 else math.inf,
        tsallis=(d_alpha - 1.0) / (alpha - 1.0),
        kl=kl,
        hellinger=1.0 - d_half,
        bhattacharyya=-math.log(d_half) if d_half > 0 else math.inf,
    )


def _both_gaussian(f, g) -> bool:
    return f.family == "gaussian" and g.family == "gaussian"


def _core_integral(f, g, alpha) -> float:
    quad = _core_integral_quadrature(f, g, alpha)
    if _both_gaussian(f, g):
        closed = _gauss_core_closed(f.params, g.params, alpha)
        if abs(closed - quad) > 1e-6 * max(closed, 1e-30):
            raise NumericError(
                f"closed-form/quadrature disagreement for D_alpha: {closed!r} vs {quad!r}"
            )
        return closed
    return quad


def _gauss_core_closed(pf, pg, alpha) -> float:
    out = 1.0
    for m1, s1, m2, s2 in zip(pf["mean"], pf["sigma"], pg["mean"], pg["sigma"]):
        a = alpha / s1**2
        b = (1.0 - alpha) / s2**2
        coef = s1 ** (-alpha) * s2 ** (-(1.0 - alpha)) / math.sqrt(a + b)
        out *= coef * math.exp(-0.5 * a * b * (m1 - m2) ** 2 / (a + b))
    return out


def _integration_region(f, g, alpha):
    """Intersect the effective boxes; the integrand vanishes outside both."""
    pad = 1.2 / math.sqrt(min(alpha, 1.0 - alpha))
    flo, fhi = f.quadrature_box(pad_scale=pad)
    glo, ghi = g.quadrature_box(pad_scale=pad)
    lo = np.maximum(np.asarray(flo, dtype=float), np.asarray(glo, dtype=float))
    hi = np.minimum(np.asarray(fhi, dtype=float), np.asarray(ghi, dtype=float))
    if np.any(lo >= hi):
        raise DomainError("densities have disjoint effective supports")
    return lo, hi


def _tail_check(func, lo, hi, name):
    """Integrand must be negligible at the region edge unless support-bounded."""
    lo = np.atleast_1d(lo)
    hi = np.atleast_1d(hi)
    mid = 0.5 * (lo + hi)
    peak = max(float(func(mid[None, :])[0]), 1e-300)
    for axis in range(lo.size):
        for label, edge in (("lower", lo), ("upper", hi)):
            pt = mid.copy()
            pt[axis] = edge[axis]
            val = float(func(pt[None, :])[0])
            if val > 1e-7 * peak:
                raise DomainError(
                    f"{name} integrand not negligible at axis {axis} {label} tail; "
                    "the integral may diverge or the box is too small"
                )


def _breakpoints(f, g, lo, hi):
    pts = set()
    for dens in (f, g):
        if dens.support is not None:
            s_lo, s_hi = dens.support
            pts.add(float(s_lo[0]))
            pts.add(float(s_hi[0]))
    return sorted(p for p in pts if lo < p < hi)


def _core_integral_quadrature(f, g, alpha) -> float:
    def integrand(pts):
        fv = np.asarray(f.pdf(pts), dtype=float)
        gv = np.asarray(g.pdf(pts), dtype=float)
        return np.where(fv > 0.0, fv**alpha, 0.0) * np.where(gv > 0.0, gv ** (1.0 - alpha), 0.0)

    lo, hi = _integration_region(f, g, alpha)
    compact = f.support is not None or g.support is not None
    if not compact:
        _tail_check(integrand, lo, hi, "f^alpha g^(1-alpha)")
    if f.dimension == 1:
        val, err = integrate.quad(
            lambda x: float(integrand(np.array([[x]]))[0]),
            float(lo[0]),
            float(hi[0]),
            limit=400,
            points=_breakpoints(f, g, float(lo[0]), float(hi[0])) or None,
            epsabs=1e-12,
            epsrel=1e-10,
        )
        if err > 1e-6 * max(abs(val), 1.0):
            raise NumericError(f"adaptive quadrature error estimate too large: {err!r}")
        return float(val)
    return _tensor_refined(integrand, lo, hi, f.dimension)


def _kl_integral(f, g) -> float:
    """int f log(f/g); +inf when f puts mass where g vanishes."""

    def integrand(pts):
        fv = np.asarray(f.pdf(pts), dtype=float)
        gv = np.asarray(g.pdf(pts), dtype=float)
        out = np.zeros(fv.shape)
        ok = (fv > 0.0) & (gv > 0.0)
        out[ok] = fv[ok] * np.log(fv[ok] / gv[ok])
        return out

    if g.support is not None:
        # mass of f escaping g's support makes the divergence infinite
        g_lo, g_hi = g.support
        f_lo, f_hi = f.quadrature_box()
        if np.any(np.asarray(f_lo) < np.asarray(g_lo) - 1e-12) or np.any(
            np.asarray(f_hi) > np.asarray(g_hi) + 1e-12
        ):
            if f.support is None or np.any(np.asarray(f.support[0]) < np.asarray(g_lo) - 1e-12) or np.any(
                np.asarray(f.support[1]) > np.asarray(g_hi) + 1e-12
            ):
                escaped = _mass_outside(f, g_lo, g_hi)
                if escaped > 1e-12:
                    return math.inf
    lo, hi = _integration_region(f, g, 0.5)
    if f.dimension == 1:
        val, _ = integrate.quad(
            lambda x: float(integrand(np.array([[x]]))[0]),
            float(lo[0]),
            float(hi[0]),
            limit=400,
            points=_breakpoints(f, g, float(lo[0]), float(hi[0])) or None,
            epsabs=1e-12,
            epsrel=1e-10,
        )
        return float(val)
    return _tensor_refined(integrand, lo, hi, f.dimension)


def _mass_outside(f, lo, hi) -> float:
    box_lo, box_hi = f.quadrature_box()
    nodes, weights = tensor_rule(box_lo, box_hi, {1: 800, 2: 200, 3: 80}[f.dimension])
    vals = np.asarray(f.pdf(nodes), dtype=float)
    outside = np.any((nodes < lo) | (nodes > hi), axis=1)
    return float(weights[outside] @ vals[outside])


def _tensor_refined(func, lo, hi, d) -> float:
    n = {2: 240, 3: 96}.get(d, 64)
    nodes, weights = tensor_rule(lo, hi, n)
    coarse = float(weights @ func(nodes))
    nodes, weights = tensor_rule(lo, hi, int(1.5 * n))
    fine = float(weights @ func(nodes))
    if abs(fine - coarse) > 1e-6 * max(abs(fine), 1.0):
        raise NumericError("tensor quadrature did not converge for the oracle integral")
    return fine


def g_power_integral(g: AnalyticDensity, alpha: float) -> float:
    """int g^(1-alpha) over R^d (closed form for Gaussians, quadrature else).

    This is the constant the Tsallis interval half-width multiplies; it must
    be finite, which holds for every shipped family with alpha in (0, 1).
    """
    _check_alpha(alpha)
    c = 1.0 - alpha
    if g.family == "gaussian":
        out = 1.0
        for s in g.params["sigma"]:
            out *= (2.0 * math.pi * s**2) ** ((1.0 - c) / 2.0) / math.sqrt(c)
        return out
    if g.family == "uniform_box":
        return float(g.params["volume"] ** alpha)

    def integrand(pts):
        gv = np.asarray(g.pdf(pts), dtype=float)
        return np.where(gv > 0.0, gv**c, 0.0)

    lo, hi = g.quadrature_box(pad_scale=1.2 / math.sqrt(c))
    if g.support is None:
        _tail_check(integrand, lo, hi, "g^(1-alpha)")
    if g.dimension == 1:
        val, _ = integrate.quad(
            lambda x: float(integrand(np.array([[x]]))[0]),
            float(lo[0]),
            float(hi[0]),
            limit=400,
            epsabs=1e-12,
            epsrel=1e-10,
        )
        return float(val)
    return _tensor_refined(integrand, lo, hi, g.dimension)
