"""Kernel density estimator evaluation, smoothed densities, and sup deviations.

The estimator is

    fhat_{n,h}(x) = (1/(n h^d)) sum_i K((x - X_i)/h),   0 < h <= 1,

evaluated here over single points, point batches, and tensor grids.  The
inner kernel-sum loop lives in a compiled extension (``_kdecore``) with a
pure-NumPy twin (``_kdecore_py``); one of the two is selected at import time
and can be forced through the ``DIVKDE_BACKEND`` environment variable
("cython", "python", or "auto").  Both backends reduce over the sample in a
fixed order, so repeated runs are deterministic and batch evaluation equals
pointwise evaluation bit for bit.
"""

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._quad import trapezoid_1d
from .errors import NumericError, ParameterError
from .kernels import FAMILY_IDS, KernelSpec, evaluate_kernel


def _select_backend():
    choice = os.environ.get("DIVKDE_BACKEND", "auto").lower()
    if choice not in ("auto", "cython", "python"):
        raise ImportError(f"DIVKDE_BACKEND must be auto|cython|python, got {choice!r}")
    if choice == "python":
        from . import _kdecore_py as core
        return core
    try:
        from . import _kdecore as core  # type: ignore[attr-defined]
        return core
    except ImportError:
        if choice == "cython":
            raise ImportError(
                "DIVKDE_BACKEND=cython but the compiled extension is not built; "
                "reinstall the package with a C toolchain available"
            ) from None
        from . import _kdecore_py as core
        return core


_core = _select_backend()
ACTIVE_BACKEND = _core.BACKEND_NAME


@dataclass(frozen=True)
class SampleMatrix:
    """n observations in R^d plus the seed that generated them."""

    data: np.ndarray
    seed: int

    def __post_init__(self):
        arr = np.ascontiguousarray(np.atleast_2d(np.asarray(self.data, dtype=np.float64)))
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ParameterError("sample must be a nonempty n x d matrix")
        if not np.all(np.isfinite(arr)):
            raise ParameterError("sample contains non-finite entries")
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class EvaluationGrid:
    """Tensor grid over a box, used both for sup-norms and as a Riemann rule.

    Nodes are ordered row-major (last axis fastest); weights are the tensor
    trapezoid weights, so ``weights @ values`` approximates the box integral.
    """

    lower: tuple
    upper: tuple
    points_per_axis: int

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi):
            raise ParameterError("grid lower/upper dimension mismatch")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ParameterError("grid requires lower < upper coordinatewise")
        if self.points_per_axis < 2:
            raise ParameterError("grid needs at least 2 points per axis")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def d(self) -> int:
        return len(self.lower)

    @property
    def n_nodes(self) -> int:
        return self.points_per_axis**self.d

    @cached_property
    def axes(self) -> tuple:
        return tuple(
            np.linspace(self.lower[k], self.upper[k], self.points_per_axis)
            for k in range(self.d)
        )

    @cached_property
    def nodes(self) -> np.ndarray:
        grids = np.meshgrid(*self.axes, indexing="ij")
        return np.ascontiguousarray(np.stack([g.reshape(-1) for g in grids], axis=1))

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.ones(1)
        for k in range(self.d):
            _, wk = trapezoid_1d(self.lower[k], self.upper[k], self.points_per_axis)
            w = np.multiply.outer(w, wk).reshape(-1)
        return w


def _check_bandwidth(h: float):
    if not (0.0 < h <= 1.0):
        raise ParameterError(f"bandwidth must lie in (0, 1], got {h}")


def kde_evaluate_points(sample: SampleMatrix, spec: KernelSpec, h: float, points) -> np.ndarray:
    """Evaluate the KDE at each row of ``points`` (an (m, d) array)."""
    _check_bandwidth(h)
    pts = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=np.float64)))
    if pts.shape[1] != sample.d or spec.dimension != sample.d:
        raise ParameterError("sample, kernel, and points must share one dimension")
    return _core.kde_points(pts, sample.data, float(h), FAMILY_IDS[spec.family])


def kde_evaluate(sample: SampleMatrix, spec: KernelSpec, h: float, x) -> float:
    """KDE value at a single point; a batch of one, so identical to batch output."""
    return float(kde_evaluate_points(sample, spec, h, np.atleast_2d(x))[0])


def kde_evaluate_batch(sample: SampleMatrix, spec: KernelSpec, h: float, grid: EvaluationGrid) -> np.ndarray:
    """KDE values over the grid nodes in row-major order."""
    return kde_evaluate_points(sample, spec, h, grid.nodes)


def grid_for_sample(sample: SampleMatrix, h: float, points_per_axis: int = 401) -> EvaluationGrid:
    """Grid covering the sample range padded by 8 bandwidths per side.

    Beyond that padding the shipped kernels contribute less than 1e-14, so
    Riemann sums of the KDE over this grid capture essentially all mass.
    """
    lo = sample.data.min(axis=0) - 8.0 * h
    hi = sample.data.max(axis=0) + 8.0 * h
    return EvaluationGrid(tuple(lo), tuple(hi), points_per_axis)


_QUAD_NODES_DEFAULT = {1: 801, 2: 201, 3: 101}


def smoothed_density_batch(
    density,
    spec: KernelSpec,
    h: float,
    points,
    nodes_per_axis: int | None = None,
    check_convergence: bool = True,
) -> np.ndarray:
    """E fhat_{n,h}(x) = int K(u) f(x - h u) du at each row of ``points``.

    Tensor-trapezoid quadrature over the kernel's support box.  When
    ``check_convergence`` is set the integral is recomputed on a once-refined
    rule; disagreement beyond the budgeted tolerance raises ``NumericError``.
    The result does not depend on any sample.
    """
    _check_bandwidth(h)
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    d = spec.dimension
    if pts.shape[1] != d:
        raise ParameterError("points dimension does not match the kernel")
    if nodes_per_axis is None:
        nodes_per_axis = _QUAD_NODES_DEFAULT.get(d, 101)
    coarse = _smooth_once(density, spec, h, pts, nodes_per_axis)
    if check_convergence:
        fine = _smooth_once(density, spec, h, pts, 2 * nodes_per_axis - 1)
        gap = float(np.max(np.abs(fine - coarse)))
        scale = max(float(np.max(np.abs(fine))), 1.0)
        if gap > 1e-5 * scale:
            raise NumericError(
                f"smoothed-density quadrature did not converge at node budget "
                f"{nodes_per_axis}/axis (refinement gap {gap:.3g})"
            )
        return fine
    return coarse


def _smooth_once(density, spec, h, pts, nodes_per_axis):
    r = spec.support_radius
    x1, w1 = trapezoid_1d(-r, r, nodes_per_axis)
    grids = np.meshgrid(*([x1] * spec.dimension), indexing="ij")
    u = np.stack([g.reshape(-1) for g in grids], axis=1)
    w = np.ones(1)
    for _ in range(spec.dimension):
        w = np.multiply.outer(w, w1).reshape(-1)
    kw = w * np.asarray(evaluate_kernel(spec, u), dtype=float)
    pdf = density.pdf if hasattr(density, "pdf") else density
    out = np.empty(pts.shape[0])
    block = max(1, int(2_000_000 // max(u.shape[0], 1)))
    for start in range(0, pts.shape[0], block):
        chunk = pts[start : start + block]
        shifted = chunk[:, None, :] - h * u[None, :, :]
        vals = np.asarray(pdf(shifted.reshape(-1, spec.dimension)), dtype=float)
        out[start : start + block] = vals.reshape(chunk.shape[0], -1) @ kw
    return out


def smoothed_density(density, spec: KernelSpec, h: float, x, **kwargs) -> float:
    """Pointwise E fhat; see ``smoothed_density_batch``."""
    return float(smoothed_density_batch(density, spec, h, np.atleast_2d(x), **kwargs)[0])


@dataclass(frozen=True)
class KDEDensity:
    """Adapter presenting a fitted KDE as a density-evaluator (has ``.pdf``)."""

    sample: SampleMatrix
    spec: KernelSpec
    h: float

    def pdf(self, points) -> np.ndarray:
        return kde_evaluate_points(self.sample, self.spec, self.h, points)


def sup_deviation(a, b) -> float:
    """max_i |a_i - b_i|, the grid proxy for the sup-norm distance."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ParameterError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.max(np.abs(a - b))) if a.size else 0.0
