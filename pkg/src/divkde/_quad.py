"""Tensor-product quadrature rules on boxes in R^d.

Two node families cover everything the package integrates: Gauss-Legendre
for smooth one-shot integrals (kernel moments, oracle cross-checks) and
trapezoid for the fixed evaluation grids that double as Riemann sums.
"""

import numpy as np


def gauss_legendre_1d(lo: float, hi: float, n: int):
    """Gauss-Legendre nodes/weights mapped from [-1, 1] onto [lo, hi]."""
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def trapezoid_1d(lo: float, hi: float, n: int):
    """Trapezoid nodes/weights with ``n`` equally spaced nodes on [lo, hi]."""
    if n < 2:
        raise ValueError("trapezoid rule needs at least 2 nodes")
    x = np.linspace(lo, hi, n)
    w = np.full(n, (hi - lo) / (n - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return x, w


def tensor_rule(lows, highs, n_per_axis: int, rule: str = "gauss"):
    """Tensor-product rule over the box [lows, highs].

    Returns ``(nodes, weights)`` where ``nodes`` is ``(N, d)`` in row-major
    order (last axis fastest) and ``weights`` is ``(N,)``.
    """
    lows = np.atleast_1d(np.asarray(lows, dtype=float))
    highs = np.atleast_1d(np.asarray(highs, dtype=float))
    d = lows.size
    make = gauss_legendre_1d if rule == "gauss" else trapezoid_1d
    axes = [make(lows[k], highs[k], n_per_axis) for k in range(d)]
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    nodes = np.stack([g.reshape(-1) for g in grids], axis=1)
    weights = np.ones(1)
    for _, w in axes:
        weights = np.multiply.outer(weights, w).reshape(-1)
    return nodes, weights


def tensor_integrate(func, lows, highs, n_per_axis: int, rule: str = "gauss") -> float:
    """Integrate ``func`` (vectorized over (N, d) points) over a box."""
    nodes, weights = tensor_rule(lows, highs, n_per_axis, rule)
    return float(weights @ np.asarray(func(nodes), dtype=float))
