"""Pure-NumPy KDE core, the fallback when the compiled extension is absent.

Same contract as ``_kdecore``: each output value is reduced over the sample
independently of every other evaluation point, so a batch of one equals a
pointwise call bit for bit.
"""

import math

import numpy as np

BACKEND_NAME = "python"

_SQRT_2PI = math.sqrt(2.0 * math.pi)

# evaluation points per block; bounds the (block, n) scratch arrays
_BLOCK = 512


def kde_points(points: np.ndarray, sample: np.ndarray, h: float, family_id: int) -> np.ndarray:
    """Evaluate (1/(n h^d)) sum_i K((x - X_i)/h) at each row of ``points``."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    sample = np.ascontiguousarray(sample, dtype=np.float64)
    m, d = points.shape
    n = sample.shape[0]
    out = np.empty(m, dtype=np.float64)
    inv_h = 1.0 / h
    for start in range(0, m, _BLOCK):
        block = points[start : start + _BLOCK]
        t = (block[:, None, :] - sample[None, :, :]) * inv_h
        if family_id == 0:
            vals = np.exp(-0.5 * np.einsum("ijk,ijk->ij", t, t)) / _SQRT_2PI**d
        elif family_id == 1:
            inside = np.abs(t) <= 1.0
            vals = np.prod(np.where(inside, 0.75 * (1.0 - t * t), 0.0), axis=2)
        elif family_id == 2:
            vals = np.where(np.all(np.abs(t) <= 1.0, axis=2), 0.5**d, 0.0)
        else:
            raise ValueError(f"unknown kernel family id {family_id}")
        out[start : start + _BLOCK] = vals.sum(axis=1)
    out /= n * h**d
    return out
