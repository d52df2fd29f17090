"""Pure numpy implementations of the trigonometric-polynomial kernels.

Same signatures as the compiled ``_ckernels`` module. Polynomials are
passed as ``(freqs, c0, xc, yc)`` with ``freqs`` of shape ``(K, d)`` and
represent ``c0 + sum_k xc[k] cos(2 pi a.freqs[k]) - yc[k] sin(2 pi a.freqs[k])``.
"""

import numpy as np

TWO_PI = 2.0 * np.pi
_CHUNK = 1 << 16


def eval_points(points, freqs, c0, xc, yc):
    points = np.ascontiguousarray(points, dtype=float)
    out = np.empty(points.shape[0])
    for start in range(0, points.shape[0], _CHUNK):
        block = points[start:start + _CHUNK]
        phase = TWO_PI * (block @ freqs.T)
        out[start:start + _CHUNK] = c0 + np.cos(phase) @ xc - np.sin(phase) @ yc
    return out


def eval_derivatives(point, freqs, c0, xc, yc):
    """Value, gradient and Hessian at one point."""
    phase = TWO_PI * (freqs @ point)
    cos, sin = np.cos(phase), np.sin(phase)
    value = c0 + cos @ xc - sin @ yc
    # d/da of x cos(p) - y sin(p) is -(x sin(p) + y cos(p)) * 2 pi xi
    first = -(xc * sin + yc * cos)
    second = -(xc * cos - yc * sin)
    w = TWO_PI * freqs
    grad = w.T @ first
    hess = (w * second[:, None]).T @ w
    return float(value), grad, hess
