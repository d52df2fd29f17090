"""Real trigonometric polynomials with spectrum inside a frequency set.

A :class:`TrigPoly` over ``freqs`` stores

    f(a) = c0 + sum_{xi in xi_plus} x_xi cos(2 pi a.xi) - y_xi sin(2 pi a.xi)

with ``cosc[k] = x_xi`` and ``sinc[k] = y_xi`` aligned with ``freqs.xi_plus``.
Equivalently ``f(a) = c0 + Re sum (x_xi + i y_xi) exp(2 pi i a.xi)``, which is
the form used for differentiation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .config import DEFAULT_CONFIG, SolverConfig
from .errors import DimensionMismatch, NonIntegralFrequencies, UnsupportedDimension
from .freqset import FrequencySet, ScalingMap, scale_to_integers

MAX_EXTREMA_DIM = 3


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.setflags(write=False)
    return out


def _check_alpha(alpha, dim: int) -> tuple[int, ...]:
    if isinstance(alpha, (int, np.integer)):
        alpha = (int(alpha),)
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != dim:
        raise DimensionMismatch(f"alpha has {len(alpha)} entries, expected {dim}")
    if any(a < 1 for a in alpha):
        raise ValueError("every alpha_j must be >= 1")
    return alpha


def derivative_weight(xi: Sequence[Fraction], alpha: Sequence[int]) -> complex:
    """``(2 pi i xi)^alpha`` with the real/imaginary split done exactly."""
    order = sum(alpha)
    mono = Fraction(1)
    for c, a in zip(xi, alpha):
        mono *= c**a
    mag = float(mono) * (2.0 * math.pi) ** order
    return [complex(mag, 0), complex(0, mag), complex(-mag, 0), complex(0, -mag)][order % 4]


@dataclass(frozen=True)
class TrigPoly:
    freqs: FrequencySet
    c0: float
    cosc: np.ndarray
    sinc: np.ndarray

    def __post_init__(self):
        k = len(self.freqs.xi_plus)
        object.__setattr__(self, "c0", float(self.c0))
        object.__setattr__(self, "cosc", _frozen(self.cosc).reshape(k))
        object.__setattr__(self, "sinc", _frozen(self.sinc).reshape(k))

    @classmethod
    def zero(cls, freqs: FrequencySet) -> "TrigPoly":
        k = len(freqs.xi_plus)
        return cls(freqs, 0.0, np.zeros(k), np.zeros(k))

    @classmethod
    def from_coefficients(cls, freqs: FrequencySet, c0: float = 0.0,
                          cos: Mapping | None = None, sin: Mapping | None = None) -> "TrigPoly":
        """Build from ``{xi: x_xi}`` / ``{xi: y_xi}`` maps keyed by members of xi_plus."""
        k = len(freqs.xi_plus)
        x, y = np.zeros(k), np.zeros(k)
        for key, val in (cos or {}).items():
            x[freqs.index(key)] = val
        for key, val in (sin or {}).items():
            y[freqs.index(key)] = val
        return cls(freqs, c0, x, y)

    @classmethod
    def from_vector(cls, freqs: FrequencySet, vec) -> "TrigPoly":
        """Inverse of :meth:`to_vector`: ``(c0, x_1..x_k, y_1..y_k)``."""
        vec = np.asarray(vec, dtype=float)
        k = len(freqs.xi_plus)
        if vec.shape != (2 * k + 1,):
            raise DimensionMismatch(f"coefficient vector must have length {2 * k + 1}")
        return cls(freqs, vec[0], vec[1:k + 1], vec[k + 1:])

    def to_vector(self) -> np.ndarray:
        return np.concatenate(([self.c0], self.cosc, self.sinc))

    @property
    def dim(self) -> int:
        return self.freqs.dim

    def coefficients(self) -> dict:
        """``{xi: (x_xi, y_xi)}`` over xi_plus."""
        return {xi: (float(x), float(y)) for xi, x, y in zip(self.freqs.xi_plus, self.cosc, self.sinc)}

    def _kernel_args(self):
        return self.freqs.xi_plus_array(), self.c0, self.cosc, self.sinc

    def __call__(self, a) -> float:
        return evaluate(self, a)

    def values(self, points) -> np.ndarray:
        """Evaluate at many points, ``points`` of shape ``(N, d)``."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.dim)
        return kernels.eval_points(pts, *self._kernel_args())

    def derivatives(self, a):
        """``(value, gradient, hessian)`` at one point."""
        pt = np.asarray(a, dtype=float).reshape(self.dim)
        return kernels.eval_derivatives(pt, *self._kernel_args())

    def scale(self, factor: float) -> "TrigPoly":
        return TrigPoly(self.freqs, factor * self.c0, factor * self.cosc, factor * self.sinc)

    def with_scaled_frequencies(self, smap: ScalingMap) -> "TrigPoly":
        """``g(b) = f(s * b)``: same coefficients, spectrum ``{s xi}``."""
        new = self.freqs.scaled(smap)
        k = len(new.xi_plus)
        x, y = np.zeros(k), np.zeros(k)
        for xi, cx, sy in zip(self.freqs.xi_plus, self.cosc, self.sinc):
            j = new.index(tuple(f * c for f, c in zip(smap.factors, xi)))
            x[j], y[j] = cx, sy
        return TrigPoly(new, self.c0, x, y)

    def max_abs_coefficient(self) -> float:
        return float(max(abs(self.c0), np.max(np.abs(self.cosc), initial=0.0),
                         np.max(np.abs(self.sinc), initial=0.0)))


def evaluate(f: TrigPoly, a) -> float:
    """Value of ``f`` at the point ``a``."""
    pt = np.atleast_1d(np.asarray(a, dtype=float))
    if pt.shape != (f.dim,):
        raise DimensionMismatch(f"point has shape {pt.shape}, expected ({f.dim},)")
    return float(kernels.eval_points(pt.reshape(1, -1), *f._kernel_args())[0])


@dataclass(frozen=True)
class DerivativeTarget:
    """The derivative order ``alpha`` together with ``(2 pi i xi)^alpha`` on xi_plus.

    ``c[k] = Re((2 pi i xi_k)^alpha)`` and ``s[k] = Im(...)``.
    """

    freqs: FrequencySet
    alpha: tuple
    c: np.ndarray
    s: np.ndarray

    @classmethod
    def build(cls, freqs: FrequencySet, alpha) -> "DerivativeTarget":
        alpha = _check_alpha(alpha, freqs.dim)
        weights = [derivative_weight(xi, alpha) for xi in freqs.xi_plus]
        return cls(freqs, alpha, _frozen([w.real for w in weights]), _frozen([w.imag for w in weights]))

    @property
    def order(self) -> int:
        return sum(self.alpha)

    @property
    def targets(self) -> dict:
        return {xi: (float(c), float(s)) for xi, c, s in zip(self.freqs.xi_plus, self.c, self.s)}

    def vector(self) -> np.ndarray:
        """Right-hand side ``(0, c_1..c_k, s_1..s_k)`` of the feasibility system."""
        return np.concatenate(([0.0], self.c, self.s))

    def weight(self, xi) -> complex:
        """``(2 pi i xi)^alpha`` for any real vector ``xi``."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        return complex(np.prod((2j * np.pi * xi) ** np.array(self.alpha)))

    def for_freqs(self, freqs: FrequencySet) -> "DerivativeTarget":
        return DerivativeTarget.build(freqs, self.alpha)


def derivative(f: TrigPoly, alpha) -> TrigPoly:
    """``d^alpha f`` as a polynomial over the same frequency set."""
    t = DerivativeTarget.build(f.freqs, alpha)
    z = (f.cosc + 1j * f.sinc) * (t.c + 1j * t.s)
    return TrigPoly(f.freqs, 0.0, z.real, z.imag)


def partial(f: TrigPoly, beta) -> TrigPoly:
    """``d^beta f`` for a multi-index with ``beta_j >= 0`` (zero entries allowed)."""
    beta = tuple(int(b) for b in np.atleast_1d(beta))
    if len(beta) != f.dim or any(b < 0 for b in beta):
        raise ValueError(f"beta must have {f.dim} non-negative entries")
    if not any(beta):
        return f
    w = np.array([derivative_weight(xi, beta) for xi in f.freqs.xi_plus], dtype=complex)
    z = (f.cosc + 1j * f.sinc) * w
    return TrigPoly(f.freqs, 0.0, z.real, z.imag)


def neg_deriv_at_zero(f: TrigPoly, t: DerivativeTarget) -> float:
    """The dual objective ``(-d)^alpha f(0) = sum c_xi x_xi + s_xi y_xi``."""
    if t.freqs != f.freqs:
        raise DimensionMismatch("target and polynomial live on different frequency sets")
    return float(t.c @ f.cosc + t.s @ f.sinc)


@dataclass(frozen=True)
class ExtremaReport:
    argmin: np.ndarray
    minval: float
    argmax: np.ndarray
    maxval: float
    grid_resolution: int
    refined: bool
    min_candidates: list = field(default_factory=list, repr=False)
    max_candidates: list = field(default_factory=list, repr=False)

    @property
    def sup_norm(self) -> float:
        return max(abs(self.minval), abs(self.maxval))


def _wrap(a: np.ndarray) -> np.ndarray:
    """Reduce into the fundamental cell [-1/2, 1/2)^d."""
    return a - np.floor(a + 0.5)


def grid_shape(freqs: FrequencySet, config: SolverConfig = DEFAULT_CONFIG) -> tuple[int, ...]:
    top = freqs.max_abs()
    return tuple(config.grid_oversample * int(m) + config.grid_offset if m else 1 for m in top)


def _cell_grid(shape: Sequence[int]) -> tuple[list, np.ndarray]:
    axes = [np.arange(n) / n - 0.5 for n in shape]
    mesh = np.meshgrid(*axes, indexing="ij")
    return axes, np.stack([m.ravel() for m in mesh], axis=1)


def _grid_local_minima(values: np.ndarray, shape: Sequence[int]) -> np.ndarray:
    """Flat indices of periodic discrete local minima, best first."""
    grid = values.reshape(shape)
    mask = np.ones(grid.shape, dtype=bool)
    for axis, n in enumerate(shape):
        if n > 1:
            mask &= grid <= np.roll(grid, 1, axis=axis)
            mask &= grid <= np.roll(grid, -1, axis=axis)
    idx = np.flatnonzero(mask.ravel())
    return idx[np.argsort(values[idx], kind="stable")]


def _newton_polish(f: TrigPoly, start: np.ndarray, sign: float, steps: int, gtol: float,
                   max_step: float) -> tuple[np.ndarray, float]:
    """Minimize ``sign * f`` from ``start`` with a saddle-free damped Newton method."""
    p = start.copy()
    v, g, h = f.derivatives(p)
    for _ in range(steps):
        gn = float(np.linalg.norm(g))
        if gn <= gtol:
            break
        w, vecs = np.linalg.eigh(sign * h)
        floor = 1e-8 * max(1.0, float(np.max(np.abs(w))))
        step = -vecs @ ((vecs.T @ (sign * g)) / np.maximum(np.abs(w), floor))
        length = float(np.linalg.norm(step))
        if length > max_step:
            step *= max_step / length
        t = 1.0
        accepted = False
        while t >= 1.0 / 1024:
            q = p + t * step
            vq, gq, hq = f.derivatives(q)
            slack = 1e-14 * (1.0 + abs(v))
            if sign * vq < sign * v or (sign * vq <= sign * v + slack and np.linalg.norm(gq) < gn):
                p, v, g, h = q, vq, gq, hq
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
    return p, v


def global_extrema(f: TrigPoly, config: SolverConfig = DEFAULT_CONFIG) -> ExtremaReport:
    """Approximate global minimum and maximum of ``f`` over one period cell.

    A dense periodic grid locates candidate basins. Damped Newton
    iterations polish the best ``config.refine_candidates`` discrete local
    minima (and maxima), plus every other one whose grid value lies within
    the curvature bound of the best grid value: near a dual optimum many
    extrema sit almost exactly at +-1, so grid ranking alone is unreliable.
    """
    if f.dim > MAX_EXTREMA_DIM:
        raise UnsupportedDimension(f"extrema search supports d <= {MAX_EXTREMA_DIM}, got {f.dim}")
    if not f.freqs.is_integral():
        raise NonIntegralFrequencies("rescale the frequency set to integers before the extrema search")
    shape = grid_shape(f.freqs, config)
    _, points = _cell_grid(shape)
    values = f.values(points)

    top = max((int(m) for m in f.freqs.max_abs()), default=0)
    max_step = 0.25 / top if top else 0.25
    scale = 1.0 + 2.0 * math.pi * max(top, 1) * (abs(f.c0) + float(np.sum(np.abs(f.cosc) + np.abs(f.sinc))))
    gtol = config.extrema_tol * scale
    # |f(grid) - f(true extremum)| <= 1/2 sum_j (h_j / 2)^2 sup|d_j^2 f| for the nearest grid point
    freqs_arr = f.freqs.xi_plus_array() if f.freqs.xi_plus else np.zeros((0, f.dim))
    amp = np.hypot(f.cosc, f.sinc)
    curv = [(2.0 * math.pi) ** 2 * float(amp @ freqs_arr[:, j] ** 2) for j in range(f.dim)]
    margin = 0.5 * sum(c * (0.5 / n) ** 2 for c, n in zip(curv, shape))

    results = {}
    for sign, label in ((1.0, "min"), (-1.0, "max")):
        order = _grid_local_minima(sign * values, shape)
        if order.size:
            near = sign * values[order] <= sign * values[order[0]] + margin
            keep = np.zeros(order.size, dtype=bool)
            keep[: config.refine_candidates] = True
            order = order[keep | near]
        cands = []
        for i in order:
            p, _ = _newton_polish(f, points[i], sign, config.newton_steps, gtol, max_step)
            p = _wrap(p)
            cands.append((p, evaluate(f, p)))
        best_grid = int(np.argmin(sign * values))
        cands.append((points[best_grid].copy(), float(values[best_grid])))
        cands.sort(key=lambda pv: sign * pv[1])
        results[label] = cands
    (amin, vmin), (amax, vmax) = results["min"][0], results["max"][0]
    return ExtremaReport(
        argmin=amin, minval=vmin, argmax=amax, maxval=vmax,
        grid_resolution=int(np.prod(shape)), refined=True,
        min_candidates=results["min"], max_candidates=results["max"],
    )


def sup_norm(f: TrigPoly, config: SolverConfig = DEFAULT_CONFIG) -> float:
    """Sup-norm estimate; rescales non-integral spectra first."""
    g = f if f.freqs.is_integral() else f.with_scaled_frequencies(scale_to_integers(f.freqs)[1])
    return global_extrema(g, config).sup_norm


def random_in_space(freqs: FrequencySet, seed: int, sup_bound: float = 1.0,
                    config: SolverConfig = DEFAULT_CONFIG) -> TrigPoly:
    """Random member of Fun_Xi with (searched) sup-norm equal to ``sup_bound``."""
    if not sup_bound > 0:
        raise ValueError("sup_bound must be positive")
    rng = np.random.default_rng(seed)
    vec = rng.standard_normal(2 * len(freqs.xi_plus) + 1)
    f = TrigPoly.from_vector(freqs, vec)
    norm = sup_norm(f, config)
    if norm == 0.0:
        return f
    return f.scale(sup_bound / norm)


def sample_cell(f: TrigPoly, points_per_axis: int, periods: Sequence[float] | None = None):
    """Sample ``f`` on a regular grid over ``prod [-p_j/2, p_j/2)``.

    Returns ``(points, values)``; ``periods`` defaults to 1 on every axis.
    """
    periods = [1.0] * f.dim if periods is None else list(periods)
    axes = [(np.arange(points_per_axis) / points_per_axis - 0.5) * p for p in periods]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    return pts, f.values(pts)
