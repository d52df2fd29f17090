"""Finite signed atomic measures used as shift rules.

A rule ``sum_a u_a delta_a`` estimates ``d^alpha f(x)`` as ``sum_a u_a f(x - a)``.
It is feasible for ``(Xi, alpha)`` when its Fourier transform
``sum_a u_a exp(-2 pi i a.xi)`` equals ``(2 pi i xi)^alpha`` on all of ``Xi``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DimensionMismatch
from .freqset import FrequencySet, ScalingMap
from .lp import LinearProgram, Status, solve
from .trigpoly import DerivativeTarget, TrigPoly

MERGE_TOL = 1e-9


@dataclass(frozen=True)
class ShiftRule:
    """Support points (rows of ``points``) with nonzero real coefficients."""

    dim: int
    points: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, self.dim)
        u = np.asarray(self.coeffs, dtype=float).ravel()
        if pts.shape[0] != u.size:
            raise DimensionMismatch("number of support points differs from number of coefficients")
        pts, u = _merge(pts, u)
        keep = u != 0.0
        pts, u = pts[keep], u[keep]
        pts.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "coeffs", u)

    @classmethod
    def from_atoms(cls, atoms, dim: int | None = None) -> "ShiftRule":
        """Build from ``{point: coefficient}`` or an iterable of pairs."""
        items = list(atoms.items()) if hasattr(atoms, "items") else list(atoms)
        if dim is None:
            dim = np.atleast_1d(np.asarray(items[0][0], dtype=float)).size if items else 1
        pts = np.array([np.atleast_1d(np.asarray(p, dtype=float)) for p, _ in items]).reshape(-1, dim)
        return cls(dim, pts, np.array([u for _, u in items], dtype=float))

    @classmethod
    def empty(cls, dim: int) -> "ShiftRule":
        return cls(dim, np.zeros((0, dim)), np.zeros(0))

    def __len__(self) -> int:
        return self.coeffs.size

    @property
    def atoms(self) -> list:
        return [(tuple(float(c) for c in p), float(u)) for p, u in zip(self.points, self.coeffs)]

    def support_size(self) -> int:
        return self.coeffs.size


def _merge(pts: np.ndarray, u: np.ndarray, tol: float = MERGE_TOL):
    """Sum coefficients of points closer than ``tol`` (sup-norm), keeping first-seen order."""
    if pts.shape[0] < 2:
        return pts.copy(), u.copy()
    order = np.lexsort(pts.T[::-1])
    groups = []
    for i in order:
        for g in groups:
            if np.max(np.abs(pts[g[0]] - pts[i])) <= tol:
                g.append(i)
                break
        else:
            groups.append([i])
    groups.sort(key=lambda g: min(g))
    merged_pts = np.array([pts[min(g)] for g in groups])
    merged_u = np.array([u[g].sum() for g in groups])
    return merged_pts, merged_u


def cost(rule: ShiftRule) -> float:
    """Total variation ``sum |u_a|``."""
    return float(np.sum(np.abs(rule.coeffs)))


def fourier_at(rule: ShiftRule, xi) -> complex:
    """``sum_a u_a exp(-2 pi i a.xi)``."""
    xi = np.atleast_1d(np.asarray([float(c) for c in np.atleast_1d(xi)], dtype=float))
    if xi.size != rule.dim:
        raise DimensionMismatch(f"frequency has {xi.size} coordinates, rule has dim {rule.dim}")
    return complex(np.sum(rule.coeffs * np.exp(-2j * np.pi * (rule.points @ xi))))


def system_matrix(freqs: FrequencySet, points) -> np.ndarray:
    """Rows ``(1; cos(2 pi a.xi); -sin(2 pi a.xi))`` over ``xi`` in xi_plus, columns over ``a``.

    ``system_matrix(Xi, A) @ u == target.vector()`` is the feasibility system.
    Column ``a`` is also the coefficient row of ``f(a)`` in the ``(c0, x, y)``
    coordinates of :class:`TrigPoly`.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, freqs.dim)
    phase = 2.0 * np.pi * (freqs.xi_plus_array() @ pts.T)
    return np.vstack([np.ones((1, pts.shape[0])), np.cos(phase), -np.sin(phase)])


def residual_vector(rule: ShiftRule, freqs: FrequencySet, t: DerivativeTarget) -> np.ndarray:
    """Real residual ``E u - target`` of the feasibility system."""
    if rule.dim != freqs.dim:
        raise DimensionMismatch("rule and frequency set dimensions differ")
    return system_matrix(freqs, rule.points) @ rule.coeffs - t.for_freqs(freqs).vector()


def residual(rule: ShiftRule, freqs: FrequencySet, t: DerivativeTarget) -> float:
    """``max_{xi in Xi} |fourier_at(rule, xi) - (2 pi i xi)^alpha|``."""
    r = residual_vector(rule, freqs, t)
    k = len(freqs.xi_plus)
    per_freq = np.abs(r[1:k + 1] + 1j * r[k + 1:])
    return float(max(abs(r[0]), np.max(per_freq, initial=0.0)))


def l2_residual(rule: ShiftRule, freqs: FrequencySet, t: DerivativeTarget) -> float:
    """Euclidean norm of the complex residual over all of ``Xi`` (both signs of xi)."""
    r = residual_vector(rule, freqs, t)
    return float(np.sqrt(r[0] ** 2 + 2.0 * np.sum(r[1:] ** 2)))


def is_feasible(rule: ShiftRule, freqs: FrequencySet, t: DerivativeTarget, feas_tol: float = 1e-7) -> bool:
    return residual(rule, freqs, t) <= feas_tol


def apply(rule: ShiftRule, f: TrigPoly, x) -> float:
    """``sum_a u_a f(x - a)``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != rule.dim or f.dim != rule.dim:
        raise DimensionMismatch("rule, function and point dimensions must agree")
    if len(rule) == 0:
        return 0.0
    return float(rule.coeffs @ f.values(x[None, :] - rule.points))


def rescale(rule: ShiftRule, smap: ScalingMap, t: DerivativeTarget | Sequence[int]) -> ShiftRule:
    """Carry a rule feasible for ``Xi`` over to ``{(s_j xi_j)_j}``.

    Support points are divided by ``s`` and coefficients multiplied by
    ``prod_j s_j ** alpha_j``.
    """
    alpha = t.alpha if isinstance(t, DerivativeTarget) else tuple(np.atleast_1d(t))
    factor = float(smap.derivative_factor(alpha))
    return ShiftRule(rule.dim, rule.points / smap.as_array(), rule.coeffs * factor)


class FixedSupportResult(NamedTuple):
    rule: ShiftRule
    feasible: bool
    l2_gap: float


def polish(freqs: FrequencySet, t: DerivativeTarget, points, coeffs) -> np.ndarray:
    """Re-solve the feasibility system on the support of ``coeffs`` by least squares.

    Keeps the LP's sparsity pattern and recovers full floating-point accuracy
    of the equality constraints.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    nz = np.flatnonzero(coeffs)
    if nz.size == 0:
        return coeffs
    e = system_matrix(freqs, np.asarray(points)[nz])
    sol, *_ = np.linalg.lstsq(e, t.vector(), rcond=None)
    out = np.zeros_like(coeffs)
    out[nz] = sol
    return out


def min_cost_lp(freqs: FrequencySet, t: DerivativeTarget, points, signs=None, tol: float = 1e-9,
                rule: str = "bland"):
    """Minimum-cost rule supported on ``points`` via the split ``u = u+ - u-`` LP.

    ``signs`` optionally restricts each point: +1 allows only ``u_a >= 0``,
    -1 only ``u_a <= 0``, 0 both. Returns ``(LPResult, coefficients or None)``.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, freqs.dim)
    k = pts.shape[0]
    signs = np.zeros(k, dtype=int) if signs is None else np.asarray(signs, dtype=int)
    e = system_matrix(freqs, pts)
    plus = np.flatnonzero(signs >= 0)
    minus = np.flatnonzero(signs <= 0)
    lhs = np.hstack([e[:, plus], -e[:, minus]])
    nvar = plus.size + minus.size
    res = solve(LinearProgram(np.ones(nvar), "min", eq_lhs=lhs, eq_rhs=t.vector(),
                              nonneg_mask=np.ones(nvar, dtype=bool)), tol=tol, rule=rule)
    if res.status != Status.OPTIMAL:
        return res, None
    u = np.zeros(k)
    np.add.at(u, plus, res.primal[:plus.size])
    np.add.at(u, minus, -res.primal[plus.size:])
    return res, u


def solve_fixed_support(freqs: FrequencySet, t: DerivativeTarget, support, feas_tol: float = 1e-7,
                        tol: float = 1e-9) -> FixedSupportResult:
    """Best rule supported on ``support``.

    If a feasible rule exists there, the minimum-cost one is returned with
    ``feasible=True`` and ``l2_gap=0``. Otherwise the coefficients minimizing
    the Euclidean residual over ``Xi`` are returned with ``feasible=False``.
    """
    pts = np.asarray(support, dtype=float).reshape(-1, freqs.dim)
    if pts.shape[0] == 0:
        raise ValueError("support must be non-empty")
    t = t.for_freqs(freqs)
    res, u = min_cost_lp(freqs, t, pts, tol=tol)
    if u is not None:
        u = polish(freqs, t, pts, u)
        rule = ShiftRule(freqs.dim, pts, u)
        if residual(rule, freqs, t) <= feas_tol:
            return FixedSupportResult(rule, True, 0.0)
    # weights make the Euclidean norm run over +xi and -xi
    e = system_matrix(freqs, pts)
    w = np.full(e.shape[0], np.sqrt(2.0))
    w[0] = 1.0
    sol, *_ = np.linalg.lstsq(e * w[:, None], t.vector() * w, rcond=None)
    rule = ShiftRule(freqs.dim, pts, sol)
    gap = l2_residual(ShiftRule(freqs.dim, pts, sol), freqs, t)
    if gap <= feas_tol:
        return FixedSupportResult(rule, True, 0.0)
    return FixedSupportResult(rule, False, gap)
