"""Optimal shift rules through the dual problem.

The dual problem maximizes ``(-d)^alpha f(0)`` over ``f`` in Fun_Xi with
``|f| <= 1`` everywhere. :func:`solve_dual` attacks it with a cutting-plane
loop (finite LP over a growing point set, separation by global extrema);
:func:`recover_from_basis` reads an optimal rule off the final LP;
:func:`analytic_dual` gives closed-form optima for ``d = 1`` and pointy
sets, and :func:`sparse_recover` turns a known optimum into a sparse rule
with one LP. :func:`certify` checks a rule against a dual solution.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .config import DEFAULT_CONFIG, SolverConfig
from .errors import (ActiveSetInfeasible, DegenerateBasis, IterationLimit, NotPointy,
                     NumericalBreakdown, UnsupportedDimension)
from .freqset import FrequencySet, ScalingMap, is_pointy, pointy_vertex, scale_to_integers
from .lp import LinearProgram, Status
from .shiftrule import (ShiftRule, cost, min_cost_lp, polish, rescale, residual,
                        system_matrix)
from .trigpoly import (MAX_EXTREMA_DIM, DerivativeTarget, TrigPoly, global_extrema,
                       neg_deriv_at_zero)

log = logging.getLogger(__name__)

LEVEL_TOL = 1e-8
DEDUP_TOL = 1e-9
DROP_REL = 1e-8

__all__ = [
    "SolverConfig", "IterationRecord", "DualSolution", "Certificate", "solve_dual",
    "recover_from_basis", "analytic_dual", "analytic_value", "dual_from_function",
    "sparse_recover", "active_sets", "certify",
]


def _target(freqs: FrequencySet, t) -> DerivativeTarget:
    if isinstance(t, DerivativeTarget):
        return t.for_freqs(freqs) if t.freqs != freqs else t
    return DerivativeTarget.build(freqs, t)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    n_points: int
    lp_value: float
    max_violation: float


@dataclass(frozen=True)
class DualSolution:
    """A (near-)optimal dual function with the data of the final LP.

    Points are in the coordinates of the original frequency set. ``multipliers``
    holds ``u+ - u-`` of the final LP per constraint point (None for duals
    not produced by :func:`solve_dual`).
    """

    f_star: TrigPoly
    value: float
    constraint_points: np.ndarray
    basis_plus: np.ndarray
    basis_minus: np.ndarray
    iterations: int
    multipliers: np.ndarray | None = None
    value_lower: float | None = None
    converged: bool = True
    trace: tuple = field(default=(), repr=False)


@dataclass(frozen=True)
class Certificate:
    rule: ShiftRule
    dual: DualSolution
    cost: float
    value: float
    gap: float
    slackness_violations: list
    feasibility_residual: float
    cert_tol: float
    feas_tol: float

    @property
    def optimal(self) -> bool:
        return (self.gap <= self.cert_tol and self.feasibility_residual <= self.feas_tol
                and not self.slackness_violations)

    @property
    def relative_gap(self) -> float:
        return self.gap / (1.0 + abs(self.value))

    @property
    def verdict(self) -> str:
        return "OPTIMAL" if self.optimal else "NOT OPTIMAL"


# --- cutting-plane dual -------------------------------------------------------

def initial_cuts(freqs: FrequencySet, cap: int) -> np.ndarray:
    """Equispaced starting grid on [-1/2, 1/2)^d for an integral set."""
    d = freqs.dim
    top = [int(m) for m in freqs.max_abs()]
    counts = [max(2 * len(freqs) + 1, 2 * m + 1) for m in top]
    if math.prod(counts) > cap:
        per_axis = int(math.floor(cap ** (1.0 / d) + 1e-9))
        counts = [max(per_axis, 2 * m + 1) for m in top]
    axes = [np.arange(n) / n - 0.5 for n in counts]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def dual_lp(freqs: FrequencySet, t: DerivativeTarget, points) -> LinearProgram:
    """The finite dual LP: maximize the dual objective s.t. ``|f(a)| <= 1`` on ``points``.

    Variables are ``(c0, x, y)``; rows alternate ``f(a) <= 1`` and ``-f(a) <= 1``.
    """
    rows = system_matrix(freqs, points).T
    g = np.empty((2 * rows.shape[0], rows.shape[1]))
    g[0::2] = rows
    g[1::2] = -rows
    return LinearProgram(t.vector(), "max", ineq_lhs=g, ineq_rhs=np.ones(g.shape[0]))


def _periodic_close(p: np.ndarray, pts: np.ndarray, tol: float = DEDUP_TOL) -> bool:
    if pts.shape[0] == 0:
        return False
    diff = p[None, :] - pts
    diff -= np.round(diff)
    return bool(np.any(np.max(np.abs(diff), axis=1) <= tol))


def _to_original_poly(f_int: TrigPoly, freqs: FrequencySet, smap: ScalingMap) -> TrigPoly:
    """``f(a) = f_int(a / s)`` as a polynomial over the original set."""
    k = len(freqs.xi_plus)
    x, y = np.zeros(k), np.zeros(k)
    for i, xi in enumerate(freqs.xi_plus):
        j = f_int.freqs.index(tuple(s * c for s, c in zip(smap.factors, xi)))
        x[i], y[i] = f_int.cosc[j], f_int.sinc[j]
    return TrigPoly(freqs, f_int.c0, x, y)


def _trivial_dual(freqs: FrequencySet) -> DualSolution:
    empty = np.zeros((0, freqs.dim))
    return DualSolution(TrigPoly.zero(freqs), 0.0, empty, empty, empty, 0,
                        multipliers=np.zeros(0), value_lower=0.0)


def solve_dual(freqs: FrequencySet, alpha, config: SolverConfig = DEFAULT_CONFIG) -> DualSolution:
    """Cutting-plane solution of the dual problem.

    The set is rescaled to integers internally; the returned function, points
    and value refer to the original coordinates.

    Raises:
        IterationLimit: violations remain after ``config.max_iterations`` rounds
            and the objective bracket is wider than ``config.epsilon``.
        NumericalBreakdown: from the LP solver, or a stalled cut loop.
    """
    t = _target(freqs, alpha)
    if not freqs.xi_plus:
        return _trivial_dual(freqs)
    if freqs.dim > MAX_EXTREMA_DIM:
        raise UnsupportedDimension(f"solve_dual supports d <= {MAX_EXTREMA_DIM}")
    xi_int, smap = scale_to_integers(freqs)
    t_int = t.for_freqs(xi_int)
    factor = float(smap.derivative_factor(t.alpha))
    s = smap.as_array()

    pts = initial_cuts(xi_int, config.initial_grid)
    sep_config = config
    densified = False
    trace = []
    best = None

    for it in range(1, config.max_iterations + 1):
        # the cut LP is solved in its rule form (min sum|u| s.t. E u = t over the
        # current points); its equality multipliers are the dual function
        res, _ = min_cost_lp(xi_int, t_int, pts, tol=config.lp_tol, rule=config.pivot_rule)
        if res.status == Status.INFEASIBLE:
            # dual LP unbounded: the points do not yet pin down Fun_Xi
            fresh = _refine_grid(pts, xi_int)
            pts = np.vstack([pts, fresh])
            trace.append(IterationRecord(it, pts.shape[0], math.inf, math.inf))
            continue
        if res.status != Status.OPTIMAL:
            raise NumericalBreakdown(f"cut LP reported {res.status.value}")

        f = TrigPoly.from_vector(xi_int, res.eq_duals)
        ext = global_extrema(f, sep_config)
        violation = max(ext.maxval - 1.0, -1.0 - ext.minval)
        sup = max(abs(ext.maxval), abs(ext.minval))
        lower = res.value / sup if sup > 1.0 else res.value
        trace.append(IterationRecord(it, pts.shape[0], res.value / factor, violation))
        log.debug("iteration %d: |A|=%d value=%.12g violation=%.3g", it, pts.shape[0], res.value, violation)
        best = (res, f, pts, lower)

        cuts = []
        if ext.minval < -1.0 - config.delta:
            cuts.append(ext.argmin)
        if ext.maxval > 1.0 + config.delta:
            cuts.append(ext.argmax)
        if not cuts:
            return _package(freqs, xi_int, smap, factor, s, res, f, pts, it, lower, True, trace)
        fresh = [p for p in cuts if not _periodic_close(p, pts)]
        if not fresh:
            if densified:
                break
            densified = True
            sep_config = config.with_(grid_oversample=2 * config.grid_oversample)
            continue
        pts = np.vstack([pts] + [p[None, :] for p in fresh])

    if best is not None:
        res, f, pts_b, lower = best
        if res.value - lower <= config.epsilon * abs(res.value):
            return _package(freqs, xi_int, smap, factor, s, res, f, pts_b, len(trace), lower, False, trace)
        partial = _package(freqs, xi_int, smap, factor, s, res, f, pts_b, len(trace), lower, False, trace)
    else:
        partial = None
    raise IterationLimit(f"separation still violated after {len(trace)} iterations", best=partial)


def _package(freqs, xi_int, smap, factor, s, res, f_int, pts, iterations, lower, converged, trace):
    npts = pts.shape[0]
    basic = np.asarray(res.basic_variables, dtype=int)
    plus_idx = basic[basic < npts]
    minus_idx = basic[basic >= npts] - npts
    mult = (res.primal[:npts] - res.primal[npts:]) / factor
    orig_pts = pts * s
    return DualSolution(
        f_star=_to_original_poly(f_int, freqs, smap),
        value=res.value / factor,
        constraint_points=orig_pts,
        basis_plus=orig_pts[plus_idx],
        basis_minus=orig_pts[minus_idx],
        iterations=iterations,
        multipliers=mult,
        value_lower=lower / factor,
        converged=converged,
        trace=tuple(trace),
    )


def _refine_grid(pts: np.ndarray, freqs: FrequencySet) -> np.ndarray:
    """Midpoint-shifted copy of the equispaced start grid (used if the cut LP is unbounded)."""
    base = initial_cuts(freqs, 10**6)
    step = np.array([1.0 / len(np.unique(base[:, j])) for j in range(freqs.dim)])
    shifted = base + 0.5 * step
    shifted -= np.floor(shifted + 0.5)
    return np.array([p for p in shifted if not _periodic_close(p, pts)]).reshape(-1, freqs.dim)


def recover_from_basis(freqs: FrequencySet, alpha, dual: DualSolution,
                       config: SolverConfig = DEFAULT_CONFIG) -> ShiftRule:
    """Optimal rule supported on the final LP basis ``A+ u A-``.

    Solves the feasibility system restricted to the basis points (``u >= 0``
    on ``A+``, ``u <= 0`` on ``A-``); its solution coincides with the LP row
    multipliers but is recomputed here to full precision.

    Raises:
        DegenerateBasis: the restricted system has no sign-consistent solution.
    """
    t = _target(freqs, alpha)
    if not freqs.xi_plus:
        return ShiftRule.empty(freqs.dim)
    pts = np.vstack([dual.basis_plus, dual.basis_minus])
    signs = np.concatenate([np.ones(len(dual.basis_plus), int), -np.ones(len(dual.basis_minus), int)])
    if pts.shape[0]:
        e = system_matrix(freqs, pts)
        u, *_ = np.linalg.lstsq(e, t.vector(), rcond=None)
        scale = float(np.max(np.abs(u))) if u.size else 0.0
        # degenerate basic points carry round-off multipliers; drop them and re-solve
        u[np.abs(u) <= DROP_REL * scale] = 0.0
        u = polish(freqs, t, pts, u)
        consistent = np.all(signs * u >= -1e-9 * scale)
        rule = ShiftRule(freqs.dim, pts, u)
        if consistent and residual(rule, freqs, t) <= config.feas_tol and len(rule) <= len(freqs):
            return rule
        res, u = min_cost_lp(freqs, t, pts, signs, tol=config.lp_tol)
        if u is not None:
            rule = ShiftRule(freqs.dim, pts, polish(freqs, t, pts, u))
            if residual(rule, freqs, t) <= config.feas_tol:
                return rule
    if dual.multipliers is not None and dual.multipliers.size:
        cand = ShiftRule(freqs.dim, dual.constraint_points, dual.multipliers)
        refined = ShiftRule(freqs.dim, cand.points, polish(freqs, t, cand.points, cand.coeffs))
        if residual(refined, freqs, t) <= config.feas_tol and len(refined) <= len(freqs):
            return refined
    raise DegenerateBasis("no feasible rule on the basis points; retry with a perturbed grid")


# --- analytic optima ----------------------------------------------------------

# (d^k cos)(phi) = Re(omega_k exp(i phi)) with omega_k = i^k
_OMEGA = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)


def analytic_value(freqs: FrequencySet, alpha) -> float:
    """Optimal cost ``prod_j (2 pi max pr_j Xi)^alpha_j`` (d = 1 or pointy)."""
    t = _target(freqs, alpha)
    if freqs.dim > 1 and is_pointy(freqs) is None:
        raise NotPointy("no closed-form optimum for a non-pointy set")
    mono = Fraction(1)
    for m, a in zip(freqs.max_abs(), t.alpha):
        mono *= m**a
    return float(mono) * (2.0 * math.pi) ** t.order


def analytic_dual(freqs: FrequencySet, alpha) -> TrigPoly:
    """Closed-form dual optimum.

    For ``d = 1``: ``a -> (d^alpha cos)(2 pi max(Xi) a)``. For pointy sets in
    ``d >= 2``: the product ``prod_j (d^alpha_j cos)(2 pi max pr_j(Xi) a_j)``
    when all its frequencies lie in ``Xi``, else the single harmonic at the
    pointy vertex with phase aligned to ``(2 pi i xi)^alpha``.

    Raises:
        NotPointy: ``d >= 2`` and ``Xi`` is not pointy.
    """
    t = _target(freqs, alpha)
    if freqs.dim > 1 and is_pointy(freqs) is None:
        raise NotPointy("no closed-form optimum for a non-pointy set; use solve_dual")
    if not freqs.xi_plus:
        return TrigPoly.zero(freqs)
    top = freqs.max_abs()
    if any(m == 0 for m in top):
        return TrigPoly.zero(freqs)

    # product expansion: prod_j Re(w_j e^{i phi_j}) = 2^-d sum_sigma prod_j (w_j or conj w_j) e^{i sum sigma_j phi_j}
    terms = {}
    for sigma in np.ndindex(*(2,) * freqs.dim):
        signs = [1 if s == 0 else -1 for s in sigma]
        xi = tuple(sg * m for sg, m in zip(signs, top))
        w = complex(1.0)
        for sg, a in zip(signs, t.alpha):
            om = _OMEGA[a % 4]
            w *= om if sg > 0 else om.conjugate()
        terms[xi] = terms.get(xi, 0.0) + w / 2**freqs.dim
    if all(xi in freqs.points for xi in terms):
        k = len(freqs.xi_plus)
        x, y = np.zeros(k), np.zeros(k)
        for xi, b in terms.items():
            if xi in freqs.xi_plus:
                j = freqs.xi_plus.index(xi)
                x[j] += 2.0 * b.real
                y[j] += 2.0 * b.imag
        return TrigPoly(freqs, 0.0, x, y)

    vertex = pointy_vertex(freqs)
    j = freqs.index(vertex)
    c, s = t.c[j], t.s[j]
    norm = math.hypot(c, s)
    return TrigPoly.from_coefficients(freqs, 0.0, cos={freqs.xi_plus[j]: c / norm},
                                      sin={freqs.xi_plus[j]: s / norm})


def dual_from_function(freqs: FrequencySet, alpha, f: TrigPoly) -> DualSolution:
    """Wrap a known dual-feasible function as a :class:`DualSolution`."""
    t = _target(freqs, alpha)
    empty = np.zeros((0, freqs.dim))
    value = neg_deriv_at_zero(f, t)
    return DualSolution(f, value, empty, empty, empty, 0, value_lower=value)


# --- sparse recovery from a known optimum -------------------------------------

def _single_harmonic_points_1d(f: TrigPoly):
    """Exact extremal points of ``c0 + r cos(2 pi M a + theta)`` on [-1/2, 1/2)."""
    nz = np.flatnonzero((f.cosc != 0) | (f.sinc != 0))
    if f.dim != 1 or nz.size != 1 or abs(f.c0) > LEVEL_TOL:
        return None
    j = int(nz[0])
    r = math.hypot(f.cosc[j], f.sinc[j])
    if abs(r - 1.0) > LEVEL_TOL:
        return None
    m = f.freqs.xi_plus[j][0]
    if m.denominator != 1:
        return None
    m = int(m)
    q = math.atan2(f.sinc[j], f.cosc[j]) / (2.0 * math.pi)
    quarter = round(4 * q)
    offset = Fraction(quarter, 4) if abs(4 * q - quarter) < 1e-12 else None

    def points(shift):
        out = []
        for k in range(-m - 1, m + 2):
            if offset is not None:
                a = (k + shift - offset) / m
                a = a - math.floor(a + Fraction(1, 2))
                out.append(float(a))
            else:
                a = (k + float(shift) - q) / m
                out.append(a - math.floor(a + 0.5))
        return sorted(set(out))

    return np.array(points(Fraction(0)))[:, None], np.array(points(Fraction(1, 2)))[:, None]


def active_sets(f: TrigPoly, config: SolverConfig = DEFAULT_CONFIG, level_tol: float = LEVEL_TOL):
    """Points of [-1/2, 1/2)^d where ``f = +1`` and ``f = -1`` (integral spectrum).

    Uses the closed form for a single harmonic in one dimension; otherwise
    scans the quarter-period lattice ``k / (4 M_j)`` and the refined local
    extrema of the global search.
    """
    closed = _single_harmonic_points_1d(f)
    if closed is not None:
        return closed
    top = [int(m) for m in f.freqs.max_abs()]
    axes = [np.arange(-2 * m, 2 * m) / (4 * m) if m else np.zeros(1) for m in top]
    mesh = np.meshgrid(*axes, indexing="ij")
    cand = [np.stack([g.ravel() for g in mesh], axis=1)]
    if f.dim <= MAX_EXTREMA_DIM:
        ext = global_extrema(f, config)
        cand.append(np.array([p for p, _ in ext.min_candidates + ext.max_candidates]))
    pts = np.vstack(cand)
    vals = f.values(pts)
    plus, minus = [], []
    for p, v in zip(pts, vals):
        for bucket, level in ((plus, 1.0), (minus, -1.0)):
            if abs(v - level) <= level_tol:
                stacked = np.array(bucket) if bucket else np.zeros((0, f.dim))
                if not _periodic_close(p, stacked):
                    bucket.append(p)
    as_arr = lambda b: np.array(b).reshape(-1, f.dim)  # noqa: E731
    return as_arr(plus), as_arr(minus)


def sparse_recover(freqs: FrequencySet, alpha, f_star: TrigPoly,
                   config: SolverConfig = DEFAULT_CONFIG) -> ShiftRule:
    """Sparse optimal rule from a known dual optimum with one LP.

    The support is restricted to the extremal points of ``f_star`` with the
    sign pattern forced by complementary slackness, and ``sum |u|`` is
    minimized over that support.

    Raises:
        ActiveSetInfeasible: no feasible rule lives on the extremal set.
    """
    t = _target(freqs, alpha)
    if not freqs.xi_plus:
        return ShiftRule.empty(freqs.dim)
    xi_int, smap = scale_to_integers(freqs)
    t_int = t.for_freqs(xi_int)
    f_int = f_star.with_scaled_frequencies(smap)
    plus, minus = active_sets(f_int, config)
    pts = np.vstack([plus, minus])
    if pts.shape[0] == 0:
        raise ActiveSetInfeasible("f_star never reaches +-1; it is not dual optimal")
    signs = np.concatenate([np.ones(len(plus), int), -np.ones(len(minus), int)])
    _, u = min_cost_lp(xi_int, t_int, pts, signs, tol=config.lp_tol)
    if u is None:
        raise ActiveSetInfeasible("no feasible rule is supported on the extremal set")
    u = polish(xi_int, t_int, pts, u)
    rule_int = ShiftRule(freqs.dim, pts, u)
    if residual(rule_int, xi_int, t_int) > config.feas_tol * max(1.0, float(smap.derivative_factor(t.alpha))):
        raise ActiveSetInfeasible("extremal-set LP solution does not satisfy the feasibility system")
    return rescale(rule_int, smap.inverse(), t.alpha)


# --- certification ------------------------------------------------------------

def certify(rule: ShiftRule, freqs: FrequencySet, alpha, dual: DualSolution,
            config: SolverConfig = DEFAULT_CONFIG) -> Certificate:
    """Duality-gap, feasibility and complementary-slackness report."""
    t = _target(freqs, alpha)
    c = cost(rule)
    value = float(dual.value)
    violations = []
    for p, u in zip(rule.points, rule.coeffs):
        fa = dual.f_star(p)
        if (u > 0 and fa < 1.0 - config.slack_tol) or (u < 0 and fa > -1.0 + config.slack_tol):
            violations.append((tuple(float(x) for x in p), int(np.sign(u)), float(fa)))
    return Certificate(
        rule=rule, dual=dual, cost=c, value=value, gap=c - value,
        slackness_violations=violations,
        feasibility_residual=residual(rule, freqs, t) if freqs.xi_plus else float(abs(rule.coeffs.sum())),
        cert_tol=config.cert_tol(value), feas_tol=config.feas_tol,
    )
