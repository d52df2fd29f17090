"""Dense two-phase revised simplex.

Problems are given in the general form

    max/min  c.z
    s.t.     eq_lhs z  = eq_rhs
             ineq_lhs z <= ineq_rhs
             z_j >= 0  for j in nonneg_mask

and converted internally to ``min c'.x, A x = b, x >= 0`` (free variables
split, slacks added, rows normalized by their largest entry, right-hand
sides made nonnegative). Results are reported back in the original
variables and rows.

Row multipliers (``duals``) follow the convention ``value = duals . rhs``
with equality rows first and inequality rows after; for a maximization with
``<=`` rows the inequality multipliers are nonnegative.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NumericalBreakdown

REFACTOR_EVERY = 64


class Status(str, enum.Enum):
    OPTIMAL = "OPTIMAL"
    UNBOUNDED = "UNBOUNDED"
    INFEASIBLE = "INFEASIBLE"


@dataclass(frozen=True)
class LinearProgram:
    objective: np.ndarray
    sense: str = "max"
    eq_lhs: np.ndarray | None = None
    eq_rhs: np.ndarray | None = None
    ineq_lhs: np.ndarray | None = None
    ineq_rhs: np.ndarray | None = None
    nonneg_mask: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).ravel()
        n = c.size
        if self.sense not in ("max", "min"):
            raise ValueError(f"sense must be 'max' or 'min', got {self.sense!r}")

        def block(lhs, rhs, name):
            if lhs is None or np.size(lhs) == 0:
                lhs = np.zeros((0, n))
            lhs = np.asarray(lhs, dtype=float).reshape(-1, n)
            rhs = np.zeros(0) if rhs is None else np.asarray(rhs, dtype=float).ravel()
            if lhs.shape[0] != rhs.size:
                raise DimensionMismatch(f"{name}: {lhs.shape[0]} rows but {rhs.size} right-hand sides")
            return lhs, rhs

        a_eq, b_eq = block(self.eq_lhs, self.eq_rhs, "equalities")
        g, h = block(self.ineq_lhs, self.ineq_rhs, "inequalities")
        mask = np.zeros(n, dtype=bool) if self.nonneg_mask is None else np.asarray(self.nonneg_mask, dtype=bool).ravel()
        if mask.size != n:
            raise DimensionMismatch("nonneg_mask length differs from the number of variables")
        for arr in (c, a_eq, b_eq, g, h):
            if not np.all(np.isfinite(arr)):
                raise ValueError("linear program contains non-finite entries")
        for name, val in (("objective", c), ("eq_lhs", a_eq), ("eq_rhs", b_eq),
                          ("ineq_lhs", g), ("ineq_rhs", h), ("nonneg_mask", mask)):
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.objective.size

    def row(self, ident) -> np.ndarray:
        """Left-hand-side vector of a row identifier ``(kind, index)``."""
        kind, i = ident
        if kind == "eq":
            return self.eq_lhs[i]
        if kind == "ineq":
            return self.ineq_lhs[i]
        e = np.zeros(self.n)
        e[i] = 1.0
        return e

    def rhs(self, ident) -> float:
        kind, i = ident
        return {"eq": self.eq_rhs, "ineq": self.ineq_rhs}[kind][i] if kind != "bound" else 0.0

    def max_violation(self, z) -> float:
        z = np.asarray(z, dtype=float)
        parts = [0.0]
        if self.eq_rhs.size:
            parts.append(float(np.max(np.abs(self.eq_lhs @ z - self.eq_rhs))))
        if self.ineq_rhs.size:
            parts.append(float(np.max(self.ineq_lhs @ z - self.ineq_rhs)))
        if self.nonneg_mask.any():
            parts.append(float(np.max(-z[self.nonneg_mask])))
        return max(parts)


@dataclass
class LPResult:
    status: Status
    primal: np.ndarray | None = None
    value: float = float("nan")
    basis: list = field(default_factory=list)
    ray: np.ndarray | None = None
    eq_duals: np.ndarray | None = None
    ineq_duals: np.ndarray | None = None
    iterations: int = 0
    basic_variables: list = field(default_factory=list)

    @property
    def duals(self) -> np.ndarray | None:
        if self.eq_duals is None:
            return None
        return np.concatenate((self.eq_duals, self.ineq_duals))


class _Tableau:
    """Revised-simplex state over a standard-form problem."""

    def __init__(self, a, b, basis, artificial, tol, rule, twin=None):
        self.a, self.b = a, b
        # twin[j] is the opposite half of a split free variable (or -1); a column
        # never enters while its twin is basic, which would make the basis singular
        self.twin = np.full(a.shape[1], -1) if twin is None else twin
        self.m, self.ncols = a.shape
        self.basis = list(basis)
        self.artificial = artificial
        self.tol = tol
        self.rule = rule
        self.iterations = 0
        self.fence_artificials = False
        self.refactor()

    def refactor(self):
        bmat = self.a[:, self.basis]
        try:
            self.binv = np.linalg.inv(bmat)
        except np.linalg.LinAlgError as exc:
            raise NumericalBreakdown("singular simplex basis; rescale the instance") from exc
        if not np.all(np.isfinite(self.binv)):
            raise NumericalBreakdown("non-finite basis inverse")
        self.xb = self.binv @ self.b
        self.xb[np.abs(self.xb) < self.tol] = 0.0
        self.since_refactor = 0

    def pivot(self, r, j, w):
        theta = self.xb[r] / w[r]
        self.xb -= theta * w
        self.xb[r] = theta
        self.xb[np.abs(self.xb) < self.tol] = 0.0
        row = self.binv[r] / w[r]
        self.binv -= np.outer(w, row)
        self.binv[r] = row
        self.basis[r] = j
        self.iterations += 1
        self.since_refactor += 1
        if self.since_refactor >= REFACTOR_EVERY:
            self.refactor()

    def ratio_test(self, w):
        """Leaving row for direction ``w`` (Bland ties), or None if unbounded."""
        basis = np.asarray(self.basis)
        art = self.artificial[basis] if self.fence_artificials else np.zeros(self.m, dtype=bool)
        piv_tol = self.tol * max(1.0, float(np.max(np.abs(w))))
        ratios = np.full(self.m, np.inf)
        step = ~art & (w > piv_tol)
        ratios[step] = np.maximum(self.xb[step], 0.0) / w[step]
        ratios[art & (np.abs(w) > piv_tol)] = 0.0
        best = float(np.min(ratios))
        if not np.isfinite(best):
            return None
        # Harris-style second pass: among (near-)ties keep only sizeable pivots,
        # then apply the deterministic smallest-index choice
        ties = np.flatnonzero(ratios <= best + self.tol)
        mag = np.abs(w[ties])
        ties = ties[mag >= 0.1 * mag.max()]
        return int(ties[np.argmin(basis[ties])])

    def run(self, cost, allowed, max_iter):
        """Iterate to optimality. Returns ``None`` or the unbounded column and direction."""
        cost_tol = self.tol * max(1.0, float(np.max(np.abs(cost))))
        degenerate_streak = 0
        while True:
            if self.iterations > max_iter:
                raise NumericalBreakdown("simplex iteration limit exceeded")
            y = cost[self.basis] @ self.binv
            rc = cost - y @ self.a
            rc[self.basis] = 0.0
            blocked = np.zeros(self.ncols, dtype=bool)
            has_twin = self.twin >= 0
            in_basis = np.zeros(self.ncols, dtype=bool)
            in_basis[self.basis] = True
            blocked[has_twin] = in_basis[self.twin[has_twin]]
            cand = np.flatnonzero(allowed & ~blocked & (rc < -cost_tol))
            if cand.size == 0:
                return None
            if self.rule == "dantzig" and degenerate_streak < 50:
                j = int(cand[np.argmin(rc[cand])])
            else:
                j = int(cand[0])
            w = self.binv @ self.a[:, j]
            r = self.ratio_test(w)
            if r is None:
                return j, w
            degenerate_streak = degenerate_streak + 1 if self.xb[r] == 0.0 else 0
            self.pivot(r, j, w)

    def duals(self, cost):
        return cost[self.basis] @ self.binv

    def x(self):
        x = np.zeros(self.ncols)
        x[self.basis] = self.xb
        return x


def _independent_rows(rows, ids, n, tol=1e-9):
    """Greedy maximal linearly independent subset (Gram-Schmidt)."""
    q = np.zeros((0, n))
    chosen = []
    for v, ident in zip(rows, ids):
        if len(chosen) == n:
            break
        nv = float(np.linalg.norm(v))
        if nv == 0.0:
            continue
        res = v - q.T @ (q @ v)
        res = res - q.T @ (q @ res)
        nr = float(np.linalg.norm(res))
        if nr > tol * nv:
            q = np.vstack([q, res / nr])
            chosen.append(ident)
    return chosen


def solve(lp: LinearProgram, tol: float = 1e-9, rule: str = "bland") -> LPResult:
    """Solve ``lp`` with the revised simplex method.

    Args:
        lp: the problem.
        tol: pivot, reduced-cost and feasibility tolerance on the normalized problem.
        rule: ``"bland"`` (smallest-index entering and leaving variables) or
            ``"dantzig"`` (most negative reduced cost, falling back to Bland on
            long degenerate streaks).

    Raises:
        NumericalBreakdown: singular basis or iteration limit.
        ValueError: unknown pivot rule.
    """
    if rule not in ("bland", "dantzig"):
        raise ValueError(f"unknown pivot rule {rule!r}")
    n = lp.n
    c_min = lp.objective if lp.sense == "min" else -lp.objective
    c_scale = float(np.max(np.abs(c_min))) if np.any(c_min) else 1.0

    # structural columns
    pos = np.arange(n)
    neg = -np.ones(n, dtype=int)
    nstruct = n
    for j in range(n):
        if not lp.nonneg_mask[j]:
            neg[j] = nstruct
            nstruct += 1

    def split(mat):
        out = np.zeros((mat.shape[0], nstruct))
        out[:, pos] = mat
        free = neg >= 0
        out[:, neg[free]] = -mat[:, free]
        return out

    # row normalization and zero-row screening
    # rows whose entries are all round-off relative to the matrix are zero rows
    entries = [np.abs(m).max() for m in (lp.eq_lhs, lp.ineq_lhs) if m.size]
    zero_tol = 1e-13 * max([1.0] + [float(e) for e in entries])
    rhs_scale = 1.0 + max([0.0] + [float(np.abs(v).max()) for v in (lp.eq_rhs, lp.ineq_rhs) if v.size])
    rows, rhs, origin, scale = [], [], [], []
    for kind, lhs, b in (("eq", lp.eq_lhs, lp.eq_rhs), ("ineq", lp.ineq_lhs, lp.ineq_rhs)):
        for i in range(lhs.shape[0]):
            big = float(np.max(np.abs(lhs[i]))) if lhs.shape[1] else 0.0
            if big <= zero_tol:
                bad = abs(b[i]) > tol * rhs_scale if kind == "eq" else b[i] < -tol * rhs_scale
                if bad:
                    return LPResult(Status.INFEASIBLE)
                continue
            rows.append(lhs[i] / big)
            rhs.append(b[i] / big)
            origin.append((kind, i))
            scale.append(1.0 / big)
    m = len(rows)
    a_struct = split(np.array(rows).reshape(m, n))
    b = np.array(rhs, dtype=float)
    sign = np.where(b < 0, -1.0, 1.0)

    # slack columns for kept inequality rows
    slack_of_row = -np.ones(m, dtype=int)
    ncols = nstruct
    for r, (kind, _) in enumerate(origin):
        if kind == "ineq":
            slack_of_row[r] = ncols
            ncols += 1
    a = np.zeros((m, ncols))
    a[:, :nstruct] = a_struct
    for r in range(m):
        if slack_of_row[r] >= 0:
            a[r, slack_of_row[r]] = 1.0
    a *= sign[:, None]
    b = b * sign

    # initial basis: slacks where possible, artificials elsewhere
    basis = []
    art_cols = []
    for r in range(m):
        if slack_of_row[r] >= 0 and sign[r] > 0:
            basis.append(int(slack_of_row[r]))
        else:
            basis.append(ncols + len(art_cols))
            art_cols.append(r)
    if art_cols:
        art = np.zeros((m, len(art_cols)))
        for k, r in enumerate(art_cols):
            art[r, k] = 1.0
        a = np.hstack([a, art])
    total = a.shape[1]
    artificial = np.zeros(total, dtype=bool)
    artificial[ncols:] = True

    cost2 = np.zeros(total)
    cost2[pos] = c_min / c_scale
    free = neg >= 0
    cost2[neg[free]] = -c_min[free] / c_scale

    max_iter = 50 * (m + total) + 1000
    if m == 0:
        # only sign constraints: bounded iff no improving direction
        improving = [j for j in range(n) if (c_min[j] < -tol) or (not lp.nonneg_mask[j] and c_min[j] > tol)]
        if improving:
            ray = np.zeros(n)
            j = improving[0]
            ray[j] = -np.sign(c_min[j])
            return LPResult(Status.UNBOUNDED, ray=ray)
        z = np.zeros(n)
        basis_rows = _independent_rows([np.eye(n)[j] for j in range(n) if lp.nonneg_mask[j]],
                                       [("bound", j) for j in range(n) if lp.nonneg_mask[j]], n)
        return LPResult(Status.OPTIMAL, primal=z, value=0.0, basis=basis_rows,
                        eq_duals=np.zeros(lp.eq_rhs.size), ineq_duals=np.zeros(lp.ineq_rhs.size))

    twin = np.full(total, -1)
    twin[pos[free]] = neg[free]
    twin[neg[free]] = pos[free]
    tab = _Tableau(a, b, basis, artificial, tol, rule, twin)
    if art_cols:
        cost1 = artificial.astype(float)
        tab.run(cost1, np.ones(total, dtype=bool), max_iter)
        infeas = float(cost1[tab.basis] @ tab.xb)
        if infeas > 1e3 * tol * (1.0 + float(np.max(np.abs(b)))):
            return LPResult(Status.INFEASIBLE, iterations=tab.iterations)
        # drive zero-level artificials out of the basis where possible
        for r in range(m):
            if not artificial[tab.basis[r]]:
                continue
            row = tab.binv[r] @ a
            row[artificial] = 0.0
            row[tab.basis] = 0.0
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) > 1e3 * tol:
                tab.pivot(r, j, tab.binv @ a[:, j])
        tab.refactor()

    allowed = ~artificial
    tab.fence_artificials = True
    unb = tab.run(cost2, allowed, max_iter)
    if unb is not None:
        j, w = unb
        dx = np.zeros(total)
        dx[tab.basis] = -w
        dx[j] = 1.0
        ray = dx[pos].copy()
        ray[free] -= dx[neg[free]]
        ray /= float(np.max(np.abs(ray))) or 1.0
        return LPResult(Status.UNBOUNDED, ray=ray, iterations=tab.iterations)

    # move free variables off zero along optimal edges so the point is a vertex
    for j in np.flatnonzero(free):
        in_basis = set(tab.basis)
        if pos[j] in in_basis or neg[j] in in_basis:
            continue
        for col in (pos[j], neg[j]):
            w = tab.binv @ a[:, col]
            r = tab.ratio_test(w)
            if r is not None:
                tab.pivot(r, col, w)
                break
    tab.refactor()

    x = tab.x()
    z = x[pos].copy()
    z[free] -= x[neg[free]]
    value = float(lp.objective @ z)

    y = tab.duals(cost2) * c_scale
    sense_sign = 1.0 if lp.sense == "min" else -1.0
    eq_duals = np.zeros(lp.eq_rhs.size)
    ineq_duals = np.zeros(lp.ineq_rhs.size)
    for r, (kind, i) in enumerate(origin):
        d = sense_sign * y[r] * sign[r] * scale[r]
        if kind == "eq":
            eq_duals[i] = d
        else:
            ineq_duals[i] = d

    # active rows defining the vertex
    basic = set(tab.basis)
    primary, secondary = [], []
    primary += [("eq", i) for i in range(lp.eq_rhs.size)]
    for r, (kind, i) in enumerate(origin):
        if kind == "ineq":
            s = slack_of_row[r]
            if s not in basic:
                primary.append(("ineq", i))
            elif x[s] <= tol:
                secondary.append(("ineq", i))
    for j in range(n):
        if lp.nonneg_mask[j]:
            if pos[j] not in basic:
                primary.append(("bound", j))
            elif z[j] <= tol:
                secondary.append(("bound", j))
    ids = primary + secondary
    basis_rows = _independent_rows([lp.row(i) for i in ids], ids, n)
    basic_vars = sorted(j for j in range(n) if pos[j] in basic or (neg[j] >= 0 and neg[j] in basic))
    return LPResult(Status.OPTIMAL, primal=z, value=value, basis=basis_rows,
                    eq_duals=eq_duals, ineq_duals=ineq_duals, iterations=tab.iterations,
                    basic_variables=basic_vars)
