"""Cutting-plane dual, primal recovery, analytic optima, sparse recovery and certificates."""
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shiftforge.config import DEFAULT_CONFIG
from shiftforge.errors import ActiveSetInfeasible, IterationLimit, NotPointy
from shiftforge.freqset import from_points, from_xi_plus, scale_to_integers
from shiftforge.lp import Status, solve
from shiftforge.optimize import (
    active_sets, analytic_dual, analytic_value, certify, dual_from_function, dual_lp, initial_cuts,
    recover_from_basis, solve_dual, sparse_recover,
)
from shiftforge.shiftrule import ShiftRule, cost, residual, solve_fixed_support
from shiftforge.trigpoly import DerivativeTarget, TrigPoly, neg_deriv_at_zero, random_in_space, sup_norm

PI = math.pi


def target(freqs, alpha):
    return DerivativeTarget.build(freqs, alpha)


# --- cutting-plane dual ---

@pytest.mark.parametrize("xi_plus, alpha, expected, tol", [
    ([1], 1, 2 * PI, 1e-4),
    ([1, 3], 1, 6 * PI, 1e-4),
    ([1, 2], 2, 16 * PI**2, 1e-3),
    ([Fraction(1, 2)], 1, PI, 1e-4),
])
def test_solve_dual_values(xi_plus, alpha, expected, tol):
    freqs = from_xi_plus(1, xi_plus)
    dual = solve_dual(freqs, (alpha,))
    assert dual.value == pytest.approx(expected, abs=tol)
    assert dual.converged
    assert sup_norm(dual.f_star) <= 1 + DEFAULT_CONFIG.delta + 1e-9
    assert neg_deriv_at_zero(dual.f_star, target(freqs, (alpha,))) == pytest.approx(dual.value, rel=1e-8)
    assert len(dual.basis_plus) + len(dual.basis_minus) <= len(freqs)


def test_solve_dual_trace_is_monotone_in_size():
    dual = solve_dual(from_xi_plus(1, [1, 3, 7]), (1,))
    sizes = [r.n_points for r in dual.trace]
    assert sizes == sorted(sizes) and dual.trace[-1].max_violation <= DEFAULT_CONFIG.delta


def test_solve_dual_degenerate_set():
    freqs = from_points(1, [0])
    dual = solve_dual(freqs, (1,))
    assert dual.value == 0.0
    rule = recover_from_basis(freqs, (1,), dual)
    assert len(rule) == 0
    assert certify(rule, freqs, (1,), dual).optimal


def test_iteration_limit_carries_best_iterate():
    with pytest.raises(IterationLimit) as info:
        solve_dual(from_xi_plus(1, [1, 2, 3]), (1,), DEFAULT_CONFIG.with_(max_iterations=1))
    assert info.value.best is not None and info.value.best.value > 0


def test_initial_cuts_grid():
    pts = initial_cuts(from_xi_plus(1, [1, 2]), 128)
    # 2|Xi| + 1 points per axis while under the cap
    assert pts.shape == (11, 1) and np.all(pts >= -0.5) and np.all(pts < 0.5)
    # over the cap: floor(cap ** (1/d)) per axis, but never fewer than 2 M_j + 1
    capped = initial_cuts(from_xi_plus(2, [(1, 0), (0, 1), (1, 1), (1, -1), (2, 2)]), 64)
    assert capped.shape == (64, 2)
    tight = initial_cuts(from_xi_plus(2, [(5, 0), (0, 5)]), 16)
    assert tight.shape == (121, 2)


def test_dual_lp_matches_rule_lp():
    # the general-form dual LP over a fixed grid and the rule LP have the same value
    freqs = from_xi_plus(1, [1, 2])
    t = target(freqs, (1,))
    pts = initial_cuts(freqs, 128)
    res = solve(dual_lp(freqs, t, pts))
    assert res.status == Status.OPTIMAL
    rule_res = solve_fixed_support(freqs, t, pts)
    assert res.value == pytest.approx(cost(rule_res.rule), rel=1e-9)


# --- primal recovery ---

def test_recover_classic_rule():
    freqs = from_xi_plus(1, [1])
    dual = solve_dual(freqs, (1,))
    rule = recover_from_basis(freqs, (1,), dual)
    pts = np.mod(rule.points[:, 0] + 0.5, 1.0) - 0.5
    np.testing.assert_allclose(sorted(pts), [-0.25, 0.25], atol=1e-7)
    assert cost(rule) == pytest.approx(2 * PI, rel=1e-7)
    assert not certify(rule, freqs, (1,), dual).slackness_violations


def test_recover_second_derivative():
    freqs = from_xi_plus(1, [1])
    dual = solve_dual(freqs, (2,))
    rule = recover_from_basis(freqs, (2,), dual)
    assert cost(rule) == pytest.approx(4 * PI**2, rel=1e-6) and len(rule) <= 3


def test_recover_pointy_product(pointy_product):
    dual = solve_dual(pointy_product, (1, 1))
    rule = recover_from_basis(pointy_product, (1, 1), dual)
    assert cost(rule) == pytest.approx(8 * PI**2, abs=1e-3)
    assert len(rule) <= len(pointy_product)
    assert certify(rule, pointy_product, (1, 1), dual).optimal


@pytest.mark.parametrize("m", [1, 2, 3, 4])
@pytest.mark.parametrize("alpha", [1, 2, 3])
def test_strong_duality_and_support_bound(m, alpha):
    freqs = from_xi_plus(1, list(range(1, m + 1)))
    dual = solve_dual(freqs, (alpha,))
    rule = recover_from_basis(freqs, (alpha,), dual)
    assert cost(rule) == pytest.approx(dual.value, rel=1e-5)
    assert residual(rule, freqs, target(freqs, (alpha,))) <= 1e-7
    assert len(rule) <= len(freqs)


# --- analytic optima ---

@pytest.mark.parametrize("xi_plus, alpha, cos, sin, value", [
    ([2], 1, 0.0, 1.0, 4 * PI),                 # -sin(4 pi a): stored as y = 1
    ([1], 2, -1.0, 0.0, 4 * PI**2),             # -cos(2 pi a)
    ([1], 3, 0.0, -1.0, 8 * PI**3),             # sin(2 pi a)
    ([1, 2, 3], 1, 0.0, 1.0, 6 * PI),
])
def test_analytic_dual_1d(xi_plus, alpha, cos, sin, value):
    freqs = from_xi_plus(1, xi_plus)
    f = analytic_dual(freqs, (alpha,))
    np.testing.assert_allclose(f.cosc[:-1], 0.0, atol=1e-15)
    assert (f.cosc[-1], f.sinc[-1]) == pytest.approx((cos, sin), abs=1e-15)
    assert neg_deriv_at_zero(f, target(freqs, (alpha,))) == pytest.approx(value, rel=1e-14)
    assert analytic_value(freqs, (alpha,)) == pytest.approx(value, rel=1e-14)


def test_analytic_dual_pointy(pointy_product, rng):
    f = analytic_dual(pointy_product, (1, 1))
    assert neg_deriv_at_zero(f, target(pointy_product, (1, 1))) == pytest.approx(8 * PI**2, rel=1e-14)
    a = rng.uniform(-1, 1, (30, 2))
    np.testing.assert_allclose(f.values(a), np.sin(2 * PI * a[:, 0]) * np.sin(4 * PI * a[:, 1]), atol=1e-12)


def test_analytic_dual_not_pointy():
    freqs = from_xi_plus(2, [(1, 0), (0, 1)])
    with pytest.raises(NotPointy):
        analytic_dual(freqs, (1, 1))


def test_non_product_pointy_uses_vertex_harmonic():
    # pointy at (1, 1) but (1, -1) is missing, so the product form is not in Fun_Xi
    freqs = from_xi_plus(2, [(1, 0), (0, 1), (1, 1)])
    f = analytic_dual(freqs, (1, 1))
    assert sup_norm(f) == pytest.approx(1.0, abs=1e-9)
    assert neg_deriv_at_zero(f, target(freqs, (1, 1))) == pytest.approx(4 * PI**2, rel=1e-12)
    dual = solve_dual(freqs, (1, 1))
    assert dual.value == pytest.approx(4 * PI**2, rel=1e-5)


# --- sparse recovery ---

def test_sparse_classic():
    freqs = from_xi_plus(1, [1])
    rule = sparse_recover(freqs, (1,), analytic_dual(freqs, (1,)))
    assert dict(rule.atoms) == pytest.approx({(-0.25,): PI, (0.25,): -PI})


def test_sparse_second_derivative():
    freqs = from_xi_plus(1, [1])
    f = analytic_dual(freqs, (2,))
    plus, minus = active_sets(f)
    np.testing.assert_allclose(plus[:, 0], [-0.5])
    np.testing.assert_allclose(minus[:, 0], [0.0])
    rule = sparse_recover(freqs, (2,), f)
    assert dict(rule.atoms) == pytest.approx({(0.0,): -2 * PI**2, (-0.5,): 2 * PI**2})


def test_sparse_gapped_harmonic():
    freqs = from_xi_plus(1, [1, 2, 3])
    f = analytic_dual(freqs, (1,))
    plus, minus = active_sets(f)
    assert sorted(np.concatenate([plus[:, 0], minus[:, 0]])) == pytest.approx(
        [-5 / 12, -1 / 4, -1 / 12, 1 / 12, 1 / 4, 5 / 12])
    rule = sparse_recover(freqs, (1,), f)
    assert cost(rule) == pytest.approx(6 * PI, rel=1e-9)
    assert len(rule) <= len(freqs) - 1
    assert residual(rule, freqs, target(freqs, (1,))) <= 1e-9


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("alpha", [1, 2, 3, 4])
def test_sparse_support_bound(m, alpha):
    freqs = from_xi_plus(1, list(range(1, m + 1)))
    rule = sparse_recover(freqs, (alpha,), analytic_dual(freqs, (alpha,)))
    assert len(rule) <= len(freqs) - alpha % 2
    assert cost(rule) == pytest.approx((2 * PI * m) ** alpha, rel=1e-9)


def test_sparse_pointy(pointy_product):
    rule = sparse_recover(pointy_product, (1, 1), analytic_dual(pointy_product, (1, 1)))
    assert cost(rule) == pytest.approx(8 * PI**2, rel=1e-9)
    assert len(rule) <= len(pointy_product)


def test_sparse_rational_frequencies():
    freqs = from_xi_plus(1, [Fraction(1, 3), Fraction(1, 2)])
    rule = sparse_recover(freqs, (1,), analytic_dual(freqs, (1,)))
    assert cost(rule) == pytest.approx(PI, rel=1e-9)
    assert residual(rule, freqs, target(freqs, (1,))) <= 1e-9


def test_sparse_rejects_non_optimal_dual():
    freqs = from_xi_plus(1, [1])
    with pytest.raises(ActiveSetInfeasible):
        sparse_recover(freqs, (1,), TrigPoly.from_coefficients(freqs, 0.0, cos={(1,): 0.5}))


# --- certificates ---

def test_certify_classic(classic_rule, xi1):
    dual = dual_from_function(xi1, (1,), analytic_dual(xi1, (1,)))
    cert = certify(classic_rule, xi1, (1,), dual)
    assert abs(cert.gap) <= 1e-9 and not cert.slackness_violations
    assert cert.optimal and cert.verdict == "OPTIMAL"


def test_certify_scaled_rule(classic_rule, xi1):
    dual = dual_from_function(xi1, (1,), analytic_dual(xi1, (1,)))
    scaled = ShiftRule(1, classic_rule.points, 1.1 * classic_rule.coeffs)
    cert = certify(scaled, xi1, (1,), dual)
    assert cert.feasibility_residual == pytest.approx(0.1 * 2 * PI, rel=1e-9)
    assert not cert.optimal and cert.verdict == "NOT OPTIMAL"


def test_certify_suboptimal_support(xi1):
    t = target(xi1, (1,))
    res = solve_fixed_support(xi1, t, [-3 / 8, -1 / 8, 1 / 8, 3 / 8])
    assert res.feasible
    dual = dual_from_function(xi1, (1,), analytic_dual(xi1, (1,)))
    cert = certify(res.rule, xi1, (1,), dual)
    assert cert.gap > 1e-3 or cert.slackness_violations
    assert cert.gap == pytest.approx(2 * PI * (math.sqrt(2) - 1), rel=1e-9)
    assert cert.slackness_violations and not cert.optimal


# --- duality properties ---

@settings(max_examples=50, deadline=None)
@given(xi_plus=st.lists(st.integers(1, 6), min_size=1, max_size=4, unique=True),
       alpha=st.integers(1, 3), seed=st.integers(0, 10**6))
def test_weak_duality(xi_plus, alpha, seed):
    freqs = from_xi_plus(1, xi_plus)
    t = target(freqs, (alpha,))
    m = max(xi_plus)
    shift = np.random.default_rng(seed).uniform(-0.5, 0.5)
    rule = solve_fixed_support(freqs, t, shift + np.arange(2 * m + 1) / (2 * m + 1)).rule
    assert residual(rule, freqs, t) <= 1e-7
    f = random_in_space(freqs, seed, sup_bound=1.0)
    assert neg_deriv_at_zero(f, t) <= cost(rule) + 1e-6


@pytest.mark.parametrize("m, subset", [(3, []), (3, [1]), (4, [2]), (4, [1, 3]), (5, [2, 3])])
def test_gap_independence(m, subset):
    full = solve_dual(from_xi_plus(1, list(range(1, m + 1))), (1,)).value
    gapped = solve_dual(from_xi_plus(1, sorted(set(subset) | {m})), (1,)).value
    assert gapped == pytest.approx(full, rel=1e-5)


@pytest.mark.parametrize("xi_plus, s, alpha", [
    ([1, 2], Fraction(3), 1),
    ([1, 3], Fraction(1, 2), 2),
    ([Fraction(1, 3), Fraction(1, 2)], Fraction(6), 1),
])
def test_rescaling_commutes(xi_plus, s, alpha):
    freqs = from_xi_plus(1, xi_plus)
    scaled = from_xi_plus(1, [s * Fraction(x) for x in xi_plus])
    direct = solve_dual(scaled, (alpha,)).value
    assert direct == pytest.approx(solve_dual(freqs, (alpha,)).value * float(s) ** alpha, rel=1e-5)


def test_integer_rescaling_invariant():
    freqs = from_xi_plus(1, [Fraction(2, 3), Fraction(5, 6)])
    ints, smap = scale_to_integers(freqs)
    factor = float(smap.derivative_factor((1,)))
    assert solve_dual(ints, (1,)).value / factor == pytest.approx(solve_dual(freqs, (1,)).value, rel=1e-5)
    assert solve_dual(freqs, (1,)).value == pytest.approx(2 * PI * 5 / 6, rel=1e-5)


def test_many_near_active_extrema_are_all_refined():
    # the dual optimum touches -1 at several points; a dip near a = 0 must not be missed
    freqs = from_xi_plus(1, [Fraction(3, 2), 2, 3])
    assert solve_dual(freqs, (2,)).value == pytest.approx((6 * PI) ** 2, rel=1e-6)


@settings(max_examples=15, deadline=None)
@given(nums=st.lists(st.integers(1, 9), min_size=1, max_size=3, unique=True),
       den=st.integers(1, 4), alpha=st.integers(1, 3))
def test_dual_value_matches_closed_form(nums, den, alpha):
    freqs = from_xi_plus(1, [Fraction(n, den) for n in nums])
    dual = solve_dual(freqs, (alpha,))
    assert dual.value == pytest.approx(analytic_value(freqs, (alpha,)), rel=1e-5)
