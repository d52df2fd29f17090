"""Shift rules: transforms, residuals, application, rescaling and fixed-support solves."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shiftforge.freqset import from_xi_plus, scale_to_integers
from shiftforge.shiftrule import (
    ShiftRule, apply, cost, fourier_at, is_feasible, l2_residual, rescale, residual,
    solve_fixed_support,
)
from shiftforge.trigpoly import DerivativeTarget, derivative, evaluate, random_in_space

PI = math.pi


def residual_oracle(rule, freqs, alpha):
    """max over all of Xi of |sum_a u_a e^{-2 pi i a.xi} - prod (2 pi i xi_j)^alpha_j|, in complex arithmetic."""
    worst = 0.0
    for xi in freqs:
        xi = np.array([float(c) for c in xi])
        phi = sum(u * np.exp(-2j * PI * float(np.dot(a, xi))) for a, u in zip(rule.points, rule.coeffs))
        target = np.prod([(2j * PI * x) ** k for x, k in zip(xi, alpha)])
        worst = max(worst, abs(phi - target))
    return worst


def second_rule():
    return ShiftRule.from_atoms({0.0: -2 * PI**2, 0.5: 2 * PI**2})


# --- construction ---

def test_merge_and_zero_drop():
    rule = ShiftRule.from_atoms([(0.1, 1.0), (0.1 + 1e-12, 2.0), (0.3, 0.0)])
    assert len(rule) == 1 and rule.coeffs[0] == pytest.approx(3.0)


def test_mismatched_lengths_rejected():
    from shiftforge.errors import DimensionMismatch
    with pytest.raises(DimensionMismatch):
        ShiftRule(1, np.zeros((2, 1)), np.ones(3))


# --- cost and transform ---

@pytest.mark.parametrize("rule, expected", [
    (ShiftRule.from_atoms({-0.25: PI, 0.25: -PI}), 2 * PI),
    (ShiftRule.empty(1), 0.0),
    (second_rule(), 4 * PI**2),
])
def test_cost_examples(rule, expected):
    assert cost(rule) == pytest.approx(expected, abs=1e-12)


def test_fourier_at_examples(classic_rule):
    assert fourier_at(classic_rule, 1) == pytest.approx(2j * PI, abs=1e-12)
    assert fourier_at(ShiftRule.empty(1), 0.7) == 0
    rule = ShiftRule.from_atoms({0.1: 1.5, -0.3: -0.25, 0.45: 2.0})
    assert fourier_at(rule, 0) == pytest.approx(3.25)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6), xi=st.floats(-5, 5))
def test_fourier_conjugate_symmetry(seed, xi):
    rng = np.random.default_rng(seed)
    rule = ShiftRule(1, rng.uniform(-0.5, 0.5, 5), rng.standard_normal(5))
    assert fourier_at(rule, -xi) == pytest.approx(np.conj(fourier_at(rule, xi)), abs=1e-12)


# --- residual ---

@pytest.mark.parametrize("rule, alpha, expected, tol", [
    (ShiftRule.from_atoms({-0.25: PI, 0.25: -PI}), 1, 0.0, 1e-12),
    (ShiftRule.empty(1), 1, 2 * PI, 1e-12),
    (second_rule(), 2, 0.0, 1e-10),
])
def test_residual_examples(xi1, rule, alpha, expected, tol):
    t = DerivativeTarget.build(xi1, (alpha,))
    assert residual(rule, xi1, t) == pytest.approx(expected, abs=tol)
    assert residual_oracle(rule, xi1, (alpha,)) == pytest.approx(expected, abs=tol)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), alpha=st.integers(1, 3))
def test_residual_matches_oracle(seed, alpha):
    rng = np.random.default_rng(seed)
    freqs = from_xi_plus(1, sorted(set(rng.integers(1, 6, 3).tolist())))
    rule = ShiftRule(1, rng.uniform(-0.5, 0.5, 4), 10 * rng.standard_normal(4))
    t = DerivativeTarget.build(freqs, (alpha,))
    assert residual(rule, freqs, t) == pytest.approx(residual_oracle(rule, freqs, (alpha,)), rel=1e-10, abs=1e-10)


def test_residual_2d(pointy_product):
    # tensor product of the classic rules for max frequencies 1 and 2
    rule = ShiftRule.from_atoms({(0.25, 0.125): 2 * PI**2, (-0.25, -0.125): 2 * PI**2,
                                 (0.25, -0.125): -2 * PI**2, (-0.25, 0.125): -2 * PI**2}, dim=2)
    t = DerivativeTarget.build(pointy_product, (1, 1))
    assert residual(rule, pointy_product, t) <= 1e-10
    assert residual_oracle(rule, pointy_product, (1, 1)) <= 1e-10
    assert cost(rule) == pytest.approx(8 * PI**2)


def test_l2_residual_counts_both_signs(xi1):
    t = DerivativeTarget.build(xi1, (1,))
    assert l2_residual(ShiftRule.empty(1), xi1, t) == pytest.approx(2 * PI * math.sqrt(2))


# --- apply ---

def test_apply_examples(classic_rule, xi1):
    f = _cos(xi1)
    assert apply(classic_rule, f, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert apply(classic_rule, f, 0.25) == pytest.approx(-2 * PI, abs=1e-12)
    assert apply(ShiftRule.empty(1), f, 0.3) == 0.0


def _cos(freqs):
    from shiftforge.trigpoly import TrigPoly
    return TrigPoly(freqs, 0.0, np.array([1.0]), np.array([0.0]))


@pytest.mark.parametrize("rule, alpha", [
    (ShiftRule.from_atoms({-0.25: PI, 0.25: -PI}), 1),
    (second_rule(), 2),
])
def test_convolution_identity(rule, alpha, xi1, rng):
    for k in range(50):
        f = random_in_space(xi1, int(rng.integers(1 << 30)))
        x = rng.uniform(-1, 1)
        exact = evaluate(derivative(f, (alpha,)), x)
        assert abs(apply(rule, f, x) - exact) <= 1e-6 * (1 + abs(exact))


def test_convolution_identity_2d(pointy_product, rng):
    res = solve_fixed_support(pointy_product, DerivativeTarget.build(pointy_product, (1, 1)),
                              [(s1 * 0.25, s2 * 0.125) for s1 in (-1, 1) for s2 in (-1, 1)])
    assert res.feasible
    for _ in range(50):
        f = random_in_space(pointy_product, int(rng.integers(1 << 30)))
        x = rng.uniform(-1, 1, 2)
        exact = evaluate(derivative(f, (1, 1)), x)
        assert abs(apply(res.rule, f, x) - exact) <= 1e-6 * (1 + abs(exact))


# --- rescale ---

def test_rescale_examples(classic_rule):
    xi2, smap = scale_to_integers(from_xi_plus(1, [2]))
    inverse = smap.inverse()   # maps {1} to {2}
    moved = rescale(classic_rule, inverse, (1,))
    np.testing.assert_allclose(sorted(moved.points[:, 0]), [-0.125, 0.125])
    assert cost(moved) == pytest.approx(4 * PI)
    freqs2 = from_xi_plus(1, [2])
    assert residual(moved, freqs2, DerivativeTarget.build(freqs2, (1,))) <= 1e-12


def test_rescale_identity(classic_rule):
    _, smap = scale_to_integers(from_xi_plus(1, [1]))
    assert rescale(classic_rule, smap, (1,)).atoms == classic_rule.atoms


def test_rescale_second_derivative():
    _, smap = scale_to_integers(from_xi_plus(1, [3]))   # s = 1/3, inverse maps {1} to {3}
    moved = rescale(second_rule(), smap.inverse(), (2,))
    assert cost(moved) == pytest.approx(36 * PI**2, rel=1e-12)
    freqs3 = from_xi_plus(1, [3])
    assert residual(moved, freqs3, DerivativeTarget.build(freqs3, (2,))) <= 1e-9


@settings(max_examples=25, deadline=None)
@given(nums=st.lists(st.integers(1, 9), min_size=1, max_size=3, unique=True),
       den=st.integers(1, 6), alpha=st.integers(1, 3))
def test_rescale_preserves_feasibility(nums, den, alpha):
    from fractions import Fraction
    freqs = from_xi_plus(1, [Fraction(n, den) for n in nums])
    ints, smap = scale_to_integers(freqs)
    m = int(max(abs(x[0]) for x in ints))
    grid = np.arange(-m, m + 1) / (2 * m + 1)
    t_int = DerivativeTarget.build(ints, (alpha,))
    res = solve_fixed_support(ints, t_int, grid)
    assert res.feasible and residual(res.rule, ints, t_int) <= 1e-9
    back = rescale(res.rule, smap.inverse(), (alpha,))
    assert residual(back, freqs, DerivativeTarget.build(freqs, (alpha,))) <= 1e-8
    factor = float(smap.inverse().derivative_factor((alpha,)))
    assert cost(back) == pytest.approx(cost(res.rule) * factor, rel=1e-10)


# --- fixed support ---

def test_fixed_support_classic(xi1):
    res = solve_fixed_support(xi1, DerivativeTarget.build(xi1, (1,)), [-0.25, 0.25])
    assert res.feasible and res.l2_gap == 0.0
    assert dict(res.rule.atoms)[(-0.25,)] == pytest.approx(PI, abs=1e-12)
    assert cost(res.rule) == pytest.approx(2 * PI)


def test_fixed_support_infeasible(xi1):
    res = solve_fixed_support(xi1, DerivativeTarget.build(xi1, (1,)), [0.0])
    assert not res.feasible
    assert res.l2_gap == pytest.approx(2 * PI * math.sqrt(2), rel=1e-12)


def test_fixed_support_second_derivative(xi1):
    res = solve_fixed_support(xi1, DerivativeTarget.build(xi1, (2,)), [0.0, 0.5])
    assert res.feasible
    np.testing.assert_allclose(res.rule.coeffs, [-2 * PI**2, 2 * PI**2], rtol=1e-12)


def test_fixed_support_empty_rejected(xi1):
    with pytest.raises(ValueError):
        solve_fixed_support(xi1, DerivativeTarget.build(xi1, (1,)), [])


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), m=st.integers(1, 4), alpha=st.integers(1, 3))
def test_superset_support_not_worse(seed, m, alpha):
    freqs = from_xi_plus(1, list(range(1, m + 1)))
    t = DerivativeTarget.build(freqs, (alpha,))
    base = solve_fixed_support(freqs, t, np.arange(-m, m + 1) / (2 * m + 1))
    assert base.feasible and is_feasible(base.rule, freqs, t)
    extra = np.random.default_rng(seed).uniform(-0.5, 0.5, 3)
    bigger = solve_fixed_support(freqs, t, np.concatenate([base.rule.points[:, 0], extra]))
    assert bigger.feasible
    assert cost(bigger.rule) <= cost(base.rule) + 1e-8
