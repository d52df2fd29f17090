"""Solver configuration shared by the extrema search and the optimizers."""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and limits.

    Attributes:
        delta: separation tolerance; a cut is added when ``|f(a)| > 1 + delta``.
        epsilon: objective precision target of the dual solve.
        extrema_tol: gradient-norm tolerance of the Newton refinement.
        lp_tol: pivot / feasibility tolerance handed to the simplex.
        max_iterations: cutting-plane iteration cap.
        initial_grid: cap on the total number of points in the initial cut set.
        seed: seed for any randomized step (random test functions, shot noise).
        feas_tol: residual threshold for declaring a rule feasible.
        cert_tol_rel: duality-gap tolerance, relative to ``1 + |value|``.
        slack_tol: complementary-slackness tolerance on ``|f(a)| = 1``.
        grid_oversample, grid_offset: separation grid uses
            ``grid_oversample * M_j + grid_offset`` points on axis ``j``.
        newton_steps: refinement iteration cap per candidate.
        refine_candidates: number of grid minima (and maxima) refined.
        pivot_rule: ``"bland"`` or ``"dantzig"``.
    """

    delta: float = 1e-7
    epsilon: float = 1e-6
    extrema_tol: float = 1e-12
    lp_tol: float = 1e-9
    max_iterations: int = 200
    initial_grid: int = 128
    seed: int = 42
    feas_tol: float = 1e-7
    cert_tol_rel: float = 1e-5
    slack_tol: float = 1e-6
    grid_oversample: int = 32
    grid_offset: int = 17
    newton_steps: int = 50
    refine_candidates: int = 5
    pivot_rule: str = "bland"

    def __post_init__(self):
        for name in ("delta", "epsilon", "extrema_tol", "lp_tol", "feas_tol", "cert_tol_rel", "slack_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.pivot_rule not in ("bland", "dantzig"):
            raise ValueError(f"unknown pivot rule {self.pivot_rule!r}")

    def cert_tol(self, value: float) -> float:
        return self.cert_tol_rel * (1.0 + abs(value))

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


DEFAULT_CONFIG = SolverConfig()
