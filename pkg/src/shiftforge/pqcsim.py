"""Dense-matrix expectation values of small parameterized circuits.

Layer ``j`` maps a state ``rho`` to ``exp(-2 pi i x_j H_j) rho exp(2 pi i x_j H_j)``,
optionally followed by a fixed unitary; the final state is measured
against ``mu``. The expectation value is a trigonometric polynomial whose
frequencies are eigenvalue differences of the ``H_j``, and
:func:`expectation_trigpoly` extracts it exactly through spectral
decompositions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DimensionMismatch, DimTooLarge, IrrationalSpectrum, NormExceeded
from .freqset import FrequencySet, diff_spectrum, from_points, product
from .shiftrule import ShiftRule
from .trigpoly import TrigPoly

MAX_DIM = 16
HERMITIAN_TOL = 1e-12
SNAP_TOL = 1e-9
SNAP_DENOMINATOR = 64
NORM_TOL = 1e-6
DEFAULT_REPETITIONS = 200


@dataclass(frozen=True)
class HermitianOp:
    """A Hermitian matrix of size at most 16."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"operator must be square, got shape {m.shape}")
        if m.shape[0] > MAX_DIM:
            raise DimTooLarge(f"matrix dimension {m.shape[0]} exceeds {MAX_DIM}")
        if not np.all(np.isfinite(m)):
            raise ValueError("operator has non-finite entries")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise ValueError("operator is not Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def spectral(self):
        """Rational eigenvalues (snapped) and the matching spectral projectors.

        Raises:
            IrrationalSpectrum: an eigenvalue difference is not within 1e-9
                of a rational with denominator at most 64.
        """
        vals, vecs = np.linalg.eigh(self.entries)
        # snap relative to the smallest eigenvalue so that only differences matter
        base = vals[0]
        snapped = []
        for v in vals:
            q = Fraction(float(v - base)).limit_denominator(SNAP_DENOMINATOR)
            if abs(float(q) - (v - base)) > SNAP_TOL:
                raise IrrationalSpectrum(f"eigenvalue difference {v - base!r} is not near-rational")
            snapped.append(q)
        projectors = {}
        for q, vec in zip(snapped, vecs.T):
            projectors[q] = projectors.get(q, 0) + np.outer(vec, vec.conj())
        return list(projectors), projectors


@dataclass(frozen=True)
class CircuitSpec:
    """Layers ``(H_j, V_j or None)``, an initial state and an observable."""

    layers: tuple
    rho0: np.ndarray
    observable: HermitianOp

    def __post_init__(self):
        layers = tuple((h, None if v is None else np.asarray(v, dtype=complex)) for h, v in self.layers)
        rho = np.asarray(self.rho0, dtype=complex)
        n = self.observable.dim
        if not layers:
            raise ValueError("a circuit needs at least one layer")
        if rho.shape != (n, n) or any(h.dim != n for h, _ in layers):
            raise DimensionMismatch("all matrices must have the same dimension")
        for _, v in layers:
            if v is not None:
                if v.shape != (n, n):
                    raise DimensionMismatch("layer unitary has the wrong shape")
                if np.max(np.abs(v @ v.conj().T - np.eye(n))) > 1e-10:
                    raise ValueError("layer channel is not unitary")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
            raise ValueError("rho0 is not Hermitian")
        if abs(np.trace(rho) - 1.0) > 1e-10:
            raise ValueError("rho0 must have trace 1")
        if np.linalg.eigvalsh(rho)[0] < -1e-10:
            raise ValueError("rho0 must be positive semidefinite")
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "rho0", rho)

    @property
    def dim(self) -> int:
        """Number of circuit parameters."""
        return len(self.layers)

    def frequency_bound(self) -> FrequencySet:
        """Product of the eigenvalue-difference sets of the layer Hamiltonians."""
        return product([diff_spectrum(h.spectral()[0]) for h, _ in self.layers])

    def state(self, x) -> np.ndarray:
        """Density matrix after all layers at parameter ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.size != self.dim:
            raise DimensionMismatch(f"expected {self.dim} parameters, got {x.size}")
        rho = self.rho0
        for xj, (h, v) in zip(x, self.layers):
            vals, vecs = np.linalg.eigh(h.entries)
            u = (vecs * np.exp(-2j * np.pi * xj * vals)) @ vecs.conj().T
            rho = u @ rho @ u.conj().T
            if v is not None:
                rho = v @ rho @ v.conj().T
        return rho

    def expectation(self, x) -> float:
        """Direct simulation ``tr(mu rho(x))``."""
        return float(np.real(np.trace(self.observable.entries @ self.state(x))))


def expectation_trigpoly(spec: CircuitSpec) -> TrigPoly:
    """Exact trigonometric expansion of ``x -> tr(mu rho(x))``.

    Each layer contributes ``P_l M P_l'`` with frequency ``l' - l`` on its
    axis, so every coefficient is a trace against a chain of projectors.
    """
    d = spec.dim
    terms = {tuple([Fraction(0)] * d): spec.rho0}
    for j, (h, v) in enumerate(spec.layers):
        eigs, proj = h.spectral()
        nxt = {}
        for xi, m in terms.items():
            for lam in eigs:
                left = proj[lam] @ m
                for lam2 in eigs:
                    block = left @ proj[lam2]
                    if not np.any(np.abs(block) > 1e-15):
                        continue
                    if v is not None:
                        block = v @ block @ v.conj().T
                    key = xi[:j] + (xi[j] + lam2 - lam,) + xi[j + 1:]
                    nxt[key] = nxt[key] + block if key in nxt else block
        terms = nxt

    coeffs = {xi: complex(np.trace(spec.observable.entries @ m)) for xi, m in terms.items()}
    support = set(coeffs) | {tuple(-c for c in xi) for xi in coeffs} | {tuple([Fraction(0)] * d)}
    freqs = from_points(d, support)
    k = len(freqs.xi_plus)
    x, y = np.zeros(k), np.zeros(k)
    for i, xi in enumerate(freqs.xi_plus):
        # the term at -xi is the conjugate, so b e^{2 pi i xi.a} + conj = 2 Re(...)
        b = coeffs.get(xi, 0.0)
        x[i], y[i] = 2.0 * b.real, 2.0 * b.imag
    c0 = coeffs.get(tuple([Fraction(0)] * d), 0.0).real
    return TrigPoly(freqs, c0, x, y)


class ShotNoiseResult(NamedTuple):
    estimate: float
    empirical_std: float
    estimates: np.ndarray
    shots: np.ndarray


def allocate_shots(f: TrigPoly, rule: ShiftRule, x, total_shots: int) -> np.ndarray:
    """``N_a`` proportional to ``|u_a| sqrt(1 - f(x - a)^2)``, rounded, at least 1."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    means = f.values(x[None, :] - rule.points)
    weights = np.abs(rule.coeffs) * np.sqrt(np.clip(1.0 - means**2, 0.0, None))
    if weights.sum() == 0.0:
        weights = np.abs(rule.coeffs)
    return np.maximum(1, np.round(total_shots * weights / weights.sum())).astype(np.int64)


def shot_noise_estimate(f: TrigPoly, rule: ShiftRule, x, total_shots: int, seed: int = 42,
                        repetitions: int = DEFAULT_REPETITIONS) -> ShotNoiseResult:
    """Monte-Carlo estimate of ``sum_a u_a f(x - a)`` from +-1 measurement outcomes.

    Each query at ``y`` returns +1 with probability ``(1 + f(y)) / 2``. Every
    repetition draws from its own child stream of ``SeedSequence(seed)``.

    Returns:
        the mean estimate over repetitions, its empirical standard deviation,
        the per-repetition estimates and the shot allocation.

    Raises:
        NormExceeded: ``f`` leaves [-1, 1] at a queried point (not a valid
            Bernoulli mean).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if len(rule) == 0:
        raise ValueError("rule has no atoms")
    if total_shots < 10 * len(rule):
        raise ValueError("need at least 10 shots per support point")
    means = f.values(x[None, :] - rule.points)
    if np.max(np.abs(means)) > 1.0 + NORM_TOL:
        raise NormExceeded("function values outside [-1, 1] cannot be +-1 expectation values")
    p = np.clip((1.0 + means) / 2.0, 0.0, 1.0)
    shots = allocate_shots(f, rule, x, total_shots)
    children = np.random.SeedSequence(seed).spawn(repetitions)
    estimates = np.empty(repetitions)
    for r, child in enumerate(children):
        rng = np.random.default_rng(child)
        plus = rng.binomial(shots, p)
        sample_means = (2.0 * plus - shots) / shots
        estimates[r] = float(rule.coeffs @ sample_means)
    return ShotNoiseResult(float(estimates.mean()), float(estimates.std(ddof=1)), estimates, shots)


def random_circuit(dim: int, n_params: int, spectrum: Sequence, seed: int) -> CircuitSpec:
    """Random circuit whose layer Hamiltonians all have eigenvalues from ``spectrum``.

    Used to generate test instances: random eigenbases, a random pure start
    state, a random Hermitian observable with spectral norm 1, and a random
    unitary between layers.
    """
    rng = np.random.default_rng(seed)
    spectrum = [float(Fraction(s)) for s in spectrum]

    def haar(n):
        z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
        q, r = np.linalg.qr(z)
        return q * (np.diag(r) / np.abs(np.diag(r)))

    layers = []
    for _ in range(n_params):
        vals = np.array([spectrum[i % len(spectrum)] for i in range(dim)])
        q = haar(dim)
        h = (q * vals) @ q.conj().T
        layers.append((HermitianOp((h + h.conj().T) / 2), haar(dim)))
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    psi /= np.linalg.norm(psi)
    obs = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    obs = (obs + obs.conj().T) / 2
    obs /= np.max(np.abs(np.linalg.eigvalsh(obs)))
    return CircuitSpec(tuple(layers), np.outer(psi, psi.conj()), HermitianOp(obs))
