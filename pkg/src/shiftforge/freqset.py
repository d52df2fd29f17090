"""Finite symmetric frequency sets with exact rational coordinates.

A frequency set always contains the origin and is closed under negation.
Its canonical positive half ``xi_plus`` holds, for every nonzero pair
``{xi, -xi}``, the member whose first nonzero coordinate is positive.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import AsymmetricInput, DimensionMismatch, ParseError

Point = tuple[Fraction, ...]


def to_rational(value) -> Fraction:
    """Convert ``value`` to an exact ``Fraction``.

    Strings of the form ``"p/q"`` and decimal strings are accepted, as are
    ints, Fractions and floats (floats go through their shortest decimal
    representation, so ``0.1`` becomes ``1/10``).
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (bool, np.bool_)):
        raise ParseError(f"not a number: {value!r}")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ParseError(f"non-finite frequency: {value!r}")
        return Fraction(repr(float(value)))
    if isinstance(value, str):
        text = value.strip()
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"malformed rational {value!r}") from exc
    raise ParseError(f"cannot interpret {value!r} as a rational number")


def format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _as_point(raw, dim: int) -> Point:
    if isinstance(raw, (str, int, float, Fraction, np.number)) and dim == 1:
        raw = (raw,)
    coords = tuple(to_rational(c) for c in raw)
    if len(coords) != dim:
        raise DimensionMismatch(f"point {raw!r} has {len(coords)} coordinates, expected {dim}")
    return coords


def _neg(p: Point) -> Point:
    return tuple(-c for c in p)


def _is_canonical_positive(p: Point) -> bool:
    for c in p:
        if c != 0:
            return c > 0
    return False


@dataclass(frozen=True)
class ScalingMap:
    """Per-coordinate positive scale factors ``s_j``."""

    factors: tuple[Fraction, ...]

    def __post_init__(self):
        if any(f <= 0 for f in self.factors):
            raise ValueError("scale factors must be positive")

    @property
    def dim(self) -> int:
        return len(self.factors)

    def inverse(self) -> "ScalingMap":
        return ScalingMap(tuple(1 / f for f in self.factors))

    def as_array(self) -> np.ndarray:
        return np.array([float(f) for f in self.factors])

    def derivative_factor(self, alpha: Sequence[int]) -> Fraction:
        """Return ``prod_j s_j ** alpha_j`` exactly."""
        return reduce(lambda acc, sa: acc * sa[0] ** sa[1], zip(self.factors, alpha), Fraction(1))

    def is_identity(self) -> bool:
        return all(f == 1 for f in self.factors)


@dataclass(frozen=True)
class FrequencySet:
    """A finite set of rational d-vectors, symmetric and containing 0."""

    dim: int
    points: frozenset
    xi_plus: tuple

    def __len__(self) -> int:
        return len(self.points)

    def __contains__(self, item) -> bool:
        try:
            return _as_point(item, self.dim) in self.points
        except (ParseError, DimensionMismatch):
            return False

    def __iter__(self):
        return iter(sorted(self.points))

    def xi_plus_array(self) -> np.ndarray:
        """Float array of shape ``(len(xi_plus), dim)``."""
        return np.array([[float(c) for c in p] for p in self.xi_plus], dtype=float).reshape(
            len(self.xi_plus), self.dim
        )

    def max_abs(self) -> tuple[Fraction, ...]:
        """Per-coordinate ``max |xi_j|`` (equal to ``max pr_j`` by symmetry)."""
        return tuple(max(abs(p[j]) for p in self.points) for j in range(self.dim))

    def is_integral(self) -> bool:
        return all(c.denominator == 1 for p in self.xi_plus for c in p)

    def scaled(self, smap: ScalingMap) -> "FrequencySet":
        """The coordinate-scaled set ``{(s_j xi_j)_j}``."""
        if smap.dim != self.dim:
            raise DimensionMismatch("scaling map dimension differs from frequency set")
        return from_points(
            self.dim,
            [tuple(f * c for f, c in zip(smap.factors, p)) for p in self.points],
            auto_symmetrize=False,
        )

    def index(self, xi) -> int:
        """Position of ``xi`` (or of ``-xi``) within ``xi_plus``."""
        p = _as_point(xi, self.dim)
        if not _is_canonical_positive(p):
            p = _neg(p)
        return self.xi_plus.index(p)

    def __repr__(self) -> str:
        body = "; ".join(",".join(format_rational(c) for c in p) for p in self.xi_plus)
        return f"FrequencySet(dim={self.dim}, xi_plus=[{body}])"


def from_points(dim: int, raw: Iterable, auto_symmetrize: bool = False) -> FrequencySet:
    """Build a frequency set from ``raw`` points.

    Zero is always added. Without ``auto_symmetrize``, a point whose negation
    is missing raises :class:`AsymmetricInput`.
    """
    if dim < 1:
        raise DimensionMismatch("dim must be >= 1")
    pts = {_as_point(r, dim) for r in raw}
    if not pts:
        raise ValueError("raw point list is empty")
    zero = tuple(Fraction(0) for _ in range(dim))
    if auto_symmetrize:
        pts |= {_neg(p) for p in pts}
    else:
        missing = [p for p in pts if _neg(p) not in pts]
        if missing:
            shown = ",".join(format_rational(c) for c in missing[0])
            raise AsymmetricInput(f"-({shown}) is missing from the point set")
    pts.add(zero)
    xi_plus = tuple(sorted(p for p in pts if _is_canonical_positive(p)))
    return FrequencySet(dim=dim, points=frozenset(pts), xi_plus=xi_plus)


def from_xi_plus(dim: int, xi_plus: Iterable) -> FrequencySet:
    """Convenience constructor: symmetrize a list of (positive) frequencies.

    An empty list gives the degenerate set ``{0}``.
    """
    raw = list(xi_plus) or [tuple([0] * dim)]
    return from_points(dim, raw, auto_symmetrize=True)


def scale_to_integers(xi: FrequencySet) -> tuple[FrequencySet, ScalingMap]:
    """Rescale each coordinate so the set becomes integral with gcd 1.

    ``s_j = lcm(denominators) / gcd(numerators)`` over the nonzero entries
    of coordinate ``j``; coordinates that are identically zero get ``s_j = 1``.
    """
    factors = []
    for j in range(xi.dim):
        column = [p[j] for p in xi.points if p[j] != 0]
        if not column:
            factors.append(Fraction(1))
            continue
        den = reduce(math.lcm, (c.denominator for c in column))
        num = reduce(math.gcd, (abs(c.numerator) for c in column))
        factors.append(Fraction(den, num))
    smap = ScalingMap(tuple(factors))
    return xi.scaled(smap), smap


def diff_spectrum(eigenvalues: Sequence) -> FrequencySet:
    """The difference set ``{l' - l}`` of a list of eigenvalues (d = 1)."""
    lam = [to_rational(v) for v in eigenvalues]
    if not lam:
        raise ValueError("eigenvalue list is empty")
    return from_points(1, [(b - a,) for a in lam for b in lam], auto_symmetrize=False)


def product(factors: Sequence[FrequencySet]) -> FrequencySet:
    """Cartesian product of one-dimensional frequency sets."""
    if not factors:
        raise ValueError("need at least one factor")
    for f in factors:
        if f.dim != 1:
            raise DimensionMismatch("product factors must be one-dimensional")
    axes = [sorted(p[0] for p in f.points) for f in factors]
    return from_points(len(factors), list(itertools.product(*axes)), auto_symmetrize=False)


def linear_image(xi: FrequencySet, matrix) -> FrequencySet:
    """Spectrum of ``u -> f(M u)``: the set ``{M^T xi}``.

    ``matrix`` has ``xi.dim`` rows and ``e`` columns (entries rational).
    """
    rows = [[to_rational(c) for c in row] for row in matrix]
    if len(rows) != xi.dim:
        raise DimensionMismatch(f"matrix has {len(rows)} rows, frequency set has dim {xi.dim}")
    e = len(rows[0]) if rows else 0
    if e < 1 or any(len(r) != e for r in rows):
        raise DimensionMismatch("matrix rows must share a positive length")
    image = [
        tuple(sum((rows[i][k] * p[i] for i in range(xi.dim)), Fraction(0)) for k in range(e))
        for p in xi.points
    ]
    return from_points(e, image, auto_symmetrize=False)


def is_pointy(xi: FrequencySet) -> tuple[int, ...] | None:
    """Return a sign vector ``eps`` with ``(eps_j max pr_j)_j`` in ``xi``, else None.

    Sign patterns are tried in lexicographic order with +1 before -1.
    """
    top = xi.max_abs()
    for eps in itertools.product((1, -1), repeat=xi.dim):
        if tuple(e * m for e, m in zip(eps, top)) in xi.points:
            return eps
    return None


def pointy_vertex(xi: FrequencySet) -> Point | None:
    eps = is_pointy(xi)
    if eps is None:
        return None
    return tuple(e * m for e, m in zip(eps, xi.max_abs()))
