"""Exact n-step transition probabilities on free groups.

Everything here reduces to the radial length process: under the uniform
generator step on F_m, the word length performs a biased walk on the
nonnegative integers, reflected at zero.  Conditioned on its length the
walk is uniform on the sphere, which converts length tables into point
probabilities, cancellation laws against a fixed word, and the limit
law of probability ratios under right translation.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DomainError
from .groups import Free, validate
from .linedp import reflected_radial_table


# ---------------------------------------------------------------------------
# sphere sizes and the cancellation law


@dataclass(frozen=True)
class SphereSizes:
    """Sphere cardinalities of F_m in the standard basis."""

    m: int

    def __post_init__(self):
        if self.m < 1:
            raise DomainError("free rank must be >= 1")

    def v(self, l: int) -> int:
        if l < 0:
            raise DomainError("length must be >= 0")
        if l == 0:
            return 1
        return 2 * self.m * (2 * self.m - 1) ** (l - 1)

    def ball(self, r: int) -> int:
        return sum(self.v(l) for l in range(r + 1))

    def log_v(self, l: int) -> float:
        if l == 0:
            return 0.0
        return math.log(2 * self.m) + (l - 1) * math.log(2 * self.m - 1)


@dataclass(frozen=True)
class CancellationLaw:
    """Law of the cancellation depth K against a long random word.

    The terminal suffix of a long uniform-sphere word is uniform over
    admissible reduced suffixes, so the chance that at least k letters
    cancel is one over the sphere size: P[K >= k] = 1/v(k).
    """

    m: int

    def __post_init__(self):
        if self.m < 1:
            raise DomainError("free rank must be >= 1")

    def tail(self, k: int) -> Fraction:
        return Fraction(1, SphereSizes(self.m).v(k))

    def atom(self, k: int) -> Fraction:
        return self.tail(k) - self.tail(k + 1)

    def atoms(self, k_max: int) -> dict:
        """{k: P[K = k]} for k = 0..k_max; missing tail mass is tail(k_max+1)."""
        return {k: self.atom(k) for k in range(k_max + 1)}


# ---------------------------------------------------------------------------
# length tables


@lru_cache(maxsize=32)
def _length_table(m: int, n: int, mode: str):
    """Law of l(X_n): rational -> {l: Fraction}, float -> probs[l]."""
    return reflected_radial_table(m, n, mode)


def free_point_probability(m: int, n: int, l: int, mode: str = "float"):
    """mu^{*n}(g) for any fixed g in F_m with l(g) = l.

    All elements of a sphere carry equal mass, so this is the radial
    atom split evenly: p_n(l) / v(l).
    """
    if l < 0:
        raise DomainError("length must be >= 0")
    spheres = SphereSizes(m)
    table = _length_table(m, n, mode)
    if mode == "rational":
        return table.get(l, Fraction(0)) / spheres.v(l)
    p = float(table[l]) if l <= n else 0.0
    if p == 0.0:
        return 0.0
    log_v = spheres.log_v(l)
    if log_v > 600.0:
        # sphere size overflows a float; divide in log space
        return math.exp(math.log(p) - log_v)
    return p / spheres.v(l)


def cancellation_tail(m: int, n: int, h: tuple, k: int, mode: str = "float"):
    """P[at least k letters cancel in g*h] for g ~ mu^{*n}, h fixed.

    The event is l(g h) <= l(g) + l(h) - 2k.  Conditioned on l(g) = L
    the word is uniform on its sphere, and exactly 1/v(k) of the sphere
    ends in the one suffix that cancels k letters of h (first letter
    matches with probability 1/(2m), each further one with 1/(2m-1)),
    independently of L >= k.  Lengths L < k cannot reach depth k, so
    the exact value is P[l(g) >= k] / v(k).
    """
    validate(Free(m), h)
    if not isinstance(k, int) or k < 0:
        raise DomainError("cancellation depth must be a nonnegative integer")
    if k > len(h):
        raise DomainError(f"cancellation depth {k} exceeds l(h) = {len(h)}")
    spheres = SphereSizes(m)
    table = _length_table(m, n, mode)
    if mode == "rational":
        tail = sum((w for l, w in table.items() if l >= k), Fraction(0))
        return tail / spheres.v(k)
    tail = float(table[k:].sum()) if k <= n else 0.0
    if tail == 0.0:
        return 0.0
    log_v = spheres.log_v(k)
    if log_v > 600.0:
        return math.exp(math.log(tail) - log_v)
    return tail / spheres.v(k)


def cancellation_probability(m: int, n: int, h: tuple, k: int,
                             mode: str = "float"):
    """P[l(g h) < l(g) + l(h) - 2k] for g ~ mu^{*n}, h fixed.

    Strict inequality: the cancellation depth exceeds k, which by the
    period-2 parity of lengths is the depth-(k+1) tail.  Depth is
    capped by l(h), so at k = l(h) the probability is zero.
    """
    validate(Free(m), h)
    if not isinstance(k, int) or k < 0:
        raise DomainError("cancellation depth must be a nonnegative integer")
    if k > len(h):
        raise DomainError(f"cancellation depth {k} exceeds l(h) = {len(h)}")
    if k == len(h):
        return Fraction(0) if mode == "rational" else 0.0
    return cancellation_tail(m, n, h, k + 1, mode)


# ---------------------------------------------------------------------------
# ratio law under right translation


@dataclass(frozen=True)
class RatioLaw:
    """Law of mu^{*n}(g) / mu(g w) under g ~ mu^{*n}, with its limit.

    The walk has period 2, so the denominator is evaluated at n steps
    when l(w) is even and at n+1 steps when it is odd (the parity class
    where g w has positive probability).  Atoms whose denominator still
    vanishes (lengths beyond the denominator's horizon) are dropped and
    the law renormalized; their original mass is recorded.
    """

    m: int
    n: int
    word_length: int
    denominator_steps: int
    atoms: dict
    limit_atoms: dict
    dropped_mass: object
    mode: str


def ratio_distribution(m: int, n: int, w: tuple, mode: str = "float") -> RatioLaw:
    """Exact law of mu^{*n}(g)/mu(g w), g ~ mu^{*n}, plus its limit.

    The ratio depends on g only through (l(g), cancellation depth d
    against w): with L2 = l(g) + l(w) - 2d it equals
    [p_n(L)/v(L)] / [p_den(L2)/v(L2)].  The limit comparator is the
    pushforward of the cancellation law, (2m-1)^(l(w) - 2K).
    """
    validate(Free(m), w)
    t = len(w)
    if t < 1:
        raise DomainError("translating word must have length >= 1")
    if n < 0:
        raise DomainError("n must be >= 0")
    spheres = SphereSizes(m)
    law = CancellationLaw(m)
    den_steps = n if t % 2 == 0 else n + 1
    num = _length_table(m, n, mode)
    den = _length_table(m, den_steps, mode)

    if mode == "rational":
        num_items = sorted(num.items())
        den_get = lambda l: den.get(l, Fraction(0))
        zero = Fraction(0)
    elif mode == "float":
        num_items = [(l, float(p)) for l, p in enumerate(num) if p > 0.0]
        den_get = lambda l: float(den[l]) if l <= den_steps else 0.0
        zero = 0.0
    else:
        raise DomainError(f"unknown mode {mode!r}")

    atoms: dict = {}
    dropped = zero
    for L, p in num_items:
        d_max = min(L, t)
        for d in range(d_max + 1):
            cond = law.tail(d) if d == d_max else law.atom(d)
            mass = p * (cond if mode == "rational" else float(cond))
            L2 = L + t - 2 * d
            q = den_get(L2)
            if q == 0:
                dropped += mass
                continue
            if mode == "rational":
                value = Fraction(p, q) * Fraction(spheres.v(L2), spheres.v(L))
            elif min(L, L2) >= 1:
                value = (p / q) * float(2 * m - 1) ** (t - 2 * d)
            else:
                value = (p / q) * spheres.v(L2) / spheres.v(L)
            atoms[value] = atoms.get(value, zero) + mass
    total = sum(atoms.values(), zero)
    if dropped and total:
        atoms = {val: mass / total for val, mass in atoms.items()}

    limit = _limit_ratio_atoms(m, t, mode)
    return RatioLaw(m=m, n=n, word_length=t, denominator_steps=den_steps,
                    atoms=atoms, limit_atoms=limit, dropped_mass=dropped,
                    mode=mode)


def _limit_ratio_atoms(m: int, t: int, mode: str) -> dict:
    """Pushforward of the cancellation law under x -> (2m-1)^(t-2x).

    Truncated far into the geometric tail, with the residual lumped on
    the last atom so the law still sums to one.
    """
    law = CancellationLaw(m)
    k_cut = t + 40
    out = {}
    for k in range(k_cut + 1):
        mass = law.atom(k) if k < k_cut else law.tail(k_cut)
        value = Fraction(2 * m - 1) ** (t - 2 * k)
        if mode == "float":
            out[float(value)] = float(mass)
        else:
            out[value] = mass
    return out


# ---------------------------------------------------------------------------
# Levy distance between discrete laws


def _staircase(atoms: dict):
    """Sorted finite support with cumulative masses; +inf mass excluded."""
    pairs = sorted((float(v), float(w)) for v, w in atoms.items()
                   if math.isfinite(float(v)))
    values = [v for v, _ in pairs]
    cum = []
    run = 0.0
    for _, w in pairs:
        run += w
        cum.append(run)
    return values, cum


def _cdf(values, cum, x: float) -> float:
    i = bisect_right(values, x)
    return cum[i - 1] if i else 0.0


def levy_distance(a: dict, b: dict) -> float:
    """Levy metric between two laws given as value -> mass maps.

    Works on the right-continuous staircases; mass at +inf never enters
    any finite CDF value, which is exactly its effect on the metric.
    Checking the defining sandwich at the jump points of either law is
    sufficient because both sides are monotone between jumps.
    """
    av, ac = _staircase(a)
    bv, bc = _staircase(b)
    if not av and not bv:
        return 0.0

    def feasible(eps: float) -> bool:
        slack = eps + 1e-12
        for v in bv:
            if _cdf(bv, bc, v) > _cdf(av, ac, v + eps) + slack:
                return False
        for u in av:
            if _cdf(av, ac, u) > _cdf(bv, bc, u + eps) + slack:
                return False
        return True

    lo, hi = 0.0, 1.0
    if feasible(lo):
        return 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# diagnostics


def ball_mass(m: int, n: int, radius: int, mode: str = "float"):
    """mu^{*n}(B(e, radius)): transience sends this to zero for fixed radius."""
    spheres = SphereSizes(m)
    table = _length_table(m, n, mode)
    if mode == "rational":
        return sum((w for l, w in table.items() if l <= radius), Fraction(0))
    return float(table[:min(radius, n) + 1].sum())
