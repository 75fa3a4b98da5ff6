"""Exact dynamic programs for nearest-neighbor walks on the integer line.

Three kernels power everything downstream:

* the joint law q_n(min, max, position) of an n-step walk together with
  its running minimum and maximum (RangeTableExact with arbitrary
  precision rationals, RangeTableFloat as a windowed dense array),
* the plain endpoint law, used for maxima via the reflection identity,
* the reflected radial walk on the nonnegative integers that drives the
  free-group formulas.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import Caps, DEFAULT_CAPS, DomainError


# ---------------------------------------------------------------------------
# step laws


@dataclass(frozen=True)
class StepLawZ:
    """One-step law on {-1, 0, +1}, stored as exact rationals."""

    p_minus: Fraction
    p_zero: Fraction
    p_plus: Fraction

    def __post_init__(self):
        for name in ("p_minus", "p_zero", "p_plus"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if min(self.p_minus, self.p_zero, self.p_plus) < 0:
            raise DomainError("step probabilities must be nonnegative")
        if self.p_minus + self.p_zero + self.p_plus != 1:
            raise DomainError("step probabilities must sum to 1")
        if self.p_minus == 0 and self.p_plus == 0:
            raise DomainError("step law must move")

    @property
    def is_symmetric(self) -> bool:
        return self.p_minus == self.p_plus

    @property
    def is_lazy(self) -> bool:
        return self.p_zero > 0

    @property
    def variance(self) -> Fraction:
        # second moment; the step laws used here are centered when symmetric
        return self.p_minus + self.p_plus

    def integer_weights(self):
        """(w_minus, w_zero, w_plus, d) with probabilities w/d."""
        d = math.lcm(self.p_minus.denominator, self.p_zero.denominator,
                     self.p_plus.denominator)
        return (int(self.p_minus * d), int(self.p_zero * d),
                int(self.p_plus * d), d)

    @staticmethod
    def lazy_simple(p=Fraction(1, 4)) -> "StepLawZ":
        """Symmetric lazy walk: +-1 with probability p each, hold
        otherwise. p must lie in (0, 1/2)."""
        p = Fraction(p)
        if not 0 < p < Fraction(1, 2):
            raise DomainError("p must be in (0, 1/2)")
        return StepLawZ(p, 1 - 2 * p, p)


def default_step() -> StepLawZ:
    return StepLawZ.lazy_simple()


# ---------------------------------------------------------------------------
# endpoint laws (1-D convolution; no range bookkeeping)


def endpoint_law_exact(step: StepLawZ, n: int) -> dict:
    """Law of the walk position after n steps, {pos: Fraction}."""
    if n < 0:
        raise DomainError("n must be >= 0")
    wm, wz, wp, d = step.integer_weights()
    cur = {0: 1}
    for _ in range(n):
        nxt = {}
        for pos, w in cur.items():
            if wz:
                nxt[pos] = nxt.get(pos, 0) + w * wz
            if wp:
                nxt[pos + 1] = nxt.get(pos + 1, 0) + w * wp
            if wm:
                nxt[pos - 1] = nxt.get(pos - 1, 0) + w * wm
        cur = nxt
    denom = d ** n
    return {pos: Fraction(w, denom) for pos, w in cur.items() if w}


def endpoint_law_float(step: StepLawZ, n: int) -> tuple:
    """(offset, probs) with probs[i] = P[position = offset + i]."""
    if n < 0:
        raise DomainError("n must be >= 0")
    pm, pz, pp = (float(step.p_minus), float(step.p_zero),
                  float(step.p_plus))
    probs = np.zeros(2 * n + 1)
    probs[n] = 1.0
    for _ in range(n):
        nxt = pz * probs
        nxt[1:] += pp * probs[:-1]
        nxt[:-1] += pm * probs[1:]
        probs = nxt
    return -n, probs


# ---------------------------------------------------------------------------
# range tables


class RangeTableExact:
    """Joint law of (Min_n, Max_n, position) for a nearest-neighbor walk,
    in exact arithmetic.

    Entries are integer numerators over denominator d**n where d is the
    common denominator of the step law. Nearest-neighbor steps are what
    make the visited set an interval, so (Min, Max) determines it.
    """

    def __init__(self, step: StepLawZ, n: int,
                 caps: Caps = DEFAULT_CAPS) -> None:
        if n < 0:
            raise DomainError("n must be >= 0")
        caps.check("rational_steps", n)
        self.step = step
        self.n = n
        wm, wz, wp, d = step.integer_weights()
        self.denominator = d ** n
        cur = {(0, 0, 0): 1}
        for _ in range(n):
            nxt = {}
            for (lo, hi, pos), w in cur.items():
                if wz:
                    key = (lo, hi, pos)
                    nxt[key] = nxt.get(key, 0) + w * wz
                if wp:
                    key = (lo, max(hi, pos + 1), pos + 1)
                    nxt[key] = nxt.get(key, 0) + w * wp
                if wm:
                    key = (min(lo, pos - 1), hi, pos - 1)
                    nxt[key] = nxt.get(key, 0) + w * wm
            cur = nxt
        self.numerators = cur

    def prob(self, lo: int, hi: int, pos: int) -> Fraction:
        return Fraction(self.numerators.get((lo, hi, pos), 0),
                        self.denominator)

    def items(self):
        for key, num in self.numerators.items():
            yield key, Fraction(num, self.denominator)

    def total_mass(self) -> Fraction:
        return Fraction(sum(self.numerators.values()), self.denominator)

    def endpoint_marginal(self) -> dict:
        out = {}
        for (_, _, pos), num in self.numerators.items():
            out[pos] = out.get(pos, 0) + num
        return {p: Fraction(w, self.denominator) for p, w in out.items()}

    def range_marginal(self) -> dict:
        """Law of the visited interval, {(lo, hi): Fraction}."""
        out = {}
        for (lo, hi, _), num in self.numerators.items():
            out[(lo, hi)] = out.get((lo, hi), 0) + num
        return {k: Fraction(w, self.denominator) for k, w in out.items()}

    def max_marginal(self) -> dict:
        out = {}
        for (_, hi, _), num in self.numerators.items():
            out[hi] = out.get(hi, 0) + num
        return {m: Fraction(w, self.denominator) for m, w in out.items()}


def default_window(step: StepLawZ, n: int) -> int:
    sigma = math.sqrt(float(step.variance))
    return min(n, math.ceil(8.0 * sigma * math.sqrt(n)) + 4)


def float_range_steps(step: StepLawZ, n_max: int, caps: Caps = DEFAULT_CAPS,
                      window: int | None = None):
    """Yields (k, q, lost_mass) for k = 0..n_max where q[l, h, j] is the
    k-step law of (Min = -l, Max = h, position = j - W).

    The same array object is yielded each time; callers that keep a state
    must copy it.
    """
    if n_max < 0:
        raise DomainError("n must be >= 0")
    caps.check("float_steps", n_max)
    if window is None:
        window = default_window(step, n_max)
    W = max(1, window)
    pm, pz, pp = (float(step.p_minus), float(step.p_zero),
                  float(step.p_plus))
    q = np.zeros((W + 1, W + 1, 2 * W + 1))
    q[0, 0, W] = 1.0
    lost = 0.0
    idx = np.arange(W + 1)
    up_l, up_h = idx[:-1], idx[:-1]
    yield 0, q, lost
    for k in range(1, n_max + 1):
        nxt = pz * q
        nxt[:, :, 1:] += pp * q[:, :, :-1]
        nxt[:, :, :-1] += pm * q[:, :, 1:]
        if pp:
            # mass that stepped right off its own maximum
            diag = q[:, idx, idx + W]
            nxt[:, up_h, up_h + W + 1] -= pp * diag[:, :-1]
            nxt[:, up_h + 1, up_h + W + 1] += pp * diag[:, :-1]
            lost += pp * diag[:, W].sum()
        if pm:
            diag = q[idx, :, W - idx]
            nxt[up_l, :, W - up_l - 1] -= pm * diag[:-1, :]
            nxt[up_l + 1, :, W - up_l - 1] += pm * diag[:-1, :]
            lost += pm * diag[W, :].sum()
        q = nxt
        yield k, q, lost


class RangeTableFloat:
    """Windowed dense float version of the (Min, Max, position) law.

    The state array is q[l, h, j] = P[Min = -l, Max = h, position = j - W]
    for a window W chosen so the discarded tail is negligible; any mass
    that would leave the window is accumulated in lost_mass rather than
    silently dropped.
    """

    def __init__(self, step: StepLawZ, n: int, caps: Caps = DEFAULT_CAPS,
                 window: int | None = None) -> None:
        if n < 0:
            raise DomainError("n must be >= 0")
        self.step = step
        self.n = n
        for k, q, lost in float_range_steps(step, n, caps, window):
            pass
        self.window = (q.shape[0] - 1)
        self.q = q
        self.lost_mass = lost

    def prob(self, lo: int, hi: int, pos: int) -> float:
        W = self.window
        if not (-W <= lo <= 0 <= hi <= W and -W <= pos <= W):
            return 0.0
        return float(self.q[-lo, hi, pos + W])

    def total_mass(self) -> float:
        return float(self.q.sum())

    def endpoint_marginal(self) -> np.ndarray:
        """probs[j] = P[position = j - window]."""
        return self.q.sum(axis=(0, 1))

    def max_marginal(self) -> np.ndarray:
        """probs[h] = P[Max = h], h = 0..window."""
        return self.q.sum(axis=(0, 2))


def range_table(step: StepLawZ, n: int, mode: str = "rational",
                caps: Caps = DEFAULT_CAPS, window: int | None = None):
    if mode == "rational":
        return RangeTableExact(step, n, caps)
    if mode == "float":
        return RangeTableFloat(step, n, caps, window)
    raise DomainError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# maxima


def max_law(step: StepLawZ, n: int, mode: str = "rational",
            method: str = "auto", caps: Caps = DEFAULT_CAPS):
    """Law of Max_n = max(0, S_1, ..., S_n).

    Rational mode returns {m: Fraction}; float mode returns probs with
    probs[m] = P[Max = m]. The reflection route turns the endpoint law
    into the maximum law, P[Max >= m] = P[S = m] + 2 P[S > m] for m >= 1,
    exact for symmetric nearest-neighbor steps (no overshoot; flipping
    the path after the first visit to m preserves the measure). The
    range route marginalizes the full range table.
    """
    if method == "auto":
        method = "reflection" if step.is_symmetric else "range"
    if method == "reflection":
        if not step.is_symmetric:
            raise DomainError("reflection identity needs a symmetric step")
        if mode == "rational":
            law = endpoint_law_exact(step, n)
            ge = {n + 1: Fraction(0)}  # ge[m] = P[Max >= m]
            upper = Fraction(0)  # running P[S > m]
            for m in range(n, 0, -1):
                upper += law.get(m + 1, Fraction(0))
                ge[m] = law.get(m, Fraction(0)) + 2 * upper
            ge[0] = Fraction(1)
            out = {}
            for m in range(0, n + 1):
                w = ge[m] - ge[m + 1]
                if w:
                    out[m] = w
            return out
        offset, probs = endpoint_law_float(step, n)
        # P[S > m] for m = 0..n via suffix sums over positive positions
        pos_probs = probs[-offset:]  # index k -> P[S = k], k = 0..n
        suffix = np.concatenate([np.cumsum(pos_probs[::-1])[::-1],
                                 [0.0]])  # suffix[k] = P[S >= k]
        m = np.arange(0, n + 1)
        ge = pos_probs + 2 * suffix[1:]  # P[Max >= m] for m >= 1 (index m)
        ge[0] = 1.0
        law = ge - np.concatenate([ge[1:], [0.0]])
        return law
    if method == "range":
        return range_table(step, n, mode, caps).max_marginal()
    raise DomainError(f"unknown method {method!r}")


def max_cdf_float(step: StepLawZ, n: int) -> np.ndarray:
    """cdf[m] = P[Max_n <= m], m = 0..n, via the reflection route."""
    law = max_law(step, n, mode="float", method="reflection")
    return np.cumsum(law)


# ---------------------------------------------------------------------------
# reflected radial walk (free-group length process)


def reflected_radial_exact(m: int, n: int) -> dict:
    """Law {l: Fraction} after n steps of the walk on Z>=0 that jumps
    0 -> 1 surely and from l >= 1 goes down with probability 1/(2m) and
    up with probability (2m-1)/(2m)."""
    if m < 2:
        raise DomainError("rank must be >= 2")
    if n < 0:
        raise DomainError("n must be >= 0")
    down = Fraction(1, 2 * m)
    up = 1 - down
    cur = {0: Fraction(1)}
    for _ in range(n):
        nxt = {}
        for l, w in cur.items():
            if l == 0:
                nxt[1] = nxt.get(1, Fraction(0)) + w
            else:
                nxt[l + 1] = nxt.get(l + 1, Fraction(0)) + w * up
                nxt[l - 1] = nxt.get(l - 1, Fraction(0)) + w * down
        cur = nxt
    return {l: w for l, w in cur.items() if w}


def reflected_radial_float(m: int, n: int) -> np.ndarray:
    """probs[l] = P[radial position = l after n steps], l = 0..n."""
    if m < 2:
        raise DomainError("rank must be >= 2")
    if n < 0:
        raise DomainError("n must be >= 0")
    down = 1.0 / (2 * m)
    up = 1.0 - down
    probs = np.zeros(n + 1)
    probs[0] = 1.0
    for _ in range(n):
        nxt = np.zeros_like(probs)
        nxt[1] = probs[0]  # forced step away from the origin
        nxt[2:] += up * probs[1:-1]
        nxt[:-1] += down * probs[1:]
        probs = nxt
    return probs


def reflected_radial_table(m: int, n: int, mode: str = "rational"):
    if mode == "rational":
        return reflected_radial_exact(m, n)
    if mode == "float":
        return reflected_radial_float(m, n)
    raise DomainError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# folded (reflected symmetric) kernel and its local ratio span


def folded_law_float(step: StepLawZ, n: int) -> np.ndarray:
    """Law of |S_n| for a symmetric step: probs[x] = P[|S_n| = x]."""
    if not step.is_symmetric:
        raise DomainError("folding needs a symmetric step")
    offset, probs = endpoint_law_float(step, n)
    out = probs[-offset:].copy()
    out[1:] += probs[:-offset][::-1]
    return out


def kernel_ratio_span(step: StepLawZ, n: int, center_scale: float,
                      eps: float) -> dict:
    """Largest shift span a (in units of sqrt(n)) such that the folded
    symmetric kernel satisfies |p(x + i)/p(x) - 1| <= eps for all
    x <= center_scale * sqrt(n) and 1 <= i <= a * sqrt(n).

    Reports the measured span and the worst deviation at that span.
    """
    probs = folded_law_float(step, n)
    sqrt_n = math.sqrt(n)
    x_max = int(center_scale * sqrt_n)
    # start at 1: the origin atom carries reflected boundary half-weight
    # and sits outside the interior regime the ratio bound describes
    x = np.arange(1, x_max + 1)
    base = probs[x]
    if np.any(base <= 0):
        # period-2 steps put zero mass on one parity class; sample the
        # populated one
        x = x[base > 0]
        base = base[base > 0]
    best_i = 0
    worst_at_best = 0.0
    i = 1
    while True:
        shifted = probs[x + i] if x[-1] + i < len(probs) else None
        if shifted is None:
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            dev = np.max(np.abs(shifted / base - 1.0))
        if not np.isfinite(dev) or dev > eps:
            break
        best_i, worst_at_best = i, float(dev)
        i += 1
    return {"span": best_i / sqrt_n, "max_shift": best_i,
            "worst_deviation": worst_at_best}
