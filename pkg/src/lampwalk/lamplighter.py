"""Exact n-step distributions of switch-walk-switch measures on Z wr F.

Conditioned on the base trajectory, every lamp in the visited interval is
independently uniform over F, so mu^{*n}(z) depends on z = (a, f) only
through a and the support hull of f. Everything here runs at the level of
those classes: the support is exponential in sqrt(n); the classes are
O(n^3).

For a class indexed by endpoint a and support hull [u, v] (or empty),

    weight(a, [u, v]) = sum over ranges [lo, hi] covering [u, v] and {0, a}
                        of q_n(lo, hi, a) / |F|^(hi - lo + 1)

where q_n is the joint (min, max, endpoint) law of the base walk. The sums
are accumulated once as damped suffix sums, giving every class weight in
O(n^3) total.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import Caps, DEFAULT_CAPS, DomainError
from .groups import (EMPTY_INTERVAL, IntervalZ, WreathZOverF, multiply,
                     validate)
from .linedp import (RangeTableExact, StepLawZ, default_step,
                     default_window, float_range_steps)


class ClassedDistribution:
    """mu^{*n} on Z wr F stored as class weights.

    Public view: class_weight(a, interval) is the probability of any single
    element with endpoint a and lamp support hull equal to interval;
    config_count(interval) is how many lamp configurations share it.
    """

    def __init__(self, lamp_order: int, step: StepLawZ, n: int,
                 mode: str) -> None:
        if lamp_order < 2:
            raise DomainError("lamp order must be >= 2")
        if mode not in ("rational", "float"):
            raise DomainError(f"unknown mode {mode!r}")
        self.lamp_order = lamp_order
        self.step = step
        self.n = n
        self.mode = mode
        self.desc = WreathZOverF(lamp_order)
        # rational storage
        self.denominator = None
        self._snum = None
        # float storage
        self.window = None
        self._mtab = None
        self.err_bound = 0.0
        self._mass = None
        self._lnm = None

    # -- construction ------------------------------------------------------

    @classmethod
    def _build_rational(cls, lamp_order, step, n, caps) -> \
            "ClassedDistribution":
        self = cls(lamp_order, step, n, "rational")
        rt = RangeTableExact(step, n, caps)
        F = lamp_order
        self.denominator = rt.denominator * F ** (n + 1)
        # per endpoint a: T[u + n][v] = sum of q(lo,hi,a) F^(n-(hi-lo))
        # over lo <= -(u+n offset)... then plain prefix/suffix sums; the
        # sums saturate outside the attainable (lo, hi) region, so lookups
        # never need clamping to stay correct.
        tables = {}
        fpow = [F ** k for k in range(n + 1)]
        for (lo, hi, pos), num in rt.numerators.items():
            grid = tables.get(pos)
            if grid is None:
                grid = [[0] * (n + 1) for _ in range(n + 1)]
                tables[pos] = grid
            grid[lo + n][hi] += num * fpow[n - (hi - lo)]
        for grid in tables.values():
            for i in range(1, n + 1):
                row_prev, row = grid[i - 1], grid[i]
                for j in range(n + 1):
                    row[j] += row_prev[j]
            for row in grid:
                for j in range(n - 1, -1, -1):
                    row[j] += row[j + 1]
        self._snum = tables
        return self

    @classmethod
    def _build_float(cls, lamp_order, step, n, caps, window) -> \
            "ClassedDistribution":
        for k, q, lost in float_range_steps(step, n, caps, window):
            pass
        return cls._from_float_state(lamp_order, step, n, q, lost)

    @classmethod
    def _from_float_state(cls, lamp_order, step, n, q, lost) -> \
            "ClassedDistribution":
        self = cls(lamp_order, step, n, "float")
        W = q.shape[0] - 1
        self.window = W
        m = np.ascontiguousarray(q.transpose(2, 0, 1))
        inv = 1.0 / lamp_order
        for l in range(W - 1, -1, -1):
            m[:, l, :] += m[:, l + 1, :] * inv
        for h in range(W - 1, -1, -1):
            m[:, :, h] += m[:, :, h + 1] * inv
        self._mtab = m
        self.err_bound = lost
        return self

    # -- the class map ------------------------------------------------------

    def _clamped(self, a: int, interval: IntervalZ) -> tuple:
        if interval.is_empty:
            return min(0, a), max(0, a)
        return min(interval.lo, 0, a), max(interval.hi, 0, a)

    def class_weight(self, a: int, interval: IntervalZ):
        """Probability of one element with endpoint a and support hull
        equal to interval."""
        zero = Fraction(0) if self.mode == "rational" else 0.0
        if self.n == 0:
            one = Fraction(1) if self.mode == "rational" else 1.0
            return one if (a == 0 and interval.is_empty) else zero
        U, V = self._clamped(a, interval)
        if self.mode == "rational":
            n = self.n
            if abs(a) > n or U < -n or V > n:
                return zero
            grid = self._snum.get(a)
            if grid is None:
                return zero
            return Fraction(grid[U + n][V], self.denominator)
        W = self.window
        if abs(a) > W or -U > W or V > W:
            return 0.0
        m = self._mtab[a + W, -U, V]
        return m * self.lamp_order ** float(-(V - U + 1))

    def config_count(self, interval: IntervalZ) -> int:
        """Number of lamp configurations whose support hull is interval."""
        F = self.lamp_order
        if interval.is_empty:
            return 1
        if interval.lo == interval.hi:
            return F - 1
        return (F - 1) ** 2 * F ** (interval.hi - interval.lo - 1)

    def endpoint_range(self) -> range:
        bound = self.n if self.mode == "rational" else self.window
        return range(-bound, bound + 1)

    def classes(self):
        """Yields (a, interval, weight) over all classes with weight > 0.

        O(n^3) items; meant for exact small-n work, not for float tables
        at large n.
        """
        if self.n == 0:
            yield 0, EMPTY_INTERVAL, self.class_weight(0, EMPTY_INTERVAL)
            return
        bound = self.n if self.mode == "rational" else self.window
        for a in self.endpoint_range():
            w = self.class_weight(a, EMPTY_INTERVAL)
            if w > 0:
                yield a, EMPTY_INTERVAL, w
            for u in range(-bound, bound + 1):
                for v in range(u, bound + 1):
                    iv = IntervalZ(u, v)
                    w = self.class_weight(a, iv)
                    if w > 0:
                        yield a, iv, w

    def total_mass(self):
        """Sum over classes of weight * count; 1 exactly in rational mode."""
        if self.n == 0:
            return Fraction(1) if self.mode == "rational" else 1.0
        F = self.lamp_order
        if self.mode == "rational":
            n = self.n
            total = 0
            for a, grid in self._snum.items():
                p, qq = min(0, a), max(0, a)
                for U in range(-n, p + 1):
                    row = grid[U + n]
                    for V in range(qq, n + 1):
                        s = row[V]
                        if not s:
                            continue
                        e = (U < p) + (V > qq)
                        c = (F - 1) ** e * F ** (V - U + 1 - e)
                        total += c * s
            return Fraction(total, self.denominator)
        return float(self._mass_table().sum())

    def _mass_table(self) -> np.ndarray:
        """mass[j, l, h] = total probability of the clamped class
        (a = j - W, [-l, h]); zero at invalid (j, l, h)."""
        if self._mass is not None:
            return self._mass
        W = self.window
        F = self.lamp_order
        edge = (F - 1) / F
        mass = np.zeros_like(self._mtab)
        for j in range(2 * W + 1):
            a = j - W
            l0, h0 = max(0, -a), max(0, a)
            if l0 > W or h0 > W:
                continue
            lc = np.full(W + 1 - l0, edge)
            lc[0] = 1.0
            hc = np.full(W + 1 - h0, edge)
            hc[0] = 1.0
            mass[j, l0:, h0:] = np.outer(lc, hc) * self._mtab[j, l0:, h0:]
        self._mass = mass
        return mass

    def _log_weight_table(self) -> np.ndarray:
        """log of the damped sum table, -inf where the sum is zero."""
        if self._lnm is None:
            with np.errstate(divide="ignore"):
                self._lnm = np.log(self._mtab)
        return self._lnm


def exact_distribution(lamp_order: int, step: StepLawZ | None = None,
                       n: int = 0, mode: str = "rational",
                       caps: Caps = DEFAULT_CAPS,
                       window: int | None = None) -> ClassedDistribution:
    """The full n-step law as a ClassedDistribution."""
    if step is None:
        step = default_step()
    if not (step.p_plus > 0 and step.p_minus > 0):
        raise DomainError("base step must be nearest-neighbor with both "
                          "moves possible")
    if n < 0:
        raise DomainError("n must be >= 0")
    if mode == "rational":
        return ClassedDistribution._build_rational(lamp_order, step, n, caps)
    if mode == "float":
        return ClassedDistribution._build_float(lamp_order, step, n, caps,
                                                window)
    raise DomainError(f"unknown mode {mode!r}")


def _lamp_interval(lamps) -> IntervalZ:
    if not lamps:
        return EMPTY_INTERVAL
    return IntervalZ(lamps[0][0], lamps[-1][0])


def point_probability(cd: ClassedDistribution, z):
    """mu^{*n}(z) for a single element z = (a, lamps)."""
    validate(cd.desc, z)
    a, lamps = z
    return cd.class_weight(a, _lamp_interval(lamps))


# ---------------------------------------------------------------------------
# exact invariance (the class-preservation mechanism behind stability of
# probabilities under lamp-only right increments)


@dataclass
class InvarianceReport:
    n: int
    lamp_order: int
    g: tuple
    mode: str
    checked: int = 0
    skipped: int = 0
    reps: int = 0
    violations: list = field(default_factory=list)

    def ok(self) -> bool:
        return not self.violations


def _paper_gate(a: int, interval: IntervalZ, g_interval: IntervalZ) -> bool:
    """Hypothesis gate a + J(g) inside J(class)."""
    U = min(interval.lo, 0, a) if not interval.is_empty else min(0, a)
    V = max(interval.hi, 0, a) if not interval.is_empty else max(0, a)
    return U <= a + g_interval.lo and a + g_interval.hi <= V


def _safe_gate(a: int, interval: IntervalZ, sites: list) -> bool:
    """Whether right-multiplying ANY representative of the class by the
    lamp increment (toggle sites given in absolute coordinates) provably
    lands in a class with the same clamped hull, hence equal weight.

    The hypothesis gate alone is not enough: a toggle that erases the lamp
    pinning the hull's end moves the representative to a narrower class.
    The conditions below demand that each end either is pinned by {0, a}
    (so erasure cannot shrink the clamped hull) or is untouched.
    """
    p, qq = min(0, a), max(0, a)
    if interval.is_empty:
        return all(p <= s <= qq for s in sites)
    u, v = interval.lo, interval.hi
    below = [s for s in sites if s < u]
    if below:
        left_ok = min(below) >= p
    elif u in sites:
        left_ok = u >= p
    else:
        left_ok = True
    if not left_ok:
        return False
    above = [s for s in sites if s > v]
    if above:
        return max(above) <= qq
    if v in sites:
        return v <= qq
    return True


def check_exact_invariance(cd: ClassedDistribution, g,
                           mode: str = "safe", reps: int = 3,
                           seed: int = 0) -> InvarianceReport:
    """Verify class-level invariance under the lamp-only increment g.

    Iterates every class with positive weight; classes passing the gate
    get `reps` sampled representatives h, each checked for
    point_probability(h) == point_probability(h g) — exact in rational
    mode. Classes failing the gate are counted as skipped.

    mode "safe" (default) gates on the class-preservation condition and is
    expected to report zero violations. mode "paper" gates only on the
    hull-containment hypothesis a + J(g) inside J(class), which admits
    boundary-lamp erasures; it exists to demonstrate those exceptions.
    """
    validate(cd.desc, g)
    if g[0] != 0:
        raise DomainError("increment must be lamp-only (zero base)")
    if mode not in ("safe", "paper"):
        raise DomainError(f"unknown gate mode {mode!r}")
    report = InvarianceReport(cd.n, cd.lamp_order, g, mode, reps=reps)
    g_sites = [s for s, _ in g[1]]
    g_interval = IntervalZ.hull(g_sites + [0])
    rng = np.random.default_rng(seed)
    F = cd.lamp_order
    tol = 0.0 if cd.mode == "rational" else 1e-9

    for a, interval, w in cd.classes():
        if not g[1]:
            gate = True
        elif mode == "paper":
            gate = _paper_gate(a, interval, g_interval)
        else:
            gate = _safe_gate(a, interval, [a + s for s in g_sites])
        if not gate:
            report.skipped += 1
            continue
        report.checked += 1
        for h in _class_representatives(interval, F, reps, rng):
            h = (a, h)
            ph = point_probability(cd, h)
            phg = point_probability(cd, multiply(cd.desc, h, g))
            bad = (ph != phg) if cd.mode == "rational" else \
                abs(ph - phg) > tol * max(abs(ph), abs(phg))
            if bad:
                report.violations.append(
                    {"a": a, "interval": interval, "h": h,
                     "p_h": ph, "p_hg": phg})
    return report


def _class_representatives(interval: IntervalZ, F: int, reps: int, rng):
    """Lamp configurations with support hull exactly `interval`."""
    if interval.is_empty:
        yield ()
        return
    u, v = interval.lo, interval.hi
    seen = set()
    for _ in range(reps):
        vals = rng.integers(0, F, size=v - u + 1)
        vals[0] = rng.integers(1, F)
        vals[-1] = rng.integers(1, F)
        lamps = tuple((u + k, int(c)) for k, c in enumerate(vals) if c)
        if lamps in seen:
            continue
        seen.add(lamps)
        yield lamps


# ---------------------------------------------------------------------------
# entropy


def exact_entropy(cd: ClassedDistribution) -> float:
    """Shannon entropy of mu^{*n} in nats."""
    if cd.n == 0:
        return 0.0
    F = cd.lamp_order
    if cd.mode == "rational":
        n = cd.n
        log_den = math.log(cd.denominator)
        h = 0.0
        for a, grid in cd._snum.items():
            p, qq = min(0, a), max(0, a)
            for U in range(-n, p + 1):
                row = grid[U + n]
                for V in range(qq, n + 1):
                    s = row[V]
                    if not s:
                        continue
                    e = (U < p) + (V > qq)
                    c = (F - 1) ** e * F ** (V - U + 1 - e)
                    h += c * s * (log_den - math.log(s))
        return h / cd.denominator
    mass = cd._mass_table()
    W = cd.window
    lamps = np.arange(W + 1)
    width = lamps[None, :, None] + lamps[None, None, :] + 1
    logm = np.log(np.where(cd._mtab > 0, cd._mtab, 1.0))
    return float((mass * (width * math.log(F) - logm)).sum())


def entropy_curve(lamp_order: int, step: StepLawZ | None = None,
                  n_max: int = 1, mode: str = "float", n_min: int = 1,
                  caps: Caps = DEFAULT_CAPS,
                  window: int | None = None) -> list:
    """H(n) for n = n_min..n_max, sharing one incremental DP in float
    mode."""
    if step is None:
        step = default_step()
    if mode == "rational":
        return [exact_entropy(exact_distribution(lamp_order, step, n,
                                                 "rational", caps))
                for n in range(n_min, n_max + 1)]
    out = []
    if window is None:
        window = default_window(step, n_max)
    for k, q, lost in float_range_steps(step, n_max, caps, window):
        if k >= n_min:
            cd = ClassedDistribution._from_float_state(lamp_order, step, k,
                                                       q, lost)
            out.append(exact_entropy(cd))
    return out


def entropy_tv_profile(lamp_order: int, step: StepLawZ | None = None,
                       n_max: int = 200, increments: tuple = ((1, ()),),
                       n_min: int = 10, caps: Caps = DEFAULT_CAPS,
                       window: int | None = None) -> dict:
    """One incremental float DP serving both curves of the entropy bound:
    H(n) for n in [n_min, n_max + 1] and tv_shift(g) for n in
    [n_min, n_max], per increment g.

    Returns {"n": [...], "H": [...], "tv": {g: [...]}} where H has one
    extra trailing entry (for the forward difference at n_max).
    """
    if step is None:
        step = default_step()
    if window is None:
        window = default_window(step, n_max + 1)
    ns = list(range(n_min, n_max + 1))
    H = []
    tv = {g: [] for g in increments}
    for k, q, lost in float_range_steps(step, n_max + 1, caps, window):
        if k < n_min:
            continue
        cd = ClassedDistribution._from_float_state(lamp_order, step, k, q,
                                                   lost)
        H.append(exact_entropy(cd))
        if k <= n_max:
            for g in increments:
                tv[g].append(exact_tv_shift(cd, g))
    return {"n": ns, "H": H, "tv": tv}


# ---------------------------------------------------------------------------
# exact TV under right shifts


def exact_tv_shift(cd: ClassedDistribution, g):
    """Sum over h of |mu^{*n}(h) - mu^{*n}(h g)|, computed exactly at class
    level. Supported increments: translations (i, ()) and single-site lamp
    elements (0, ((s, c),))."""
    validate(cd.desc, g)
    base, lamps = g
    if base != 0 and not lamps:
        return _tv_translation(cd, base)
    if base == 0 and not lamps:
        return Fraction(0) if cd.mode == "rational" else 0.0
    if base == 0 and len(lamps) == 1:
        return _tv_single_lamp(cd, lamps[0][0], lamps[0][1])
    raise DomainError("supported increments: translations (i, ()) and "
                      "single-site lamp elements (0, ((site, value),))")


def _tv_translation(cd: ClassedDistribution, i: int):
    if i == 0:
        return Fraction(0) if cd.mode == "rational" else 0.0
    if cd.n == 0:
        return Fraction(2) if cd.mode == "rational" else 2.0
    if cd.mode == "rational":
        return _tv_translation_rational(cd, i)
    return _tv_translation_float(cd, i)


def _tv_translation_rational(cd: ClassedDistribution, i: int):
    n = cd.n
    total = 0
    for a in range(-n - abs(i), n + abs(i) + 1):
        w1 = _snum_lookup(cd, a, EMPTY_INTERVAL)
        w2 = _snum_lookup(cd, a + i, EMPTY_INTERVAL)
        total += abs(w1 - w2)
        for u in range(-n, n + 1):
            for v in range(u, n + 1):
                iv = IntervalZ(u, v)
                w1 = _snum_lookup(cd, a, iv)
                w2 = _snum_lookup(cd, a + i, iv)
                if w1 or w2:
                    total += cd.config_count(iv) * abs(w1 - w2)
    return Fraction(total, cd.denominator)


def _snum_lookup(cd: ClassedDistribution, a: int,
                 interval: IntervalZ) -> int:
    """Integer numerator of class_weight over cd.denominator."""
    n = cd.n
    if abs(a) > n:
        return 0
    U, V = cd._clamped(a, interval)
    if U < -n or V > n:
        return 0
    grid = cd._snum.get(a)
    return grid[U + n][V] if grid is not None else 0


def _fpow_table(F: float, length: int) -> np.ndarray:
    return F ** -np.arange(length, dtype=float)


def _grid_values(m: np.ndarray, W: int, fpow: np.ndarray, A: np.ndarray,
                 u_vec: np.ndarray, v_vec: np.ndarray) -> np.ndarray:
    """X[k, p, q] = F^(v-u+1) * weight(A[k], [u_vec[p], v_vec[q]]).

    The width rescaling makes count(u,v)*weight = edge-coef * X, with the
    edge coefficient depending only on (u, v). u_vec/v_vec may be 1D
    (shared across A) or 2D of shape (len(A), p) for per-endpoint grids.
    Out-of-window classes give 0.
    """
    k = len(A)
    mm = np.minimum(0, A)[:, None]
    MM = np.maximum(0, A)[:, None]
    u2 = u_vec[None, :] if u_vec.ndim == 1 else u_vec
    v2 = v_vec[None, :] if v_vec.ndim == 1 else v_vec
    U = np.minimum(u2, mm)
    V = np.maximum(v2, MM)
    lu = -U
    hv = V
    oku = lu <= W
    okv = hv <= W
    in_win = np.abs(A) <= W
    j = np.clip(A + W, 0, 2 * W)
    luc = np.where(oku, lu, 0)
    hvc = np.where(okv, hv, 0)
    luc = np.broadcast_to(luc, (k, luc.shape[1]))
    hvc = np.broadcast_to(hvc, (k, hvc.shape[1]))
    grid = m[j[:, None, None], luc[:, :, None], hvc[:, None, :]]
    fu = fpow[u2 - U] * oku * in_win[:, None]
    fv = fpow[V - v2] * okv
    return grid * fu[:, :, None] * fv[:, None, :]


def _edge_coef(F: float, u_vec: np.ndarray, v_vec: np.ndarray) -> np.ndarray:
    edge = (F - 1.0) / F
    return np.where(v_vec[None, :] > u_vec[:, None], edge * edge, edge)


_TV_CHUNK = 48


def _tv_translation_float(cd: ClassedDistribution, i: int) -> float:
    W = cd.window
    F = float(cd.lamp_order)
    m = cd._mtab
    fpow = _fpow_table(F, 4 * W + 2 * abs(i) + 4)
    uv = np.arange(-W, W + 1)
    coef = _edge_coef(F, uv, uv) * (uv[:, None] <= uv[None, :])
    total = 0.0
    all_a = np.arange(-W - abs(i), W + abs(i) + 1)
    for lo in range(0, len(all_a), _TV_CHUNK):
        A = all_a[lo:lo + _TV_CHUNK]
        x1 = _grid_values(m, W, fpow, A, uv, uv)
        x2 = _grid_values(m, W, fpow, A + i, uv, uv)
        total += float((coef * np.abs(x1 - x2)).sum())
        total += float(np.abs(_empty_values(m, W, fpow, A)
                              - _empty_values(m, W, fpow, A + i)).sum())
    return total


def _empty_values(m: np.ndarray, W: int, fpow: np.ndarray,
                  A: np.ndarray) -> np.ndarray:
    ok = np.abs(A) <= W
    j = np.clip(A + W, 0, 2 * W)
    vals = m[j, np.maximum(0, -j + W), np.maximum(0, j - W)]
    return vals * fpow[np.abs(A) + 1] * ok


def _tv_single_lamp(cd: ClassedDistribution, delta: int, c: int):
    """TV under g = (0, ((delta, c),)). The toggle hits site a + delta of
    each class; only classes whose hull it extends or whose boundary lamp
    it can erase contribute."""
    if cd.n == 0:
        return Fraction(2) if cd.mode == "rational" else 2.0
    if cd.mode == "rational":
        return _tv_single_lamp_rational(cd, delta)
    return _tv_single_lamp_float(cd, delta)


def _tv_single_lamp_rational(cd: ClassedDistribution, delta: int):
    n = cd.n
    F = cd.lamp_order
    total = 0
    for a in range(-n, n + 1):
        s = a + delta
        # empty class -> single lamp at s (and back: case u = v = s)
        w_empty = _snum_lookup(cd, a, EMPTY_INTERVAL)
        w_ss = _snum_lookup(cd, a, IntervalZ(s, s))
        total += 2 * abs(w_empty - w_ss)
        for v in range(-n, n + 1):
            # classes [u, v] with toggle strictly left: u > s
            for uu in range(s + 1, v + 1):
                w1 = _snum_lookup(cd, a, IntervalZ(uu, v))
                w2 = _snum_lookup(cd, a, IntervalZ(s, v))
                if w1 or w2:
                    total += cd.config_count(IntervalZ(uu, v)) * abs(w1 - w2)
            # classes [u, v] with toggle strictly right: v' < s ... mirrored
            for vv in range(v, s):
                uu = v
                w1 = _snum_lookup(cd, a, IntervalZ(uu, vv))
                w2 = _snum_lookup(cd, a, IntervalZ(uu, s))
                if w1 or w2:
                    total += cd.config_count(IntervalZ(uu, vv)) * \
                        abs(w1 - w2)
            # erasing a boundary lamp at u = s < v: split by the next
            # support site u2; the cancelling sub-family is in bijection
            # with configurations of hull [u2, v]
            if v > s:
                w1 = _snum_lookup(cd, a, IntervalZ(s, v))
                for u2 in range(s + 1, v + 1):
                    w2 = _snum_lookup(cd, a, IntervalZ(u2, v))
                    if w1 or w2:
                        total += cd.config_count(IntervalZ(u2, v)) * \
                            abs(w1 - w2)
            # mirrored erasure at v' = s > u (reusing v as the left end)
            if v < s:
                uu = v
                w1 = _snum_lookup(cd, a, IntervalZ(uu, s))
                for v2 in range(uu, s):
                    w2 = _snum_lookup(cd, a, IntervalZ(uu, v2))
                    if w1 or w2:
                        total += cd.config_count(IntervalZ(uu, v2)) * \
                            abs(w1 - w2)
    _ = F
    return Fraction(total, cd.denominator)


def _tv_single_lamp_float(cd: ClassedDistribution, delta: int) -> float:
    """Each pair (z gains a lamp at s) <-> (zg erases its boundary lamp at
    s) contributes the same amount from both sides, so every case carries
    a factor 2."""
    W = cd.window
    F = float(cd.lamp_order)
    m = cd._mtab
    fpow = _fpow_table(F, 4 * W + 2 * abs(delta) + 4)
    uv = np.arange(-W, W + 1)
    coef = _edge_coef(F, uv, uv)
    total = 0.0
    all_a = np.arange(-W, W + 1)
    for lo in range(0, len(all_a), _TV_CHUNK):
        A = all_a[lo:lo + _TV_CHUNK]
        s = A + delta
        x = _grid_values(m, W, fpow, A, uv, uv)
        # class [s, v] as a function of v: shape (k, 1, nv) after squeeze
        x_sv = _grid_values(m, W, fpow, A, s[:, None], uv)
        # class [u, s] as a function of u: (k, nu, 1)
        x_us = _grid_values(m, W, fpow, A, uv, s[:, None])
        # toggle left of the hull (u > s, v >= u), paired with erasures
        mask_l = (uv[None, :, None] > s[:, None, None]) & \
            (uv[None, None, :] >= uv[None, :, None])
        damp_l = fpow[np.maximum(uv[None, :] - s[:, None], 0)]
        total += 2.0 * float((coef * np.abs(x - x_sv * damp_l[:, :, None])
                              * mask_l).sum())
        # toggle right of the hull (v < s, u <= v), paired with erasures
        mask_r = (uv[None, None, :] < s[:, None, None]) & \
            (uv[None, :, None] <= uv[None, None, :])
        damp_r = fpow[np.maximum(s[:, None] - uv[None, :], 0)]
        total += 2.0 * float((coef * np.abs(x - x_us * damp_r[:, None, :])
                              * mask_r).sum())
        # empty class <-> single lamp at s
        w_ss = _grid_values(m, W, fpow, A, s[:, None], s[:, None])[:, 0, 0]
        w_ss = w_ss * fpow[1]
        total += 2.0 * float(np.abs(_empty_values(m, W, fpow, A)
                                    - w_ss).sum())
    return total


# ---------------------------------------------------------------------------
# radius of almost invariance


@dataclass
class RadiusProfile:
    """Per-length quantiles of the worst ratio deviation, and the largest
    word length at which the (1 - eps)-quantile still stays below eps."""
    n: int
    eps: float
    samples: int
    l_max: int
    lengths: list
    quantiles: list
    radius: int
    truncated: bool
    witnesses: list
    err_bound: float
    seed: int


class _IncrementCatalog:
    """Short increments of Z wr F, grouped by word length.

    Three families cover the geodesic shapes: pure translations, one
    toggle combined with a translation, and a toggle on each side of the
    start. Toggle value is 1. Length follows the travel formula
    (number of toggles) + 2 (R - L) - |i| with R, L the extremes of
    {0, i} plus the toggle sites.
    """

    def __init__(self, l_max: int) -> None:
        rows = []
        for i in range(-l_max, l_max + 1):
            if i:
                rows.append((i, 0, 0, 0, abs(i)))
        for i in range(-l_max, l_max + 1):
            for d in range(-l_max - abs(i), l_max + abs(i) + 1):
                ln = 1 + 2 * (max(0, i, d) - min(0, i, d)) - abs(i)
                if ln <= l_max:
                    rows.append((i, d, 0, 1, ln))
        for d1 in range(-(l_max // 2), 0):
            for d2 in range(1, l_max // 2 + 1):
                ln = 2 + 2 * (d2 - d1)
                if ln <= l_max:
                    rows.append((0, d1, d2, 2, ln))
        arr = np.asarray(rows, dtype=np.int64)
        self.i = arr[:, 0]
        self.d1 = arr[:, 1]
        self.d2 = arr[:, 2]
        self.kind = arr[:, 3]
        self.length = arr[:, 4]
        self.order = np.argsort(self.length, kind="stable")
        by_len = self.length[self.order]
        first = np.ones(by_len.size, dtype=bool)
        first[1:] = by_len[1:] != by_len[:-1]
        self.starts = np.flatnonzero(first)
        self.uniq = by_len[self.starts]

    def element(self, k: int) -> tuple:
        i = int(self.i[k])
        if self.kind[k] == 0:
            return (i, ())
        if self.kind[k] == 1:
            return (i, ((int(self.d1[k]), 1),))
        return (0, ((int(self.d1[k]), 1), (int(self.d2[k]), 1)))


_FAR = 1 << 30


def _sample_deviations(cat, a, U, V, vals, lnp, lnm, W, F, lnF):
    """|mu(h g)/mu(h) - 1| for h = (a, vals over [U, V]) against every
    catalog increment, using only the class of h g.

    A toggle at an occupied site erases it when the value is F - 1; the
    new support extremes then come from the three smallest/largest sites
    of the old support (at most two sites are touched), with additions
    merged in.
    """
    supp = np.flatnonzero(vals) + U
    k3 = min(3, supp.size)
    mins = np.full(3, _FAR, dtype=np.int64)
    maxs = np.full(3, -_FAR, dtype=np.int64)
    mins[:k3] = supp[:3]
    maxs[:k3] = supp[::-1][:3]
    s1 = a + cat.d1
    s2 = a + cat.d2
    act1 = cat.kind >= 1
    act2 = cat.kind == 2
    span = V - U
    v1 = np.where(act1 & (s1 >= U) & (s1 <= V),
                  vals[np.clip(s1 - U, 0, span)], 0)
    v2 = np.where(act2 & (s2 >= U) & (s2 <= V),
                  vals[np.clip(s2 - U, 0, span)], 0)
    rem1 = act1 & (v1 == F - 1)
    add1 = act1 & (v1 == 0)
    rem2 = act2 & (v2 == F - 1)
    add2 = act2 & (v2 == 0)

    def removed(x):
        return (rem1 & (s1 == x)) | (rem2 & (s2 == x))

    bmin = np.where(~removed(mins[0]), mins[0],
                    np.where(~removed(mins[1]), mins[1],
                             np.where(~removed(mins[2]), mins[2], _FAR)))
    bmax = np.where(~removed(maxs[0]), maxs[0],
                    np.where(~removed(maxs[1]), maxs[1],
                             np.where(~removed(maxs[2]), maxs[2], -_FAR)))
    new_min = np.minimum(bmin, np.minimum(np.where(add1, s1, _FAR),
                                          np.where(add2, s2, _FAR)))
    new_max = np.maximum(bmax, np.maximum(np.where(add1, s1, -_FAR),
                                          np.where(add2, s2, -_FAR)))
    nonempty = (supp.size - rem1 - rem2 + add1 + add2) > 0
    a2 = a + cat.i
    lo = np.minimum(0, a2)
    hi = np.maximum(0, a2)
    U2 = np.where(nonempty, np.minimum(new_min, lo), lo)
    V2 = np.where(nonempty, np.maximum(new_max, hi), hi)
    ok = (np.abs(a2) <= W) & (U2 >= -W) & (V2 <= W)
    lnp2 = lnm[np.clip(a2 + W, 0, 2 * W), np.clip(-U2, 0, W),
               np.clip(V2, 0, W)] - (V2 - U2 + 1) * lnF
    lnp2 = np.where(ok, lnp2, -np.inf)
    with np.errstate(over="ignore"):
        dev = np.abs(np.exp(lnp2 - lnp) - 1.0)
    return dev, lnp2


def _draw_states(cd, samples, rng):
    """Sample elements of mu^{*n}: a class by its total mass, then a
    uniform configuration inside it. Returns (a, U, V, vals, ln weight)
    tuples."""
    mass = cd._mass_table()
    W = cd.window
    F = cd.lamp_order
    lnF = math.log(F)
    lnm = cd._log_weight_table()
    pj = mass.sum(axis=(1, 2))
    cj = np.cumsum(pj)
    picks = np.searchsorted(cj, rng.random(samples) * cj[-1], side="right")
    picks = np.minimum(picks, 2 * W)
    states = []
    order = np.argsort(picks, kind="stable")
    pos = 0
    while pos < order.size:
        j = int(picks[order[pos]])
        end = pos
        while end < order.size and picks[order[end]] == j:
            end += 1
        flat = mass[j].ravel()
        cf = np.cumsum(flat)
        cells = np.searchsorted(cf, rng.random(end - pos) * cf[-1],
                                side="right")
        cells = np.minimum(cells, flat.size - 1)
        a = j - W
        l0, h0 = max(0, -a), max(0, a)
        for c in cells:
            l, h = int(c) // (W + 1), int(c) % (W + 1)
            vals = rng.integers(0, F, size=l + h + 1)
            if l > l0:
                vals[0] = rng.integers(1, F)
            if h > h0:
                vals[-1] = rng.integers(1, F)
            lnp = lnm[j, l, h] - (l + h + 1) * lnF
            states.append((a, -l, h, vals, lnp))
        pos = end
    return states


def radius_profile(cd: ClassedDistribution, eps: float = 0.1,
                   samples: int = 4096, seed: int = 0,
                   l_max: int | None = None) -> RadiusProfile:
    """Monte Carlo profile of the almost-invariance radius.

    Draws `samples` elements h from the distribution, evaluates the
    relative deviation |mu(h g)/mu(h) - 1| over the increment catalog up
    to word length l_max (default ceil(3 sqrt(n))), and takes the
    per-length (1 - eps)-quantile of the running worst deviation. The
    radius is the largest length whose quantile is still <= eps;
    witnesses document violating increments one step past it.
    """
    if cd.mode != "float":
        raise DomainError("radius_profile needs a float-mode distribution")
    if not 0.0 < eps < 1.0:
        raise DomainError("eps must be in (0, 1)")
    if l_max is None:
        l_max = max(4, math.ceil(3.0 * math.sqrt(cd.n)))
    cat = _IncrementCatalog(l_max)
    rng = np.random.default_rng(seed)
    W = cd.window
    F = cd.lamp_order
    lnF = math.log(F)
    lnm = cd._log_weight_table()
    states = _draw_states(cd, samples, rng)
    worst = np.empty((samples, l_max))
    row = np.empty(l_max + 1)
    for s, (a, U, V, vals, lnp) in enumerate(states):
        dev, _ = _sample_deviations(cat, a, U, V, vals, lnp, lnm, W, F, lnF)
        row[:] = 0.0
        row[cat.uniq] = np.maximum.reduceat(dev[cat.order], cat.starts)
        np.maximum.accumulate(row, out=row)
        worst[s] = row[1:]
    qs = np.quantile(worst, 1.0 - eps, axis=0, method="higher")
    below = qs <= eps
    if below.all():
        radius, truncated = l_max, True
    elif not below[0]:
        radius, truncated = 0, False
    else:
        radius, truncated = int(np.argmin(below)), False
    witnesses = []
    if not truncated:
        for s in np.flatnonzero(worst[:, radius] > eps)[:3]:
            a, U, V, vals, lnp = states[s]
            dev, lnp2 = _sample_deviations(cat, a, U, V, vals, lnp, lnm, W,
                                           F, lnF)
            dev = np.where(cat.length <= radius + 1, dev, -1.0)
            k = int(np.argmax(dev))
            lamps = tuple((U + t, int(c)) for t, c in enumerate(vals) if c)
            witnesses.append({"h": (a, lamps), "g": cat.element(k),
                              "length": int(cat.length[k]),
                              "dev": float(dev[k]), "p_h": math.exp(lnp),
                              "p_hg": float(np.exp(lnp2[k]))})
    return RadiusProfile(cd.n, eps, samples, l_max,
                         list(range(1, l_max + 1)), [float(x) for x in qs],
                         radius, truncated, witnesses, cd.err_bound, seed)


# ---------------------------------------------------------------------------
# radius of almost constancy


@dataclass
class ConstancyProfile:
    """Envelope of class weight over identity weight by minimal word
    length, and the largest cutoff below which it stays within eps."""
    n: int
    eps: float
    cutoff: int
    truncated: bool
    lengths: list
    min_ratio: list
    max_ratio: list
    first_violation: dict | None
    mode: str


def _min_length(a: int, l: int, h: int) -> int:
    """Minimal word length over the clamped class (a, [-l, h]): forced
    endpoint toggles plus the travel 2 (l + h) - |a|."""
    e = (l > max(0, -a)) + (h > max(0, a))
    return e + 2 * (l + h) - abs(a)


def almost_constancy_profile(cd: ClassedDistribution,
                             eps: float = 0.1) -> ConstancyProfile:
    """Scan classes in increasing minimal word length; the cutoff is one
    less than the first length whose weight leaves [1 - eps, 1 + eps]
    relative to the identity's weight.

    Classes with l_min <= L all satisfy l + h <= L, so scanning the
    simplex l + h <= L and growing L until a violation with l_min <= L is
    found covers every shorter class.
    """
    if not 0.0 < eps:
        raise DomainError("eps must be positive")
    if cd.n == 0:
        return ConstancyProfile(0, eps, 0, False, [0], [1.0], [1.0],
                                None, cd.mode)
    if cd.mode == "float":
        return _constancy_float(cd, eps)
    return _constancy_rational(cd, eps)


def _constancy_float(cd, eps):
    W = cd.window
    F = cd.lamp_order
    lnF = math.log(F)
    lnm = cd._log_weight_table()
    m_e = float(cd._mtab[W, 0, 0])
    if m_e <= 0.0:
        raise DomainError("identity has zero mass at this n")
    ln_we = math.log(m_e) - lnF
    l_cap = min(W, 2 * cd.n + 2)
    L = min(l_cap, max(8, 4 * math.ceil(cd.n ** (1.0 / 3.0))))
    while True:
        a = np.arange(-L, L + 1)[:, None, None]
        l = np.arange(L + 1)[None, :, None]
        h = np.arange(L + 1)[None, None, :]
        l0 = np.maximum(0, -a)
        h0 = np.maximum(0, a)
        valid = (l >= l0) & (h >= h0) & (l + h <= L)
        lmin = (l > l0) + (h > h0) + 2 * (l + h) - np.abs(a)
        lnw = lnm[a + W, l, h] - (l + h + 1) * lnF
        with np.errstate(invalid="ignore"):
            ratio = np.exp(lnw - ln_we)
        viol = valid & (np.abs(ratio - 1.0) > eps)
        if viol.any():
            fmin = int(lmin[viol].min())
            if fmin <= L or L >= l_cap:
                break
            L = min(fmin, l_cap)
        elif L >= l_cap:
            return _constancy_result(cd, eps, None, None, valid, lmin,
                                     ratio, truncated=True)
        else:
            L = min(2 * L, l_cap)
    at = np.flatnonzero(viol.ravel())
    k = at[np.argmin(lmin.ravel()[at])]
    ai, li, hi = np.unravel_index(k, viol.shape)
    first = {"a": int(ai) - L, "interval": IntervalZ(-int(li), int(hi)),
             "length": fmin, "ratio": float(ratio[ai, li, hi])}
    return _constancy_result(cd, eps, fmin - 1, first, valid, lmin, ratio,
                             truncated=False)


def _constancy_result(cd, eps, cutoff, first, valid, lmin, ratio,
                      truncated):
    top = int(lmin[valid].max())
    mn = np.full(top + 1, np.inf)
    mx = np.full(top + 1, -np.inf)
    np.minimum.at(mn, lmin[valid], np.where(valid, ratio, np.inf)[valid])
    np.maximum.at(mx, lmin[valid], np.where(valid, ratio, -np.inf)[valid])
    have = np.isfinite(mn)
    lengths = [int(x) for x in np.flatnonzero(have)]
    if truncated:
        cutoff = top
    return ConstancyProfile(cd.n, eps, cutoff, truncated, lengths,
                            [float(mn[i]) for i in lengths],
                            [float(mx[i]) for i in lengths],
                            first, cd.mode)


def _constancy_rational(cd, eps):
    n = cd.n
    we = cd.class_weight(0, EMPTY_INTERVAL)
    if we == 0:
        raise DomainError("identity has zero mass at this n")
    eps_f = Fraction(str(eps)) if isinstance(eps, float) else Fraction(eps)
    l_cap = n + 1
    L = min(l_cap, max(4, 2 * math.ceil(n ** (1.0 / 3.0))))
    while True:
        best = None
        first = None
        bins_mn, bins_mx = {}, {}
        for a in range(-L, L + 1):
            l0, h0 = max(0, -a), max(0, a)
            for l in range(l0, L + 1):
                for h in range(h0, L - l + 1):
                    iv = IntervalZ(-l, h)
                    ratio = cd.class_weight(a, iv) / we
                    lm = _min_length(a, l, h)
                    f = float(ratio)
                    bins_mn[lm] = min(bins_mn.get(lm, f), f)
                    bins_mx[lm] = max(bins_mx.get(lm, f), f)
                    if abs(ratio - 1) > eps_f and (best is None or
                                                   lm < best):
                        best = lm
                        first = {"a": a, "interval": iv, "length": lm,
                                 "ratio": f}
        if best is not None and (best <= L or L >= l_cap):
            break
        if best is None and L >= l_cap:
            lengths = sorted(bins_mn)
            return ConstancyProfile(n, eps, max(lengths), True, lengths,
                                    [bins_mn[i] for i in lengths],
                                    [bins_mx[i] for i in lengths],
                                    None, cd.mode)
        L = min(max(2 * L, best or 0), l_cap)
    lengths = sorted(bins_mn)
    return ConstancyProfile(n, eps, best - 1, False, lengths,
                            [bins_mn[i] for i in lengths],
                            [bins_mx[i] for i in lengths], first, cd.mode)
