"""Finitely supported measures on group elements: exact convolution,
switch-walk-switch measures, total variation, trajectory sampling.

Rational mode keeps every weight a Fraction and every identity exact;
float mode is for scales where exact arithmetic is out of reach.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import Caps, DEFAULT_CAPS, DomainError
from .groups import (GroupDescriptor, IteratedWreathZ, WreathZ2OverF,
                     WreathZOverF, identity, inverse, multiply, validate)
from .linedp import StepLawZ, default_step

_FLOAT_MASS_TOL = 1e-12


class FiniteMeasure:
    """Probability measure with finite support.

    weights: {element: weight}; mode "rational" (Fraction weights summing
    to exactly 1) or "float". Zero weights are dropped at construction.
    """

    def __init__(self, desc: GroupDescriptor, weights: dict,
                 mode: str = "rational", _checked: bool = False) -> None:
        if mode not in ("rational", "float"):
            raise DomainError(f"unknown mode {mode!r}")
        self.desc = desc
        self.mode = mode
        if _checked:
            self.weights = weights
            return
        clean = {}
        for x, w in weights.items():
            validate(desc, x)
            if mode == "rational":
                w = Fraction(w)
            else:
                w = float(w)
            if w < 0:
                raise DomainError(f"negative weight at {x!r}")
            if w:
                clean[x] = w
        total = sum(clean.values())
        if mode == "rational":
            if total != 1:
                raise DomainError(f"weights sum to {total}, not 1")
        elif abs(total - 1.0) > _FLOAT_MASS_TOL:
            raise DomainError(f"weights sum to {total!r}, not 1 "
                              f"within {_FLOAT_MASS_TOL}")
        self.weights = clean

    def __call__(self, x) -> Fraction | float:
        zero = Fraction(0) if self.mode == "rational" else 0.0
        return self.weights.get(x, zero)

    def support(self):
        return self.weights.keys()

    def __len__(self) -> int:
        return len(self.weights)

    def __eq__(self, other) -> bool:
        return (isinstance(other, FiniteMeasure) and self.desc == other.desc
                and self.mode == other.mode and self.weights == other.weights)

    def __repr__(self) -> str:
        return (f"FiniteMeasure({self.desc!r}, {len(self.weights)} atoms, "
                f"mode={self.mode!r})")

    def as_float(self) -> "FiniteMeasure":
        if self.mode == "float":
            return self
        return FiniteMeasure(self.desc,
                             {x: float(w) for x, w in self.weights.items()},
                             mode="float")

    def is_symmetric(self) -> bool:
        """Whether mu(g) == mu(g^-1) for every atom."""
        return all(self(inverse(self.desc, x)) == w
                   for x, w in self.weights.items())


def point_mass(desc: GroupDescriptor, x=None,
               mode: str = "rational") -> FiniteMeasure:
    if x is None:
        x = identity(desc)
    one = Fraction(1) if mode == "rational" else 1.0
    return FiniteMeasure(desc, {x: one}, mode)


def convolve(a: FiniteMeasure, b: FiniteMeasure,
             caps: Caps = DEFAULT_CAPS) -> FiniteMeasure:
    """Exact group convolution (a * b)(z) = sum over xy = z of a(x) b(y)."""
    if a.desc != b.desc:
        raise DomainError("convolution needs measures on the same group")
    if a.mode != b.mode:
        raise DomainError("convolution needs matching weight modes")
    desc = a.desc
    out = {}
    for x, wx in a.weights.items():
        for y, wy in b.weights.items():
            z = multiply(desc, x, y)
            w = wx * wy
            if z in out:
                out[z] += w
            else:
                out[z] = w
                if len(out) > caps.convolution_support:
                    from .errors import ResourceCapError
                    raise ResourceCapError("convolution_support",
                                           caps.convolution_support,
                                           f"> {len(out)}")
    return FiniteMeasure(desc, out, a.mode, _checked=(a.mode == "float"))


def convolve_power(mu: FiniteMeasure, n: int,
                   caps: Caps = DEFAULT_CAPS) -> FiniteMeasure:
    if n < 0:
        raise DomainError("n must be >= 0")
    acc = point_mass(mu.desc, mode=mu.mode)
    for _ in range(n):
        acc = convolve(acc, mu, caps)
    return acc


def power_sequence(mu: FiniteMeasure, n_max: int,
                   caps: Caps = DEFAULT_CAPS):
    """Yields (n, mu^{*n}) for n = 0..n_max, reusing each power."""
    acc = point_mass(mu.desc, mode=mu.mode)
    yield 0, acc
    for n in range(1, n_max + 1):
        acc = convolve(acc, mu, caps)
        yield n, acc


# ---------------------------------------------------------------------------
# switch-walk-switch measures

DEFAULT_STEP_2D = {
    (0, 0): Fraction(1, 2),
    (1, 0): Fraction(1, 8), (-1, 0): Fraction(1, 8),
    (0, 1): Fraction(1, 8), (0, -1): Fraction(1, 8),
}


def sws_measure(desc: GroupDescriptor, step=None,
                mode: str = "rational") -> FiniteMeasure:
    """The measure (switch) * (walk) * (switch).

    The switch factor randomizes the lamp at the current site: uniformly
    over the full lamp group for finite lamps, and by one lamp-walk step
    for line-valued lamps (iterated family). The walk factor moves the
    base point by the step law.
    """
    if isinstance(desc, WreathZOverF):
        if step is None:
            step = default_step()
        switch = _uniform_lamp_at_origin(desc, mode)
        walk = _base_step_line(desc, step, mode)
    elif isinstance(desc, WreathZ2OverF):
        step2 = DEFAULT_STEP_2D if step is None else step
        switch = _uniform_lamp_at_origin(desc, mode)
        walk_w = {((dx, dy), ()): w for (dx, dy), w in step2.items() if w}
        walk = FiniteMeasure(desc, walk_w, mode)
    elif isinstance(desc, IteratedWreathZ):
        if desc.depth == 0:
            if step is None:
                step = default_step()
            w = {1: step.p_plus, -1: step.p_minus, 0: step.p_zero}
            return FiniteMeasure(desc, {k: v for k, v in w.items() if v},
                                 mode)
        if step is None:
            step = default_step()
        inner = sws_measure(desc.lamp_descriptor(), step, mode)
        switch_w = {}
        for v, w in inner.weights.items():
            el = (0, ()) if v == identity(desc.lamp_descriptor()) \
                else (0, ((0, v),))
            switch_w[el] = switch_w.get(el, 0) + w
        switch = FiniteMeasure(desc, switch_w, mode)
        walk = _base_step_line(desc, step, mode)
    else:
        raise DomainError("sws_measure needs a wreath family")
    return convolve(convolve(switch, walk), switch)


def _uniform_lamp_at_origin(desc, mode) -> FiniteMeasure:
    q = desc.lamp_order
    u = Fraction(1, q) if mode == "rational" else 1.0 / q
    origin = (0, 0) if isinstance(desc, WreathZ2OverF) else 0
    weights = {}
    for c in range(q):
        el = (identityish_base(desc), ()) if c == 0 \
            else (identityish_base(desc), ((origin, c),))
        weights[el] = u
    return FiniteMeasure(desc, weights, mode)


def identityish_base(desc):
    return (0, 0) if isinstance(desc, WreathZ2OverF) else 0


def _base_step_line(desc, step: StepLawZ, mode) -> FiniteMeasure:
    w = {(1, ()): step.p_plus, (-1, ()): step.p_minus,
         (0, ()): step.p_zero}
    return FiniteMeasure(desc, {k: v for k, v in w.items() if v}, mode)


# ---------------------------------------------------------------------------
# total variation


def tv_distance(a: FiniteMeasure, b: FiniteMeasure):
    """Unnormalized total variation sum |a - b| over the union support;
    ranges over [0, 2]."""
    if a.desc != b.desc:
        raise DomainError("tv_distance needs measures on the same group")
    if a.mode != b.mode:
        raise DomainError("tv_distance needs matching weight modes")
    zero = Fraction(0) if a.mode == "rational" else 0.0
    total = zero
    for x, w in a.weights.items():
        total += abs(w - b.weights.get(x, zero))
    for x, w in b.weights.items():
        if x not in a.weights:
            total += w
    return total


def shift_tv_curve(mu: FiniteMeasure, g, n_max: int,
                   caps: Caps = DEFAULT_CAPS) -> list:
    """tv_n = sum over h of |mu^{*n}(h) - mu^{*n}(h g)| for n = 0..n_max."""
    validate(mu.desc, g)
    g_inv = inverse(mu.desc, g)
    curve = []
    zero = Fraction(0) if mu.mode == "rational" else 0.0
    for _, power in power_sequence(mu, n_max, caps):
        support = set(power.weights)
        support.update(multiply(mu.desc, x, g_inv) for x in power.weights)
        total = zero
        for h in support:
            hg = multiply(mu.desc, h, g)
            total += abs(power.weights.get(h, zero)
                         - power.weights.get(hg, zero))
        curve.append(total)
    return curve


# ---------------------------------------------------------------------------
# sampling


def sample_trajectory(mu: FiniteMeasure, n: int, seed) -> list:
    """X_0 = e, X_k = X_{k-1} * increment with i.i.d. increments from mu.

    Deterministic given the seed. Atom order is canonicalized before
    sampling so equal measures sample equal trajectories.
    """
    if n < 0:
        raise DomainError("n must be >= 0")
    rng = np.random.default_rng(seed)
    atoms = sorted(mu.weights.items(), key=lambda kv: repr(kv[0]))
    elements = [x for x, _ in atoms]
    probs = np.array([float(w) for _, w in atoms])
    probs = probs / probs.sum()
    cuts = np.cumsum(probs)
    draws = np.searchsorted(cuts, rng.random(n), side="right")
    draws = np.minimum(draws, len(elements) - 1)
    traj = [identity(mu.desc)]
    cur = traj[0]
    for k in draws:
        cur = multiply(mu.desc, cur, elements[int(k)])
        traj.append(cur)
    return traj
