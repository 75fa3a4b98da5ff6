"""Brute-force reference implementations for the test suite.

Measures are dicts element -> Fraction, convolved by direct enumeration
with multiplication routines written here from the definitions, so the
library's DP kernels are checked against a fully independent path.
Everything is exponential-time and only meant for tiny n.
"""
from fractions import Fraction
from itertools import product

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)
LAZY = {-1: QUARTER, 0: HALF, 1: QUARTER}


# ---------------------------------------------------------------------------
# element algebra, written out from the definitions


def wreath_mul(q, x, y):
    """(a, f) * (b, g) on (Z/q) wr Z; q=None means Z-valued lamps."""
    a, f = x
    b, g = y
    lamps = dict(f)
    for s, v in g:
        t = s + a
        w = lamps.get(t, 0) + v
        if q is not None:
            w %= q
        if w:
            lamps[t] = w
        else:
            lamps.pop(t, None)
    return (a + b, tuple(sorted(lamps.items())))


def wreath_inv(q, x):
    a, f = x
    if q is None:
        return (-a, tuple(sorted((s - a, -v) for s, v in f)))
    return (-a, tuple(sorted((s - a, (q - v) % q) for s, v in f)))


def z2_wreath_mul(q, x, y):
    (ax, ay), f = x
    (bx, by), g = y
    lamps = dict(f)
    for (sx, sy), v in g:
        t = (sx + ax, sy + ay)
        w = (lamps.get(t, 0) + v) % q
        if w:
            lamps[t] = w
        else:
            lamps.pop(t, None)
    return ((ax + bx, ay + by), tuple(sorted(lamps.items())))


def free_mul(x, y):
    out = list(x)
    for letter in y:
        if out and out[-1] == -letter:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


def free_inv(x):
    return tuple(-letter for letter in reversed(x))


# ---------------------------------------------------------------------------
# measures


def convolve(mul, mu, nu):
    out = {}
    for x, p in mu.items():
        for y, r in nu.items():
            z = mul(x, y)
            out[z] = out.get(z, Fraction(0)) + p * r
    return out


def power(mul, e, mu, n):
    acc = {e: Fraction(1)}
    for _ in range(n):
        acc = convolve(mul, acc, mu)
    return acc


def sws_lamplighter(q):
    """switch-walk-switch on (Z/q) wr Z with the lazy base step."""
    switch = {}
    for c in range(q):
        el = (0, ()) if c == 0 else (0, ((0, c),))
        switch[el] = Fraction(1, q)
    walk = {(d, ()): p for d, p in LAZY.items()}
    mul = lambda x, y: wreath_mul(q, x, y)
    return convolve(mul, convolve(mul, switch, walk), switch)


def sws_zwrz():
    """switch-walk-switch on Z wr Z; a switch is one lazy lamp move."""
    switch = {}
    for d, p in LAZY.items():
        el = (0, ()) if d == 0 else (0, ((0, d),))
        switch[el] = switch.get(el, Fraction(0)) + p
    walk = {(d, ()): p for d, p in LAZY.items()}
    mul = lambda x, y: wreath_mul(None, x, y)
    return convolve(mul, convolve(mul, switch, walk), switch)


def free_step(m):
    mu = {}
    for i in range(1, m + 1):
        mu[(i,)] = Fraction(1, 2 * m)
        mu[(-i,)] = Fraction(1, 2 * m)
    return mu


def lazy_line_step():
    return {(d,): p for d, p in LAZY.items()}


def lazy_plane_step():
    mu = {(0, 0): HALF}
    for d in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        mu[d] = Fraction(1, 8)
    return mu


def lattice_mul(x, y):
    return tuple(a + b for a, b in zip(x, y))


# ---------------------------------------------------------------------------
# derived laws


def entropy(mu):
    import math
    return -sum(float(p) * math.log(float(p)) for p in mu.values() if p > 0)


def tv_right_shift(mul, inv_g, mu):
    """sum_h |mu(h) - mu(h g)| via nu(h) = mu(h g) = mu[(h g)]."""
    nu = {}
    for h, p in mu.items():
        nu[mul(h, inv_g)] = p
    keys = set(mu) | set(nu)
    return sum(abs(mu.get(h, Fraction(0)) - nu.get(h, Fraction(0)))
               for h in keys)


def free_length_law(m, n):
    """dict length -> total probability, and the per-element atom per
    length (uniform on each sphere by symmetry)."""
    mu = power(free_mul, (), free_step(m), n)
    by_len = {}
    atom = {}
    for w, p in mu.items():
        by_len[len(w)] = by_len.get(len(w), Fraction(0)) + p
        atom[len(w)] = p  # spheres are uniform; any representative works
    return by_len, atom


def free_cancel_tail(m, n, h, k):
    """P[at least k letters cancel in X_n * h], by enumeration."""
    mu = power(free_mul, (), free_step(m), n)
    total = Fraction(0)
    lh = len(h)
    for w, p in mu.items():
        depth = (len(w) + lh - len(free_mul(w, h))) // 2
        if depth >= k:
            total += p
    return total


def lazy_max_law(n):
    """Joint law of (endpoint, running max) of the lazy line walk by
    enumerating 4^n two-bit step encodings."""
    out = {}
    moves = (-1, 0, 0, 1)
    for path in product(range(4), repeat=n):
        pos = 0
        mx = 0
        for c in path:
            pos += moves[c]
            if pos > mx:
                mx = pos
        key = (pos, mx)
        out[key] = out.get(key, Fraction(0)) + Fraction(1, 4 ** n)
    return out


def set_cover_radius(xs, ys):
    """Covering radius from visited coordinate lists, via a python set."""
    visited = set(zip([int(v) for v in xs], [int(v) for v in ys]))
    visited.add((0, 0))
    r = 0
    while True:
        ring = r + 1
        ok = True
        for i in range(-ring, ring + 1):
            j = ring - abs(i)
            if (i, j) not in visited or (i, -j) not in visited:
                ok = False
                break
        if not ok:
            return r
        r = ring
