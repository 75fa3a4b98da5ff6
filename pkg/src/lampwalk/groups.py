"""Group element representations, multiplication, word metrics, and the
interval functionals used by the lamplighter machinery.

Elements are plain hashable Python values; a GroupDescriptor gives them
meaning:

=====================  ====================================================
family                 element shape
=====================  ====================================================
Zd(d)                  tuple of d ints
FiniteTable            int index into the multiplication table
WreathZOverF(q)        (base, lamps) with base an int and lamps a sorted
                       tuple of (site, value), value in 1..q-1
WreathZ2OverF(q)       ((x, y), lamps) with lamps keyed by (x, y) sites
IteratedWreathZ(j)     depth 0 is a plain int; depth j >= 1 is
                       (base, lamps) with lamp values of depth j-1
Free(m)                tuple of nonzero ints i with |i| <= m, freely
                       reduced (negative = inverse letter)
=====================  ====================================================

Lamp maps never store identity values and are kept sorted by site, so
equal elements compare and hash equal.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .errors import Caps, DEFAULT_CAPS, DomainError


# ---------------------------------------------------------------------------
# intervals


@dataclass(frozen=True)
class IntervalZ:
    """Integer interval [lo, hi]; the empty interval is the singleton
    EMPTY_INTERVAL (and is the only value allowed to have lo > hi)."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi and (self.lo, self.hi) != (0, -1):
            raise DomainError(f"interval [{self.lo}, {self.hi}] is empty; "
                              "use EMPTY_INTERVAL")

    @property
    def is_empty(self) -> bool:
        return self.lo > self.hi

    def width(self) -> int:
        return 0 if self.is_empty else self.hi - self.lo + 1

    def contains(self, other: "IntervalZ") -> bool:
        if other.is_empty:
            return True
        if self.is_empty:
            return False
        return self.lo <= other.lo and other.hi <= self.hi

    @staticmethod
    def hull(points) -> "IntervalZ":
        pts = list(points)
        if not pts:
            return EMPTY_INTERVAL
        return IntervalZ(min(pts), max(pts))


EMPTY_INTERVAL = IntervalZ(0, -1)


# ---------------------------------------------------------------------------
# descriptors


class GroupDescriptor:
    """Marker base class; concrete families below."""

    __slots__ = ()


@dataclass(frozen=True)
class Zd(GroupDescriptor):
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise DomainError("dimension must be >= 1")


@dataclass(frozen=True)
class FiniteTable(GroupDescriptor):
    """Finite group given by its multiplication table.

    table[i][j] is the index of element i * j. The generating set defaults
    to every non-identity element and must be symmetric.
    """

    table: tuple
    generators_: tuple = None

    def __post_init__(self):
        n = len(self.table)
        if n == 0 or any(len(row) != n for row in self.table):
            raise DomainError("multiplication table must be square")
        object.__setattr__(self, "table", tuple(tuple(r) for r in self.table))
        if self.generators_ is not None:
            object.__setattr__(self, "generators_", tuple(self.generators_))

    @property
    def order(self) -> int:
        return len(self.table)


@dataclass(frozen=True)
class WreathZOverF(GroupDescriptor):
    """Wreath product (Z/q) wr Z: walker on the line, cyclic lamps."""

    lamp_order: int

    def __post_init__(self):
        if self.lamp_order < 2:
            raise DomainError("lamp order must be >= 2")


@dataclass(frozen=True)
class WreathZ2OverF(GroupDescriptor):
    """Wreath product (Z/q) wr Z^2: walker on the plane, cyclic lamps."""

    lamp_order: int

    def __post_init__(self):
        if self.lamp_order < 2:
            raise DomainError("lamp order must be >= 2")


@dataclass(frozen=True)
class IteratedWreathZ(GroupDescriptor):
    """Iterated wreath product with Z base and Z innermost lamps.

    depth 0 is Z itself; depth 1 is Z wr Z; depth j nests lamp values of
    depth j-1.
    """

    depth: int

    def __post_init__(self):
        if self.depth < 0:
            raise DomainError("depth must be >= 0")

    def lamp_descriptor(self) -> "IteratedWreathZ":
        if self.depth == 0:
            raise DomainError("depth 0 has no lamps")
        return IteratedWreathZ(self.depth - 1)


@dataclass(frozen=True)
class Free(GroupDescriptor):
    rank: int

    def __post_init__(self):
        if self.rank < 1:
            raise DomainError("free rank must be >= 1")


_WREATH_FAMILIES = (WreathZOverF, WreathZ2OverF, IteratedWreathZ)


# ---------------------------------------------------------------------------
# identity / validation


def identity(desc: GroupDescriptor):
    if isinstance(desc, Zd):
        return (0,) * desc.d
    if isinstance(desc, FiniteTable):
        return _finite_identity(desc)
    if isinstance(desc, WreathZOverF):
        return (0, ())
    if isinstance(desc, WreathZ2OverF):
        return ((0, 0), ())
    if isinstance(desc, IteratedWreathZ):
        return 0 if desc.depth == 0 else (0, ())
    if isinstance(desc, Free):
        return ()
    raise DomainError(f"unknown descriptor {desc!r}")


@lru_cache(maxsize=None)
def _finite_identity(desc: FiniteTable) -> int:
    n = desc.order
    for e in range(n):
        if all(desc.table[e][j] == j and desc.table[j][e] == j
               for j in range(n)):
            return e
    raise DomainError("table has no identity element")


def validate(desc: GroupDescriptor, x) -> None:
    """Check that x has the element shape of desc; DomainError otherwise."""
    if not _valid(desc, x):
        raise DomainError(f"{x!r} is not an element of {desc!r}")


def _valid(desc, x) -> bool:
    if isinstance(desc, Zd):
        return (isinstance(x, tuple) and len(x) == desc.d
                and all(isinstance(c, int) for c in x))
    if isinstance(desc, FiniteTable):
        return isinstance(x, int) and 0 <= x < desc.order
    if isinstance(desc, WreathZOverF):
        return _valid_wreath(x, lambda s: isinstance(s, int),
                             lambda v: isinstance(v, int)
                             and 1 <= v < desc.lamp_order,
                             lambda b: isinstance(b, int))
    if isinstance(desc, WreathZ2OverF):
        pt = lambda s: (isinstance(s, tuple) and len(s) == 2
                        and all(isinstance(c, int) for c in s))
        return _valid_wreath(x, pt,
                             lambda v: isinstance(v, int)
                             and 1 <= v < desc.lamp_order, pt)
    if isinstance(desc, IteratedWreathZ):
        if desc.depth == 0:
            return isinstance(x, int)
        inner = desc.lamp_descriptor()
        return _valid_wreath(x, lambda s: isinstance(s, int),
                             lambda v: _valid(inner, v)
                             and v != identity(inner),
                             lambda b: isinstance(b, int))
    if isinstance(desc, Free):
        if not isinstance(x, tuple):
            return False
        for i, letter in enumerate(x):
            if not isinstance(letter, int) or letter == 0 \
                    or abs(letter) > desc.rank:
                return False
            if i > 0 and x[i - 1] == -letter:
                return False
        return True
    raise DomainError(f"unknown descriptor {desc!r}")


def _valid_wreath(x, site_ok, val_ok, base_ok) -> bool:
    if not (isinstance(x, tuple) and len(x) == 2):
        return False
    base, lamps = x
    if not base_ok(base) or not isinstance(lamps, tuple):
        return False
    prev = None
    for entry in lamps:
        if not (isinstance(entry, tuple) and len(entry) == 2):
            return False
        site, val = entry
        if not site_ok(site) or not val_ok(val):
            return False
        if prev is not None and not prev < site:
            return False
        prev = site
    return True


# ---------------------------------------------------------------------------
# multiplication / inverses


def multiply(desc: GroupDescriptor, x, y):
    """Group product x * y.

    For wreath families the right factor's lamps are shifted by the left
    factor's base point before pointwise lamp multiplication.
    """
    validate(desc, x)
    validate(desc, y)
    if isinstance(desc, Zd):
        return tuple(a + b for a, b in zip(x, y))
    if isinstance(desc, FiniteTable):
        return desc.table[x][y]
    if isinstance(desc, WreathZOverF):
        q = desc.lamp_order
        return _wreath_mul(x, y, lambda s, a: s + a,
                           lambda u, v: (u + v) % q, 0,
                           lambda a, b: a + b)
    if isinstance(desc, WreathZ2OverF):
        q = desc.lamp_order
        shift = lambda s, a: (s[0] + a[0], s[1] + a[1])
        return _wreath_mul(x, y, shift, lambda u, v: (u + v) % q, 0, shift)
    if isinstance(desc, IteratedWreathZ):
        if desc.depth == 0:
            return x + y
        inner = desc.lamp_descriptor()
        e = identity(inner)
        return _wreath_mul(x, y, lambda s, a: s + a,
                           lambda u, v: multiply(inner, u, v), e,
                           lambda a, b: a + b)
    if isinstance(desc, Free):
        return _free_reduce_concat(x, y)
    raise DomainError(f"unknown descriptor {desc!r}")


def _wreath_mul(x, y, shift_site, lamp_mul, lamp_id, base_add):
    a, f = x
    b, g = y
    lamps = dict(f)
    for site, val in g:
        t = shift_site(site, a)
        merged = lamp_mul(lamps[t], val) if t in lamps else val
        if merged == lamp_id:
            lamps.pop(t, None)
        else:
            lamps[t] = merged
    return (base_add(a, b), tuple(sorted(lamps.items())))


def _free_reduce_concat(x, y):
    out = list(x)
    for letter in y:
        if out and out[-1] == -letter:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


def inverse(desc: GroupDescriptor, x):
    validate(desc, x)
    if isinstance(desc, Zd):
        return tuple(-c for c in x)
    if isinstance(desc, FiniteTable):
        e = _finite_identity(desc)
        for j in range(desc.order):
            if desc.table[x][j] == e:
                return j
        raise DomainError("element has no inverse; table is not a group")
    if isinstance(desc, WreathZOverF):
        q = desc.lamp_order
        a, f = x
        return (-a, tuple(sorted((s - a, (q - v) % q) for s, v in f)))
    if isinstance(desc, WreathZ2OverF):
        q = desc.lamp_order
        (ax, ay), f = x
        return ((-ax, -ay),
                tuple(sorted(((sx - ax, sy - ay), (q - v) % q)
                             for (sx, sy), v in f)))
    if isinstance(desc, IteratedWreathZ):
        if desc.depth == 0:
            return -x
        inner = desc.lamp_descriptor()
        a, f = x
        return (-a, tuple(sorted((s - a, inverse(inner, v)) for s, v in f)))
    if isinstance(desc, Free):
        return tuple(-letter for letter in reversed(x))
    raise DomainError(f"unknown descriptor {desc!r}")


# ---------------------------------------------------------------------------
# generating sets


def generators(desc: GroupDescriptor) -> list:
    """Symmetric generating set, identity excluded.

    Line-based wreath products use the walker shifts plus every
    non-identity lamp change at the origin, so each lamp adjustment costs
    one generator move and the travel-plus-lamps length formula is exact.
    """
    if isinstance(desc, Zd):
        gens = []
        for axis in range(desc.d):
            for sign in (1, -1):
                vec = [0] * desc.d
                vec[axis] = sign
                gens.append(tuple(vec))
        return gens
    if isinstance(desc, FiniteTable):
        if desc.generators_ is not None:
            gens = list(desc.generators_)
        else:
            e = _finite_identity(desc)
            gens = [g for g in range(desc.order) if g != e]
        _check_symmetric(desc, gens)
        return gens
    if isinstance(desc, WreathZOverF):
        lamp = [(0, ((0, c),)) for c in range(1, desc.lamp_order)]
        return [(1, ()), (-1, ())] + lamp
    if isinstance(desc, WreathZ2OverF):
        moves = [((1, 0), ()), ((-1, 0), ()), ((0, 1), ()), ((0, -1), ())]
        lamp = [((0, 0), (((0, 0), c),)) for c in range(1, desc.lamp_order)]
        return moves + lamp
    if isinstance(desc, IteratedWreathZ):
        if desc.depth == 0:
            return [1, -1]
        inner = desc.lamp_descriptor()
        lamp = [(0, ((0, g),)) for g in generators(inner)]
        return [(1, ()), (-1, ())] + lamp
    if isinstance(desc, Free):
        return [(i,) for i in range(1, desc.rank + 1)] \
            + [(-i,) for i in range(1, desc.rank + 1)]
    raise DomainError(f"unknown descriptor {desc!r}")


def _check_symmetric(desc, gens) -> None:
    e = _finite_identity(desc)
    gen_set = set(gens)
    if e in gen_set:
        raise DomainError("generating set must not contain the identity")
    for g in gens:
        if inverse(desc, g) not in gen_set:
            raise DomainError("generating set must be symmetric")


# ---------------------------------------------------------------------------
# word length


def word_length(desc: GroupDescriptor, x) -> int:
    """Word length of x in the generating set of generators(desc).

    Exact for every family except WreathZ2OverF, where optimal lamp
    routing is a travelling-salesman problem; there a greedy-tour upper
    bound is returned and metric_kind(desc) reports "upper_bound".
    """
    validate(desc, x)
    if isinstance(desc, Zd):
        return sum(abs(c) for c in x)
    if isinstance(desc, FiniteTable):
        dist = _finite_distances(desc)
        if x not in dist:
            raise DomainError("element not generated by the generating set")
        return dist[x]
    if isinstance(desc, WreathZOverF):
        a, f = x
        return len(f) + _line_travel(a, [s for s, _ in f])
    if isinstance(desc, IteratedWreathZ):
        if desc.depth == 0:
            return abs(x)
        inner = desc.lamp_descriptor()
        a, f = x
        lamp_cost = sum(word_length(inner, v) for _, v in f)
        return lamp_cost + _line_travel(a, [s for s, _ in f])
    if isinstance(desc, WreathZ2OverF):
        return _z2_length_upper(x)
    if isinstance(desc, Free):
        return len(x)
    raise DomainError(f"unknown descriptor {desc!r}")


def metric_kind(desc: GroupDescriptor) -> str:
    """Whether word_length is exact for this family: "exact" or
    "upper_bound"."""
    return "upper_bound" if isinstance(desc, WreathZ2OverF) else "exact"


def _line_travel(base: int, sites) -> int:
    # Walker must sweep the hull of {0, base} and all lamp sites; the
    # cheaper sweep order saves the final |base| leg once.
    lo = min([0, base] + list(sites))
    hi = max([0, base] + list(sites))
    return 2 * (hi - lo) - abs(base)


def _z2_length_upper(x) -> int:
    (bx, by), f = x
    sites = [s for s, _ in f]
    pos = (0, 0)
    travel = 0
    remaining = list(sites)
    while remaining:
        best = min(remaining,
                   key=lambda s: abs(s[0] - pos[0]) + abs(s[1] - pos[1]))
        travel += abs(best[0] - pos[0]) + abs(best[1] - pos[1])
        pos = best
        remaining.remove(best)
    travel += abs(bx - pos[0]) + abs(by - pos[1])
    return len(f) + travel


@lru_cache(maxsize=None)
def _finite_distances(desc: FiniteTable) -> dict:
    gens = generators(desc)
    dist = {_finite_identity(desc): 0}
    frontier = [_finite_identity(desc)]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = desc.table[x][g]
                if y not in dist:
                    dist[y] = dist[x] + 1
                    nxt.append(y)
        frontier = nxt
    return dist


# ---------------------------------------------------------------------------
# interval functionals


def interval_I(desc: GroupDescriptor, x) -> IntervalZ:
    """Minimal interval containing the lamp support; empty for no lamps.

    Defined for wreath products over the line only.
    """
    _require_line_wreath(desc)
    validate(desc, x)
    _, f = x
    if not f:
        return EMPTY_INTERVAL
    return IntervalZ(f[0][0], f[-1][0])


def interval_J(desc: GroupDescriptor, x) -> IntervalZ:
    """Minimal interval containing 0, the base point, and the lamp
    support. Never empty."""
    _require_line_wreath(desc)
    validate(desc, x)
    a, f = x
    sites = [0, a] + [s for s, _ in f]
    return IntervalZ(min(sites), max(sites))


def _require_line_wreath(desc) -> None:
    if isinstance(desc, WreathZOverF):
        return
    if isinstance(desc, IteratedWreathZ) and desc.depth >= 1:
        return
    raise DomainError("interval functionals need a wreath product over Z")


# ---------------------------------------------------------------------------
# ball enumeration


def ball_enumerate(desc: GroupDescriptor, r: int,
                   caps: Caps = DEFAULT_CAPS) -> dict:
    """Exact ball B(e, r) by breadth-first search over the generating
    set; returns {element: distance}.

    Used as the ground-truth oracle for the closed-form word lengths.
    """
    if r < 0:
        raise DomainError("radius must be >= 0")
    gens = generators(desc)
    e = identity(desc)
    dist = {e: 0}
    frontier = [e]
    for layer in range(1, r + 1):
        nxt = []
        for x in frontier:
            for g in gens:
                y = multiply(desc, x, g)
                if y not in dist:
                    dist[y] = layer
                    nxt.append(y)
                    if len(dist) > caps.ball_elements:
                        from .errors import ResourceCapError
                        raise ResourceCapError("ball_elements",
                                               caps.ball_elements,
                                               f"> {len(dist)}")
        frontier = nxt
    return dist


# ---------------------------------------------------------------------------
# convenience constructors and formatting


def translation(desc: GroupDescriptor, shift):
    """Pure walker move: z^i for line-based wreaths, a lattice shift for
    the plane family."""
    if isinstance(desc, (WreathZOverF, IteratedWreathZ)):
        if isinstance(desc, IteratedWreathZ) and desc.depth == 0:
            return int(shift)
        return (int(shift), ())
    if isinstance(desc, WreathZ2OverF):
        sx, sy = shift
        return ((int(sx), int(sy)), ())
    raise DomainError("translation needs a wreath family")


def lamp_element(desc: GroupDescriptor, lamps: dict):
    """Lamp-only element (trivial base point) from {site: value}."""
    if isinstance(desc, (WreathZOverF, WreathZ2OverF)):
        q = desc.lamp_order
        items = []
        for site, val in lamps.items():
            v = val % q
            if v:
                items.append((site, v))
        base = (0, 0) if isinstance(desc, WreathZ2OverF) else 0
        return (base, tuple(sorted(items)))
    if isinstance(desc, IteratedWreathZ) and desc.depth >= 1:
        inner = desc.lamp_descriptor()
        e = identity(inner)
        items = [(s, v) for s, v in lamps.items() if v != e]
        return (0, tuple(sorted(items)))
    raise DomainError("lamp_element needs a wreath family")


def format_element(desc: GroupDescriptor, x) -> str:
    """Stable human-readable serialization used in run records.

    Lattice points print as tuples, wreath elements as base plus a sorted
    site:value lamp list, free words as signed generator letters
    (x1..xm, capital for inverse).
    """
    validate(desc, x)
    if isinstance(desc, Zd):
        return "(" + ",".join(str(c) for c in x) + ")"
    if isinstance(desc, FiniteTable):
        return f"#{x}"
    if isinstance(desc, (WreathZOverF, WreathZ2OverF)):
        base, f = x
        lamps = ",".join(f"{s}:{v}" for s, v in f)
        return f"base={base};lamps=[{lamps}]"
    if isinstance(desc, IteratedWreathZ):
        if desc.depth == 0:
            return str(x)
        inner = desc.lamp_descriptor()
        base, f = x
        lamps = ",".join(f"{s}:{{{format_element(inner, v)}}}" for s, v in f)
        return f"base={base};lamps=[{lamps}]"
    if isinstance(desc, Free):
        if not x:
            return "e"
        letters = []
        for i in x:
            name = f"x{abs(i)}"
            letters.append(name.upper() if i < 0 else name)
        return " ".join(letters)
    raise DomainError(f"unknown descriptor {desc!r}")
