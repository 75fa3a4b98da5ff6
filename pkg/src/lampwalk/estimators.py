"""Seeded Monte-Carlo and semi-exact estimators.

Where no closed kernel exists (iterated wreath products, the plane
lamplighter), statistics come from simulated trajectories: drift curves
with fitted exponents, inner-lamp drift, tall-lamp events, the covering
radius of the planar walk, invariance diagnostics, and anti-invariance
witnesses.  Exact lattice kernels back the nilpotent ratio check.

Reproducibility: every estimator derives all randomness from a single
SeedSequence in a fixed order, so identical seed and parameters give
bit-identical output; there is no worker-count dependence.  Drift curves
spawn one child stream per grid point, making each point's estimate
independent of which other points share the grid; the covering-radius
grid instead checkpoints one trajectory per sample, an exact monotone
coupling across n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import Caps, DEFAULT_CAPS, DomainError
from .groups import (GroupDescriptor, IteratedWreathZ, WreathZOverF,
                     WreathZ2OverF, Zd, generators, identity, word_length,
                     metric_kind)
from .measures import sample_trajectory

# lazy nearest-neighbor base step (1/4, 1/2, 1/4), shared by every
# line-based walk here; lookup maps two random bits to a move
_LAZY_MOVE = np.array([-1, 0, 0, 1], dtype=np.int8)
_LAZY_VAR = 0.5

# planar lazy step: 1/2 hold, 1/8 per neighbor
_PLANE_DX = np.array([0, 0, 0, 0, 1, -1, 0, 0], dtype=np.int8)
_PLANE_DY = np.array([0, 0, 0, 0, 0, 0, 1, -1], dtype=np.int8)

DEFAULT_DRIFT_GRID = tuple(2 ** k for k in range(8, 17))
DEFAULT_INNER_GRID = tuple(2 ** k for k in range(10, 19))


def _line_margin(n_max: int) -> int:
    # 8 sigma of the base walk; excursions beyond it have probability
    # ~ 1e-15 per run and raise rather than corrupt memory
    return int(8.0 * math.sqrt(_LAZY_VAR * n_max)) + 8


def wilson_interval(successes: int, trials: int, z: float = 1.96):
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise DomainError("trials must be positive")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


# ---------------------------------------------------------------------------
# exponent fitting


@dataclass(frozen=True)
class FitResult:
    exponent: float
    intercept: float
    stderr: float
    r_squared: float
    flagged: bool
    note: str = ""


def fit_exponent(ns, means, stderrs, r2_floor: float = 0.99) -> FitResult:
    """Weighted least squares for log mean = alpha log n + const.

    Weights are 1/SE^2 of the log-means; a fit with R^2 below the floor
    is flagged, never silently reported.
    """
    ns = np.asarray(ns, dtype=float)
    means = np.asarray(means, dtype=float)
    stderrs = np.asarray(stderrs, dtype=float)
    keep = (ns > 0) & (means > 0)
    note = ""
    if keep.sum() < len(ns):
        note = "nonpositive means excluded from fit"
    if keep.sum() < 2:
        return FitResult(float("nan"), float("nan"), float("inf"), 0.0,
                         True, "fewer than two usable grid points")
    x = np.log(ns[keep])
    y = np.log(means[keep])
    se_log = np.where(means[keep] > 0, stderrs[keep] / means[keep], np.inf)
    w = np.where(se_log > 0, 1.0 / se_log ** 2, 1.0)
    w = np.where(np.isfinite(w), w, np.max(w[np.isfinite(w)], initial=1.0))
    sw = w.sum()
    xbar = (w * x).sum() / sw
    ybar = (w * y).sum() / sw
    sxx = (w * (x - xbar) ** 2).sum()
    slope = (w * (x - xbar) * (y - ybar)).sum() / sxx
    intercept = ybar - slope * xbar
    resid = y - slope * x - intercept
    ss_res = (w * resid ** 2).sum()
    ss_tot = (w * (y - ybar) ** 2).sum()
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    dof = max(1, keep.sum() - 2)
    stderr = math.sqrt(max(ss_res / dof, 0.0) / sxx)
    flagged = r2 < r2_floor
    if flagged:
        note = (note + "; " if note else "") + f"R^2 = {r2:.4f} below {r2_floor}"
    return FitResult(float(slope), float(intercept), float(stderr),
                     float(r2), flagged, note)


# ---------------------------------------------------------------------------
# wreath-over-line trajectory kernels


def _checkpoint_stats_finite(lamps, pos, off):
    """Word length per sample for Z wr (Z/F) states."""
    nz = lamps != 0
    count = nz.sum(axis=1)
    first = nz.argmax(axis=1) - off
    last = (lamps.shape[1] - 1 - nz[:, ::-1].argmax(axis=1)) - off
    has = count > 0
    lo = np.minimum(np.where(has, first, 0), np.minimum(0, pos))
    hi = np.maximum(np.where(has, last, 0), np.maximum(0, pos))
    return count + 2 * (hi - lo) - np.abs(pos)


def _checkpoint_stats_zlamps(lamps, pos, off):
    """Word length per sample for Z wr Z states: sum of |values| + travel."""
    nz = lamps != 0
    total = np.abs(lamps).sum(axis=1, dtype=np.int64)
    first = nz.argmax(axis=1) - off
    last = (lamps.shape[1] - 1 - nz[:, ::-1].argmax(axis=1)) - off
    has = nz.any(axis=1)
    lo = np.minimum(np.where(has, first, 0), np.minimum(0, pos))
    hi = np.maximum(np.where(has, last, 0), np.maximum(0, pos))
    return total + 2 * (hi - lo) - np.abs(pos)


def _run_wreath_line(kind, lamp_order, n_grid, samples, rng,
                     keep_final_lamps=False, visit_window=None):
    """Drive `samples` switch-walk-switch trajectories to max(n_grid).

    kind 'finite': lamps in Z/lamp_order, switch adds a uniform value.
    kind 'z': lamps in Z, switch adds a lazy (1/4,1/2,1/4) move.
    Returns (lengths, lamps, pos, off, window visit counts); lamps only
    when keep_final_lamps, counts only when visit_window = (lo, hi).
    """
    n_grid = sorted(n_grid)
    n_max = n_grid[-1]
    off = _line_margin(n_max)
    width = 2 * off + 1
    if kind == "finite":
        # int16 arithmetic before the reduction avoids uint8 wraparound
        dtype = np.uint8 if lamp_order <= 255 else np.int64
    else:
        dtype = np.int32
    lamps = np.zeros((samples, width), dtype=dtype)
    pos = np.zeros(samples, dtype=np.int32)
    rows = np.arange(samples)
    lengths = np.zeros((len(n_grid), samples), dtype=np.int64)
    grid_iter = iter(enumerate(n_grid))
    next_idx, next_n = next(grid_iter)

    def switch():
        idx = pos + off
        if kind == "finite":
            u = rng.integers(0, lamp_order, samples)
            lamps[rows, idx] = (lamps[rows, idx].astype(np.int64) + u) \
                % lamp_order
        else:
            lamps[rows, idx] += _LAZY_MOVE[rng.integers(0, 4, samples)]

    if visit_window is not None:
        win_lo, win_hi = visit_window
        win_visits = np.zeros((samples, win_hi - win_lo + 1), dtype=np.int64)
        if win_lo <= 0 <= win_hi:
            win_visits[:, -win_lo] = 1
    else:
        win_visits = None

    step = 0
    while next_n == 0:
        lengths[next_idx] = 0
        next_idx, next_n = next(grid_iter, (None, None))
        if next_n is None:
            break
    while next_n is not None:
        switch()
        pos += _LAZY_MOVE[rng.integers(0, 4, samples)]
        switch()
        step += 1
        if win_visits is not None:
            rel = pos - win_lo
            inside = (rel >= 0) & (rel <= win_hi - win_lo)
            win_visits[rows[inside], rel[inside]] += 1
        if step == next_n:
            if np.abs(pos).max() >= off:
                raise RuntimeError("trajectory escaped the lamp buffer")
            if kind == "finite":
                lengths[next_idx] = _checkpoint_stats_finite(lamps, pos, off)
            else:
                lengths[next_idx] = _checkpoint_stats_zlamps(lamps, pos, off)
            next_idx, next_n = next(grid_iter, (None, None))
    if not keep_final_lamps:
        lamps = None
    return lengths, lamps, pos, off, win_visits


# ---------------------------------------------------------------------------
# drift curves


@dataclass(frozen=True)
class DriftCurve:
    desc: GroupDescriptor
    n_grid: tuple
    means: tuple
    stderrs: tuple
    samples: int
    seed: int
    fit: FitResult
    metric: str  # "exact" or "upper_bound"


def _drift_grid_check(n_grid, samples, caps):
    if not n_grid or any(int(n) < 0 for n in n_grid):
        raise DomainError("n grid must be nonempty and nonnegative")
    caps.check("trajectory_steps", max(int(n) for n in n_grid))


def _grid_rng(seed: int, n: int) -> np.random.Generator:
    # one stream per (seed, n): the estimate at a given n does not
    # depend on which other grid points were requested
    ss = np.random.SeedSequence(seed, spawn_key=(int(n),))
    return np.random.Generator(np.random.PCG64(ss))


def drift_curve(desc: GroupDescriptor, n_grid=DEFAULT_DRIFT_GRID,
                samples: int = 10000, seed: int = 0,
                caps: Caps = DEFAULT_CAPS) -> DriftCurve:
    """MC estimate of the drift L(n) = E[word length of X_n] with a
    fitted growth exponent.

    Each grid point runs on its own derived seed.  Wreath families walk
    by their switch-walk-switch measure, lattices and table groups by
    the lazy uniform generator step.  Groups whose word length is only
    a surrogate carry metric="upper_bound".
    """
    _drift_grid_check(n_grid, samples, caps)
    n_grid = tuple(sorted(int(n) for n in n_grid))
    metric = metric_kind(desc)
    lengths = np.zeros((len(n_grid), samples), dtype=np.int64)
    for i, n in enumerate(n_grid):
        rng = _grid_rng(seed, n)
        if isinstance(desc, Zd) and desc.d == 1:
            lengths[i] = _run_z_line(n, samples, rng)
        elif isinstance(desc, WreathZOverF):
            lengths[i] = _run_wreath_line("finite", desc.lamp_order,
                                          (n,), samples, rng)[0][0]
        elif isinstance(desc, IteratedWreathZ) and desc.depth == 1:
            lengths[i] = _run_wreath_line("z", None, (n,), samples, rng)[0][0]
        else:
            lengths[i] = _run_generic_point(desc, n, samples, rng, caps)

    means = lengths.mean(axis=1)
    stderrs = lengths.std(axis=1, ddof=1) / math.sqrt(samples)
    fit = fit_exponent(n_grid, means, stderrs)
    return DriftCurve(desc=desc, n_grid=n_grid, means=tuple(map(float, means)),
                      stderrs=tuple(map(float, stderrs)), samples=samples,
                      seed=seed, fit=fit, metric=metric)


def _run_z_line(n, samples, rng):
    pos = np.zeros(samples, dtype=np.int64)
    for start in range(0, n, 4096):
        block = min(4096, n - start)
        moves = _LAZY_MOVE[rng.integers(0, 4, (samples, block))]
        pos += moves.sum(axis=1, dtype=np.int64)
    return np.abs(pos)


def _walk_measure(desc):
    from .measures import (FiniteMeasure, sws_measure)
    if isinstance(desc, (WreathZOverF, WreathZ2OverF, IteratedWreathZ)):
        return sws_measure(desc, mode="float")
    gens = generators(desc)
    w = {identity(desc): 0.5}
    for s in gens:
        w[s] = w.get(s, 0.0) + 0.5 / len(gens)
    return FiniteMeasure(desc, w, "float")


def _run_generic_point(desc, n, samples, rng, caps):
    # slow path: explicit group products; meant for small n
    caps.check("trajectory_steps", samples * n)
    mu = _walk_measure(desc)
    out = np.zeros(samples, dtype=np.int64)
    for j in range(samples):
        traj = sample_trajectory(mu, n, rng)
        out[j] = word_length(desc, traj[n])
    return out


# ---------------------------------------------------------------------------
# inner-value drift for iterated wreath products


@dataclass(frozen=True)
class InnerDriftCurve:
    depth: int
    n_grid: tuple
    value_means: tuple
    value_stderrs: tuple
    visits_means: tuple
    visits_stderrs: tuple
    samples: int
    seed: int
    value_fit: FitResult
    visits_fit: FitResult


def inner_value_drift(j: int, n_grid=DEFAULT_INNER_GRID,
                      samples: int = 10000, seed: int = 0,
                      caps: Caps = DEFAULT_CAPS) -> InnerDriftCurve:
    """E|innermost lamp value at the basepoint| for the depth-j iterated
    wreath walk, with the origin visit-count marginal.

    Only the value at the nested basepoint is needed, and right
    multiplication by an increment continues the inner walk, so the
    state per sample is a constant number of integers at any depth.
    """
    if j not in (1, 2):
        raise DomainError("depth must be 1 or 2")
    _drift_grid_check(n_grid, samples, caps)
    n_grid = tuple(sorted(int(n) for n in n_grid))
    vals = np.zeros((len(n_grid), samples), dtype=np.int64)
    hits = np.zeros((len(n_grid), samples), dtype=np.int64)
    for i, n in enumerate(n_grid):
        vals[i], hits[i] = _inner_point(j, n, samples, _grid_rng(seed, n))

    vm = vals.mean(axis=1)
    vs = vals.std(axis=1, ddof=1) / math.sqrt(samples)
    hm = hits.mean(axis=1)
    hs = hits.std(axis=1, ddof=1) / math.sqrt(samples)
    return InnerDriftCurve(depth=j, n_grid=n_grid,
                           value_means=tuple(map(float, vm)),
                           value_stderrs=tuple(map(float, vs)),
                           visits_means=tuple(map(float, hm)),
                           visits_stderrs=tuple(map(float, hs)),
                           samples=samples, seed=seed,
                           value_fit=fit_exponent(n_grid, vm, vs),
                           visits_fit=fit_exponent(n_grid, hm, hs))


def _inner_point(j, n, samples, rng):
    """(|innermost value at 0|, visit count of 0) after n outer steps."""
    pos = np.zeros(samples, dtype=np.int32)
    inner_pos = np.zeros(samples, dtype=np.int32)  # used at depth 2
    f0 = np.zeros(samples, dtype=np.int64)
    visits = np.ones(samples, dtype=np.int64)  # X_0 = e sits at 0

    def inner_step(mask):
        # one depth-(j-1) increment on the lamp at outer site 0; only
        # the value at the nested basepoint is tracked
        if j == 1:
            f0[mask] += _LAZY_MOVE[rng.integers(0, 4, int(mask.sum()))]
        else:
            at0 = mask & (inner_pos == 0)
            f0[at0] += _LAZY_MOVE[rng.integers(0, 4, int(at0.sum()))]
            inner_pos[mask] += _LAZY_MOVE[rng.integers(0, 4, int(mask.sum()))]
            at0 = mask & (inner_pos == 0)
            f0[at0] += _LAZY_MOVE[rng.integers(0, 4, int(at0.sum()))]

    for _ in range(n):
        inner_step(pos == 0)
        pos += _LAZY_MOVE[rng.integers(0, 4, samples)]
        inner_step(pos == 0)
        visits += pos == 0
    return np.abs(f0), visits


# ---------------------------------------------------------------------------
# tall-lamp event and the anti-invariance witness on Z wr Z


@dataclass(frozen=True)
class EventEstimate:
    n: int
    threshold: float
    window: tuple
    probability: float
    wilson: tuple
    samples: int
    seed: int


def lamp_height_event(n: int, C: float, samples: int = 4096, seed: int = 0,
                      a: float = 0.4, caps: Caps = DEFAULT_CAPS) -> EventEstimate:
    """P[exists y, 0 < y < n^a: |f_n(y)| >= C sqrt(n ln n)] on Z wr Z.

    The site window is the open interval the construction searches; at
    n = 1 it is empty and the probability is zero.
    """
    if C <= 0:
        raise DomainError("C must be positive")
    if n < 0:
        raise DomainError("n must be >= 0")
    caps.check("trajectory_steps", n)
    win_hi = math.ceil(n ** a) if n > 0 else 1
    window = (1, win_hi - 1)  # inclusive; empty when win_hi <= 1
    thr = C * math.sqrt(n * math.log(n)) if n > 1 else 0.0
    if window[1] < window[0] or n == 0:
        return EventEstimate(n, thr, window, 0.0, (0.0, 0.0), samples, seed)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    _, lamps, _, off, _ = _run_wreath_line("z", None, (n,), samples, rng,
                                           keep_final_lamps=True)
    sl = lamps[:, off + window[0]: off + window[1] + 1]
    tall = np.abs(sl).max(axis=1, initial=0) >= thr
    hits = int(tall.sum())
    return EventEstimate(n, thr, window, hits / samples,
                         wilson_interval(hits, samples), samples, seed)


@dataclass(frozen=True)
class WitnessReport:
    desc: GroupDescriptor
    n: int
    witness: object
    threshold: float
    window: tuple
    shift: float
    magnitude: int
    event_mass: float
    event_wilson: tuple
    translate_mass: float
    translate_wilson: tuple
    conditioning_freq: float
    conditional_event_mass: float
    conditional_translate_mass: float
    samples: int
    seed: int
    note: str = ""


def default_shift(n: int) -> float:
    """The slowly growing shift C(n) = ln ln (n + e^e)."""
    return math.log(math.log(n + math.exp(math.e)))


def anti_invariance_witness(desc: GroupDescriptor, n: int,
                            samples: int = 4096, seed: int = 0,
                            a: float = 0.4, c1: float = 0.25,
                            shift: float | None = None,
                            delta: float = 0.05,
                            caps: Caps = DEFAULT_CAPS) -> WitnessReport:
    """Witness element g with mu^n(A) large but mu^n(g A) small.

    Z wr Z: A = {exists y in (0, n^a): f_n(y) >= theta} with
    theta = c1 n^(1/4) sqrt(ln n).  The witness raises every window
    lamp by m = ceil(shift * sqrt(n) / sqrt(ln n)), so g^(-1) X lies in
    A only when some window lamp clears theta + m; the event and its
    translate are evaluated on the same trajectories, making the
    monotonicity in the shift exact.  Default shift C(n) =
    ln ln (n + e^e).  The report also conditions on every window site
    collecting at least delta sqrt(n) visits, the rejection filter the
    estimates may be transferred through.

    Z^2 wr F: A = {lamp at the probe site is off}; the witness lights
    that site, so the translate requires the site to have been visited
    and to hold one specific value.  The probe sits past the covering
    radius at distance ceil(exp(sqrt(ln n))); conditioning is on the
    probe staying unvisited.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    caps.check("trajectory_steps", n)
    cn = default_shift(n) if shift is None else float(shift)
    if cn < 0:
        raise DomainError("shift must be >= 0")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))

    if isinstance(desc, IteratedWreathZ) and desc.depth == 1:
        win_hi = math.ceil(n ** a)
        if win_hi <= 1:
            # empty site window: no witness exists yet, report the
            # degenerate identity with both masses zero
            return WitnessReport(desc=desc, n=n, witness=identity(desc),
                                 threshold=0.0, window=(1, 0), shift=cn,
                                 magnitude=0, event_mass=0.0,
                                 event_wilson=(0.0, 0.0),
                                 translate_mass=0.0,
                                 translate_wilson=(0.0, 0.0),
                                 conditioning_freq=0.0,
                                 conditional_event_mass=0.0,
                                 conditional_translate_mass=0.0,
                                 samples=samples, seed=seed,
                                 note="empty window (0, n^a)")
        window = (1, win_hi - 1)
        theta = c1 * n ** 0.25 * math.sqrt(math.log(n))
        mag = math.ceil(cn * math.sqrt(n) / math.sqrt(math.log(n)))
        _, lamps, _, off, win_visits = _run_wreath_line(
            "z", None, (n,), samples, rng,
            keep_final_lamps=True, visit_window=window)
        sl = lamps[:, off + window[0]: off + window[1] + 1]
        peak = sl.max(axis=1).astype(np.int64)
        event = peak >= theta
        translate = peak >= theta + mag
        cond = win_visits.min(axis=1) >= delta * math.sqrt(n)
        witness = (0, tuple((y, mag) for y in range(window[0],
                                                    window[1] + 1))) \
            if mag > 0 else identity(desc)
        note = ""
    elif isinstance(desc, WreathZ2OverF):
        probe = (math.ceil(math.exp(math.sqrt(math.log(n)))), 0)
        mag = 1
        window = probe
        theta = 0.0
        visited, value = _plane_site_marginal(desc.lamp_order, n, probe,
                                              samples, rng)
        event = value == 0
        # x in gA iff the lamp of g^-1 x at the probe is zero, i.e. the
        # walk wrote exactly mag there; that forces a visit
        translate = value == mag % desc.lamp_order
        cond = ~visited
        witness = ((0, 0), ((probe, mag),))
        note = "probe past the covering radius; translate needs a visited site"
    else:
        raise DomainError("witness construction needs Z wr Z or Z^2 wr F")

    ev = int(event.sum())
    tr = int(translate.sum())
    nc = int(cond.sum())
    return WitnessReport(desc=desc, n=n, witness=witness, threshold=theta,
                         window=window, shift=cn, magnitude=mag,
                         event_mass=ev / samples,
                         event_wilson=wilson_interval(ev, samples),
                         translate_mass=tr / samples,
                         translate_wilson=wilson_interval(tr, samples),
                         conditioning_freq=nc / samples,
                         conditional_event_mass=(
                             int((event & cond).sum()) / nc if nc else 0.0),
                         conditional_translate_mass=(
                             int((translate & cond).sum()) / nc if nc else 0.0),
                         samples=samples, seed=seed, note=note)


def _plane_site_marginal(lamp_order, n, site, samples, rng):
    """(visited flag, final lamp value) at one site of the Z^2 wr F walk."""
    sx, sy = site
    px = np.zeros(samples, dtype=np.int32)
    py = np.zeros(samples, dtype=np.int32)
    visited = (px == sx) & (py == sy)
    value = np.zeros(samples, dtype=np.int64)

    def switch():
        at = (px == sx) & (py == sy)
        k = int(at.sum())
        if k:
            value[at] += rng.integers(0, lamp_order, k)
        visited[:] |= at

    for _ in range(n):
        switch()
        move = rng.integers(0, 8, samples)
        px += _PLANE_DX[move]
        py += _PLANE_DY[move]
        switch()
    value %= lamp_order
    return visited, value


# ---------------------------------------------------------------------------
# covering radius of the planar walk


@dataclass(frozen=True)
class CoverRadiusSample:
    n: int
    radii: tuple
    median: float
    quantiles: dict
    samples: int
    seed: int


def cover_radius(n: int, samples: int = 64, seed: int = 0,
                 caps: Caps = DEFAULT_CAPS) -> CoverRadiusSample:
    """Largest r with the L1 ball B(0, r) fully visited by the lazy
    planar walk, per trajectory.

    Per-sample random streams depend only on the seed and sample index,
    so runs at nested n are monotone-coupled prefix-for-prefix.
    """
    grid = cover_radius_grid((n,), samples, seed, caps)
    radii = tuple(int(r) for r in grid[:, 0])
    arr = np.array(radii)
    qs = {q: float(np.quantile(arr, q)) for q in (0.1, 0.25, 0.5, 0.75, 0.9)}
    return CoverRadiusSample(n=n, radii=radii, median=float(np.median(arr)),
                             quantiles=qs, samples=samples, seed=seed)


def cover_radius_grid(n_grid, samples: int = 64, seed: int = 0,
                      caps: Caps = DEFAULT_CAPS) -> np.ndarray:
    """Covering radii at several checkpoint times, one shared trajectory
    per sample; returns array (samples, len(n_grid))."""
    n_grid = sorted(int(n) for n in n_grid)
    if not n_grid or n_grid[0] < 0:
        raise DomainError("n grid must be nonempty and nonnegative")
    caps.check("trajectory_steps", n_grid[-1])
    n_max = n_grid[-1]
    margin = int(8.0 * math.sqrt(0.25 * n_max)) + 8
    width = 2 * margin + 1
    visited = np.zeros((width, width), dtype=bool)
    out = np.zeros((samples, len(n_grid)), dtype=np.int64)
    ss = np.random.SeedSequence(seed)
    children = ss.spawn(samples)
    for s, child in enumerate(children):
        rng = np.random.Generator(np.random.PCG64(child))
        visited[:] = False
        visited[margin, margin] = True
        x = y = 0
        done = 0
        for gi, n_stop in enumerate(n_grid):
            while done < n_stop:
                block = min(8192, n_stop - done)
                moves = rng.integers(0, 8, block)
                xs = x + np.cumsum(_PLANE_DX[moves], dtype=np.int64)
                ys = y + np.cumsum(_PLANE_DY[moves], dtype=np.int64)
                if np.abs(xs).max() >= margin or np.abs(ys).max() >= margin:
                    raise RuntimeError("trajectory escaped the grid buffer")
                visited[xs + margin, ys + margin] = True
                x, y = int(xs[-1]), int(ys[-1])
                done += block
            out[s, gi] = _covered_ball_radius(visited, margin)
    return out


def _covered_ball_radius(visited, margin) -> int:
    r = 0
    while r < margin - 1:
        ring = r + 1
        i = np.arange(-ring, ring + 1)
        j = ring - np.abs(i)
        up = visited[i + margin, j + margin]
        down = visited[i + margin, -j + margin]
        if not (up.all() and down.all()):
            return r
        r = ring
    return r


# ---------------------------------------------------------------------------
# invariance diagnostics on Z^2 wr F


@dataclass(frozen=True)
class InvarianceDiagnostic:
    g: object
    n: int
    kind: str
    upper: float | None
    upper_se: float | None
    lower: float | None
    event_fail: dict
    samples: int
    seed: int
    note: str = ""


def z2f_invariance_bound(lamp_order: int, n: int, g, samples: int = 1024,
                         seed: int = 0, caps: Caps = DEFAULT_CAPS
                         ) -> InvarianceDiagnostic:
    """TV diagnostics for a single increment g on Z^2 wr (Z/lamp_order).

    Lamp-only g: conditioned on the base path visiting all of supp(g),
    lamp values there are independent uniforms (sums of at least one
    uniform switch), so right multiplication by g is invisible:
    TV <= 2 P[supp(g) not contained in the visited set], estimated by MC.

    Translation g: the exact TV of the projected planar walk is a lower
    bound (projections contract TV); the failure probabilities of the
    covering events (balls of radius 2r'' around the origin, around the
    endpoint, and around the endpoint at time n - T with T = r'(n)^2)
    are reported as the conditioning diagnostic.
    """
    if lamp_order < 2:
        raise DomainError("lamp order must be >= 2")
    if n < 0:
        raise DomainError("n must be >= 0")
    caps.check("trajectory_steps", n)
    desc = WreathZ2OverF(lamp_order)
    base, lamps = g
    if g == identity(desc):
        return InvarianceDiagnostic(g, n, "identity", 0.0, 0.0, 0.0, {},
                                    samples, seed)
    if base == (0, 0) and lamps:
        sites = [s for s, _ in lamps]
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
        misses = _plane_support_miss(sites, n, samples, rng)
        p = misses / samples
        upper = 2.0 * p
        se = 2.0 * math.sqrt(max(p * (1 - p), 0.0) / samples)
        return InvarianceDiagnostic(g, n, "lamp", upper, se, None, {},
                                    samples, seed)
    if not lamps:
        return _translation_diagnostic(g, n, samples, seed, caps)
    raise DomainError("mixed increments are not diagnosed; "
                      "split g into a lamp part and a translation")


def _plane_support_miss(sites, n, samples, rng):
    sx = np.array([s[0] for s in sites], dtype=np.int64)
    sy = np.array([s[1] for s in sites], dtype=np.int64)
    px = np.zeros(samples, dtype=np.int64)
    py = np.zeros(samples, dtype=np.int64)
    seen = (px[:, None] == sx) & (py[:, None] == sy)
    for start in range(0, n, 512):
        block = min(512, n - start)
        mx = _PLANE_DX[rng.integers(0, 8, (samples, block))]
        my = _PLANE_DY[rng.integers(0, 8, (samples, block))]
        xs = px[:, None] + np.cumsum(mx, axis=1, dtype=np.int64)
        ys = py[:, None] + np.cumsum(my, axis=1, dtype=np.int64)
        seen |= ((xs[:, :, None] == sx) & (ys[:, :, None] == sy)).any(axis=1)
        px = xs[:, -1]
        py = ys[:, -1]
    return int((~seen.all(axis=1)).sum())


def plane_law(n: int, caps: Caps = DEFAULT_CAPS) -> np.ndarray:
    """Exact n-step law of the lazy planar walk, array (2n+1) x (2n+1).

    Fourier product: the step's characteristic function is real, and a
    transform length above 2n+1 makes the circular convolution exact.
    """
    support = (2 * n + 1) ** 2
    caps.check("convolution_support", support)
    try:
        from scipy.fft import next_fast_len
        size = next_fast_len(2 * n + 2, real=True)
    except ImportError:
        size = 1
        while size < 2 * n + 2:
            size *= 2
    t1 = 2.0 * np.pi * np.fft.fftfreq(size)
    t2 = 2.0 * np.pi * np.fft.rfftfreq(size)
    char = 0.5 + 0.25 * np.cos(t1)[:, None] + 0.25 * np.cos(t2)[None, :]
    law = np.fft.irfft2(char ** n, s=(size, size))
    law = np.maximum(law, 0.0)
    idx = np.arange(-n, n + 1) % size
    return law[np.ix_(idx, idx)]


def _translation_diagnostic(g, n, samples, seed, caps):
    base, _ = g
    t = (int(base[0]), int(base[1]))
    law = plane_law(n, caps)
    shifted = np.zeros_like(law)
    src_x = slice(max(0, -t[0]), law.shape[0] - max(0, t[0]))
    dst_x = slice(max(0, t[0]), law.shape[0] - max(0, -t[0]))
    src_y = slice(max(0, -t[1]), law.shape[1] - max(0, t[1]))
    dst_y = slice(max(0, t[1]), law.shape[1] - max(0, -t[1]))
    shifted[dst_x, dst_y] = law[src_x, src_y]
    lower = float(np.abs(law - shifted).sum())

    # covering events; scales follow r <= r' <= r'' <= r_cov
    r = abs(t[0]) + abs(t[1])
    r1 = max(2 * r, 2)
    radii = cover_radius_grid((max(n - r1 * r1, 0), n), samples, seed, caps)
    r_cov = float(np.median(radii[:, 1]))
    r2 = max(int(math.sqrt(max(r_cov, 1.0) * r1)), r1)
    fails = _covering_event_fails(n, r1, r2, samples, seed)
    upper = 2.0 * fails["any"]
    return InvarianceDiagnostic(g, n, "translation", upper, None, lower,
                                fails, samples, seed,
                                note=f"r'={r1} r''={r2} T={r1 * r1}")


def _covering_event_fails(n, r1, r2, samples, seed):
    T = r1 * r1
    n_early = max(n - T, 0)
    margin = int(8.0 * math.sqrt(0.25 * max(n, 1))) + 8
    width = 2 * margin + 1
    visited = np.zeros((width, width), dtype=bool)
    fail1 = fail2 = fail3 = fail_any = 0
    ss = np.random.SeedSequence(seed)
    for child in ss.spawn(samples):
        rng = np.random.Generator(np.random.PCG64(child))
        visited[:] = False
        visited[margin, margin] = True
        x = y = 0
        x_early = y_early = 0
        early_cov = 0
        done = 0
        for stop, tag in ((n_early, "early"), (n, "late")):
            while done < stop:
                block = min(8192, stop - done)
                moves = rng.integers(0, 8, block)
                xs = x + np.cumsum(_PLANE_DX[moves], dtype=np.int64)
                ys = y + np.cumsum(_PLANE_DY[moves], dtype=np.int64)
                if np.abs(xs).max() >= margin or np.abs(ys).max() >= margin:
                    raise RuntimeError("trajectory escaped the grid buffer")
                visited[xs + margin, ys + margin] = True
                x, y = int(xs[-1]), int(ys[-1])
                done += block
            if tag == "early":
                x_early, y_early = x, y
                early_cov = _ball_covered_around(visited, margin, x, y, 2 * r2)
        e1 = not _ball_covered_around(visited, margin, 0, 0, 2 * r2)
        e2 = not _ball_covered_around(visited, margin, x, y, 2 * r2)
        e3 = (not early_cov) or (abs(x - x_early) + abs(y - y_early) > r2)
        fail1 += e1
        fail2 += e2
        fail3 += e3
        fail_any += e1 or e2 or e3
    return {"origin_ball": fail1 / samples, "endpoint_ball": fail2 / samples,
            "early_ball": fail3 / samples, "any": fail_any / samples}


def _ball_covered_around(visited, margin, cx, cy, r) -> bool:
    if r <= 0:
        return True
    for ring in range(0, r + 1):
        i = np.arange(-ring, ring + 1)
        j = ring - np.abs(i)
        xi = cx + i + margin
        if xi.min() < 0 or xi.max() >= visited.shape[0]:
            return False
        up = visited[xi, np.clip(cy + j + margin, 0, visited.shape[1] - 1)]
        down = visited[xi, np.clip(cy - j + margin, 0, visited.shape[1] - 1)]
        if not (up.all() and down.all()):
            return False
    return True


# ---------------------------------------------------------------------------
# nilpotent (lattice) ratio check


@dataclass(frozen=True)
class NilpotentCheck:
    d: int
    n: int
    eps: float
    K: float
    deviation: float


def nilpotent_check(d: int, n: int, eps: float, K: float = 1.0,
                    caps: Caps = DEFAULT_CAPS) -> NilpotentCheck:
    """sup over l(g) <= K sqrt(n), 0 < l(h) <= eps sqrt(n) of
    |mu^n(g h)/mu^n(g) - 1| for the lazy walk on Z^d, exact kernels."""
    if d not in (1, 2):
        raise DomainError("d must be 1 or 2")
    if n < 1:
        raise DomainError("n must be >= 1")
    if eps <= 0 or K <= 0:
        raise DomainError("eps and K must be positive")
    sq = math.sqrt(n)
    if d == 1:
        from .linedp import default_step, endpoint_law_float
        caps.check("convolution_support", 2 * n + 1)
        offset, probs = endpoint_law_float(default_step(), n)
        center = -offset
        gmax = int(K * sq)
        hmax = int(eps * sq)
        dev = 0.0
        for h in range(-hmax, hmax + 1):
            if h == 0:
                continue
            g = np.arange(-gmax, gmax + 1)
            num = probs[center + g + h]
            den = probs[center + g]
            dev = max(dev, float(np.max(np.abs(num / den - 1.0))))
        return NilpotentCheck(d, n, eps, K, dev)
    law = plane_law(n, caps)
    c = n  # origin index
    gmax = int(K * sq)
    hmax = int(eps * sq)
    xs = np.arange(-gmax, gmax + 1)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    ball = np.abs(gx) + np.abs(gy) <= gmax
    dev = 0.0
    for hx in range(-hmax, hmax + 1):
        for hy in range(-hmax + abs(hx), hmax - abs(hx) + 1):
            if hx == 0 and hy == 0:
                continue
            num = law[c + gx + hx, c + gy + hy][ball]
            den = law[c + gx, c + gy][ball]
            dev = max(dev, float(np.max(np.abs(num / den - 1.0))))
    return NilpotentCheck(d, n, eps, K, dev)
