"""Monte Carlo estimators: reproducibility, stream coupling, fits, the
planar diagnostics, and the exact lattice kernels behind them."""
import dataclasses
import math

import numpy as np
import pytest

import oracles
from lampwalk import (
    DEFAULT_CAPS,
    DomainError,
    Free,
    IteratedWreathZ,
    ResourceCapError,
    WreathZ2OverF,
    WreathZOverF,
    Zd,
    anti_invariance_witness,
    cover_radius,
    cover_radius_grid,
    default_shift,
    drift_curve,
    fit_exponent,
    inner_value_drift,
    lamp_height_event,
    nilpotent_check,
    plane_law,
    validate,
    wilson_interval,
    z2f_invariance_bound,
)


def test_wilson_interval():
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert wilson_interval(0, 100)[0] == 0.0
    hi_full = wilson_interval(100, 100)[1]
    assert 1.0 - 1e-9 < hi_full <= 1.0
    lo2, hi2 = wilson_interval(50, 100, z=2.5)
    assert lo2 < lo and hi < hi2
    with pytest.raises(DomainError):
        wilson_interval(1, 0)


def test_fit_exponent_recovers_power_law():
    ns = [2 ** k for k in range(6, 13)]
    means = [3.0 * n ** 0.42 for n in ns]
    fit = fit_exponent(ns, means, [m * 1e-6 for m in means])
    assert abs(fit.exponent - 0.42) < 1e-9
    assert abs(fit.intercept - math.log(3.0)) < 1e-9
    assert fit.r_squared > 0.999999
    assert not fit.flagged


def test_fit_exponent_flags_bad_fits():
    ns = [16, 64, 256, 1024]
    means = [1.0, 10.0, 2.0, 30.0]  # not a power law
    fit = fit_exponent(ns, means, [0.01] * 4)
    assert fit.flagged
    assert "R^2" in fit.note
    degenerate = fit_exponent([16, 64], [0.0, 0.0], [1.0, 1.0])
    assert degenerate.flagged
    assert math.isnan(degenerate.exponent)
    one_point = fit_exponent([16, 64], [0.0, 2.0], [0.1, 0.1])
    assert one_point.flagged


GRID = (16, 32, 64)


def test_drift_curve_reproducible_and_grid_independent():
    a = drift_curve(WreathZOverF(2), n_grid=GRID, samples=300, seed=5)
    b = drift_curve(WreathZOverF(2), n_grid=GRID, samples=300, seed=5)
    assert a.means == b.means
    assert a.stderrs == b.stderrs
    # per-point streams: removing a grid point leaves the others unchanged
    c = drift_curve(WreathZOverF(2), n_grid=(16, 64), samples=300, seed=5)
    assert c.means[0] == a.means[0]
    assert c.means[1] == a.means[2]
    d = drift_curve(WreathZOverF(2), n_grid=GRID, samples=300, seed=6)
    assert d.means != a.means


def test_drift_curve_families():
    for desc, kind in ((Zd(1), "exact"), (WreathZOverF(2), "exact"),
                       (IteratedWreathZ(1), "exact"),
                       (WreathZ2OverF(2), "upper_bound")):
        curve = drift_curve(desc, n_grid=(16, 64), samples=200, seed=1)
        assert curve.metric == kind
        assert len(curve.means) == 2
        assert all(m > 0 for m in curve.means)
        assert all(s >= 0 for s in curve.stderrs)
    # the line walk mean distance is E|S_n| = sqrt(2 sigma^2 n / pi)
    line = drift_curve(Zd(1), n_grid=(64,), samples=400, seed=2)
    assert abs(line.means[0] - math.sqrt(64 / math.pi)) < 0.8


def test_drift_curve_generic_dispatch():
    # free group: ballistic, exponent near 1, via the generic sampler
    curve = drift_curve(Free(2), n_grid=(16, 32, 64, 128), samples=300,
                        seed=3)
    assert curve.metric == "exact"
    assert abs(curve.fit.exponent - 1.0) < 0.15
    tiny = dataclasses.replace(DEFAULT_CAPS, trajectory_steps=1000)
    with pytest.raises(ResourceCapError):
        drift_curve(Free(2), n_grid=(64,), samples=300, seed=3, caps=tiny)


def test_inner_value_drift():
    a = inner_value_drift(1, n_grid=(64, 256), samples=300, seed=4)
    b = inner_value_drift(1, n_grid=(64, 256), samples=300, seed=4)
    assert a == b
    assert a.depth == 1
    assert len(a.value_means) == 2
    assert all(m > 0 for m in a.value_means)
    assert all(m > 0 for m in a.visits_means)
    two = inner_value_drift(2, n_grid=(64,), samples=100, seed=4)
    assert two.depth == 2
    with pytest.raises(DomainError):
        inner_value_drift(3, n_grid=(64,), samples=10, seed=0)


def test_lamp_height_event():
    a = lamp_height_event(256, 0.1, samples=512, seed=9)
    b = lamp_height_event(256, 0.1, samples=512, seed=9)
    assert a == b
    assert 0.0 <= a.probability <= 1.0
    lo, hi = a.wilson
    assert lo <= a.probability <= hi
    # raising the threshold can only shrink the event
    high = lamp_height_event(256, 2.0, samples=512, seed=9)
    assert high.probability <= a.probability
    with pytest.raises(DomainError):
        lamp_height_event(256, 0.0)
    with pytest.raises(DomainError):
        lamp_height_event(-1, 1.0)


def test_default_shift():
    assert abs(default_shift(0) - 1.0) < 1e-12
    assert default_shift(10 ** 6) > default_shift(100) > 1.0


def test_anti_invariance_witness_zwrz():
    desc = IteratedWreathZ(1)
    rep = anti_invariance_witness(desc, 256, samples=256, seed=2)
    assert rep == anti_invariance_witness(desc, 256, samples=256, seed=2)
    validate(desc, rep.witness)
    assert 0.0 <= rep.event_mass <= 1.0
    assert 0.0 <= rep.translate_mass <= 1.0
    assert rep.event_wilson[0] <= rep.event_mass <= rep.event_wilson[1]
    assert rep.magnitude >= 1
    assert rep.threshold > 0
    # zero shift translates by the identity, so the two masses coincide
    still = anti_invariance_witness(desc, 256, samples=256, seed=2,
                                    shift=0.0)
    assert still.magnitude == 0
    assert still.event_mass == still.translate_mass
    with pytest.raises(DomainError):
        anti_invariance_witness(desc, 0)
    with pytest.raises(DomainError):
        anti_invariance_witness(desc, 256, shift=-1.0)
    with pytest.raises(DomainError):
        anti_invariance_witness(Zd(2), 256)


def test_anti_invariance_witness_degenerate_window():
    rep = anti_invariance_witness(IteratedWreathZ(1), 1, samples=32, seed=0)
    assert "empty window" in rep.note


def test_anti_invariance_witness_plane():
    desc = WreathZ2OverF(2)
    rep = anti_invariance_witness(desc, 128, samples=128, seed=1)
    validate(desc, rep.witness)
    base, lamps = rep.witness
    assert base == (0, 0)
    assert len(lamps) == 1
    assert 0.0 <= rep.event_mass <= 1.0


def test_cover_radius_streams_match_set_oracle():
    # same per-sample streams and block sizes as the library, but the
    # radius comes from an independent python-set ring scan
    grid = (50, 200, 800)
    samples = 8
    out = cover_radius_grid(grid, samples=samples, seed=11)
    assert out.shape == (samples, len(grid))
    dx = np.array([0, 0, 0, 0, 1, -1, 0, 0])
    dy = np.array([0, 0, 0, 0, 0, 0, 1, -1])
    children = np.random.SeedSequence(11).spawn(samples)
    for s, child in enumerate(children):
        rng = np.random.Generator(np.random.PCG64(child))
        xs_all = [0]
        ys_all = [0]
        done = 0
        for gi, stop in enumerate(sorted(grid)):
            while done < stop:
                block = min(8192, stop - done)
                moves = rng.integers(0, 8, block)
                xs = xs_all[-1] + np.cumsum(dx[moves])
                ys = ys_all[-1] + np.cumsum(dy[moves])
                xs_all.extend(int(v) for v in xs)
                ys_all.extend(int(v) for v in ys)
                done += block
            assert out[s, gi] == oracles.set_cover_radius(xs_all, ys_all)


def test_cover_radius_monotone_coupling():
    grid = (100, 400, 1600)
    out = cover_radius_grid(grid, samples=16, seed=3)
    assert (np.diff(out, axis=1) >= 0).all()
    single = cover_radius(400, samples=16, seed=3)
    assert single.radii == tuple(int(r) for r in out[:, 1])
    assert single.median == float(np.median(out[:, 1]))
    assert set(single.quantiles) == {0.1, 0.25, 0.5, 0.75, 0.9}
    with pytest.raises(DomainError):
        cover_radius_grid((), samples=4)
    tiny = dataclasses.replace(DEFAULT_CAPS, trajectory_steps=100)
    with pytest.raises(ResourceCapError):
        cover_radius_grid((1000,), samples=4, caps=tiny)


def test_plane_law_matches_enumeration():
    for n in range(5):
        law = plane_law(n)
        assert law.shape == (2 * n + 1, 2 * n + 1)
        assert abs(law.sum() - 1.0) < 1e-12
        want = oracles.power(oracles.lattice_mul, (0, 0),
                             oracles.lazy_plane_step(), n)
        for (x, y), p in want.items():
            assert abs(law[x + n, y + n] - float(p)) < 1e-12
        assert np.allclose(law, law[::-1, ::-1], atol=1e-13)
        assert np.allclose(law, law.T, atol=1e-13)
    tiny = dataclasses.replace(DEFAULT_CAPS, convolution_support=100)
    with pytest.raises(ResourceCapError):
        plane_law(10, caps=tiny)


def test_z2f_invariance_bound_kinds():
    ident = z2f_invariance_bound(2, 200, ((0, 0), ()), samples=64, seed=0)
    assert ident.kind == "identity"
    assert ident.upper == 0.0 and ident.lower == 0.0

    lamp = z2f_invariance_bound(2, 200, ((0, 0), (((0, 0), 1),)),
                                samples=128, seed=0)
    assert lamp.kind == "lamp"
    assert lamp.lower is None
    assert 0.0 <= lamp.upper <= 2.0
    assert lamp.upper_se >= 0.0
    assert lamp == z2f_invariance_bound(2, 200, ((0, 0), (((0, 0), 1),)),
                                        samples=128, seed=0)
    # a far-away lamp site is rarely visited, so the bound is larger
    far = z2f_invariance_bound(2, 200, ((0, 0), (((40, 40), 1),)),
                               samples=128, seed=0)
    assert far.upper >= lamp.upper

    trans = z2f_invariance_bound(2, 400, ((1, 0), ()), samples=64, seed=0)
    assert trans.kind == "translation"
    assert set(trans.event_fail) == {"origin_ball", "endpoint_ball",
                                     "early_ball", "any"}
    assert trans.lower is not None
    assert trans.lower <= trans.upper + 1e-12
    assert "r'=" in trans.note

    with pytest.raises(DomainError):
        z2f_invariance_bound(1, 100, ((0, 0), ()))
    with pytest.raises(DomainError):
        z2f_invariance_bound(2, 100, ((1, 0), (((0, 0), 1),)))


def test_z2f_translation_lower_bound_is_exact_tv():
    n = 40
    law = plane_law(n)
    shifted = np.zeros_like(law)
    shifted[1:, :] = law[:-1, :]
    want = float(np.abs(law - shifted).sum())
    out = z2f_invariance_bound(2, n, ((1, 0), ()), samples=32, seed=0)
    assert abs(out.lower - want) < 1e-12


def test_nilpotent_check():
    one = nilpotent_check(1, 400, eps=0.05)
    assert one.d == 1 and one.n == 400
    assert 0.0 < one.deviation < 0.3
    finer = nilpotent_check(1, 400, eps=0.01)
    assert finer.deviation <= one.deviation
    two = nilpotent_check(2, 100, eps=0.1)
    assert 0.0 < two.deviation < 1.0
    with pytest.raises(DomainError):
        nilpotent_check(3, 100, eps=0.1)
    with pytest.raises(DomainError):
        nilpotent_check(1, 0, eps=0.1)
    with pytest.raises(DomainError):
        nilpotent_check(1, 100, eps=-0.1)
