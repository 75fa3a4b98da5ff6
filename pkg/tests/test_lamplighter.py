"""Classed lamplighter distributions against brute-force convolution,
entropy, exact TV shifts, invariance checks, and the two radius profiles."""
import dataclasses
import math
from fractions import Fraction

import pytest

import oracles
from lampwalk import (
    DEFAULT_CAPS,
    DomainError,
    ResourceCapError,
    WreathZOverF,
    almost_constancy_profile,
    check_exact_invariance,
    entropy_curve,
    entropy_tv_profile,
    exact_distribution,
    exact_entropy,
    exact_tv_shift,
    point_probability,
    radius_profile,
)

W2 = WreathZOverF(2)


def _oracle_power(q, n):
    mul = lambda x, y: oracles.wreath_mul(q, x, y)
    return oracles.power(mul, (0, ()), oracles.sws_lamplighter(q), n)


@pytest.mark.parametrize("q,n_max", [(2, 6), (3, 4)])
def test_exact_distribution_matches_oracle(q, n_max):
    for n in range(n_max + 1):
        cd = exact_distribution(q, n=n, mode="rational")
        assert cd.total_mass() == 1
        law = _oracle_power(q, n)
        for z, p in law.items():
            assert point_probability(cd, z) == p, (n, z)
        # an element just outside the reachable range carries no mass
        assert point_probability(cd, (n + 1, ())) == 0


def test_float_mode_tracks_rational():
    n = 24
    exact = exact_distribution(2, n=n, mode="rational")
    fl = exact_distribution(2, n=n, mode="float")
    assert fl.err_bound < 1e-9
    law = _oracle_power(2, 4)
    probe = list(law) + [(0, ((0, 1), (3, 1))), (8, ()), (-6, ((-2, 1),))]
    for z in probe:
        assert abs(point_probability(fl, z)
                   - float(point_probability(exact, z))) < 1e-12
    assert abs(fl.total_mass() - 1.0) < 1e-9


def test_distribution_basics():
    cd = exact_distribution(2, n=0, mode="rational")
    assert cd.n == 0
    assert cd.total_mass() == 1
    assert point_probability(cd, (0, ())) == 1
    with pytest.raises(DomainError):
        point_probability(cd, (0, ((0, 5),)))
    with pytest.raises(DomainError):
        exact_distribution(1, n=2)
    rng = exact_distribution(2, n=5).endpoint_range()
    lo, hi = rng[0], rng[-1]
    assert lo <= -1 and hi >= 1


def test_step_caps():
    tiny = dataclasses.replace(DEFAULT_CAPS, rational_steps=10)
    with pytest.raises(ResourceCapError):
        exact_distribution(2, n=11, mode="rational", caps=tiny)
    tiny = dataclasses.replace(DEFAULT_CAPS, float_steps=10)
    with pytest.raises(ResourceCapError):
        exact_distribution(2, n=11, mode="float", caps=tiny)


def test_entropy_matches_oracle():
    for n in range(6):
        cd = exact_distribution(2, n=n, mode="rational")
        assert abs(exact_entropy(cd) - oracles.entropy(_oracle_power(2, n))) \
            < 1e-9
    curve = entropy_curve(2, n_max=5)
    for n in range(1, 6):
        assert abs(curve[n - 1] - oracles.entropy(_oracle_power(2, n))) < 1e-9
    # entropy grows with n
    assert all(b > a for a, b in zip(curve, curve[1:]))


@pytest.mark.parametrize("g", [(1, ()), (-1, ()), (2, ()), (0, ((0, 1),)),
                               (0, ((2, 1),)), (0, ())])
def test_exact_tv_shift_matches_oracle(g):
    mul = lambda x, y: oracles.wreath_mul(2, x, y)
    inv_g = oracles.wreath_inv(2, g)
    for n in (0, 1, 3, 5):
        cd = exact_distribution(2, n=n, mode="rational")
        want = oracles.tv_right_shift(mul, inv_g, _oracle_power(2, n))
        assert exact_tv_shift(cd, g) == want, (n, g)


def test_exact_tv_shift_float_and_limits():
    for g in ((1, ()), (0, ((1, 1),))):
        for n in (2, 5):
            cd = exact_distribution(2, n=n, mode="float")
            exact = exact_distribution(2, n=n, mode="rational")
            assert abs(exact_tv_shift(cd, g)
                       - float(exact_tv_shift(exact, g))) < 1e-9
    cd = exact_distribution(2, n=4, mode="rational")
    with pytest.raises(DomainError):
        exact_tv_shift(cd, (1, ((0, 1), (1, 1))))


def test_check_exact_invariance():
    cd = exact_distribution(2, n=12, mode="rational")
    report = check_exact_invariance(cd, (0, ((0, 1),)))
    assert report.ok()
    assert report.violations == []
    assert report.checked > 0
    paper = check_exact_invariance(cd, (0, ((0, 1),)), mode="paper")
    assert paper.ok()
    with pytest.raises(DomainError):
        check_exact_invariance(cd, (1, ()))  # lamp-only increments
    q3 = exact_distribution(3, n=8, mode="rational")
    assert check_exact_invariance(q3, (0, ((0, 2),))).ok()


def test_entropy_tv_profile_shape():
    prof = entropy_tv_profile(2, n_max=20, n_min=5)
    assert prof["n"] == list(range(5, 21))
    assert len(prof["H"]) == len(prof["n"]) + 1
    curve = prof["tv"][(1, ())]
    assert len(curve) == len(prof["n"])
    assert all(t >= 0 for t in curve)
    dH = [b - a for a, b in zip(prof["H"], prof["H"][1:])]
    assert all(d > 0 for d in dH)


def test_radius_profile_fields_and_determinism():
    cd = exact_distribution(2, n=60, mode="float")
    prof = radius_profile(cd, eps=0.1, samples=256, seed=3)
    again = radius_profile(cd, eps=0.1, samples=256, seed=3)
    assert prof == again
    assert prof.l_max == max(4, math.ceil(3 * math.sqrt(60)))
    assert prof.lengths == list(range(1, prof.l_max + 1))
    assert len(prof.quantiles) == prof.l_max
    assert 0 <= prof.radius <= prof.l_max
    if not prof.truncated:
        for w in prof.witnesses:
            assert w["dev"] > 0.1
            assert w["length"] <= prof.radius + 1
            assert w["p_h"] > 0
    with pytest.raises(DomainError):
        radius_profile(exact_distribution(2, n=4), eps=0.1)
    with pytest.raises(DomainError):
        radius_profile(cd, eps=1.5)


def test_constancy_profile_modes_agree():
    exact = almost_constancy_profile(exact_distribution(2, n=40), eps=0.1)
    fl = almost_constancy_profile(
        exact_distribution(2, n=40, mode="float"), eps=0.1)
    assert exact.mode == "rational" and fl.mode == "float"
    assert exact.cutoff == fl.cutoff
    assert exact.lengths[0] == 0
    assert float(exact.min_ratio[0]) == 1.0
    if exact.first_violation is not None:
        fv = exact.first_violation
        assert fv["length"] == exact.cutoff + 1
        ratio = float(fv["ratio"])
        assert ratio > 1.1 or ratio < 0.9
    zero = almost_constancy_profile(exact_distribution(2, n=0))
    assert zero.cutoff == 0
