"""Free-group laws against full convolution over the group algebra."""
from fractions import Fraction

import pytest

import oracles
from lampwalk import (
    CancellationLaw,
    DomainError,
    RatioLaw,
    SphereSizes,
    ball_mass,
    cancellation_probability,
    cancellation_tail,
    free_point_probability,
    levy_distance,
    ratio_distribution,
)


def test_sphere_sizes():
    s = SphereSizes(2)
    assert [s.v(l) for l in range(5)] == [1, 4, 12, 36, 108]
    assert s.ball(3) == 53
    assert SphereSizes(3).v(2) == 30
    with pytest.raises(DomainError):
        SphereSizes(0)
    with pytest.raises(DomainError):
        s.v(-1)


@pytest.mark.parametrize("m,n_max", [(2, 7), (3, 5)])
def test_point_probability_matches_full_convolution(m, n_max):
    for n in range(n_max + 1):
        by_len, atom = oracles.free_length_law(m, n)
        for l in range(n + 2):
            want = atom.get(l, Fraction(0))
            assert free_point_probability(m, n, l, mode="rational") == want
    # per-element atoms times sphere sizes exhaust the mass
    s = SphereSizes(m)
    total = sum(free_point_probability(m, n_max, l, "rational") * s.v(l)
                for l in range(n_max + 1))
    assert total == 1


def test_point_probability_float():
    for n in (6, 40):
        for l in range(0, n + 1, 3):
            exact = free_point_probability(2, n, l, mode="rational")
            fl = free_point_probability(2, n, l, mode="float")
            assert abs(fl - float(exact)) <= 1e-12 * max(1.0, float(exact))
    with pytest.raises(DomainError):
        free_point_probability(2, 4, -1)


def test_cancellation_law_closed_form():
    law = CancellationLaw(2)
    assert law.tail(0) == 1
    assert law.tail(1) == Fraction(1, 4)
    assert law.tail(2) == Fraction(1, 12)
    assert law.atom(0) == Fraction(3, 4)
    atoms = law.atoms(3)
    assert sum(atoms.values()) + law.tail(4) == 1


H6 = (1, 2, 1, 2, 1, 2)


def test_cancellation_tail_matches_enumeration():
    n = 6
    for k in range(len(H6) + 1):
        want = oracles.free_cancel_tail(2, n, H6, k)
        assert cancellation_tail(2, n, H6, k, mode="rational") == want
    # depends on h only through its length
    other = (2, -1, 2, -1, 2, -1)
    for k in (1, 3):
        assert cancellation_tail(2, n, other, k, mode="rational") == \
            oracles.free_cancel_tail(2, n, other, k)


def test_cancellation_probability_is_the_strict_tail():
    n = 6
    h = (1, 2, 1)
    for k in range(len(h)):
        assert cancellation_probability(2, n, h, k, "rational") == \
            cancellation_tail(2, n, h, k + 1, "rational")
        # strict event by enumeration: depth at least k + 1
        assert cancellation_probability(2, n, h, k, "rational") == \
            oracles.free_cancel_tail(2, n, h, k + 1)
    assert cancellation_probability(2, n, h, len(h), "rational") == 0
    with pytest.raises(DomainError):
        cancellation_tail(2, 4, h, 4)
    with pytest.raises(DomainError):
        cancellation_tail(2, 4, (1, 1, -1), 0)  # unreduced word


def test_ratio_distribution_small_n():
    n, w = 6, (1, 2, 1)
    law = ratio_distribution(2, n, w, mode="rational")
    assert isinstance(law, RatioLaw)
    assert law.word_length == 3
    assert law.denominator_steps == n + 1  # odd word length flips parity
    assert sum(law.atoms.values()) == 1
    assert law.dropped_mass >= 0
    assert all(v > 0 for v in law.atoms)
    # brute force: mass of each ratio value over the full group algebra
    mu_n = oracles.power(oracles.free_mul, (), oracles.free_step(2), n)
    mu_d = oracles.power(oracles.free_mul, (), oracles.free_step(2), n + 1)
    want = {}
    dropped = Fraction(0)
    for g, p in mu_n.items():
        q = mu_d.get(oracles.free_mul(g, w), Fraction(0))
        if q == 0:
            dropped += p
            continue
        ratio = p / q
        want[ratio] = want.get(ratio, Fraction(0)) + p
    total = sum(want.values())
    want = {v: m / total for v, m in want.items()}
    assert law.dropped_mass == dropped
    assert law.atoms == want


def test_ratio_distribution_even_word():
    law = ratio_distribution(2, 6, (1, 2), mode="rational")
    assert law.denominator_steps == 6
    assert sum(law.atoms.values()) == 1
    assert abs(sum(law.limit_atoms.values()) - 1) == 0


def test_limit_atoms_are_the_cancellation_pushforward():
    law = ratio_distribution(2, 4, (1, 2, 1), mode="rational")
    cl = CancellationLaw(2)
    three = Fraction(3)
    assert law.limit_atoms[three ** 3] == cl.atom(0)
    assert law.limit_atoms[three ** 1] == cl.atom(1)
    assert law.limit_atoms[three ** -1] == cl.atom(2)


def test_levy_distance():
    a = {0.0: 0.5, 1.0: 0.5}
    assert levy_distance(a, a) == 0.0
    b = {0.0: 0.5, 1.0 + 0.2: 0.5}
    d = levy_distance(a, b)
    assert abs(d - 0.2) < 1e-9
    assert abs(levy_distance(b, a) - d) < 1e-12
    # vertical gap: same support, shifted mass
    c = {0.0: 0.3, 1.0: 0.7}
    assert abs(levy_distance(a, c) - 0.2) < 1e-9
    assert levy_distance({}, {}) == 0.0


def test_ball_mass_decays():
    m1 = ball_mass(2, 100, 5, mode="float")
    m2 = ball_mass(2, 1000, 5, mode="float")
    assert m2 < m1 < 1e-3
    assert ball_mass(2, 4, 4, mode="rational") == 1
