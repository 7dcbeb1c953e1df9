"""Finite systems: the sphere route against the Markov route, exactly."""

import random
from fractions import Fraction

import pytest

from f2walk.finite import (
    FiniteSystem,
    apply_group,
    avg_operator,
    check_identity,
    lift_norm,
    markov_power,
    markov_step,
    maximal_function,
    pullback,
    pushforward,
    random_density,
    random_system,
    two_point_swap,
)
from f2walk.words import enumerate_sphere, invert, sphere_size


def brute_average(system, f, n):
    # independent route: average f(T_{g^-1} x) over the full sphere
    out = []
    for x in range(system.size):
        acc = Fraction(0)
        for g in enumerate_sphere(n):
            acc += f[apply_group(system, invert(g), x)]
        out.append(acc / sphere_size(n))
    return tuple(out)


def test_avg_operator_matches_brute_force():
    rng = random.Random(42)
    for _ in range(5):
        system = random_system(rng, max_states=6)
        f = random_density(rng, system.size)
        for n in range(1, 4):
            assert avg_operator(system, f, n) == brute_average(system, f, n)


def test_identity_on_random_systems():
    rng = random.Random(99)
    for _ in range(10):
        system = random_system(rng, max_states=8)
        f = random_density(rng, system.size)
        for n in range(1, 5):
            assert check_identity(system, f, n)


def test_swap_parity():
    swap = two_point_swap()
    one_zero = (Fraction(1), Fraction(0))
    one_one = (Fraction(0), Fraction(1))
    for n in range(1, 6):
        assert avg_operator(swap, one_zero, 2 * n) == one_zero
        assert avg_operator(swap, one_zero, 2 * n + 1) == one_one


def test_markov_step_formula_small():
    # hand expansion on the swap system, one step from the lift of 1_0
    swap = two_point_swap()
    g = pullback(swap, (Fraction(1), Fraction(0)))
    h = markov_step(swap, g)
    # T_{s^-1} swaps states for every s, so every slot over state 0
    # reads 3 slots of g over state 1 (all zero) and vice versa
    assert h == tuple([Fraction(0)] * 4 + [Fraction(1)] * 4)
    assert pushforward(swap, h) == (Fraction(0), Fraction(1))


def test_markov_step_preserves_lift_norm():
    rng = random.Random(17)
    system = random_system(rng, max_states=7)
    f = random_density(rng, system.size)
    g = pullback(system, f)
    for _ in range(4):
        nxt = markov_step(system, g)
        assert lift_norm(system, nxt) == lift_norm(system, g)
        g = nxt


def test_pullback_pushforward_section():
    rng = random.Random(23)
    system = random_system(rng, max_states=5)
    f = random_density(rng, system.size)
    assert pushforward(system, pullback(system, f)) == f


def test_maximal_dominates_each_average():
    rng = random.Random(31)
    system = random_system(rng, max_states=6)
    f = random_density(rng, system.size)
    mx = maximal_function(system, f, 4)
    for n in range(1, 5):
        avg = avg_operator(system, f, n)
        assert all(m >= a for m, a in zip(mx, avg))


def test_markov_power_zero_is_identity():
    rng = random.Random(57)
    system = random_system(rng, max_states=5)
    f = random_density(rng, system.size)
    assert markov_power(system, f, 0) == f


def test_system_validation():
    with pytest.raises(ValueError):
        FiniteSystem((0, 0), (1, 0), (Fraction(1), Fraction(1)))
    with pytest.raises(ValueError):
        FiniteSystem((1, 0), (1, 0), (Fraction(1),))
    with pytest.raises(ValueError):
        # weights must be constant on joint orbits
        FiniteSystem((1, 0), (1, 0), (Fraction(1), Fraction(2)))


def test_serialization_round_trip():
    rng = random.Random(3)
    system = random_system(rng, max_states=6)
    assert FiniteSystem.from_text(system.to_text()) == system
