"""Ball system: strata, lazy words, odometer, generator moves."""

import random
from fractions import Fraction

import pytest

from f2walk.ball import (
    BOUND_A,
    BOUND_B,
    INTERIOR,
    BallSystem,
    LazyWord,
    axiom_survey,
    digitvalue_less,
    odometer_digits,
    points_equal,
)
from f2walk.errors import CarryBoundError, LookaheadExceededError
from f2walk.prng import TailSource
from f2walk.words import INV, LETTER_A, LETTER_AI, LETTER_B, LETTER_BI


def test_odometer_digits_examples():
    d = [0, 0, 0]
    assert odometer_digits(d, 1) == 0
    assert d == [1, 0, 0]
    d = [2, 2, 1]
    assert odometer_digits(d, 1) == 2
    assert d == [0, 0, 2]
    d = [0, 0, 1]
    assert odometer_digits(d, -1) == 2
    assert d == [2, 2, 0]
    d = [1]
    assert odometer_digits(d, -1) == 0
    assert d == [0]
    with pytest.raises(ValueError):
        odometer_digits([0], 2)


def test_odometer_inverts():
    rng = random.Random(12)
    for _ in range(100):
        d = [rng.randrange(3) for _ in range(8)]
        d[-1] = 1  # keep carries inside the list
        before = list(d)
        odometer_digits(d, 1)
        odometer_digits(d, -1)
        assert d == before


def test_digitvalue_less_basics():
    word = LazyWord([LETTER_B], TailSource(987654321))
    assert digitvalue_less(word, Fraction(1), 64)
    assert not digitvalue_less(word, Fraction(0), 64)
    lo = digitvalue_less(word, Fraction(1, 2), 64)
    hi = digitvalue_less(word, Fraction(2, 3), 64)
    assert lo in (True, False) and (hi or not lo)  # monotone in the threshold


def test_digitvalue_lookahead_guard():
    # all-zero digit stream ties against threshold 0.000... forever
    class ZeroTail:
        def digit(self, i):
            return 0

        def first_letter(self):
            return LETTER_B

    word = LazyWord([LETTER_B], ZeroTail())
    with pytest.raises(LookaheadExceededError):
        digitvalue_less(word, Fraction(1, 3 ** 70), 64)


def test_stratum_law_is_exact_inversion():
    system = BallSystem(seed=314159)
    counts = {"interior": 0, "boundary_a": 0, "boundary_b": 0}
    depth_counts = {}
    n = 40_000
    for i in range(n):
        kind, depth = system.sample_stratum(i)
        if kind == INTERIOR:
            counts["interior"] += 1
            depth_counts[depth] = depth_counts.get(depth, 0) + 1
        elif kind == BOUND_A:
            counts["boundary_a"] += 1
        else:
            counts["boundary_b"] += 1
    assert abs(counts["interior"] / n - 0.5) < 0.01
    assert abs(counts["boundary_a"] / n - 0.25) < 0.01
    assert abs(counts["boundary_b"] / n - 0.25) < 0.01
    # P(depth = d) = 2 * 3^-d within the interior half
    assert abs(depth_counts[1] / n - 2 / 3 * 0.5) < 0.01
    assert abs(depth_counts[2] / n - 2 / 9 * 0.5) < 0.01


def test_points_reproducible_by_id():
    system = BallSystem(seed=2024)
    p = system.sample_point(7)
    q = system.sample_point(7)
    assert points_equal(p, q)
    p.word.extend_to(30)
    q.word.extend_to(30)
    assert p.word.letters == q.word.letters


def test_reveal_order_irrelevant():
    system = BallSystem(seed=55)
    p = system.sample_point(3)
    q = system.sample_point(3)
    p.word.extend_to(25)
    q.word.extend_to(5)
    q.word.extend_to(25)
    assert p.word.letters == q.word.letters


def test_every_move_invertible():
    system = BallSystem(seed=777)
    for i in range(200):
        p = system.sample_point(i)
        for s in range(4):
            q = p.copy().shift(s)
            q.shift(INV[s])
            assert points_equal(q, p)


def test_interior_depth_moves():
    system = BallSystem(seed=31)
    p = system.make_point(0, INTERIOR, 3)
    first = p.first_letter()
    deeper = p.copy().shift(INV[first])
    assert deeper.kind == INTERIOR and deeper.depth == 4
    for s in range(4):
        if s == INV[first]:
            continue
        shallower = p.copy().shift(s)
        assert shallower.kind == INTERIOR and shallower.depth == 2
        assert shallower.first_letter() == s


def test_depth_one_exits_to_boundary():
    system = BallSystem(seed=32)
    p = system.make_point(1, INTERIOR, 1)
    first = p.first_letter()
    for s in range(4):
        if s == INV[first]:
            continue
        q = p.copy().shift(s)
        assert q.kind in (BOUND_A, BOUND_B)
        assert q.kind == (BOUND_A if s in (LETTER_B, LETTER_BI) else BOUND_B)
        back = q.copy().shift(INV[s])
        assert points_equal(back, p)


def test_b_side_b_moves_are_identity():
    system = BallSystem(seed=33)
    p = system.make_point(2, BOUND_B, 0)
    assert points_equal(p.copy().shift(LETTER_B), p)
    assert points_equal(p.copy().shift(LETTER_BI), p)


def test_a_side_odometer_square_moves_two():
    # a then a again advances the digit stream by two, never off-side
    system = BallSystem(seed=34)
    p = system.make_point(5, BOUND_A, 0)
    q = p.copy().shift(LETTER_A).shift(LETTER_A)
    assert q.kind == BOUND_A
    r = q.copy().shift(LETTER_AI).shift(LETTER_AI)
    assert points_equal(r, p)
    assert not points_equal(q, p)


def test_carry_bound_guard():
    class TwoTail:
        def digit(self, i):
            return 2

        def first_letter(self):
            return LETTER_B

    p = BallSystem(seed=1).make_point(0, BOUND_A, 0)
    p.word.tail = TwoTail()
    p.word.letters = [LETTER_B]
    p.word.next_abs = 0
    with pytest.raises(CarryBoundError):
        p.shift(LETTER_A, carry_bound=8)


def test_axiom_survey_small_run_clean():
    system = BallSystem(seed=20240817)
    out = axiom_survey(system, 2000)
    assert out["violation_total"] == 0
    assert out["stratum_within_band"]
    assert set(out["violations"]) == {
        "invertibility",
        "a_side_invariance",
        "b_side_identity",
        "inclusion",
    }
