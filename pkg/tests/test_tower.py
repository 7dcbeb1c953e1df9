"""Glued towers: copy bits, swap windows, exact chain algebra."""

import random
from fractions import Fraction

import pytest

from f2walk.ball import BOUND_B, BallSystem, LazyWord
from f2walk.errors import ConfigError
from f2walk.tower import (
    GlueLevel,
    TowerPoint,
    TowerSystem,
    alpha_recursion,
    chain_components,
    chain_norm_ratio,
    chain_support_constant,
    make_levels,
    membership_e,
    threshold_digits,
    tower_alphas,
    tower_build,
    tower_points_equal,
)
from f2walk.words import INV, LETTER_A, LETTER_B, SUCC

ALPHAS_4 = [
    Fraction(1),
    Fraction(3, 4),
    Fraction(39, 64),
    Fraction(8463, 16384),
    Fraction(483008799, 1073741824),
]


class ZeroTail:
    def digit(self, i):
        return 0

    def first_letter(self):
        return LETTER_A


def b_side_point(first_digit):
    # canonical B-side word starting a..., with digit 0 pinned
    letters = [LETTER_A, SUCC[LETTER_A][first_digit]]
    from f2walk.ball import BallPoint, BOUND_B as KIND

    return BallPoint(KIND, 0, LazyWord(letters, ZeroTail(), next_abs=0))


def test_alpha_recursion_values():
    assert tower_alphas(4) == ALPHAS_4
    for j in range(4):
        a = ALPHAS_4[j]
        assert ALPHAS_4[j + 1] == a * (1 - a / 4)
    assert alpha_recursion(Fraction(0)) == 0
    with pytest.raises(ConfigError):
        alpha_recursion(Fraction(5, 4))
    with pytest.raises(ConfigError):
        alpha_recursion(Fraction(-1, 8))


def test_make_levels_windows():
    levels = make_levels([Fraction(1, 64), Fraction(1, 8)], [16, 4])
    assert levels[0].window_lo == 0
    assert levels[0].window_hi == Fraction(1, 16)
    assert levels[1].window_lo == Fraction(1, 16)
    assert levels[1].window_hi == Fraction(1, 16) + Fraction(1, 2)
    for lv in levels:
        assert lv.window_hi - lv.window_lo == 4 * lv.kappa


def test_make_levels_validation():
    with pytest.raises(ConfigError):
        make_levels([Fraction(1, 4)], [4])
    with pytest.raises(ConfigError):
        make_levels([Fraction(-1, 64)], [4])
    with pytest.raises(ConfigError):
        make_levels([Fraction(1, 64)], [0])
    with pytest.raises(ConfigError):
        make_levels([Fraction(1, 64)], [4, 8])
    with pytest.raises(ConfigError):
        # four windows of width 4/16 overrun the digit range
        make_levels([Fraction(15, 64)] * 2, [4, 4])
    with pytest.raises(ConfigError):
        GlueLevel(Fraction(1, 64), 4, Fraction(0), Fraction(1, 2))


def test_membership_window():
    level = make_levels([Fraction(1, 8)], [4])[0]  # window [0, 1/2)
    assert membership_e(level, b_side_point(0))
    assert membership_e(level, b_side_point(1))  # value 1/3
    assert not membership_e(level, b_side_point(2))  # value 2/3
    zero = make_levels([Fraction(0)], [4])[0]
    assert not membership_e(zero, b_side_point(0))
    # interior points are never swap-set members
    interior = BallSystem(seed=9).make_point(0, 0, 2)
    assert not membership_e(level, interior)


def test_threshold_digits():
    assert threshold_digits(Fraction(1, 3), 8) == ([1], True)
    assert threshold_digits(Fraction(1, 2), 4) == ([1, 1, 1, 1], False)
    assert threshold_digits(Fraction(0), 4) == ([0], True)


def test_b_move_flips_bit_inside_window():
    base = BallSystem(seed=5)
    tower = TowerSystem(base, make_levels([Fraction(1, 8)], [4]))
    inside = TowerPoint(b_side_point(0), [0])
    tower.shift(inside, LETTER_B)
    assert inside.bits == [1]
    tower.shift(inside, LETTER_B)
    assert inside.bits == [0]  # consecutive identity moves cancel
    outside = TowerPoint(b_side_point(2), [0])
    tower.shift(outside, LETTER_B)
    assert outside.bits == [0]


def test_shift_and_shift_fast_agree():
    base = BallSystem(seed=424242)
    tower = TowerSystem(
        base, make_levels([Fraction(1, 64), Fraction(1, 8)], [16, 4])
    )
    rng = random.Random(8)
    for pid in range(12):
        p = tower.sample_point(pid)
        q = p.copy()
        last = None
        for _ in range(40):
            s = rng.randrange(4) if last is None else SUCC[last][rng.randrange(3)]
            last = s
            tower.shift(p, s)
            tower.shift_fast(q, s)
            assert p.bits == q.bits
        assert tower_points_equal(p, q)


def test_glued_moves_invertible():
    base = BallSystem(seed=17)
    tower = TowerSystem(base, make_levels([Fraction(1, 8)], [4]))
    for pid in range(60):
        p = tower.sample_point(pid)
        for s in range(4):
            q = p.copy()
            tower.shift(q, s)
            tower.shift(q, INV[s])
            assert tower_points_equal(q, p)


def test_sample_point_bits():
    base = BallSystem(seed=12)
    tower = TowerSystem(base, make_levels([Fraction(1, 64)] * 2, [4, 8]))
    p = tower.sample_point(3, bits=[1, 0])
    assert p.bits == [1, 0]
    q = tower.sample_point(3)
    r = tower.sample_point(3)
    assert q.bits == r.bits  # bit draw is part of the point id
    with pytest.raises(ValueError):
        tower.sample_point(3, bits=[1])


def test_chain_components_one_level():
    levels = make_levels([Fraction(1, 64)], [6])
    comps = chain_components(levels)
    assert len(comps) == 2
    by_bits = {c.bits: c for c in comps}
    assert by_bits[(0,)].scale == 1 and by_bits[(0,)].delay == 0
    assert by_bits[(1,)].scale == Fraction(1, 2) and by_bits[(1,)].delay == 12


def test_chain_norm_ratio_hand_check():
    levels = make_levels([Fraction(1, 64)], [6])
    # (1 + 1/2) / 2 = alpha_1 at any negative time
    for t in (-1, -3):
        assert chain_norm_ratio(levels, t) == Fraction(3, 4)
    two = make_levels([Fraction(1, 64)] * 2, [6, 4])
    assert chain_norm_ratio(two, -1) == Fraction(39, 64)


def test_chain_support_constant():
    levels = make_levels([Fraction(1, 64)], [2])
    want = (Fraction(1, 4) + Fraction(1, 4) * Fraction(3) ** -4) / 2
    assert chain_support_constant(levels, -1) == want
    # the constant is time independent
    assert chain_support_constant(levels, -5) == want


def test_tower_build_report():
    base = BallSystem(seed=20240817)
    tower, report = tower_build(
        base, [Fraction(1, 64), Fraction(1, 32)], [4, 8], (-1, -2)
    )
    assert tower.level_count == 2
    assert report.alphas == ALPHAS_4[:3]
    assert report.norms_match
    assert report.level_norm_ratios == ALPHAS_4[1:3]
    assert list(report.check_times) == [-2, -1]  # sorted on entry
