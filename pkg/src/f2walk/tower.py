"""Two-copy gluing extensions and their delayed density chains.

One glue level doubles the system to X x {1, 2} and rewires the b-move
on a small set E inside the B-side boundary: crossing E swaps copies.
E is cut from the digit stream by a threshold window of width 4*kappa,
so membership costs a lazy digit comparison.  Windows of successive
levels are consecutive, hence disjoint.

The b-move fixes the B-side pointwise in the base, so the copy swap is
its own inverse there; for the inverse move the membership test runs on
the image point, which keeps the extension invertible for every
generator.

Ancient chain densities lift exactly: each glue level splits every
component into a copy-1 part (unchanged) and a copy-2 part scaled by
(1 - alpha/2) and delayed by 2*delay steps, where alpha is the chain
mass ratio entering that level.  Mass ratios follow the recursion
alpha -> alpha * (1 - alpha/4).  ``tower_build`` cross-checks the
recursion against independently summed exact component norms.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .ball import (
    BOUND_B,
    DEFAULT_CARRY_BOUND,
    DEFAULT_LOOKAHEAD_BOUND,
    BallPoint,
    BallSystem,
    digitvalue_less,
    points_equal,
)
from .cylinders import CylinderFunction, ancient_density
from .errors import ConfigError
from .prng import DOMAIN_WALK, mix, splitmix64
from .words import LETTER_B, LETTER_BI

COPY_1, COPY_2 = 0, 1


@dataclass(frozen=True)
class GlueLevel:
    """One gluing stage: swap set width and chain delay."""

    kappa: Fraction
    delay: int  # the density delay is 2 * delay steps
    window_lo: Fraction
    window_hi: Fraction

    def __post_init__(self) -> None:
        if not 0 <= self.kappa < Fraction(1, 4):
            raise ConfigError(f"kappa must lie in [0, 1/4), got {self.kappa}")
        if self.delay < 1:
            raise ConfigError("delay must be a positive integer")
        if self.window_hi - self.window_lo != 4 * self.kappa:
            raise ConfigError("window width must equal 4 * kappa")


def make_levels(kappas: Sequence[Fraction], delays: Sequence[int]) -> tuple:
    if len(kappas) != len(delays):
        raise ConfigError("kappas and delays must have equal length")
    levels = []
    offset = Fraction(0)
    for kappa, delay in zip(kappas, delays):
        kappa = Fraction(kappa)
        width = 4 * kappa
        levels.append(GlueLevel(kappa, int(delay), offset, offset + width))
        offset += width
    if offset > 1:
        raise ConfigError("swap-set windows exceed the unit digit range")
    return tuple(levels)


def membership_e(
    level: GlueLevel, base: BallPoint, lookahead_bound: int = DEFAULT_LOOKAHEAD_BOUND
) -> bool:
    """Whether the base point lies in this level's swap set."""
    if base.kind != BOUND_B:
        return False
    if level.kappa == 0:
        return False
    return not digitvalue_less(
        base.word, level.window_lo, lookahead_bound
    ) and digitvalue_less(base.word, level.window_hi, lookahead_bound)


def threshold_digits(threshold: Fraction, bound: int) -> tuple:
    """Base-3 digits of a rational in [0, 1]; (digits, terminated)."""
    t = Fraction(threshold)
    digits = []
    for _ in range(bound):
        t *= 3
        d = int(t)
        digits.append(d)
        t -= d
        if t == 0:
            return digits, True
    return digits, False


def _value_less_digits(word, digits: list, terminated: bool, bound: int) -> bool:
    """Lazy integer-only comparison of a digit stream against a threshold."""
    from .errors import LookaheadExceededError

    for i, td in enumerate(digits):
        d = word.digit(i)
        if d != td:
            return d < td
    if terminated:
        return False
    raise LookaheadExceededError(f"digit comparison unresolved after {bound} digits")


class TowerPoint:
    """Base point plus one copy bit per glue level."""

    __slots__ = ("base", "bits")

    def __init__(self, base: BallPoint, bits: list[int]) -> None:
        self.base = base
        self.bits = bits

    def copy(self) -> "TowerPoint":
        return TowerPoint(self.base.copy(), list(self.bits))

    def shift(
        self,
        s: int,
        levels: tuple,
        carry_bound: int = DEFAULT_CARRY_BOUND,
        lookahead_bound: int = DEFAULT_LOOKAHEAD_BOUND,
    ) -> "TowerPoint":
        """Glued move: base move plus copy swaps on E crossings.

        The swap test runs on the source for the b-move and on the
        image for its inverse, which is what invertibility requires.
        """
        base = self.base
        if s == LETTER_B:
            if base.kind == BOUND_B:
                for j, level in enumerate(levels):
                    if membership_e(level, base, lookahead_bound):
                        self.bits[j] ^= 1
            base.shift(s, carry_bound)
        elif s == LETTER_BI:
            base.shift(s, carry_bound)
            if base.kind == BOUND_B:
                for j, level in enumerate(levels):
                    if membership_e(level, base, lookahead_bound):
                        self.bits[j] ^= 1
        else:
            base.shift(s, carry_bound)
        return self


def tower_points_equal(p: TowerPoint, q: TowerPoint) -> bool:
    return p.bits == q.bits and points_equal(p.base, q.base)


class TowerSystem:
    """A ball system glued k times."""

    def __init__(self, base: BallSystem, levels: tuple) -> None:
        self.base = base
        self.levels = tuple(levels)
        bound = base.lookahead_bound
        # integer digit windows for the hot membership test in walks
        self._windows = tuple(
            (
                threshold_digits(lv.window_lo, bound),
                threshold_digits(lv.window_hi, bound),
                lv.kappa != 0,
            )
            for lv in self.levels
        )

    def _swap_levels(self, base_point: BallPoint) -> list:
        """Indices of levels whose swap set contains the base point."""
        if base_point.kind != BOUND_B:
            return []
        out = []
        bound = self.base.lookahead_bound
        word = base_point.word
        for j, ((lo_d, lo_t), (hi_d, hi_t), active) in enumerate(self._windows):
            if not active:
                continue
            if not _value_less_digits(word, lo_d, lo_t, bound) and _value_less_digits(
                word, hi_d, hi_t, bound
            ):
                out.append(j)
        return out

    def shift_fast(self, point: TowerPoint, s: int) -> TowerPoint:
        """Glued move via precomputed integer windows (walk hot path)."""
        base = point.base
        if s == LETTER_B:
            if base.kind == BOUND_B:
                for j in self._swap_levels(base):
                    point.bits[j] ^= 1
            base.shift(s, self.base.carry_bound)
        elif s == LETTER_BI:
            base.shift(s, self.base.carry_bound)
            if base.kind == BOUND_B:
                for j in self._swap_levels(base):
                    point.bits[j] ^= 1
        else:
            base.shift(s, self.base.carry_bound)
        return point

    @property
    def level_count(self) -> int:
        return len(self.levels)

    def sample_point(self, point_id: int, bits: Sequence[int] | None = None) -> TowerPoint:
        """Base point by id; copy bits uniform unless pinned by the caller."""
        base = self.base.sample_point(point_id)
        if bits is None:
            u = splitmix64(mix(self.base.point_key(point_id), DOMAIN_WALK, 0xB175))
            bits = [(u >> j) & 1 for j in range(self.level_count)]
        else:
            bits = list(bits)
            if len(bits) != self.level_count:
                raise ValueError("bit vector length must match level count")
        return TowerPoint(base, bits)

    def shift(self, point: TowerPoint, s: int) -> TowerPoint:
        return point.shift(
            s, self.levels, self.base.carry_bound, self.base.lookahead_bound
        )


# -- chain algebra ------------------------------------------------------


def alpha_recursion(alpha: Fraction) -> Fraction:
    """Chain mass ratio across one glue level.

    0 is accepted as the degenerate fixed point even though a real
    construction starts from mass 1.
    """
    alpha = Fraction(alpha)
    if not 0 <= alpha <= 1:
        raise ConfigError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha * (1 - alpha / 4)


def tower_alphas(level_count: int) -> list[Fraction]:
    """Mass ratios alpha_0 = 1 .. alpha_k by the recursion."""
    alphas = [Fraction(1)]
    for _ in range(level_count):
        alphas.append(alpha_recursion(alphas[-1]))
    return alphas


@dataclass(frozen=True)
class ChainComponent:
    """One bit-fiber of the lifted chain: scale times a delayed density."""

    bits: tuple
    scale: Fraction
    delay: int

    def density_at(self, t: int) -> CylinderFunction:
        shifted = t - self.delay
        if shifted >= 0:
            raise ValueError(
                f"component time {shifted} is not negative; no exact form"
            )
        return ancient_density(shifted).scaled(self.scale)


def chain_components(levels: tuple, alphas: Sequence[Fraction] | None = None) -> list:
    """All 2^k bit-fiber components of the k-level lifted chain."""
    k = len(levels)
    if alphas is None:
        alphas = tower_alphas(k)
    comps = [ChainComponent(bits=(), scale=Fraction(1), delay=0)]
    for j, level in enumerate(levels):
        nxt = []
        ceiling = 1 - alphas[j] / 2
        for c in comps:
            nxt.append(ChainComponent(c.bits + (COPY_1,), c.scale, c.delay))
            nxt.append(
                ChainComponent(c.bits + (COPY_2,), c.scale * ceiling, c.delay + 2 * level.delay)
            )
        comps = nxt
    return comps


def chain_norm_ratio(levels: tuple, t: int) -> Fraction:
    """Exact L1 ratio of the lifted chain at negative time t.

    Sums true cylinder norms per component over the normalised tower
    measure; independent of the alpha recursion it is checked against.
    """
    comps = chain_components(levels)
    total = Fraction(0)
    for c in comps:
        total += c.density_at(t).l1_norm()
    return total / 2 ** len(levels)


def chain_support_constant(levels: tuple, t: int) -> Fraction:
    """C with support measure = C * 3**t at negative chain time t."""
    comps = chain_components(levels)
    total = Fraction(0)
    for c in comps:
        total += c.density_at(t).support_mass()
    return (total / 2 ** len(levels)) / Fraction(3) ** t


@dataclass(frozen=True)
class TowerBuildReport:
    alphas: list
    level_norm_ratios: list
    norms_match: bool
    support_constants: dict
    check_times: list


def tower_build(
    base: BallSystem,
    kappas: Sequence[Fraction],
    delays: Sequence[int],
    check_times: Sequence[int] = (-1, -3, -9),
) -> tuple:
    """Construct the tower and verify its chain algebra exactly.

    For every level prefix j the mass ratio from the recursion must
    equal the independently summed exact norm ratio, at every check
    time.  Returns (system, report).
    """
    kappas = [Fraction(k) for k in kappas]
    for k in kappas:
        if not 0 < k < Fraction(1, 4):
            raise ConfigError(f"kappa must lie in (0, 1/4), got {k}")
    levels = make_levels(kappas, delays)
    check_times = sorted(int(t) for t in check_times)
    if not check_times or check_times[-1] >= 0:
        raise ConfigError("check times must be negative")

    alphas = tower_alphas(len(levels))
    norms_match = True
    level_ratios = []
    for j in range(1, len(levels) + 1):
        prefix = levels[:j]
        ratios = {t: chain_norm_ratio(prefix, t) for t in check_times}
        values = set(ratios.values())
        level_ratios.append(ratios[check_times[0]])
        if len(values) != 1 or ratios[check_times[0]] != alphas[j]:
            norms_match = False
    support = {
        t: chain_support_constant(levels, t) for t in check_times
    }
    report = TowerBuildReport(
        alphas=alphas,
        level_norm_ratios=level_ratios,
        norms_match=norms_match,
        support_constants=support,
        check_times=check_times,
    )
    return TowerSystem(base, levels), report
