"""The ball measure system: strata of half-infinite words plus boundary.

Points live in strata indexed by depth: interior stratum ``d >= 1``
carries measure ``3**-d`` (total 1/2), and two boundary classes carry
1/4 each.  A point is a lazily materialised half-infinite reduced word;
unrevealed letters come from a counter-based tape, so divergent copies
of one point agree on everything they ever reveal.

Boundary classes identify a word with its letterwise inverse
(reflection).  The canonical representative starts with ``b`` on the
A-side and with ``a`` on the B-side.  The stored letters are always the
canonical word; a reflect flag only redirects how future tape digits
are turned into appended letters, which keeps reveal order irrelevant.

Generator moves:

* interior, non-cancelling letter: prepend, one stratum shallower;
  at depth 1 the result lands on the boundary and is canonicalised.
* interior, cancelling letter: drop the first letter, one deeper.
* A-side boundary: ``a`` steps the base-3 odometer on the digit stream
  forward, ``a^-1`` backward; ``b``/``b^-1`` peel the class back into
  the depth-1 interior (the ``b`` move through the reflected
  representative, hence the flag toggle).
* B-side boundary: ``b`` and ``b^-1`` act as the identity; ``a``/
  ``a^-1`` peel into the interior symmetrically.

Every move is invertible and preserves stratum measure; the survey in
``axiom_survey`` checks the required identities pointwise and the
stratum laws statistically.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import CarryBoundError, LookaheadExceededError
from .prng import DOMAIN_POINT, DOMAIN_STRATUM, TailSource, mix, splitmix64
from .words import INV, LETTER_A, LETTER_AI, LETTER_B, LETTER_BI, SUCC, SUCC_INDEX

INTERIOR, BOUND_A, BOUND_B = 0, 1, 2
KIND_NAMES = ("interior", "boundary_a", "boundary_b")

DEFAULT_CARRY_BOUND = 64
DEFAULT_LOOKAHEAD_BOUND = 64


class LazyWord:
    """Half-infinite reduced word, materialised on demand."""

    __slots__ = ("letters", "tail", "next_abs", "reflected")

    def __init__(
        self,
        letters: list[int],
        tail: TailSource,
        next_abs: int = 0,
        reflected: bool = False,
    ) -> None:
        self.letters = letters
        self.tail = tail
        self.next_abs = next_abs
        self.reflected = reflected

    def copy(self) -> "LazyWord":
        return LazyWord(list(self.letters), self.tail, self.next_abs, self.reflected)

    def extend_one(self) -> None:
        d = self.tail.digit(self.next_abs)
        self.next_abs += 1
        last = self.letters[-1]
        if self.reflected:
            self.letters.append(INV[SUCC[INV[last]][d]])
        else:
            self.letters.append(SUCC[last][d])

    def extend_to(self, length: int) -> None:
        while len(self.letters) < length:
            self.extend_one()

    def letter(self, index: int) -> int:
        self.extend_to(index + 1)
        return self.letters[index]

    def digit(self, index: int) -> int:
        """Base-3 digit i: position of letter i+1 among the successors of letter i."""
        self.extend_to(index + 2)
        return SUCC_INDEX[self.letters[index]][self.letters[index + 1]]

    def reflect(self) -> None:
        """Letterwise inverse; future extensions keep the same tape."""
        self.letters = [INV[x] for x in self.letters]
        self.reflected = not self.reflected


def odometer_digits(digits: list[int], delta: int) -> int:
    """Add ``delta`` (+1/-1) to a little-endian base-3 digit list in place.

    Returns the index where the carry stopped.  Raises IndexError past
    the end; callers extend first (see ``_odometer_word``).
    """
    i = 0
    if delta == 1:
        while digits[i] == 2:
            digits[i] = 0
            i += 1
        digits[i] += 1
    elif delta == -1:
        while digits[i] == 0:
            digits[i] = 2
            i += 1
        digits[i] -= 1
    else:
        raise ValueError("delta must be +1 or -1")
    return i


def _odometer_word(word: LazyWord, delta: int, carry_bound: int) -> None:
    letters = word.letters
    word.extend_to(2)
    digits = [SUCC_INDEX[letters[i]][letters[i + 1]] for i in range(len(letters) - 1)]
    carrying = 2 if delta == 1 else 0
    i = 0
    while True:
        if i >= carry_bound:
            raise CarryBoundError(f"odometer carry exceeded bound {carry_bound}")
        if i >= len(digits):
            word.extend_one()
            digits.append(SUCC_INDEX[letters[-2]][letters[-1]])
        if digits[i] != carrying:
            break
        i += 1
    odometer_digits(digits, delta)
    for j in range(len(digits)):
        letters[j + 1] = SUCC[letters[j]][digits[j]]


def digitvalue_less(word: LazyWord, threshold: Fraction, lookahead_bound: int) -> bool:
    """Whether the digit stream, read as a base-3 value in [0,1), is < threshold.

    Resolves lazily digit by digit; a comparison that stays tied past
    the lookahead bound aborts rather than guessing.
    """
    if threshold <= 0:
        return False
    if threshold >= 1:
        return True
    t = Fraction(threshold)
    for i in range(lookahead_bound):
        t *= 3
        td = int(t)
        d = word.digit(i)
        if d < td:
            return True
        if d > td:
            return False
        t -= td
        if t == 0:
            # threshold expansion terminated; value's tail is >= 0
            return False
    raise LookaheadExceededError(
        f"digit comparison unresolved after {lookahead_bound} digits"
    )


class BallPoint:
    """A point of the system: stratum plus lazy word."""

    __slots__ = ("kind", "depth", "word")

    def __init__(self, kind: int, depth: int, word: LazyWord) -> None:
        self.kind = kind
        self.depth = depth
        self.word = word

    def copy(self) -> "BallPoint":
        return BallPoint(self.kind, self.depth, self.word.copy())

    def first_letter(self) -> int:
        return self.word.letters[0]

    def prefix(self, length: int) -> tuple:
        self.word.extend_to(length)
        return tuple(self.word.letters[:length])

    def shift(self, s: int, carry_bound: int = DEFAULT_CARRY_BOUND) -> "BallPoint":
        """Apply the generator move T_s in place; returns self."""
        kind = self.kind
        word = self.word
        if kind == INTERIOR:
            if s == INV[word.letters[0]]:
                word.extend_to(2)
                del word.letters[0]
                self.depth += 1
            elif self.depth > 1:
                word.letters.insert(0, s)
                self.depth -= 1
            else:
                word.letters.insert(0, s)
                self.depth = 0
                if s == LETTER_B:
                    self.kind = BOUND_A
                elif s == LETTER_BI:
                    word.reflect()
                    self.kind = BOUND_A
                elif s == LETTER_A:
                    self.kind = BOUND_B
                else:
                    word.reflect()
                    self.kind = BOUND_B
        elif kind == BOUND_A:
            if s == LETTER_A:
                _odometer_word(word, 1, carry_bound)
            elif s == LETTER_AI:
                _odometer_word(word, -1, carry_bound)
            else:
                word.extend_to(2)
                del word.letters[0]
                if s == LETTER_B:
                    word.reflect()
                self.kind = INTERIOR
                self.depth = 1
        else:  # BOUND_B: b-moves act trivially
            if s == LETTER_A:
                word.extend_to(2)
                del word.letters[0]
                word.reflect()
                self.kind = INTERIOR
                self.depth = 1
            elif s == LETTER_AI:
                word.extend_to(2)
                del word.letters[0]
                self.kind = INTERIOR
                self.depth = 1
        return self

    def apply_word(self, word: tuple, carry_bound: int = DEFAULT_CARRY_BOUND) -> "BallPoint":
        """Apply T_w; leftmost letter applied last."""
        for s in reversed(word):
            self.shift(s, carry_bound)
        return self


def points_equal(p: BallPoint, q: BallPoint, slack: int = 2) -> bool:
    """Structural equality, comparing letters to a common frontier.

    The extra ``slack`` letters expose diverging tape translation (a
    reflect-flag mismatch) that the already-materialised prefix hides.
    """
    if p.kind != q.kind or p.depth != q.depth:
        return False
    frontier = max(len(p.word.letters), len(q.word.letters)) + slack
    p.word.extend_to(frontier)
    q.word.extend_to(frontier)
    return p.word.letters == q.word.letters


class BallSystem:
    """Sampling front end: one seed, reproducible points by id."""

    def __init__(
        self,
        seed: int,
        enumeration_cap: int = 12,
        carry_bound: int = DEFAULT_CARRY_BOUND,
        lookahead_bound: int = DEFAULT_LOOKAHEAD_BOUND,
    ) -> None:
        self.seed = seed
        self.enumeration_cap = enumeration_cap
        self.carry_bound = carry_bound
        self.lookahead_bound = lookahead_bound

    def point_key(self, point_id: int) -> int:
        return mix(self.seed, DOMAIN_POINT, point_id)

    def sample_stratum(self, point_id: int) -> tuple:
        """Exact inversion of the stratum law from one 64-bit draw."""
        u = splitmix64(mix(self.point_key(point_id), DOMAIN_STRATUM))
        quarter = 1 << 62
        if u < quarter:
            return (BOUND_A, 0)
        if u < 2 * quarter:
            return (BOUND_B, 0)
        v = u - 2 * quarter
        half = 2 * quarter
        # P(depth = d | interior) = 2 * 3**-d; CDF 1 - 3**-d
        d = 1
        p3 = 3
        while v * p3 >= half * (p3 - 1):
            d += 1
            p3 *= 3
        return (INTERIOR, d)

    def make_point(self, point_id: int, kind: int, depth: int) -> BallPoint:
        tail = TailSource(self.point_key(point_id))
        if kind == INTERIOR:
            if depth < 1:
                raise ValueError("interior depth must be >= 1")
            letters = [tail.first_letter()]
        elif kind == BOUND_A:
            letters = [LETTER_B]
            depth = 0
        elif kind == BOUND_B:
            letters = [LETTER_A]
            depth = 0
        else:
            raise ValueError(f"unknown stratum kind {kind}")
        return BallPoint(kind, depth, LazyWord(letters, tail))

    def sample_point(self, point_id: int) -> BallPoint:
        kind, depth = self.sample_stratum(point_id)
        return self.make_point(point_id, kind, depth)


# -- axiom survey ------------------------------------------------------

STRATUM_MASS = {
    "boundary_a": Fraction(1, 4),
    "boundary_b": Fraction(1, 4),
    "interior": Fraction(1, 2),
}


def _stratum_label(p: BallPoint) -> str:
    return KIND_NAMES[p.kind]


def axiom_survey(system: BallSystem, samples: int, point_id_base: int = 0) -> dict:
    """Pointwise identity checks plus stratum-law statistics.

    Hard checks (zero tolerance): every generator move followed by its
    inverse restores the point; the A-side stays A-side under a-moves;
    b-moves fix the B-side pointwise; a-moves send the B-side into the
    depth-1 interior and into a b-move image of the A-side.

    Statistical checks: stratum frequencies of the sample and of each
    generator's image match the exact stratum masses.
    """
    violations = {
        "invertibility": 0,
        "a_side_invariance": 0,
        "b_side_identity": 0,
        "inclusion": 0,
    }
    source_counts = {name: 0 for name in KIND_NAMES}
    image_counts = {s: {name: 0 for name in KIND_NAMES} for s in range(4)}
    bound = system.carry_bound

    for i in range(samples):
        p = system.sample_point(point_id_base + i)
        source_counts[_stratum_label(p)] += 1
        for s in range(4):
            q = p.copy().shift(s, bound)
            image_counts[s][_stratum_label(q)] += 1
            q.shift(INV[s], bound)
            if not points_equal(q, p):
                violations["invertibility"] += 1
        if p.kind == BOUND_A:
            for s in (LETTER_A, LETTER_AI):
                if p.copy().shift(s, bound).kind != BOUND_A:
                    violations["a_side_invariance"] += 1
        elif p.kind == BOUND_B:
            for s in (LETTER_B, LETTER_BI):
                if not points_equal(p.copy().shift(s, bound), p):
                    violations["b_side_identity"] += 1
            y = p.copy().shift(LETTER_A, bound)
            if not (y.kind == INTERIOR and y.depth == 1):
                violations["inclusion"] += 1
            else:
                via_b = y.copy().shift(LETTER_BI, bound).kind == BOUND_A
                via_bi = y.copy().shift(LETTER_B, bound).kind == BOUND_A
                if not (via_b or via_bi):
                    violations["inclusion"] += 1

    freq = {
        "source": {k: v / samples for k, v in source_counts.items()},
        "images": {
            s: {k: v / samples for k, v in image_counts[s].items()} for s in range(4)
        },
    }
    expected = {k: float(v) for k, v in STRATUM_MASS.items()}
    # four-sigma binomial bands around the exact masses
    stratum_ok = True
    max_dev = 0.0
    for counts in [source_counts] + [image_counts[s] for s in range(4)]:
        for name, mass in expected.items():
            sigma = (mass * (1 - mass) / samples) ** 0.5
            dev = abs(counts[name] / samples - mass)
            max_dev = max(max_dev, dev)
            if dev > 4 * sigma:
                stratum_ok = False
    return {
        "samples": samples,
        "violations": violations,
        "violation_total": sum(violations.values()),
        "stratum_frequencies": freq,
        "stratum_expected": expected,
        "stratum_within_band": stratum_ok,
        "stratum_max_deviation": max_dev,
    }
