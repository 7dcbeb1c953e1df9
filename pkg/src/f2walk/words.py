"""Reduced words over two free generators.

Letters are 2-bit codes so that inversion is a single XOR:

    a = 0, b = 1, a^-1 = 2, b^-1 = 3,   inverse(x) = x ^ 2

The code order doubles as the global letter order a < b < a^-1 < b^-1
used for lexicographic enumeration.  ASCII form is ``a b A B``.

A reduced word is a tuple of letter codes with no adjacent inverse
pair.  Words act on systems on the left: the leftmost letter is the
last map applied (see ``finite.apply_group``).
"""

from __future__ import annotations

import random
from typing import Iterator, Sequence

from .errors import CapExceededError

LETTER_A, LETTER_B, LETTER_AI, LETTER_BI = 0, 1, 2, 3
LETTERS = (0, 1, 2, 3)
CHARS = "abAB"
CODE_OF = {c: i for i, c in enumerate(CHARS)}

# INV[x] is the inverse letter; SUCC[x] the three letters that may
# follow x in a reduced word, ascending; SUCC_INDEX[x][y] the position
# of y in SUCC[x] (-1 when y is the forbidden inverse).
INV = (2, 3, 0, 1)
SUCC = tuple(tuple(y for y in LETTERS if y != INV[x]) for x in LETTERS)
SUCC_INDEX = tuple(
    tuple(SUCC[x].index(y) if y != INV[x] else -1 for y in LETTERS) for x in LETTERS
)

ENUMERATION_CAP = 12

Word = tuple  # tuple[int, ...]


def is_reduced(word: Sequence[int]) -> bool:
    return all(word[i + 1] != INV[word[i]] for i in range(len(word) - 1))


def word_from_str(text: str) -> Word:
    try:
        word = tuple(CODE_OF[c] for c in text)
    except KeyError as exc:
        raise ValueError(f"unknown letter {exc.args[0]!r}") from exc
    if not is_reduced(word):
        raise ValueError(f"word {text!r} is not reduced")
    return word


def word_to_str(word: Sequence[int]) -> str:
    return "".join(CHARS[x] for x in word)


def invert(word: Sequence[int]) -> Word:
    return tuple(INV[x] for x in reversed(word))


def reduce_concat(left: Sequence[int], right: Sequence[int]) -> Word:
    """Product of two reduced words, with cancellation at the seam."""
    stack = list(left)
    for x in right:
        if stack and stack[-1] == INV[x]:
            stack.pop()
        else:
            stack.append(x)
    return tuple(stack)


def sphere_size(n: int) -> int:
    if n < 0:
        raise ValueError("sphere radius must be >= 0")
    if n == 0:
        return 1
    return 4 * 3 ** (n - 1)


def enumerate_sphere(n: int, cap: int | None = None) -> Iterator[Word]:
    """All reduced words of length ``n`` in lexicographic order.

    Generated by depth-first extension, which coincides with the
    lexicographic order because SUCC is ascending.  Radii above the cap
    are refused rather than silently attempted.
    """
    limit = ENUMERATION_CAP if cap is None else cap
    if n > limit:
        raise CapExceededError(f"sphere radius {n} exceeds enumeration cap {limit}")
    if n < 0:
        raise ValueError("sphere radius must be >= 0")
    if n == 0:
        yield ()
        return

    word = [0] * n

    def rec(pos: int) -> Iterator[Word]:
        choices = LETTERS if pos == 0 else SUCC[word[pos - 1]]
        for x in choices:
            word[pos] = x
            if pos == n - 1:
                yield tuple(word)
            else:
                yield from rec(pos + 1)

    yield from rec(0)


def sample_uniform_sphere(n: int, rng: random.Random) -> Word:
    """Uniform reduced word of length ``n``; no cap, cost O(n)."""
    if n < 0:
        raise ValueError("sphere radius must be >= 0")
    if n == 0:
        return ()
    word = [rng.randrange(4)]
    for _ in range(n - 1):
        word.append(SUCC[word[-1]][rng.randrange(3)])
    return tuple(word)


def nbw_step(last: int | None, rng: random.Random) -> int:
    """One non-backtracking extension; uniform start when ``last`` is None."""
    if last is None:
        return rng.randrange(4)
    return SUCC[last][rng.randrange(3)]
