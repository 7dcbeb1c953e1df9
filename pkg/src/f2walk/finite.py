"""Finite permutation systems and the exact sphere/Markov identity.

A finite system is two permutations of ``{0..N-1}`` (the generator
actions) plus positive rational state weights.  Invariance forces the
weights to be constant on the joint orbits of both permutations; the
constructor rejects anything else.

Two independent routes compute the spherical average and must agree
exactly:

* ``avg_operator``   -- direct enumeration of the radius-n sphere;
* ``markov_power``   -- pull back to the 4-slot lift, apply the Markov
  step n times, push forward.

``check_identity`` compares them with exact rationals.  The two code
paths intentionally share nothing beyond the permutation tables.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .words import INV, enumerate_sphere, invert, sphere_size

Density = tuple  # tuple[Fraction, ...]


def _check_perm(perm: Sequence[int], size: int, name: str) -> tuple:
    if len(perm) != size or sorted(perm) != list(range(size)):
        raise ValueError(f"{name} is not a permutation of 0..{size - 1}")
    return tuple(perm)


def _joint_orbits(perm_a: Sequence[int], perm_b: Sequence[int]) -> list[int]:
    """Orbit id per state under the group generated by both permutations."""
    size = len(perm_a)
    parent = list(range(size))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for x in range(size):
        for y in (perm_a[x], perm_b[x]):
            rx, ry = find(x), find(y)
            if rx != ry:
                parent[rx] = ry
    return [find(x) for x in range(size)]


@dataclass(frozen=True)
class FiniteSystem:
    """Measure-preserving action of two generators on a finite set."""

    perm_a: tuple
    perm_b: tuple
    weights: tuple

    def __post_init__(self) -> None:
        size = len(self.perm_a)
        object.__setattr__(self, "perm_a", _check_perm(self.perm_a, size, "perm_a"))
        object.__setattr__(self, "perm_b", _check_perm(self.perm_b, size, "perm_b"))
        weights = tuple(Fraction(w) for w in self.weights)
        if len(weights) != size:
            raise ValueError("weights length does not match state count")
        if any(w <= 0 for w in weights):
            raise ValueError("weights must be positive")
        orbit = _joint_orbits(self.perm_a, self.perm_b)
        for x in range(size):
            if weights[x] != weights[orbit[x]]:
                raise ValueError("weights must be constant on generator orbits")
        object.__setattr__(self, "weights", weights)
        inv_a = [0] * size
        inv_b = [0] * size
        for x in range(size):
            inv_a[self.perm_a[x]] = x
            inv_b[self.perm_b[x]] = x
        # letter code -> action table, in the a, b, a^-1, b^-1 order
        object.__setattr__(
            self, "letter_perm", (self.perm_a, self.perm_b, tuple(inv_a), tuple(inv_b))
        )

    @property
    def size(self) -> int:
        return len(self.perm_a)

    def total_mass(self) -> Fraction:
        return sum(self.weights, Fraction(0))

    # -- serialization ------------------------------------------------

    def to_text(self) -> str:
        payload = {
            "perm_a": list(self.perm_a),
            "perm_b": list(self.perm_b),
            "weights": [str(w) for w in self.weights],
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_text(cls, text: str) -> "FiniteSystem":
        payload = json.loads(text)
        return cls(
            tuple(payload["perm_a"]),
            tuple(payload["perm_b"]),
            tuple(Fraction(w) for w in payload["weights"]),
        )


def two_point_swap() -> FiniteSystem:
    """Both generators swap two equal-weight states."""
    return FiniteSystem((1, 0), (1, 0), (Fraction(1, 2), Fraction(1, 2)))


def random_system(rng: random.Random, max_states: int = 10) -> FiniteSystem:
    """Random valid system: random permutations, random orbit weights."""
    size = rng.randint(2, max_states)
    perm_a = list(range(size))
    perm_b = list(range(size))
    rng.shuffle(perm_a)
    rng.shuffle(perm_b)
    orbit = _joint_orbits(perm_a, perm_b)
    orbit_weight = {
        o: Fraction(rng.randint(1, 9), rng.randint(1, 9)) for o in set(orbit)
    }
    weights = tuple(orbit_weight[o] for o in orbit)
    return FiniteSystem(tuple(perm_a), tuple(perm_b), weights)


def random_density(rng: random.Random, size: int) -> Density:
    return tuple(Fraction(rng.randint(0, 9), rng.randint(1, 9)) for _ in range(size))


# -- group action and sphere route ------------------------------------


def apply_word_perm(system: FiniteSystem, word: Sequence[int]) -> tuple:
    """State map of T_w; leftmost letter applied last."""
    size = system.size
    cur = list(range(size))
    for letter in reversed(word):
        table = system.letter_perm[letter]
        cur = [table[c] for c in cur]
    return tuple(cur)


def apply_group(system: FiniteSystem, word: Sequence[int], state: int) -> int:
    for letter in reversed(word):
        state = system.letter_perm[letter][state]
    return state


def avg_operator(
    system: FiniteSystem, f: Sequence[Fraction], n: int, cap: int | None = None
) -> Density:
    """Spherical average by direct enumeration: exact rationals."""
    size = system.size
    total = [Fraction(0)] * size
    count = 0
    for g in enumerate_sphere(n, cap=cap):
        perm = apply_word_perm(system, invert(g))
        for x in range(size):
            total[x] += f[perm[x]]
        count += 1
    assert count == sphere_size(n)
    return tuple(t / count for t in total)


def maximal_function(
    system: FiniteSystem, f: Sequence[Fraction], n_max: int, cap: int | None = None
) -> Density:
    """Pointwise max of the spherical averages over radii 1..n_max."""
    best = list(avg_operator(system, f, 1, cap=cap))
    for n in range(2, n_max + 1):
        avg = avg_operator(system, f, n, cap=cap)
        best = [max(b, a) for b, a in zip(best, avg)]
    return tuple(best)


# -- Markov lift route -------------------------------------------------


def pullback(system: FiniteSystem, f: Sequence[Fraction]) -> Density:
    """Lift to the 4-slot extension; slot-independent."""
    return tuple(f[i // 4] for i in range(system.size * 4))


def pushforward(system: FiniteSystem, g: Sequence[Fraction]) -> Density:
    """Average the four slots back down."""
    return tuple(
        sum(g[x * 4 + s] for s in range(4)) / Fraction(4) for x in range(system.size)
    )


def markov_step(system: FiniteSystem, g: Sequence[Fraction]) -> Density:
    """(Pg)(x, s) = (1/3) sum over s' != s^-1 of g(T_{s^-1} x, s')."""
    out = [Fraction(0)] * (system.size * 4)
    for x in range(system.size):
        for s in range(4):
            y = system.letter_perm[INV[s]][x]
            acc = Fraction(0)
            for sp in range(4):
                if sp != INV[s]:
                    acc += g[y * 4 + sp]
            out[x * 4 + s] = acc / 3
    return tuple(out)


def markov_power(system: FiniteSystem, f: Sequence[Fraction], n: int) -> Density:
    g = pullback(system, f)
    for _ in range(n):
        g = markov_step(system, g)
    return pushforward(system, g)


def lift_norm(system: FiniteSystem, g: Sequence[Fraction]) -> Fraction:
    """L1 norm on the lift: slot measure is weight/4 per slot."""
    return sum(
        abs(g[x * 4 + s]) * system.weights[x] / 4
        for x in range(system.size)
        for s in range(4)
    )


def check_identity(
    system: FiniteSystem, f: Sequence[Fraction], n: int, cap: int | None = None
) -> bool:
    """Exact agreement of the sphere route and the Markov route."""
    return avg_operator(system, f, n, cap=cap) == markov_power(system, f, n)
