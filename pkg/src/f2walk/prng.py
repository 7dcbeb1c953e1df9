"""Counter-based deterministic randomness.

Every random quantity in the package is a pure function of
``(experiment seed, stream labels..., counter)``.  That keeps replays
byte-identical regardless of evaluation order, lets divergent copies of
a lazily materialised point agree on letters they have not generated
yet, and makes worker scheduling irrelevant to results.

Two layers:

* ``splitmix64`` / ``mix`` -- scalar stream derivation, used for point
  tails and stratum draws where volume is tiny.
* numpy ``Philox`` keyed through ``mix`` -- bulk walk randomness, see
  ``estimator``.
"""

from __future__ import annotations

from dataclasses import dataclass

MASK64 = (1 << 64) - 1

# Domain tags keep unrelated streams derived from the same key apart.
DOMAIN_DIGIT = 0x9E1EC0DE00000001
DOMAIN_FIRST = 0x9E1EC0DE00000002
DOMAIN_STRATUM = 0x9E1EC0DE00000003
DOMAIN_POINT = 0x9E1EC0DE00000004
DOMAIN_WALK = 0x9E1EC0DE00000005


def splitmix64(x: int) -> int:
    """One output of the splitmix64 generator seeded at ``x``."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix(*parts: int) -> int:
    """Fold integers into a single 64-bit stream key."""
    h = 0x243F6A8885A308D3
    for p in parts:
        h = splitmix64((h ^ (p & MASK64)) & MASK64)
    return h


@dataclass(frozen=True)
class TailSource:
    """Read-only random tape backing one lazily materialised point.

    ``digit(i)`` is the i-th base-3 tail digit; ``first_letter()`` the
    letter draw used by interior sampling.  Both depend only on the key
    and the index, never on call order.
    """

    key: int

    def digit(self, index: int) -> int:
        # 2**64 % 3 == 1, so the modulo bias is 2**-63; irrelevant here.
        return splitmix64(mix(self.key, DOMAIN_DIGIT, index)) % 3

    def first_letter(self) -> int:
        return splitmix64(mix(self.key, DOMAIN_FIRST)) & 3

    def uniform01(self, index: int) -> float:
        return splitmix64(mix(self.key, DOMAIN_STRATUM, index)) / 2.0**64
