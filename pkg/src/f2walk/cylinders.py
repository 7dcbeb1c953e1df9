"""Exact densities on the slot lift, as finite unions of cylinders.

An atom ``(depth, prefix, slot, value)`` is ``value`` times the
indicator of {interior points at ``depth`` whose word starts with
``prefix``} x {``slot``}.  The reference measure gives stratum ``d``
mass ``3**-d``, a length-k prefix the conditional mass
``(1/4) * 3**-(k-1)``, and each slot weight 1/4.

``CylinderFunction`` keeps a canonical normal form (per depth and slot:
disjoint prefixes, maximally merged, no zeros) so equality of functions
is equality of representations.

``push_markov`` is the exact one-step Markov operator

    (Pg)(x, s) = (1/3) * sum over s' != s^-1 of g(T_{s^-1} x, s')

computed atom by atom.  A cancelling move from depth 1 would leave the
interior chart, so pushing a function that touches depth 1 is refused.

The ancient chain densities are built here.  The slot coordinate of the
chain is not pinned down by its defining identities alone in any obvious
way, so three candidate slot rules are implemented and
``calibrate_slot_rules`` picks the one that satisfies both identities
(unit mass, exact chain step); nothing downstream hard-codes the winner.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple

from .ball import INTERIOR, BallPoint
from .errors import BoundaryContactError
from .words import INV, LETTERS, SUCC, is_reduced


class Atom(NamedTuple):
    depth: int
    prefix: tuple
    slot: int
    value: Fraction


def prefix_mass(depth: int, prefix: tuple) -> Fraction:
    """Base-measure mass of one cylinder-times-slot atom."""
    m = Fraction(1, 3**depth) * Fraction(1, 4)  # stratum x slot
    if prefix:
        m *= Fraction(1, 4) * Fraction(1, 3 ** (len(prefix) - 1))
    return m


def _children(prefix: tuple) -> tuple:
    if not prefix:
        return tuple((x,) for x in LETTERS)
    return tuple(prefix + (x,) for x in SUCC[prefix[-1]])


def _normalize_group(entries: dict) -> dict:
    """Canonical form for one (depth, slot) group: prefix -> value."""
    # Split ancestors down until the supports are disjoint.
    changed = True
    while changed:
        changed = False
        for p in sorted(entries, key=len):
            lp = len(p)
            if any(len(q) > lp and q[:lp] == p for q in entries):
                v = entries.pop(p)
                for c in _children(p):
                    entries[c] = entries.get(c, Fraction(0)) + v
                changed = True
                break
    # Merge full equal-valued sibling sets, deepest first.
    changed = True
    while changed:
        changed = False
        for p in sorted(entries, key=len, reverse=True):
            if not p or p not in entries:
                continue
            parent = p[:-1]
            sibs = _children(parent)
            v = entries[p]
            if all(s in entries and entries[s] == v for s in sibs):
                for s in sibs:
                    del entries[s]
                entries[parent] = v
                changed = True
    return {p: v for p, v in entries.items() if v != 0}


class CylinderFunction:
    """Finite cylinder sum on the slot lift, interior strata only."""

    __slots__ = ("atoms", "_groups")

    def __init__(self, atoms: Iterable[Atom]) -> None:
        groups: dict = {}
        for a in atoms:
            if a.depth < 1:
                raise ValueError("cylinder atoms live on interior strata (depth >= 1)")
            if a.prefix and not is_reduced(a.prefix):
                raise ValueError(f"prefix {a.prefix} is not reduced")
            if a.slot not in LETTERS:
                raise ValueError(f"bad slot {a.slot}")
            key = (a.depth, a.slot)
            g = groups.setdefault(key, {})
            g[a.prefix] = g.get(a.prefix, Fraction(0)) + Fraction(a.value)
        groups = {k: _normalize_group(g) for k, g in groups.items()}
        groups = {k: g for k, g in groups.items() if g}
        flat = tuple(
            Atom(d, p, s, v)
            for (d, s), g in sorted(groups.items())
            for p, v in sorted(g.items())
        )
        object.__setattr__(self, "atoms", flat)
        object.__setattr__(self, "_groups", groups)

    def __setattr__(self, name, value):  # immutable after init
        raise AttributeError("CylinderFunction is immutable")

    def __eq__(self, other) -> bool:
        return isinstance(other, CylinderFunction) and self.atoms == other.atoms

    def __hash__(self) -> int:
        return hash(self.atoms)

    def __repr__(self) -> str:
        return f"CylinderFunction({len(self.atoms)} atoms)"

    # -- exact functionals --------------------------------------------

    def integral(self) -> Fraction:
        return sum((a.value * prefix_mass(a.depth, a.prefix) for a in self.atoms), Fraction(0))

    def l1_norm(self) -> Fraction:
        return sum(
            (abs(a.value) * prefix_mass(a.depth, a.prefix) for a in self.atoms), Fraction(0)
        )

    def support_mass(self) -> Fraction:
        return sum(
            (prefix_mass(a.depth, a.prefix) for a in self.atoms if a.value != 0), Fraction(0)
        )

    def depths(self) -> tuple:
        return tuple(sorted({a.depth for a in self.atoms}))

    def scaled(self, c) -> "CylinderFunction":
        c = Fraction(c)
        return CylinderFunction(Atom(a.depth, a.prefix, a.slot, a.value * c) for a in self.atoms)

    def plus(self, other: "CylinderFunction") -> "CylinderFunction":
        return CylinderFunction(self.atoms + other.atoms)

    # -- pointwise evaluation -----------------------------------------

    def eval(self, point: BallPoint, slot: int) -> Fraction:
        if point.kind != INTERIOR:
            return Fraction(0)
        group = self._groups.get((point.depth, slot))
        if not group:
            return Fraction(0)
        for prefix, value in group.items():
            if point.prefix(len(prefix)) == prefix:
                return value
        return Fraction(0)

    def eval_projected(self, point: BallPoint) -> Fraction:
        """Slot average (1/4) sum_s f(x, s)."""
        return sum((self.eval(point, s) for s in LETTERS), Fraction(0)) / 4


def push_atoms_raw(f: CylinderFunction) -> list[Atom]:
    """One Markov step, atom by atom, before normalization."""
    out: list[Atom] = []
    for depth, prefix, slot, value in f.atoms:
        if depth == 1:
            raise BoundaryContactError(
                "Markov push from depth 1 leaves the interior chart"
            )
        v3 = value / 3
        # cancelling preimages: one stratum shallower
        for s in LETTERS:
            if s == INV[slot]:
                continue
            if prefix and s == INV[prefix[0]]:
                continue
            out.append(Atom(depth - 1, (s,) + prefix, s, v3))
        # prepending preimages: one stratum deeper
        if not prefix:
            for s in LETTERS:
                if s == INV[slot]:
                    continue
                for t in LETTERS:
                    if t != s:
                        out.append(Atom(depth + 1, (t,), s, v3))
        elif prefix[0] != slot:
            s = INV[prefix[0]]
            if len(prefix) >= 2:
                out.append(Atom(depth + 1, prefix[1:], s, v3))
            else:
                for t in LETTERS:
                    if t != s:
                        out.append(Atom(depth + 1, (t,), s, v3))
    return out


def push_markov(f: CylinderFunction) -> CylinderFunction:
    return CylinderFunction(push_atoms_raw(f))


# -- ancient chain densities -------------------------------------------


class SlotRule(enum.Enum):
    """Candidate couplings of the chain's slot to its word."""

    FIRST_LETTER = "first_letter"
    FIRST_INVERSE = "first_inverse"
    PREPEND_FAN = "prepend_fan"


def ancient_density_with_rule(n: int, rule: SlotRule) -> CylinderFunction:
    """Chain density at negative time n: value 4*3**-n on stratum -n."""
    if n >= 0:
        raise ValueError("ancient densities are defined for negative times only")
    depth = -n
    value = Fraction(4 * 3**depth)
    if rule is SlotRule.FIRST_LETTER:
        atoms = [Atom(depth, (x,), x, value) for x in LETTERS]
    elif rule is SlotRule.FIRST_INVERSE:
        atoms = [Atom(depth, (x,), INV[x], value) for x in LETTERS]
    else:
        atoms = [
            Atom(depth, (x,), s, value) for x in LETTERS for s in LETTERS if s != INV[x]
        ]
    return CylinderFunction(atoms)


@dataclass(frozen=True)
class SlotCalibration:
    verdicts: dict
    selected: SlotRule


def calibrate_slot_rules(n_lo: int = -15, n_hi: int = -2) -> SlotCalibration:
    """Run both defining identities against every candidate rule.

    A valid chain has unit mass at every time and satisfies the exact
    Markov step between consecutive times.  Exactly one candidate may
    survive; anything else is an error in the construction itself.
    """
    verdicts = {}
    selected = None
    for rule in SlotRule:
        norm_ok = all(
            ancient_density_with_rule(n, rule).l1_norm() == 1
            for n in range(n_lo, 0)
        )
        chain_ok = all(
            push_markov(ancient_density_with_rule(n, rule))
            == ancient_density_with_rule(n + 1, rule)
            for n in range(n_lo, n_hi)
        )
        verdicts[rule] = {"norm_ok": norm_ok, "chain_ok": chain_ok}
        if norm_ok and chain_ok:
            if selected is not None:
                raise RuntimeError("slot calibration is ambiguous")
            selected = rule
    if selected is None:
        raise RuntimeError("no slot rule satisfies the chain identities")
    return SlotCalibration(verdicts=verdicts, selected=selected)


_CALIBRATED: SlotRule | None = None


def calibrated_slot_rule() -> SlotRule:
    global _CALIBRATED
    if _CALIBRATED is None:
        _CALIBRATED = calibrate_slot_rules().selected
    return _CALIBRATED


def ancient_density(n: int) -> CylinderFunction:
    return ancient_density_with_rule(n, calibrated_slot_rule())


def anchor_shape(f: CylinderFunction) -> tuple:
    """(depth, value) when f is a single-depth first-letter-slot fan.

    The walk estimator uses this O(1) membership form instead of the
    generic cylinder lookup on its hot path.
    """
    atoms = f.atoms
    if len(atoms) != 4:
        raise ValueError("not an anchor-shaped density")
    depth = atoms[0].depth
    value = atoms[0].value
    for a in atoms:
        if not (a.depth == depth and a.value == value and a.prefix == (a.slot,)):
            raise ValueError("not an anchor-shaped density")
    return depth, value
