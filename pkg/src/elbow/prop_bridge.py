"""Propositional clause entailment as EL-btw subsumption.

A clause ``x1 | ... | xn | ~y1 | ... | ~ym`` becomes the inclusion
``X1 & ... & Xn <= btw(Y1, btw(Y2, ...))`` over natural names, with ``top``
on the left when there are no positive literals. The translation needs at
least one negative literal per clause; :func:`guard_with_fresh_atom` adds one
to every clause while keeping entailment intact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable

from .sat import parse_dimacs
from .syntax import TOP, ConceptInclusion, Name, TBox, btw, conj

MAX_TRUTH_TABLE_ATOMS = 20
NAME_PREFIX = "P_"


@dataclass(frozen=True)
class Clause:
    positives: frozenset = frozenset()
    negatives: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "positives", frozenset(self.positives))
        object.__setattr__(self, "negatives", frozenset(self.negatives))
        clash = self.positives & self.negatives
        if clash:
            raise ValueError(f"atom occurs with both signs: {sorted(clash)}")

    @property
    def atoms(self) -> frozenset:
        return self.positives | self.negatives

    @classmethod
    def of(cls, *literals: str) -> "Clause":
        """Build from literals written ``a`` or ``-a`` (``~a`` and ``!a`` also work)."""
        pos, neg = set(), set()
        for lit in literals:
            if lit[:1] in "-~!":
                neg.add(lit[1:])
            else:
                pos.add(lit)
        return cls(frozenset(pos), frozenset(neg))

    def satisfied_by(self, true_atoms) -> bool:
        return bool(self.positives & true_atoms) or not self.negatives <= true_atoms

    def __str__(self) -> str:
        lits = sorted(self.positives) + ["-" + a for a in sorted(self.negatives)]
        return " | ".join(lits) if lits else "false"


def atoms_of(clauses: Iterable[Clause]) -> frozenset:
    out = set()
    for c in clauses:
        out |= c.atoms
    return frozenset(out)


def fresh_atom(taken: Iterable[str], base: str = "g") -> str:
    taken = set(taken)
    k = 0
    while f"{base}{k}" in taken:
        k += 1
    return f"{base}{k}"


def guard_with_fresh_atom(premises: Iterable[Clause], conclusion: Clause, fresh: str | None = None):
    """Add ``~x`` to every clause for an atom ``x`` not occurring anywhere."""
    premises = list(premises)
    x = fresh or fresh_atom(atoms_of(premises + [conclusion]))
    if x in atoms_of(premises + [conclusion]):
        raise ValueError(f"guard atom {x!r} is not fresh")

    def guard(c: Clause) -> Clause:
        return Clause(c.positives, c.negatives | {x})

    return [guard(c) for c in premises], guard(conclusion), x


def concept_name(atom: str) -> str:
    return NAME_PREFIX + atom


def tau(clause: Clause, nesting: str = "right") -> ConceptInclusion:
    if not clause.negatives:
        raise ValueError(f"clause {clause} has no negative literal")
    ys = [Name(concept_name(a)) for a in sorted(clause.negatives)]
    if nesting == "left":
        rhs = ys[0]
        for y in ys[1:]:
            rhs = btw(rhs, y)
    else:
        rhs = btw(*ys)
    lhs = conj(*(Name(concept_name(a)) for a in sorted(clause.positives)))
    return ConceptInclusion(lhs, rhs)


def reduce_entailment(premises: Iterable[Clause], conclusion: Clause, nesting: str = "right"):
    """TBox and query inclusion with ``premises |= conclusion`` iff the TBox entails the query."""
    premises = list(premises)
    if any(not c.negatives for c in premises + [conclusion]):
        premises, conclusion, _ = guard_with_fresh_atom(premises, conclusion)
    natural = frozenset(concept_name(a) for a in atoms_of(premises + [conclusion]))
    tbox = TBox(tuple(tau(c, nesting) for c in premises), natural)
    return tbox, tau(conclusion, nesting)


def truth_table_entails(premises: Iterable[Clause], conclusion: Clause) -> bool:
    premises = list(premises)
    atoms = sorted(atoms_of(premises + [conclusion]))
    if len(atoms) > MAX_TRUTH_TABLE_ATOMS:
        raise ValueError(f"{len(atoms)} atoms exceed the truth-table bound of {MAX_TRUTH_TABLE_ATOMS}")
    for bits in itertools.product((False, True), repeat=len(atoms)):
        true_atoms = frozenset(a for a, b in zip(atoms, bits) if b)
        if all(c.satisfied_by(true_atoms) for c in premises) and not conclusion.satisfied_by(true_atoms):
            return False
    return True


def clauses_from_dimacs(text: str) -> list[Clause]:
    """Clauses of a DIMACS document; variable ``k`` becomes atom ``xk``."""
    _, raw = parse_dimacs(text)
    return [clause_from_ints(c) for c in raw]


def clause_from_ints(lits: Iterable[int]) -> Clause:
    lits = list(lits)
    pos = {f"x{l}" for l in lits if l > 0}
    neg = {f"x{-l}" for l in lits if l < 0}
    return Clause(frozenset(pos), frozenset(neg))


def clauses_to_dimacs(clauses: Iterable[Clause]) -> str:
    clauses = list(clauses)
    atoms = sorted(atoms_of(clauses))
    num = {a: i + 1 for i, a in enumerate(atoms)}
    lines = [f"c {num[a]} {a}" for a in atoms]
    lines.append(f"p cnf {len(atoms)} {len(clauses)}")
    for c in clauses:
        lits = [num[a] for a in sorted(c.positives)] + [-num[a] for a in sorted(c.negatives)]
        lines.append(" ".join(map(str, lits + [0])))
    return "\n".join(lines) + "\n"


__all__ = [
    "Clause",
    "TOP",
    "clause_from_ints",
    "clauses_from_dimacs",
    "clauses_to_dimacs",
    "guard_with_fresh_atom",
    "reduce_entailment",
    "tau",
    "truth_table_entails",
]
