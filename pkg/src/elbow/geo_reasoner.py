"""Sound forward chaining for TBoxes with non-interference under region semantics.

Facts are Horn rules ``L -> c``: a set ``L`` of atoms (names, ``top`` and
``btw`` atoms, read conjunctively) lies below the atom ``c``. Everything
reachable from a conjunction ``K`` is computed by closing ``K`` under the
current rules. Saturation keeps adding rules justified by (trace labels in
brackets):

* the EL rules (told inclusions, existential chaining),
* operands lie below their ``btw`` atom,
* two natural concepts below a natural ``B`` put their ``btw`` below ``B``
  [natural-btw],
* ``A ni (C, D)``, ``A & C <= B`` and ``D <= B`` give ``A & btw(C, D) <= B``
  [guarded-btw] (and with ``C`` and ``D`` exchanged [guarded-btw-mirror]),
* ``A ni (C, D)``, ``A ni (D, C)``, ``A & C <= B`` and ``A & D <= B`` give the same
  [two-sided-guarded-btw],
* non-interference guards for one pair are closed under conjunction [guard-meet].

There is no complete procedure for this logic; an underived inclusion is
reported as unknown, never as refuted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .feature_reasoner import TraceStep
from .normalizer import normalize
from .syntax import (
    TOP,
    Between,
    ConceptExpr,
    ConceptInclusion,
    Conj,
    Exists,
    Name,
    TBox,
    Top,
    conj,
)

GUARD_UNION_CAP = 4096


class _Universe:
    def __init__(self, natural: frozenset):
        self.atoms: list = [TOP]
        self.pos: dict = {TOP: 0}
        self.natural_names = natural

    def add(self, a) -> int:
        if a not in self.pos:
            self.pos[a] = len(self.atoms)
            self.atoms.append(a)
        return self.pos[a]

    def natural(self, i: int) -> bool:
        a = self.atoms[i]
        return isinstance(a, (Top, Between)) or (isinstance(a, Name) and a.name in self.natural_names)

    def mask(self, atoms: Iterable) -> int:
        m = 0
        for a in atoms:
            m |= 1 << self.add(a)
        return m

    def render(self, mask: int) -> ConceptExpr:
        parts = [self.atoms[i] for i in _bits(mask) if i != 0]
        return conj(*parts)


def _bits(m: int):
    i = 0
    while m:
        if m & 1:
            yield i
        m >>= 1
        i += 1


def _flatten(c: ConceptExpr) -> list | None:
    """Atoms of a conjunction of names, ``top`` and ``btw`` of names."""
    if isinstance(c, (Top, Name)):
        return [c]
    if isinstance(c, Between) and isinstance(c.left, Name) and isinstance(c.right, Name):
        return [c]
    if isinstance(c, Conj):
        left, right = _flatten(c.left), _flatten(c.right)
        if left is None or right is None:
            return None
        return left + right
    return None


@dataclass
class _Why:
    rule: str
    premises: tuple[str, ...]
    # (conjunction mask, atom) pairs whose derivations justify the premises
    subgoals: tuple[tuple[int, int], ...] = ()
    stage: int = 0


@dataclass(frozen=True)
class Derivable:
    trace: list[TraceStep]

    derivable = True

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class Unknown:
    derivable = False

    def __bool__(self) -> bool:
        return False


class GeoFactBase:
    """Saturated rule base plus non-interference facts, each with its justification.

    Rules are added in stages (one per saturation pass); a rule's premises
    only rely on rules of earlier stages, which keeps traces well founded.
    """

    def __init__(self, t: TBox, extra_atoms: Iterable = ()):
        nt = normalize(t)
        self.tbox = t
        self.u = u = _Universe(nt.natural_names)
        for n in sorted(nt.concept_names):
            u.add(Name(n))
        for a in extra_atoms:
            u.add(a)
        self.rules: dict[tuple[int, int], _Why] = {}
        self.ni: dict[tuple[int, int, int], _Why] = {}
        self.edges: list[tuple[int, str, int]] = []
        self.ex_lhs: list[tuple[str, int, int]] = []
        self.stage = 0
        self._pending: dict[tuple[int, int], _Why] = {}
        self._cache: dict[int, int] = {}
        for ci in nt.cis:
            lhs, rhs = ci.lhs, ci.rhs
            if isinstance(rhs, Exists):
                self.edges.append((u.add(lhs), rhs.role, u.add(rhs.filler)))
            elif isinstance(lhs, Exists):
                self.ex_lhs.append((lhs.role, u.add(lhs.filler), u.add(rhs)))
            else:
                self._propose(u.mask(_flatten(lhs)), u.add(rhs), "told", ())
        for ni in nt.non_interference:
            parts = _flatten(ni.guard)
            if parts is None:
                continue  # guards outside the conjunctive fragment are ignored (sound)
            g = u.mask(parts) & ~1
            c, d = u.add(Name(ni.first)), u.add(Name(ni.second))
            self.ni.setdefault((g, c, d), _Why("told", ()))
        for key in list(self.ni):
            self._btw(key[1], key[2])
        self._commit()
        self._saturate()

    # -- helpers
    def _btw(self, c: int, d: int) -> int:
        return self.u.add(Between(self.u.atoms[c], self.u.atoms[d]))

    def _propose(self, lmask: int, c: int, rule: str, premises: tuple, subgoals: tuple = ()) -> None:
        lmask |= 1
        if c == 0 or lmask >> c & 1 or (lmask, c) in self.rules or (lmask, c) in self._pending:
            return
        if self.closure(lmask) >> c & 1:
            return
        self._pending[(lmask, c)] = _Why(rule, premises, subgoals, self.stage)

    def _commit(self) -> bool:
        """Add the rules proposed during the current pass."""
        if not self._pending:
            return False
        self.rules.update(self._pending)
        self._pending = {}
        self._cache.clear()
        self.stage += 1
        return True

    def closure(self, k: int, before: int | None = None) -> int:
        """All atoms below the conjunction ``k`` (using rules of stages ``< before``)."""
        k |= 1
        if before is None:
            hit = self._cache.get(k)
            if hit is not None:
                return hit
        m = k
        changed = True
        while changed:
            changed = False
            for (lm, c), why in self.rules.items():
                if lm & m == lm and not m >> c & 1 and (before is None or why.stage < before):
                    m |= 1 << c
                    changed = True
        if before is None:
            self._cache[k] = m
        return m

    def provenance(self, k: int, target: int, before: int | None = None) -> list[TraceStep]:
        """Steps deriving ``target`` from the conjunction ``k``."""
        k |= 1
        m = k
        used: dict[int, tuple[int, int]] = {}
        changed = True
        while changed and not m >> target & 1:
            changed = False
            for key, why in self.rules.items():
                lm, c = key
                if lm & m == lm and not m >> c & 1 and (before is None or why.stage < before):
                    m |= 1 << c
                    used[c] = key
                    changed = True
        if not m >> target & 1:
            raise KeyError("not derivable")
        order: list[tuple[int, int]] = []
        seen: set = set()

        def visit(a: int):
            if a in seen or a not in used:
                return
            seen.add(a)
            lm, c = used[a]
            for b in _bits(lm):
                visit(b)
            order.append((lm, c))

        visit(target)
        steps: list[TraceStep] = []
        for lm, c in order:
            why = self.rules[(lm, c)]
            for sk, st in why.subgoals:
                if not (sk | 1) >> st & 1:
                    steps += self.provenance(sk, st, why.stage)
            steps.append(TraceStep(self._ci(lm, c), why.rule, why.premises))
        concl = self._ci(k, target)
        if not steps or steps[-1].conclusion != concl:
            steps.append(TraceStep(concl, "chain", tuple(self._ci(lm, c) for lm, c in order)))
        return _dedupe(steps)

    def _ci(self, lm: int, c: int) -> str:
        return str(ConceptInclusion(self.u.render(lm), self.u.atoms[c]))

    def _ni_str(self, key) -> str:
        g, c, d = key
        return f"ni({self.u.render(g)}; {self.u.atoms[c]}, {self.u.atoms[d]})"

    # -- saturation
    def _saturate(self) -> None:
        u = self.u
        while True:
            # existential chaining
            for a, role, b in self.edges:
                cl = self.closure(1 << b)
                for r2, b1, c in self.ex_lhs:
                    if r2 == role and cl >> b1 & 1:
                        prem = (f"{u.atoms[a]} <= some {role}. {u.atoms[b]}",
                                f"{u.atoms[b]} <= {u.atoms[b1]}",
                                f"some {role}. {u.atoms[b1]} <= {u.atoms[c]}")
                        self._propose(1 << a, c, "R6", prem, ((1 << b, b1),))
            n = len(u.atoms)
            nat = sum(1 << j for j in range(1, n) if u.natural(j))
            for i in range(n):
                a = u.atoms[i]
                if not isinstance(a, Between):
                    continue
                x, y = u.pos[a.left], u.pos[a.right]
                self._propose(1 << x, i, "S1", ())
                self._propose(1 << y, i, "S1", ())
                common = self.closure(1 << x) & self.closure(1 << y) & nat & ~self.closure(1 << i)
                for b in _bits(common):
                    self._propose(1 << i, b, "natural-btw", (self._ci(1 << x, b), self._ci(1 << y, b)),
                                  ((1 << x, b), (1 << y, b)))
            self._close_guards()
            for key in list(self.ni):
                g, c, d = key
                i = self._btw(c, d)
                mirror = u.pos.get(Between(u.atoms[d], u.atoms[c]))
                nat = sum(1 << j for j in range(1, len(u.atoms)) if u.natural(j))
                gc = self.closure(g | 1 << c)
                todo = gc & nat & ~self.closure(g | 1 << i) & ~(1 << i)
                if not todo:
                    continue
                p4 = todo & self.closure(1 << d)
                for b in _bits(p4):
                    prem = (self._ni_str(key), self._ci(g | 1 << c, b), self._ci(1 << d, b))
                    sub = ((g | 1 << c, b), (1 << d, b))
                    self._propose(g | 1 << i, b, "guarded-btw", prem, sub)
                    if mirror is not None:
                        self._propose(g | 1 << mirror, b, "guarded-btw-mirror", prem, sub)
                if (g, d, c) in self.ni:
                    for b in _bits(todo & ~p4 & self.closure(g | 1 << d)):
                        prem = (self._ni_str(key), self._ni_str((g, d, c)),
                                self._ci(g | 1 << c, b), self._ci(g | 1 << d, b))
                        self._propose(g | 1 << i, b, "two-sided-guarded-btw", prem, ((g | 1 << c, b), (g | 1 << d, b)))
            grew = len(u.atoms) != n
            if not self._commit() and not grew:
                return

    def _close_guards(self) -> None:
        by_pair: dict[tuple[int, int], set[int]] = {}
        for g, c, d in self.ni:
            by_pair.setdefault((c, d), set()).add(g)
        for (c, d), guards in by_pair.items():
            frontier = set(guards)
            while frontier and len(guards) < GUARD_UNION_CAP:
                new: dict[int, tuple[int, int]] = {}
                for g1 in frontier:
                    for g2 in list(guards):
                        g = g1 | g2
                        if g not in guards and g not in new:
                            new[g] = (g1, g2)
                    if len(guards) + len(new) >= GUARD_UNION_CAP:
                        break
                for g, (g1, g2) in new.items():
                    self.ni[(g, c, d)] = _Why("guard-meet", (self._ni_str((g1, c, d)), self._ni_str((g2, c, d))))
                guards |= set(new)
                frontier = set(new)

    # -- queries
    @property
    def subsumptions(self) -> frozenset:
        return frozenset(ConceptInclusion(self.u.render(lm), self.u.atoms[c]) for lm, c in self.rules)

    @property
    def ni_facts(self) -> frozenset:
        return frozenset(self._ni_str(k) for k in self.ni)

    def traces(self) -> dict[str, TraceStep]:
        """Justification of every stored rule and non-interference fact."""
        out = {}
        for (lm, c), why in self.rules.items():
            out[self._ci(lm, c)] = TraceStep(self._ci(lm, c), why.rule, why.premises)
        for key, why in self.ni.items():
            out[self._ni_str(key)] = TraceStep(self._ni_str(key), why.rule, why.premises)
        return out

    def trace_of(self, ci: ConceptInclusion) -> list[TraceStep] | None:
        lhs, rhs = _flatten(ci.lhs), _flatten(ci.rhs)
        if lhs is None or rhs is None:
            return None
        if any(a not in self.u.pos for a in lhs + rhs):
            return None
        k = self.u.mask(lhs) | 1
        cl = self.closure(k)
        goals = [self.u.pos[a] for a in rhs]
        if not all(cl >> g & 1 for g in goals):
            return None
        steps: list[TraceStep] = []
        for g in goals:
            if not k >> g & 1:
                steps += self.provenance(k, g)
        return _dedupe(steps)


def _dedupe(steps: list[TraceStep]) -> list[TraceStep]:
    seen, out = set(), []
    for s in steps:
        if s.conclusion not in seen:
            seen.add(s.conclusion)
            out.append(s)
    return out


def saturate_geo(t: TBox, extra_atoms: Iterable = ()) -> GeoFactBase:
    return GeoFactBase(t, extra_atoms)


def entails_geo_sound(t: TBox, ci: ConceptInclusion, base: GeoFactBase | None = None) -> Derivable | Unknown:
    """``Derivable`` with a trace when the rules derive ``ci``, otherwise ``Unknown``."""
    atoms = (_flatten(ci.lhs) or []) + (_flatten(ci.rhs) or [])
    if base is None or any(a not in base.u.pos for a in atoms):
        base = GeoFactBase(t, [a for a in atoms if isinstance(a, Between)])
    steps = base.trace_of(ci)
    return Unknown() if steps is None else Derivable(steps)
