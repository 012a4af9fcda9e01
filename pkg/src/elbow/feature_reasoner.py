"""Subsumption under the feature-enriched semantics.

The procedure works on a normalized TBox whose "atoms" are ``top``, the
concept names and every ``btw(B1, B2)`` that occurs. It keeps the EL
completion ``S`` of the TBox and repeatedly asks, for each atom ``A`` and
each natural atom ``C`` with ``A <= C`` not yet derived, whether a single
feature can separate them: a column ``w`` of a feature assignment (the set
of names owning that feature) with ``C`` in ``w`` and ``A`` outside it, that
is consistent with everything in ``S``. Every real model supplies such a
column for every non-subsumption it exhibits, so when the search fails the
inclusion is entailed and is added to ``S``. At the fixpoint the surviving
columns form a feature assignment from which a countermodel is built and
checked explicitly.

Each column question is a small propositional problem answered by
:mod:`elbow.sat` under assumptions. :func:`encode_sat` additionally offers the
one-shot encoding over a fixed feature universe of size ``2 * |sub_T|``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

from .feature_model import FeatureInterpretation, extension, is_model, validate_interpretation
from .normalizer import NormalTBox, normal_shape, normalize, normalize_query
from .sat import SatProblem, Solver
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
    subconcepts,
)

Atom = Union[Top, Name, Between]


# --- atoms and told axioms ---------------------------------------------------


class _Index:
    """Integer numbering of atoms plus the told axioms of a normal TBox."""

    def __init__(self, nt: NormalTBox, extra_names: Iterable[str] = ()):
        names = set(nt.concept_names) | set(extra_names)
        betweens: dict[Between, None] = {}
        for ci in nt.cis:
            for side in (ci.lhs, ci.rhs):
                if isinstance(side, Between):
                    betweens.setdefault(side)
        self.atoms: list[Atom] = [TOP] + [Name(n) for n in sorted(names)] + list(betweens)
        self.pos = {a: i for i, a in enumerate(self.atoms)}
        self.natural_names = frozenset(nt.natural_names)
        self.name_ids = [i for i, a in enumerate(self.atoms) if isinstance(a, Name)]
        self.between_ids = [i for i, a in enumerate(self.atoms) if isinstance(a, Between)]
        self.operands = {
            i: (self.pos[self.atoms[i].left], self.pos[self.atoms[i].right]) for i in self.between_ids
        }
        self.natural = [
            i == 0
            or isinstance(a, Between)
            or (isinstance(a, Name) and a.name in nt.natural_names)
            for i, a in enumerate(self.atoms)
        ]
        self.natural_ids = [i for i in range(len(self.atoms)) if self.natural[i]]
        # told axioms
        self.sub: list[tuple[int, int]] = []
        self.conj: list[tuple[int, int, int]] = []
        self.ex_rhs: list[tuple[int, str, int]] = []
        self.ex_lhs: list[tuple[str, int, int]] = []
        for ci in nt.cis:
            shape = normal_shape(ci, nt.natural_names)
            if shape in ("atomic", "between_rhs", "between_lhs"):
                self.sub.append((self.pos[ci.lhs], self.pos[ci.rhs]))
            elif shape == "conj_lhs":
                self.conj.append((self.pos[ci.lhs.left], self.pos[ci.lhs.right], self.pos[ci.rhs]))
            elif shape == "exists_rhs":
                self.ex_rhs.append((self.pos[ci.lhs], ci.rhs.role, self.pos[ci.rhs.filler]))
            elif shape == "exists_lhs":
                self.ex_lhs.append((ci.lhs.role, self.pos[ci.lhs.filler], self.pos[ci.rhs]))
            else:
                raise ValueError(f"not in normal form: {ci}")

    def __len__(self) -> int:
        return len(self.atoms)

    def label(self, i: int) -> str:
        return str(self.atoms[i])


class _Completion:
    """Incremental EL completion (rules R1-R6) over the atoms of an index.

    ``s[a]`` is a bitmask of the atoms subsuming ``a``; ``r[a]`` the set of
    ``(role, filler)`` pairs with ``a <= some role. filler``.
    """

    def __init__(self, ix: _Index):
        self.ix = ix
        n = len(ix)
        self.s = [0] * n
        self.r: list[set[tuple[str, int]]] = [set() for _ in range(n)]
        self.pred: list[set[tuple[int, str]]] = [set() for _ in range(n)]
        self.told_sub: list[list[int]] = [[] for _ in range(n)]
        self.told_conj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        self.told_ex: list[list[tuple[str, int]]] = [[] for _ in range(n)]
        self.ex_lhs: dict[tuple[str, int], list[int]] = {}
        for a, b in ix.sub:
            self.told_sub[a].append(b)
        for a1, a2, b in ix.conj:
            self.told_conj[a1].append((a2, b))
            if a1 != a2:
                self.told_conj[a2].append((a1, b))
        for a, role, b in ix.ex_rhs:
            self.told_ex[a].append((role, b))
        for role, a, b in ix.ex_lhs:
            self.ex_lhs.setdefault((role, a), []).append(b)
        self.queue: list[tuple[int, int]] = []
        for a in range(n):
            self._add(a, a)
            self._add(a, 0)
        self._run()

    def _add(self, a: int, b: int) -> None:
        if not self.s[a] >> b & 1:
            self.s[a] |= 1 << b
            self.queue.append((a, b))

    def _add_edge(self, a: int, role: str, b: int) -> None:
        if (role, b) in self.r[a]:
            return
        self.r[a].add((role, b))
        self.pred[b].add((a, role))
        sb = self.s[b]
        for (rl, filler), targets in self.ex_lhs.items():
            if rl == role and sb >> filler & 1:
                for c in targets:
                    self._add(a, c)

    def _run(self) -> None:
        q = self.queue
        while q:
            a, b = q.pop()
            for c in self.told_sub[b]:
                self._add(a, c)
            sa = self.s[a]
            for other, c in self.told_conj[b]:
                if sa >> other & 1:
                    self._add(a, c)
            for role, filler in self.told_ex[b]:
                self._add_edge(a, role, filler)
            for p, role in tuple(self.pred[a]):
                for c in self.ex_lhs.get((role, b), ()):
                    self._add(p, c)

    def force(self, a: int, b: int) -> None:
        """Add the told inclusion ``a <= b`` and restore closure."""
        self.told_sub[a].append(b)
        for x in range(len(self.s)):
            if self.s[x] >> a & 1:
                self._add(x, b)
        self._run()

    def holds(self, a: int, b: int) -> bool:
        return bool(self.s[a] >> b & 1)

    def members(self, a: int) -> list[int]:
        m, out, i = self.s[a], [], 0
        while m:
            if m & 1:
                out.append(i)
            m >>= 1
            i += 1
        return out


# --- separating columns ------------------------------------------------------


def _hat(ix: _Index, w: int) -> int:
    """Extend a column over names to all atoms (``top`` never, ``btw`` by meet)."""
    h = w & ~1
    for i, (x, y) in ix.operands.items():
        if w >> x & 1 and w >> y & 1:
            h |= 1 << i
        else:
            h &= ~(1 << i)
    return h


def _closure(ix: _Index, comp: _Completion, seeds: int) -> int:
    m = seeds
    while True:
        new = m
        i, rest = 0, m
        while rest:
            if rest & 1:
                new |= comp.s[i]
            rest >>= 1
            i += 1
        for a1, a2, b in ix.conj:
            if new >> a1 & 1 and new >> a2 & 1:
                new |= comp.s[b]
        if new == m:
            return m
        m = new


def _natural_mask(ix: _Index) -> int:
    m = 0
    for i in ix.natural_ids:
        m |= 1 << i
    return m


def column_valid(ix: _Index, comp: _Completion, w: int) -> bool:
    """Whether the column ``w`` (bitmask over name atoms) fits the completion."""
    h = _hat(ix, w)
    for a in range(len(ix)):
        if not h >> a & 1 and comp.s[a] & h:
            return False
    for a1, a2, b in ix.conj:
        if ix.natural[a1] and ix.natural[a2] and h >> b & 1 and not (h >> a1 & 1 or h >> a2 & 1):
            return False
    nat = _natural_mask(ix)
    seeds = (nat & ~h) | 1
    return _closure(ix, comp, seeds) & nat & h == 0


class _ColumnProblem:
    """CNF whose models are the columns valid for a completion state."""

    def __init__(self, ix: _Index, comp: _Completion):
        self.ix = ix
        p = self.p = SatProblem()
        n = len(ix)
        self.w = {i: p.var(("w", i)) for i in ix.name_ids}
        for i in ix.between_ids:
            self.w[i] = p.var(("w", i))
        self.m = {i: p.var(("m", i)) for i in range(1, n)}
        for i, (x, y) in ix.operands.items():
            b, wx, wy = self.w[i], self.w[x], self.w[y]
            p.add(-b, wx)
            p.add(-b, wy)
            p.add(b, -wx, -wy)
        for a in range(n):
            for b in comp.members(a):
                if b == a or b == 0:
                    continue
                if a == 0:
                    p.add(-self.w[b])
                else:
                    p.add(-self.w[b], self.w[a])
                    p.add(-self.m[a], self.m[b])
                if a == 0:
                    p.add(self.m[b])
        for a1, a2, b in ix.conj:
            if b == 0:
                continue
            if ix.natural[a1] and ix.natural[a2]:
                lits = [-self.w[b]] + [self.w[x] for x in (a1, a2) if x != 0]
                p.add(*lits)
            p.add(*[-self.m[x] for x in (a1, a2) if x != 0], self.m[b])
        for i in ix.natural_ids:
            if i == 0:
                continue
            p.add(self.m[i], self.w[i])
            p.add(-self.m[i], -self.w[i])
        order = [self.w[i] for i in ix.name_ids] + [self.w[i] for i in ix.between_ids]
        order += [self.m[i] for i in range(1, n)]
        self.solver = Solver(p, order=order)

    def separate(self, a: int, c: int) -> int | None:
        assume = [self.w[c]]
        if a != 0:
            assume.append(-self.w[a])
        model = self.solver.solve(assume)
        if model is None:
            return None
        col = 0
        for i in self.ix.name_ids:
            if model[self.w[i]]:
                col |= 1 << i
        return col


@dataclass
class Stats:
    sat_calls: int = 0
    decisions: int = 0
    forced: int = 0
    passes: int = 0
    columns: int = 0


@dataclass
class _Fixpoint:
    ix: _Index
    comp: _Completion
    pool: list[int]
    forced: list[tuple[int, int]]
    stats: Stats


def _requirements(ix: _Index, comp: _Completion):
    for a in [0] + ix.name_ids:
        for c in ix.natural_ids:
            if c != 0 and not comp.holds(a, c):
                yield a, c


def _separates(ix: _Index, h: int, w: int, a: int, c: int) -> bool:
    return bool(h >> c & 1) and not (w >> a & 1)


def _fixpoint(ix: _Index, stop: tuple[int, int] | None = None) -> _Fixpoint:
    comp = _Completion(ix)
    pool: list[int] = []
    forced: list[tuple[int, int]] = []
    stats = Stats()
    while True:
        stats.passes += 1
        if stop and comp.holds(*stop):
            break
        pool = [w for w in pool if column_valid(ix, comp, w)]
        hats = [_hat(ix, w) for w in pool]
        problem = None
        changed = False
        for a, c in list(_requirements(ix, comp)):
            if comp.holds(a, c):
                continue
            if any(_separates(ix, h, w, a, c) for w, h in zip(pool, hats)):
                continue
            if problem is None:
                problem = _ColumnProblem(ix, comp)
            stats.sat_calls += 1
            col = problem.separate(a, c)
            if col is None:
                comp.force(a, c)
                forced.append((a, c))
                stats.forced += 1
                changed = True
                if stop and comp.holds(*stop):
                    break
            else:
                pool.append(col)
                hats.append(_hat(ix, col))
        if problem is not None:
            stats.decisions += problem.solver.decisions
        if not changed:
            break
    stats.columns = len(pool)
    return _Fixpoint(ix, comp, pool, forced, stats)


def _cover(ix: _Index, comp: _Completion, pool: list[int]) -> list[int]:
    """Greedy subset of ``pool`` separating every non-derived requirement."""
    todo = set(_requirements(ix, comp))
    hats = {w: _hat(ix, w) for w in pool}
    chosen: list[int] = []
    while todo:
        best, best_hit = None, set()
        for w in pool:
            hit = {(a, c) for a, c in todo if _separates(ix, hats[w], w, a, c)}
            if len(hit) > len(best_hit):
                best, best_hit = w, hit
        if best is None:
            raise AssertionError("column pool does not cover all requirements")
        chosen.append(best)
        todo -= best_hit
    return chosen


# --- public data types -------------------------------------------------------


@dataclass(frozen=True)
class FeatureAssignment:
    theta: Mapping[str, frozenset]
    features: frozenset

    def __getitem__(self, name: str) -> frozenset:
        return self.theta[name]


@dataclass(frozen=True)
class CompletionState:
    tbox: NormalTBox
    derived: frozenset

    @property
    def natural_names(self) -> frozenset:
        return self.tbox.natural_names

    def entails(self, lhs: ConceptExpr, rhs: ConceptExpr) -> bool:
        return ConceptInclusion(lhs, rhs) in self.derived


def _state(ix: _Index, comp: _Completion, nt: NormalTBox) -> CompletionState:
    out = set()
    for a in range(len(ix)):
        for b in comp.members(a):
            out.add(ConceptInclusion(ix.atoms[a], ix.atoms[b]))
        for role, b in comp.r[a]:
            out.add(ConceptInclusion(ix.atoms[a], Exists(role, ix.atoms[b])))
    return CompletionState(nt, frozenset(out))


def el_complete(t: NormalTBox) -> CompletionState:
    ix = _Index(t)
    return _state(ix, _Completion(ix), t)


def theta_hat(theta: FeatureAssignment | Mapping[str, frozenset], c: ConceptExpr) -> frozenset:
    th = theta.theta if isinstance(theta, FeatureAssignment) else theta
    if isinstance(c, (Top, Exists)):
        return frozenset()
    if isinstance(c, Name):
        return frozenset(th[c.name])
    if isinstance(c, Between):
        return theta_hat(th, c.left) & theta_hat(th, c.right)
    raise TypeError(f"no feature reading for {c}")


def _cis_of(cis) -> tuple[list[ConceptInclusion], frozenset]:
    if isinstance(cis, CompletionState):
        return list(cis.derived) + list(cis.tbox.cis), cis.natural_names
    if isinstance(cis, NormalTBox):
        return list(cis.cis), cis.natural_names
    if isinstance(cis, TBox):
        return list(cis.inclusions), cis.natural_names
    raise TypeError(cis)


def is_proper(theta: FeatureAssignment, cis) -> list[ConceptInclusion]:
    """Inclusions violating properness of ``theta``; empty means proper."""
    items, natural = _cis_of(cis)
    th = dict(theta.theta)
    bad = []
    for ci in items:
        if isinstance(ci.lhs, Conj):
            parts = (ci.lhs.left, ci.lhs.right)
            if all(isinstance(p, Top) or (isinstance(p, Name) and p.name in natural) for p in parts):
                if not theta_hat(th, ci.rhs) <= theta_hat(th, parts[0]) | theta_hat(th, parts[1]):
                    bad.append(ci)
        elif isinstance(ci.lhs, (Name, Top, Between)) and not isinstance(ci.rhs, Exists):
            if not theta_hat(th, ci.rhs) <= theta_hat(th, ci.lhs):
                bad.append(ci)
    return sorted(set(bad), key=str)


def step2_augment(t: NormalTBox, theta: FeatureAssignment) -> NormalTBox:
    """Add ``A <= C`` whenever the features of natural atom ``C`` are among those of ``A``.

    ``A`` ranges over the names of ``t`` and ``top`` (whose feature set is empty).
    """
    ix = _Index(t)
    extra = []
    for a in [0] + ix.name_ids:
        fa = theta_hat(theta, ix.atoms[a])
        for c in ix.natural_ids:
            if c == 0 or c == a:
                continue
            if theta_hat(theta, ix.atoms[c]) <= fa:
                ci = ConceptInclusion(ix.atoms[a], ix.atoms[c])
                if ci not in t.cis:
                    extra.append(ci)
    return NormalTBox(
        cis=t.cis + tuple(extra),
        natural_names=t.natural_names,
        fresh_map=t.fresh_map,
        non_interference=t.non_interference,
        original_names=t.original_names,
    )


# --- canonical model ---------------------------------------------------------


def _feature_ids(k: int) -> list[str]:
    return [f"f{j + 1}" for j in range(k)]


def build_canonical_model(t_completed: CompletionState, theta: FeatureAssignment) -> FeatureInterpretation:
    """Countermodel induced by a proper assignment on a completed TBox.

    One element per concept name carrying that name's features, plus one
    element for every proper subset of the feature universe.
    """
    nt = t_completed.tbox
    ix = _Index(nt, theta.theta.keys())
    feats = sorted(theta.features)
    if not feats:
        raise ValueError("feature universe is empty")
    for i in ix.name_ids:
        n = ix.atoms[i].name
        if n not in theta.theta:
            raise ValueError(f"assignment is not total: {n} missing")
        if not theta.theta[n] < theta.features:
            raise ValueError(f"assignment is not strict at {n}")
    comp = _Completion(ix)
    for ci in t_completed.derived:
        if ci.lhs in ix.pos and ci.rhs in ix.pos:
            a, b = ix.pos[ci.lhs], ix.pos[ci.rhs]
            if not comp.holds(a, b):
                comp.force(a, b)
    return _assemble(ix, comp, {ix.atoms[i].name: theta.theta[ix.atoms[i].name] for i in ix.name_ids}, feats)


def _assemble(ix: _Index, comp: _Completion, theta: Mapping[str, frozenset], feats: list[str]) -> FeatureInterpretation:
    k = len(feats)
    full = (1 << k) - 1
    bit = {f: 1 << j for j, f in enumerate(feats)}

    def mask(fs) -> int:
        return sum(bit[f] for f in fs)

    def fset(m: int) -> frozenset:
        return frozenset(f for f in feats if m & bit[f])

    hat = {}
    for i in range(len(ix)):
        a = ix.atoms[i]
        if isinstance(a, Top):
            hat[i] = 0
        elif isinstance(a, Name):
            hat[i] = mask(theta[a.name])
        else:
            x, y = ix.operands[i]
            hat[i] = mask(theta[ix.atoms[x].name]) & mask(theta[ix.atoms[y].name])

    def elem_x(m: int) -> str:
        return "x" + format(m, f"0{k}b")[::-1] if k else "x"

    def elem_a(i: int) -> str:
        return "a_" + ix.atoms[i].name

    pi: dict[str, frozenset] = {}
    member: dict[str, int] = {}
    for i in ix.name_ids:
        pi[elem_a(i)] = fset(hat[i])
        member[elem_a(i)] = comp.s[i]
    nat_ids = [i for i in ix.natural_ids]
    for m in range(full):
        seeds = 1
        for i in nat_ids:
            if hat[i] & m == hat[i]:
                seeds |= 1 << i
        pi[elem_x(m)] = fset(m)
        member[elem_x(m)] = _closure(ix, comp, seeds)
    target = {i: elem_a(i) for i in ix.name_ids}
    target[0] = elem_x(0)
    names: dict[str, set] = {ix.atoms[i].name: set() for i in ix.name_ids}
    roles: dict[str, set] = {}
    for e, ms in member.items():
        for i in ix.name_ids:
            if ms >> i & 1:
                names[ix.atoms[i].name].add(e)
        i, rest = 0, ms
        while rest:
            if rest & 1:
                for role, b in comp.r[i]:
                    roles.setdefault(role, set()).add((e, target[b]))
            rest >>= 1
            i += 1
    for _, role, _ in ix.ex_rhs:
        roles.setdefault(role, set())
    for role, _, _ in ix.ex_lhs:
        roles.setdefault(role, set())
    natural = {ix.atoms[i].name for i in ix.name_ids if ix.natural[i]}
    return FeatureInterpretation.build(feats, pi, names, roles, natural)


def _theta_from_columns(ix: _Index, columns: list[int]) -> tuple[dict[str, frozenset], list[str]]:
    strict_needed = any(all(w >> i & 1 for w in columns) for i in ix.name_ids)
    cols = list(columns) + ([0] if strict_needed or not columns else [])
    feats = _feature_ids(len(cols))
    theta = {
        ix.atoms[i].name: frozenset(f for f, w in zip(feats, cols) if w >> i & 1) for i in ix.name_ids
    }
    return theta, feats


# --- decision ----------------------------------------------------------------


@dataclass(frozen=True)
class TraceStep:
    conclusion: str
    rule: str
    premises: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {"conclusion": self.conclusion, "rule": self.rule, "premises": list(self.premises)}


@dataclass
class Entailed:
    trace: list[TraceStep] | None = None
    forced: list[str] = field(default_factory=list)
    stats: Stats = field(default_factory=Stats)

    entailed = True

    def __bool__(self) -> bool:
        return True


@dataclass
class NotEntailed:
    theta: FeatureAssignment
    model: FeatureInterpretation
    stats: Stats = field(default_factory=Stats)

    entailed = False

    def __bool__(self) -> bool:
        return False


class CountermodelError(AssertionError):
    """The constructed countermodel failed validation (an internal bug)."""


def decide_subsumption(
    t: TBox,
    lhs: ConceptExpr,
    rhs: ConceptExpr,
    *,
    method: str = "fixpoint",
    trace: bool = True,
    check: bool = True,
) -> Entailed | NotEntailed:
    """Decide ``t |= lhs <= rhs`` under the feature-enriched semantics.

    ``method="global"`` solves the single propositional encoding over
    ``2 * |sub_T|`` features instead; it is exponentially slower to build a
    model for and meant for cross-checking small inputs.
    """
    if t.non_interference:
        raise ValueError("non-interference assertions are not part of the feature-enriched logic")
    nt, ql, qr = normalize_query(t, lhs, rhs)
    if method == "global":
        return _decide_global(t, nt, ql, qr, lhs, rhs, check=check, trace=trace)
    if method != "fixpoint":
        raise ValueError(f"unknown method {method!r}")
    ix = _Index(nt)
    goal = (ix.pos[Name(ql)], ix.pos[Name(qr)])
    fp = _fixpoint(ix, stop=goal)
    if fp.comp.holds(*goal):
        steps = _interpolative_trace(nt, ConceptInclusion(Name(ql), Name(qr))) if trace else None
        forced = [f"{ix.label(a)} <= {ix.label(c)}" for a, c in fp.forced]
        return Entailed(steps, forced, fp.stats)
    columns = _cover(ix, fp.comp, fp.pool)
    theta, feats = _theta_from_columns(ix, columns)
    model = _assemble(ix, fp.comp, theta, feats)
    fp.stats.columns = len(feats)
    assignment = FeatureAssignment(theta, frozenset(feats))
    if check:
        _check_countermodel(model, t, nt, lhs, rhs)
    return NotEntailed(assignment, model, fp.stats)


def _check_countermodel(model, t, nt, lhs, rhs) -> None:
    problems = validate_interpretation(model) + is_model(model, nt) + is_model(model, t)
    if problems:
        raise CountermodelError("; ".join(map(str, problems[:5])))
    if extension(model, lhs) <= extension(model, rhs):
        raise CountermodelError("countermodel does not refute the query")


def classify(t: TBox, names: Iterable[str] | None = None) -> dict[tuple[str, str], bool]:
    """Entailment between all ordered pairs of concept names.

    A single run of the fixpoint answers every pair at once: at the end every
    underived pair is refuted by the same canonical model.
    """
    pool = sorted(names) if names is not None else sorted(t.signature)
    if t.non_interference:
        raise ValueError("non-interference assertions are not part of the feature-enriched logic")
    nt = normalize(t)
    ix = _Index(nt, extra_names=pool)
    fp = _fixpoint(ix)
    return {
        (a, b): fp.comp.holds(ix.pos[Name(a)], ix.pos[Name(b)])
        for a, b in itertools.product(pool, pool)
    }


def _interpolative_trace(nt: NormalTBox, goal: ConceptInclusion) -> list[TraceStep] | None:
    state = interpolative_saturate(nt)
    if goal not in state.derived:
        return None
    return state.explain(goal)


# --- sound interpolative saturation -----------------------------------------


class SaturationState:
    """Result of :func:`interpolative_saturate`, with a derivation for every fact."""

    def __init__(self, nt: NormalTBox):
        self.tbox = nt
        self.ix = ix = _Index(nt)
        n = len(ix)
        self.s = [0] * n
        self.ex: list[set[tuple[str, int]]] = [set() for _ in range(n)]
        self.conj: dict[frozenset, int] = {}
        self.why: dict[tuple, tuple[str, tuple]] = {}
        self.order: list[tuple] = []

    # facts are ("sub", a, b), ("ex", a, role, b) and ("conj", frozenset({a1, a2}), b)
    def _put(self, fact: tuple, rule: str, premises: tuple = ()) -> bool:
        if fact in self.why:
            return False
        kind = fact[0]
        if kind == "sub":
            self.s[fact[1]] |= 1 << fact[2]
        elif kind == "ex":
            self.ex[fact[1]].add((fact[2], fact[3]))
        else:
            self.conj[fact[1]] = self.conj.get(fact[1], 0) | 1 << fact[2]
        self.why[fact] = (rule, premises)
        self.order.append(fact)
        return True

    def has(self, a: int, b: int) -> bool:
        return bool(self.s[a] >> b & 1)

    def render(self, fact: tuple) -> ConceptInclusion:
        at = self.ix.atoms
        if fact[0] == "sub":
            return ConceptInclusion(at[fact[1]], at[fact[2]])
        if fact[0] == "ex":
            return ConceptInclusion(at[fact[1]], Exists(fact[2], at[fact[3]]))
        parts = sorted(fact[1], key=lambda i: (isinstance(at[i], Between), str(at[i])))
        lhs = at[parts[0]] if len(parts) == 1 else Conj(at[parts[0]], at[parts[1]])
        return ConceptInclusion(lhs, at[fact[2]])

    @property
    def derived(self) -> frozenset:
        return frozenset(self.render(f) for f in self.order)

    def _fact_of(self, ci: ConceptInclusion) -> tuple | None:
        pos = self.ix.pos
        if ci.lhs in pos and ci.rhs in pos:
            return ("sub", pos[ci.lhs], pos[ci.rhs])
        if ci.lhs in pos and isinstance(ci.rhs, Exists) and ci.rhs.filler in pos:
            return ("ex", pos[ci.lhs], ci.rhs.role, pos[ci.rhs.filler])
        if isinstance(ci.lhs, Conj) and ci.lhs.left in pos and ci.lhs.right in pos and ci.rhs in pos:
            return ("conj", frozenset((pos[ci.lhs.left], pos[ci.lhs.right])), pos[ci.rhs])
        return None

    def explain(self, goal: ConceptInclusion) -> list[TraceStep]:
        """Derivation of ``goal`` in dependency order, omitting reflexive and top facts."""
        root = self._fact_of(goal)
        if root is None or root not in self.why:
            raise KeyError(f"not derived: {goal}")
        seen: set = set()
        out: list[TraceStep] = []

        def visit(f):
            if f in seen:
                return
            seen.add(f)
            rule, prem = self.why[f]
            for p in prem:
                visit(p)
            if rule in ("R1", "R2"):
                return
            out.append(TraceStep(str(self.render(f)), rule, tuple(str(self.render(p)) for p in prem)))

        visit(root)
        return out


def interpolative_saturate(t: NormalTBox) -> SaturationState:
    """EL completion extended with three sound interpolation rules.

    * S1: each operand is below its ``btw`` atom.
    * S2: if two natural concepts lie below a natural atom, so does ``btw`` of them.
    * S3: if ``A & C`` and ``A & D`` lie below natural ``B`` (all natural), so
      does ``A & btw(C, D)``.

    The result is sound for the feature-enriched semantics but not complete.
    """
    st = SaturationState(t)
    ix = st.ix
    n = len(ix)
    for a in range(n):
        st._put(("sub", a, a), "R1")
        st._put(("sub", a, 0), "R2")
    for a, b in ix.sub:
        st._put(("sub", a, b), "told")
    for a1, a2, b in ix.conj:
        st._put(("conj", frozenset((a1, a2)), b), "told")
    for a, role, b in ix.ex_rhs:
        st._put(("ex", a, role, b), "told")
    ex_lhs: dict[tuple[str, int], list[int]] = {}
    for role, a, b in ix.ex_lhs:
        ex_lhs.setdefault((role, a), []).append(b)
    for i, (x, y) in ix.operands.items():
        st._put(("sub", x, i), "S1")
        st._put(("sub", y, i), "S1")

    def below(a: int, b: int):
        """A premise witnessing ``a <= b`` if one is derived."""
        f = ("sub", a, b)
        return f if f in st.why else None

    def conj_below(x: int, y: int, b: int):
        """A premise witnessing ``x & y <= b``."""
        f = ("conj", frozenset((x, y)), b)
        if f in st.why:
            return f
        return below(x, b) or below(y, b)

    changed = True
    while changed:
        changed = False
        for a in range(n):
            for b in _bits(st.s[a]):
                # R3
                for c in _bits(st.s[b] & ~st.s[a]):
                    changed |= st._put(("sub", a, c), "R3", (("sub", a, b), ("sub", b, c)))
                # R5
                for role, c in list(st.ex[b]):
                    if b != a:
                        changed |= st._put(("ex", a, role, c), "R5", (("sub", a, b), ("ex", b, role, c)))
            # R4
            sa = st.s[a]
            for key, rhs in list(st.conj.items()):
                parts = tuple(key)
                x, y = parts[0], parts[-1]
                if sa >> x & 1 and sa >> y & 1:
                    for c in _bits(rhs & ~st.s[a]):
                        prem = (("sub", a, x), ("sub", a, y), ("conj", key, c))
                        changed |= st._put(("sub", a, c), "R4", prem)
            # R6
            for role, a1 in list(st.ex[a]):
                for b1 in _bits(st.s[a1]):
                    for c in ex_lhs.get((role, b1), ()):
                        if not st.has(a, c):
                            prem = (("ex", a, role, a1), ("sub", a1, b1))
                            changed |= st._put(("sub", a, c), "R6", prem)
        # weaken conjunction right-hand sides
        for key, rhs in list(st.conj.items()):
            for b in _bits(rhs):
                for c in _bits(st.s[b] & ~rhs):
                    changed |= st._put(("conj", key, c), "R3", (("conj", key, b), ("sub", b, c)))
        # S2 and S3
        for i, (x, y) in ix.operands.items():
            for b in ix.natural_ids:
                if b == 0:
                    continue
                px, py = below(x, b), below(y, b)
                if px and py:
                    changed |= st._put(("sub", i, b), "S2", (px, py))
                for a in ix.natural_ids:
                    if a in (0, i) or st.has(a, b) or st.has(i, b):
                        continue
                    qx, qy = conj_below(a, x, b), conj_below(a, y, b)
                    if qx and qy:
                        changed |= st._put(("conj", frozenset((a, i)), b), "S3", (qx, qy))
    return st


def _bits(m: int):
    i = 0
    while m:
        if m & 1:
            yield i
        m >>= 1
        i += 1


# --- one-shot propositional encoding ----------------------------------------


@dataclass
class GlobalEncoding:
    problem: SatProblem
    index: _Index
    features: int
    target: tuple[int, int]

    def x(self, name_atom: int, f: int) -> int:
        return self.problem.index[("x", name_atom, f)]

    def decode(self, model: Mapping[int, bool]) -> FeatureAssignment:
        feats = _feature_ids(self.features)
        theta = {
            self.index.atoms[i].name: frozenset(feats[f] for f in range(self.features) if model[self.x(i, f)])
            for i in self.index.name_ids
        }
        return FeatureAssignment(theta, frozenset(feats))


def feature_bound(t: NormalTBox) -> int:
    """Size of the feature universe used by the one-shot encoding: two per element of sub_T."""
    sub = subconcepts(t.as_tbox())
    return 2 * sum(1 for c in sub if not isinstance(c, Top) and str(c) != "_bottom")


def encode_sat(t: NormalTBox, target: ConceptInclusion, features: int | None = None) -> GlobalEncoding:
    """Propositional encoding of "some strict proper assignment leaves ``target`` underived".

    Variables ``x(A, f)`` give the assignment, ``s(a, b)`` and ``s(a, r, b)``
    the completed TBox. Clauses force told axioms, closure under R1-R6 and
    Step 2, properness of every ``s``-fact (including the per-feature closure
    condition used by the fixpoint), strictness, and the negated target.
    """
    k = feature_bound(t) if features is None else features
    extra = [target.lhs.name, target.rhs.name]
    ix = _Index(t, extra)
    p = SatProblem()
    n = len(ix)
    s = {(a, b): p.var(("s", a, b)) for a in range(n) for b in range(n)}
    roles = sorted({r for _, r, _ in ix.ex_rhs} | {r for r, _, _ in ix.ex_lhs})
    fillers = sorted({(r, b) for _, r, b in ix.ex_rhs})
    e = {(a, r, b): p.var(("e", a, r, b)) for a in range(n) for r, b in fillers}
    x = {(i, f): p.var(("x", i, f)) for i in ix.name_ids for f in range(k)}
    hat: dict[tuple[int, int], int | None] = {}
    for f in range(k):
        hat[(0, f)] = None
        for i in ix.name_ids:
            hat[(i, f)] = x[(i, f)]
        for i, (u, v) in ix.operands.items():
            h = p.var(("h", i, f))
            p.add(-h, x[(u, f)])
            p.add(-h, x[(v, f)])
            p.add(h, -x[(u, f)], -x[(v, f)])
            hat[(i, f)] = h
    # told axioms, R1, R2
    for a, b in ix.sub:
        p.add(s[(a, b)])
    for a, r, b in ix.ex_rhs:
        p.add(e[(a, r, b)])
    for a in range(n):
        p.add(s[(a, a)])
        p.add(s[(a, 0)])
    # R3, R4, R5, R6
    for a in range(n):
        for b in range(n):
            for c in range(n):
                if len({a, b, c}) == 3:
                    p.implies([s[(a, b)], s[(b, c)]], s[(a, c)])
        for a1, a2, b in ix.conj:
            p.implies([s[(a, a1)], s[(a, a2)]], s[(a, b)])
        for b in range(n):
            for r, c in fillers:
                if a != b:
                    p.implies([s[(a, b)], e[(b, r, c)]], e[(a, r, c)])
        for r, a1 in fillers:
            for role, b1, b in ix.ex_lhs:
                if role == r:
                    p.implies([e[(a, r, a1)], s[(a1, b1)]], s[(a, b)])
    # Step 2: if the features of natural atom c are among those of a, then a <= c
    for a in [0] + ix.name_ids:
        for c in ix.natural_ids:
            if c == 0 or c == a:
                continue
            qs = []
            for f in range(k):
                q = p.var()
                if hat[(c, f)] is None:
                    p.add(-q)
                else:
                    p.add(-q, hat[(c, f)])
                if hat[(a, f)] is not None:
                    p.add(-q, -hat[(a, f)])
                qs.append(q)
            p.add(s[(a, c)], *qs)
    # properness of every derived atomic inclusion, per feature
    for a in range(n):
        for b in range(n):
            if a == b or b == 0:
                continue
            for f in range(k):
                hb, ha = hat[(b, f)], hat[(a, f)]
                if ha is None:
                    p.add(-s[(a, b)], -hb)
                else:
                    p.add(-s[(a, b)], -hb, ha)
    for a1, a2, b in ix.conj:
        if b == 0 or not (ix.natural[a1] and ix.natural[a2]):
            continue
        for f in range(k):
            p.add(-hat[(b, f)], *[hat[(c, f)] for c in (a1, a2) if c != 0])
    # closure condition for elements missing exactly feature f
    for f in range(k):
        m = {a: p.var(("m", a, f)) for a in range(n)}
        p.add(m[0])
        for i in ix.natural_ids:
            if i == 0:
                continue
            p.add(m[i], hat[(i, f)])
            p.add(-m[i], -hat[(i, f)])
        for a in range(n):
            for b in range(n):
                if a != b:
                    p.implies([s[(a, b)], m[a]], m[b])
        for a1, a2, b in ix.conj:
            p.implies([m[a1], m[a2]], m[b])
    # strictness
    for i in ix.name_ids:
        p.add(*[-x[(i, f)] for f in range(k)])
    goal = (ix.pos[target.lhs], ix.pos[target.rhs])
    p.add(-s[goal])
    del roles
    return GlobalEncoding(p, ix, k, goal)


def _decide_global(t, nt, ql, qr, lhs, rhs, *, check: bool, trace: bool):
    enc = encode_sat(nt, ConceptInclusion(Name(ql), Name(qr)))
    p = enc.problem
    s_vars = [v for v, lab in p.labels.items() if lab[0] in ("s", "e")]
    x_vars = [v for v, lab in p.labels.items() if lab[0] == "x"]
    solver = Solver(p, order=s_vars + x_vars, learn=True)
    model = solver.solve()
    stats = Stats(sat_calls=1, decisions=solver.decisions)
    if model is None:
        steps = _interpolative_trace(nt, ConceptInclusion(Name(ql), Name(qr))) if trace else None
        return Entailed(steps, [], stats)
    ix = enc.index
    # identical columns describe the same feature twice; keep one of each
    columns = sorted({
        sum(1 << i for i in ix.name_ids if model[enc.x(i, f)]) for f in range(enc.features)
    } - {0})
    theta_map, feats = _theta_from_columns(ix, columns)
    theta = FeatureAssignment(theta_map, frozenset(feats))
    # T'_theta is the least fixpoint; rebuild it rather than trusting the s-variables
    comp = _Completion(ix)
    for a in [0] + ix.name_ids:
        fa = theta_hat(theta, ix.atoms[a])
        for c in ix.natural_ids:
            if c and theta_hat(theta, ix.atoms[c]) <= fa and not comp.holds(a, c):
                comp.force(a, c)
    stats.columns = len(feats)
    built = _assemble(ix, comp, theta.theta, feats)
    if check:
        _check_countermodel(built, t, nt, lhs, rhs)
    return NotEntailed(theta, built, stats)
