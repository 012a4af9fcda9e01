"""Generalized CP-nets: improving flips, dominance, consistency, and the
reduction of dominance to subsumption under region semantics.

A rule ``eta : q > !q`` lets an outcome satisfying ``eta`` and ``!q`` flip
``q`` to true. Outcomes are tuples of booleans aligned with ``net.atoms``
and are enumerated in binary-counter order with the first atom as the least
significant bit; outcome ``w`` is the unit vector ``e_index(w)`` in the
hardness model.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .geometry import (
    GENERAL,
    CICertificate,
    GeometricModel,
    VRegion,
    check_ci,
    hull_coefficients,
    separating_hyperplane,
    unit,
)
from .syntax import ConceptExpr, ConceptInclusion, Name, NonInterference, TBox, btw, conj

MAX_DOMINANCE_ATOMS = 14
MAX_MODEL_ATOMS = 4

Literal = tuple[str, bool]
Outcome = tuple[bool, ...]


class BoundExceeded(Exception):
    """The net is larger than an exhaustive procedure allows."""


class GcpSyntaxError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass(frozen=True)
class Rule:
    condition: tuple[Literal, ...]
    flipped: Literal

    def __str__(self) -> str:
        cond = " & ".join(_lit(l) for l in self.condition) or "top"
        return f"{cond} : {_lit(self.flipped)}"


def _lit(l: Literal) -> str:
    return l[0] if l[1] else "!" + l[0]


@dataclass(frozen=True)
class GcpNet:
    atoms: tuple[str, ...]
    rules: tuple[Rule, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "rules", tuple(self.rules))
        if len(set(self.atoms)) != len(self.atoms):
            raise ValueError("duplicate atom")
        known = set(self.atoms)
        for i, r in enumerate(self.rules, 1):
            cond_atoms = [a for a, _ in r.condition]
            if len(set(cond_atoms)) != len(cond_atoms):
                raise ValueError(f"rule {i}: condition mentions an atom twice")
            for a in cond_atoms + [r.flipped[0]]:
                if a not in known:
                    raise ValueError(f"rule {i}: unknown atom {a!r}")
            if r.flipped[0] in cond_atoms:
                raise ValueError(f"rule {i}: flipped atom {r.flipped[0]!r} occurs in its condition")

    @property
    def m(self) -> int:
        return len(self.atoms)

    def pos(self, atom: str) -> int:
        return self.atoms.index(atom)

    def outcomes(self) -> list[Outcome]:
        return [outcome_at(k, self.m) for k in range(1 << self.m)]

    def render(self) -> str:
        lines = ["atoms " + " ".join(self.atoms) + ";"]
        lines += [f"{r};" for r in self.rules]
        return "\n".join(lines) + "\n"

    def render_outcome(self, w: Outcome) -> str:
        return " & ".join(_lit((a, v)) for a, v in zip(self.atoms, w))

    def parse_outcome(self, text: str) -> Outcome:
        vals: dict[str, bool] = {}
        for tok in re.split(r"[\s,&]+", text.strip()):
            if not tok:
                continue
            neg = tok[0] in "!~-"
            atom = tok[1:] if neg else tok
            if atom not in self.atoms:
                raise ValueError(f"unknown atom {atom!r} in outcome")
            if atom in vals:
                raise ValueError(f"atom {atom!r} given twice in outcome")
            vals[atom] = not neg
        missing = [a for a in self.atoms if a not in vals]
        if missing:
            raise ValueError(f"outcome leaves atoms unset: {', '.join(missing)}")
        return tuple(vals[a] for a in self.atoms)


def outcome_index(w: Outcome) -> int:
    return sum(1 << i for i, v in enumerate(w) if v)


def outcome_at(k: int, m: int) -> Outcome:
    return tuple(bool(k >> i & 1) for i in range(m))


def _holds(net: GcpNet, w: Outcome, lits: Iterable[Literal]) -> bool:
    return all(w[net.pos(a)] == v for a, v in lits)


# --- text format --------------------------------------------------------------

_ATOM = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")


def parse_gcp(text: str) -> GcpNet:
    """Parse ``atoms a b;`` followed by rules ``a & !b : c;``."""
    atoms: list[str] | None = None
    rules: list[Rule] = []
    # statements end at ';' and may span lines; track the line each starts on
    buf, start, line = [], None, 1
    stmts: list[tuple[str, int]] = []
    for ch in re.sub(r"#[^\n]*", "", text):
        if ch == ";":
            stmts.append(("".join(buf).strip(), start or line))
            buf, start = [], None
        else:
            if start is None and not ch.isspace():
                start = line
            buf.append(ch)
        if ch == "\n":
            line += 1
    if "".join(buf).strip():
        raise GcpSyntaxError("missing ';' at end of input", start)
    for stmt, ln in stmts:
        if not stmt:
            continue
        if stmt.startswith("atoms ") or stmt == "atoms":
            if atoms is not None:
                raise GcpSyntaxError("atoms declared twice", ln)
            atoms = stmt.split()[1:]
            for a in atoms:
                if not _ATOM.match(a) or a == "top":
                    raise GcpSyntaxError(f"bad atom name {a!r}", ln)
            continue
        if atoms is None:
            raise GcpSyntaxError("rules must follow the atoms declaration", ln)
        if stmt.count(":") != 1:
            raise GcpSyntaxError(f"expected 'condition : literal', got {stmt!r}", ln)
        cond_txt, flip_txt = (s.strip() for s in stmt.split(":"))
        cond = []
        if cond_txt and cond_txt != "top":
            cond = [_parse_lit(t.strip(), ln) for t in cond_txt.split("&")]
        rules.append(Rule(tuple(cond), _parse_lit(flip_txt, ln)))
    if atoms is None:
        raise GcpSyntaxError("no atoms declaration")
    try:
        return GcpNet(tuple(atoms), tuple(rules))
    except ValueError as e:
        raise GcpSyntaxError(str(e)) from None


def _parse_lit(tok: str, ln: int) -> Literal:
    neg = tok[:1] in ("!", "~")
    atom = tok[1:].strip() if neg else tok
    if not _ATOM.match(atom):
        raise GcpSyntaxError(f"bad literal {tok!r}", ln)
    return atom, not neg


# --- flips and dominance --------------------------------------------------------


def improving_flips(net: GcpNet, w: Outcome) -> set[tuple[int, Outcome]]:
    """``(rule index, successor)`` pairs, rule indices starting at 1."""
    out = set()
    for i, r in enumerate(net.rules, 1):
        a, v = r.flipped
        k = net.pos(a)
        if w[k] != v and _holds(net, w, r.condition):
            out.add((i, w[:k] + (v,) + w[k + 1:]))
    return out


def _check_bound(net: GcpNet, bound: int) -> None:
    if net.m > bound:
        raise BoundExceeded(f"{net.m} atoms exceed the bound of {bound}")


@dataclass(frozen=True)
class Dominance:
    holds: bool
    flips: tuple[tuple[int, Outcome], ...] = ()

    def __bool__(self) -> bool:
        return self.holds


def dominates(net: GcpNet, source: Outcome, target: Outcome) -> Dominance:
    """Whether a sequence of improving flips leads from ``source`` to ``target``.

    On success ``flips`` lists ``(rule, outcome after the flip)`` along a
    shortest such sequence.
    """
    _check_bound(net, MAX_DOMINANCE_ATOMS)
    source, target = tuple(source), tuple(target)
    parent: dict[Outcome, tuple[Outcome, int] | None] = {source: None}
    queue = deque([source])
    while queue:
        w = queue.popleft()
        if w == target:
            path = []
            while parent[w] is not None:
                prev, rule = parent[w]
                path.append((rule, w))
                w = prev
            return Dominance(True, tuple(reversed(path)))
        for rule, w2 in sorted(improving_flips(net, w)):
            if w2 not in parent:
                parent[w2] = (w, rule)
                queue.append(w2)
    return Dominance(False)


def is_consistent(net: GcpNet) -> bool:
    """True iff the improving-flip graph has no cycle."""
    _check_bound(net, MAX_DOMINANCE_ATOMS)
    # Kahn's algorithm over the 2^m outcomes
    succ = {w: {w2 for _, w2 in improving_flips(net, w)} for w in net.outcomes()}
    indeg = {w: 0 for w in succ}
    for ws in succ.values():
        for w2 in ws:
            indeg[w2] += 1
    queue = deque(w for w, d in indeg.items() if d == 0)
    seen = 0
    while queue:
        w = queue.popleft()
        seen += 1
        for w2 in succ[w]:
            indeg[w2] -= 1
            if indeg[w2] == 0:
                queue.append(w2)
    return seen == len(succ)


# --- reduction ------------------------------------------------------------------

Z = "Z"


def atom_name(atom: str, value: bool) -> str:
    return f"A_{atom}" if value else f"Abar_{atom}"


def tau_literals(lits: Iterable[Literal]) -> ConceptExpr:
    return conj(*(Name(atom_name(a, v)) for a, v in lits))


def tau_outcome(net: GcpNet, w: Outcome) -> ConceptExpr:
    return tau_literals(zip(net.atoms, w))


def target_ci(net: GcpNet, target: Outcome) -> ConceptInclusion:
    """The inclusion that holds in the reduced TBox iff ``target`` is dominated."""
    return ConceptInclusion(tau_outcome(net, target), Name(Z))


def _rule_cis(net: GcpNet, i: int, r: Rule) -> dict[str, ConceptInclusion]:
    a, v = r.flipped
    w, x = Name(f"W{i}"), Name(f"X{i}")
    pre = tau_literals(r.condition + ((a, not v),))
    return {
        "7": ConceptInclusion(x, Name(Z)),
        "8": ConceptInclusion(tau_literals(r.condition + (r.flipped,)), btw(w, x)),
        "9": ConceptInclusion(w, pre),
        "10": ConceptInclusion(pre, w),
    }


def reduce_to_tbox(net: GcpNet, initial: Outcome, *, check: bool = True) -> TBox:
    """TBox entailing ``target_ci(net, t)`` iff ``t`` is reachable from ``initial``.

    The equivalence is only claimed for consistent nets and targets other
    than ``initial``; ``check=False`` skips the consistency test.
    """
    if check and not is_consistent(net):
        raise ValueError("the reduction requires a consistent net")
    stmts: list = [ConceptInclusion(tau_outcome(net, initial), Name(Z))]
    names = {Z}
    names |= {atom_name(a, b) for a in net.atoms for b in (True, False)}
    for i, r in enumerate(net.rules, 1):
        stmts += list(_rule_cis(net, i, r).values())
        names |= {f"W{i}", f"X{i}"}
        mentioned = {a for a, _ in r.condition} | {r.flipped[0]}
        for a in net.atoms:
            if a not in mentioned:
                for b in (True, False):
                    stmts.append(NonInterference(Name(atom_name(a, b)), f"W{i}", f"X{i}"))
    return TBox(tuple(stmts), frozenset(names))


def flip_point(w: Outcome, w2: Outcome) -> tuple[Fraction, ...]:
    """-1 at ``w``, 2 at ``w2``: the point with ``e_w2 = (e_w + p) / 2``."""
    n = 1 << len(w)
    p = [Fraction(0)] * n
    p[outcome_index(w)] = Fraction(-1)
    p[outcome_index(w2)] = Fraction(2)
    return tuple(p)


def build_hardness_model(net: GcpNet, initial: Outcome) -> tuple[GeometricModel, list[CICertificate]]:
    """Region model of the reduced TBox plus one certificate per inclusion.

    Non-interference assertions are not certified.
    """
    _check_bound(net, MAX_MODEL_ATOMS)
    initial = tuple(initial)
    n = 1 << net.m
    outs = net.outcomes()
    regions: dict[str, VRegion] = {}
    for a in net.atoms:
        k = net.pos(a)
        for b in (True, False):
            regions[atom_name(a, b)] = VRegion.face((outcome_index(w) for w in outs if w[k] == b), n)
    z_vertices = [unit(outcome_index(initial), n)]
    certs = [CICertificate(ConceptInclusion(tau_outcome(net, initial), Name(Z)), (z_vertices[0],))]
    for i, r in enumerate(net.rules, 1):
        a, v = r.flipped
        k = net.pos(a)
        sources = [w for w in outs if w[k] != v and _holds(net, w, r.condition)]
        targets = [w[:k] + (v,) + w[k + 1:] for w in sources]
        regions[f"W{i}"] = VRegion.face((outcome_index(w) for w in sources), n)
        xs = tuple(flip_point(w, w2) for w, w2 in zip(sources, targets))
        regions[f"X{i}"] = VRegion(xs, GENERAL)
        z_vertices += [p for p in xs if p not in z_vertices]
        cis = _rule_cis(net, i, r)
        certs += [
            CICertificate(cis["7"], xs),
            CICertificate(cis["8"], tuple(unit(outcome_index(w), n) for w in targets)),
            CICertificate(cis["9"], regions[f"W{i}"].vertices),
            CICertificate(cis["10"], regions[f"W{i}"].vertices),
        ]
    regions[Z] = VRegion(tuple(z_vertices), GENERAL)
    model = GeometricModel(n, regions, {}, frozenset(regions))
    return model, certs


@dataclass
class ReductionReport:
    initial: Outcome
    target: Outcome
    dominates: bool
    flips: tuple = ()
    in_hull: bool = False
    weights: list | None = None
    hyperplane: tuple | None = None
    failed_certificates: list = field(default_factory=list)

    @property
    def trivial(self) -> bool:
        return self.initial == self.target

    @property
    def agree(self) -> bool:
        return self.trivial or self.dominates == self.in_hull

    @property
    def ok(self) -> bool:
        return self.agree and not self.failed_certificates


def verify_reduction(net: GcpNet, initial: Outcome, target: Outcome,
                     model: tuple[GeometricModel, list[CICertificate]] | None = None,
                     check_certificates: bool = True) -> ReductionReport:
    """Compare reachability with membership of ``P(target)`` in the region of ``Z``."""
    _check_bound(net, MAX_MODEL_ATOMS)
    initial, target = tuple(initial), tuple(target)
    gm, certs = model or build_hardness_model(net, initial)
    failed = [str(c.ci) for c in certs if not check_ci(gm, c)] if check_certificates else []
    dom = dominates(net, initial, target)
    p = unit(outcome_index(target), gm.dim)
    weights = hull_coefficients(p, gm.region(Z))
    hyper = None if weights is not None else separating_hyperplane(p, gm.region(Z))
    return ReductionReport(initial, target, dom.holds, dom.flips, weights is not None, weights, hyper, failed)


def verify_all_targets(net: GcpNet, initial: Outcome) -> list[ReductionReport]:
    """One report per outcome; certificate failures are recorded on every report."""
    model = build_hardness_model(net, initial)
    failed = [str(c.ci) for c in model[1] if not check_ci(model[0], c)]
    reports = [verify_reduction(net, initial, t, model, check_certificates=False) for t in net.outcomes()]
    for r in reports:
        r.failed_certificates = list(failed)
    return reports


def random_net(rng, m: int, n_rules: int, max_condition: int | None = None) -> GcpNet:
    """A random net over atoms ``a1..am``; the flipped atom never occurs in its condition."""
    atoms = tuple(f"a{k}" for k in range(1, m + 1))
    rules = []
    for _ in range(n_rules):
        q = rng.choice(atoms)
        others = [a for a in atoms if a != q]
        size = rng.randint(0, min(len(others), max_condition if max_condition is not None else len(others)))
        cond = tuple((a, rng.random() < 0.5) for a in sorted(rng.sample(others, size)))
        rules.append(Rule(cond, (q, rng.random() < 0.5)))
    return GcpNet(atoms, tuple(rules))


def random_consistent_net(rng, m: int, n_rules: int, tries: int = 200) -> GcpNet:
    for _ in range(tries):
        net = random_net(rng, m, n_rules)
        if is_consistent(net):
            return net
    return random_net(rng, m, 0)


__all__ = [
    "BoundExceeded",
    "Dominance",
    "GcpNet",
    "GcpSyntaxError",
    "ReductionReport",
    "Rule",
    "build_hardness_model",
    "dominates",
    "improving_flips",
    "is_consistent",
    "outcome_index",
    "parse_gcp",
    "random_consistent_net",
    "random_net",
    "reduce_to_tbox",
    "target_ci",
    "tau_outcome",
    "verify_all_targets",
    "verify_reduction",
]
