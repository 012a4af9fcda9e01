"""Explicit feature-enriched interpretations.

An interpretation couples a classical DL interpretation with a finite feature
set ``F`` and a map ``pi`` sending each element to a proper subset of ``F``;
every proper subset must be realised by some element. A concept is read as
its extension together with ``phi``, the features shared by all members.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

from .syntax import (
    Between,
    ConceptExpr,
    ConceptInclusion,
    Conj,
    Exists,
    Name,
    TBox,
    Top,
)


class UnknownName(KeyError):
    pass


class SearchBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class FeatureInterpretation:
    features: frozenset
    pi: Mapping[str, frozenset]
    name_ext: Mapping[str, frozenset]
    role_ext: Mapping[str, frozenset] = field(default_factory=dict)
    natural: frozenset = frozenset()

    @property
    def domain(self) -> frozenset:
        return frozenset(self.pi)

    @classmethod
    def build(cls, features, pi, names, roles=None, natural=()) -> "FeatureInterpretation":
        return cls(
            features=frozenset(features),
            pi={d: frozenset(fs) for d, fs in pi.items()},
            name_ext={a: frozenset(es) for a, es in names.items()},
            role_ext={r: frozenset(tuple(p) for p in ps) for r, ps in (roles or {}).items()},
            natural=frozenset(natural),
        )

    def to_json(self) -> dict:
        return {
            "features": sorted(self.features),
            "elements": {d: sorted(self.pi[d]) for d in sorted(self.pi, key=_natkey)},
            "concepts": {a: sorted(es, key=_natkey) for a, es in sorted(self.name_ext.items())},
            "roles": {r: sorted(map(list, ps)) for r, ps in sorted(self.role_ext.items())},
            "natural": sorted(self.natural),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def from_json(cls, doc: Union[dict, str]) -> "FeatureInterpretation":
        if isinstance(doc, str):
            doc = json.loads(doc)
        try:
            return cls.build(
                doc["features"],
                doc["elements"],
                doc.get("concepts", {}),
                doc.get("roles", {}),
                doc.get("natural", ()),
            )
        except (KeyError, TypeError, AttributeError) as e:
            raise ValueError(f"malformed interpretation document: {e}") from None


def _natkey(s: str):
    # d2 before d10
    head = s.rstrip("0123456789")
    tail = s[len(head):]
    return (head, int(tail) if tail else -1, s)


@dataclass(frozen=True)
class Violation:
    condition: str
    message: str
    witness: object = None

    def __str__(self) -> str:
        return f"{self.condition}: {self.message}"


def validate_interpretation(i: FeatureInterpretation) -> list[Violation]:
    """Every violated structural condition, each with a witness. Empty means ok."""
    out = []
    if not i.features:
        out.append(Violation("features", "feature set is empty"))
    for d, fs in sorted(i.pi.items()):
        if not fs < i.features:
            out.append(Violation("proper", f"pi({d}) is not a proper subset of the features", d))
    realised = set(i.pi.values())
    fl = sorted(i.features)
    for k in range(len(fl)):
        for sub in itertools.combinations(fl, k):
            if frozenset(sub) not in realised:
                shown = "{" + ", ".join(sub) + "}"
                out.append(Violation("witnessed", f"no element has feature set {shown}", frozenset(sub)))
    dom = i.domain
    for a, es in sorted(i.name_ext.items()):
        stray = es - dom
        if stray:
            out.append(Violation("names", f"{a} mentions unknown elements", frozenset(stray)))
    for r, ps in sorted(i.role_ext.items()):
        stray = {p for p in ps if p[0] not in dom or p[1] not in dom}
        if stray:
            out.append(Violation("roles", f"{r} mentions unknown elements", frozenset(stray)))
    return out


def _meet(i: FeatureInterpretation, ext: Iterable[str]) -> frozenset:
    acc = i.features
    for d in ext:
        acc = acc & i.pi[d]
    return acc


def extension(i: FeatureInterpretation, c: ConceptExpr) -> frozenset:
    if isinstance(c, Top):
        return i.domain
    if isinstance(c, Name):
        try:
            return i.name_ext[c.name]
        except KeyError:
            raise UnknownName(c.name) from None
    if isinstance(c, Conj):
        return extension(i, c.left) & extension(i, c.right)
    if isinstance(c, Exists):
        filler = extension(i, c.filler)
        pairs = i.role_ext.get(c.role, frozenset())
        return frozenset(d for d, e in pairs if e in filler)
    if isinstance(c, Between):
        common = phi(i, c.left) & phi(i, c.right)
        return frozenset(d for d, fs in i.pi.items() if common <= fs)
    raise TypeError(f"not a concept: {c!r}")


def phi(i: FeatureInterpretation, c: ConceptExpr) -> frozenset:
    return _meet(i, extension(i, c))


def element_between(i: FeatureInterpretation, d1: str, d: str, d2: str) -> bool:
    return i.pi[d1] & i.pi[d2] <= i.pi[d]


def _inclusions(t) -> list[ConceptInclusion]:
    if isinstance(t, TBox):
        if t.non_interference:
            raise ValueError("non-interference assertions have no feature-enriched reading")
        return list(t.inclusions)
    return list(t.cis)


def is_model(i: FeatureInterpretation, t) -> list[Violation]:
    """Violated inclusions and naturalness conditions; empty means ``i`` is a model of ``t``.

    ``t`` may be a :class:`TBox` or a normalized TBox.
    """
    out = []
    for ci in _inclusions(t):
        missing = extension(i, ci.lhs) - extension(i, ci.rhs)
        if missing:
            out.append(Violation("inclusion", f"{ci} fails", frozenset(missing)))
    for a in sorted(t.natural_names):
        ext = extension(i, Name(a))
        need = _meet(i, ext)
        closed = frozenset(d for d, fs in i.pi.items() if need <= fs)
        if closed != ext:
            out.append(Violation("natural", f"{a} is not determined by its features", closed ^ ext))
    return out


def satisfies(i: FeatureInterpretation, lhs: ConceptExpr, rhs: ConceptExpr) -> bool:
    return extension(i, lhs) <= extension(i, rhs)


# --- bounded countermodel search -------------------------------------------


def enumerate_countermodel(
    tbox,
    lhs: str,
    rhs: str,
    max_features: int = 2,
    budget: int = 200_000,
) -> FeatureInterpretation | None:
    """Search small canonical interpretations for a model of ``tbox`` refuting ``lhs <= rhs``.

    Elements are exactly the proper subsets of ``F`` for ``|F| <= max_features``.
    Natural names range over all feature sets, roles over a few fixed shapes
    (empty, full, identity, everything pointing at one element) and the
    remaining names take the least extensions forced by the inclusions. A
    returned interpretation is a validated countermodel; ``None`` only means
    nothing was found inside this family.
    """
    if not 1 <= max_features <= 3:
        raise ValueError("max_features must be between 1 and 3")
    cis = _inclusions(tbox)
    natural = set(tbox.natural_names)
    names = set(natural) | {lhs, rhs}
    roles = set()
    for ci in cis:
        for side in (ci.lhs, ci.rhs):
            _collect(side, names, roles)
    nat = sorted(n for n in names if n in natural)
    plain = sorted(n for n in names if n not in natural)
    roles = sorted(roles)
    spent = 0
    for k in range(1, max_features + 1):
        full = (1 << k) - 1
        elems = list(range(full))  # bitmask k-subsets except the full set
        role_shapes = _role_shapes(elems)
        for nat_choice in itertools.product(range(full + 1), repeat=len(nat)):
            theta = dict(zip(nat, nat_choice))
            nat_ext = {a: frozenset(e for e in elems if theta[a] & e == theta[a]) for a in nat}
            for role_choice in itertools.product(range(len(role_shapes)), repeat=len(roles)):
                rext = {r: role_shapes[j] for r, j in zip(roles, role_choice)}
                seeds = [None] if lhs in natural else elems
                for seed in seeds:
                    spent += 1
                    if spent > budget:
                        raise SearchBudgetExceeded(f"gave up after {budget} candidates")
                    ext = _least_plain(cis, elems, full, theta, nat_ext, plain, rext, lhs, seed)
                    if ext is None:
                        continue
                    if not ext[lhs] - ext[rhs]:
                        continue
                    cand = _materialise(k, elems, ext, rext, natural & set(ext))
                    if not validate_interpretation(cand) and not is_model(cand, tbox):
                        return cand
    return None


def _collect(c, names, roles):
    if isinstance(c, Name):
        names.add(c.name)
    elif isinstance(c, (Conj, Between)):
        _collect(c.left, names, roles)
        _collect(c.right, names, roles)
    elif isinstance(c, Exists):
        roles.add(c.role)
        _collect(c.filler, names, roles)


def _role_shapes(elems):
    full = frozenset(elems)
    shapes = [frozenset(), frozenset((d, e) for d in full for e in full), frozenset((d, d) for d in full)]
    shapes += [frozenset((d, e) for d in full) for e in elems]
    return shapes


def _least_plain(cis, elems, full, theta, nat_ext, plain, rext, lhs, seed):
    ext = dict(nat_ext)
    for a in plain:
        ext[a] = frozenset()
    if seed is not None:
        ext[lhs] = frozenset([seed])
    dom = frozenset(elems)

    def meet(es):
        acc = full
        for e in es:
            acc &= e
        return acc

    def ev(c):
        if isinstance(c, Top):
            return dom
        if isinstance(c, Name):
            return ext[c.name]
        if isinstance(c, Conj):
            return ev(c.left) & ev(c.right)
        if isinstance(c, Exists):
            f = ev(c.filler)
            return frozenset(d for d, e in rext.get(c.role, ()) if e in f)
        common = meet(ev(c.left)) & meet(ev(c.right))
        return frozenset(e for e in elems if e & common == common)

    changed = True
    while changed:
        changed = False
        for ci in cis:
            if isinstance(ci.rhs, Name) and ci.rhs.name in ext and ci.rhs.name not in nat_ext:
                grown = ext[ci.rhs.name] | ev(ci.lhs)
                if grown != ext[ci.rhs.name]:
                    ext[ci.rhs.name] = grown
                    changed = True
    for ci in cis:
        if not ev(ci.lhs) <= ev(ci.rhs):
            return None
    return ext


def _materialise(k, elems, ext, rext, natural) -> FeatureInterpretation:
    feats = [f"f{j + 1}" for j in range(k)]

    def fs(mask):
        return frozenset(feats[j] for j in range(k) if mask >> j & 1)

    def el(mask):
        return f"d{mask}"

    return FeatureInterpretation.build(
        feats,
        {el(e): fs(e) for e in elems},
        {a: {el(e) for e in es} for a, es in ext.items()},
        {r: {(el(a), el(b)) for a, b in ps} for r, ps in rext.items()},
        natural,
    )
