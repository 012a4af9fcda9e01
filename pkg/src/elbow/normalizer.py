"""Normal form for EL-btw TBoxes.

Every inclusion produced here has one of six shapes (``A``, ``A1``, ``A2``
and ``B`` being names or ``top``, ``B1``/``B2`` natural names)::

    A <= B      A1 & A2 <= B      A <= some r. B
    some r. A <= B      A <= btw(B1, B2)      btw(B1, B2) <= A

Complex subterms are replaced by fresh names ``_N1``, ``_N2``, ... with a
two-way definition. A fresh name is natural exactly when the concept it
stands for is natural, which keeps the translation conservative under the
feature semantics (natural complex concepts are feature-definable in every
model).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .syntax import (
    Between,
    ConceptExpr,
    ConceptInclusion,
    Conj,
    Exists,
    Name,
    NonInterference,
    TBox,
    Top,
    is_natural,
    names_in,
)


@dataclass(frozen=True)
class NormalTBox:
    cis: tuple[ConceptInclusion, ...]
    natural_names: frozenset[str]
    fresh_map: dict = field(default_factory=dict, compare=False, hash=False)
    non_interference: tuple[NonInterference, ...] = ()
    original_names: frozenset[str] = frozenset()

    @property
    def concept_names(self) -> frozenset[str]:
        return self.as_tbox().signature

    @property
    def role_names(self) -> frozenset[str]:
        return self.as_tbox().role_names

    def as_tbox(self) -> TBox:
        return TBox(self.cis + self.non_interference, self.natural_names)

    def size(self) -> int:
        return self.as_tbox().size()


def is_atom(c: ConceptExpr) -> bool:
    return isinstance(c, (Name, Top))


def normal_shape(ci: ConceptInclusion, natural: frozenset[str]) -> str | None:
    """Name of the normal-form shape of ``ci``, or ``None`` if it is not normal."""
    lhs, rhs = ci.lhs, ci.rhs

    def nat_name(c):
        return isinstance(c, Name) and c.name in natural

    if is_atom(lhs):
        if is_atom(rhs):
            return "atomic"
        if isinstance(rhs, Exists) and is_atom(rhs.filler):
            return "exists_rhs"
        if isinstance(rhs, Between) and nat_name(rhs.left) and nat_name(rhs.right):
            return "between_rhs"
        return None
    if not is_atom(rhs):
        return None
    if isinstance(lhs, Conj) and is_atom(lhs.left) and is_atom(lhs.right):
        return "conj_lhs"
    if isinstance(lhs, Exists) and is_atom(lhs.filler):
        return "exists_lhs"
    if isinstance(lhs, Between) and nat_name(lhs.left) and nat_name(lhs.right):
        return "between_lhs"
    return None


class _Normalizer:
    def __init__(self, natural: frozenset[str], taken: frozenset[str], prefix: str = "_N"):
        self.natural = set(natural)
        self.taken = set(taken)
        self.prefix = prefix
        self.counter = 0
        self.out: list[ConceptInclusion] = []
        self.seen: set[ConceptInclusion] = set()
        self.fresh: dict[ConceptExpr, str] = {}
        self.fresh_map: dict[str, ConceptExpr] = {}

    def emit(self, lhs: ConceptExpr, rhs: ConceptExpr) -> None:
        ci = ConceptInclusion(lhs, rhs)
        if ci not in self.seen:
            self.seen.add(ci)
            self.out.append(ci)

    def new_name(self, natural: bool) -> str:
        while True:
            self.counter += 1
            n = f"{self.prefix}{self.counter}"
            if n not in self.taken:
                break
        self.taken.add(n)
        if natural:
            self.natural.add(n)
        return n

    def atom(self, c: ConceptExpr) -> ConceptExpr:
        """A name or ``top`` equivalent to ``c``."""
        if is_atom(c):
            return c
        if c in self.fresh:
            return Name(self.fresh[c])
        n = self.new_name(is_natural(c, self.natural))
        self.fresh[c] = n
        self.fresh_map[n] = c
        self.rhs(Name(n), c)
        self.lhs(c, Name(n))
        return Name(n)

    def natural_name(self, c: ConceptExpr) -> Name:
        a = self.atom(c)
        assert isinstance(a, Name) and a.name in self.natural, c
        return a

    def rhs(self, a: ConceptExpr, d: ConceptExpr) -> None:
        """Emit ``a <= d`` with ``a`` atomic."""
        if is_atom(d):
            self.emit(a, d)
        elif isinstance(d, Conj):
            self.rhs(a, d.left)
            self.rhs(a, d.right)
        elif isinstance(d, Exists):
            self.emit(a, Exists(d.role, self.atom(d.filler)))
        elif isinstance(d, Between):
            self.emit(a, Between(self.natural_name(d.left), self.natural_name(d.right)))
        else:
            raise TypeError(d)

    def lhs(self, c: ConceptExpr, b: ConceptExpr) -> None:
        """Emit ``c <= b`` with ``b`` atomic."""
        if is_atom(c):
            self.emit(c, b)
        elif isinstance(c, Conj):
            self.emit(Conj(self.atom(c.left), self.atom(c.right)), b)
        elif isinstance(c, Exists):
            self.emit(Exists(c.role, self.atom(c.filler)), b)
        elif isinstance(c, Between):
            self.emit(Between(self.natural_name(c.left), self.natural_name(c.right)), b)
        else:
            raise TypeError(c)

    def inclusion(self, ci: ConceptInclusion) -> None:
        if normal_shape(ci, frozenset(self.natural)):
            self.emit(ci.lhs, ci.rhs)
        elif is_atom(ci.lhs):
            self.rhs(ci.lhs, ci.rhs)
        elif is_atom(ci.rhs):
            self.lhs(ci.lhs, ci.rhs)
        else:
            self.rhs(self.atom(ci.lhs), ci.rhs)


def normalize(tbox: TBox, _extra=()) -> NormalTBox:
    """Normal form of ``tbox``; non-interference assertions pass through unchanged."""
    nz = _Normalizer(tbox.natural_names, tbox.signature)
    for ci in tbox.inclusions:
        nz.inclusion(ci)
    for ci in _extra:
        nz.inclusion(ci)
    return NormalTBox(
        cis=tuple(nz.out),
        natural_names=frozenset(nz.natural),
        fresh_map=dict(nz.fresh_map),
        non_interference=tuple(tbox.non_interference),
        original_names=tbox.signature,
    )


QUERY_LHS = "_QL"
QUERY_RHS = "_QR"


def normalize_query(
    tbox: TBox, lhs: ConceptExpr, rhs: ConceptExpr
) -> tuple[NormalTBox, str, str]:
    """Internalize ``lhs <= rhs`` as a subsumption between two fresh names.

    Returns the normalized TBox extended with ``_QL == lhs`` and
    ``_QR == rhs`` together with the two names.
    """
    taken = tbox.signature | {n for c in (lhs, rhs) for n in names_in(c)}
    ql, qr = _fresh(QUERY_LHS, taken), _fresh(QUERY_RHS, taken | {QUERY_LHS})
    natural = set(tbox.natural_names)
    if is_natural(lhs, tbox.natural_names):
        natural.add(ql)
    if is_natural(rhs, tbox.natural_names):
        natural.add(qr)
    defs = [
        ConceptInclusion(Name(ql), lhs),
        ConceptInclusion(lhs, Name(ql)),
        ConceptInclusion(Name(qr), rhs),
        ConceptInclusion(rhs, Name(qr)),
    ]
    ext = TBox(tbox.statements, frozenset(natural))
    nz = _Normalizer(ext.natural_names, ext.signature | {ql, qr})
    for ci in ext.inclusions + defs:
        nz.inclusion(ci)
    norm = NormalTBox(
        cis=tuple(nz.out),
        natural_names=frozenset(nz.natural),
        fresh_map={**nz.fresh_map, ql: lhs, qr: rhs},
        non_interference=tuple(tbox.non_interference),
        original_names=tbox.signature,
    )
    return norm, ql, qr


def _fresh(base: str, taken) -> str:
    n, k = base, 0
    while n in taken:
        k += 1
        n = f"{base}{k}"
    return n

