"""Exact rational convex geometry for geometric models.

Regions are V-polytopes: the convex hull of finitely many rational points.
A region flagged as a simplex face has distinct standard unit vectors as
vertices, which makes intersection a matter of intersecting vertex sets.
Hull membership is an LP feasibility question settled by a phase-1 simplex
on :class:`fractions.Fraction` with Bland's rule; :func:`caratheodory_membership`
answers the same question by brute force and serves as its test oracle.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from .syntax import Between, ConceptExpr, ConceptInclusion, Conj, Exists, Name, Top

Vec = tuple  # of Fraction

GENERAL = "general"
SIMPLEX_FACE = "simplex_face"


class DimensionMismatch(ValueError):
    pass


class UnsupportedRegion(ValueError):
    """The concept does not denote a region this module can represent."""


def vec(*coords) -> Vec:
    return tuple(Fraction(c) for c in coords)


def unit(i: int, dim: int) -> Vec:
    return tuple(Fraction(int(j == i)) for j in range(dim))


def parse_rational(s) -> Fraction:
    if isinstance(s, (int, Fraction)):
        return Fraction(s)
    if isinstance(s, str):
        return Fraction(s.strip())
    raise ValueError(f"not an exact rational: {s!r}")


def format_rational(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _is_unit(v: Vec) -> bool:
    return sum(1 for x in v if x == 1) == 1 and all(x in (0, 1) for x in v)


@dataclass(frozen=True)
class VRegion:
    vertices: tuple
    kind: str = GENERAL

    def __post_init__(self):
        verts = tuple(tuple(Fraction(x) for x in v) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if self.kind not in (GENERAL, SIMPLEX_FACE):
            raise ValueError(f"unknown region kind {self.kind!r}")
        if len({len(v) for v in verts}) > 1:
            raise DimensionMismatch("vertices of different dimensions")
        if self.kind == SIMPLEX_FACE:
            if not all(_is_unit(v) for v in verts) or len(set(verts)) != len(verts):
                raise ValueError("simplex-face vertices must be distinct unit vectors")
        elif not verts:
            raise ValueError("a general region needs at least one vertex")

    @classmethod
    def face(cls, indices: Iterable[int], dim: int) -> "VRegion":
        return cls(tuple(unit(i, dim) for i in sorted(set(indices))), SIMPLEX_FACE)

    @property
    def is_empty(self) -> bool:
        return not self.vertices

    @property
    def dim(self) -> int | None:
        return len(self.vertices[0]) if self.vertices else None

    @property
    def support(self) -> frozenset:
        """Unit-vector indices spanning a simplex face."""
        if self.kind != SIMPLEX_FACE:
            raise UnsupportedRegion("only simplex faces have a support")
        return frozenset(v.index(1) for v in self.vertices)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "vertices": [[format_rational(x) for x in v] for v in self.vertices],
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "VRegion":
        return cls(
            tuple(tuple(parse_rational(x) for x in v) for v in doc["vertices"]),
            doc.get("kind", GENERAL),
        )


EMPTY = VRegion((), SIMPLEX_FACE)


# --- hull membership -------------------------------------------------------


def hull_coefficients(p: Sequence, r: VRegion) -> list[Fraction] | None:
    """Convex weights expressing ``p`` over the vertices of ``r``, or ``None``."""
    p = tuple(Fraction(x) for x in p)
    if r.is_empty:
        return None
    if len(p) != r.dim:
        raise DimensionMismatch(f"point has dimension {len(p)}, region {r.dim}")
    n = len(r.vertices)
    rows = [[v[i] for v in r.vertices] + [p[i]] for i in range(len(p))]
    rows.append([Fraction(1)] * n + [Fraction(1)])
    sol = _phase_one(rows, n)
    return sol


def _phase_one(rows: list[list[Fraction]], n: int) -> list[Fraction] | None:
    """Feasibility of ``A x = b, x >= 0`` (rows are ``A | b``) by phase-1 simplex."""
    m = len(rows)
    tab = []
    for i, row in enumerate(rows):
        a, b = row[:n], row[n]
        if b < 0:
            a, b = [-x for x in a], -b
        art = [Fraction(int(j == i)) for j in range(m)]
        tab.append(a + art + [b])
    width = n + m
    basis = [n + i for i in range(m)]
    # reduced costs for minimising the sum of artificials
    cost = [Fraction(0)] * (width + 1)
    for row in tab:
        for j in range(n):
            cost[j] -= row[j]
        cost[width] -= row[width]
    while True:
        enter = next((j for j in range(width) if cost[j] < 0), None)
        if enter is None:
            break
        best = None
        for i, row in enumerate(tab):
            if row[enter] > 0:
                ratio = row[width] / row[enter]
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:  # cannot happen: the phase-1 objective is bounded below
            raise ArithmeticError("unbounded phase-1 problem")
        r = best[1]
        piv = tab[r][enter]
        tab[r] = [x / piv for x in tab[r]]
        for i in range(m):
            if i != r and tab[i][enter] != 0:
                f = tab[i][enter]
                tab[i] = [x - f * y for x, y in zip(tab[i], tab[r])]
        f = cost[enter]
        cost = [x - f * y for x, y in zip(cost, tab[r])]
        basis[r] = enter
    if cost[width] != 0:
        return None
    x = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = tab[i][width]
    return x


def separating_hyperplane(p: Sequence, r: VRegion) -> tuple[Vec, Fraction] | None:
    """``(y, t)`` with ``y.v <= t`` for every vertex and ``y.p >= t + 1``; ``None`` if ``p`` is in the hull.

    This is the Farkas certificate for infeasibility of the hull LP.
    """
    p = tuple(Fraction(x) for x in p)
    d = len(p)
    if not r.is_empty and r.dim != d:
        raise DimensionMismatch(f"point has dimension {d}, region {r.dim}")
    k = len(r.vertices)
    # variables: y+ (d), y- (d), t+, t-, one slack per vertex, one slack for p
    n = 2 * d + 2 + k + 1
    rows = []
    for j, v in enumerate(r.vertices):
        row = [Fraction(0)] * (n + 1)
        for i in range(d):
            row[i], row[d + i] = v[i], -v[i]
        row[2 * d], row[2 * d + 1] = Fraction(-1), Fraction(1)
        row[2 * d + 2 + j] = Fraction(1)
        rows.append(row)
    row = [Fraction(0)] * (n + 1)
    for i in range(d):
        row[i], row[d + i] = p[i], -p[i]
    row[2 * d], row[2 * d + 1] = Fraction(-1), Fraction(1)
    row[n - 1], row[n] = Fraction(-1), Fraction(1)
    rows.append(row)
    sol = _phase_one(rows, n)
    if sol is None:
        return None
    y = tuple(sol[i] - sol[d + i] for i in range(d))
    return y, sol[2 * d] - sol[2 * d + 1]


def hull_membership(p: Sequence, r: VRegion) -> bool:
    if r.kind == SIMPLEX_FACE and not r.is_empty:
        p = tuple(Fraction(x) for x in p)
        if len(p) != r.dim:
            raise DimensionMismatch(f"point has dimension {len(p)}, region {r.dim}")
        sup = r.support
        return (
            all(x >= 0 for x in p)
            and sum(p) == 1
            and all(x == 0 for i, x in enumerate(p) if i not in sup)
        )
    p = tuple(Fraction(x) for x in p)
    if p in r.vertices:
        return True
    return hull_coefficients(p, r) is not None


def _solve_exact(cols: list[Vec], rhs: Vec) -> list[Fraction] | None:
    """Unique solution of ``sum_j x_j cols[j] = rhs`` if the columns are independent."""
    m, k = len(rhs), len(cols)
    aug = [[cols[j][i] for j in range(k)] + [rhs[i]] for i in range(m)]
    row = 0
    pivots = []
    for c in range(k):
        piv = next((i for i in range(row, m) if aug[i][c] != 0), None)
        if piv is None:
            return None  # dependent columns
        aug[row], aug[piv] = aug[piv], aug[row]
        pv = aug[row][c]
        aug[row] = [x / pv for x in aug[row]]
        for i in range(m):
            if i != row and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[row])]
        pivots.append(c)
        row += 1
    if any(aug[i][k] != 0 for i in range(row, m)):
        return None
    return [aug[i][k] for i in range(k)]


def caratheodory_membership(p: Sequence, r: VRegion) -> bool:
    """Brute force: some affinely independent vertex subset has ``p`` in its hull."""
    p = tuple(Fraction(x) for x in p)
    if r.is_empty:
        return False
    if len(p) != r.dim:
        raise DimensionMismatch(f"point has dimension {len(p)}, region {r.dim}")
    lifted = [tuple(v) + (Fraction(1),) for v in dict.fromkeys(r.vertices)]
    target = p + (Fraction(1),)
    for size in range(1, min(len(lifted), len(p) + 1) + 1):
        for subset in itertools.combinations(lifted, size):
            lam = _solve_exact(list(subset), target)
            if lam is not None and all(x >= 0 for x in lam):
                return True
    return False


# --- region algebra and models ----------------------------------------------


def intersect_regions(a: VRegion, b: VRegion) -> VRegion:
    if a.kind != SIMPLEX_FACE or b.kind != SIMPLEX_FACE:
        raise UnsupportedRegion("intersection is only implemented for simplex faces")
    if a.is_empty or b.is_empty:
        return EMPTY
    if a.dim != b.dim:
        raise DimensionMismatch("regions of different dimensions")
    keep = set(b.vertices)
    return VRegion(tuple(v for v in a.vertices if v in keep), SIMPLEX_FACE)


def hull_union(a: VRegion, b: VRegion) -> VRegion:
    """Convex hull of the union of two regions."""
    if a.is_empty:
        return b
    if b.is_empty:
        return a
    if a.dim != b.dim:
        raise DimensionMismatch("regions of different dimensions")
    verts = tuple(dict.fromkeys(a.vertices + b.vertices))
    kind = SIMPLEX_FACE if a.kind == b.kind == SIMPLEX_FACE else GENERAL
    if kind == SIMPLEX_FACE:
        verts = tuple(sorted(verts, key=lambda v: v.index(1)))
    return VRegion(verts, kind)


@dataclass(frozen=True)
class GeometricModel:
    dim: int
    regions: Mapping[str, VRegion]
    roles: Mapping[str, frozenset] = field(default_factory=dict)
    natural: frozenset = frozenset()

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError("dimension must be positive")
        for n, r in self.regions.items():
            if not r.is_empty and r.dim != self.dim:
                raise DimensionMismatch(f"region {n} has dimension {r.dim}, model {self.dim}")
        for role, pairs in self.roles.items():
            for p, q in pairs:
                if len(p) != self.dim or len(q) != self.dim:
                    raise DimensionMismatch(f"role {role} has a pair of the wrong dimension")
        missing = set(self.natural) - set(self.regions)
        if missing:
            raise ValueError(f"natural names without regions: {sorted(missing)}")

    def region(self, name: str) -> VRegion:
        try:
            return self.regions[name]
        except KeyError:
            raise KeyError(f"no region for concept name {name!r}") from None

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "regions": {n: r.to_json() for n, r in sorted(self.regions.items())},
            "roles": {
                role: sorted(
                    [[format_rational(x) for x in p], [format_rational(x) for x in q]] for p, q in pairs
                )
                for role, pairs in sorted(self.roles.items())
            },
            "natural": sorted(self.natural),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def from_json(cls, doc: Union[str, Mapping]) -> "GeometricModel":
        if isinstance(doc, str):
            doc = json.loads(doc)
        try:
            dim = int(doc["dim"])
            regions = {n: VRegion.from_json(r) for n, r in doc.get("regions", {}).items()}
            roles = {}
            for role, pairs in doc.get("roles", {}).items():
                roles[role] = frozenset(
                    (tuple(map(parse_rational, p)), tuple(map(parse_rational, q))) for p, q in pairs
                )
            return cls(dim, regions, roles, frozenset(doc.get("natural", ())))
        except (KeyError, TypeError, ZeroDivisionError) as e:
            raise ValueError(f"malformed geometric model: {e}") from None


def region_of(model: GeometricModel, c: ConceptExpr) -> VRegion:
    """The region of ``c`` when it is a name or built from simplex faces by ``&`` and ``btw``."""
    if isinstance(c, Name):
        return model.region(c.name)
    if isinstance(c, Conj):
        return intersect_regions(region_of(model, c.left), region_of(model, c.right))
    if isinstance(c, Between):
        return hull_union(region_of(model, c.left), region_of(model, c.right))
    raise UnsupportedRegion(f"{c} has no finite vertex representation")


def evaluate_membership(model: GeometricModel, c: ConceptExpr, p: Sequence) -> bool:
    p = tuple(Fraction(x) for x in p)
    if len(p) != model.dim:
        raise DimensionMismatch(f"point has dimension {len(p)}, model {model.dim}")
    return _member(model, c, p)


def _member(model: GeometricModel, c: ConceptExpr, p: Vec) -> bool:
    if isinstance(c, Top):
        return True
    if isinstance(c, Name):
        return hull_membership(p, model.region(c.name))
    if isinstance(c, Conj):
        return _member(model, c.left, p) and _member(model, c.right, p)
    if isinstance(c, Exists):
        return any(q == p and _member(model, c.filler, q2) for q, q2 in model.roles.get(c.role, ()))
    if isinstance(c, Between):
        return hull_membership(p, hull_union(region_of(model, c.left), region_of(model, c.right)))
    raise TypeError(f"not a concept: {c!r}")


@dataclass(frozen=True)
class CICertificate:
    ci: ConceptInclusion
    lhs_witness_vertices: tuple = ()

    def __post_init__(self):
        object.__setattr__(
            self,
            "lhs_witness_vertices",
            tuple(tuple(Fraction(x) for x in v) for v in self.lhs_witness_vertices),
        )


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    point: Vec | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _convex(c: ConceptExpr) -> bool:
    if isinstance(c, (Top, Name, Between)):
        return True
    if isinstance(c, Conj):
        return _convex(c.left) and _convex(c.right)
    return False


def check_ci(model: GeometricModel, cert: CICertificate) -> CheckResult:
    """Check ``lhs <= rhs`` through a finite set of points generating the left-hand side.

    The right-hand side must denote a convex set (no existentials), so that
    containing the generators means containing their hull. When the left-hand
    side has a computable region, the generators are also checked to span it.
    """
    ci = cert.ci
    if not _convex(ci.rhs):
        raise UnsupportedRegion("right-hand side must be convex (names, &, btw, top)")
    witnesses = cert.lhs_witness_vertices
    try:
        lhs_region = region_of(model, ci.lhs)
    except UnsupportedRegion:
        lhs_region = None
    if lhs_region is None and not witnesses:
        raise UnsupportedRegion(f"cannot enumerate the points of {ci.lhs}; supply witness vertices")
    if lhs_region is not None:
        if not witnesses:
            witnesses = lhs_region.vertices
        else:
            span = VRegion(witnesses) if witnesses else EMPTY
            for v in lhs_region.vertices:
                if not hull_membership(v, span):
                    return CheckResult(False, v, "witnesses do not cover the left-hand side")
            for w in witnesses:
                if not hull_membership(w, lhs_region):
                    return CheckResult(False, w, "witness lies outside the left-hand side")
    for w in witnesses:
        if not evaluate_membership(model, ci.rhs, w):
            return CheckResult(False, w, "point of the left-hand side outside the right-hand side")
    return CheckResult(True)
