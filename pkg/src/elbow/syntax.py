"""Concept expressions, TBoxes and their line-oriented text format.

The surface syntax is ASCII only::

    natural Rabbit, Giraffe, Herbivore;
    Zebra <= btw(Rabbit, Giraffe);
    Herbivore <= some eats. Plant;
    ni(A; C, D);

``&`` is conjunction, ``some r. C`` an existential restriction (extending as
far right as possible) and ``btw(C, D)`` the in-between constructor.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union


class SyntaxProblem(ValueError):
    """Malformed TBox text, reported with a 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class NaturalnessError(ValueError):
    """A position requiring a natural concept holds a non-natural one."""


# ---------------------------------------------------------------------------
# Abstract syntax


@dataclass(frozen=True)
class Top:
    def __str__(self) -> str:
        return "top"


@dataclass(frozen=True)
class Name:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Conj:
    left: "ConceptExpr"
    right: "ConceptExpr"

    def __str__(self) -> str:
        return render_concept(self)


@dataclass(frozen=True)
class Exists:
    role: str
    filler: "ConceptExpr"

    def __str__(self) -> str:
        return render_concept(self)


@dataclass(frozen=True)
class Between:
    left: "ConceptExpr"
    right: "ConceptExpr"

    def __str__(self) -> str:
        return render_concept(self)


ConceptExpr = Union[Top, Name, Conj, Exists, Between]

TOP = Top()


@dataclass(frozen=True)
class _BottomToken:
    """Bookkeeping marker used by :func:`subconcepts`; not part of the language."""

    def __str__(self) -> str:
        return "_bottom"


BOTTOM = _BottomToken()


@dataclass(frozen=True)
class ConceptInclusion:
    lhs: ConceptExpr
    rhs: ConceptExpr

    def __str__(self) -> str:
        return f"{render_concept(self.lhs)} <= {render_concept(self.rhs)}"


@dataclass(frozen=True)
class NonInterference:
    """``guard`` does not interfere with betweenness of ``first`` and ``second``."""

    guard: ConceptExpr
    first: str
    second: str

    def __str__(self) -> str:
        return f"ni({render_concept(self.guard)}; {self.first}, {self.second})"


Statement = Union[ConceptInclusion, NonInterference]


def conj(*parts: ConceptExpr) -> ConceptExpr:
    """Right-nested conjunction; the empty conjunction is ``top``."""
    if not parts:
        return TOP
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Conj(p, out)
    return out


def btw(*parts: ConceptExpr) -> ConceptExpr:
    """Right-nested betweenness over two or more operands (one operand is returned as is)."""
    if not parts:
        raise ValueError("btw needs at least one operand")
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Between(p, out)
    return out


def names_in(c: ConceptExpr) -> Iterator[str]:
    if isinstance(c, Name):
        yield c.name
    elif isinstance(c, (Conj, Between)):
        yield from names_in(c.left)
        yield from names_in(c.right)
    elif isinstance(c, Exists):
        yield from names_in(c.filler)


def roles_in(c: ConceptExpr) -> Iterator[str]:
    if isinstance(c, (Conj, Between)):
        yield from roles_in(c.left)
        yield from roles_in(c.right)
    elif isinstance(c, Exists):
        yield c.role
        yield from roles_in(c.filler)


def is_natural(c: ConceptExpr, natural_names: Iterable[str]) -> bool:
    """Membership in the natural-concept grammar ``N := A' | N & N | btw(N, N)``."""
    nat = natural_names if isinstance(natural_names, (set, frozenset)) else set(natural_names)
    if isinstance(c, Name):
        return c.name in nat
    if isinstance(c, (Conj, Between)):
        return is_natural(c.left, nat) and is_natural(c.right, nat)
    return False


def size(c: ConceptExpr) -> int:
    """Number of constructor and name occurrences."""
    if isinstance(c, (Top, Name)):
        return 1
    if isinstance(c, Exists):
        return 1 + size(c.filler)
    return 1 + size(c.left) + size(c.right)


# ---------------------------------------------------------------------------
# TBoxes


@dataclass(frozen=True)
class TBox:
    statements: tuple[Statement, ...] = ()
    natural_names: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "statements", tuple(self.statements))
        object.__setattr__(self, "natural_names", frozenset(self.natural_names))

    @property
    def inclusions(self) -> list[ConceptInclusion]:
        return [s for s in self.statements if isinstance(s, ConceptInclusion)]

    @property
    def non_interference(self) -> list[NonInterference]:
        return [s for s in self.statements if isinstance(s, NonInterference)]

    @property
    def concept_names(self) -> frozenset[str]:
        out: set[str] = set()
        for s in self.statements:
            if isinstance(s, ConceptInclusion):
                out.update(names_in(s.lhs))
                out.update(names_in(s.rhs))
            else:
                out.update(names_in(s.guard))
                out.update((s.first, s.second))
        return frozenset(out)

    @property
    def role_names(self) -> frozenset[str]:
        out: set[str] = set()
        for s in self.statements:
            if isinstance(s, ConceptInclusion):
                out.update(roles_in(s.lhs))
                out.update(roles_in(s.rhs))
            else:
                out.update(roles_in(s.guard))
        return frozenset(out)

    @property
    def signature(self) -> frozenset[str]:
        """Concept names used in statements plus every declared natural name."""
        return self.concept_names | self.natural_names

    def size(self) -> int:
        total = 0
        for s in self.statements:
            if isinstance(s, ConceptInclusion):
                total += size(s.lhs) + size(s.rhs)
            else:
                total += size(s.guard) + 2
        return total

    def with_statements(self, extra: Iterable[Statement], natural: Iterable[str] = ()) -> "TBox":
        return TBox(self.statements + tuple(extra), self.natural_names | frozenset(natural))

    def union(self, other: "TBox") -> "TBox":
        return TBox(self.statements + other.statements, self.natural_names | other.natural_names)


def check_naturalness(tbox: TBox) -> None:
    """Raise :class:`NaturalnessError` if ``btw`` or ``ni`` is used on non-natural concepts."""

    def walk(c: ConceptExpr) -> None:
        if isinstance(c, Between):
            for side in (c.left, c.right):
                if not is_natural(side, tbox.natural_names):
                    raise NaturalnessError(f"btw operand {render_concept(side)} is not natural")
            walk(c.left)
            walk(c.right)
        elif isinstance(c, Conj):
            walk(c.left)
            walk(c.right)
        elif isinstance(c, Exists):
            walk(c.filler)

    for s in tbox.statements:
        if isinstance(s, ConceptInclusion):
            walk(s.lhs)
            walk(s.rhs)
        else:
            if not is_natural(s.guard, tbox.natural_names):
                raise NaturalnessError(f"ni guard {render_concept(s.guard)} is not natural")
            for n in (s.first, s.second):
                if n not in tbox.natural_names:
                    raise NaturalnessError(f"ni operand {n} is not a natural name")
            walk(s.guard)


def subconcepts(tbox: TBox) -> frozenset:
    """Top, the bottom marker, all concept names, RHS betweenness and LHS conjunctions."""
    out: set = {TOP, BOTTOM}
    out.update(Name(n) for n in tbox.signature)
    for ci in tbox.inclusions:
        if isinstance(ci.rhs, Between):
            out.add(ci.rhs)
        if isinstance(ci.lhs, Conj):
            out.add(ci.lhs)
    return frozenset(out)


# ---------------------------------------------------------------------------
# Text format

KEYWORDS = {"natural", "ni", "btw", "some", "top"}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<le><=)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[&.,;()])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise SyntaxProblem(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            val = m.group()
            if kind == "name" and val in KEYWORDS:
                kind = val
            elif kind in ("punct", "le"):
                kind = val
            toks.append(_Tok(kind, val, line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def cur(self) -> _Tok:
        return self.toks[self.i]

    def take(self, kind: str) -> _Tok:
        t = self.cur
        if t.kind != kind:
            shown = t.text or "end of input"
            raise SyntaxProblem(f"expected {kind!r}, found {shown!r}", t.line, t.col)
        self.i += 1
        return t

    def accept(self, kind: str) -> bool:
        if self.cur.kind == kind:
            self.i += 1
            return True
        return False

    def statements(self) -> tuple[list[Statement], set[str]]:
        stmts: list[Statement] = []
        natural: set[str] = set()
        while self.cur.kind != "eof":
            if self.accept("natural"):
                natural.add(self.take("name").text)
                while self.accept(","):
                    natural.add(self.take("name").text)
                self.take(";")
            elif self.cur.kind == "ni":
                self.take("ni")
                self.take("(")
                guard = self.concept()
                self.take(";")
                first = self.take("name").text
                self.take(",")
                second = self.take("name").text
                self.take(")")
                self.take(";")
                stmts.append(NonInterference(guard, first, second))
            else:
                lhs = self.concept()
                self.take("<=")
                rhs = self.concept()
                self.take(";")
                stmts.append(ConceptInclusion(lhs, rhs))
        return stmts, natural

    def concept(self) -> ConceptExpr:
        left = self.unary()
        while self.accept("&"):
            left = Conj(left, self.unary())
        return left

    def unary(self) -> ConceptExpr:
        t = self.cur
        if self.accept("top"):
            return TOP
        if t.kind == "name":
            self.i += 1
            return Name(t.text)
        if self.accept("some"):
            role = self.take("name").text
            self.take(".")
            return Exists(role, self.concept())
        if self.accept("btw"):
            self.take("(")
            a = self.concept()
            self.take(",")
            b = self.concept()
            self.take(")")
            return Between(a, b)
        if self.accept("("):
            c = self.concept()
            self.take(")")
            return c
        raise SyntaxProblem(f"expected a concept, found {t.text or 'end of input'!r}", t.line, t.col)


def parse_tbox(text: str) -> TBox:
    stmts, natural = _Parser(text).statements()
    tbox = TBox(tuple(stmts), frozenset(natural))
    check_naturalness(tbox)
    return tbox


def parse_concept(text: str) -> ConceptExpr:
    p = _Parser(text)
    c = p.concept()
    if p.cur.kind != "eof":
        raise SyntaxProblem(f"trailing input {p.cur.text!r}", p.cur.line, p.cur.col)
    return c


def render_concept(c: ConceptExpr) -> str:
    if isinstance(c, Top):
        return "top"
    if isinstance(c, Name):
        return c.name
    if isinstance(c, Exists):
        return f"some {c.role}. {render_concept(c.filler)}"
    if isinstance(c, Between):
        return f"btw({render_concept(c.left)}, {render_concept(c.right)})"
    if isinstance(c, Conj):
        left = render_concept(c.left)
        if isinstance(c.left, Exists):
            left = f"({left})"
        right = render_concept(c.right)
        if isinstance(c.right, (Conj, Exists)):
            right = f"({right})"
        return f"{left} & {right}"
    raise TypeError(f"not a concept: {c!r}")


def render_tbox(tbox: TBox) -> str:
    lines = []
    if tbox.natural_names:
        lines.append("natural " + ", ".join(sorted(tbox.natural_names)) + ";")
    for s in tbox.statements:
        lines.append(f"{s};")
    return "\n".join(lines) + ("\n" if lines else "")
