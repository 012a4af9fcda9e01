"""A small DPLL solver with two watched literals.

Literals are non-zero ints in DIMACS style. By default the solver
backtracks chronologically; ``learn=True`` switches to first-UIP clause
learning with backjumping. Either way it branches on variables in a fixed
order (false first) and can be solved repeatedly under different assumption
sets, which is what the feature reasoner needs when it asks many witness
questions about one constraint set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence


@dataclass
class SatProblem:
    num_vars: int = 0
    clauses: list[tuple[int, ...]] = field(default_factory=list)
    labels: dict[int, Hashable] = field(default_factory=dict)
    index: dict[Hashable, int] = field(default_factory=dict)

    def var(self, label: Hashable = None) -> int:
        """Index of the variable named ``label``, allocating it on first use."""
        if label is not None and label in self.index:
            return self.index[label]
        self.num_vars += 1
        v = self.num_vars
        if label is not None:
            self.index[label] = v
            self.labels[v] = label
        return v

    def add(self, *lits: int) -> None:
        self.clauses.append(tuple(lits))

    def implies(self, premises: Iterable[int], conclusion: int | None) -> None:
        """Clause for ``p1 & ... & pn -> conclusion`` (``None`` for falsity)."""
        lits = [-p for p in premises]
        if conclusion is not None:
            lits.append(conclusion)
        self.add(*lits)

    def to_dimacs(self, comments: bool = True) -> str:
        lines = []
        if comments:
            for v in sorted(self.labels):
                lines.append(f"c {v} {self.labels[v]}")
        lines.append(f"p cnf {self.num_vars} {len(self.clauses)}")
        lines.extend(" ".join(map(str, c)) + " 0" for c in self.clauses)
        return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> tuple[int, list[tuple[int, ...]]]:
    """Variable count and clauses of a DIMACS CNF document."""
    num_vars = None
    clauses: list[tuple[int, ...]] = []
    cur: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"line {lineno}: bad problem line {line!r}")
            num_vars = int(parts[2])
            continue
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise ValueError(f"line {lineno}: not a literal: {tok!r}") from None
            if lit == 0:
                clauses.append(tuple(cur))
                cur = []
            else:
                cur.append(lit)
    if cur:
        clauses.append(tuple(cur))
    if num_vars is None:
        num_vars = max((abs(l) for c in clauses for l in c), default=0)
    for c in clauses:
        for l in c:
            if abs(l) > num_vars:
                raise ValueError(f"literal {l} exceeds declared variable count {num_vars}")
    return num_vars, clauses


class Solver:
    """DPLL over a fixed clause set, solvable repeatedly under assumptions.

    With ``learn=True`` conflicts are analysed to a first-UIP clause and the
    search backjumps; learnt clauses are dropped again when :meth:`solve`
    returns, because they may depend on that call's assumptions.
    """

    def __init__(self, problem: SatProblem | None = None, *, num_vars: int = 0,
                 clauses: Iterable[Sequence[int]] = (), order: Sequence[int] | None = None,
                 learn: bool = False):
        if problem is not None:
            num_vars, clauses = problem.num_vars, problem.clauses
        self.n = num_vars
        self.learn = learn
        self.value = [0] * (num_vars + 1)
        self.level = [0] * (num_vars + 1)
        self.reason = [-1] * (num_vars + 1)
        self.watches: list[list[int]] = [[] for _ in range(2 * num_vars + 2)]
        self.clauses: list[list[int]] = []
        self.units: list[int] = []
        self.trivially_unsat = False
        for c in clauses:
            lits = list(dict.fromkeys(c))
            if any(-l in lits for l in lits):
                continue
            if not lits:
                self.trivially_unsat = True
            elif len(lits) == 1:
                self.units.append(lits[0])
            else:
                self._attach(lits)
        self.base = len(self.clauses)
        self.order = list(order) if order is not None else list(range(1, num_vars + 1))
        seen = set(self.order)
        self.order += [v for v in range(1, num_vars + 1) if v not in seen]
        self.trail: list[int] = []
        self.qhead = 0
        self.decisions = 0
        self.propagations = 0
        self.conflicts = 0

    @staticmethod
    def _slot(lit: int) -> int:
        return 2 * lit if lit > 0 else -2 * lit + 1

    def _attach(self, lits: list[int]) -> int:
        ci = len(self.clauses)
        self.clauses.append(lits)
        self.watches[self._slot(lits[0])].append(ci)
        self.watches[self._slot(lits[1])].append(ci)
        return ci

    def _val(self, lit: int) -> int:
        v = self.value[abs(lit)]
        return v if lit > 0 else -v

    def _assign(self, lit: int, lvl: int, reason: int = -1) -> bool:
        cur = self._val(lit)
        if cur:
            return cur == 1
        v = abs(lit)
        self.value[v] = 1 if lit > 0 else -1
        self.level[v] = lvl
        self.reason[v] = reason
        self.trail.append(lit)
        return True

    def _propagate(self, lvl: int) -> int:
        """Unit propagation; index of a falsified clause, or -1."""
        value, clauses, watches = self.value, self.clauses, self.watches
        while self.qhead < len(self.trail):
            lit = self.trail[self.qhead]
            self.qhead += 1
            self.propagations += 1
            false_lit = -lit
            ws = watches[self._slot(false_lit)]
            i = j = 0
            n = len(ws)
            while i < n:
                ci = ws[i]
                c = clauses[ci]
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                first = c[0]
                fv = value[abs(first)]
                if (fv if first > 0 else -fv) == 1:
                    ws[j] = ci
                    i += 1
                    j += 1
                    continue
                moved = False
                for k in range(2, len(c)):
                    lk = c[k]
                    vk = value[abs(lk)]
                    if (vk if lk > 0 else -vk) != -1:
                        c[1], c[k] = lk, c[1]
                        watches[self._slot(lk)].append(ci)
                        moved = True
                        break
                i += 1
                if moved:
                    continue
                ws[j] = ci
                j += 1
                if (fv if first > 0 else -fv) == -1:
                    while i < n:
                        ws[j] = ws[i]
                        i += 1
                        j += 1
                    del ws[j:]
                    return ci
                self._assign(first, lvl, ci)
            del ws[j:]
        return -1

    def _undo_to(self, size: int) -> None:
        while len(self.trail) > size:
            lit = self.trail.pop()
            self.value[abs(lit)] = 0
        self.qhead = min(self.qhead, size)

    def _reset(self) -> None:
        self._undo_to(0)
        self.qhead = 0
        if len(self.clauses) > self.base:
            del self.clauses[self.base:]
            for ws in self.watches:
                ws[:] = [ci for ci in ws if ci < self.base]

    def _start(self, assumptions: Iterable[int]) -> bool:
        self._reset()
        if self.trivially_unsat:
            return False
        for lit in self.units:
            if not self._assign(lit, 0):
                return False
        if self._propagate(0) >= 0:
            return False
        for lit in assumptions:
            if not self._assign(lit, 0) or self._propagate(0) >= 0:
                return False
        return True

    def _model(self) -> dict[int, bool]:
        return {v: self.value[v] == 1 for v in range(1, self.n + 1)}

    def solve(self, assumptions: Iterable[int] = ()) -> dict[int, bool] | None:
        """A satisfying assignment consistent with ``assumptions``, or ``None``."""
        try:
            if not self._start(assumptions):
                return None
            return self._search_learning() if self.learn else self._search()
        finally:
            self._reset()

    def _next_var(self, pos: int) -> int:
        order, value = self.order, self.value
        while pos < len(order) and value[order[pos]] != 0:
            pos += 1
        return pos

    def _search(self) -> dict[int, bool] | None:
        # stack of (trail size before decision, decision literal, already flipped)
        stack: list[tuple[int, int, bool]] = []
        pos = 0
        while True:
            pos = self._next_var(pos)
            if pos == len(self.order):
                return self._model()
            v = self.order[pos]
            self.decisions += 1
            stack.append((len(self.trail), -v, False))
            self._assign(-v, len(stack))
            while self._propagate(len(stack)) >= 0:
                self.conflicts += 1
                while stack and stack[-1][2]:
                    stack.pop()
                if not stack:
                    return None
                size, lit, _ = stack.pop()
                self._undo_to(size)
                stack.append((size, -lit, True))
                self._assign(-lit, len(stack))
                pos = 0

    def _search_learning(self) -> dict[int, bool] | None:
        marks: list[int] = []  # trail size at the start of each decision level
        pos = 0
        while True:
            conflict = self._propagate(len(marks))
            if conflict >= 0:
                self.conflicts += 1
                if not marks:
                    return None
                learnt, back = self._analyse(conflict, len(marks))
                self._undo_to(marks[back] if back < len(marks) else len(self.trail))
                del marks[back:]
                if len(learnt) == 1:
                    self._assign(learnt[0], back)
                else:
                    ci = self._attach(learnt)
                    self._assign(learnt[0], back, ci)
                pos = 0
                continue
            pos = self._next_var(pos)
            if pos == len(self.order):
                return self._model()
            self.decisions += 1
            marks.append(len(self.trail))
            self._assign(-self.order[pos], len(marks))

    def _analyse(self, conflict: int, cur: int) -> tuple[list[int], int]:
        seen = set()
        learnt: list[int] = []
        pending = 0
        idx = len(self.trail) - 1
        clause = self.clauses[conflict]
        p = 0
        while True:
            for q in clause:
                if q == p:
                    continue
                v = abs(q)
                if v in seen or self.level[v] == 0:
                    continue
                seen.add(v)
                if self.level[v] == cur:
                    pending += 1
                else:
                    learnt.append(q)
            while abs(self.trail[idx]) not in seen:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            pending -= 1
            if pending == 0:
                break
            clause = self.clauses[self.reason[abs(p)]]
        learnt.insert(0, -p)
        if len(learnt) == 1:
            return learnt, 0
        hi = max(range(1, len(learnt)), key=lambda k: self.level[abs(learnt[k])])
        learnt[1], learnt[hi] = learnt[hi], learnt[1]
        return learnt, self.level[abs(learnt[1])]


def dpll_solve(p: SatProblem, assumptions: Iterable[int] = (), learn: bool = False) -> dict[int, bool] | None:
    return Solver(p, learn=learn).solve(assumptions)


def brute_force(num_vars: int, clauses: Sequence[Sequence[int]]) -> dict[int, bool] | None:
    """Truth-table search; the test oracle for :class:`Solver`."""
    for bits in range(1 << num_vars):
        val = {v: bool(bits >> (v - 1) & 1) for v in range(1, num_vars + 1)}
        if all(any(val[abs(l)] == (l > 0) for l in c) for c in clauses):
            return val
    return None
