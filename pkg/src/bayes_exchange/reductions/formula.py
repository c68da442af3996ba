"""CNF formulas and quantified Boolean formulas.

Variables are numbered from 1. A literal is ``(var, positive)``. An
assignment is a tuple of booleans, entry ``i`` giving variable ``i + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

Literal = tuple[int, bool]
Clause = tuple[Literal, ...]

EXISTS = "exists"
FORALL = "forall"


@dataclass(frozen=True)
class Formula:
    num_vars: int
    clauses: tuple[Clause, ...] = ()

    def __post_init__(self):
        clauses = tuple(tuple((int(v), bool(p)) for v, p in c) for c in self.clauses)
        object.__setattr__(self, "clauses", clauses)
        if self.num_vars < 0:
            raise ValueError("negative variable count")
        for c in clauses:
            if not c:
                raise ValueError("empty clause")
            for v, _ in c:
                if not 1 <= v <= self.num_vars:
                    raise ValueError(f"literal variable {v} out of range 1..{self.num_vars}")

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def has_distinct_variables(self) -> bool:
        return all(len({v for v, _ in c}) == len(c) for c in self.clauses)

    def check_width(self, low: int, high: int) -> None:
        """Require every clause to have low..high literals on distinct variables."""
        for c in self.clauses:
            if not low <= len(c) <= high:
                raise ValueError(f"clause {c} has {len(c)} literals, expected {low}..{high}")
            if len({v for v, _ in c}) != len(c):
                raise ValueError(f"clause {c} repeats a variable")

    def satisfied_by(self, assignment: Sequence[bool]) -> bool:
        return all(any(assignment[v - 1] == p for v, p in c) for c in self.clauses)


def assignments(n: int) -> Iterator[tuple[bool, ...]]:
    """All 2**n assignments; variable 1 is the least significant bit."""
    for mask in range(1 << n):
        yield tuple(bool((mask >> i) & 1) for i in range(n))


@dataclass(frozen=True)
class QBF:
    """Prenex QBF; ``blocks`` are listed outermost first."""

    blocks: tuple[tuple[str, tuple[int, ...]], ...]
    matrix: Formula

    def __post_init__(self):
        blocks = tuple((q, tuple(int(v) for v in vs)) for q, vs in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if not blocks:
            raise ValueError("a QBF needs at least one quantifier block")
        for q, vs in blocks:
            if q not in (EXISTS, FORALL):
                raise ValueError(f"unknown quantifier {q!r}")
            if not vs:
                raise ValueError("empty quantifier block")
        for (q1, _), (q2, _) in zip(blocks, blocks[1:]):
            if q1 == q2:
                raise ValueError("quantifier blocks must alternate")
        if blocks[-1][0] != EXISTS:
            raise ValueError("innermost quantifier must be existential")
        flat = [v for _, vs in blocks for v in vs]
        if sorted(flat) != list(range(1, self.matrix.num_vars + 1)):
            raise ValueError("blocks must quantify every variable exactly once")

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    def block(self, i: int) -> tuple[str, tuple[int, ...]]:
        """Block ``i`` counted from the innermost (``i = 1``) outwards."""
        return self.blocks[len(self.blocks) - i]
