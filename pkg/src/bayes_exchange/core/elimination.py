"""Variable elimination over exact integer factors.

Used to sum configuration weights under observation masks without walking
the full configuration space of the observer. Tables are numpy object arrays
holding Python ints, so every sum is exact. The state theta is treated as an
extra binary variable (index ``THETA``, 0 = F, 1 = T) that is never summed out.
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

import numpy as np

from .types import CapExceeded

THETA = -1


class Factor:
    __slots__ = ("scope", "table")

    def __init__(self, scope: Sequence[int], table: np.ndarray):
        self.scope = tuple(scope)
        self.table = table
        assert table.ndim == len(self.scope)

    def value(self, assignment: dict[int, int]):
        return self.table[tuple(assignment[v] for v in self.scope)]


def mask_factor(cone, mask: np.ndarray) -> Factor:
    """Factor for a boolean mask over a cone (digit 0 fastest)."""
    shape = tuple(reversed(cone.radices))
    table = mask.reshape(shape).astype(object) if shape else np.array(mask[0], dtype=object).reshape(())
    return Factor(tuple(reversed(cone.members)), table)


def weight_factor(space, i: int, unit: bool = False) -> Factor:
    if unit:
        table = np.array([[1] * space.radix(i)] * 2, dtype=object)
    else:
        table = np.array([space.num_false[i], space.num_true[i]], dtype=object)
    return Factor((THETA, i), table)


def _radix(space, v: int) -> int:
    return 2 if v == THETA else space.radix(v)


def multiply(space, factors: Sequence[Factor], cap: Optional[int] = None) -> Factor:
    scope: list[int] = []
    for f in factors:
        for v in f.scope:
            if v not in scope:
                scope.append(v)
    size = 1
    for v in scope:
        size *= _radix(space, v)
    if cap is not None and size > cap:
        raise CapExceeded(f"intermediate factor of {size} entries exceeds cap {cap}")
    pos = {v: j for j, v in enumerate(scope)}
    result = None
    for f in factors:
        order = np.argsort([pos[v] for v in f.scope])
        t = f.table.transpose(order) if f.scope else f.table
        present = set(f.scope)
        shape = [_radix(space, v) if v in present else 1 for v in scope]
        t = t.reshape(shape)
        result = t if result is None else result * t
    if result is None:
        result = np.array(1, dtype=object)
    return Factor(scope, result)


def sum_out(f: Factor, v: int) -> Factor:
    j = f.scope.index(v)
    table = f.table.sum(axis=j)
    if not isinstance(table, np.ndarray):
        table = np.array(table, dtype=object)
    return Factor(f.scope[:j] + f.scope[j + 1:], table)


def eliminate(space, factors: Iterable[Factor], keep: Iterable[int] = (),
              cap: Optional[int] = None) -> Factor:
    """Sum out every variable except ``keep`` and theta (greedy min-size order)."""
    factors = list(factors)
    keep = set(keep) | {THETA}
    pending = {v for f in factors for v in f.scope} - keep
    while pending:
        best, best_size = None, None
        for v in pending:
            union = set()
            for f in factors:
                if v in f.scope:
                    union.update(f.scope)
            size = 1
            for u in union:
                size *= _radix(space, u)
            if best_size is None or size < best_size or (size == best_size and v < best):
                best, best_size = v, size
        touching = [f for f in factors if best in f.scope]
        rest = [f for f in factors if best not in f.scope]
        factors = rest + [sum_out(multiply(space, touching, cap), best)]
        pending.discard(best)
    return multiply(space, factors, cap)


def masked_weights(space, masks, own: Optional[tuple[int, int]] = None,
                   cap: Optional[int] = None) -> tuple[int, int]:
    """Scaled (W_T, W_F) summed over configurations satisfying all masks.

    ``masks`` is a list of ``(cone, bool array)``; ``own`` optionally pins one
    position to a digit. Positions outside every mask contribute the same
    factor under both states and are left out.
    """
    factors = [mask_factor(c, m) for c, m in masks]
    variables = {v for f in factors for v in f.scope}
    if own is not None:
        i, d = own
        pin = np.zeros(space.radix(i), dtype=object)
        pin[d] = 1
        factors.append(Factor((i,), pin))
        variables.add(i)
    factors += [weight_factor(space, i) for i in sorted(variables)]
    result = eliminate(space, factors, cap=cap)
    if result.scope == (THETA,):
        wf, wt = result.table.tolist()
    else:
        wf = wt = int(result.table[()]) if result.table.ndim == 0 else None
    return int(wt), int(wf)
