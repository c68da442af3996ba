"""Brute-force reference implementations used for differential testing.

Nothing here reuses the engine or the compilers: formulas are evaluated by
plain loops and the dynamics are recomputed from an explicit table of world
states, grouping states by each agent's full observation record every round.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .core.types import ActionTrace, CapExceeded, Model, Network, WorldState
from .reductions.formula import EXISTS, QBF, Formula


@dataclass
class OracleResult:
    kind: str
    value: Union[bool, int, ActionTrace]
    witness: Optional[tuple[bool, ...]] = None
    count: Optional[int] = None


def _clause_true(clause, bits: int) -> bool:
    for v, positive in clause:
        if bool((bits >> (v - 1)) & 1) == positive:
            return True
    return False


def _satisfies(formula: Formula, bits: int) -> bool:
    for clause in formula.clauses:
        if not _clause_true(clause, bits):
            return False
    return True


def _bits_to_tuple(bits: int, n: int) -> tuple[bool, ...]:
    return tuple(bool((bits >> i) & 1) for i in range(n))


def brute_sat(formula: Formula, cap: int = 24) -> OracleResult:
    n = formula.num_vars
    if n > cap:
        raise CapExceeded(f"{n} variables exceed the brute-force cap {cap}")
    count = 0
    witness = None
    for bits in range(1 << n):
        if _satisfies(formula, bits):
            count += 1
            if witness is None:
                witness = _bits_to_tuple(bits, n)
    return OracleResult("sat", count > 0, witness, count)


def count_2sat(formula: Formula, cap: int = 24) -> OracleResult:
    res = brute_sat(formula, cap)
    return OracleResult("count", res.count, res.witness, res.count)


def brute_tqbf(qbf: QBF, cap: int = 20) -> OracleResult:
    n = qbf.matrix.num_vars
    if n > cap:
        raise CapExceeded(f"{n} variables exceed the brute-force cap {cap}")
    blocks = list(qbf.blocks)

    def game(level: int, bits: int) -> bool:
        if level == len(blocks):
            return _satisfies(qbf.matrix, bits)
        quant, variables = blocks[level]
        for values in itertools.product((False, True), repeat=len(variables)):
            b = bits
            for v, val in zip(variables, values):
                if val:
                    b |= 1 << (v - 1)
            r = game(level + 1, b)
            if quant == EXISTS and r:
                return True
            if quant != EXISTS and not r:
                return False
        return quant != EXISTS

    return OracleResult("tqbf", game(0, 0))


def naive_reference_simulate(net: Network, omega: WorldState, horizon: int,
                             model=Model.BINARY, cap: int = 12) -> ActionTrace:
    """Trace of ``omega`` recomputed from first principles.

    Every agent's view of every world state at time t is its own signal plus
    the complete list of its neighbours' actions at times before t; states
    with equal views are pooled to form the belief.
    """
    model = Model.parse(model)
    informative = [a for a in net.agents if a.signal is not None]
    if len(informative) > cap:
        raise CapExceeded(f"{len(informative)} informative agents exceed the cap {cap}")
    names = [a.id for a in informative]
    states = []
    for theta in (True, False):
        for values in itertools.product(*(range(a.signal.alphabet_size) for a in informative)):
            w = Fraction(1, 2)
            for a, s in zip(informative, values):
                w *= a.signal.probs_true[s] if theta else a.signal.probs_false[s]
            if w:
                states.append((theta, dict(zip(names, values)), w))
    neighbours = defaultdict(list)
    for u, v in net.edges:
        if v not in neighbours[u]:
            neighbours[u].append(v)

    actions: dict[tuple[str, int], list] = {}
    beliefs: dict[tuple[str, int], list] = {}
    for t in range(horizon + 1):
        for a in net.agents:
            views = []
            for k, (theta, sig, w) in enumerate(states):
                record = tuple(
                    actions[(v, s)][k] for v in neighbours[a.id] for s in range(t)
                )
                views.append((sig.get(a.id), record))
            mass = defaultdict(lambda: [Fraction(0), Fraction(0)])
            for (theta, _, w), view in zip(states, views):
                mass[view][0 if theta else 1] += w
            row_a, row_b = [], []
            for view in views:
                wt, wf = mass[view]
                mu = wt / (wt + wf)
                row_b.append(mu)
                if model is Model.BINARY:
                    row_a.append(mu > Fraction(1, 2))
                else:
                    row_a.append(wt / wf)
            actions[(a.id, t)] = row_a
            beliefs[(a.id, t)] = row_b

    target = omega.signal_map()
    k = next(
        i for i, (theta, sig, _) in enumerate(states)
        if theta == omega.theta and sig == target
    )
    trace = ActionTrace(model, horizon)
    for key in actions:
        trace.actions[key] = actions[key][k]
        trace.beliefs[key] = beliefs[key][k]
    return trace
