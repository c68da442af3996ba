"""Shared builders for the test modules."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

import numpy as np

from bayes_exchange.core import Agent, CapExceeded, Engine, Model, Network, significant_times
from bayes_exchange.gadgets import (
    GREATER,
    RB_DISTRIBUTION,
    SeparatorChoice,
    assemble,
    build_threshold,
    host_network,
)
from bayes_exchange.reductions import EXISTS, FORALL, QBF, Formula

# Acceptance results, filled by test_acceptance and printed at the end of the run.
ACCEPTANCE: dict[int, tuple[bool, str]] = {}

RANDOM_PROBS = [Fraction(k, 8) for k in range(1, 8)]


def fig1_network(R=Fraction(1, 9), k: int = 3):
    """Threshold gadget on ``k`` targets of the 3/4, 1/4 distribution, with OBS."""
    targets = [(f"v{j}", RB_DISTRIBUTION) for j in range(1, k + 1)]
    g = build_threshold(targets, SeparatorChoice(R, GREATER), name="thr")
    net, expected = assemble(host_network(targets), [g])
    return net, expected, g


def random_binary_distribution(rng: random.Random):
    from bayes_exchange.core import SignalDistribution

    pt, pf = rng.sample(RANDOM_PROBS, 2)
    return SignalDistribution.binary(pt, pf)


def random_network(rng: random.Random, max_informative: int = 8, max_silent: int = 4,
                   edge_prob: float = 0.35, dag: bool = False) -> Network:
    """Random network; without ``dag`` it may contain cycles and observing informative agents."""
    n_inf = rng.randint(1, max_informative)
    n_sil = rng.randint(0, max_silent)
    agents = [Agent(f"s{i}", random_binary_distribution(rng)) for i in range(n_inf)]
    agents += [Agent(f"u{i}") for i in range(n_sil)]
    ids = [a.id for a in agents]
    edges = []
    for i, u in enumerate(ids):
        for j, v in enumerate(ids):
            if u == v:
                continue
            if dag and j >= i:
                continue
            if rng.random() < edge_prob:
                edges.append((u, v))
    return Network(tuple(agents), tuple(edges))


def random_world_state(rng: random.Random, net: Network):
    from bayes_exchange.core import WorldState

    return WorldState(rng.random() < 0.5, {a: rng.randint(0, 1) for a in net.informative_ids})


def three_literal_clauses(n: int = 3):
    """Every clause with three literals on distinct variables among 1..n."""
    out = []
    for vs in itertools.combinations(range(1, n + 1), 3):
        for signs in itertools.product((True, False), repeat=3):
            out.append(tuple(zip(vs, signs)))
    return out


def short_clauses(n: int, widths=(1, 2, 3)):
    out = []
    for w in widths:
        for vs in itertools.combinations(range(1, n + 1), w):
            for signs in itertools.product((True, False), repeat=w):
                out.append(tuple(zip(vs, signs)))
    return out


def formulas_upto(n: int, clauses, max_m: int, ordered: bool = False):
    for m in range(max_m + 1):
        gen = itertools.product(clauses, repeat=m) if ordered else \
            itertools.combinations_with_replacement(clauses, m)
        for cs in gen:
            yield Formula(n, cs)


def two_block_qbfs(n: int, max_m: int):
    """All forall-exists QBFs over ``n`` variables with clauses of width 1..3."""
    clauses = short_clauses(n, (1, 2, 3))
    out = []
    for split in range(1, n):
        for outer in itertools.combinations(range(1, n + 1), split):
            inner = tuple(v for v in range(1, n + 1) if v not in outer)
            blocks = ((FORALL, outer), (EXISTS, inner))
            for phi in formulas_upto(n, clauses, max_m):
                out.append(QBF(blocks, phi))
    return out


def significant_time_violations(net: Network, model=Model.BINARY, cap: int = 1 << 20,
                                extra: int = 2):
    """Check beliefs are 1/2 before each agent's significant time and frozen after.

    Returns ``(violations, checked_agents, skipped_agents)``; agents whose
    cone exceeds ``cap`` are skipped.
    """
    eng = Engine(net, model, cap)
    times = significant_times(net)
    violations, checked, skipped = [], 0, 0
    half = Fraction(1, 2)
    for a in net.agents:
        s = times[a.id]
        if s is None:
            continue
        try:
            eng.cone(a.id)
        except CapExceeded:
            skipped += 1
            continue
        checked += 1
        for t in range(s):
            beliefs = eng.class_beliefs(a.id, t)
            if any(b != half for b in beliefs if b is not None):
                violations.append(f"{a.id} moved before its significant time {s} (t={t})")
        labels_s, _ = eng.labels(a.id, s)
        ref = np.array(eng.class_beliefs(a.id, s), dtype=object)[labels_s]
        for t in range(s + 1, s + extra + 1):
            labels_t, _ = eng.labels(a.id, t)
            cur = np.array(eng.class_beliefs(a.id, t), dtype=object)[labels_t]
            if not (cur == ref).all():
                violations.append(f"{a.id} changed belief after its significant time {s} (t={t})")
    return violations, checked, skipped
