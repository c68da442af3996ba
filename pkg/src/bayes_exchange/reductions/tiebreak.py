"""Tie removal by a vanishing amount of extra information.

An agent EPS with a weakly informative signal is observed by everyone, and
every signal-less agent receives a symmetric signal weaker still. As long as
all of this extra evidence together moves a belief ratio by less than the
smallest margin any agent has at its significant time, actions at
significant times do not change, while exact ties disappear at every time.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

from ..core.engine import DEFAULT_CAP, Engine
from ..core.structure import significant_times
from ..core.types import Agent, Model, Network, SignalDistribution

EPS_ID = "EPS"


def tie_gap(net: Network, model=Model.BINARY, cap: int = DEFAULT_CAP,
            engine: Optional[Engine] = None) -> Optional[Fraction]:
    """Smallest ``max(r, 1/r)`` over belief ratios ``r`` at significant times.

    Taken over every agent and every world state of positive weight. Returns
    None when no agent has a finite, non-degenerate ratio. Raises ValueError
    when some agent is exactly tied at its significant time.
    """
    eng = engine or Engine(net, model, cap)
    times = significant_times(net)
    gap: Optional[Fraction] = None
    for a in net.agents:
        t = times[a.id]
        if t is None:
            continue
        for mu in eng.class_beliefs(a.id, t):
            if mu is None or mu in (0, 1):
                continue
            r = mu / (1 - mu)
            if r == 1:
                raise ValueError(f"agent {a.id!r} is exactly tied at its significant time {t}")
            m = max(r, 1 / r)
            if gap is None or m < gap:
                gap = m
    return gap


def eps_distribution(eps: Fraction) -> SignalDistribution:
    """``p_T = 1/2`` and signal-1 ratio ``1 + eps``."""
    return SignalDistribution.binary(Fraction(1, 2), Fraction(1, 2) / (1 + eps))


def micro_distribution(rho: Fraction) -> SignalDistribution:
    """Signal ratios ``rho`` and ``1/rho``."""
    return SignalDistribution.binary(rho / (1 + rho), 1 / (1 + rho))


def apply_eps_tiebreak(net: Network, eps, model=Model.BINARY, cap: int = DEFAULT_CAP,
                       eps_id: str = EPS_ID) -> Network:
    """Network with the tie-breaking agents added.

    ``eps`` must be small enough that ``(1 + eps) * rho**n`` stays below the
    tie gap, where ``n`` is the number of agents and ``rho = 1 + eps/(100 n)``.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    ids = [a.id for a in net.agents]
    if eps_id in ids:
        eps_id = next(f"{eps_id}{k}" for k in range(2, len(ids) + 3) if f"{eps_id}{k}" not in ids)
    n = len(ids)
    rho = 1 + eps / (100 * n)
    gap = tie_gap(net, model, cap)
    if gap is not None and (1 + eps) * rho ** n >= gap:
        raise ValueError(f"eps too large: perturbation {(1 + eps) * rho ** n} reaches the tie gap {gap}")
    micro = micro_distribution(rho)
    agents = [a if a.informative else Agent(a.id, micro, a.significant_time) for a in net.agents]
    agents.append(Agent(eps_id, eps_distribution(eps)))
    edges = list(net.edges) + [(u, eps_id) for u in ids]
    return Network(tuple(agents), tuple(edges), net.designated_observer)


def max_safe_eps(net: Network, model=Model.BINARY, cap: int = DEFAULT_CAP) -> Optional[Fraction]:
    """A power of two ``eps`` that satisfies the precondition (None if any works)."""
    gap = tie_gap(net, model, cap)
    if gap is None:
        return None
    n = len(net.agents)
    eps = Fraction(1)
    while (1 + eps) * (1 + eps / (100 * n)) ** n >= gap:
        eps /= 2
    return eps
