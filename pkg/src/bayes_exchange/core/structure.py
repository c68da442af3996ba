"""Structured-network checks and the builder that equalizes significant times.

In a structured network every informative agent is a sink, every signal-less
agent observes only agents that all become informed at the same time, and
hence learns at a single step: one more than the agents it observes. The
builder restores that shape by routing long edges through relay agents that
repeat what they see one step later.
"""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Optional

from .types import Agent, Network, SignalDistribution


def _topological_order(ids: list[str], observed: dict[str, list[str]]) -> Optional[list[str]]:
    """Agents ordered so that observed agents come first; None on a cycle."""
    pending = {u: len(set(observed[u])) for u in ids}
    observers: dict[str, list[str]] = {u: [] for u in ids}
    for u in ids:
        for v in set(observed[u]):
            observers[v].append(u)
    ready = [u for u in ids if pending[u] == 0]
    order = []
    while ready:
        v = ready.pop()
        order.append(v)
        for u in observers[v]:
            pending[u] -= 1
            if pending[u] == 0:
                ready.append(u)
    return order if len(order) == len(ids) else None


def significant_times(net: Network) -> dict[str, Optional[int]]:
    """Computed significant time of every agent of an acyclic network.

    Informative agents learn at time 0; a signal-less agent one step after the
    latest agent it observes; a signal-less agent observing nobody never
    learns (None).
    """
    ids = [a.id for a in net.agents]
    observed = {u: list(net.observed[u]) for u in ids}
    order = _topological_order(ids, observed)
    if order is None:
        raise ValueError("network has a cycle")
    times: dict[str, Optional[int]] = {}
    for u in order:
        if net.agent(u).informative:
            times[u] = 0
        else:
            known = [times[v] for v in observed[u] if times[v] is not None]
            times[u] = 1 + max(known) if known else None
    return times


def validate_structured(net: Network) -> list[str]:
    """Violations of the structured-network invariants (empty when valid)."""
    report: list[str] = []
    ids = [a.id for a in net.agents]
    counts = Counter(ids)
    for a, c in counts.items():
        if c > 1:
            report.append(f"duplicate agent: {a!r}")
    known = set(ids)
    seen_edges = set()
    observed: dict[str, list[str]] = {u: [] for u in known}
    indeg = Counter()
    for u, v in net.edges:
        if u not in known or v not in known:
            report.append(f"dangling edge: {u!r} -> {v!r}")
            continue
        if u == v:
            report.append(f"self-loop: {u!r}")
            continue
        if (u, v) in seen_edges:
            report.append(f"duplicate edge: {u!r} -> {v!r}")
            continue
        seen_edges.add((u, v))
        observed[u].append(v)
        indeg[v] += 1
    if net.designated_observer is not None and net.designated_observer not in known:
        report.append(f"dangling observer: {net.designated_observer!r}")

    agents = {}
    for a in net.agents:
        agents.setdefault(a.id, a)
    for u, a in agents.items():
        if a.informative and observed[u]:
            report.append(f"informative agent with out-edges: {u!r}")
        if not a.informative and not observed[u]:
            report.append(f"signal-less agent observes nobody: {u!r}")
        if a.informative and a.significant_time not in (None, 0):
            report.append(f"informative agent with significant time {a.significant_time}: {u!r}")
    if net.designated_observer is not None:
        for u in agents:
            if indeg[u] == 0 and u != net.designated_observer:
                report.append(f"unobserved agent other than the observer: {u!r}")

    order = _topological_order(list(agents), observed)
    if order is None:
        report.append("cycle")
        return report
    times: dict[str, Optional[int]] = {}
    for u in order:
        a = agents[u]
        if a.informative:
            times[u] = 0
            continue
        below = {times[v] for v in observed[u]}
        if None in below:
            times[u] = None
            report.append(f"observes an agent without significant time: {u!r}")
            continue
        if len(below) > 1:
            report.append(
                f"non-unique path length: {u!r} observes agents with significant times {sorted(below)}"
            )
        times[u] = 1 + max(below) if below else None
        if a.significant_time is not None and times[u] is not None and a.significant_time != times[u]:
            report.append(
                f"significant time mismatch: {u!r} declares {a.significant_time}, computed {times[u]}"
            )
    return report


class NetworkBuilder:
    """Incrementally assembled network; ``build`` inserts relay chains.

    A relay ``"<agent>~<level>"`` is a signal-less agent whose significant time
    is ``level``; it observes the previous relay of the chain (or the agent
    itself) and therefore repeats the agent's action one step later.
    """

    RELAY_SEP = "~"

    def __init__(self):
        self._agents: dict[str, Optional[SignalDistribution]] = {}
        self._edges: list[tuple[str, str]] = []
        self._edge_set: set[tuple[str, str]] = set()

    def __contains__(self, agent_id: str) -> bool:
        return agent_id in self._agents

    @property
    def agent_ids(self) -> list[str]:
        return list(self._agents)

    def add_agent(self, agent_id: str, signal: Optional[SignalDistribution] = None) -> str:
        if agent_id in self._agents:
            raise ValueError(f"duplicate agent id {agent_id!r}")
        if self.RELAY_SEP in agent_id:
            raise ValueError(f"agent ids may not contain {self.RELAY_SEP!r}")
        self._agents[agent_id] = signal
        return agent_id

    def observe(self, observer: str, observed: str) -> None:
        if (observer, observed) not in self._edge_set:
            self._edge_set.add((observer, observed))
            self._edges.append((observer, observed))

    def observes(self, observer: str) -> list[str]:
        return [v for u, v in self._edges if u == observer]

    def merge(self, fragment: Network) -> None:
        """Add a fragment's agents and edges (edges may point into the host)."""
        for a in fragment.agents:
            self.add_agent(a.id, a.signal)
        for u, v in fragment.edges:
            self.observe(u, v)

    def raw_network(self, observer: Optional[str] = None) -> Network:
        for u, v in self._edges:
            if u not in self._agents or v not in self._agents:
                raise ValueError(f"edge {u}->{v} references an unknown agent")
        return Network(tuple(Agent(a, s) for a, s in self._agents.items()),
                       tuple(self._edges), observer)

    def build(self, observer: Optional[str] = None) -> Network:
        """Structured network with relays and declared significant times."""
        raw = self.raw_network(observer)
        times = significant_times(raw)
        agents: list[Agent] = []
        edges: list[tuple[str, str]] = []
        relays: dict[tuple[str, int], str] = {}
        relay_agents: list[Agent] = []
        relay_edges: list[tuple[str, str]] = []

        def relay(v: str, level: int) -> str:
            if level == times[v]:
                return v
            key = (v, level)
            if key not in relays:
                rid = f"{v}{self.RELAY_SEP}{level}"
                relays[key] = rid
                below = relay(v, level - 1)
                relay_agents.append(Agent(rid, None, level))
                relay_edges.append((rid, below))
            return relays[key]

        for a, s in self._agents.items():
            agents.append(Agent(a, s, times[a]))
        for u, v in self._edges:
            if times[u] is None or times[v] is None:
                edges.append((u, v))
                continue
            edges.append((u, relay(v, times[u] - 1)))
        return Network(tuple(agents + relay_agents), tuple(edges + relay_edges), observer)


def relay_source(agent_id: str) -> str:
    """The agent a relay repeats (identity for ordinary agents)."""
    return agent_id.split(NetworkBuilder.RELAY_SEP, 1)[0]


def is_relay(agent_id: str) -> bool:
    return NetworkBuilder.RELAY_SEP in agent_id


def observed_sources(net: Network, agent: str) -> list[str]:
    return [relay_source(v) for v in net.observed[agent]]


def ids_of(agents: Iterable[Agent]) -> list[str]:
    return [a.id for a in agents]
