"""Compiled instances: network, designated observer, query time, history."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from ..core.structure import NetworkBuilder, relay_source, significant_times
from ..core.types import Action, Model, Network, ObservationHistory
from ..gadgets import GadgetInstance, designated_history


@dataclass
class CompiledInstance:
    network: Network
    observer_id: str
    query_time: int
    expected_history: ObservationHistory
    provenance: dict[str, tuple[str, str]] = field(default_factory=dict)
    model: Model = Model.BINARY
    metadata: dict[str, str] = field(default_factory=dict)

    def distributions(self):
        """Distinct signal distributions used by informative agents."""
        seen = []
        for a in self.network.agents:
            if a.signal is not None and a.signal not in seen:
                seen.append(a.signal)
        return seen

    def min_probability(self) -> Fraction:
        return min(p for d in self.distributions() for p in d.probs_true + d.probs_false if p > 0)

    def agent_count(self) -> int:
        return len(self.network.agents)

    def edge_count(self) -> int:
        return len(self.network.edges)


class Assembly:
    """Accumulates host agents and gadgets and tracks provenance."""

    def __init__(self):
        self.builder = NetworkBuilder()
        self.provenance: dict[str, tuple[str, str]] = {}
        self.expected: dict[str, Action] = {}

    def agent(self, agent_id: str, signal=None, kind: str = "agent", source: str = "") -> str:
        self.builder.add_agent(agent_id, signal)
        self.provenance[agent_id] = (kind, source)
        return agent_id

    def gadget(self, g: GadgetInstance, source: str = "") -> GadgetInstance:
        self.builder.merge(g.sub_network)
        for a in g.sub_network.agents:
            self.provenance[a.id] = (g.kind, source)
        self.expected.update(g.expected_actions)
        return g

    def observe(self, observer: str, observed) -> None:
        for v in ([observed] if isinstance(observed, str) else observed):
            self.builder.observe(observer, v)

    def finish(self, observer: str, model=Model.BINARY, metadata: Optional[dict] = None) -> CompiledInstance:
        net = self.builder.build(observer)
        times = significant_times(net)
        hist, query = designated_history(net, observer, self.expected, model, times)
        prov = dict(self.provenance)
        for a in net.agents:
            if a.id not in prov:
                prov[a.id] = ("relay", relay_source(a.id))
        return CompiledInstance(net, observer, query, hist, prov, Model.parse(model),
                                {k: str(v) for k, v in (metadata or {}).items()})
