"""Domain types shared by the engine, the gadget builders and the compilers.

Probabilities are ``fractions.Fraction`` values throughout. Actions in the
binary model are Python booleans (``True`` is the state T); in the
revealed-belief model an action is the exact belief ratio ``mu / (1 - mu)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence, Union

Action = Union[bool, Fraction]


class Model(str, enum.Enum):
    BINARY = "binary_action"
    BELIEF = "revealed_belief"

    @classmethod
    def parse(cls, value: Union[str, "Model"]) -> "Model":
        if isinstance(value, Model):
            return value
        aliases = {"binary": cls.BINARY, "belief": cls.BELIEF}
        if value in aliases:
            return aliases[value]
        return cls(value)


class CapExceeded(RuntimeError):
    """Raised when an exhaustive computation would exceed its size cap."""


class InconsistentHistory(ValueError):
    """Raised when no world state reproduces an observation history."""


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("floating-point probabilities are not accepted")
    return Fraction(x)


@dataclass(frozen=True)
class SignalDistribution:
    probs_true: tuple[Fraction, ...]
    probs_false: tuple[Fraction, ...]

    def __post_init__(self):
        pt = tuple(as_fraction(p) for p in self.probs_true)
        pf = tuple(as_fraction(p) for p in self.probs_false)
        object.__setattr__(self, "probs_true", pt)
        object.__setattr__(self, "probs_false", pf)
        if len(pt) != len(pf) or len(pt) < 2:
            raise ValueError("both probability lists need the same length >= 2")
        for p in pt + pf:
            if p < 0 or p > 1:
                raise ValueError(f"probability {p} outside [0, 1]")
        if sum(pt) != 1 or sum(pf) != 1:
            raise ValueError("probabilities must sum to exactly 1")

    @classmethod
    def binary(cls, p_true, p_false) -> "SignalDistribution":
        """Distribution with ``P(S=1 | T) = p_true`` and ``P(S=1 | F) = p_false``."""
        pt, pf = as_fraction(p_true), as_fraction(p_false)
        return cls((1 - pt, pt), (1 - pf, pf))

    @property
    def alphabet_size(self) -> int:
        return len(self.probs_true)

    @property
    def p_true(self) -> Fraction:
        return self.probs_true[-1] if self.alphabet_size == 2 else None

    @property
    def p_false(self) -> Fraction:
        return self.probs_false[-1] if self.alphabet_size == 2 else None

    def ratio(self, s: int) -> Optional[Fraction]:
        """Likelihood ratio of value ``s``; ``None`` when ``P(s | F) = 0``."""
        if self.probs_false[s] == 0:
            return None
        return self.probs_true[s] / self.probs_false[s]

    def prob(self, s: int, theta: bool) -> Fraction:
        return self.probs_true[s] if theta else self.probs_false[s]

    def support(self) -> list[int]:
        """Values with positive probability under at least one state."""
        return [
            s for s in range(self.alphabet_size)
            if self.probs_true[s] > 0 or self.probs_false[s] > 0
        ]


@dataclass(frozen=True)
class Agent:
    id: str
    signal: Optional[SignalDistribution] = None
    significant_time: Optional[int] = None

    @property
    def informative(self) -> bool:
        return self.signal is not None


@dataclass(frozen=True)
class Network:
    """Directed graph of agents. An edge ``(u, v)`` means u observes v."""

    agents: tuple[Agent, ...]
    edges: tuple[tuple[str, str], ...] = ()
    designated_observer: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))

    @cached_property
    def index(self) -> dict[str, int]:
        idx: dict[str, int] = {}
        for i, a in enumerate(self.agents):
            if a.id in idx:
                raise ValueError(f"duplicate agent id {a.id!r}")
            idx[a.id] = i
        return idx

    @cached_property
    def by_id(self) -> dict[str, Agent]:
        return {a.id: a for a in self.agents}

    @cached_property
    def observed(self) -> dict[str, tuple[str, ...]]:
        """Out-neighbours (agents observed by each agent), in edge order."""
        out: dict[str, list[str]] = {a.id: [] for a in self.agents}
        for u, v in self.edges:
            if u not in out or v not in self.by_id:
                raise ValueError(f"edge {u}->{v} references an unknown agent")
            if v not in out[u]:
                out[u].append(v)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def observers(self) -> dict[str, tuple[str, ...]]:
        inc: dict[str, list[str]] = {a.id: [] for a in self.agents}
        for u, v in self.edges:
            if v in inc and u not in inc[v]:
                inc[v].append(u)
        return {k: tuple(v) for k, v in inc.items()}

    @cached_property
    def informative_ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.agents if a.informative)

    def agent(self, agent_id: str) -> Agent:
        return self.by_id[agent_id]

    def with_observer(self, observer: Optional[str]) -> "Network":
        return Network(self.agents, self.edges, observer)


def _freeze_signals(signals) -> tuple[tuple[str, int], ...]:
    if isinstance(signals, Mapping):
        items = signals.items()
    else:
        items = signals
    return tuple(sorted((str(k), int(v)) for k, v in items))


@dataclass(frozen=True)
class WorldState:
    theta: bool
    signals: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "theta", bool(self.theta))
        object.__setattr__(self, "signals", _freeze_signals(self.signals))

    def signal(self, agent_id: str) -> int:
        return dict(self.signals)[agent_id]

    def signal_map(self) -> dict[str, int]:
        return dict(self.signals)


@dataclass
class ActionTrace:
    model: Model
    horizon: int
    actions: dict[tuple[str, int], Action] = field(default_factory=dict)
    beliefs: dict[tuple[str, int], Fraction] = field(default_factory=dict)

    def action(self, agent_id: str, t: int) -> Action:
        return self.actions[(agent_id, t)]

    def belief(self, agent_id: str, t: int) -> Fraction:
        return self.beliefs[(agent_id, t)]


@dataclass
class ObservationHistory:
    observer_id: str
    entries: dict[tuple[str, int], Action] = field(default_factory=dict)
    own_signal: Optional[int] = None

    def validate(self, net: Network, time: int) -> None:
        nbrs = set(net.observed[self.observer_id])
        for (v, t) in self.entries:
            if v not in nbrs:
                raise ValueError(f"{v!r} is not observed by {self.observer_id!r}")
            if not 0 <= t < time:
                raise ValueError(f"entry time {t} not in [0, {time})")


def theta_str(theta: bool) -> str:
    return "T" if theta else "F"


def make_network(agents: Iterable[Agent], edges: Sequence[tuple[str, str]],
                 observer: Optional[str] = None) -> Network:
    return Network(tuple(agents), tuple(edges), observer)
