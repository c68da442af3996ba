"""Domain types and the exact inference engine."""

from fractions import Fraction as Rational

from .engine import (
    DEFAULT_CAP,
    Engine,
    enumerate_world_states,
    information_set,
    posterior,
    simulate,
)
from .structure import NetworkBuilder, significant_times, validate_structured
from .types import (
    Action,
    ActionTrace,
    Agent,
    CapExceeded,
    InconsistentHistory,
    Model,
    Network,
    ObservationHistory,
    SignalDistribution,
    WorldState,
)

__all__ = [
    "Action", "ActionTrace", "Agent", "CapExceeded", "DEFAULT_CAP", "Engine",
    "InconsistentHistory", "Model", "Network", "NetworkBuilder",
    "ObservationHistory", "Rational", "SignalDistribution", "WorldState",
    "enumerate_world_states", "information_set", "posterior",
    "significant_times", "simulate", "validate_structured",
]
