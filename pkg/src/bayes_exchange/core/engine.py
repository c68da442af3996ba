"""Exact knowledge-refinement engine for both exchange models.

Every agent's actions depend only on the private signals of the informative
agents reachable from it (its *cone*), so each agent keeps its partition over
the signal configurations of its own cone. The state theta is never observed,
so partitions live on configurations and both states are weighed inside each
class. Weights are exact integers: probabilities of an agent are scaled by a
common denominator, and the scale cancels in every belief.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from . import kernels
from .types import (
    ActionTrace,
    CapExceeded,
    InconsistentHistory,
    Model,
    Network,
    ObservationHistory,
    WorldState,
)

DEFAULT_CAP = 1 << 24


class _Undefined:
    """Action of a class whose configurations all have zero weight."""

    def __repr__(self):
        return "UNDEFINED"


UNDEFINED = _Undefined()


def _lcm_denominators(values: Iterable[Fraction]) -> int:
    d = 1
    for v in values:
        d = d * v.denominator // math.gcd(d, v.denominator)
    return d


class SignalSpace:
    """Mixed-radix encoding of the informative agents' supported signal values."""

    def __init__(self, net: Network):
        self.net = net
        self.ids: list[str] = list(net.informative_ids)
        self.pos = {a: i for i, a in enumerate(self.ids)}
        self.values: list[list[int]] = []
        self.num_true: list[list[int]] = []
        self.num_false: list[list[int]] = []
        self.denoms: list[int] = []
        for a in self.ids:
            dist = net.agent(a).signal
            vals = dist.support()
            probs = [dist.probs_true[s] for s in vals] + [dist.probs_false[s] for s in vals]
            d = _lcm_denominators(probs)
            self.values.append(vals)
            self.num_true.append([int(dist.probs_true[s] * d) for s in vals])
            self.num_false.append([int(dist.probs_false[s] * d) for s in vals])
            self.denoms.append(d)

    def radix(self, i: int) -> int:
        return len(self.values[i])

    def digit(self, i: int, value: int) -> int:
        try:
            return self.values[i].index(value)
        except ValueError:
            raise ValueError(
                f"signal {value} of {self.ids[i]!r} has zero probability"
            ) from None


class Cone:
    """Configurations of a sorted set of informative positions, digit 0 fastest."""

    def __init__(self, space: SignalSpace, members: Sequence[int]):
        self.members = tuple(members)
        self.radices = [space.radix(i) for i in self.members]
        self.strides = []
        s = 1
        for r in self.radices:
            self.strides.append(s)
            s *= r
        self.size = s
        self.where = {m: j for j, m in enumerate(self.members)}
        self.num_true = [space.num_true[i] for i in self.members]
        self.num_false = [space.num_false[i] for i in self.members]

    def digits(self, position: int) -> np.ndarray:
        j = self.where[position]
        idx = np.arange(self.size, dtype=np.int64)
        return (idx // self.strides[j]) % self.radices[j]

    def project(self, sub: "Cone") -> np.ndarray:
        """Index into ``sub`` of every configuration of this cone."""
        if sub.members == self.members:
            return np.arange(self.size, dtype=np.int64)
        out = np.zeros(self.size, dtype=np.int64)
        for m, stride in zip(sub.members, sub.strides):
            out += self.digits(m) * stride
        return out

    def index_of(self, digits: dict[int, int]) -> int:
        return sum(digits[m] * s for m, s in zip(self.members, self.strides))


class _AgentState:
    __slots__ = ("cone", "labels", "n_classes", "sums", "actions", "lifts")

    def __init__(self, cone: Cone):
        self.cone = cone
        self.labels: list[np.ndarray] = []
        self.n_classes: list[int] = []
        self.sums: list[tuple[list[int], list[int]]] = []
        self.actions: list[np.ndarray] = []
        self.lifts: dict[str, np.ndarray] = {}


class Engine:
    """Partition-refinement simulation of a network, all world states at once.

    Results are computed lazily, layer by layer in time, for the agents that
    are requested and everything they (transitively) observe.
    """

    def __init__(self, net: Network, model=Model.BINARY, cap: int = DEFAULT_CAP):
        self.net = net
        self.model = Model.parse(model)
        self.cap = cap
        self.space = SignalSpace(net)
        self._cones: dict[str, Cone] = {}
        self._cone_cache: dict[tuple[int, ...], Cone] = {}
        self._states: dict[str, _AgentState] = {}
        self._horizon = -1
        self._active: set[str] = set()
        # Interned belief ratios (revealed-belief model): value -> id.
        self._ratio_ids: dict[object, int] = {}
        self._ratios: list[object] = []

    # -- cones -----------------------------------------------------------
    def cone(self, agent: str) -> Cone:
        if agent not in self._cones:
            seen = {agent}
            stack = [agent]
            members = []
            while stack:
                u = stack.pop()
                if self.net.agent(u).informative:
                    members.append(self.space.pos[u])
                for v in self.net.observed[u]:
                    if v not in seen:
                        seen.add(v)
                        stack.append(v)
            key = tuple(sorted(members))
            if key not in self._cone_cache:
                size = 1
                for m in key:
                    size *= self.space.radix(m)
                if size > self.cap:
                    raise CapExceeded(
                        f"agent {agent!r} depends on {size} signal configurations "
                        f"(cap {self.cap}); use an analytic calculator instead"
                    )
                self._cone_cache[key] = Cone(self.space, key)
            self._cones[agent] = self._cone_cache[key]
        return self._cones[agent]

    def _closure(self, agents: Iterable[str]) -> set[str]:
        seen = set(agents)
        stack = list(seen)
        while stack:
            u = stack.pop()
            for v in self.net.observed[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    # -- actions -----------------------------------------------------------
    def _intern(self, value) -> int:
        if value not in self._ratio_ids:
            self._ratio_ids[value] = len(self._ratios)
            self._ratios.append(value)
        return self._ratio_ids[value]

    def action_id(self, action) -> Optional[int]:
        """Kernel key of an action value, or None if no class ever produced it."""
        if self.model is Model.BINARY:
            return 1 if action else 0
        return self._ratio_ids.get(Fraction(action))

    def action_value(self, key: int):
        if self.model is Model.BINARY:
            return bool(key)
        value = self._ratios[key]
        if value is UNDEFINED:
            raise ValueError("action of a zero-weight class requested")
        return value

    def _class_actions(self, wt: list[int], wf: list[int]) -> np.ndarray:
        if self.model is Model.BINARY:
            return np.fromiter((1 if t > f else 0 for t, f in zip(wt, wf)),
                               dtype=np.int64, count=len(wt))
        keys = []
        for t, f in zip(wt, wf):
            if t == 0 and f == 0:
                keys.append(self._intern(UNDEFINED))
            elif f == 0:
                raise ValueError("belief ratio is infinite (state F ruled out)")
            else:
                keys.append(self._intern(Fraction(t, f)))
        return np.asarray(keys, dtype=np.int64)

    # -- main loop -----------------------------------------------------------
    def run(self, agents: Optional[Iterable[str]], horizon: int) -> None:
        """Ensure tables for ``agents`` (all if None) at times 0..horizon."""
        wanted = set(self.net.by_id) if agents is None else set(agents)
        new = self._closure(wanted) - self._active
        if new and self._horizon >= 0:
            # Newly requested agents are computed from scratch up to the
            # current horizon before extending everything further.
            target = self._horizon
            self._active |= new
            for t in range(target + 1):
                self._step(new, t)
        else:
            self._active |= new
        for t in range(self._horizon + 1, horizon + 1):
            self._step(self._active, t)
        self._horizon = max(self._horizon, horizon)

    def _step(self, agents: set[str], t: int) -> None:
        order = sorted(agents, key=self.net.index.__getitem__)
        for u in order:
            st = self._states.get(u)
            if st is None:
                st = self._states[u] = _AgentState(self.cone(u))
            if len(st.labels) > t:
                continue
            if t == 0:
                if self.net.agent(u).informative:
                    labels = st.cone.digits(self.space.pos[u])
                    n = st.cone.radices[st.cone.where[self.space.pos[u]]]
                else:
                    labels = np.zeros(st.cone.size, dtype=np.int64)
                    n = 1
                labels, n = kernels.refine(labels, np.zeros_like(labels))
            else:
                labels, n = st.labels[t - 1], st.n_classes[t - 1]
                for v in self.net.observed[u]:
                    if n == st.cone.size:
                        break
                    keys = self._lifted_actions(u, v, t - 1)
                    if keys is not None:
                        labels, n = kernels.refine(labels, keys)
            if t > 0 and n == st.n_classes[t - 1]:
                st.labels.append(st.labels[t - 1])
                st.n_classes.append(n)
                st.sums.append(st.sums[t - 1])
                st.actions.append(st.actions[t - 1])
                continue
            wt, wf = kernels.class_sums(labels, n, st.cone.radices,
                                        st.cone.num_true, st.cone.num_false)
            st.labels.append(labels)
            st.n_classes.append(n)
            st.sums.append((wt, wf))
            st.actions.append(self._class_actions(wt, wf)[labels])

    def _lifted_actions(self, u: str, v: str, t: int) -> Optional[np.ndarray]:
        vs = self._states[v]
        table = vs.actions[t]
        if vs.n_classes[t] == 1 or (table.size and (table == table[0]).all()):
            return None  # a constant action carries no information
        st = self._states[u]
        lift = st.lifts.get(v)
        if lift is None:
            lift = st.lifts[v] = st.cone.project(vs.cone)
        return table[lift]

    # -- queries -----------------------------------------------------------
    def config_index(self, agent: str, omega: WorldState) -> int:
        cone = self.cone(agent)
        sig = omega.signal_map()
        digits = {m: self.space.digit(m, sig[self.space.ids[m]]) for m in cone.members}
        return cone.index_of(digits)

    def labels(self, agent: str, t: int) -> tuple[np.ndarray, int]:
        self.run([agent], t)
        st = self._states[agent]
        return st.labels[t], st.n_classes[t]

    def class_weights(self, agent: str, t: int) -> tuple[list[int], list[int]]:
        """Scaled (W_T, W_F) per class; the common scale cancels in beliefs."""
        self.run([agent], t)
        return self._states[agent].sums[t]

    def action_table(self, agent: str, t: int) -> np.ndarray:
        self.run([agent], t)
        return self._states[agent].actions[t]

    def class_beliefs(self, agent: str, t: int) -> list[Optional[Fraction]]:
        """Belief of every class (None for zero-weight classes)."""
        wt, wf = self.class_weights(agent, t)
        return [Fraction(a, a + b) if a + b else None for a, b in zip(wt, wf)]

    def belief_at(self, agent: str, t: int, index: int) -> Fraction:
        labels, _ = self.labels(agent, t)
        wt, wf = self.class_weights(agent, t)
        c = labels[index]
        return Fraction(wt[c], wt[c] + wf[c])

    def action_at(self, agent: str, t: int, index: int):
        return self.action_value(int(self.action_table(agent, t)[index]))


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def enumerate_world_states(net: Network, cap: int = DEFAULT_CAP):
    """All world states with positive prior weight, each with its exact weight.

    States are listed with theta = F first, then T; signal configurations in
    lexicographic order over the informative agents in network order.
    """
    space = SignalSpace(net)
    count = 2
    for i in range(len(space.ids)):
        count *= space.radix(i)
    if count > cap:
        raise CapExceeded(
            f"{count} world states exceed the cap {cap}; use an analytic calculator instead"
        )
    half = Fraction(1, 2)
    out = []
    for theta in (False, True):
        for config in itertools.product(*space.values):
            w = half
            for a, s in zip(space.ids, config):
                w *= net.agent(a).signal.prob(s, theta)
                if w == 0:
                    break
            if w > 0:
                out.append((WorldState(theta, dict(zip(space.ids, config))), w))
    return out


def _check_state(net: Network, omega: WorldState) -> None:
    sig = omega.signal_map()
    if set(sig) != set(net.informative_ids):
        raise ValueError("world state must assign a signal to exactly the informative agents")
    w = Fraction(1)
    for a, s in sig.items():
        dist = net.agent(a).signal
        if not 0 <= s < dist.alphabet_size:
            raise ValueError(f"signal {s} outside the alphabet of {a!r}")
        w *= dist.prob(s, omega.theta)
    if w == 0:
        raise ValueError("world state has zero prior weight")


def simulate(net: Network, omega: WorldState, horizon: int, model=Model.BINARY,
             cap: int = DEFAULT_CAP, engine: Optional[Engine] = None) -> ActionTrace:
    """Actions and beliefs of every agent at times 0..horizon in world ``omega``."""
    _check_state(net, omega)
    eng = engine or Engine(net, model, cap)
    eng.run(None, horizon)
    trace = ActionTrace(eng.model, horizon)
    for a in net.agents:
        idx = eng.config_index(a.id, omega)
        for t in range(horizon + 1):
            trace.actions[(a.id, t)] = eng.action_at(a.id, t, idx)
            trace.beliefs[(a.id, t)] = eng.belief_at(a.id, t, idx)
    return trace


def information_set(net: Network, agent: str, time: int, omega: WorldState,
                    model=Model.BINARY, cap: int = DEFAULT_CAP,
                    engine: Optional[Engine] = None):
    """The world states ``agent`` cannot tell apart from ``omega`` at ``time``.

    Returns ``(states, W_T, W_F)`` where the weights are prior masses.
    """
    _check_state(net, omega)
    eng = engine or Engine(net, model, cap)
    labels, _ = eng.labels(agent, time)
    target = labels[eng.config_index(agent, omega)]
    states = []
    wt = wf = Fraction(0)
    for state, w in enumerate_world_states(net, cap):
        if labels[eng.config_index(agent, state)] == target:
            states.append(state)
            if state.theta:
                wt += w
            else:
                wf += w
    return states, wt, wf


def history_factors(eng: Engine, hist: ObservationHistory, time: int):
    """Indicator tables, one per observed agent, of configurations reproducing ``hist``.

    Each entry is ``(cone, mask)`` with ``mask`` a boolean array over the cone.
    Raises InconsistentHistory when some observed agent alone cannot match.
    """
    net = eng.net
    hist.validate(net, time)
    nbrs = net.observed[hist.observer_id]
    missing = [(v, t) for v in nbrs for t in range(time) if (v, t) not in hist.entries]
    if missing:
        raise ValueError(f"history is missing entries, e.g. {missing[0]}")
    if time > 0:
        eng.run(nbrs, time - 1)
    out = []
    for v in nbrs:
        cone = eng.cone(v)
        mask = np.ones(cone.size, dtype=bool)
        for t in range(time):
            key = eng.action_id(hist.entries[(v, t)])
            if key is None:
                raise InconsistentHistory(
                    f"no configuration makes {v!r} broadcast {hist.entries[(v, t)]} at time {t}"
                )
            mask &= eng.action_table(v, t) == key
        if not mask.any():
            raise InconsistentHistory(f"no configuration reproduces the actions of {v!r}")
        out.append((cone, mask))
    return out


def posterior(net: Network, hist: ObservationHistory, time: int, model=Model.BINARY,
              cap: int = DEFAULT_CAP) -> Fraction:
    """Exact belief of the observer given its own signal and observation history."""
    from .elimination import masked_weights

    eng = Engine(net, model, cap)
    factors = history_factors(eng, hist, time)
    own = None
    if net.agent(hist.observer_id).informative:
        if hist.own_signal is None:
            raise ValueError("informative observer needs its own signal")
        pos = eng.space.pos[hist.observer_id]
        own = (pos, eng.space.digit(pos, hist.own_signal))
    wt, wf = masked_weights(eng.space, factors, own, cap=cap)
    if wt + wf == 0:
        raise InconsistentHistory("no world state reproduces the history")
    return Fraction(wt, wt + wf)


def consistent_configurations(net: Network, hist: ObservationHistory, time: int,
                              model=Model.BINARY, cap: int = DEFAULT_CAP,
                              engine: Optional[Engine] = None):
    """Boolean mask over all signal configurations reproducing ``hist``.

    Returns ``(cone, mask)`` where ``cone`` spans every informative agent of
    the network; configuration ``c`` is decoded with ``decode(cone, c)``.
    """
    eng = engine or Engine(net, model, cap)
    space = eng.space
    size = 1
    for i in range(len(space.ids)):
        size *= space.radix(i)
    if size > cap:
        raise CapExceeded(f"{size} configurations exceed the cap {cap}")
    full = Cone(space, range(len(space.ids)))
    mask = np.ones(full.size, dtype=bool)
    try:
        factors = history_factors(eng, hist, time)
    except InconsistentHistory:
        return full, np.zeros(full.size, dtype=bool)
    for cone, m in factors:
        mask &= m[full.project(cone)]
    if net.agent(hist.observer_id).informative and hist.own_signal is not None:
        pos = space.pos[hist.observer_id]
        mask &= full.digits(pos) == space.digit(pos, hist.own_signal)
    return full, mask


def decode(space: SignalSpace, cone: Cone, index: int) -> dict[str, int]:
    """Signal values of the agents of ``cone`` in configuration ``index``."""
    out = {}
    for m, r, s in zip(cone.members, cone.radices, cone.strides):
        out[space.ids[m]] = space.values[m][(index // s) % r]
    return out


def config_weight(space: SignalSpace, cone: Cone, index: int, theta: bool) -> Fraction:
    """Exact probability of the configuration's signals given theta."""
    w = Fraction(1)
    for m, r, s in zip(cone.members, cone.radices, cone.strides):
        d = (index // s) % r
        num = space.num_true[m][d] if theta else space.num_false[m][d]
        w *= Fraction(num, space.denoms[m])
    return w
