"""Sub-network builders for the hardness constructions.

Each builder returns a :class:`GadgetInstance`: a network fragment whose
edges may point at host agents (the targets), the actions the designated
observer must see from the fragment's interface agents, and the semantics the
observation enforces on the targets' signals. ``check_gadget_claim`` verifies
a gadget by exhaustive enumeration with the engine.

Threshold logic is multiplicative: a summing agent that sees the targets'
signals and a compensating signal of ratio ``1/R`` acts T exactly when the
product of the targets' likelihood ratios exceeds ``R``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .core.engine import (
    Engine,
    SignalSpace,
    config_weight,
    consistent_configurations,
    decode,
)
from .core.structure import NetworkBuilder, significant_times
from .core.types import (
    Action,
    Agent,
    Model,
    Network,
    ObservationHistory,
    SignalDistribution,
)

GREATER = "greater"
LESS = "less"
HALF = Fraction(1, 2)

Target = tuple[str, SignalDistribution]


@dataclass(frozen=True)
class SeparatorChoice:
    ratio_threshold: Fraction
    direction: str = GREATER

    def __post_init__(self):
        object.__setattr__(self, "ratio_threshold", Fraction(self.ratio_threshold))
        if self.ratio_threshold <= 0:
            raise ValueError("threshold ratio must be positive")
        if self.direction not in (GREATER, LESS):
            raise ValueError(f"unknown direction {self.direction!r}")


@dataclass
class GadgetInstance:
    kind: str
    sub_network: Network
    expected_actions: dict[str, Action]
    interface_ids: dict[str, object] = field(default_factory=dict)
    equalization_factor: Optional[Fraction] = None
    targets: tuple[Target, ...] = ()
    semantics: Optional[Callable[[dict[str, int]], bool]] = None
    # (separator, target distributions) for every threshold inside.
    separators: list[tuple[SeparatorChoice, tuple[SignalDistribution, ...]]] = field(default_factory=list)
    # "aux": the fragment's own signals carry the constant factor;
    # "full": targets and fragment together do.
    equalization_scope: Optional[str] = None
    model: Model = Model.BINARY

    @property
    def aux_ids(self) -> list[str]:
        return [a.id for a in self.sub_network.agents if a.informative]

    @property
    def agent_ids(self) -> list[str]:
        return [a.id for a in self.sub_network.agents]


# ---------------------------------------------------------------------------
# Distributions and separators
# ---------------------------------------------------------------------------

def distribution_from_ratios(lam0=None, lam1=None) -> SignalDistribution:
    """Binary distribution with ``ratio(0) = lam0`` and ``ratio(1) = lam1``.

    With only ``lam0`` given, ``P(1 | F)`` is fixed at 1/2; with only
    ``lam1`` given, ``P(1 | T)`` is fixed at 1/2.
    """
    if lam0 is None and lam1 is None:
        raise ValueError("at least one ratio is required")
    if lam0 is not None and lam1 is not None:
        lam0, lam1 = Fraction(lam0), Fraction(lam1)
        if not lam0 < 1 < lam1:
            raise ValueError(f"infeasible ratio pair ({lam0}, {lam1}); need lam0 < 1 < lam1")
        p_false = (1 - lam0) / (lam1 - lam0)
        return SignalDistribution.binary(lam1 * p_false, p_false)
    if lam0 is not None:
        lam0 = Fraction(lam0)
        if not 0 < lam0 < 1:
            raise ValueError(f"ratio of signal 0 must lie in (0, 1), got {lam0}")
        return SignalDistribution.binary(1 - lam0 / 2, HALF)
    lam1 = Fraction(lam1)
    if lam1 <= 1:
        raise ValueError(f"ratio of signal 1 must exceed 1, got {lam1}")
    return SignalDistribution.binary(HALF, HALF / lam1)


def ratios(dist: SignalDistribution) -> tuple[Fraction, Fraction]:
    """``(ratio(0), ratio(1))`` of a binary informative distribution."""
    if dist.alphabet_size != 2:
        raise ValueError("binary distribution required")
    r0, r1 = dist.ratio(0), dist.ratio(1)
    if r0 is None or r1 is None or dist.probs_true[0] == 0 or dist.probs_true[1] == 0:
        raise ValueError("distribution needs positive probabilities")
    if not r0 < 1 < r1:
        raise ValueError("signal 1 must be evidence for T: need ratio(0) < 1 < ratio(1)")
    return r0, r1


def achievable_products(dists: Sequence[SignalDistribution]) -> dict[tuple[int, ...], Fraction]:
    out = {}
    for config in itertools.product((0, 1), repeat=len(dists)):
        p = Fraction(1)
        for d, s in zip(dists, config):
            p *= ratios(d)[s]
        out[config] = p
    return out


def simplest_between(lo: Fraction, hi: Optional[Fraction]) -> Fraction:
    """Rational with the smallest denominator (then numerator) in the open
    interval ``(lo, hi)``; ``hi=None`` means unbounded. Requires ``lo >= 0``."""
    lo = Fraction(lo)
    hi = None if hi is None else Fraction(hi)
    if lo < 0 or (hi is not None and not lo < hi):
        raise ValueError(f"bad interval ({lo}, {hi})")
    terms: list[int] = []
    while True:
        fl = lo.numerator // lo.denominator
        if hi is None or fl + 1 < hi:
            terms.append(fl + 1)
            break
        # hi <= fl + 1, so the answer is fl + 1/y with y in a transformed interval
        terms.append(fl)
        lo, hi = 1 / (hi - fl), (None if lo == fl else 1 / (lo - fl))
    x = Fraction(terms[-1])
    for t in reversed(terms[:-1]):
        x = t + 1 / x
    return x


MEAN = "mean"
SIMPLEST = "simplest"


class SeparatorPool:
    """Chooses separators and reuses earlier ones to keep distributions few.

    ``pick(lo, hi)`` returns an already registered ratio strictly inside
    ``(lo, hi)`` if there is one; otherwise it registers a new one: the
    arithmetic mean (``"mean"``) or the simplest rational in the interval
    (``"simplest"``, which stays close to the endpoint nearer to 1 and so
    keeps compensating probabilities away from 0 and 1).
    """

    def __init__(self, policy: str = MEAN, reuse: bool = True):
        if policy not in (MEAN, SIMPLEST):
            raise ValueError(f"unknown separator policy {policy!r}")
        self.policy = policy
        self.reuse = reuse
        self.values: list[Fraction] = []

    def pick(self, lo: Optional[Fraction], hi: Optional[Fraction]) -> Fraction:
        """``None`` bounds leave that side of the interval open."""
        lo = Fraction(0) if lo is None else Fraction(lo)
        if self.reuse:
            for v in self.values:
                if lo < v and (hi is None or v < hi):
                    return v
        if self.policy == SIMPLEST:
            v = simplest_between(lo, hi)
        elif hi is None:
            v = 2 * lo if lo > 0 else Fraction(1)
        else:
            v = (lo + hi) / 2
        self.values.append(v)
        return v


def _between(lo: Fraction, hi: Fraction, pool: Optional[SeparatorPool]) -> Fraction:
    if not lo < hi:
        raise ValueError(f"no separator between {lo} and {hi}")
    return pool.pick(lo, hi) if pool is not None else (lo + hi) / 2


def compensating_pair(R: Fraction) -> tuple[SignalDistribution, int, SignalDistribution, int, Fraction]:
    """Signals of ratio ``1/R`` (observed by the summing agent) and ``R``.

    Returns ``(dist_B, signal_B, dist_C, signal_C, alpha)`` where ``alpha``
    is the common probability of the two signals under either state.
    """
    R = Fraction(R)
    if R > 1:
        b = distribution_from_ratios(lam0=1 / R)
        c = distribution_from_ratios(lam1=R)
        return b, 0, c, 1, 1 / (4 * R)
    if R < 1:
        b = distribution_from_ratios(lam1=1 / R)
        c = distribution_from_ratios(lam0=R)
        return b, 1, c, 0, R / 4
    raise ValueError("a ratio of 1 needs no compensating pair")


# ---------------------------------------------------------------------------
# Threshold family
# ---------------------------------------------------------------------------

def _default_name(kind: str, ids: Iterable[str]) -> str:
    return f"{kind}[{','.join(ids)}]"


def build_threshold(targets: Sequence[Target], sep: SeparatorChoice,
                    name: Optional[str] = None, allow_ties: bool = False) -> GadgetInstance:
    """Threshold gadget: the observer learns whether the targets' product beats R."""
    targets = tuple((t, d) for t, d in targets)
    if not targets:
        raise ValueError("threshold needs at least one target")
    name = name or _default_name("thr", [t for t, _ in targets])
    dists = tuple(d for _, d in targets)
    products = achievable_products(dists)
    R = sep.ratio_threshold
    if not allow_ties and R in products.values():
        raise ValueError(f"non-strict separation: {R} is an achievable product")
    greater = sep.direction == GREATER

    agents: list[Agent] = [Agent(f"{name}.A")]
    edges = [(f"{name}.A", t) for t, _ in targets]
    expected: dict[str, Action] = {f"{name}.A": greater}
    interface = {"summing": f"{name}.A"}
    alpha = Fraction(1)
    if R != 1:
        db, sb, dc, sc, alpha = compensating_pair(R)
        b, c, d1, d2 = (f"{name}.{x}" for x in ("B", "C", "D1", "D2"))
        agents += [Agent(b, db), Agent(c, dc), Agent(d1), Agent(d2)]
        edges += [(f"{name}.A", b), (d1, b), (d2, c)]
        expected[d1] = bool(sb)
        expected[d2] = bool(sc)
        interface.update(compensator=b, partner=c, dummy_b=d1, dummy_c=d2)

    def semantics(sig: dict[str, int]) -> bool:
        p = Fraction(1)
        for t, d in targets:
            p *= ratios(d)[sig[t]]
        return p > R if greater else p <= R

    return GadgetInstance(
        kind="threshold",
        sub_network=Network(tuple(agents), tuple(edges)),
        expected_actions=expected,
        interface_ids=interface,
        equalization_factor=alpha,
        targets=targets,
        semantics=semantics,
        separators=[(sep, dists)],
        equalization_scope="aux",
    )


def _combine(kind: str, parts: Sequence[GadgetInstance], targets, semantics,
             extra_agents=(), extra_edges=(), extra_expected=None,
             interface=None, factor=None, scope=None) -> GadgetInstance:
    agents = [a for g in parts for a in g.sub_network.agents] + list(extra_agents)
    edges = [e for g in parts for e in g.sub_network.edges] + list(extra_edges)
    expected: dict[str, Action] = {}
    for g in parts:
        expected.update(g.expected_actions)
    expected.update(extra_expected or {})
    seps = [s for g in parts for s in g.separators]
    return GadgetInstance(kind, Network(tuple(agents), tuple(edges)), expected,
                          interface or {}, factor, tuple(targets), semantics, seps, scope)


def build_counting(targets: Sequence[Target], k: int, mode: str = "exactly",
                   with_equalizer: bool = False, name: Optional[str] = None,
                   pool: Optional[SeparatorPool] = None) -> GadgetInstance:
    """Counting gadget: exactly / at least / at most ``k`` targets received 1."""
    targets = tuple(targets)
    K = len(targets)
    if K == 0:
        raise ValueError("counting gadget needs targets")
    dist = targets[0][1]
    if any(d != dist for _, d in targets):
        raise ValueError("counting gadget targets must share one distribution")
    if not 0 <= k <= K:
        raise ValueError(f"infeasible count {k} for {K} targets")
    if mode not in ("exactly", "at_least", "at_most"):
        raise ValueError(f"unknown mode {mode!r}")
    name = name or _default_name(f"cnt{k}{mode}", [t for t, _ in targets])
    r0, r1 = ratios(dist)
    P = [r1 ** j * r0 ** (K - j) for j in range(K + 1)]
    parts = []
    if mode in ("exactly", "at_least") and k >= 1:
        parts.append(build_threshold(targets, SeparatorChoice(_between(P[k - 1], P[k], pool), GREATER),
                                     name=f"{name}.lo"))
    if mode in ("exactly", "at_most") and k < K:
        parts.append(build_threshold(targets, SeparatorChoice(_between(P[k], P[k + 1], pool), LESS),
                                     name=f"{name}.hi"))
    extra, expected, interface = [], {}, {"thresholds": [p.interface_ids["summing"] for p in parts]}
    factor = Fraction(1)
    for p in parts:
        factor *= p.equalization_factor
    scope = None
    if with_equalizer:
        ratio = 1 / P[k]
        if ratio != 1:
            eq = f"{name}.eq"
            eq_dist = distribution_from_ratios(lam1=ratio) if ratio > 1 else distribution_from_ratios(lam0=ratio)
            extra.append(Agent(eq, eq_dist))
            expected[eq] = ratio > 1
            interface["equalizer"] = eq
            s = 1 if ratio > 1 else 0
            factor *= eq_dist.prob(s, True) * dist.probs_true[1] ** k * dist.probs_true[0] ** (K - k)
        else:
            factor *= dist.probs_true[1] ** k * dist.probs_true[0] ** (K - k)
        interface["equalizer_ratio"] = ratio
        scope = "full" if mode == "exactly" else None
    ids = [t for t, _ in targets]

    def semantics(sig):
        ones = sum(sig[t] for t in ids)
        return {"exactly": ones == k, "at_least": ones >= k, "at_most": ones <= k}[mode]

    return _combine("counting", parts, targets, semantics, extra, (), expected, interface,
                    factor if scope else None, scope)


def build_not_equal(u: Target, v: Target, name: Optional[str] = None,
                    pool: Optional[SeparatorPool] = None) -> GadgetInstance:
    """Two thresholds that together force the two binary signals to differ."""
    name = name or _default_name("ne", [u[0], v[0]])
    (u0, u1), (v0, v1) = ratios(u[1]), ratios(v[1])
    low, high = u0 * v0, u1 * v1
    mixed = sorted([u0 * v1, u1 * v0])
    lo = build_threshold([u, v], SeparatorChoice(_between(low, mixed[0], pool), GREATER), name=f"{name}.lo")
    hi = build_threshold([u, v], SeparatorChoice(_between(mixed[1], high, pool), LESS), name=f"{name}.hi")

    def semantics(sig):
        return sig[u[0]] != sig[v[0]]

    return _combine("not_equal", [lo, hi], [u, v], semantics,
                    interface={"thresholds": [lo.interface_ids["summing"], hi.interface_ids["summing"]]})


def build_clause(literal_ids: Sequence[str], eval_id: str, distribution: SignalDistribution,
                 name: Optional[str] = None, variables: Optional[Sequence[int]] = None,
                 pool: Optional[SeparatorPool] = None) -> GadgetInstance:
    """At least one of the literal agents or EVAL received signal 1."""
    if variables is not None and len(set(variables)) != len(variables):
        raise ValueError("clause repeats a variable")
    if len(set(literal_ids)) != len(literal_ids):
        raise ValueError("clause repeats a literal")
    targets = [(x, distribution) for x in literal_ids] + [(eval_id, distribution)]
    g = build_counting(targets, 1, "at_least", False, name=name or _default_name("cl", literal_ids), pool=pool)
    g.kind = "clause"
    return g


def build_variable(pos_id: str, neg_id: str, distribution: SignalDistribution,
                   name: Optional[str] = None, pool: Optional[SeparatorPool] = None) -> GadgetInstance:
    """Exactly one of the two literal agents of a variable received 1."""
    g = build_counting([(pos_id, distribution), (neg_id, distribution)], 1, "exactly", True,
                       name=name or _default_name("var", [pos_id, neg_id]), pool=pool)
    g.kind = "variable"
    return g


# ---------------------------------------------------------------------------
# Modified not-equal gadgets (observer-driven thresholds)
# ---------------------------------------------------------------------------

def build_modified_not_equal(prev_observer_id: str, a_i: Target, block_ids: Sequence[str],
                             large_sep: SeparatorChoice, small_sep: SeparatorChoice,
                             context_ids: Sequence[str] = (), name: Optional[str] = None,
                             ) -> GadgetInstance:
    """Not-equal between a previous observer's action and a binary agent.

    Each of the two summing agents sees the previous observer, ``a_i``, its
    compensating signal, and everything in ``context_ids`` (what the previous
    observer sees) except the ``block_ids`` agents. The large threshold
    (direction less) rules out both actions being T; the small one (direction
    greater) rules out both being F.
    """
    name = name or _default_name("mne", [prev_observer_id, a_i[0]])
    if large_sep.direction != LESS or small_sep.direction != GREATER:
        raise ValueError("large separator must use 'less' and small separator 'greater'")
    blocked = set(block_ids)
    seen = [c for c in context_ids if c not in blocked]
    agents: list[Agent] = []
    edges: list[tuple[str, str]] = []
    expected: dict[str, Action] = {}
    interface: dict[str, object] = {}
    factor = Fraction(1)
    for tag, sep in (("large", large_sep), ("small", small_sep)):
        t = f"{name}.{tag}.T"
        agents.append(Agent(t))
        edges += [(t, prev_observer_id), (t, a_i[0])] + [(t, c) for c in seen]
        expected[t] = sep.direction == GREATER
        interface[tag] = t
        R = sep.ratio_threshold
        if R != 1:
            db, sb, dc, sc, alpha = compensating_pair(R)
            tb, tc = f"{name}.{tag}.T1", f"{name}.{tag}.T2"
            agents += [Agent(tb, db), Agent(tc, dc)]
            edges.append((t, tb))
            expected[tb] = bool(sb)
            expected[tc] = bool(sc)
            factor *= alpha
    return GadgetInstance("modified_not_equal", Network(tuple(agents), tuple(edges)), expected,
                          interface, factor, (a_i,), None, [], "aux")


def separator_interval(products: dict[tuple[bool, bool], Optional[Fraction]], which: str):
    """Open interval in which the large or small separator must lie.

    ``products`` maps ``(theta1, theta2)`` to the summing agent's ratio without
    its compensating signal (None when that combination never occurs).
    """
    tt = products.get((True, True))
    ff = products.get((False, False))
    mixed = [p for k, p in products.items() if k[0] != k[1] and p is not None]
    if which == "large":
        return (max(mixed) if mixed else None), tt
    return ff, (min(mixed) if mixed else None)


# ---------------------------------------------------------------------------
# Bounded-signal coupler
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CouplerParams:
    alpha1: Fraction
    alpha2: Fraction
    eps: Fraction
    q: SignalDistribution
    p: SignalDistribution
    eta: Fraction

    def triple_weight(self, s_f: int, theta: bool) -> Fraction:
        """Probability of one (C, D, E) triple given the signal of F."""
        q = self.q.prob(1, theta)
        p = self.p.prob(1, theta)
        if s_f == 0:
            return q * q * (1 - p)
        return (1 - q) * (1 - q) * p

    def triple_ratio(self, s_f: int) -> Fraction:
        return self.triple_weight(s_f, True) / self.triple_weight(s_f, False)


def _coupler_side(q: Fraction, a1: Fraction) -> Fraction:
    return q * q * (1 - q) ** 2 / (q * q + a1 * (1 - q) ** 2)


def _coupler_other(x: Fraction, a2: Fraction) -> Fraction:
    return x * x * (1 - x) ** 2 / (a2 * x * x + (1 - x) ** 2)


DEFAULT_ETA = Fraction(1, 1 << 64)


def solve_coupler(alpha1, alpha2, eps, eta: Fraction = DEFAULT_ETA,
                  max_denominator: int = 1 << 64) -> CouplerParams:
    """Distributions for the bounded coupler with ``q_T = 1 - eps``.

    ``q_F`` is the root near ``eps`` of the balance equation, bracketed and
    bisected in exact arithmetic and then rounded to a bounded denominator;
    the relative residual of the balance equation is checked against ``eta``.
    """
    a1, a2, eps = Fraction(alpha1), Fraction(alpha2), Fraction(eps)
    if not (0 < a1 < 1 and 0 < a2 < 1 and 0 < eps < Fraction(1, 4)):
        raise ValueError("need 0 < alpha1, alpha2 < 1 and 0 < eps < 1/4")
    q_t = 1 - eps
    target = _coupler_side(q_t, a1)

    def g(x):
        return _coupler_other(x, a2) - target

    lo, hi = eps / 4, 2 * eps
    if not (g(lo) < 0 < g(hi)):
        raise ValueError("root finder failed to bracket q_F; use a smaller eps")
    # g is increasing on (0, 1/2); bisect until the bracket is far narrower
    # than the rounding step.
    width = Fraction(1, max_denominator) ** 2
    while hi - lo > width:
        mid = (lo + hi) / 2
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    q_f = ((lo + hi) / 2).limit_denominator(max_denominator)
    residual = abs(_coupler_other(q_f, a2) / target - 1)
    if residual > eta:
        raise ValueError(f"balance residual {float(residual):.3g} exceeds eta")
    p_f = a2 * q_f ** 2 / (a2 * q_f ** 2 + (1 - q_f) ** 2)
    p_t = q_t ** 2 / (q_t ** 2 + a1 * (1 - q_t) ** 2)
    return CouplerParams(a1, a2, eps, SignalDistribution.binary(q_t, q_f),
                         SignalDistribution.binary(p_t, p_f), residual)


F_DISTRIBUTION = SignalDistribution.binary(Fraction(3, 4), Fraction(1, 4))


def build_bounded_coupler(prev_observer_or_eval_id: str, alpha1, alpha2, b: int, eps,
                          name: Optional[str] = None, link: Optional[SignalDistribution] = None,
                          modified: Optional[dict] = None,
                          pool: Optional[SeparatorPool] = None,
                          params: Optional[CouplerParams] = None) -> GadgetInstance:
    """Coupler replacing one amplifying agent with ``b`` bounded-signal triples.

    The anchor agent F gets the opposite signal (or action) of the linked
    agent; each triple then satisfies S(F) = S(D_j) != S(C_j) = S(E_j).
    With ``link`` given, the anchor is tied to an informative agent with that
    distribution by a plain not-equal gadget. With ``modified`` given (keys
    ``context``, ``block``, ``rho_large``, ``rho_small``), it is tied to a
    previous observer by the generalized modified not-equal gadget.
    """
    if b < 1:
        raise ValueError("b must be positive")
    name = name or f"cpl[{prev_observer_or_eval_id}]"
    cp = params or solve_coupler(alpha1, alpha2, eps)
    f, f2 = f"{name}.F", f"{name}.F2"
    parts = [build_counting([(f, F_DISTRIBUTION), (f2, F_DISTRIBUTION)], 1, "exactly", True,
                            name=f"{name}.pair", pool=pool)]
    extra = [Agent(f, F_DISTRIBUTION), Agent(f2, F_DISTRIBUTION)]
    triples = []
    for j in range(1, b + 1):
        c, d, e = (f"{name}.{x}{j}" for x in ("C", "D", "E"))
        extra += [Agent(c, cp.q), Agent(d, cp.p), Agent(e, cp.q)]
        parts.append(build_not_equal((f, F_DISTRIBUTION), (c, cp.q), name=f"{name}.fc{j}", pool=pool))
        parts.append(build_not_equal((c, cp.q), (d, cp.p), name=f"{name}.cd{j}", pool=pool))
        parts.append(build_not_equal((d, cp.p), (e, cp.q), name=f"{name}.de{j}", pool=pool))
        triples.append((c, d, e))
    interface: dict[str, object] = {"anchor": f, "anchor_pair": f2, "triples": triples, "params": cp}
    if link is not None:
        parts.append(build_not_equal((prev_observer_or_eval_id, link), (f, F_DISTRIBUTION),
                                     name=f"{name}.link", pool=pool))
    elif modified is not None:
        seen_extra = [f, f2] + [a.id for g in parts[:1] for a in g.sub_network.agents if a.informative]
        seen_extra += [x for tr in triples for x in tr]
        parts.append(build_generalized_modified_not_equal(
            prev_observer_or_eval_id, f, seen_extra, modified["context"], modified["block"],
            modified["rho_large"], modified["rho_small"], b, name=f"{name}.mne"))
        interface["mne"] = parts[-1].interface_ids
    g = _combine("bounded_coupler", parts, (), None, extra, (), {}, interface)
    return g


def build_generalized_modified_not_equal(prev_observer_id: str, anchor_id: str,
                                         anchor_side_ids: Sequence[str],
                                         context_ids: Sequence[str], block_ids: Sequence[str],
                                         rho_large: Fraction, rho_small: Fraction, b: int,
                                         name: Optional[str] = None) -> GadgetInstance:
    """Modified not-equal whose thresholds are split over ``b`` compensating pairs.

    Each summing agent observes the previous observer, the context minus the
    block, all informative agents on the anchor's side, and ``b`` signals of
    ratio ``1/rho``; the observer sees those and their ``b`` partners of
    ratio ``rho``. The effective threshold is ``rho**b``.
    """
    name = name or _default_name("gmne", [prev_observer_id, anchor_id])
    blocked = set(block_ids)
    seen = [c for c in context_ids if c not in blocked]
    agents: list[Agent] = []
    edges: list[tuple[str, str]] = []
    expected: dict[str, Action] = {}
    interface: dict[str, object] = {}
    for tag, rho, greater in (("large", Fraction(rho_large), False), ("small", Fraction(rho_small), True)):
        t = f"{name}.{tag}.T"
        agents.append(Agent(t))
        edges += [(t, prev_observer_id)] + [(t, x) for x in anchor_side_ids] + [(t, c) for c in seen]
        expected[t] = greater
        interface[tag] = t
        if rho != 1:
            db, sb, dc, sc, _ = compensating_pair(rho)
            for j in range(1, b + 1):
                tb, tc = f"{name}.{tag}.T1_{j}", f"{name}.{tag}.T2_{j}"
                agents += [Agent(tb, db), Agent(tc, dc)]
                edges.append((t, tb))
                expected[tb] = bool(sb)
                expected[tc] = bool(sc)
    return GadgetInstance("generalized_modified_not_equal", Network(tuple(agents), tuple(edges)),
                          expected, interface)


def _iroot(n: int, k: int) -> int:
    """Floor of the ``k``-th root of a non-negative integer."""
    if n < 2:
        return n
    x = 1 << ((n.bit_length() + k - 1) // k)
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    while x ** k > n:
        x -= 1
    while (x + 1) ** k <= n:
        x += 1
    return x


def rational_root_between(lo: Optional[Fraction], hi: Optional[Fraction], b: int,
                          candidates: Sequence[Fraction] = ()) -> Fraction:
    """A simple rational ``rho`` with ``lo < rho**b < hi`` (None bounds are open).

    Values in ``candidates`` are preferred, so separators can be shared.
    """
    lo = None if lo is None else Fraction(lo)
    hi = None if hi is None else Fraction(hi)
    if lo is not None and hi is not None and not lo < hi:
        raise ValueError(f"empty separator interval ({lo}, {hi})")

    def ok(r):
        v = r ** b
        return (lo is None or lo < v) and (hi is None or v < hi)

    for r in candidates:
        if ok(r):
            return r
    k = 8
    while True:
        scale = 1 << (k * b)
        if lo is None:
            low = Fraction(0)
        else:
            n = lo.numerator * scale // lo.denominator
            low = Fraction(_iroot(n, b) + 1, 1 << k)
        if hi is None:
            return simplest_between(low, None) if lo is not None else Fraction(1)
        num = hi.numerator * scale
        n = -(-num // hi.denominator) - 1
        up = Fraction(_iroot(n, b), 1 << k)
        if low < up:
            r = simplest_between(low, up)
            assert ok(r)
            return r
        k *= 2


# ---------------------------------------------------------------------------
# Revealed-belief gadgets
# ---------------------------------------------------------------------------

E_DISTRIBUTION = SignalDistribution(
    (Fraction(1, 13), Fraction(3, 13), Fraction(9, 13)),
    (Fraction(9, 13), Fraction(3, 13), Fraction(1, 13)),
)
RB_DISTRIBUTION = SignalDistribution.binary(Fraction(3, 4), Fraction(1, 4))


def _rb_compensator(name: str, ratio: Fraction):
    """Informative broadcaster of the inverse ratio; omitted when it is 1."""
    inv = 1 / ratio
    if inv == 1:
        return [], {}
    dist = distribution_from_ratios(lam1=inv) if inv > 1 else distribution_from_ratios(lam0=inv)
    return [Agent(f"{name}.comp", dist)], {f"{name}.comp": inv}


def build_rb_gadget(kind: str, args: dict, name: Optional[str] = None) -> GadgetInstance:
    """Revealed-belief gadgets for the counting reduction.

    kinds and their ``args``:
      variable: ``pos``, ``neg``, ``dist``
      clause: ``literals`` (two ids), ``eval``, ``dist``; creates its ternary E agent
      neutralizer_E: ``e`` (the ternary agent id), ``dist`` (its distribution)
      neutralizer_EVAL: ``eval``, ``dist``
      amplifier: ``eval``, ``dist``, ``b``
    """
    name = name or f"rb.{kind}"
    agents: list[Agent] = []
    edges: list[tuple[str, str]] = []
    expected: dict[str, Action] = {}
    targets: list[Target] = []
    interface: dict[str, object] = {}
    scope = None
    if kind == "variable":
        dist = args["dist"]
        r0, r1 = ratios(dist)
        aux = f"{name}.aux"
        agents.append(Agent(aux))
        edges += [(aux, args["pos"]), (aux, args["neg"])]
        expected[aux] = r0 * r1
        comp, comp_exp = _rb_compensator(name, r0 * r1)
        agents += comp
        expected.update(comp_exp)
        targets = [(args["pos"], dist), (args["neg"], dist)]
        pos, neg = args["pos"], args["neg"]

        def semantics(sig):
            return sig[pos] != sig[neg]
        scope = "full"
    elif kind == "clause":
        lits = list(args["literals"])
        if len(lits) != 2 or len(set(lits)) != 2:
            raise ValueError("a clause gadget takes exactly two distinct literals")
        dist = args["dist"]
        r0, r1 = ratios(dist)
        if r1 / r0 != 9:
            raise ValueError("clause gadget needs signal ratios nine apart")
        e = f"{name}.E"
        aux = f"{name}.aux"
        agents += [Agent(e, E_DISTRIBUTION), Agent(aux)]
        edges += [(aux, x) for x in lits] + [(aux, args["eval"]), (aux, e)]
        expected[aux] = r0 ** 3 * E_DISTRIBUTION.ratio(0) * 9 ** 3
        targets = [(x, dist) for x in lits] + [(args["eval"], dist)]
        interface["E"] = e
        ev = args["eval"]

        def semantics(sig):
            return sig[lits[0]] + sig[lits[1]] + sig[ev] >= 1
    elif kind == "neutralizer_E":
        dist = args.get("dist", E_DISTRIBUTION)
        e = args["e"]
        f = f"{name}.F"
        aux = f"{name}.aux"
        agents += [Agent(f, dist), Agent(aux)]
        edges += [(aux, e), (aux, f)]
        ratio = dist.ratio(0) ** 2 * 9 ** 2
        expected[aux] = ratio
        comp, comp_exp = _rb_compensator(name, ratio)
        agents += comp
        expected.update(comp_exp)
        targets = [(e, dist)]
        interface["F"] = f

        def semantics(sig):
            return True
        scope = "full"
    elif kind == "neutralizer_EVAL":
        dist = args["dist"]
        r0, r1 = ratios(dist)
        c = f"{name}.C"
        aux = f"{name}.aux"
        agents += [Agent(c, dist), Agent(aux)]
        edges += [(aux, args["eval"]), (aux, c)]
        expected[aux] = r0 * r1
        comp, comp_exp = _rb_compensator(name, r0 * r1)
        agents += comp
        expected.update(comp_exp)
        targets = [(args["eval"], dist)]
        interface["partner"] = c

        def semantics(sig):
            return True
        scope = "full"
    elif kind == "amplifier":
        dist = args["dist"]
        b = int(args["b"])
        if b < 1:
            raise ValueError("amplifier needs b >= 1")
        r0, r1 = ratios(dist)
        ev = args["eval"]
        amps = []
        for i in range(1, b + 1):
            a, bb = f"{name}.A{i}", f"{name}.B{i}"
            agents += [Agent(a, dist), Agent(bb)]
            edges += [(bb, ev), (bb, a)]
            expected[bb] = r0 * r1
            amps.append(a)
        targets = [(ev, dist)]
        interface["amplifiers"] = amps

        def semantics(sig):
            return True
    else:
        raise ValueError(f"unknown revealed-belief gadget kind {kind!r}")
    g = GadgetInstance(f"rb_{kind}", Network(tuple(agents), tuple(edges)), expected, interface,
                       None, tuple(targets), semantics, [], scope, Model.BELIEF)
    return g


# ---------------------------------------------------------------------------
# Observation histories and claim checking
# ---------------------------------------------------------------------------

def idle_action(model: Model) -> Action:
    """Broadcast of an agent that has learned nothing yet."""
    return False if model is Model.BINARY else Fraction(1)


def designated_history(net: Network, observer: str, expected: dict[str, Action],
                       model=Model.BINARY, times: Optional[dict] = None) -> tuple[ObservationHistory, int]:
    """The observer's full history implied by the designated actions.

    Relays repeat their source one step later, and every agent broadcasts the
    idle action before its significant time. Returns the history and the
    observer's significant time (the query time).
    """
    from .core.structure import relay_source

    model = Model.parse(model)
    times = times or significant_times(net)
    query = times[observer]
    if query is None:
        raise ValueError(f"observer {observer!r} never learns anything")
    entries = {}
    for v in net.observed[observer]:
        src = relay_source(v)
        if src not in expected:
            raise ValueError(f"no designated action for {src!r}")
        for t in range(query):
            entries[(v, t)] = expected[src] if t >= times[v] else idle_action(model)
    return ObservationHistory(observer, entries), query


def host_network(targets: Sequence[Target]) -> Network:
    seen = {}
    for t, d in targets:
        seen.setdefault(t, d)
    return Network(tuple(Agent(t, d) for t, d in seen.items()))


def assemble(host: Network, gadgets: Sequence[GadgetInstance], observer: str = "OBS"):
    """Host plus gadgets plus an observer of all designated agents."""
    b = NetworkBuilder()
    for a in host.agents:
        b.add_agent(a.id, a.signal)
    for u, v in host.edges:
        b.observe(u, v)
    b.add_agent(observer)
    expected: dict[str, Action] = {}
    for g in gadgets:
        b.merge(g.sub_network)
        expected.update(g.expected_actions)
    for a in expected:
        b.observe(observer, a)
    return b.build(observer), expected


@dataclass
class ClaimReport:
    entries: list[tuple[str, bool, str]] = field(default_factory=list)

    def add(self, name: str, ok: bool, detail: str = "") -> None:
        self.entries.append((name, bool(ok), detail))

    @property
    def ok(self) -> bool:
        return all(ok for _, ok, _ in self.entries)

    def failures(self) -> list[str]:
        return [f"{n}: {d}" if d else n for n, ok, d in self.entries if not ok]

    def __str__(self) -> str:
        return "\n".join(f"{'PASS' if ok else 'FAIL'} {n}" + (f" ({d})" if d else "")
                         for n, ok, d in self.entries)


def check_gadget_claim(g: GadgetInstance, host: Optional[Network] = None,
                       cap: int = 1 << 22) -> ClaimReport:
    """Verify a gadget's claims by exhaustive enumeration with the engine."""
    report = ClaimReport()
    for sep, dists in g.separators:
        products = set(achievable_products(dists).values())
        report.add("strict separation", sep.ratio_threshold not in products,
                   "" if sep.ratio_threshold not in products else
                   f"non-strict separation at {sep.ratio_threshold}")
    host = host or host_network(g.targets)
    net, expected = assemble(host, [g])
    hist, query = designated_history(net, "OBS", expected, g.model)
    eng = Engine(net, g.model, cap)
    cone, mask = consistent_configurations(net, hist, query, g.model, cap, engine=eng)
    space: SignalSpace = eng.space
    aux = set(g.aux_ids)
    target_ids = [t for t, _ in g.targets]
    others = [a for a in space.ids if a not in aux]

    consistent: dict[tuple, list[int]] = {}
    for c in map(int, mask.nonzero()[0]):
        sig = decode(space, cone, c)
        consistent.setdefault(tuple(sig[a] for a in others), []).append(c)

    if g.semantics is not None:
        expected_set = set()
        sub = NetworkBuilder()
        for a in host.agents:
            sub.add_agent(a.id, a.signal)
        host_space = SignalSpace(sub.raw_network())
        for config in itertools.product(*host_space.values):
            sig = dict(zip(host_space.ids, config))
            if g.semantics({t: sig[t] for t in target_ids}):
                expected_set.add(tuple(sig[a] for a in others))
        got = set(consistent)
        report.add("consistent configurations match semantics", got == expected_set,
                   "" if got == expected_set else
                   f"extra {sorted(got - expected_set)[:3]}, missing {sorted(expected_set - got)[:3]}")

    multi = [k for k, v in consistent.items() if len(v) != 1]
    report.add("unique auxiliary extension", not multi,
               "" if not multi else f"{len(multi)} configurations extend in several ways")

    if g.equalization_scope is not None and consistent:
        values = set()
        for cs in consistent.values():
            for c in cs:
                sig = decode(space, cone, c)
                for theta in (True, False):
                    w = Fraction(1)
                    for a, s in sig.items():
                        if g.equalization_scope == "full" or a in aux:
                            w *= net.agent(a).signal.prob(s, theta)
                    values.add(w)
        ok = len(values) == 1
        if ok and g.equalization_factor is not None:
            ok = values == {g.equalization_factor}
        report.add("state-independent weight factor", ok,
                   "" if ok else f"{len(values)} distinct factors")
    return report


def surviving_target_configs(g: GadgetInstance, host: Optional[Network] = None,
                             cap: int = 1 << 22) -> set[tuple[int, ...]]:
    """Target signal tuples (in ``g.targets`` order) left by the observer's history."""
    host = host or host_network(g.targets)
    net, expected = assemble(host, [g])
    hist, query = designated_history(net, "OBS", expected, g.model)
    eng = Engine(net, g.model, cap)
    cone, mask = consistent_configurations(net, hist, query, g.model, cap, engine=eng)
    out = set()
    for c in map(int, mask.nonzero()[0]):
        sig = decode(eng.space, cone, c)
        out.add(tuple(sig[t] for t, _ in g.targets))
    return out


# ---------------------------------------------------------------------------
# Parameterized corpus for the claim suite
# ---------------------------------------------------------------------------

SUITE_DISTRIBUTIONS = (
    SignalDistribution.binary(Fraction(3, 4), Fraction(1, 4)),
    SignalDistribution.binary(Fraction(9, 10), Fraction(2, 5)),
    SignalDistribution.binary(Fraction(2, 3), Fraction(1, 2)),
)


def gadget_suite() -> list[tuple[str, GadgetInstance]]:
    """Deterministic family of gadgets with at most four targets each."""
    out: list[tuple[str, GadgetInstance]] = []
    dists = SUITE_DISTRIBUTIONS
    for di, d in enumerate(dists):
        for K in (1, 2, 3):
            targets = [(f"v{j}", d) for j in range(1, K + 1)]
            products = sorted(set(achievable_products([d] * K).values()))
            for lo, hi in zip(products, products[1:]):
                for direction in (GREATER, LESS):
                    sep = SeparatorChoice((lo + hi) / 2, direction)
                    out.append((f"threshold d{di} K={K} R={sep.ratio_threshold} {direction}",
                                build_threshold(targets, sep, name="thr")))
    mixed = [(f"v{j}", dists[j % 3]) for j in range(1, 5)]
    products = sorted(set(achievable_products([d for _, d in mixed]).values()))
    for lo, hi in list(zip(products, products[1:]))[::3]:
        out.append((f"threshold mixed K=4 R={(lo + hi) / 2}",
                    build_threshold(mixed, SeparatorChoice((lo + hi) / 2, GREATER), name="thr")))
    for di, d in enumerate(dists[:2]):
        for K in (2, 3, 4):
            targets = [(f"v{j}", d) for j in range(1, K + 1)]
            for k in range(K + 1):
                for mode in ("exactly", "at_least", "at_most"):
                    if (mode == "at_least" and k == 0) or (mode == "at_most" and k == K):
                        continue
                    eq = mode == "exactly"
                    out.append((f"counting d{di} K={K} k={k} {mode}",
                                build_counting(targets, k, mode, eq, name="cnt")))
    for i, du in enumerate(dists):
        for j, dv in enumerate(dists):
            out.append((f"not-equal d{i},d{j}", build_not_equal(("u", du), ("v", dv), name="ne")))
    e = dists[1]
    for width in (1, 2, 3):
        lits = [f"l{j}" for j in range(1, width + 1)]
        out.append((f"clause width {width}", build_clause(lits, "EVAL", e, name="cl")))
    out.append(("variable", build_variable("x", "nx", e, name="var")))
    rb = RB_DISTRIBUTION
    out.append(("belief variable", build_rb_gadget("variable", {"pos": "x", "neg": "nx", "dist": rb})))
    out.append(("belief clause", build_rb_gadget("clause", {"literals": ["x", "y"], "eval": "EVAL", "dist": rb})))
    out.append(("belief E neutralizer", build_rb_gadget("neutralizer_E", {"e": "E", "dist": E_DISTRIBUTION})))
    out.append(("belief EVAL neutralizer", build_rb_gadget("neutralizer_EVAL", {"eval": "EVAL", "dist": rb})))
    for b in (1, 2, 3):
        out.append((f"belief amplifier b={b}",
                    build_rb_gadget("amplifier", {"eval": "EVAL", "dist": rb, "b": b})))
    return out


def run_gadget_suite(cap: int = 1 << 22) -> list[tuple[str, ClaimReport]]:
    return [(label, check_gadget_claim(g, cap=cap)) for label, g in gadget_suite()]
