"""Compilers from 3SAT and TQBF to binary-action networks, and their analysis.

The 3SAT network hides a variable assignment in the signals of literal agents.
An evaluation agent EVAL together with agents A and B (or, in bounded mode,
two couplers) multiplies the weight of every consistent configuration by a
factor that depends only on whether EVAL received 1 and on the state. The
observer's posterior then separates satisfiable from unsatisfiable formulas.

The TQBF network stacks one stage per quantifier block. Stage ``i`` ties a
new pair of agents to the action of the previous stage's observer and flips
the relative weights of the two states; its observer stops looking at the
variables of block ``i``.

Analytic calculators evaluate the compiled observer's posterior in closed
form from the per-configuration factors; they are checked against the engine
on instances small enough to enumerate.
"""

from __future__ import annotations

import decimal
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Union

from ..core.engine import Engine, history_factors
from ..core.elimination import masked_weights
from ..core.structure import relay_source, significant_times
from ..core.types import CapExceeded, Model, ObservationHistory, SignalDistribution
from ..gadgets import (
    DEFAULT_ETA,
    F_DISTRIBUTION,
    GREATER,
    LESS,
    SIMPLEST,
    CouplerParams,
    SeparatorChoice,
    SeparatorPool,
    build_bounded_coupler,
    build_clause,
    build_modified_not_equal,
    build_not_equal,
    build_variable,
    idle_action,
    rational_root_between,
    ratios,
    solve_coupler,
)
from .formula import QBF, Formula
from .instance import Assembly, CompiledInstance

EVAL_DISTRIBUTION = SignalDistribution.binary(Fraction(9, 10), Fraction(2, 5))
BASE_ALPHAS = (Fraction(2, 5), Fraction(3, 5), Fraction(9, 10), Fraction(3, 5))
EVEN_ALPHAS = (Fraction(2, 5), Fraction(9, 10), Fraction(9, 10), Fraction(2, 5))
ODD_ALPHAS = (Fraction(9, 10), Fraction(2, 5), Fraction(2, 5), Fraction(9, 10))
DEFAULT_B = 20
REGISTRY_LIMIT = 50
ANALYTIC_CAP = 24


@dataclass(frozen=True)
class ReductionParams:
    b: int = DEFAULT_B
    alphas: tuple = BASE_ALPHAS
    bounded_mode: bool = False
    eps_bounded: Fraction = Fraction(1, 100)
    observer_id: str = "OBS"
    eta: Fraction = DEFAULT_ETA

    def __post_init__(self):
        if self.b < 1:
            raise ValueError("b must be at least 1")
        object.__setattr__(self, "alphas", tuple(Fraction(a) for a in self.alphas))
        object.__setattr__(self, "eps_bounded", Fraction(self.eps_bounded))
        if len(self.alphas) != 4 or not all(0 < a < 1 for a in self.alphas):
            raise ValueError("alphas must be four values in (0, 1)")

    def stage_alphas(self, stage: int) -> tuple:
        if stage == 1:
            return self.alphas
        return EVEN_ALPHAS if stage % 2 == 0 else ODD_ALPHAS


def literal_id(var: int, positive: bool) -> str:
    return f"x{var}" if positive else f"nx{var}"


def amplifier_distributions(alphas, b: int) -> tuple[SignalDistribution, SignalDistribution]:
    a1, a2, a3, a4 = (a ** b for a in alphas)
    if not (1 - a1 > a2 and 1 - a3 > a4):
        raise ValueError(f"b={b} is too small: the amplifying agents would not favour T on signal 1")
    return SignalDistribution.binary(1 - a1, a2), SignalDistribution.binary(1 - a3, a4)


class StageFactors:
    """Per-stage weight factor of the amplifying agents.

    ``factor(stage, upstream, theta)``: ``upstream`` is S(EVAL) = 1 in the
    base stage, or the previous observer's action T in later stages.
    """

    def __init__(self, params: ReductionParams):
        self.params = params
        self._couplers: dict[tuple, CouplerParams] = {}

    def couplers(self, stage: int) -> tuple[CouplerParams, CouplerParams]:
        a1, a2, a3, a4 = self.params.stage_alphas(stage)
        out = []
        for x, y in ((a1, a2), (a3, a4)):
            key = (x, y)
            if key not in self._couplers:
                self._couplers[key] = solve_coupler(x, y, self.params.eps_bounded, self.params.eta)
            out.append(self._couplers[key])
        return out[0], out[1]

    def factor(self, stage: int, upstream: bool, theta: bool) -> Fraction:
        b = self.params.b
        if self.params.bounded_mode:
            cpa, cpb = self.couplers(stage)
            s_a = 0 if upstream else 1
            return cpa.triple_weight(s_a, theta) ** b * cpb.triple_weight(1 - s_a, theta) ** b
        a1, a2, a3, a4 = (a ** b for a in self.params.stage_alphas(stage))
        if upstream:
            return a1 * (1 - a3) if theta else (1 - a2) * a4
        return (1 - a1) * a3 if theta else a2 * (1 - a4)

    def base_weights(self, satisfied: bool, theta: bool) -> Fraction:
        """Weight (up to a common factor) of an assignment's consistent configurations."""
        w = EVAL_DISTRIBUTION.prob(1, theta) * self.factor(1, True, theta)
        if satisfied:
            w += EVAL_DISTRIBUTION.prob(0, theta) * self.factor(1, False, theta)
        return w


# ---------------------------------------------------------------------------
# Network construction
# ---------------------------------------------------------------------------

def _validate_cnf(phi: Formula) -> None:
    phi.check_width(1, 3)


def _sat_core(asm: Assembly, phi: Formula, params: ReductionParams, pool: SeparatorPool,
              factors: StageFactors) -> tuple[list[str], dict]:
    """Literal agents, variable and clause gadgets, EVAL and the amplifier.

    Returns the ids the first observer must watch and bookkeeping values.
    """
    watched: list[str] = []
    for i in range(1, phi.num_vars + 1):
        asm.agent(literal_id(i, True), EVAL_DISTRIBUTION, "literal", f"x{i}")
        asm.agent(literal_id(i, False), EVAL_DISTRIBUTION, "literal", f"x{i}")
    asm.agent("EVAL", EVAL_DISTRIBUTION, "eval", "")
    for i in range(1, phi.num_vars + 1):
        g = asm.gadget(build_variable(literal_id(i, True), literal_id(i, False), EVAL_DISTRIBUTION,
                                      name=f"var{i}", pool=pool), f"x{i}")
        watched += list(g.expected_actions)
    for j, clause in enumerate(phi.clauses, 1):
        g = asm.gadget(build_clause([literal_id(v, p) for v, p in clause], "EVAL", EVAL_DISTRIBUTION,
                                    name=f"cl{j}", variables=[v for v, _ in clause], pool=pool), f"C{j}")
        watched += list(g.expected_actions)
    info: dict = {}
    if params.bounded_mode:
        cpa, cpb = factors.couplers(1)
        ga = asm.gadget(build_bounded_coupler("EVAL", cpa.alpha1, cpa.alpha2, params.b, params.eps_bounded,
                                              name="cplA", link=EVAL_DISTRIBUTION, pool=pool, params=cpa),
                        "amplifier")
        gb = asm.gadget(build_bounded_coupler(ga.interface_ids["anchor"], cpb.alpha1, cpb.alpha2, params.b,
                                              params.eps_bounded, name="cplB", link=F_DISTRIBUTION,
                                              pool=pool, params=cpb), "amplifier")
        watched += list(ga.expected_actions) + list(gb.expected_actions)
        info["couplers"] = [cpa, cpb]
    else:
        da, db = amplifier_distributions(params.alphas, params.b)
        asm.agent("A", da, "amplifier", "A")
        asm.agent("B", db, "amplifier", "B")
        for g in (build_not_equal(("EVAL", EVAL_DISTRIBUTION), ("A", da), name="ne_eval_a", pool=pool),
                  build_not_equal(("A", da), ("B", db), name="ne_a_b", pool=pool)):
            asm.gadget(g, "amplifier")
            watched += list(g.expected_actions)
    return watched, info


def _finish_checks(inst: CompiledInstance, params: ReductionParams, couplers: list[CouplerParams],
                   num_vars: int) -> CompiledInstance:
    if params.bounded_mode:
        count = len(inst.distributions())
        if count > REGISTRY_LIMIT:
            raise ValueError(f"registry overflow: {count} distinct distributions (limit {REGISTRY_LIMIT})")
        eta_total = sum((params.b * c.eta for c in couplers), Fraction(0))
        slack = Fraction(1, 200 * max(num_vars, 1))
        if eta_total > slack:
            raise ValueError(f"accumulated coupler residual {float(eta_total):.3g} exceeds slack {float(slack):.3g}")
        inst.metadata.update(registry_size=str(count), eta_total=str(eta_total), eta_slack=str(slack))
    return inst


def reduce_3sat(phi: Formula, params: ReductionParams = ReductionParams()) -> CompiledInstance:
    """Network whose observer at time 2 decides satisfiability of ``phi``."""
    _validate_cnf(phi)
    asm = Assembly()
    pool = SeparatorPool(SIMPLEST)
    factors = StageFactors(params)
    obs = params.observer_id
    watched, info = _sat_core(asm, phi, params, pool, factors)
    asm.agent(obs, None, "observer", "")
    asm.observe(obs, watched)
    inst = asm.finish(obs, Model.BINARY, {
        "source": "3sat" if not params.bounded_mode else "3sat-bounded",
        "b": params.b, "num_vars": phi.num_vars, "num_clauses": phi.num_clauses,
    })
    if inst.query_time != 2:
        raise AssertionError(f"observer significant time {inst.query_time}, expected 2")
    return _finish_checks(inst, params, info.get("couplers", []), phi.num_vars)


# ---------------------------------------------------------------------------
# Analytic posteriors
# ---------------------------------------------------------------------------

def count_satisfying(phi: Formula, cap: int = ANALYTIC_CAP) -> int:
    if phi.num_vars > cap:
        raise CapExceeded(f"{phi.num_vars} variables exceed the analytic cap {cap}")
    n = 0
    for mask in range(1 << phi.num_vars):
        assignment = [bool(mask >> i & 1) for i in range(phi.num_vars)]
        if phi.satisfied_by(assignment):
            n += 1
    return n


def analytic_posterior_3sat(phi: Formula, params: ReductionParams = ReductionParams(),
                            cap: int = ANALYTIC_CAP) -> tuple[Fraction, bool]:
    """Exact belief of the compiled observer at time 2 and its action."""
    n_sat = count_satisfying(phi, cap)
    f = StageFactors(params)
    total = 1 << phi.num_vars
    w = {}
    for theta in (True, False):
        w[theta] = (total - n_sat) * f.base_weights(False, theta) + n_sat * f.base_weights(True, theta)
    mu = w[True] / (w[True] + w[False])
    return mu, mu > Fraction(1, 2)


def _bound_pairs(n: int, b: int, num) -> dict[str, list[tuple]]:
    """Each analysis step as a list of ``(smaller, larger)`` pairs.

    ``num`` maps a Fraction into the arithmetic used for the comparison.
    """
    a1, a2, a3, a4 = (num(a) ** b for a in BASE_ALPHAS)
    e = EVAL_DISTRIBUTION
    p1t = num(e.prob(1, True)) * a1 * (1 - a3)
    p1f = num(e.prob(1, False)) * (1 - a2) * a4
    p0t = num(e.prob(0, True)) * (1 - a1) * a3
    p0f = num(e.prob(0, False)) * a2 * (1 - a4)
    lo1, hi1 = (1 - num(Fraction(1, 200 * n))) ** b, (1 + num(Fraction(1, 200 * n))) ** b
    lo2, hi2 = (1 - num(Fraction(1, 100 * n))) ** b, (1 + num(Fraction(1, 100 * n))) ** b

    def near(value, base, lo, hi):
        return [(lo * base, value), (value, hi * base)]

    def c(x):
        return num(Fraction(x, 100)) ** b

    t9, t6, t4 = (num(Fraction(x, 10)) ** b for x in (9, 6, 4))
    return {
        "EVAL=1 weight under T": near(p1t, a1, lo1, hi1),
        "EVAL=1 weight under F": near(p1f, a4, lo1, hi1),
        "EVAL=0 weight under T": near(p0t, a3, lo1, hi1),
        "EVAL=0 weight under F": near(p0f, a2, lo1, hi1),
        "satisfying assignment under T": near(p1t + p0t, t9, lo2, hi2),
        "satisfying assignment under F": near(p1f + p0f, t6, lo2, hi2),
        "unsatisfying assignment under T": near(p1t, t4, lo2, hi2),
        "unsatisfying assignment under F": near(p1f, t6, lo2, hi2),
        "false-state weight at most 0.61^b": [(t6 * hi2, c(61))],
        "witness true-state weight at least 0.89^b": [(c(89), t9 * lo2)],
        "satisfiable upper bound 0.69^b": [((1 << n) * c(61), c(69) * c(89))],
        "witness false-state weight at least 0.59^b": [(c(59), t6 * lo2)],
        "true-state weight at most 0.91^b": [(t9 * hi2, c(91)), (t6 * hi2, c(91))],
        "satisfiable lower bound 0.64^b": [((1 << (n + 1)) * c(91) * c(64), c(59))],
        "unsatisfiable upper bound 0.69^b": [(t4 * hi2, c(69) * t6 * lo2)],
        "unsatisfiable lower bound 0.64^b": [(c(64) * (t4 + t6) * hi2, t4 * lo2)],
    }


def bound_checks(n: int, b: int) -> dict[str, bool]:
    """Every approximation step of the 3SAT analysis as an exact inequality.

    Uses the default amplifier parameters. Weights are taken up to the common
    factor of the gadgets' auxiliary signals.
    """
    if n < 1 or b < 1:
        raise ValueError("need n >= 1 and b >= 1")
    pairs = _bound_pairs(n, b, Fraction)
    return {k: all(x <= y for x, y in v) for k, v in pairs.items()}


_DEC = decimal.Context(prec=60, Emin=-10 ** 9, Emax=10 ** 9)


def _to_decimal(x: Fraction) -> decimal.Decimal:
    return _DEC.divide(decimal.Decimal(x.numerator), decimal.Decimal(x.denominator))


def _clearly_fails(n: int, b: int) -> bool:
    """Cheap screen: some step fails by a relative margin far above rounding error."""
    with decimal.localcontext(_DEC):
        pairs = _bound_pairs(n, b, _to_decimal)
        margin = decimal.Decimal(1) + decimal.Decimal(10) ** -30
        return any(x > y * margin for v in pairs.values() for x, y in v)


def choose_b(n: int, limit: int = 1 << 20) -> int:
    """Smallest b for which every step of the 3SAT analysis holds exactly.

    Exponents that fail by a wide margin in 60-digit arithmetic are skipped;
    every remaining candidate is decided with exact rationals.
    """
    if n < 1:
        raise ValueError("need at least one variable")
    for b in range(1, limit + 1):
        if _clearly_fails(n, b):
            continue
        if all(bound_checks(n, b).values()):
            return b
    raise RuntimeError("no amplification exponent found below the search limit")


# ---------------------------------------------------------------------------
# TQBF
# ---------------------------------------------------------------------------

class TQBFAnalysis:
    """Exact stage weights of the TQBF network, summed over hidden blocks.

    ``weights(i, prefix)`` returns ``(W_T, W_F)``: the total weight, up to a
    common factor, of configurations consistent with the stage-``i`` observer
    whose outer blocks ``K..i+1`` carry ``prefix`` (a bitmask over variables).
    """

    def __init__(self, qbf: QBF, params: ReductionParams = ReductionParams(), cap: int = ANALYTIC_CAP):
        if qbf.matrix.num_vars > cap:
            raise CapExceeded(f"{qbf.matrix.num_vars} variables exceed the analytic cap {cap}")
        self.qbf = qbf
        self.params = params
        self.factors = StageFactors(params)
        self.K = qbf.num_blocks
        self._weights = lru_cache(maxsize=None)(self._compute)

    def block_masks(self, i: int) -> list[int]:
        """All assignments of block ``i`` as variable bitmasks."""
        vs = self.qbf.block(i)[1]
        out = []
        for m in range(1 << len(vs)):
            out.append(sum(1 << (v - 1) for j, v in enumerate(vs) if m >> j & 1))
        return out

    def satisfied(self, mask: int) -> bool:
        n = self.qbf.matrix.num_vars
        return self.qbf.matrix.satisfied_by([bool(mask >> i & 1) for i in range(n)])

    def weights(self, i: int, prefix: int) -> tuple[Fraction, Fraction]:
        return self._weights(i, prefix)

    def _compute(self, i: int, prefix: int) -> tuple[Fraction, Fraction]:
        wt = wf = Fraction(0)
        f = self.factors
        for y in self.block_masks(i):
            if i == 1:
                sat = self.satisfied(prefix | y)
                wt += f.base_weights(sat, True)
                wf += f.base_weights(sat, False)
            else:
                lt, lf = self.weights(i - 1, prefix | y)
                up = lt > lf
                wt += lt * f.factor(i, up, True)
                wf += lf * f.factor(i, up, False)
        return wt, wf

    def action(self, i: int, prefix: int) -> bool:
        wt, wf = self.weights(i, prefix)
        return wt > wf

    def prefixes(self, i: int) -> list[int]:
        """Assignments of blocks ``K..i+1`` (outside stage ``i``'s view)."""
        masks = [0]
        for j in range(self.K, i, -1):
            masks = [m | y for m in masks for y in self.block_masks(j)]
        return masks

    def m_ratios(self, i: int, prefix: int) -> tuple[Optional[Fraction], Optional[Fraction]]:
        """Likelihood ratio of the stage-``i`` summing agent from the earlier stages.

        Groups the assignments of block ``i`` by the previous observer's action;
        None marks an action that never occurs under ``prefix``.
        """
        sums = {True: [Fraction(0), Fraction(0)], False: [Fraction(0), Fraction(0)]}
        seen = {True: False, False: False}
        for y in self.block_masks(i):
            lt, lf = self.weights(i - 1, prefix | y)
            a = lt > lf
            seen[a] = True
            sums[a][0] += lt
            sums[a][1] += lf
        out = []
        for a in (True, False):
            out.append(sums[a][0] / sums[a][1] if seen[a] else None)
        return out[0], out[1]

    def posterior(self) -> Fraction:
        wt, wf = self.weights(self.K, 0)
        return wt / (wt + wf)


def compute_block_ratios(qbf: QBF, params: ReductionParams, stage: int, fixed_prefix: dict[int, bool],
                         cap: int = ANALYTIC_CAP) -> tuple[Optional[Fraction], Optional[Fraction]]:
    """Exact ``(m_T, m_F)`` seen by stage ``stage``'s summing agents under a prefix.

    ``fixed_prefix`` assigns every variable of blocks ``K..stage+1``.
    """
    an = TQBFAnalysis(qbf, params, cap)
    outer = {v for j in range(an.K, stage, -1) for v in qbf.block(j)[1]}
    if set(fixed_prefix) != outer:
        raise ValueError("prefix must assign exactly the variables of the outer blocks")
    mask = sum(1 << (v - 1) for v, val in fixed_prefix.items() if val)
    return an.m_ratios(stage, mask)


def analytic_posterior_tqbf(qbf: QBF, params: ReductionParams = ReductionParams(),
                            cap: int = ANALYTIC_CAP) -> tuple[Fraction, bool]:
    mu = TQBFAnalysis(qbf, params, cap).posterior()
    return mu, mu > Fraction(1, 2)


def stage_products(an: TQBFAnalysis, stage: int, side_ratio) -> dict[tuple[bool, bool], list[Fraction]]:
    """Ratios of a stage's summing agent before its compensating signals.

    Keys are (previous observer's action, anchor's signal == 1); values list
    one product per prefix where that combination occurs.
    """
    out: dict[tuple[bool, bool], list[Fraction]] = {}
    for prefix in an.prefixes(stage):
        m_t, m_f = an.m_ratios(stage, prefix)
        for up, m in ((True, m_t), (False, m_f)):
            if m is None:
                continue
            for s in (0, 1):
                out.setdefault((up, bool(s)), []).append(m * side_ratio(s))
    return out


def separator_bounds(products: dict[tuple[bool, bool], list[Fraction]]):
    """Open intervals for the large and small separators of a stage.

    The large one must lie above every product except the both-T ones; the
    small one below every product except the both-F ones.
    """
    def bound(values, f):
        return f(values) if values else None

    tt = products.get((True, True), [])
    ff = products.get((False, False), [])
    not_tt = [p for k, v in products.items() if k != (True, True) for p in v]
    not_ff = [p for k, v in products.items() if k != (False, False) for p in v]
    large = (bound(not_tt, max), bound(tt, min))
    small = (bound(ff, max), bound(not_ff, min))
    for lo, hi in (large, small):
        if lo is not None and hi is not None and not lo < hi:
            raise ValueError("no separator exists: the previous observer's ratios do not separate")
    return large, small


def reduce_tqbf(qbf: QBF, params: ReductionParams = ReductionParams(),
                cap: int = ANALYTIC_CAP) -> CompiledInstance:
    """Network whose last observer at time ``2K`` decides the QBF."""
    _validate_cnf(qbf.matrix)
    an = TQBFAnalysis(qbf, params, cap)
    K = an.K
    asm = Assembly()
    pool = SeparatorPool(SIMPLEST)
    rhos: list[Fraction] = []
    couplers: list[CouplerParams] = []
    base, info = _sat_core(asm, qbf.matrix, params, pool, an.factors)
    couplers += info.get("couplers", [])

    def block_agents(i):
        return [literal_id(v, p) for v in qbf.block(i)[1] for p in (True, False)]

    watched = list(base) + [a for j in range(K, 1, -1) for a in block_agents(j)]
    obs = "OBS1" if K > 1 else params.observer_id
    asm.agent(obs, None, "observer", "stage 1")
    asm.observe(obs, watched)
    prev = obs
    for i in range(2, K + 1):
        block = block_agents(i)
        context = list(watched)
        watched = [a for a in watched if a not in set(block)]
        a1, a2, a3, a4 = params.stage_alphas(i)
        new: list[str] = []
        if params.bounded_mode:
            cpa, cpb = an.factors.couplers(i)
            couplers += [cpa, cpb]
            b = params.b

            def side(s, cpa=cpa):
                return F_DISTRIBUTION.ratio(s) * F_DISTRIBUTION.ratio(1 - s) * cpa.triple_ratio(s) ** b

            large, small = separator_bounds(stage_products(an, i, side))
            rho_l = rational_root_between(*large, b, candidates=rhos)
            rho_s = rational_root_between(*small, b, candidates=rhos + [rho_l])
            rhos += [r for r in (rho_l, rho_s) if r not in rhos]
            ga = asm.gadget(build_bounded_coupler(
                prev, a1, a2, b, params.eps_bounded, name=f"cplA{i}", pool=pool, params=cpa,
                modified={"context": context, "block": block, "rho_large": rho_l, "rho_small": rho_s}),
                f"stage {i}")
            gb = asm.gadget(build_bounded_coupler(
                ga.interface_ids["anchor"], a3, a4, b, params.eps_bounded, name=f"cplB{i}",
                link=F_DISTRIBUTION, pool=pool, params=cpb), f"stage {i}")
            new += list(ga.expected_actions) + list(gb.expected_actions)
        else:
            da, db = amplifier_distributions((a1, a2, a3, a4), params.b)
            ai, bi = asm.agent(f"A{i}", da, "amplifier", f"stage {i}"), asm.agent(f"B{i}", db, "amplifier", f"stage {i}")
            r0, r1 = ratios(da)
            large, small = separator_bounds(stage_products(an, i, lambda s: (r0, r1)[s]))
            mne = build_modified_not_equal(
                prev, (ai, da), block, SeparatorChoice(pool.pick(*large), LESS),
                SeparatorChoice(pool.pick(*small), GREATER), context, name=f"mne{i}")
            asm.gadget(mne, f"stage {i}")
            ne = asm.gadget(build_not_equal((ai, da), (bi, db), name=f"ne{i}", pool=pool), f"stage {i}")
            new += list(mne.expected_actions) + list(ne.expected_actions)
        watched += new
        obs = f"OBS{i}" if i < K else params.observer_id
        asm.agent(obs, None, "observer", f"stage {i}")
        asm.observe(obs, watched)
        prev = obs
    inst = asm.finish(prev, Model.BINARY, {
        "source": "tqbf" if not params.bounded_mode else "tqbf-bounded",
        "b": params.b, "num_vars": qbf.matrix.num_vars, "num_clauses": qbf.matrix.num_clauses,
        "num_blocks": K,
    })
    if inst.query_time != 2 * K:
        raise AssertionError(f"observer significant time {inst.query_time}, expected {2 * K}")
    return _finish_checks(inst, params, couplers, qbf.matrix.num_vars)


def reduce_bounded(source: Union[Formula, QBF], params: ReductionParams = ReductionParams()) -> CompiledInstance:
    """Same reductions using a fixed family of signal distributions."""
    if not params.bounded_mode:
        params = ReductionParams(params.b, params.alphas, True, params.eps_bounded,
                                 params.observer_id, params.eta)
    if isinstance(source, QBF):
        return reduce_tqbf(source, params)
    return reduce_3sat(source, params)


# ---------------------------------------------------------------------------
# Engine-side evaluation of compiled instances
# ---------------------------------------------------------------------------

def designated_actions(inst: CompiledInstance) -> dict[str, object]:
    """The designated action of every agent the final observer watches."""
    last = inst.query_time - 1
    return {relay_source(v): a for (v, t), a in inst.expected_history.entries.items() if t == last}


def observer_history(inst: CompiledInstance, observer: str, signals: dict[str, int],
                     engine: Optional[Engine] = None) -> tuple[ObservationHistory, int]:
    """History of an intermediate observer: designated gadget actions plus
    the actions of the literal agents it watches, which reveal ``signals``."""
    net = inst.network
    times = significant_times(net)
    query = times[observer]
    expected = designated_actions(inst)
    entries = {}
    for v in net.observed[observer]:
        src = relay_source(v)
        for t in range(query):
            if t < times[v]:
                entries[(v, t)] = idle_action(inst.model)
            elif src in signals:
                entries[(v, t)] = bool(signals[src])
            else:
                entries[(v, t)] = expected[src]
    return ObservationHistory(observer, entries), query


def engine_observer_weights(inst: CompiledInstance, observer: str, signals: dict[str, int],
                            engine: Optional[Engine] = None, cap: int = 1 << 24) -> tuple[int, int]:
    """Scaled (W_T, W_F) of the configurations an observer finds consistent."""
    eng = engine or Engine(inst.network, inst.model, cap)
    hist, query = observer_history(inst, observer, signals)
    factors = history_factors(eng, hist, query)
    return masked_weights(eng.space, factors, None, cap=cap)


def engine_block_ratios(inst: CompiledInstance, qbf: QBF, stage: int,
                        cap: int = 1 << 24) -> dict[int, tuple[Optional[Fraction], Optional[Fraction]]]:
    """``(m_T, m_F)`` per prefix, computed by the engine from the previous observer.

    For every assignment of blocks ``K..stage`` the engine weighs the
    configurations consistent with that observer's designated history; the
    weights are then grouped by the observer's resulting action.
    """
    K = qbf.num_blocks
    if not 2 <= stage <= K:
        raise ValueError(f"stage must lie in 2..{K}")
    prev = f"OBS{stage - 1}"
    eng = Engine(inst.network, inst.model, cap)
    an = TQBFAnalysis(qbf, ReductionParams())
    out = {}
    for prefix in an.prefixes(stage):
        sums = {True: [0, 0], False: [0, 0]}
        seen = {True: False, False: False}
        for y in an.block_masks(stage):
            mask = prefix | y
            signals = {}
            for j in range(K, stage - 1, -1):
                for v in qbf.block(j)[1]:
                    bit = mask >> (v - 1) & 1
                    signals[literal_id(v, True)] = bit
                    signals[literal_id(v, False)] = 1 - bit
            wt, wf = engine_observer_weights(inst, prev, signals, eng, cap)
            a = wt > wf
            seen[a] = True
            sums[a][0] += wt
            sums[a][1] += wf
        out[prefix] = tuple(Fraction(sums[a][0], sums[a][1]) if seen[a] else None for a in (True, False))
    return out


def check_modified_not_equal(inst: CompiledInstance, qbf: QBF, params: ReductionParams, stage: int,
                             cap: int = 1 << 24) -> list[str]:
    """Problems with stage ``stage``'s modified not-equal gadget (empty when sound).

    Compares the engine's m-ratios with the analytic ones, then checks that
    with the compiled separators each summing agent takes its designated
    action exactly when the previous observer's action differs from A_i's signal.
    """
    if params.bounded_mode:
        raise ValueError("engine check is provided for the unbounded construction")
    problems = []
    an = TQBFAnalysis(qbf, params)
    engine_m = engine_block_ratios(inst, qbf, stage, cap)
    by_id = inst.network.by_id
    da = by_id[f"A{stage}"].signal
    designated = designated_actions(inst)
    comp = {}
    for tag in ("large", "small"):
        t1 = f"mne{stage}.{tag}.T1"
        comp[tag] = by_id[t1].signal.ratio(int(designated[t1])) if t1 in by_id else Fraction(1)
    for prefix, pair in engine_m.items():
        if pair != an.m_ratios(stage, prefix):
            problems.append(f"prefix {prefix:#x}: engine m-ratios {pair} differ from analytic")
        for up, m in zip((True, False), pair):
            if m is None:
                continue
            for s in (0, 1):
                belief = m * da.ratio(s)
                differ = up != bool(s)
                # large agent: designated F, rules out both T
                large_ok = (belief * comp["large"] <= 1) == (differ or not up)
                small_ok = (belief * comp["small"] > 1) == (differ or up)
                if not (large_ok and small_ok):
                    problems.append(f"prefix {prefix:#x}, action {up}, A signal {s}: separator fails")
    return problems


def check_sat_claim(inst: CompiledInstance, phi: Formula, params: ReductionParams = ReductionParams(),
                    cap: int = 1 << 24):
    """Exhaustive check of the consistent configurations of a compiled 3SAT instance.

    By variable elimination over the observer's history: every assignment
    with S(EVAL)=1, S(A)=0, S(B)=1 and every satisfying assignment with
    S(EVAL)=0, S(A)=1, S(B)=0 must extend to exactly one consistent
    configuration, nothing else may, and the configuration weights must be
    proportional to the closed-form products.
    """
    from ..core.elimination import THETA, eliminate, mask_factor, weight_factor
    from ..gadgets import ClaimReport

    if params.bounded_mode:
        raise ValueError("the claim check covers the unbounded construction")
    report = ClaimReport()
    eng = Engine(inst.network, inst.model, cap)
    space = eng.space
    masks = history_factors(eng, inst.expected_history, inst.query_time)
    n = phi.num_vars
    key_ids = [literal_id(i, p) for i in range(1, n + 1) for p in (True, False)] + ["EVAL", "A", "B"]
    key = [space.pos[a] for a in key_ids]
    factors = [mask_factor(c, m) for c, m in masks]
    variables = sorted({v for f in factors for v in f.scope} | set(key))
    counts = eliminate(space, factors + [weight_factor(space, i, unit=True) for i in variables], key, cap)
    weights = eliminate(space, factors + [weight_factor(space, i) for i in variables], key, cap)

    def table(f):
        order = [f.scope.index(THETA)] + [f.scope.index(k) for k in key]
        return f.table.transpose(order)

    count_t, weight_t = table(counts), table(weights)
    digit = {k: [space.digit(k, 0), space.digit(k, 1)] for k in key}
    f = StageFactors(params)
    expected = {}
    for mask in range(1 << n):
        x = [bool(mask >> i & 1) for i in range(n)]
        lits = [int(v) for i in range(n) for v in (x[i], not x[i])]
        for ev, sat_only in ((1, False), (0, True)):
            if sat_only and not phi.satisfied_by(x):
                continue
            sig = tuple(lits + [ev, 1 - ev, ev])
            expected[sig] = {th: EVAL_DISTRIBUTION.prob(ev, th) * f.factor(1, bool(ev), th) for th in (True, False)}
    found = {}
    for idx in zip(*count_t[1].nonzero()):
        sig = tuple(digit[k].index(d) for k, d in zip(key, idx))
        found[sig] = idx
    report.add("consistent configurations match the satisfying-assignment pattern", set(found) == set(expected),
               "" if set(found) == set(expected) else
               f"{len(set(found) - set(expected))} unexpected, {len(set(expected) - set(found))} missing")
    multi = [s for s, idx in found.items() if count_t[(1,) + idx] != 1 or count_t[(0,) + idx] != 1]
    report.add("unique auxiliary extension", not multi,
               "" if not multi else f"{len(multi)} configurations extend in several ways")
    scale = set()
    for sig, idx in found.items():
        if sig in expected:
            for th in (True, False):
                scale.add(Fraction(int(weight_t[(int(th),) + idx])) / expected[sig][th])
    report.add("weights proportional to the closed form", len(scale) == 1,
               "" if len(scale) == 1 else f"{len(scale)} distinct scale factors")
    return report
