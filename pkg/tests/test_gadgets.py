import itertools
from fractions import Fraction

import mpmath
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from bayes_exchange.core import Agent, Engine, Network, SignalDistribution, validate_structured
from bayes_exchange.core.elimination import THETA, eliminate, mask_factor, weight_factor
from bayes_exchange.core.engine import history_factors
from bayes_exchange.gadgets import (
    DEFAULT_ETA,
    E_DISTRIBUTION,
    F_DISTRIBUTION,
    GREATER,
    LESS,
    MEAN,
    RB_DISTRIBUTION,
    SIMPLEST,
    SeparatorChoice,
    SeparatorPool,
    achievable_products,
    assemble,
    build_bounded_coupler,
    build_clause,
    build_counting,
    build_modified_not_equal,
    build_not_equal,
    build_rb_gadget,
    build_threshold,
    build_variable,
    check_gadget_claim,
    compensating_pair,
    designated_history,
    distribution_from_ratios,
    gadget_suite,
    host_network,
    ratios,
    rational_root_between,
    simplest_between,
    solve_coupler,
    surviving_target_configs,
)
from bayes_exchange.reductions.sat import separator_bounds

EVALD = SignalDistribution.binary(Fraction(9, 10), Fraction(2, 5))
Q = RB_DISTRIBUTION
PROBS = [Fraction(k, 10) for k in range(1, 10)]


@st.composite
def informative(draw):
    pt, pf = draw(st.lists(st.sampled_from(PROBS), min_size=2, max_size=2, unique=True))
    if pt < pf:
        pt, pf = pf, pt
    return SignalDistribution.binary(pt, pf)


# -- distributions -------------------------------------------------------------

def test_eval_distribution_from_ratios():
    d = distribution_from_ratios(Fraction(1, 6), Fraction(9, 4))
    assert (d.p_true, d.p_false) == (Fraction(9, 10), Fraction(2, 5))


def test_symmetric_distribution_from_ratios():
    d = distribution_from_ratios(Fraction(1, 3), 3)
    assert (d.p_true, d.p_false) == (Fraction(3, 4), Fraction(1, 4))


def test_free_ratio_convention():
    d = distribution_from_ratios(lam0=Fraction(1, 2))
    assert d.p_false == Fraction(1, 2) and d.p_true == Fraction(3, 4)
    d = distribution_from_ratios(lam1=4)
    assert d.p_true == Fraction(1, 2) and d.ratio(1) == 4


def test_infeasible_ratio_pair():
    with pytest.raises(ValueError):
        distribution_from_ratios(2, 3)
    with pytest.raises(ValueError):
        distribution_from_ratios(lam0=Fraction(3, 2))


@given(informative())
def test_ratio_round_trip(d):
    r0, r1 = ratios(d)
    assert distribution_from_ratios(r0, r1) == d


# -- separators ------------------------------------------------------------------

@given(st.fractions(min_value=0, max_value=20), st.fractions(min_value=Fraction(1, 1000), max_value=5))
def test_simplest_between_lies_inside_and_is_simplest(lo, width):
    hi = lo + width
    x = simplest_between(lo, hi)
    assert lo < x < hi
    for q in range(1, x.denominator):
        # no rational with a smaller denominator fits
        p = lo.numerator * q // lo.denominator + 1
        assert not Fraction(p, q) < hi


@given(st.fractions(min_value=Fraction(1, 100), max_value=100), st.integers(1, 40))
def test_rational_root_between(x, b):
    lo, hi = x, x * Fraction(101, 100)
    r = rational_root_between(lo, hi, b)
    assert lo < r ** b < hi


def test_pool_reuses_separators():
    pool = SeparatorPool(MEAN)
    a = pool.pick(Fraction(1), Fraction(3))
    assert a == 2 and pool.pick(Fraction(3, 2), Fraction(5)) == 2
    assert SeparatorPool(SIMPLEST).pick(Fraction(1, 3), Fraction(3, 4)) == Fraction(1, 2)


@given(st.fractions(min_value=Fraction(1, 50), max_value=50))
def test_compensating_pair_law(R):
    assume(R != 1)
    db, sb, dc, sc, alpha = compensating_pair(R)
    assert db.ratio(sb) * dc.ratio(sc) == 1
    assert db.ratio(sb) == 1 / R
    # the pair's weight is the same under both states
    assert db.prob(sb, True) * dc.prob(sc, True) == db.prob(sb, False) * dc.prob(sc, False) == alpha


# -- threshold ---------------------------------------------------------------------

def test_threshold_at_one_keeps_only_both_ones():
    g = build_threshold([("u", Q), ("v", Q)], SeparatorChoice(1, GREATER), allow_ties=True)
    assert surviving_target_configs(g) == {(1, 1)}


def test_threshold_one_eighth():
    g = build_threshold([("u", Q), ("v", Q)], SeparatorChoice(Fraction(1, 8), GREATER))
    assert surviving_target_configs(g) == {(1, 1), (1, 0), (0, 1)}


def test_threshold_equalization_factor():
    g = build_threshold([("u", Q), ("v", Q)], SeparatorChoice(Fraction(1, 8), GREATER))
    net = g.sub_network
    B, C = net.agent(g.interface_ids["compensator"]).signal, net.agent(g.interface_ids["partner"]).signal
    assert (1 - B.p_true) * C.p_true == (1 - B.p_false) * C.p_false


def test_non_separating_threshold_rejected():
    with pytest.raises(ValueError, match="non-strict"):
        build_threshold([("u", Q), ("v", Q)], SeparatorChoice(1, GREATER))


def test_fig1_claims_pass():
    g = build_threshold([("u", Q), ("v", Q)], SeparatorChoice(Fraction(1, 8), GREATER))
    report = check_gadget_claim(g)
    assert report.ok, str(report)


def test_corrupted_separator_fails():
    g = build_threshold([("u", Q), ("v", Q)], SeparatorChoice(1, GREATER), allow_ties=True)
    report = check_gadget_claim(g)
    assert not report.ok
    assert any("non-strict separation" in f for f in report.failures())


@st.composite
def threshold_case(draw):
    k = draw(st.integers(1, 4))
    dists = [draw(informative()) for _ in range(k)]
    products = sorted(set(achievable_products(dists).values()))
    cuts = [(lo + hi) / 2 for lo, hi in zip(products, products[1:])]
    cuts += [products[0] / 2, products[-1] * 2]
    R = draw(st.sampled_from(cuts))
    direction = draw(st.sampled_from([GREATER, LESS]))
    return [(f"v{j}", d) for j, d in enumerate(dists)], SeparatorChoice(R, direction)


@given(threshold_case())
@settings(max_examples=40, deadline=None)
def test_threshold_claim(case):
    targets, sep = case
    g = build_threshold(targets, sep, name="thr")
    report = check_gadget_claim(g)
    assert report.ok, str(report)
    expected = set()
    for config in itertools.product((0, 1), repeat=len(targets)):
        p = Fraction(1)
        for (_, d), s in zip(targets, config):
            p *= d.ratio(s)
        if (p > sep.ratio_threshold) == (sep.direction == GREATER):
            expected.add(config)
    assert surviving_target_configs(g) == expected


# -- counting ----------------------------------------------------------------------

def test_counting_one_of_two_eval_signals():
    g = build_counting([("u", EVALD), ("v", EVALD)], 1, "exactly", True)
    assert surviving_target_configs(g) == {(0, 1), (1, 0)}
    assert g.interface_ids["equalizer_ratio"] == Fraction(8, 3)


def test_counting_two_of_two_equalizer():
    g = build_counting([("u", Q), ("v", Q)], 2, "exactly", True)
    assert g.interface_ids["equalizer_ratio"] == Fraction(1, 9)
    assert surviving_target_configs(g) == {(1, 1)}


def test_variable_gadget_forces_opposite_signals():
    g = build_variable("x1", "nx1", EVALD)
    assert surviving_target_configs(g) == {(0, 1), (1, 0)}


def test_counting_equalizer_claim():
    report = check_gadget_claim(build_counting([("u", Q), ("v", Q)], 1, "exactly", True))
    assert report.ok
    assert any(name == "state-independent weight factor" for name, _, _ in report.entries)


def test_counting_rejects_mixed_distributions():
    with pytest.raises(ValueError):
        build_counting([("u", Q), ("v", EVALD)], 1)
    with pytest.raises(ValueError):
        build_counting([("u", Q)], 2)


@given(informative(), st.integers(1, 4), st.data())
@settings(max_examples=30, deadline=None)
def test_counting_claim(d, K, data):
    k = data.draw(st.integers(0, K))
    mode = data.draw(st.sampled_from(["exactly", "at_least", "at_most"]))
    assume(not (mode == "at_least" and k == 0) and not (mode == "at_most" and k == K))
    g = build_counting([(f"v{j}", d) for j in range(K)], k, mode, mode == "exactly")
    report = check_gadget_claim(g)
    assert report.ok, str(report)


# -- not-equal and clause ----------------------------------------------------------------

def test_not_equal_symmetric():
    g = build_not_equal(("u", Q), ("v", Q))
    assert [s.ratio_threshold for s, _ in g.separators] == [Fraction(5, 9), 5]
    assert surviving_target_configs(g) == {(0, 1), (1, 0)}


def test_not_equal_mixed():
    assert surviving_target_configs(build_not_equal(("u", EVALD), ("v", Q))) == {(0, 1), (1, 0)}


@given(informative(), informative())
@settings(max_examples=30, deadline=None)
def test_not_equal_law(du, dv):
    g = build_not_equal(("u", du), ("v", dv))
    assert surviving_target_configs(g) == {(0, 1), (1, 0)}


def test_clause_semantics():
    g = build_clause(["a", "b", "c"], "EVAL", EVALD)
    got = surviving_target_configs(g)
    assert (0, 0, 0, 0) not in got
    assert (0, 0, 0, 1) in got
    assert (0, 1, 0, 0) in got
    assert len(got) == 15


def test_clause_rejects_repeated_variable():
    with pytest.raises(ValueError):
        build_clause(["x1", "nx1", "x2"], "EVAL", EVALD, variables=[1, 1, 2])


# -- structure of merged gadgets -------------------------------------------------------

def test_suite_gadgets_merge_into_structured_hosts():
    for label, g in gadget_suite():
        net, _ = assemble(host_network(g.targets), [g])
        assert validate_structured(net) == [], label


def test_gadget_suite_size_and_claims():
    suite = gadget_suite()
    assert len(suite) >= 50
    assert any(d.alphabet_size == 3 for _, g in suite for _, d in g.targets)
    for label, g in suite:
        report = check_gadget_claim(g)
        assert report.ok, f"{label}: {report.failures()}"


# -- modified not-equal ------------------------------------------------------------------

def test_modified_not_equal_separates_mixed_products():
    da = SignalDistribution.binary(Fraction(3, 4), Fraction(1, 4))
    r0, r1 = ratios(da)
    m_t, m_f = Fraction(50), Fraction(1, 40)
    products = {(True, True): [m_t * r1], (True, False): [m_t * r0],
                (False, True): [m_f * r1], (False, False): [m_f * r0]}
    large, small = separator_bounds(products)
    pool = SeparatorPool(SIMPLEST)
    L, S = pool.pick(*large), pool.pick(*small)
    g = build_modified_not_equal("OBS0", ("A2", da), [], SeparatorChoice(L, LESS), SeparatorChoice(S, GREATER))
    survivors = set()
    for (up, s), (p,) in products.items():
        # large agent must act F (product <= L), small agent T (product > S)
        if p <= L and p > S:
            survivors.add((up, s))
    assert survivors == {(True, False), (False, True)}
    assert g.expected_actions[g.interface_ids["large"]] is False
    assert g.expected_actions[g.interface_ids["small"]] is True


def test_modified_not_equal_rejects_equal_ratios():
    m = Fraction(3)
    products = {(True, True): [m * 3], (True, False): [m / 3],
                (False, True): [m * 3], (False, False): [m / 3]}
    with pytest.raises(ValueError):
        separator_bounds(products)


# -- revealed-belief gadgets --------------------------------------------------------------

def test_ternary_distribution():
    assert E_DISTRIBUTION.probs_true == (Fraction(1, 13), Fraction(3, 13), Fraction(9, 13))
    assert E_DISTRIBUTION.probs_false == (Fraction(9, 13), Fraction(3, 13), Fraction(1, 13))
    assert [E_DISTRIBUTION.ratio(s + 1) / E_DISTRIBUTION.ratio(s) for s in (0, 1)] == [9, 9]


def test_ternary_geometric_identity():
    for probs in (E_DISTRIBUTION.probs_true, E_DISTRIBUTION.probs_false):
        assert probs[2] * probs[0] == probs[1] ** 2


def test_belief_variable_gadget():
    g = build_rb_gadget("variable", {"pos": "x", "neg": "nx", "dist": Q}, name="var")
    assert surviving_target_configs(g) == {(0, 1), (1, 0)}
    # symmetric signals: the pair already multiplies to 1 and needs no compensator
    assert g.expected_actions == {"var.aux": 1}
    g = build_rb_gadget("variable", {"pos": "x", "neg": "nx", "dist": EVALD}, name="var")
    assert surviving_target_configs(g) == {(0, 1), (1, 0)}
    a, b = g.expected_actions.values()
    assert a * b == 1


def test_belief_gadget_arity():
    with pytest.raises(ValueError):
        build_rb_gadget("clause", {"literals": ["x"], "eval": "EVAL", "dist": Q})
    with pytest.raises(ValueError):
        build_rb_gadget("teleporter", {})


def test_belief_clause_gadget_claim():
    g = build_rb_gadget("clause", {"literals": ["x", "y"], "eval": "EVAL", "dist": Q}, name="cl")
    assert g.expected_actions["cl.aux"] == Q.ratio(0) ** 3 * Fraction(1, 9) * 9 ** 3
    assert check_gadget_claim(g).ok


# -- bounded coupler --------------------------------------------------------------------------

ALPHA_PAIRS = [(Fraction(2, 5), Fraction(3, 5)), (Fraction(9, 10), Fraction(3, 5)),
               (Fraction(2, 5), Fraction(9, 10)), (Fraction(9, 10), Fraction(2, 5))]


def reference_root(a1, a2, eps):
    """High-precision root of the balance equation near eps, independent of the package."""
    mpmath.mp.dps = 60
    a1, a2, eps = (mpmath.mpf(x.numerator) / x.denominator for x in (a1, a2, eps))
    q = 1 - eps
    target = q ** 2 * (1 - q) ** 2 / (q ** 2 + a1 * (1 - q) ** 2)
    return mpmath.findroot(lambda x: x ** 2 * (1 - x) ** 2 / (a2 * x ** 2 + (1 - x) ** 2) - target, eps)


@pytest.mark.parametrize("a1,a2", ALPHA_PAIRS)
@pytest.mark.parametrize("eps", [Fraction(1, 10), Fraction(1, 100)])
def test_coupler_root_and_asymptotics(a1, a2, eps):
    cp = solve_coupler(a1, a2, eps)
    q_f, p_f, p_t = cp.q.p_false, cp.p.p_false, cp.p.p_true
    assert cp.q.p_true == 1 - eps
    root = reference_root(a1, a2, eps)
    assert abs(mpmath.mpf(q_f.numerator) / q_f.denominator - root) < mpmath.mpf(2) ** -60
    # q_F = eps + O(eps^2), p_F = a2 eps^2 + O(eps^3), p_T = 1 - a1 eps^2 + O(eps^3)
    assert abs(q_f - eps) <= eps ** 2
    assert abs(p_f - a2 * eps ** 2) <= 4 * eps ** 3
    assert abs(1 - p_t - a1 * eps ** 2) <= 4 * eps ** 3


@pytest.mark.parametrize("a1,a2", ALPHA_PAIRS)
def test_coupler_residual(a1, a2):
    cp = solve_coupler(a1, a2, Fraction(1, 100))
    q_t, q_f = cp.q.p_true, cp.q.p_false
    lhs = q_t ** 2 * (1 - q_t) ** 2 / (q_t ** 2 + a1 * (1 - q_t) ** 2)
    rhs = q_f ** 2 * (1 - q_f) ** 2 / (a2 * q_f ** 2 + (1 - q_f) ** 2)
    assert abs(rhs / lhs - 1) == cp.eta
    assert cp.eta <= DEFAULT_ETA
    # the triple ratios for the two anchor signals realise the two amplifier ratios
    assert cp.triple_weight(1, True) / cp.triple_weight(0, True) != 1


def test_coupler_bracket_failure():
    with pytest.raises(ValueError):
        solve_coupler(Fraction(2, 5), Fraction(3, 5), Fraction(1, 3))


def test_coupler_triple_pattern():
    eps = Fraction(1, 10)
    g = build_bounded_coupler("EVAL", Fraction(2, 5), Fraction(3, 5), 1, eps, name="cpl", link=EVALD)
    net, expected = assemble(Network((Agent("EVAL", EVALD),)), [g])
    assert validate_structured(net) == []
    hist, query = designated_history(net, "OBS", expected)
    eng = Engine(net)
    space = eng.space
    masks = history_factors(eng, hist, query)
    (c, d, e), = g.interface_ids["triples"]
    key_ids = ["EVAL", "cpl.F", c, d, e]
    key = [space.pos[a] for a in key_ids]
    factors = [mask_factor(cn, m) for cn, m in masks]
    variables = sorted({v for f in factors for v in f.scope} | set(key))
    counts = eliminate(space, factors + [weight_factor(space, i, unit=True) for i in variables], key)
    order = [counts.scope.index(THETA)] + [counts.scope.index(k) for k in key]
    table = counts.table.transpose(order)
    found = set()
    for idx in zip(*table[1].nonzero()):
        found.add(tuple(space.values[k][i] for k, i in zip(key, idx)))
    assert found == {(1, 0, 1, 0, 1), (0, 1, 0, 1, 0)}
