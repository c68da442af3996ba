"""Acceptance criteria 1-10; each test records one PASS/FAIL line."""

import itertools
import random
import time
from fractions import Fraction


from bayes_exchange.core import WorldState, posterior, simulate
from bayes_exchange.gadgets import gadget_suite, run_gadget_suite
from bayes_exchange.oracle import brute_sat, brute_tqbf, count_2sat, naive_reference_simulate
from bayes_exchange.reductions import (
    EXISTS,
    FORALL,
    QBF,
    Formula,
    ReductionParams,
    StageFactors,
    analytic_posterior_3sat,
    analytic_posterior_tqbf,
    analytic_ratio_sharp,
    check_modified_not_equal,
    choose_b,
    recover_count,
    reduce_3sat,
    reduce_bounded,
    reduce_sharp_2sat,
    reduce_tqbf,
    relative_error,
)

from support import (
    ACCEPTANCE,
    fig1_network,
    formulas_upto,
    random_network,
    random_world_state,
    short_clauses,
    significant_time_violations,
    three_literal_clauses,
    two_block_qbfs,
)


def lits(*xs):
    return tuple((abs(x), x > 0) for x in xs)


def record(n, checks, budget, started):
    """Store the outcome of criterion ``n``; ``checks`` maps names to booleans."""
    elapsed = time.perf_counter() - started
    checks = dict(checks)
    checks[f"runtime {elapsed:.1f}s within {budget}s"] = elapsed < budget
    failed = [k for k, ok in checks.items() if not ok]
    detail = "; ".join(failed) if failed else ", ".join(checks)
    ACCEPTANCE[n] = (not failed, detail)
    assert not failed, detail


def test_criterion_1_gadget_suite():
    t0 = time.perf_counter()
    suite = gadget_suite()
    reports = run_gadget_suite()
    bad = [label for label, r in reports if not r.ok]
    sizes_ok = all(len(g.targets) <= 4 and all(t[1].alphabet_size <= 3 for t in g.targets) for _, g in suite)
    record(1, {
        f"{len(suite)} gadget instances (at least 50)": len(suite) >= 50,
        "targets <= 4, alphabets <= 3": sizes_ok,
        f"all claims exact ({len(bad)} failing)": not bad,
    }, 60, t0)


def test_criterion_2_3sat_soundness():
    t0 = time.perf_counter()
    params = ReductionParams(b=20)
    formulas = list(formulas_upto(3, three_literal_clauses(3), 3, ordered=True))
    wrong = [phi for phi in formulas if analytic_posterior_3sat(phi, params)[1] != brute_sat(phi).value]
    record(2, {
        f"{len(formulas)} formulas with N=3, M<=3": len(formulas) >= 300,
        f"verdicts equal brute force ({len(wrong)} mismatches)": not wrong,
    }, 300, t0)


def bound_corpus():
    # every satisfying count 0..8 at N=3, plus the whole M<=3 three-literal family
    out = list(formulas_upto(3, three_literal_clauses(3), 3))
    patterns = three_literal_clauses(3)
    for k in range(4, 9):
        out.append(Formula(3, patterns[:k]))
    out += [Formula(3, (lits(1), lits(-1))), Formula(3, (lits(1), lits(2), lits(3))),
            Formula(3, (lits(1, 2), lits(-1, 2), lits(-2, 3), lits(-3)))]
    return out


def test_criterion_3_posterior_interval():
    t0 = time.perf_counter()
    b = choose_b(3)
    params = ReductionParams(b=b)
    lo, hi = Fraction(16, 25) ** b, Fraction(69, 100) ** b
    outside, counts = [], set()
    slowest = 0.0
    for phi in bound_corpus():
        s = time.perf_counter()
        mu, verdict = analytic_posterior_3sat(phi, params)
        slowest = max(slowest, time.perf_counter() - s)
        res = brute_sat(phi)
        counts.add(res.count)
        miss = 1 - mu if res.value else mu
        if verdict != res.value or not lo <= miss <= hi:
            outside.append(phi)
    record(3, {
        f"b = choose_b(3) = {b}": b == 1381,
        f"satisfying counts {sorted(counts)} cover unsat and sat": 0 in counts and len(counts) == 9,
        f"mu or 1-mu inside [(16/25)^b, (69/100)^b] ({len(outside)} outside)": not outside,
        f"slowest instance {slowest:.2f}s under 60s": slowest < 60,
    }, 600, t0)


HAND_PICKED = [
    QBF(((FORALL, (1, 2)), (EXISTS, (3,))), Formula(3, (lits(1, 2, 3), lits(-1, -2, -3)))),
    QBF(((FORALL, (1, 2)), (EXISTS, (3,))), Formula(3, (lits(1, 3), lits(2, -3)))),
    QBF(((FORALL, (1,)), (EXISTS, (2, 3))), Formula(3, (lits(1, 2), lits(-1, 3), lits(-2, -3)))),
    QBF(((FORALL, (1,)), (EXISTS, (2, 3))), Formula(3, (lits(1), lits(2, 3)))),
    QBF(((FORALL, (1, 2)), (EXISTS, (3,))), Formula(3, (lits(1, -2, 3), lits(-1, 2, -3)))),
    QBF(((EXISTS, (1,)), (FORALL, (2,)), (EXISTS, (3,))), Formula(3, (lits(1, 2, 3), lits(1, -2, -3)))),
    QBF(((EXISTS, (1,)), (FORALL, (2,)), (EXISTS, (3,))), Formula(3, (lits(1, 2), lits(-1, -2)))),
    QBF(((EXISTS, (1,)), (FORALL, (2,)), (EXISTS, (3,))), Formula(3, (lits(2, 3), lits(-2, -3), lits(1)))),
    QBF(((EXISTS, (1,)), (FORALL, (2,)), (EXISTS, (3,))), Formula(3, (lits(1, 2), lits(3), lits(-3, -1)))),
    QBF(((EXISTS, (1, 2, 3)),), Formula(3, (lits(1, 2, 3), lits(-1), lits(-2), lits(-3)))),
    QBF(((FORALL, (1,)), (EXISTS, (2, 3))), Formula(3, (lits(1, 2, 3), lits(-1, -2, -3)))),
    QBF(((FORALL, (1, 2)), (EXISTS, (3,))), Formula(3, (lits(1, 3), lits(2, 3), lits(-3, 1)))),
]


def test_criterion_4_tqbf():
    t0 = time.perf_counter()
    params = ReductionParams()
    sweep = two_block_qbfs(2, 2)
    wrong = [q for q in sweep + HAND_PICKED if analytic_posterior_tqbf(q, params)[1] != brute_tqbf(q).value]
    truths = {brute_tqbf(q).value for q in HAND_PICKED}
    problems = []
    checked = 0
    for q in sweep + HAND_PICKED:
        if q.num_blocks < 2:
            continue
        problems += check_modified_not_equal(reduce_tqbf(q, params), q, params, 2)
        checked += 1
    record(4, {
        f"{len(sweep)} two-block QBFs with N=2, M<=2": len(sweep) == 90,
        f"{len(HAND_PICKED)} hand-picked N=3 QBFs, true and false": len(HAND_PICKED) >= 10 and truths == {True, False},
        f"verdicts equal brute force ({len(wrong)} mismatches)": not wrong,
        f"modified not-equal sound at stage 2 on {checked} instances ({len(problems)} problems)": not problems,
    }, 600, t0)


def test_criterion_5_engine_vs_reference():
    t0 = time.perf_counter()
    rng = random.Random(20240501)
    mismatches = {True: 0, False: 0}
    for dag in [True] * 200 + [False] * 100:
        net = random_network(rng, max_informative=8, dag=dag)
        omega = random_world_state(rng, net)
        if simulate(net, omega, 5).actions != naive_reference_simulate(net, omega, 5).actions:
            mismatches[dag] += 1
    net, _, _ = fig1_network()
    ids = net.informative_ids
    fig_bad = 0
    states = 0
    for theta in (True, False):
        for bits in itertools.product((0, 1), repeat=len(ids)):
            omega = WorldState(theta, dict(zip(ids, bits)))
            states += 1
            if simulate(net, omega, 5).actions != naive_reference_simulate(net, omega, 5).actions:
                fig_bad += 1
    record(5, {
        f"200 random DAGs agree ({mismatches[True]} mismatches)": mismatches[True] == 0,
        f"100 random networks with cycles agree ({mismatches[False]} mismatches)": mismatches[False] == 0,
        f"{states} threshold-gadget world states agree ({fig_bad} mismatches)": fig_bad == 0 and states == 64,
    }, 120, t0)


def test_criterion_6_engine_vs_analytic():
    t0 = time.perf_counter()
    checks = {}
    for bounded in (False, True):
        for b in (3, 4):
            for clause in (lits(1), lits(-1)):
                phi = Formula(1, (clause,))
                p = ReductionParams(b=b, bounded_mode=bounded)
                inst = reduce_3sat(phi, p)
                mu = posterior(inst.network, inst.expected_history, inst.query_time, inst.model)
                name = f"{'bounded' if bounded else 'unbounded'} b={b} clause {'x1' if clause[0][1] else '-x1'}"
                checks[name] = mu == analytic_posterior_3sat(phi, p)[0]
    record(6, checks, 300, t0)


def test_criterion_7_sharp():
    t0 = time.perf_counter()
    formulas = []
    for n in (1, 2, 3):
        formulas += list(formulas_upto(n, short_clauses(n, (2,)), 3))
    rng = random.Random(7)
    clauses4 = short_clauses(4, (2,))
    sample = [Formula(4, rng.choices(clauses4, k=rng.randint(0, 6))) for _ in range(60)]
    bad_err, bad_count = [], []
    for phi in formulas + sample:
        count = count_2sat(phi).value
        r = analytic_ratio_sharp(phi)
        if relative_error(r, count, phi.num_vars) > Fraction(1, 4 ** phi.num_vars):
            bad_err.append(phi)
        if recover_count(r, phi.num_vars) != count:
            bad_count.append(phi)
    engine_ok = True
    for cs in [(lits(1, 2),), (lits(-1, 2),)]:
        phi = Formula(2, cs)
        inst = reduce_sharp_2sat(phi)
        mu = posterior(inst.network, inst.expected_history, inst.query_time, inst.model)
        engine_ok &= mu / (1 - mu) == analytic_ratio_sharp(phi)
    record(7, {
        f"{len(formulas)} formulas with N<=3, M<=3 and {len(sample)} with N=4": len(formulas) > 400,
        f"relative error <= 4^-N ({len(bad_err)} exceed)": not bad_err,
        f"rounding recovers the count ({len(bad_count)} wrong)": not bad_count,
        "engine ratio equals analytic on N=2": engine_ok,
    }, 300, t0)


def test_criterion_8_bounded():
    t0 = time.perf_counter()
    registry = {}
    eta_ok = True
    for src in (Formula(3, (lits(1, -2, 3),)), Formula(2, (lits(1), lits(-1, 2))),
                QBF(((FORALL, (1,)), (EXISTS, (2,))), Formula(2, (lits(1, 2), lits(-1, -2))))):
        inst = reduce_bounded(src, ReductionParams(b=20))
        registry[str(src)] = len(inst.distributions())
        eta_ok &= Fraction(inst.metadata["eta_total"]) <= Fraction(inst.metadata["eta_slack"])
    params = ReductionParams(b=20, bounded_mode=True)
    factors = StageFactors(params)
    coupler_ok = all(cp.eta <= params.eta for s in (1, 2, 3) for cp in factors.couplers(s))
    disagree = 0
    total = 0
    for phi in formulas_upto(2, short_clauses(2, (1, 2)), 2):
        total += 1
        ub = analytic_posterior_3sat(phi, ReductionParams(b=20))[1]
        bd = analytic_posterior_3sat(phi, params)[1]
        if ub != bd or bd != brute_sat(phi).value:
            disagree += 1
    record(8, {
        f"registry sizes {sorted(registry.values())} at most 50": max(registry.values()) <= 50,
        f"{total} N=2 instances agree with the unbounded verdict ({disagree} differ)": disagree == 0 and total == 45,
        "coupler residuals within the configured eta": coupler_ok,
        "accumulated residual within the slack budget": eta_ok,
    }, 300, t0)


def spread_formula(n, m):
    cl = []
    for j in range(m):
        vs = (j % n + 1, (j + 1) % n + 1, (j + 2) % n + 1)
        cl.append(((vs[0], j % 2 == 0), (vs[1], True), (vs[2], j % 3 == 0)))
    return Formula(n, cl)


def test_criterion_9_structure():
    t0 = time.perf_counter()
    sizes = {(n, m): reduce_3sat(spread_formula(n, m)).agent_count()
             for n, m in [(3, 1), (4, 1), (3, 4), (3, 8), (5, 3), (6, 6), (7, 2), (9, 12)]}
    c1 = sizes[(4, 1)] - sizes[(3, 1)]
    c2 = Fraction(sizes[(3, 4)] - sizes[(3, 1)], 3)
    c3 = sizes[(3, 1)] - 3 * c1 - c2
    affine = all(v == c1 * n + c2 * m + c3 for (n, m), v in sizes.items())
    growth = True
    for k in (1, 2, 3, 4):
        for n in (k + 2, k + 4):
            blocks = tuple((EXISTS if i % 2 else FORALL, (n - k + i,) if i > 1 else tuple(range(1, n - k + 2)))
                           for i in range(k, 0, -1))
            for m in (1, 3, 6):
                growth &= reduce_tqbf(QBF(blocks, spread_formula(n, m))).agent_count() <= 15 * k * k * (n + m)
    b = 20
    floor = Fraction(2, 5) ** b
    probs_ok = all(reduce_3sat(spread_formula(n, m), ReductionParams(b=b)).min_probability() >= floor
                   for n, m in sizes)
    probs_ok &= reduce_tqbf(HAND_PICKED[0], ReductionParams(b=b)).min_probability() >= floor
    probs_ok &= reduce_bounded(spread_formula(3, 2), ReductionParams(b=b)).min_probability() >= floor
    record(9, {
        f"3SAT agents = {c1}N + {c2}M + {c3} exactly": affine,
        "TQBF agents at most 15 K^2 (N+M) for K<=4": growth,
        "min probability >= (2/5)^b at b=20": probs_ok,
    }, 120, t0)


def test_criterion_10_significant_times():
    t0 = time.perf_counter()
    cases = [
        reduce_3sat(Formula(1, (lits(1),)), ReductionParams(b=3)),
        reduce_3sat(Formula(2, (lits(1, -2),))),
        reduce_3sat(Formula(3, (lits(1, -2, 3), lits(-1, 2)))),
        reduce_tqbf(QBF(((FORALL, (1,)), (EXISTS, (2,))), Formula(2, (lits(1, 2), lits(-1, -2))))),
        reduce_tqbf(HAND_PICKED[5]),
        reduce_sharp_2sat(Formula(2, (lits(1, 2),))),
        reduce_bounded(Formula(1, (lits(1),)), ReductionParams(b=3)),
        reduce_3sat(Formula(1, (lits(1),)), ReductionParams(b=4, bounded_mode=True)),
    ]
    violations, checked, skipped = [], 0, 0
    for inst in cases:
        v, c, s = significant_time_violations(inst.network, inst.model)
        violations += v
        checked += c
        skipped += s
    record(10, {
        f"{checked} agents checked on {len(cases)} compiled instances ({skipped} over the cap)": checked > 500,
        f"belief 1/2 before and frozen after significant time ({len(violations)} violations)": not violations,
    }, 300, t0)
