import hashlib
import itertools
import re
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bayes_exchange.core import Model, WorldState, simulate
from bayes_exchange.formats import (
    FormatError,
    parse_action,
    parse_dimacs,
    parse_formula_file,
    parse_qdimacs,
    parse_rational,
    parse_world_state,
    read_instance,
    write_dimacs,
    write_instance,
    write_qdimacs,
    write_trace,
    write_world_state,
)
from bayes_exchange.reductions import (
    EXISTS,
    FORALL,
    QBF,
    Formula,
    ReductionParams,
    reduce_3sat,
    reduce_bounded,
    reduce_sharp_2sat,
    reduce_tqbf,
)

from support import fig1_network, short_clauses, three_literal_clauses, two_block_qbfs


def lits(*xs):
    return tuple((abs(x), x > 0) for x in xs)


SINGLE = Formula(3, (lits(1, -2, 3),))


def corpus():
    out = []
    clauses = three_literal_clauses(3)
    for cs in itertools.combinations(clauses, 2):
        out.append(reduce_3sat(Formula(3, cs)))
    for phi in [Formula(2, cs) for cs in itertools.combinations(short_clauses(2, (1, 2)), 2)][:20]:
        out.append(reduce_3sat(phi, ReductionParams(b=7)))
    for q in two_block_qbfs(2, 1)[:20]:
        out.append(reduce_tqbf(q))
    for cs in itertools.combinations(short_clauses(3, (2,)), 2):
        out.append(reduce_sharp_2sat(Formula(3, cs)))
    out.append(reduce_bounded(SINGLE, ReductionParams(b=20)))
    return out


CORPUS = corpus()


def test_corpus_size():
    assert len(CORPUS) >= 100
    assert {inst.model for inst in CORPUS} == {Model.BINARY, Model.BELIEF}


def test_round_trip_corpus():
    for inst in CORPUS:
        text = write_instance(inst)
        back = read_instance(text)
        assert back == inst
        assert write_instance(back) == text


FLOAT = re.compile(r"(?<![\w.])[-+]?\d*\.\d+(e[-+]?\d+)?(?![\w.])|\d[eE][-+]?\d")


def test_no_float_literals():
    for inst in CORPUS:
        text = write_instance(inst)
        assert not FLOAT.search(text.rsplit("checksum", 1)[0])


SMALL = write_instance(reduce_3sat(Formula(1, (lits(1),)), ReductionParams(b=3)))
SMALL_INST = read_instance(SMALL)
ALPHABET = "0123456789/TF =abcdeilmnoprstxyz[]_-,\n#."


@settings(max_examples=400, deadline=None)
@given(st.data())
def test_single_character_corruption_strict(data):
    pos = data.draw(st.integers(0, len(SMALL) - 1))
    ch = data.draw(st.sampled_from([c for c in ALPHABET if c != SMALL[pos]]))
    text = SMALL[:pos] + ch + SMALL[pos + 1:]
    try:
        back = read_instance(text)
    except FormatError:
        return
    assert back == SMALL_INST


def _lenient_body():
    return SMALL.rsplit("checksum", 1)[0]


@settings(max_examples=400, deadline=None)
@given(st.data())
def test_single_character_corruption_lenient(data):
    # without the checksum, anything accepted must be a well-formed document that
    # serializes back to exactly the corrupted text
    body = _lenient_body()
    pos = data.draw(st.integers(0, len(body) - 2))
    ch = data.draw(st.sampled_from([c for c in ALPHABET if c != body[pos]]))
    text = body[:pos] + ch + body[pos + 1:]
    try:
        back = read_instance(text, lenient=True)
    except (FormatError, ValueError):
        return
    assert write_instance(back).rsplit("checksum", 1)[0] == text


def test_header_corruptions_rejected():
    body = _lenient_body()
    for old, new in [("model binary_action", "model binary_actio"), ("query_time 2", "query_time x"),
                     ("query_time 2", "query_tim 2"), ("[agents]", "[agent]"), ("[edges]", "[edges"),
                     ("bayes-exchange instance 1", "bayes-exchange instance 2")]:
        with pytest.raises(FormatError):
            read_instance(body.replace(old, new, 1), lenient=True)


def test_checksum_required_in_strict_mode():
    with pytest.raises(FormatError, match="checksum"):
        read_instance(_lenient_body())
    assert read_instance(_lenient_body(), lenient=True) == SMALL_INST


def test_unknown_section_and_duplicates():
    body = _lenient_body()
    with pytest.raises(FormatError, match="unknown section"):
        read_instance(body.replace("[provenance]", "[extra]\n[provenance]"), lenient=True)
    first = body.split("[agents]\n")[1].splitlines()[0]
    with pytest.raises(FormatError, match="duplicate agent"):
        read_instance(body.replace(first, first + "\n" + first, 1), lenient=True)
    with pytest.raises(FormatError, match="dangling"):
        read_instance(body.replace("[history]", "ghost x1\n[history]"), lenient=True)


def test_lowest_terms():
    with pytest.raises(FormatError, match="not in lowest terms"):
        parse_rational("3/6")
    assert parse_rational("3/6", lenient=True) == Fraction(1, 2)
    with pytest.raises(FormatError):
        parse_rational("0.5")
    with pytest.raises(FormatError):
        parse_rational("1/0")


def test_lowest_terms_in_document():
    inst = reduce_3sat(Formula(1, (lits(1),)), ReductionParams(b=3))
    body = _lenient_body()
    dist = next(a.signal for a in inst.network.agents if a.signal is not None and 2 in
                {p.denominator for p in a.signal.probs_true})
    target = next(p for p in dist.probs_true if p.denominator == 2)
    old = f"{target.numerator}/2"
    new = f"{2 * target.numerator}/4"
    assert old in body
    mangled = body.replace(old, new, 1)
    with pytest.raises(FormatError, match="lowest terms"):
        read_instance(mangled + f"checksum {hashlib.sha256(mangled.encode()).hexdigest()}\n")
    assert read_instance(mangled, lenient=True) == SMALL_INST


def test_ratio_action_only_under_belief():
    assert parse_action("9/4", Model.BELIEF) == Fraction(9, 4)
    with pytest.raises(FormatError):
        parse_action("9/4", Model.BINARY)
    with pytest.raises(FormatError):
        parse_action("T", Model.BELIEF)
    with pytest.raises(FormatError):
        parse_action("-9/4", Model.BELIEF)
    assert parse_action("T", Model.BINARY) is True


def test_dimacs_examples():
    phi = parse_dimacs("p cnf 3 1\n1 -2 3 0")
    assert phi.clauses == (lits(1, -2, 3),)
    assert parse_dimacs("p cnf 2 2\n1 2 0\n-1 -2 0").num_clauses == 2
    with pytest.raises(FormatError, match="literal out of range"):
        parse_dimacs("p cnf 2 1\n1 3 0")
    with pytest.raises(FormatError, match="declares"):
        parse_dimacs("p cnf 2 2\n1 2 0")
    with pytest.raises(FormatError, match="terminator"):
        parse_dimacs("p cnf 2 1\n1 2")
    with pytest.raises(FormatError, match="header"):
        parse_dimacs("1 2 0")
    assert parse_dimacs("c comment\np cnf 2 1\nc more\n1\n2 0\n").clauses == (lits(1, 2),)


def test_qdimacs_examples():
    q = parse_qdimacs("p cnf 2 1\na 1 0\ne 2 0\n1 2 0")
    assert q.blocks == ((FORALL, (1,)), (EXISTS, (2,)))
    with pytest.raises(FormatError, match="universal"):
        parse_qdimacs("p cnf 2 1\ne 1 0\na 2 0\n1 2 0")
    with pytest.raises(FormatError, match="unquantified"):
        parse_qdimacs("p cnf 3 1\na 1 0\ne 2 0\n1 2 3 0")
    with pytest.raises(FormatError, match="alternating"):
        parse_qdimacs("p cnf 2 1\ne 1 0\ne 2 0\n1 2 0")
    with pytest.raises(FormatError):
        parse_dimacs("p cnf 2 1\na 1 0\ne 2 0\n1 2 0")


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5), st.lists(st.lists(st.integers(-5, 5).filter(bool), min_size=1, max_size=3),
                                   max_size=6))
def test_dimacs_round_trip(n, raw):
    clauses = [tuple((abs(x), x > 0) for x in c) for c in raw if all(abs(x) <= n for x in c)]
    phi = Formula(n, clauses)
    assert parse_dimacs(write_dimacs(phi)) == phi
    assert parse_formula_file(write_dimacs(phi)) == phi


def test_qdimacs_round_trip():
    for q in two_block_qbfs(2, 1):
        assert parse_qdimacs(write_qdimacs(q)) == q
        assert parse_formula_file(write_qdimacs(q)) == q


def test_world_state_round_trip():
    omega = WorldState(True, {"v1": 1, "v2": 0, "x": 2})
    assert parse_world_state(write_world_state(omega)) == omega
    assert parse_world_state("# comment\ntheta F\na 1\n") == WorldState(False, {"a": 1})
    for bad in ("a 1\n", "theta X\n", "theta T\ntheta F\n", "theta T\na 1\na 0\n", "theta T\na -1\n"):
        with pytest.raises(FormatError):
            parse_world_state(bad)


def test_trace_lines():
    net, _, _ = fig1_network()
    omega = WorldState(True, {a: 1 for a in net.informative_ids})
    tr = simulate(net, omega, 2)
    text = write_trace(tr, ["OBS"])
    lines = text.splitlines()
    assert len(lines) == 3
    assert lines[0].split()[:3] == ["OBS", "0", "F"]
    assert all("/" in line.split()[3] for line in lines)
