"""Text formats: DIMACS CNF, QDIMACS, instance documents, world states, traces.

Instance documents are line oriented::

    bayes-exchange instance 1
    model binary_action
    observer OBS
    query_time 2
    [agents]
    x1 p_true=1/10,9/10 p_false=3/5,2/5 time=0
    A time=1
    [edges]
    A x1
    [history]
    A 0 F
    [provenance]
    x1 literal x1
    [metadata]
    b 20
    checksum 5c1d...

Probability lists are indexed by signal value. Rationals are always
``num/den`` in lowest terms. The final line carries a SHA-256 digest of
everything above it, so a corrupted document is rejected instead of being
read as a different instance.
"""

from __future__ import annotations

import hashlib
import re
from fractions import Fraction
from math import gcd
from typing import Iterable, Optional

from .core.types import (
    ActionTrace,
    Agent,
    Model,
    Network,
    ObservationHistory,
    SignalDistribution,
    WorldState,
)
from .reductions.formula import EXISTS, FORALL, QBF, Formula
from .reductions.instance import CompiledInstance

MAGIC = "bayes-exchange instance 1"
SECTIONS = ("agents", "edges", "history", "provenance", "metadata")
_ID = re.compile(r"^[^\s=#\[\]]+$")
_RATIONAL = re.compile(r"^(-?\d+)/(\d+)$")
_INT = re.compile(r"^-?\d+$")


class FormatError(ValueError):
    """Malformed input text; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


# ---------------------------------------------------------------------------
# DIMACS / QDIMACS
# ---------------------------------------------------------------------------

def _int_token(tok: str, lineno: int) -> int:
    if not _INT.match(tok):
        raise FormatError(f"expected an integer, got {tok!r}", lineno)
    return int(tok)


def _parse_cnf_body(text: str, allow_quantifiers: bool):
    header = None
    quants: list[tuple[str, list[int], int]] = []
    clauses: list[list[int]] = []
    current: list[int] = []
    current_line = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        toks = line.split()
        if toks[0] == "p":
            if header is not None:
                raise FormatError("duplicate header", lineno)
            if len(toks) != 4 or toks[1] != "cnf":
                raise FormatError("header must read 'p cnf <vars> <clauses>'", lineno)
            n, m = _int_token(toks[2], lineno), _int_token(toks[3], lineno)
            if n < 0 or m < 0:
                raise FormatError("negative count in header", lineno)
            header = (n, m, lineno)
            continue
        if header is None:
            raise FormatError("content before the 'p cnf' header", lineno)
        if toks[0] in ("e", "a"):
            if not allow_quantifiers:
                raise FormatError("quantifier line in a plain CNF file", lineno)
            if clauses or current:
                raise FormatError("quantifier line after clauses", lineno)
            vals = [_int_token(t, lineno) for t in toks[1:]]
            if not vals or vals[-1] != 0:
                raise FormatError("missing terminator 0 on quantifier line", lineno)
            vals = vals[:-1]
            if 0 in vals:
                raise FormatError("0 inside a quantifier line", lineno)
            quants.append((EXISTS if toks[0] == "e" else FORALL, vals, lineno))
            continue
        for tok in toks:
            lit = _int_token(tok, lineno)
            if lit == 0:
                if not current:
                    raise FormatError("empty clause", lineno)
                clauses.append(current)
                current = []
            else:
                if abs(lit) > header[0]:
                    raise FormatError(f"literal out of range: {lit} (N = {header[0]})", lineno)
                if not current:
                    current_line = lineno
                current.append(lit)
    if header is None:
        raise FormatError("missing 'p cnf' header")
    if current:
        raise FormatError("missing terminator 0 after the last clause", current_line)
    n, m, hline = header
    if len(clauses) != m:
        raise FormatError(f"header declares {m} clauses, found {len(clauses)}", hline)
    return n, clauses, quants


def _formula(n: int, clauses: list[list[int]]) -> Formula:
    try:
        return Formula(n, tuple(tuple((abs(x), x > 0) for x in c) for c in clauses))
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def parse_dimacs(text: str) -> Formula:
    n, clauses, _ = _parse_cnf_body(text, allow_quantifiers=False)
    return _formula(n, clauses)


def parse_qdimacs(text: str) -> QBF:
    n, clauses, quants = _parse_cnf_body(text, allow_quantifiers=True)
    if not quants:
        raise FormatError("no quantifier lines")
    seen: set[int] = set()
    for i, (q, vs, lineno) in enumerate(quants):
        if not vs:
            raise FormatError("empty quantifier block", lineno)
        if i and quants[i - 1][0] == q:
            raise FormatError("non-alternating quantifier blocks", lineno)
        for v in vs:
            if not 1 <= v <= n:
                raise FormatError(f"quantified variable out of range: {v}", lineno)
            if v in seen:
                raise FormatError(f"variable {v} quantified twice", lineno)
            seen.add(v)
    if quants[-1][0] != EXISTS:
        raise FormatError("innermost quantifier block is universal", quants[-1][2])
    missing = sorted(set(range(1, n + 1)) - seen)
    if missing:
        raise FormatError(f"unquantified variable {missing[0]}")
    return QBF(tuple((q, tuple(vs)) for q, vs, _ in quants), _formula(n, clauses))


def write_dimacs(phi: Formula) -> str:
    lines = [f"p cnf {phi.num_vars} {phi.num_clauses}"]
    for c in phi.clauses:
        lines.append(" ".join(str(v if p else -v) for v, p in c) + " 0")
    return "\n".join(lines) + "\n"


def write_qdimacs(qbf: QBF) -> str:
    phi = qbf.matrix
    lines = [f"p cnf {phi.num_vars} {phi.num_clauses}"]
    for q, vs in qbf.blocks:
        lines.append(("e " if q == EXISTS else "a ") + " ".join(map(str, vs)) + " 0")
    for c in phi.clauses:
        lines.append(" ".join(str(v if p else -v) for v, p in c) + " 0")
    return "\n".join(lines) + "\n"


def parse_formula_file(text: str):
    """A Formula, or a QBF when the text has quantifier lines."""
    for raw in text.splitlines():
        toks = raw.split()
        if toks and toks[0] in ("e", "a"):
            return parse_qdimacs(text)
    return parse_dimacs(text)


# ---------------------------------------------------------------------------
# Rationals and actions
# ---------------------------------------------------------------------------

def format_rational(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_rational(tok: str, lineno: Optional[int] = None, lenient: bool = False) -> Fraction:
    m = _RATIONAL.match(tok)
    if not m:
        raise FormatError(f"malformed rational {tok!r} (expected num/den)", lineno)
    num, den = int(m.group(1)), int(m.group(2))
    if den == 0:
        raise FormatError(f"zero denominator in {tok!r}", lineno)
    if gcd(num, den) != 1 and not lenient:
        raise FormatError(f"rational {tok!r} not in lowest terms", lineno)
    return Fraction(num, den)


def format_action(a) -> str:
    if isinstance(a, bool):
        return "T" if a else "F"
    return format_rational(a)


def parse_action(tok: str, model: Model, lineno: Optional[int] = None, lenient: bool = False):
    if model is Model.BINARY:
        if tok in ("T", "F"):
            return tok == "T"
        raise FormatError(f"binary action must be T or F, got {tok!r}", lineno)
    if tok in ("T", "F"):
        raise FormatError("T/F actions are not allowed under the revealed-belief model", lineno)
    r = parse_rational(tok, lineno, lenient)
    if r <= 0:
        raise FormatError(f"belief ratio must be positive, got {tok}", lineno)
    return r


# ---------------------------------------------------------------------------
# Instance documents
# ---------------------------------------------------------------------------

def _check_id(x: str, lineno: Optional[int] = None) -> str:
    if not _ID.match(x):
        raise FormatError(f"invalid agent id {x!r}", lineno)
    return x


def _digest(body: str) -> str:
    return hashlib.sha256(body.encode("utf-8")).hexdigest()


def write_instance(inst: CompiledInstance) -> str:
    model = Model.parse(inst.model)
    lines = [MAGIC, f"model {model.value}", f"observer {_check_id(inst.observer_id)}",
             f"query_time {inst.query_time}", "[agents]"]
    for a in inst.network.agents:
        parts = [_check_id(a.id)]
        if a.signal is not None:
            parts.append("p_true=" + ",".join(map(format_rational, a.signal.probs_true)))
            parts.append("p_false=" + ",".join(map(format_rational, a.signal.probs_false)))
        if a.significant_time is not None:
            parts.append(f"time={a.significant_time}")
        lines.append(" ".join(parts))
    lines.append("[edges]")
    lines += [f"{u} {v}" for u, v in inst.network.edges]
    lines.append("[history]")
    if inst.expected_history.own_signal is not None:
        lines.append(f"own_signal {inst.expected_history.own_signal}")
    for (v, t), a in inst.expected_history.entries.items():
        lines.append(f"{v} {t} {format_action(a)}")
    lines.append("[provenance]")
    for agent, (kind, source) in inst.provenance.items():
        _check_id(kind)
        lines.append(" ".join(x for x in (agent, kind, source) if x != ""))
    lines.append("[metadata]")
    for k, v in inst.metadata.items():
        _check_id(k)
        if "\n" in str(v):
            raise ValueError("metadata values must be single-line")
        lines.append(f"{k} {v}".rstrip())
    body = "\n".join(lines) + "\n"
    return body + f"checksum {_digest(body)}\n"


def _split_checksum(text: str, strict: bool) -> str:
    if not text.endswith("\n"):
        text += "\n"
    head, sep, last = text[:-1].rpartition("\n")
    if not sep or not last.startswith("checksum "):
        if strict:
            raise FormatError("missing checksum line")
        return text
    body = head + "\n"
    if strict and last != f"checksum {_digest(body)}":
        raise FormatError("checksum mismatch: the document was modified or corrupted")
    return body


def read_instance(text: str, lenient: bool = False) -> CompiledInstance:
    """Parse an instance document.

    ``lenient`` normalizes rationals not in lowest terms and skips the
    checksum (for hand-edited files); everything else is still validated.
    """
    body = _split_checksum(text, strict=not lenient)
    lines = body.split("\n")[:-1]
    if not lines or lines[0] != MAGIC:
        raise FormatError(f"first line must be {MAGIC!r}", 1)
    header: dict[str, tuple[str, int]] = {}
    idx = 1
    while idx < len(lines) and not lines[idx].startswith("["):
        lineno = idx + 1
        toks = lines[idx].split()
        if len(toks) != 2 or toks[0] not in ("model", "observer", "query_time"):
            raise FormatError(f"unexpected header line {lines[idx]!r}", lineno)
        if toks[0] in header:
            raise FormatError(f"duplicate header field {toks[0]!r}", lineno)
        header[toks[0]] = (toks[1], lineno)
        idx += 1
    for key in ("model", "observer", "query_time"):
        if key not in header:
            raise FormatError(f"missing header field {key!r}")
    try:
        model = Model.parse(header["model"][0])
    except ValueError as exc:
        raise FormatError(str(exc), header["model"][1]) from exc
    observer = _check_id(*header["observer"])
    qt, qline = header["query_time"]
    if not re.match(r"^\d+$", qt):
        raise FormatError(f"query_time must be a non-negative integer, got {qt!r}", qline)
    query_time = int(qt)

    sections: dict[str, list[tuple[int, str]]] = {}
    order: list[str] = []
    current = None
    for i in range(idx, len(lines)):
        line = lines[i]
        lineno = i + 1
        if line.startswith("["):
            m = re.match(r"^\[(\w+)\]$", line)
            if not m or m.group(1) not in SECTIONS:
                raise FormatError(f"unknown section {line!r}", lineno)
            if m.group(1) in sections:
                raise FormatError(f"duplicate section {line!r}", lineno)
            current = m.group(1)
            sections[current] = []
            order.append(current)
            continue
        if line.strip() == "":
            raise FormatError("blank line inside a section", lineno)
        if line != line.rstrip():
            raise FormatError("trailing whitespace", lineno)
        sections[current].append((lineno, line))
    if order != list(SECTIONS):
        raise FormatError(f"sections must appear in the order {', '.join(SECTIONS)}")

    agents: list[Agent] = []
    ids: set[str] = set()
    for lineno, line in sections["agents"]:
        toks = line.split(" ")
        aid = _check_id(toks[0], lineno)
        if aid in ids:
            raise FormatError(f"duplicate agent {aid!r}", lineno)
        ids.add(aid)
        fields: dict[str, str] = {}
        for tok in toks[1:]:
            key, eq, val = tok.partition("=")
            if not eq or key not in ("p_true", "p_false", "time") or key in fields:
                raise FormatError(f"bad agent field {tok!r}", lineno)
            fields[key] = val
        signal = None
        if ("p_true" in fields) != ("p_false" in fields):
            raise FormatError("an informative agent needs both p_true and p_false", lineno)
        if "p_true" in fields:
            pt = tuple(parse_rational(x, lineno, lenient) for x in fields["p_true"].split(","))
            pf = tuple(parse_rational(x, lineno, lenient) for x in fields["p_false"].split(","))
            try:
                signal = SignalDistribution(pt, pf)
            except ValueError as exc:
                raise FormatError(str(exc), lineno) from exc
        time = None
        if "time" in fields:
            if not re.match(r"^\d+$", fields["time"]):
                raise FormatError(f"bad significant time {fields['time']!r}", lineno)
            time = int(fields["time"])
        agents.append(Agent(aid, signal, time))

    edges: list[tuple[str, str]] = []
    seen_edges: set[tuple[str, str]] = set()
    for lineno, line in sections["edges"]:
        toks = line.split(" ")
        if len(toks) != 2:
            raise FormatError("an edge line is '<observer> <observed>'", lineno)
        u, v = toks
        for x in (u, v):
            if x not in ids:
                raise FormatError(f"dangling agent id {x!r}", lineno)
        if (u, v) in seen_edges:
            raise FormatError(f"duplicate edge {u} -> {v}", lineno)
        seen_edges.add((u, v))
        edges.append((u, v))
    if observer not in ids:
        raise FormatError(f"dangling observer id {observer!r}", header["observer"][1])
    try:
        net = Network(tuple(agents), tuple(edges), observer)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc

    entries = {}
    own = None
    nbrs = set(net.observed[observer])
    for lineno, line in sections["history"]:
        toks = line.split(" ")
        if toks[0] == "own_signal" and len(toks) == 2 and own is None and not entries:
            own = _int_token(toks[1], lineno)
            continue
        if len(toks) != 3:
            raise FormatError("a history line is '<agent> <time> <action>'", lineno)
        v, t, a = toks
        if v not in nbrs:
            raise FormatError(f"{v!r} is not observed by {observer!r}", lineno)
        if not re.match(r"^\d+$", t) or int(t) >= query_time:
            raise FormatError(f"history time {t!r} outside [0, {query_time})", lineno)
        key = (v, int(t))
        if key in entries:
            raise FormatError(f"duplicate history entry {v} {t}", lineno)
        entries[key] = parse_action(a, model, lineno, lenient)

    provenance = {}
    for lineno, line in sections["provenance"]:
        toks = line.split(" ", 2)
        if len(toks) < 2 or toks[0] not in ids:
            raise FormatError("a provenance line is '<agent> <kind> [source]'", lineno)
        if toks[0] in provenance:
            raise FormatError(f"duplicate provenance for {toks[0]!r}", lineno)
        provenance[toks[0]] = (_check_id(toks[1], lineno), toks[2] if len(toks) == 3 else "")

    metadata = {}
    for lineno, line in sections["metadata"]:
        k, _, v = line.partition(" ")
        _check_id(k, lineno)
        if k in metadata:
            raise FormatError(f"duplicate metadata key {k!r}", lineno)
        metadata[k] = v
    return CompiledInstance(net, observer, query_time, ObservationHistory(observer, entries, own),
                            provenance, model, metadata)


# ---------------------------------------------------------------------------
# World states and traces
# ---------------------------------------------------------------------------

def write_world_state(omega: WorldState) -> str:
    lines = [f"theta {'T' if omega.theta else 'F'}"]
    lines += [f"{a} {s}" for a, s in omega.signals]
    return "\n".join(lines) + "\n"


def parse_world_state(text: str) -> WorldState:
    theta = None
    signals: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        toks = line.split()
        if len(toks) != 2:
            raise FormatError("expected '<agent> <signal>' or 'theta T|F'", lineno)
        if toks[0] == "theta":
            if theta is not None or toks[1] not in ("T", "F"):
                raise FormatError("theta must be given once, as T or F", lineno)
            theta = toks[1] == "T"
            continue
        aid = _check_id(toks[0], lineno)
        if aid in signals:
            raise FormatError(f"duplicate signal for {aid!r}", lineno)
        s = _int_token(toks[1], lineno)
        if s < 0:
            raise FormatError("negative signal", lineno)
        signals[aid] = s
    if theta is None:
        raise FormatError("missing theta line")
    return WorldState(theta, signals)


def write_trace(trace: ActionTrace, agents: Iterable[str]) -> str:
    """One line per agent and time: ``<agent> <time> <action> <belief>``."""
    lines = []
    for a in agents:
        for t in range(trace.horizon + 1):
            lines.append(f"{a} {t} {format_action(trace.action(a, t))} {format_rational(trace.belief(a, t))}")
    return "\n".join(lines) + "\n"
