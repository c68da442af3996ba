"""Command-line front end.

Exit codes: 0 success, 1 unreadable or malformed input, 2 enumeration cap
exceeded, 3 a checked claim failed (including an inconsistent history).
"""

from __future__ import annotations

import argparse
import decimal
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import formats
from .core.engine import DEFAULT_CAP, posterior, simulate
from .core.structure import significant_times, validate_structured
from .core.types import CapExceeded, InconsistentHistory, Model
from .gadgets import run_gadget_suite
from .oracle import brute_sat, brute_tqbf, count_2sat
from .reductions import (
    QBF,
    ReductionParams,
    analytic_posterior_3sat,
    analytic_posterior_tqbf,
    analytic_ratio_sharp,
    check_sat_claim,
    choose_b,
    recover_count,
    reduce_3sat,
    reduce_sharp_2sat,
    reduce_tqbf,
)
from .reductions.sat import DEFAULT_B

EXIT_OK, EXIT_PARSE, EXIT_CAP, EXIT_CLAIM = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(f"{self.prog}: {message}", EXIT_PARSE)


def approx(x: Fraction, digits: int = 12) -> str:
    """Decimal rendering of an exact rational, for display only."""
    ctx = decimal.Context(prec=digits, Emin=-10 ** 9, Emax=10 ** 9)
    return str(ctx.divide(decimal.Decimal(x.numerator), decimal.Decimal(x.denominator)))


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", EXIT_PARSE) from exc


def _load_formula(path: str):
    try:
        return formats.parse_formula_file(_read(path))
    except formats.FormatError as exc:
        raise CliError(f"{path}: {exc}", EXIT_PARSE) from exc


def _load_instance(path: str, lenient: bool = False):
    try:
        return formats.read_instance(_read(path), lenient=lenient)
    except formats.FormatError as exc:
        raise CliError(f"{path}: {exc}", EXIT_PARSE) from exc


def _params(args) -> ReductionParams:
    return ReductionParams(b=args.b if args.b is not None else DEFAULT_B, bounded_mode=args.bounded)


# ---------------------------------------------------------------------------
# Subcommands; each returns (exit code, structured result, text lines)
# ---------------------------------------------------------------------------

def cmd_compile(args):
    source = _load_formula(args.input)
    model = Model.parse(args.model)
    try:
        if model is Model.BELIEF:
            if isinstance(source, QBF):
                raise CliError("the revealed-belief compiler takes a 2SAT formula", EXIT_PARSE)
            inst = reduce_sharp_2sat(source)
        elif isinstance(source, QBF):
            inst = reduce_tqbf(source, _params(args))
        else:
            inst = reduce_3sat(source, _params(args))
    except CapExceeded as exc:
        raise CliError(str(exc), EXIT_CAP) from exc
    except ValueError as exc:
        raise CliError(f"cannot compile {args.input}: {exc}", EXIT_PARSE) from exc
    doc = formats.write_instance(inst)
    result = {"observer": inst.observer_id, "query_time": inst.query_time,
              "agents": inst.agent_count(), "edges": inst.edge_count(),
              "distributions": len(inst.distributions())}
    if args.output:
        Path(args.output).write_text(doc, encoding="utf-8")
        result["output"] = args.output
        lines = [f"wrote {args.output}: {result['agents']} agents, observer {inst.observer_id} "
                 f"at time {inst.query_time}"]
    else:
        result["document"] = doc
        lines = [doc.rstrip("\n")]
    return EXIT_OK, result, lines


def cmd_simulate(args):
    inst = _load_instance(args.instance, args.lenient)
    try:
        omega = formats.parse_world_state(_read(args.world))
    except formats.FormatError as exc:
        raise CliError(f"{args.world}: {exc}", EXIT_PARSE) from exc
    horizon = args.horizon if args.horizon is not None else inst.query_time
    try:
        trace = simulate(inst.network, omega, horizon, inst.model, cap=args.cap)
    except CapExceeded as exc:
        raise CliError(str(exc), EXIT_CAP) from exc
    except ValueError as exc:
        raise CliError(f"{args.world}: {exc}", EXIT_PARSE) from exc
    ids = [a.id for a in inst.network.agents]
    rows = [{"agent": a, "time": t, "action": formats.format_action(trace.action(a, t)),
             "belief": formats.format_rational(trace.belief(a, t))}
            for a in ids for t in range(horizon + 1)]
    return EXIT_OK, {"horizon": horizon, "trace": rows}, formats.write_trace(trace, ids).rstrip("\n").split("\n")


def cmd_posterior(args):
    inst = _load_instance(args.instance, args.lenient)
    try:
        if args.formula:
            mu = _analytic_mu(inst, _load_formula(args.formula))
            route = "analytic"
        else:
            mu = posterior(inst.network, inst.expected_history, inst.query_time, inst.model, cap=args.cap)
            route = "engine"
    except CapExceeded as exc:
        raise CliError(f"{exc} (pass --formula to use the closed-form calculator)", EXIT_CAP) from exc
    except InconsistentHistory as exc:
        raise CliError(f"inconsistent history: {exc}", EXIT_CLAIM) from exc
    result = {"route": route, "mu": formats.format_rational(mu), "mu_approx": approx(mu)}
    lines = [f"mu = {result['mu']}", f"mu ~ {result['mu_approx']} (approximate)"]
    if inst.model is Model.BINARY:
        result["verdict"] = "T" if mu > Fraction(1, 2) else "F"
        lines.append(f"verdict {result['verdict']}")
    elif mu < 1:
        ratio = mu / (1 - mu)
        result["ratio"] = formats.format_rational(ratio)
        result["ratio_approx"] = approx(ratio)
        lines += [f"ratio = {result['ratio']}", f"ratio ~ {result['ratio_approx']} (approximate)"]
        n = inst.metadata.get("num_vars")
        if inst.metadata.get("source") == "sharp-2sat" and n is not None:
            result["count"] = recover_count(ratio, int(n))
            lines.append(f"count {result['count']}")
    return EXIT_OK, result, lines


def _analytic_mu(inst, source) -> Fraction:
    meta = inst.metadata
    if meta.get("source") == "sharp-2sat":
        r = analytic_ratio_sharp(source)
        return r / (1 + r)
    params = ReductionParams(b=int(meta.get("b", DEFAULT_B)),
                             bounded_mode=meta.get("source", "").endswith("bounded"))
    if isinstance(source, QBF):
        return analytic_posterior_tqbf(source, params)[0]
    return analytic_posterior_3sat(source, params)[0]


def cmd_verify(args):
    entries: list[tuple[str, bool, str]] = []
    if args.target == "gadget-suite":
        for label, report in run_gadget_suite(cap=args.cap):
            for name, ok, detail in report.entries:
                entries.append((f"{label}: {name}", ok, detail))
    else:
        inst = _load_instance(args.target, args.lenient)
        problems = validate_structured(inst.network)
        entries.append(("structured network", not problems, "; ".join(problems[:3])))
        times = significant_times(inst.network)
        ok = times.get(inst.observer_id) == inst.query_time
        entries.append(("query time is the observer's significant time", ok,
                        "" if ok else f"significant time {times.get(inst.observer_id)}"))
        try:
            posterior(inst.network, inst.expected_history, inst.query_time, inst.model, cap=args.cap)
            entries.append(("designated history is consistent", True, ""))
        except InconsistentHistory as exc:
            entries.append(("designated history is consistent", False, str(exc)))
        except CapExceeded as exc:
            raise CliError(str(exc), EXIT_CAP) from exc
        if args.formula:
            source = _load_formula(args.formula)
            meta = inst.metadata
            if meta.get("source") == "3sat" and not isinstance(source, QBF):
                try:
                    report = check_sat_claim(inst, source, ReductionParams(b=int(meta.get("b", DEFAULT_B))),
                                             cap=args.cap)
                except CapExceeded as exc:
                    raise CliError(str(exc), EXIT_CAP) from exc
                entries += report.entries
            else:
                raise CliError("--formula claim checks cover unbounded 3SAT instances", EXIT_PARSE)
    failed = [e for e in entries if not e[1]]
    lines = [f"{'PASS' if ok else 'FAIL'} {name}" + (f" ({d})" if d else "") for name, ok, d in entries]
    lines.append(f"{len(entries) - len(failed)} passed, {len(failed)} failed")
    result = {"checks": [{"name": n, "ok": ok, "detail": d} for n, ok, d in entries],
              "passed": len(entries) - len(failed), "failed": len(failed)}
    return (EXIT_CLAIM if failed else EXIT_OK), result, lines


def cmd_oracle(args):
    source = _load_formula(args.input)
    try:
        if isinstance(source, QBF):
            r = brute_tqbf(source)
            result = {"kind": "tqbf", "value": bool(r.value)}
            lines = [f"{'true' if r.value else 'false'}"]
        elif args.count:
            r = count_2sat(source)
            result = {"kind": "count", "value": int(r.value)}
            lines = [str(r.value)]
        else:
            r = brute_sat(source)
            result = {"kind": "sat", "value": bool(r.value), "count": r.count,
                      "witness": None if r.witness is None else [int(x) for x in r.witness]}
            lines = [("satisfiable" if r.value else "unsatisfiable") + f" ({r.count} of {2 ** source.num_vars})"]
            if r.witness is not None:
                lines.append("witness " + " ".join(str(i + 1 if x else -(i + 1)) for i, x in enumerate(r.witness)))
    except CapExceeded as exc:
        raise CliError(str(exc), EXIT_CAP) from exc
    return EXIT_OK, result, lines


def cmd_choose_b(args):
    if args.n < 1:
        raise CliError("N must be at least 1", EXIT_PARSE)
    b = choose_b(args.n)
    return EXIT_OK, {"n": args.n, "b": b}, [str(b)]


def build_parser() -> argparse.ArgumentParser:
    # shared flags are accepted before or after the subcommand
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS, help="machine-readable output")
    common.add_argument("--cap", type=int, default=argparse.SUPPRESS,
                        help=f"enumeration cap (default {DEFAULT_CAP})")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="seed for randomized corpus generation (default 0)")
    common.add_argument("--lenient", action="store_true", default=argparse.SUPPRESS,
                        help="accept hand-edited instance documents (no checksum, unreduced rationals)")
    p = _Parser(prog="bayes-exchange", description="Exact Bayesian opinion exchange: compile, simulate, verify.",
                parents=[common])
    p.set_defaults(json=False, cap=DEFAULT_CAP, seed=0, lenient=False)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("compile", parents=[common], help="formula or QBF file to instance document")
    c.add_argument("input")
    c.add_argument("--b", type=int, default=None, help=f"amplification exponent (default {DEFAULT_B})")
    c.add_argument("--bounded", action="store_true", help="use the fixed family of signal distributions")
    c.add_argument("--model", choices=["binary", "belief"], default="binary")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_compile)

    s = sub.add_parser("simulate", parents=[common], help="trace of every agent in one world state")
    s.add_argument("instance")
    s.add_argument("world")
    s.add_argument("--horizon", type=int, default=None)
    s.set_defaults(func=cmd_simulate)

    q = sub.add_parser("posterior", parents=[common], help="exact belief of the designated observer")
    q.add_argument("instance")
    q.add_argument("--formula", help="source formula; use the closed-form calculator")
    q.set_defaults(func=cmd_posterior)

    v = sub.add_parser("verify", parents=[common], help="claim checks on an instance or on the gadget suite")
    v.add_argument("target", help="instance file or 'gadget-suite'")
    v.add_argument("--formula", help="source 3SAT formula for the consistent-configuration check")
    v.set_defaults(func=cmd_verify)

    o = sub.add_parser("oracle", parents=[common], help="brute-force answer for a formula or QBF")
    o.add_argument("input")
    o.add_argument("--count", action="store_true", help="count satisfying assignments")
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("choose-b", parents=[common], help="smallest certified amplification exponent for N variables")
    b.add_argument("n", type=int)
    b.set_defaults(func=cmd_choose_b)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        code, result, lines = args.func(args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        if "--json" in (argv if argv is not None else sys.argv[1:]):
            print(json.dumps({"error": str(exc), "exit_code": exc.code}, sort_keys=True))
        return exc.code
    if args.json:
        print(json.dumps(result, sort_keys=True))
    else:
        print("\n".join(lines))
    return code


if __name__ == "__main__":
    sys.exit(main())
