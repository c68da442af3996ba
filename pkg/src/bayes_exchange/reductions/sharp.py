"""Counting reduction from 2SAT in the revealed-belief model.

The observer's belief ratio at time 2 is close to ``A / 2**N`` where ``A`` is
the number of satisfying assignments, close enough that rounding to the
nearest multiple of ``2**-N`` recovers ``A``.
"""

from __future__ import annotations

from fractions import Fraction

from ..core.types import CapExceeded, Model
from ..gadgets import E_DISTRIBUTION, RB_DISTRIBUTION, build_rb_gadget
from .formula import Formula
from .instance import Assembly, CompiledInstance
from .sat import literal_id

ANALYTIC_CAP = 24


def amplification(num_vars: int) -> int:
    return 2 * max(num_vars, 1)


def reduce_sharp_2sat(phi: Formula, observer_id: str = "OBS") -> CompiledInstance:
    """Network whose observer's belief ratio approximates the model count."""
    phi.check_width(2, 2)
    asm = Assembly()
    watched: list[str] = []
    d = RB_DISTRIBUTION
    for i in range(1, phi.num_vars + 1):
        asm.agent(literal_id(i, True), d, "literal", f"x{i}")
        asm.agent(literal_id(i, False), d, "literal", f"x{i}")
    asm.agent("EVAL", d, "eval", "")

    def add(g, source):
        asm.gadget(g, source)
        watched.extend(g.expected_actions)
        return g

    for i in range(1, phi.num_vars + 1):
        add(build_rb_gadget("variable", {"pos": literal_id(i, True), "neg": literal_id(i, False), "dist": d},
                            name=f"var{i}"), f"x{i}")
    for j, clause in enumerate(phi.clauses, 1):
        lits = [literal_id(v, p) for v, p in clause]
        g = add(build_rb_gadget("clause", {"literals": lits, "eval": "EVAL", "dist": d}, name=f"cl{j}"), f"C{j}")
        add(build_rb_gadget("neutralizer_E", {"e": g.interface_ids["E"], "dist": E_DISTRIBUTION},
                            name=f"nE{j}"), f"C{j}")
    add(build_rb_gadget("neutralizer_EVAL", {"eval": "EVAL", "dist": d}, name="nEVAL"), "EVAL")
    b = amplification(phi.num_vars)
    add(build_rb_gadget("amplifier", {"eval": "EVAL", "dist": d, "b": b}, name="amp"), "amplifier")
    asm.agent(observer_id, None, "observer", "")
    asm.observe(observer_id, watched)
    inst = asm.finish(observer_id, Model.BELIEF, {
        "source": "sharp-2sat", "b": b, "num_vars": phi.num_vars, "num_clauses": phi.num_clauses,
    })
    if inst.query_time != 2:
        raise AssertionError(f"observer significant time {inst.query_time}, expected 2")
    return inst


def count_models(phi: Formula, cap: int = ANALYTIC_CAP) -> int:
    if phi.num_vars > cap:
        raise CapExceeded(f"{phi.num_vars} variables exceed the analytic cap {cap}")
    total = 0
    for mask in range(1 << phi.num_vars):
        if phi.satisfied_by([bool(mask >> i & 1) for i in range(phi.num_vars)]):
            total += 1
    return total


def ratio_for_count(count: int, num_vars: int) -> Fraction:
    """Belief ratio of the observer when ``count`` assignments satisfy."""
    b = amplification(num_vars)
    hi, lo = Fraction(3, 4) ** b, Fraction(1, 4) ** b
    n = 1 << num_vars
    return (count * hi + n * lo) / (n * hi + count * lo)


def analytic_ratio_sharp(phi: Formula, cap: int = ANALYTIC_CAP) -> Fraction:
    """Exact ``mu / (1 - mu)`` of the compiled observer at time 2."""
    return ratio_for_count(count_models(phi, cap), phi.num_vars)


def recover_count(ratio: Fraction, num_vars: int) -> int:
    """Nearest integer to ``ratio * 2**num_vars`` (halves round up)."""
    x = Fraction(ratio) * (1 << num_vars)
    return int((x + Fraction(1, 2)).__floor__())


def relative_error(ratio: Fraction, count: int, num_vars: int) -> Fraction:
    """``|ratio - A/2**N| / (A/2**N)``; zero counts use the absolute error."""
    target = Fraction(count, 1 << num_vars)
    err = abs(Fraction(ratio) - target)
    return err / target if target else err
