"""Compilers from SAT, TQBF and #2SAT to network instances, with analytic checks."""

from .formula import EXISTS, FORALL, QBF, Formula, assignments
from .instance import Assembly, CompiledInstance
from .sat import (
    BASE_ALPHAS,
    EVAL_DISTRIBUTION,
    ReductionParams,
    StageFactors,
    TQBFAnalysis,
    analytic_posterior_3sat,
    analytic_posterior_tqbf,
    bound_checks,
    check_modified_not_equal,
    check_sat_claim,
    choose_b,
    compute_block_ratios,
    engine_block_ratios,
    engine_observer_weights,
    reduce_3sat,
    reduce_bounded,
    reduce_tqbf,
)
from .sharp import analytic_ratio_sharp, recover_count, reduce_sharp_2sat, relative_error
from .tiebreak import apply_eps_tiebreak, max_safe_eps, tie_gap

__all__ = [
    "EXISTS", "FORALL", "QBF", "Formula", "assignments", "Assembly", "CompiledInstance",
    "BASE_ALPHAS", "EVAL_DISTRIBUTION", "ReductionParams", "StageFactors", "TQBFAnalysis",
    "analytic_posterior_3sat", "analytic_posterior_tqbf", "bound_checks", "check_modified_not_equal", "check_sat_claim",
    "choose_b", "compute_block_ratios", "engine_block_ratios", "engine_observer_weights",
    "reduce_3sat", "reduce_bounded", "reduce_tqbf", "analytic_ratio_sharp", "recover_count",
    "reduce_sharp_2sat", "relative_error", "apply_eps_tiebreak", "max_safe_eps", "tie_gap",
]
