"""Stochastic conflict-based task allocation: python facade over the C++ core."""

from _scoba import (
    InputError,
    ProblemInstance,
    ResourceError,
    allocate,
    attempt_feasible,
    brute_force_optimal,
    completion_upper_bound,
    detect_conflicts,
    epan_cdf,
    grasp_cdf,
    load_instance,
    plan_tree_summary,
    run_trial,
    save_instance,
)

__all__ = [
    "InputError",
    "ProblemInstance",
    "ResourceError",
    "allocate",
    "attempt_feasible",
    "brute_force_optimal",
    "completion_upper_bound",
    "detect_conflicts",
    "epan_cdf",
    "grasp_cdf",
    "load_instance",
    "plan_tree_summary",
    "run_trial",
    "save_instance",
]
