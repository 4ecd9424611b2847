"""Antecedent search: constraint systems, the exhaustive oracle and branch and bound."""
from .oracle import DEFAULT_CAP, EnumerationCapError, brute_force_antecedent
from .search import STRATEGIES, add_verdict_listener, remove_verdict_listener, solve_feasibility
from .system import (
    DEFAULT_EPS,
    AntecedentRangeError,
    Budget,
    ConstraintSystem,
    Status,
    Verdict,
    build_constraints,
    k_bounds,
    system_for_block,
    verify_antecedent,
)

__all__ = [
    "AntecedentRangeError",
    "Budget",
    "ConstraintSystem",
    "DEFAULT_CAP",
    "DEFAULT_EPS",
    "EnumerationCapError",
    "STRATEGIES",
    "add_verdict_listener",
    "remove_verdict_listener",
    "Status",
    "Verdict",
    "brute_force_antecedent",
    "build_constraints",
    "k_bounds",
    "solve_feasibility",
    "system_for_block",
    "verify_antecedent",
]
