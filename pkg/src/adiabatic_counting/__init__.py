"""Simulation of adiabatic quantum counting with local adiabatic evolution."""
from .counting import (
    AnalyticOracle,
    CountingEstimate,
    FullOracle,
    ReducedOracle,
    binary_search_mstar,
    classical_baseline,
    detect_nonzero,
    estimate_m,
    make_oracle,
    required_trials,
    run_counting,
)
from .dynamics import (
    ReducedRunSpec,
    ReducedState,
    integrate_reduced,
    p_sol,
    p_sol_landau_zener,
    p_sol_landau_zener_ratio,
    p_sol_small_eps,
    solution_probability,
)
from .estimators import AdiabaticCounter, ClassicalCounter
from .fullstate import GroverInstance, apply_hamiltonian, integrate_full, measure, run_full
from .grover import (
    ScheduleParams,
    angle_from_ratio,
    gap,
    lae_rate,
    matrix_element_v01,
    ratio_from_angle,
    strict_lae_rate,
)
from .schedule import AdiabaticSchedule, build_schedule, evaluate_s, total_runtime

__version__ = "0.1.0"


__all__ = [
    "AdiabaticCounter",
    "AdiabaticSchedule",
    "AnalyticOracle",
    "ClassicalCounter",
    "CountingEstimate",
    "FullOracle",
    "GroverInstance",
    "ReducedOracle",
    "ReducedRunSpec",
    "ReducedState",
    "ScheduleParams",
    "angle_from_ratio",
    "apply_hamiltonian",
    "binary_search_mstar",
    "build_schedule",
    "classical_baseline",
    "detect_nonzero",
    "estimate_m",
    "evaluate_s",
    "gap",
    "integrate_full",
    "integrate_reduced",
    "lae_rate",
    "make_oracle",
    "matrix_element_v01",
    "measure",
    "p_sol",
    "p_sol_landau_zener",
    "p_sol_landau_zener_ratio",
    "p_sol_small_eps",
    "ratio_from_angle",
    "required_trials",
    "run_counting",
    "run_full",
    "solution_probability",
    "strict_lae_rate",
    "total_runtime",
]
