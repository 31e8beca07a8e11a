"""Solvers for the LWR traffic model at a single road junction.

Three independent routes to the same coupling condition: a priority-based
generalized Riemann solver, a concave flux optimization solved through its
optimality system, and a kinetic BGK approximation with junction coupling.
"""

from .core import (
    BranchDecomposition,
    EntropyPair,
    FluxFunction,
    SolverError,
    chi_moment,
    entropy_flux_eval,
    godunov_flux,
    is_dissipation_compatible,
    kruzkov_flux,
    neg_flux_entropy,
    quadratic_entropy,
    self_similar_eval,
)
from .junction import (
    Junction,
    JunctionSolution,
    LinearPriority,
    Road,
    classify_state,
    germ_dissipation,
    germ_project,
    hat_states,
    solve_riemann,
    xi,
)
from .max_dissipation import (
    FluxProgram,
    brute_force_max_dissipation,
    build_flux_program,
    holden_risebro_convert,
    holden_risebro_invert,
    kkt_cases,
    recenter_entropy,
    solve_max_dissipation,
)
from .kinetic import (
    KineticGrid,
    KineticState,
    bgk_step,
    chi_bar,
    kinetic_coupling_psi,
    kinetic_dissipation_check,
    relaxation_step,
)
from .network import (
    NetworkState,
    bgk_solve,
    compare_kinetic_macroscopic,
    godunov_solve,
)
from .presets import table1_data, table1_junction

__version__ = "0.1.0"

__all__ = [
    "BranchDecomposition",
    "EntropyPair",
    "FluxFunction",
    "SolverError",
    "chi_moment",
    "entropy_flux_eval",
    "godunov_flux",
    "is_dissipation_compatible",
    "kruzkov_flux",
    "neg_flux_entropy",
    "quadratic_entropy",
    "self_similar_eval",
    "Junction",
    "JunctionSolution",
    "LinearPriority",
    "Road",
    "classify_state",
    "germ_dissipation",
    "germ_project",
    "hat_states",
    "solve_riemann",
    "xi",
    "FluxProgram",
    "brute_force_max_dissipation",
    "build_flux_program",
    "holden_risebro_convert",
    "holden_risebro_invert",
    "kkt_cases",
    "recenter_entropy",
    "solve_max_dissipation",
    "KineticGrid",
    "KineticState",
    "bgk_step",
    "chi_bar",
    "kinetic_coupling_psi",
    "kinetic_dissipation_check",
    "relaxation_step",
    "NetworkState",
    "bgk_solve",
    "compare_kinetic_macroscopic",
    "godunov_solve",
    "table1_data",
    "table1_junction",
]
