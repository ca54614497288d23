"""Implicit solver and diagnostics for a fourth-order thin-neck model."""

from .grid import (
    Grid,
    Profile,
    diff,
    make_grid,
    min_value,
    quadrature,
    sobolev_norm,
)
from .steady import SteadyState, contact_point, parabola, steady_energy, steady_profile
from .functionals import (
    EnergyLedger,
    SpaceTimeBump,
    dissipation,
    energy,
    entropy,
    entropy_density,
    flux,
    flux_identity_residual,
    weak_residual,
)
from .linear import (
    BandedSystem,
    FluxEnergyReport,
    LinearSolveError,
    StepResult,
    assemble_operator,
    condition_estimate,
    flux_energy_report,
    step_linear,
)
from .evolve import (
    ContinuationReport,
    DecayFit,
    PicardConvergenceError,
    PinchReport,
    RelaxReport,
    RunStart,
    SolverConfig,
    Termination,
    Trajectory,
    decay_rate,
    detect_pinch,
    epsilon_continuation,
    log_min_derivative_check,
    relaxation_check,
    run,
    step_nonlinear,
)
from .initial import (
    bc_residuals,
    build_initial_condition,
    default_poly_amplitude,
    ic_steady,
    ic_steady_perturbed_poly,
    ic_steady_perturbed_random,
    project_boundary_rows,
)
from .io import (
    RunManifest,
    build_report,
    execute_run,
    load_checkpoint,
    read_snapshots_jsonl,
    resolve_config,
    write_checkpoint,
    write_ledger_csv,
    write_report_json,
    write_snapshots_jsonl,
)
from .verify import CheckResult, run_checks

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "Profile",
    "make_grid",
    "diff",
    "quadrature",
    "sobolev_norm",
    "min_value",
    "SteadyState",
    "steady_profile",
    "contact_point",
    "parabola",
    "steady_energy",
    "EnergyLedger",
    "SpaceTimeBump",
    "energy",
    "dissipation",
    "entropy",
    "entropy_density",
    "flux",
    "flux_identity_residual",
    "weak_residual",
    "BandedSystem",
    "StepResult",
    "FluxEnergyReport",
    "LinearSolveError",
    "assemble_operator",
    "condition_estimate",
    "step_linear",
    "flux_energy_report",
    "SolverConfig",
    "Trajectory",
    "Termination",
    "RunStart",
    "PicardConvergenceError",
    "ContinuationReport",
    "PinchReport",
    "DecayFit",
    "RelaxReport",
    "run",
    "step_nonlinear",
    "epsilon_continuation",
    "detect_pinch",
    "log_min_derivative_check",
    "decay_rate",
    "relaxation_check",
    "bc_residuals",
    "project_boundary_rows",
    "build_initial_condition",
    "default_poly_amplitude",
    "ic_steady",
    "ic_steady_perturbed_poly",
    "ic_steady_perturbed_random",
    "RunManifest",
    "execute_run",
    "build_report",
    "resolve_config",
    "write_ledger_csv",
    "write_snapshots_jsonl",
    "read_snapshots_jsonl",
    "write_report_json",
    "write_checkpoint",
    "load_checkpoint",
    "CheckResult",
    "run_checks",
    "__version__",
]
