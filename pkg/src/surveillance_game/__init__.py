"""Time-optimal strategies for a surveillance pursuit-evasion game.

A differential drive robot tries to keep a faster omnidirectional agent
inside its detection circle; the agent tries to leave it.  This package
synthesizes the closed-form solution of that game: terminal conditions and
adjoint dynamics (pmp), the retro-time arc families and singular loci
(surfaces), their assembly into a partition of the playing annulus with
point-location queries (partition), forward simulation of both players
under the synthesized feedback (simulate), a brute-force dynamic
programming cross-check (oracle) and a battery of independent consistency
suites (verify).  GameSolver wraps the pipeline in an estimator-style
interface, and the command line mirrors it for batch use.
"""

from .core import (
    EvaderControl,
    GameParams,
    PolarState,
    RealisticState,
    ReducedState,
    WheelControls,
    from_polar,
    integrate,
    realistic_dynamics,
    reduced_dynamics,
    retro_reduced_dynamics,
    to_polar,
    to_realistic,
    to_reduced,
)
from .errors import (
    AlreadyEscapedError,
    ArcDomainError,
    BoundaryRegimeError,
    ConvergenceError,
    CoverageError,
    DegenerateCostateError,
    GameError,
    InsideBodyError,
    NonFiniteError,
    PolarSingularityError,
    RegimeError,
    SingularControlError,
    SnapshotRangeError,
    ValidationError,
)
from .pmp import (
    Costate,
    UsablePart,
    costate_retro_flow,
    hamiltonian,
    optimal_evader_control,
    optimal_pursuer_controls,
    switching_terms,
    terminal_state,
    usable_part_check,
)
from .surfaces import (
    ArcFamily,
    CriticalPoint,
    DsSegment,
    FocalPoint,
    SingularLoci,
    TrajectoryArc,
    critical_point,
    find_focal_point,
    find_us_ds_split,
    primary_arc,
    ts_point,
)
from .partition import (
    Partition,
    Regime,
    StrategyResult,
    build_partition,
    classify_regime,
    locate,
    value,
)
from .simulate import (
    SCENARIOS,
    SimulationRun,
    export_snapshots,
    run_scenario,
    simulate_game,
)
from .oracle import ComparisonReport, ValueGrid, compare, dp_solve
from .verify import SUITES, SuiteReport, run_suites
from .estimator import GameSolver

__all__ = [
    "EvaderControl",
    "GameParams",
    "PolarState",
    "RealisticState",
    "ReducedState",
    "WheelControls",
    "from_polar",
    "integrate",
    "realistic_dynamics",
    "reduced_dynamics",
    "retro_reduced_dynamics",
    "to_polar",
    "to_realistic",
    "to_reduced",
    "AlreadyEscapedError",
    "ArcDomainError",
    "BoundaryRegimeError",
    "ConvergenceError",
    "CoverageError",
    "DegenerateCostateError",
    "GameError",
    "InsideBodyError",
    "NonFiniteError",
    "PolarSingularityError",
    "RegimeError",
    "SingularControlError",
    "SnapshotRangeError",
    "ValidationError",
    "Costate",
    "UsablePart",
    "costate_retro_flow",
    "hamiltonian",
    "optimal_evader_control",
    "optimal_pursuer_controls",
    "switching_terms",
    "terminal_state",
    "usable_part_check",
    "ArcFamily",
    "CriticalPoint",
    "DsSegment",
    "FocalPoint",
    "SingularLoci",
    "TrajectoryArc",
    "critical_point",
    "find_focal_point",
    "find_us_ds_split",
    "primary_arc",
    "ts_point",
    "Partition",
    "Regime",
    "StrategyResult",
    "build_partition",
    "classify_regime",
    "locate",
    "value",
    "SCENARIOS",
    "SimulationRun",
    "export_snapshots",
    "run_scenario",
    "simulate_game",
    "ComparisonReport",
    "ValueGrid",
    "compare",
    "dp_solve",
    "SUITES",
    "SuiteReport",
    "run_suites",
    "GameSolver",
]
