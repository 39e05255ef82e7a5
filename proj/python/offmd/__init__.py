"""Distributed Lennard-Jones dynamics with off-path neighbor rebuilds.

The heavy lifting lives in the C++ core; this package re-exports the bound
surface: simulation entry points (run, run_baseline, run_offpath), the
single-node kernels (create_lattice, neighbor_build, force_compute,
wrap_periodic), and the analysis helpers (compute_tdr, improvement,
estimate_offpath_time, peak_ratio, measure_for_model).
"""

from ._offmd import (
    ConfigError,
    ConservationSample,
    NumericalBlowupError,
    PerfMeasurement,
    ProtocolDesyncError,
    RunSetup,
    SimParams,
    SimulationResult,
    TdrReport,
    ThermoSample,
    TimingBreakdown,
    TransportError,
    compute_tdr,
    compute_temperature,
    create_lattice,
    estimate_offpath_time,
    force_compute,
    improvement,
    max_comm_offload_improvement,
    measure_for_model,
    neighbor_build,
    peak_ratio,
    run,
    run_baseline,
    run_offpath,
    wrap_periodic,
)

__all__ = [
    "ConfigError",
    "ConservationSample",
    "NumericalBlowupError",
    "PerfMeasurement",
    "ProtocolDesyncError",
    "RunSetup",
    "SimParams",
    "SimulationResult",
    "TdrReport",
    "ThermoSample",
    "TimingBreakdown",
    "TransportError",
    "compute_tdr",
    "compute_temperature",
    "create_lattice",
    "estimate_offpath_time",
    "force_compute",
    "improvement",
    "max_comm_offload_improvement",
    "measure_for_model",
    "neighbor_build",
    "peak_ratio",
    "run",
    "run_baseline",
    "run_offpath",
    "wrap_periodic",
]

__version__ = "1.0.0"
