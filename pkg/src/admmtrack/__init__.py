"""Deterministic simulator and numeric toolkit for distributed
consensus-optimization algorithms built on ADMM dynamic consensus."""

from ._backend import BACKEND
from .algorithms import (
    GTState,
    HyperParams,
    NetworkState,
    PSTrackState,
    atg_step,
    gt_step,
    init_gt_state,
    init_network_state,
    init_ps_state,
    ps_tracking_step,
    ratg_step,
)
from .graph import (
    GraphConstructionError,
    Topology,
    complete,
    erdos_renyi,
    is_connected,
    metropolis_weights,
    path,
    ring,
    star,
)
from .netsim import (
    ALGORITHMS,
    NoiseSpec,
    Schedule,
    ScheduleError,
    Trace,
    bernoulli_schedule,
    random_bernoulli_schedule,
    run_simulation,
    verify_essentially_cyclic,
)
from .problems import (
    LogisticProblem,
    QuadraticProblem,
    SolverError,
    centralized_solve,
    random_logistic,
    random_quadratic,
)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "BACKEND",
    "GTState",
    "GraphConstructionError",
    "HyperParams",
    "LogisticProblem",
    "NetworkState",
    "NoiseSpec",
    "PSTrackState",
    "QuadraticProblem",
    "Schedule",
    "ScheduleError",
    "SolverError",
    "Topology",
    "Trace",
    "atg_step",
    "bernoulli_schedule",
    "centralized_solve",
    "complete",
    "erdos_renyi",
    "gt_step",
    "init_gt_state",
    "init_network_state",
    "init_ps_state",
    "is_connected",
    "metropolis_weights",
    "path",
    "ps_tracking_step",
    "random_bernoulli_schedule",
    "random_logistic",
    "random_quadratic",
    "ratg_step",
    "ring",
    "run_simulation",
    "star",
    "verify_essentially_cyclic",
]
