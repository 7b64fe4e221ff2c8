"""Synchronous and bounded-delay asynchronous consensus on directed topologies."""

from .analysis import (
    ConvergenceReport,
    analyze,
    discrepancy_report,
    verify_theorem1_empirically,
)
from .exceptions import (
    ConvergenceError,
    EnumerationCapError,
    NotRowStochasticError,
    StationaryError,
    StructureError,
    TopologyError,
)
from .sim import DelayModel, Trajectory, detect_consensus, monte_carlo, run_async, run_sync
from .stochastic import (
    async_margin,
    consensus_weights,
    is_row_stochastic,
    product,
    spectral_radius,
    stationary,
    stationary_closed_form,
)
from .switched import DelayAssignment, chain, enumerate_modes, lift_initial, modal_matrix, step
from .topology import (
    DirectedTopology,
    classify_roots,
    find_leaders,
    load_topology,
    read_topology,
    reorder_leaders_first,
    row_normalize,
)

__version__ = "0.1.0"
