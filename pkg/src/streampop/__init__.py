"""Population dynamics on stream networks: growth rates, equilibria, allocation studies.

The model couples logistic growth on graph nodes with diffusion (rate d,
both directions) and drift (rate q, downstream only) along edges. The
package builds and validates the networks, computes the low-density growth
rate and its bounds, solves for the unique positive equilibrium, classifies
equilibrium sign patterns, and optimizes resource allocations, with a CLI
on top.
"""

from .dynamics import (
    Equilibrium,
    LogisticParams,
    Trajectory,
    biomass_upper_bound,
    integrate,
    network_biomass,
    positive_equilibrium,
    rhs,
)
from .exceptions import ConvergenceError, InvalidNetworkError
from .network import (
    ConnectionMatrix,
    StreamNetwork,
    ValidationReport,
    build_connection_matrix,
    canonical_three_node,
    downstream_end_nodes,
    downstream_neighbor_counts,
    ensure_valid,
    enumerate_homogeneous_networks,
    find_level_function,
    most_downstream_end_nodes,
    network_to_json,
    oriented_edges,
    read_network,
    straight_chain,
    validate,
    write_network,
)
from .optimize import (
    Allocation,
    BiomassConcentrationReport,
    MethodTrace,
    OptimizationResult,
    SmallDGrowthReport,
    UniformPerturbationReport,
    maximize_biomass,
    maximize_growth_rate,
    probe_allocations,
    simplex_grid,
    verify_biomass_concentration,
    verify_small_d_growth,
    verify_uniform_perturbation,
)
from .signs import (
    AdmissibilityVerdict,
    EdgeFlow,
    NetFlowReport,
    SignPattern,
    SurveyResult,
    check_admissibility,
    net_flows,
    sign_pattern,
    survey_patterns,
)
from .spectral import (
    PerronPair,
    PerturbationSpec,
    SpectralReport,
    first_order_perturbation,
    growth_rate,
    growth_rate_bounds,
    growth_rate_mu,
    growth_rate_zero_diffusion,
    perron_flow_vector,
    stationary_distribution,
)

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "AdmissibilityVerdict",
    "BiomassConcentrationReport",
    "ConnectionMatrix",
    "ConvergenceError",
    "EdgeFlow",
    "Equilibrium",
    "InvalidNetworkError",
    "LogisticParams",
    "MethodTrace",
    "NetFlowReport",
    "OptimizationResult",
    "PerronPair",
    "PerturbationSpec",
    "SignPattern",
    "SmallDGrowthReport",
    "SpectralReport",
    "StreamNetwork",
    "SurveyResult",
    "Trajectory",
    "UniformPerturbationReport",
    "ValidationReport",
    "biomass_upper_bound",
    "build_connection_matrix",
    "canonical_three_node",
    "check_admissibility",
    "downstream_end_nodes",
    "downstream_neighbor_counts",
    "ensure_valid",
    "enumerate_homogeneous_networks",
    "find_level_function",
    "first_order_perturbation",
    "growth_rate",
    "growth_rate_bounds",
    "growth_rate_mu",
    "growth_rate_zero_diffusion",
    "integrate",
    "maximize_biomass",
    "maximize_growth_rate",
    "most_downstream_end_nodes",
    "net_flows",
    "network_biomass",
    "network_to_json",
    "oriented_edges",
    "perron_flow_vector",
    "positive_equilibrium",
    "probe_allocations",
    "read_network",
    "rhs",
    "sign_pattern",
    "simplex_grid",
    "stationary_distribution",
    "straight_chain",
    "survey_patterns",
    "validate",
    "verify_biomass_concentration",
    "verify_small_d_growth",
    "verify_uniform_perturbation",
    "write_network",
]
