"""Topology identification of RC thermal networks from zone temperature series."""
from .errors import (
    DimensionMismatch,
    EmptyTruth,
    InsufficientSamples,
    InvalidNetwork,
    MalformedFile,
    NonConvergence,
    NonStationaryFilter,
    RcTopoError,
    SingularAtFrequency,
    SolverDiverged,
    UnknownPair,
    UnstableDiscretization,
)
from .network import (
    Branch,
    DiscreteDynamics,
    Node,
    RcNetwork,
    discretize,
    five_zone_network,
    load_network,
    true_edge_set,
    validate,
)
from .simulate import NoisePlan, TimeSeriesPanel, export_csv, generate_inputs, import_csv, rollout, simulate_panel
from .wiener import FilterBank, FrequencyGrid, fit_all, fit_wiener, freq_response, h_inf_norm
from .oracle import AnalyticBank, ZDomainModel, analytic_spectrum_inverse, analytic_wiener, check_theorem3_conditions
from .topology import GraphEstimate, learn_topology, moral_graph, prune_two_hop, reconstruction_error
from .baselines import fit_glasso, fit_regression

__version__ = "0.1.0"
