"""Reduced dynamics: quorum-sensing compartments and phase-oscillator variants."""
from .kuramoto import (KuramotoParams, KuramotoTrajectory, OscState, frequency_quantiles, integrate_kuramoto,
                       kuramoto_rhs, order_parameter, spread_phases)
from .quorum import (CouplingMatrixW, HopfCrossing, QuorumSystem, QuorumTrajectory, ReducedState,
                     StabilityResult, coupling_matrix, find_fixed_point, hopf_sweep, integrate_reduced,
                     linear_stability, reduced_rhs, reduced_rhs_w, selkov_below_threshold, selkov_hopf_window,
                     selkov_trace)

__all__ = [
    "KuramotoParams", "KuramotoTrajectory", "OscState", "frequency_quantiles", "integrate_kuramoto",
    "kuramoto_rhs", "order_parameter", "spread_phases", "CouplingMatrixW", "HopfCrossing", "QuorumSystem",
    "QuorumTrajectory", "ReducedState", "StabilityResult", "coupling_matrix", "find_fixed_point", "hopf_sweep",
    "integrate_reduced", "linear_stability", "reduced_rhs", "reduced_rhs_w", "selkov_below_threshold",
    "selkov_hopf_window", "selkov_trace",
]
