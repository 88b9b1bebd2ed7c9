"""Semiclassical coherent-state propagator from complex classical trajectories."""
from .errors import (
    CausticError,
    ConfigError,
    DegenerateInput,
    DiscontinuityError,
    NoConvergence,
    NonFiniteError,
    TruncationWarning,
    WidthMismatch,
)
from .model import (
    CoherentLabel,
    ComplexPhasePoint,
    ModelParams,
    PropagatorLabels,
    SmoothedHamiltonian,
    flow_rhs,
    h_mixed_second_derivative,
    smoothed_h,
)
from .integrator import Trajectory, integrate, period_estimate
from .shooting import (
    RootResult,
    ShootingConfig,
    continuation_sweep,
    descend,
    endpoint_distance,
    gradient_of_D,
    initial_conditions_from_guess,
    multi_start,
)
from .action import ActionResult, PrefactorResult, action, amplitude_delta, d2s_mixed, phase_integral, prefactor
from .phase import quadrant_phase, sqrt_branch_phases, track_sigma
from .scsp import PropagatorSample, assemble, propagate, propagate_sweep
from .oracle import (
    Eigensystem,
    build_hamiltonian_matrix,
    diagonalize,
    exact_csp,
    exact_csp_series,
    harmonic_closed_form,
    husimi_overlap,
    solve_spectrum,
)

__version__ = "0.1.0"
