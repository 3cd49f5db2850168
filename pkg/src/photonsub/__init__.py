"""Quantum-trajectory simulation of deterministic single-photon subtraction.

A source cavity leaks a photon pulse onto a charged quantum dot coupled to
two orthogonally polarized cavity modes.  The package builds the cascaded
non-Hermitian model, unravels it into Monte-Carlo wavefunction trajectories,
cross-checks against a dense Lindblad integration, and reduces jump records
to routing probabilities and counting statistics.
"""

from .errors import (
    PhotonsubError,
    LayoutError,
    DimensionError,
    TruncationError,
    ConfigError,
    IntegrationError,
    ModelInconsistencyError,
    TrajectoryError,
    AnalysisError,
)
from .hilbert import (
    SpaceLayout,
    Operator,
    StateVector,
    annihilation_op,
    transition_op,
    identity_op,
    embed,
    dagger,
    add,
    scale,
    compose,
    apply,
    fock_state,
    coherent_state_factor,
    coherent_truncation_dim,
)
from .model import (
    InputSpec,
    SystemParams,
    ModelOperators,
    build_model,
    default_layout,
    default_dt_max,
    lowering_channel_labels,
    params_digest,
    zeeman_splitting,
    ghz,
)
from .lindblad import (
    DensityMatrix,
    LindbladResult,
    evolve_lindblad,
    channel_flux_integrals,
    hermitian_part,
)
from .trajectories import (
    Controls,
    JumpEvent,
    TrajectoryRecord,
    EnsembleRecord,
    select_jump_channel,
    evolve_trajectory,
    run_ensemble,
)
from .observables import (
    ChannelCounts,
    EnsembleStatistics,
    detection_probabilities,
    ordered_two_photon_probs,
    mean_output_photons,
    g2_zero,
    photon_number_histogram,
    summarize_ensemble,
)

__version__ = "0.1.0"
