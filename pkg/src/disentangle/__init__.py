"""Finite-time disentanglement of multipartite states under local channels.

Simulate qudit states under products of local quantum channels, compute
the analytic sudden-death threshold from a channel's convergence envelope,
certify full separability directly, and emit the explicit separable
decomposition.
"""

from ._tolerances import PROFILES, Tolerances, get_tolerances, use_tolerances
from .certify import (
    Certificate,
    DisentanglerForm,
    ThresholdReport,
    certified_separability_time,
    certify,
    disentangler_form,
    disentangler_onset,
    emit_separable_decomposition,
    positivity_time_for_h,
    rho_h_construct,
    threshold_from_constants,
    threshold_from_envelope,
)
from .channels import (
    ConvergenceEnvelope,
    KrausChannel,
    LocalProductChannel,
    RingChannel,
    SpectralProfile,
    Superoperator,
    amplitude_damping,
    apply,
    apply_local,
    check_contraction,
    compose,
    convergence_envelope,
    depolarizing,
    identity_channel,
    power,
    random_channel,
    replacer_channel,
    shift_depolarize_ring,
    spectral_profile,
    tensor_channels,
    unitary_channel,
)
from .designs import ProjectiveDesign, custom_design, design_for, mub_design, qubit_six_state, verify_two_design_channel
from .entangle import (
    Bipartition,
    all_bipartitions,
    bell_pair,
    embed_pair_on_ring,
    ghz,
    mutual_information,
    negativity,
    rainbow,
    ring_pair_cut,
    sudden_death_scan,
    werner,
)
from .estimators import ChannelAnalyzer, SeparabilityCertifier
from .exceptions import *  # noqa: F401,F403
from . import matrix_io
from .linalg import (
    DensityMatrix,
    PartitionSpec,
    embed_local,
    general_eig,
    hermitian_eig,
    kron,
    operator_norm,
    partial_trace,
    partial_transpose,
    random_density,
    random_pure_state,
    trace_norm,
)
from .reconstruct import (
    SeparableDecomposition,
    reconstruct_state,
    reconstruction_residual,
    signed_ops,
    weights,
)

__version__ = "0.1.0"
