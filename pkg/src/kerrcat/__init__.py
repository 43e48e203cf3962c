"""Kerr-nonlinearity cat states, entangled coherent states, and the
phase-resolution cost of observing their entanglement."""

from .fock import (
    CoherentSuperposition,
    CutoffError,
    CutoffPolicy,
    SingleModeState,
    TwoModeState,
    choose_cutoff,
    coherent_fock,
    coherent_overlap,
    coherent_superposition,
    fidelity,
    inner_product,
    overlap_analytic,
    photon_number_distribution,
    tensor,
    vacuum_fock,
)
from .ops import (
    BeamSplitGate,
    DisplaceGate,
    KerrGate,
    PhysicalCircuit,
    TruncationWarning,
    beam_split,
    displace,
    kerr_closed_form,
    kerr_evolve,
    run_circuit,
)
from .qubit import (
    EffectiveQubitAction,
    QubitEncoding,
    RotationRecipe,
    effective_action,
    encode,
    phase_min_distance,
    synthesize_rotation,
)
from .measure import (
    DiscriminationSetup,
    OutcomeDistribution,
    ShotRecord,
    coarse_count,
    qubit_measure,
    sample,
)
from .analysis import (
    DEFAULT_SETTINGS,
    ChshResult,
    MeasurementProgram,
    NoCrossingError,
    NoViolationError,
    ScalingFit,
    chsh_pipeline,
    fidelity_exact,
    fidelity_fock,
    fidelity_gaussian,
    fit_scaling,
    gaussian_half_width,
    half_width,
    measurement_program,
    phase_sensitivity,
    prepare_entangled_state,
    violation_threshold,
)

__version__ = "0.1.0"
