"""spincat: exact-diagonalization simulator for dipolar-coupled nuclear-spin
clusters, built around the twelve-spin cat-state protocol: pseudopure
initialization, double-quantum pulse sequences, time-reversed verification,
coherence-order analysis, linear-response spectra and relaxation lifetimes.
"""

__version__ = "0.1.0"

from .systems import (
    Channel,
    SpinSystem,
    DimensionError,
    HET_PHASE_TIME,
    build_preset,
    het_coupling_sum,
    free_hamiltonian,
    dq_hamiltonian,
)
from .propagate import expm_action, dense_propagator, gershgorin_interval
from .states import (
    PseudopureState,
    basis_state,
    labeled_state,
    magnetization,
    order_of_element,
    evolve,
    rotate_collective,
    rotate_z,
    coherence_profile,
    crusher,
    pseudopure,
    thermal_deviation,
    fidelity,
    purity,
)
from .sequences import (
    HardPulse,
    Delay,
    EffectiveDQ,
    PulseTrainDQ,
    CatRotation,
    Crusher,
    RelaxDelay,
    PulseSequence,
    Protocol,
    run,
    run_final,
    time_reverse,
    calibrate_dq_duration,
    build_cat_protocol,
    cat_state,
    avg_hamiltonian_check,
    aht_convergence,
    sequence_propagator,
    parse_sequence,
    format_sequence,
)
from .relaxation import (
    RelaxationModel,
    ElementSet,
    DecayCurve,
    default_model,
    dephase_rate,
    apply_dephasing,
    apply_t1,
    cat_elements,
    lifetime_experiment,
    MEASURED_CAT_LIFETIME_S,
)
from .measurement import (
    FID,
    Spectrum,
    MQSpectrum,
    FitResult,
    FitError,
    acquire_fid,
    spectrum,
    peak_census,
    cat_signature,
    CatSignatureReport,
    mq_order_scan,
    fit_exponential,
    default_dwell,
)
from .config import ConfigError, RunConfig, parse_config, echo_config, build_system
from .cli import execute
