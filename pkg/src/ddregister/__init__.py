"""Central-spin register model, DD gate compiler, protocol simulator, and fitting."""

from .linalg import (
    DensityState,
    RotationOp,
    partial_trace,
    process_distance,
    process_fidelity,
    rotation_matrix,
    set_debug_checks,
    state_fidelity_uhlmann,
    tensor,
)
from .register import (
    ConditionalFrame,
    NuclearSpec,
    RegisterConfig,
    build_frames,
    free_evolution,
    load_register,
    paper_register,
    save_register,
)
from .ddengine import (
    GateDecomposition,
    ImperfectPulseParams,
    PulseError,
    PulseSchedule,
    axis_alignment_scan,
    build_schedule,
    dd_unitary_analytic,
    dd_unitary_pulsed,
    decompose_unit,
    resonance_times,
)
from .metrics import (
    entangling_power,
    makhlin_g1,
    metric_scan,
    residual_entangling_power,
)
from .compiler import (
    CalibrationEntry,
    CalibrationError,
    NoParallelEntanglerError,
    calibrate_conditional_x,
    calibrate_unconditional_x,
    calibrate_z,
    design_parallel_entangler,
    design_parallel_z,
    field_scan,
    paper_calibration_table,
)
from .circuits import (
    Backend,
    Circuit,
    ConditionalX,
    ElectronReset,
    ElectronRotation,
    MeasureZ,
    NuclearLocal,
    ParallelEntangler,
    ParallelZ,
    dd_spectroscopy,
    expect_z,
    ghz_target,
    ground_state,
    ideal_repetition_states,
    mqc_experiment,
    prob_electron0,
    repetition_experiment,
    run_circuit,
    select_revival_repeats,
    swap_init,
    thermal_register_state,
    tomography_circuit,
)
from .fitting import (
    ErrorChannelFit,
    GhzPrep,
    MQCModel,
    ResidualCrosstalk,
    bitflip_channel,
    crosstalk_trace,
    crosstalk_trace_matrix,
    fit_gate_error,
    fit_sinusoid,
    ghz_fidelity_free_phase,
    kraus_bitflip_ops,
    optimize_ghz_prep,
    predict_fidelity_decay,
    residual_mqc_theory,
    state_fidelity_approx,
    state_fidelity_exact,
)

__version__ = "0.1.0"
