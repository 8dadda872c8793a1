//! Interferometric phases: the arm phase difference, the clock phases and
//! the exact falling-path cross-check.

pub mod clock;
pub mod interferometer;
pub mod ledger;
pub mod nonperturbative;
pub mod propagation;

pub use clock::{
    clock_phase_corrections, clock_phase_corrections_with, gravitational_split, mean_clock_phase,
    mean_transition_frequency, single_oscillation_correction, single_oscillation_quadrature,
    ClockPair, ClockPhases, TrigArgs,
};
pub use interferometer::{
    arm_ledger, bloch_wavevector, bragg_wavevector, delta_phi_closed_form, interferometer_phase,
    laser_phase, stage_closed_forms, trajectory_clock_phase, InterferometerPhase, StagePhase,
};
pub use ledger::{ledger_difference, LedgerDifference, PhaseLedger, PhaseTag, PhaseTerm, TermSource, TermValue};
pub use nonperturbative::{
    nonperturbative_clock_phases, nonperturbative_delta, nonperturbative_report, ArmAgreement,
    NonperturbativeReport, AGREEMENT_K,
};
pub use propagation::{
    free_fall_parts, propagation_closed_form, propagation_phase, propagation_quadrature, simpson,
    PropagationPhase,
};
