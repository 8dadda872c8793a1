//! Ledgers along the ground-state arm paths and the interferometer phase.

use serde::Serialize;

use super::ledger::{ledger_difference, LedgerDifference, PhaseLedger, PhaseTag, PhaseTerm, TermSource};
use super::propagation::{free_fall_parts, propagation_phase};
use crate::model::ExperimentSpec;
use crate::numeric::Dd;
use crate::trajectory::{
    build_arm_trajectories, ArmTrajectory, Event, EventKind, InternalState, SequenceTimes, Stage,
    TrajectoryError,
};

/// `k_Bragg = m dv / (2 hbar)`.
pub fn bragg_wavevector(spec: &ExperimentSpec) -> f64 {
    spec.species.mass * spec.timing.delta_v / (2.0 * spec.constants.hbar)
}

/// `k_Bloch = m g tau_B / (2 hbar)`, numerically the lattice wavevector.
pub fn bloch_wavevector(spec: &ExperimentSpec) -> f64 {
    let tau_b = spec.kinematics().tau_b;
    spec.species.mass * spec.constants.g * tau_b / (2.0 * spec.constants.hbar)
}

/// Laser phase imprinted by an event on a path in `state`.
///
/// Two-photon kicks give `+-2 k z` with the sign of the momentum transfer.
/// The clock pulses act only on the excited path, with `-omega t_i` on
/// absorption and `+omega t_f` on emission.
pub fn laser_phase(event: &Event, spec: &ExperimentSpec, state: InternalState) -> (PhaseTag, Dd) {
    match event.kind {
        EventKind::BraggKick => (
            PhaseTag::LaserBragg,
            Dd::prod(2.0 * bragg_wavevector(spec), event.height) * event.direction(),
        ),
        EventKind::BlochKick => (
            PhaseTag::LaserBloch,
            Dd::prod(2.0 * bloch_wavevector(spec), event.height),
        ),
        EventKind::ClockPulseOn | EventKind::ClockPulseOff => {
            let value = match state {
                InternalState::Ground => Dd::ZERO,
                InternalState::Excited => {
                    let wt = Dd::prod(spec.timing.omega, event.time);
                    if event.kind == EventKind::ClockPulseOn {
                        -wt
                    } else {
                        wt
                    }
                }
            };
            (PhaseTag::LaserClock, value)
        }
    }
}

/// Ledger of `traj` for a path in `state`. The excited path follows the
/// ground trajectory and picks up `-(dm/hbar) (c^2 + g z - v^2/2)` during
/// the hold.
pub fn arm_ledger(traj: &ArmTrajectory, spec: &ExperimentSpec, state: InternalState) -> PhaseLedger {
    let c = &spec.constants;
    let times = SequenceTimes::of(spec);
    let delta_m = Dd::prod(c.hbar, spec.species.omega0) / Dd::prod(c.c, c.c);
    let mut ledger = PhaseLedger::new(traj.arm, state);
    for (i, seg) in traj.segments.iter().enumerate() {
        let p = propagation_phase(seg, spec.species.mass, c);
        let src = TermSource::Segment(i);
        ledger.push(PhaseTerm::rest(p.rest_rate, src, seg.t_start, seg.t_end));
        ledger.push(PhaseTerm::phase(PhaseTag::NewtonianPotential, p.newtonian, src, seg.t_start, seg.t_end));
        ledger.push(PhaseTerm::phase(PhaseTag::Kinetic, p.kinetic, src, seg.t_start, seg.t_end));
        if state == InternalState::Excited && times.stage_of(seg) == Stage::Hold {
            let dt = Dd::sum2(seg.t_end, -seg.t_start);
            let (pot, kin) = free_fall_parts(
                Dd::new(seg.z_start),
                Dd::new(seg.v_start),
                dt,
                delta_m,
                c.g,
                c.hbar,
            );
            let rest = dt * -spec.species.omega0;
            ledger.push(PhaseTerm::phase(
                PhaseTag::MassEnergyCorrection,
                rest + pot + kin,
                src,
                seg.t_start,
                seg.t_end,
            ));
        }
    }
    for (j, ev) in traj.events.iter().enumerate() {
        let (tag, value) = laser_phase(ev, spec, state);
        if tag == PhaseTag::LaserClock && state == InternalState::Ground {
            continue;
        }
        ledger.push(PhaseTerm::phase(tag, value, TermSource::Event(j), ev.time, ev.time));
    }
    ledger
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StagePhase {
    pub stage: Stage,
    pub t_start: f64,
    pub t_end: f64,
    /// Upper minus lower propagation phase summed over the stage's segments.
    pub value: f64,
    pub closed_form: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterferometerPhase {
    /// Upper minus lower, ground state.
    pub delta_phi: Dd,
    /// `-(m g dz/hbar)(T + 2T' + tau)`.
    pub closed_form: Dd,
    pub propagation: Dd,
    /// `-(m/hbar) g dz N tau_B`.
    pub propagation_closed_form: Dd,
    pub laser_bragg: Dd,
    pub laser_bloch: Dd,
    /// `2 k_Bragg (z1 - z2 - z3 + z4) + 2 N k_Bloch dz` from the event heights.
    pub laser_from_heights: Dd,
    pub stages: Vec<StagePhase>,
    pub difference: LedgerDifference,
    pub upper: ArmTrajectory,
    pub lower: ArmTrajectory,
    pub ledgers: Vec<PhaseLedger>,
}

impl InterferometerPhase {
    pub fn laser(&self) -> Dd {
        self.laser_bragg + self.laser_bloch
    }
}

/// Stage-by-stage closed forms of the upper-minus-lower propagation phase.
pub fn stage_closed_forms(spec: &ExperimentSpec) -> [f64; 5] {
    let t = &spec.timing;
    let g = spec.constants.g;
    let tau = spec.partition().tau;
    let dz = spec.kinematics().delta_z;
    let mh = spec.species.mass / spec.constants.hbar;
    let v1 = g * (t.t + t.t_prime) - t.delta_v;
    let v3 = -g * (tau + t.t_prime);
    [
        mh * dz * (v1 + 0.5 * t.delta_v - g * t.t),
        -mh * g * dz * t.t_prime,
        -mh * g * dz * t.t_b,
        -mh * g * dz * t.t_prime,
        mh * dz * (-v3 + 0.5 * t.delta_v),
    ]
}

pub fn delta_phi_closed_form(spec: &ExperimentSpec) -> Dd {
    let t = &spec.timing;
    let tau = spec.partition().tau;
    let dz = spec.kinematics().delta_z;
    let coeff = Dd::prod(spec.species.mass, spec.constants.g) * dz / spec.constants.hbar;
    let span = Dd::new(t.t) + Dd::prod(2.0, t.t_prime) + tau;
    -(coeff * span)
}

fn event_height(traj: &ArmTrajectory, kind: EventKind, nth: usize) -> f64 {
    traj.events_of(kind).nth(nth).map(|e| e.height).unwrap_or(0.0)
}

pub fn interferometer_phase(spec: &ExperimentSpec) -> Result<InterferometerPhase, TrajectoryError> {
    let (upper, lower) = build_arm_trajectories(spec)?;
    let times = SequenceTimes::of(spec);
    let ledgers = vec![
        arm_ledger(&upper, spec, InternalState::Ground),
        arm_ledger(&upper, spec, InternalState::Excited),
        arm_ledger(&lower, spec, InternalState::Ground),
        arm_ledger(&lower, spec, InternalState::Excited),
    ];
    let difference = ledger_difference(&ledgers[0], &ledgers[2]);

    let closed = stage_closed_forms(spec);
    let stage_sum = |traj: &ArmTrajectory, stage: Stage| {
        Dd::sum(
            traj.segments
                .iter()
                .filter(|s| times.stage_of(s) == stage)
                .map(|s| propagation_phase(s, spec.species.mass, &spec.constants).non_rest()),
        )
    };
    let stages = Stage::ALL
        .iter()
        .zip(closed)
        .map(|(&stage, closed_form)| {
            let (t_start, t_end) = times.bounds(stage);
            StagePhase {
                stage,
                t_start,
                t_end,
                value: (stage_sum(&upper, stage) - stage_sum(&lower, stage)).to_f64(),
                closed_form,
            }
        })
        .collect();

    let propagation = difference.get(PhaseTag::NewtonianPotential)
        + difference.get(PhaseTag::Kinetic)
        + difference.get(PhaseTag::RestMass);
    let laser_bragg = difference.get(PhaseTag::LaserBragg);
    let laser_bloch = difference.get(PhaseTag::LaserBloch);

    let k = spec.kinematics();
    let n = spec.partition().n as f64;
    let z1 = event_height(&upper, EventKind::BraggKick, 0);
    let z2 = event_height(&lower, EventKind::BraggKick, 0);
    let z3 = event_height(&upper, EventKind::BraggKick, 1);
    let z4 = event_height(&lower, EventKind::BraggKick, 1);
    let heights = Dd::new(z1) - z2 - z3 + z4;
    let laser_from_heights = heights * (2.0 * bragg_wavevector(spec))
        + Dd::prod(2.0 * n * bloch_wavevector(spec), k.delta_z);

    let mh = Dd::new(spec.species.mass) / spec.constants.hbar;
    let propagation_closed_form = -(mh * Dd::prod(spec.constants.g, k.delta_z) * Dd::prod(n, k.tau_b));

    Ok(InterferometerPhase {
        delta_phi: propagation + laser_bragg + laser_bloch,
        closed_form: delta_phi_closed_form(spec),
        propagation,
        propagation_closed_form,
        laser_bragg,
        laser_bloch,
        laser_from_heights,
        stages,
        difference,
        upper,
        lower,
        ledgers,
    })
}

/// Excited minus ground phase of one arm along the ground path, the
/// trajectory-integrated counterpart of the closed-form clock phase.
pub fn trajectory_clock_phase(ledgers: &[PhaseLedger], arm: crate::trajectory::Arm) -> Option<Dd> {
    let find = |state| ledgers.iter().find(|l| l.arm == arm && l.state == state);
    let e = find(InternalState::Excited)?;
    let g = find(InternalState::Ground)?;
    Some(ledger_difference(e, g).total)
}
