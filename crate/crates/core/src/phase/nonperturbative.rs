//! Exact accumulation of the excited-state phase along its own falling path.
//!
//! The excited path carries mass `m + dm` and is relaunched more slowly at
//! each lattice kick, so it drifts below the ground path. Its phase over the
//! hold is the propagation phase with the heavier mass, the lattice laser
//! phases at its own kick heights, and a separation term
//! `p_bar (z_g - z_e)/hbar` closing the endpoints at `t_f`.
//!
//! Compared with the perturbative correction `-(dm/hbar) int (g z - v^2/2)`
//! along the ground path, the two agree at first order in `dm`. The
//! difference is second order and has a secular part that grows as
//! `(dm/m)(dm/hbar) v_B^2 tau_B N(N-1)`. The first-order discrepancy is
//! isolated by Richardson extrapolation in `dm`.

use serde::Serialize;

use super::ledger::{ledger_difference, PhaseLedger, PhaseTag, PhaseTerm, TermSource};
use super::propagation::free_fall_parts;
use crate::model::ExperimentSpec;
use crate::numeric::Dd;
use crate::trajectory::{Arm, HoldPath, HoldScales, InternalState, TrajectoryPair};

/// Multiplier `K` of the agreement bounds.
pub const AGREEMENT_K: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ArmAgreement {
    pub arm: Arm,
    pub n_ground_kicks: usize,
    pub n_excited_kicks: usize,
    /// `delta` with the exact excited path, `omega T_B` included.
    pub delta_exact: f64,
    /// `delta_exact - (omega - omega0) T_B`.
    pub correction_exact: f64,
    /// First-order part of `correction_exact`.
    pub correction_first_order: f64,
    /// `-(dm/hbar) int (g z - v^2/2) dt` along the ground path.
    pub correction_perturbative: f64,
    /// `-omega0 T_B (g <z>/c^2 - <v^2>/2c^2)` with the bounce-model averages.
    pub correction_closed_form: f64,
    /// `omega0 T_B (eps_k + g |<z>|/c^2)`, the normaliser of the relative
    /// discrepancies; it stays finite when the two corrections cancel.
    pub correction_scale: f64,
    pub separation_phase: f64,
    pub discrepancy_all_orders: f64,
    pub discrepancy_first_order: f64,
    /// `(dm/m)(dm/hbar) v_B^2 tau_B N(N-1)` relative to the scale.
    pub secular_estimate: f64,
    pub bound_first_order: f64,
    pub bound_all_orders: f64,
    pub passes: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NonperturbativeReport {
    pub dm_over_m: f64,
    pub lower: ArmAgreement,
    pub upper: ArmAgreement,
    pub passes: bool,
}

struct Accumulated {
    ledger_e: PhaseLedger,
    ledger_g: PhaseLedger,
    perturbative: Dd,
    n_ground: usize,
    n_excited: usize,
}

fn hold_ledger(
    path: &HoldPath,
    spec: &ExperimentSpec,
    arm: Arm,
    state: InternalState,
    delta_m: Dd,
) -> PhaseLedger {
    let c = &spec.constants;
    let m = spec.species.mass;
    let mass = Dd::new(m) + delta_m;
    let rest_rate = -m * c.c * c.c / c.hbar;
    let omega0 = (delta_m * Dd::prod(c.c, c.c) / c.hbar).to_f64();
    let two_k = Dd::new(spec.lattice.k) * 2.0;
    let mut ledger = PhaseLedger::new(arm, state);
    let n = path.segments.len();
    for (i, seg) in path.segments.iter().enumerate() {
        let src = TermSource::Segment(i);
        let t0 = seg.t_start.to_f64();
        // The final piece ends exactly at t_f so the spans telescope.
        let t1 = if i + 1 == n {
            spec.timing.t_b
        } else {
            path.kicks[i].time.to_f64()
        };
        ledger.push(PhaseTerm::rest(rest_rate, src, t0, t1));
        let (pot, kin) = free_fall_parts(seg.z_start, seg.v_start, seg.dt, mass, c.g, c.hbar);
        ledger.push(PhaseTerm::phase(PhaseTag::NewtonianPotential, pot, src, t0, t1));
        ledger.push(PhaseTerm::phase(PhaseTag::Kinetic, kin, src, t0, t1));
        if state == InternalState::Excited {
            ledger.push(PhaseTerm::phase(
                PhaseTag::MassEnergyCorrection,
                seg.dt * -omega0,
                src,
                t0,
                t1,
            ));
        }
    }
    for (j, kick) in path.kicks.iter().enumerate() {
        let t = kick.time.to_f64();
        ledger.push(PhaseTerm::phase(
            PhaseTag::LaserBloch,
            two_k * kick.height,
            TermSource::Event(j),
            t,
            t,
        ));
    }
    if state == InternalState::Excited {
        let t_b = spec.timing.t_b;
        ledger.push(PhaseTerm::phase(
            PhaseTag::LaserClock,
            Dd::prod(spec.timing.omega, t_b),
            TermSource::Endpoint,
            t_b,
            t_b,
        ));
    }
    ledger
}

fn accumulate(spec: &ExperimentSpec, arm: Arm, dm_scale: f64) -> Accumulated {
    let c = &spec.constants;
    let mut scales = HoldScales::of(spec);
    scales.dm_over_m = scales.dm_over_m * dm_scale;
    let delta_m = scales.dm_over_m * spec.species.mass;
    let gp = scales.hold_path(spec, arm, InternalState::Ground);
    let ep = scales.hold_path(spec, arm, InternalState::Excited);

    let mut ledger_g = hold_ledger(&gp, spec, arm, InternalState::Ground, Dd::ZERO);
    let mut ledger_e = hold_ledger(&ep, spec, arm, InternalState::Excited, delta_m);

    let t_b = spec.timing.t_b;
    let p_bar = (gp.v_end * spec.species.mass + ep.v_end * (Dd::new(spec.species.mass) + delta_m)).half();
    let sep = p_bar * (gp.z_end - ep.z_end) / c.hbar;
    ledger_e.push(PhaseTerm::phase(PhaseTag::Separation, sep, TermSource::Endpoint, t_b, t_b));
    ledger_g.push(PhaseTerm::phase(PhaseTag::Separation, Dd::ZERO, TermSource::Endpoint, t_b, t_b));

    let perturbative = Dd::sum(gp.segments.iter().map(|s| {
        let (pot, kin) = free_fall_parts(s.z_start, s.v_start, s.dt, delta_m, c.g, c.hbar);
        pot + kin
    }));
    Accumulated {
        ledger_e,
        ledger_g,
        perturbative,
        n_ground: gp.kicks.len(),
        n_excited: ep.kicks.len(),
    }
}

/// Correction tags, i.e. everything but the clock laser and the `dm c^2`
/// rest energy, summed tag by tag.
fn correction_of(acc: &Accumulated) -> (Dd, Dd, Dd) {
    let d = ledger_difference(&acc.ledger_e, &acc.ledger_g);
    let corr = d.get(PhaseTag::NewtonianPotential)
        + d.get(PhaseTag::Kinetic)
        + d.get(PhaseTag::LaserBloch)
        + d.get(PhaseTag::Separation)
        + d.get(PhaseTag::RestMass);
    let full = corr + d.get(PhaseTag::LaserClock) + d.get(PhaseTag::MassEnergyCorrection);
    (corr, full, d.get(PhaseTag::Separation))
}

fn arm_agreement(spec: &ExperimentSpec, arm: Arm) -> ArmAgreement {
    let acc1 = accumulate(spec, arm, 1.0);
    let acc2 = accumulate(spec, arm, 0.5);
    let (corr1, full1, sep) = correction_of(&acc1);
    let (corr2, _, _) = correction_of(&acc2);
    let pert1 = acc1.perturbative;
    let pert2 = acc2.perturbative;

    let e1 = corr1 - pert1;
    let e2 = corr2 - pert2;
    let first_order_err = e2 * 4.0 - e1;
    let corr_first = pert1 + first_order_err;

    let k = spec.kinematics();
    let c2 = spec.constants.c * spec.constants.c;
    let g = spec.constants.g;
    let mean_z = match arm {
        Arm::Lower => 0.0,
        Arm::Upper => k.delta_z,
    };
    let w0t = spec.species.omega0 * spec.timing.t_b;
    let closed = -w0t * (g * mean_z / c2 - k.mean_v2 / (2.0 * c2));
    let scale = w0t * (spec.epsilons().eps_k + g * mean_z.abs() / c2);

    let dm_over_m = spec.dm_over_m();
    let n = acc1.n_ground as f64;
    let dm_over_hbar = spec.species.omega0 / c2;
    let secular = dm_over_m * dm_over_hbar * k.v_b * k.v_b * k.tau_b * n * (n - 1.0).max(0.0);

    let relative = |x: f64| if scale > 0.0 { x.abs() / scale } else { x.abs() };
    let discrepancy_all_orders = relative(e1.to_f64());
    let discrepancy_first_order = relative(first_order_err.to_f64());
    let bound_first_order = AGREEMENT_K * dm_over_m;
    let bound_all_orders = AGREEMENT_K * n.max(1.0) * dm_over_m;
    ArmAgreement {
        arm,
        n_ground_kicks: acc1.n_ground,
        n_excited_kicks: acc1.n_excited,
        delta_exact: full1.to_f64(),
        correction_exact: corr1.to_f64(),
        correction_first_order: corr_first.to_f64(),
        correction_perturbative: pert1.to_f64(),
        correction_closed_form: closed,
        correction_scale: scale,
        separation_phase: sep.to_f64(),
        discrepancy_all_orders,
        discrepancy_first_order,
        secular_estimate: relative(secular),
        bound_first_order,
        bound_all_orders,
        passes: discrepancy_first_order <= bound_first_order
            && discrepancy_all_orders <= bound_all_orders,
    }
}

/// Exact `delta` of the pair's arm and the agreement with the perturbative
/// correction.
pub fn nonperturbative_delta(pair: &TrajectoryPair, spec: &ExperimentSpec) -> (Dd, ArmAgreement) {
    let arm = pair.ground.arm;
    let acc = accumulate(spec, arm, 1.0);
    let (_, full, _) = correction_of(&acc);
    (full, arm_agreement(spec, arm))
}

/// Exact `(delta_d, delta_u)` in double-double.
pub fn nonperturbative_clock_phases(spec: &ExperimentSpec) -> (Dd, Dd) {
    let d = correction_of(&accumulate(spec, Arm::Lower, 1.0)).1;
    let u = correction_of(&accumulate(spec, Arm::Upper, 1.0)).1;
    (d, u)
}

pub fn nonperturbative_report(spec: &ExperimentSpec) -> NonperturbativeReport {
    let lower = arm_agreement(spec, Arm::Lower);
    let upper = arm_agreement(spec, Arm::Upper);
    NonperturbativeReport {
        dm_over_m: spec.dm_over_m(),
        lower,
        upper,
        passes: lower.passes && upper.passes,
    }
}
