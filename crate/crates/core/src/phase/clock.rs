//! Clock phases accumulated between the two clock pulses.

use serde::Serialize;

use super::propagation::simpson;
use crate::model::ExperimentSpec;
use crate::numeric::{reduce_two_pi, Dd};
use crate::trajectory::Segment;

/// The three phases every observable depends on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClockPhases {
    pub delta_phi: Dd,
    pub delta_d: Dd,
    pub delta_u: Dd,
}

/// Trigonometric arguments, each formed in double-double and then reduced
/// to `[-pi, pi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrigArgs {
    pub delta_phi: f64,
    pub delta_d: f64,
    pub delta_u: f64,
    /// `(delta_u + delta_d)/2`
    pub mean: f64,
    /// `(delta_u - delta_d)/2`
    pub half_split: f64,
    /// `delta_phi + (delta_u - delta_d)/2`
    pub phi_plus_half_split: f64,
    pub half_d: f64,
    pub half_u: f64,
}

impl ClockPhases {
    pub fn trig_args(&self) -> TrigArgs {
        let mean = (self.delta_u + self.delta_d).half();
        let half_split = (self.delta_u - self.delta_d).half();
        TrigArgs {
            delta_phi: reduce_two_pi(self.delta_phi),
            delta_d: reduce_two_pi(self.delta_d),
            delta_u: reduce_two_pi(self.delta_u),
            mean: reduce_two_pi(mean),
            half_split: reduce_two_pi(half_split),
            phi_plus_half_split: reduce_two_pi(self.delta_phi + half_split),
            half_d: reduce_two_pi(self.delta_d.half()),
            half_u: reduce_two_pi(self.delta_u.half()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClockPair {
    pub delta_d: Dd,
    pub delta_u: Dd,
}

/// `delta_d = [omega - omega0 (1 - <v^2>/2c^2)] T_B` and
/// `delta_u = [omega - omega0 (1 - <v^2>/2c^2 + g dz/c^2)] T_B`.
///
/// The residual partial oscillation is not included here.
pub fn clock_phase_corrections(spec: &ExperimentSpec) -> ClockPair {
    clock_phase_corrections_with(spec, true)
}

/// As [`clock_phase_corrections`]; `relativistic = false` drops every
/// `1/c^2` term.
pub fn clock_phase_corrections_with(spec: &ExperimentSpec, relativistic: bool) -> ClockPair {
    let t_b = spec.timing.t_b;
    let omega0 = spec.species.omega0;
    let detuning = Dd::sum2(spec.timing.omega, -omega0);
    let base = detuning * t_b;
    if !relativistic {
        return ClockPair {
            delta_d: base,
            delta_u: base,
        };
    }
    let e = spec.epsilons();
    let w0t = Dd::prod(omega0, t_b);
    let delta_d = base + w0t * e.eps_k;
    let delta_u = delta_d - w0t * e.eps_g;
    ClockPair { delta_d, delta_u }
}

/// `delta_u - delta_d = -omega0 eps_g T_B`.
pub fn gravitational_split(spec: &ExperimentSpec) -> f64 {
    -spec.species.omega0 * spec.epsilons().eps_g * spec.timing.t_b
}

/// `<omega0> = omega0 (1 - eps_k + eps_g/2)`.
pub fn mean_transition_frequency(spec: &ExperimentSpec) -> f64 {
    let e = spec.epsilons();
    spec.species.omega0 * (1.0 - e.eps_k + 0.5 * e.eps_g)
}

/// `(delta_u + delta_d)/2 = (omega - <omega0>) T_B`, detuning kept exact.
pub fn mean_clock_phase(spec: &ExperimentSpec) -> Dd {
    let e = spec.epsilons();
    let detuning = Dd::sum2(spec.timing.omega, -spec.species.omega0);
    let shift = Dd::prod(spec.species.omega0, -e.eps_k + 0.5 * e.eps_g);
    (detuning - shift) * spec.timing.t_b
}

/// Perturbative phase of one full lattice oscillation that starts at the
/// kick height `z_b`:
/// `-(dm/hbar)(c^2 + g (z_B + v_B^2/(3g)) - v_B^2/6) tau_B`.
pub fn single_oscillation_correction(z_b: f64, spec: &ExperimentSpec) -> Dd {
    let c = &spec.constants;
    let k = spec.kinematics();
    let omega0 = spec.species.omega0;
    let dm_over_hbar = omega0 / (c.c * c.c);
    let inner = c.g * z_b + k.v_b * k.v_b / 6.0;
    -(Dd::prod(omega0, k.tau_b) + Dd::prod(dm_over_hbar * inner, k.tau_b))
}

/// One bounce from the kick height with upward speed `v_B`.
pub fn bounce_segment(z_b: f64, spec: &ExperimentSpec) -> Segment {
    let k = spec.kinematics();
    Segment {
        t_start: 0.0,
        t_end: k.tau_b,
        z_start: z_b,
        v_start: k.v_b,
    }
}

/// Simpson quadrature of `(1/hbar) int dL dt`, `dL = -dm (c^2 + g z - v^2/2)`,
/// over one bounce, returned as `(rest part, remainder)`.
pub fn single_oscillation_quadrature(z_b: f64, spec: &ExperimentSpec, panels: usize) -> (f64, f64) {
    let c = &spec.constants;
    let omega0 = spec.species.omega0;
    let seg = bounce_segment(z_b, spec);
    let g = c.g;
    let rem = simpson(
        |t| {
            let z = seg.z_at(t, g);
            let v = seg.v_at(t, g);
            g * z - 0.5 * v * v
        },
        seg.t_start,
        seg.t_end,
        panels,
    );
    (-omega0 * seg.duration(), -omega0 / (c.c * c.c) * rem)
}
