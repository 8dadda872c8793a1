//! Classical motion in the tilted cosine lattice.
//!
//! The atom obeys `m z'' = -m g + 2 k V0 sin(2k u + phi)` with `u = z - z0`.
//! The phase `phi = pi - asin(m g / (2 k V0))` puts a stable equilibrium at
//! `u = 0`, so the starting height `z0` is a well minimum. Energies are
//! measured relative to `z0`.

use serde::Serialize;
use thiserror::Error;

use crate::model::ExperimentSpec;
use crate::numeric::{CompensatedSum, Dd};
use crate::trajectory::Arm;

/// Bound on `2 k |v| h`, the lattice phase swept per step.
pub const MAX_LATTICE_PHASE_PER_STEP: f64 = 0.05;
/// Energy drift allowed over a run, relative to `max(|E0|, V0)`.
pub const ENERGY_TOLERANCE: f64 = 1e-8;
/// Drift targeted when choosing the step, a margin below the tolerance.
const ENERGY_TARGET: f64 = 2e-9;
pub const DEFAULT_STEP_BUDGET: u64 = 100_000_000;
pub const DEFAULT_MAX_SAMPLES: usize = 200_000;
/// Fallback depth in units of `m v_B^2`.
pub const FALLBACK_DEPTH_FACTOR: f64 = 100.0;
/// A depth is deep enough when its lowest barrier exceeds this many times
/// the initial kinetic energy.
const TRAP_MARGIN: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("lattice depth must be positive, got {0}")]
    Depth(f64),
    #[error("lattice depth {depth} cannot balance gravity: needs V0 > m g/(2k) = {needed}")]
    NoWell { depth: f64, needed: f64 },
    #[error("duration must be positive, got {0}")]
    Duration(f64),
    #[error("step criterion needs {needed} steps, budget is {budget}")]
    StepBudget { needed: f64, budget: u64 },
    #[error("relative energy drift {drift:e} exceeds {bound:e}")]
    EnergyDrift { drift: f64, bound: f64 },
    #[error("trajectory spans {found} but the hold is {expected}")]
    DurationMismatch { found: f64, expected: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeOptions {
    pub depth: f64,
    /// Upper bound on the step; the step control may pick a smaller one.
    pub step: Option<f64>,
    pub step_budget: u64,
    pub max_samples: usize,
    /// Well phase; `None` centres a minimum on the start height.
    pub phase: Option<f64>,
}

impl LatticeOptions {
    pub fn for_spec(spec: &ExperimentSpec) -> Self {
        LatticeOptions {
            depth: spec.lattice.depth.unwrap_or_else(|| default_depth(spec)),
            step: spec.lattice.step,
            step_budget: DEFAULT_STEP_BUDGET,
            max_samples: DEFAULT_MAX_SAMPLES,
            phase: None,
        }
    }
}

/// Time integrals at the full step resolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Averages {
    pub mean_z: f64,
    pub mean_v2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticeTrajectory {
    pub t: Vec<f64>,
    pub z: Vec<f64>,
    pub v: Vec<f64>,
    pub z0: f64,
    pub depth: f64,
    pub phase: f64,
    pub k: f64,
    pub mass: f64,
    pub g: f64,
    pub step: f64,
    pub steps: u64,
    pub stride: u64,
    pub method: &'static str,
    /// `max |E - E0| / max(|E0|, V0)` over every step.
    pub energy_drift: f64,
    pub trapped: bool,
    pub full: Option<Averages>,
}

impl LatticeTrajectory {
    pub fn duration(&self) -> f64 {
        match (self.t.first(), self.t.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn energy_at(&self, i: usize) -> f64 {
        let u = self.z[i] - self.z0;
        mechanical_energy(u, self.v[i], self.mass, self.g, self.k, self.depth, self.phase)
    }
}

fn mechanical_energy(u: f64, v: f64, m: f64, g: f64, k: f64, depth: f64, phase: f64) -> f64 {
    0.5 * m * v * v + m * g * u + depth * (2.0 * k * u + phase).cos()
}

/// `sin(phi)` at equilibrium, `m g / (2 k V0)`.
fn tilt(m: f64, g: f64, k: f64, depth: f64) -> f64 {
    m * g / (2.0 * k * depth)
}

pub fn equilibrium_phase(m: f64, g: f64, k: f64, depth: f64) -> Result<f64, LatticeError> {
    if !(depth > 0.0 && depth.is_finite()) {
        return Err(LatticeError::Depth(depth));
    }
    let s = tilt(m, g, k, depth);
    if s >= 1.0 {
        return Err(LatticeError::NoWell {
            depth,
            needed: m * g / (2.0 * k),
        });
    }
    Ok(std::f64::consts::PI - s.asin())
}

/// Small-oscillation angular frequency of the tilted well.
pub fn well_frequency(m: f64, g: f64, k: f64, depth: f64) -> f64 {
    let s = tilt(m, g, k, depth).min(1.0);
    (4.0 * k * k * depth * (1.0 - s * s).sqrt() / m).sqrt()
}

/// Heights of the barriers on either side of the well at `u = 0`, measured
/// from its minimum, `(below, above)`.
pub fn barrier_heights(m: f64, g: f64, k: f64, depth: f64) -> Option<(f64, f64)> {
    let phase = equilibrium_phase(m, g, k, depth).ok()?;
    let a = tilt(m, g, k, depth).asin();
    let u0 = mechanical_energy(0.0, 0.0, m, g, k, depth, phase);
    let pi = std::f64::consts::PI;
    let below = (2.0 * a - pi) / (2.0 * k);
    let above = (2.0 * a + pi) / (2.0 * k);
    Some((
        mechanical_energy(below, 0.0, m, g, k, depth, phase) - u0,
        mechanical_energy(above, 0.0, m, g, k, depth, phase) - u0,
    ))
}

fn traps(m: f64, g: f64, k: f64, depth: f64, kinetic: f64, margin: f64) -> bool {
    barrier_heights(m, g, k, depth).is_some_and(|(lo, hi)| lo.min(hi) > margin * kinetic)
}

/// Initial speed whose harmonic mean square speed is `v_B^2/3`.
pub fn matched_speed(spec: &ExperimentSpec) -> f64 {
    (2.0f64 / 3.0).sqrt() * spec.kinematics().v_b
}

/// The depth whose small-oscillation period is `tau_B`, if it holds the
/// matched initial condition with margin, else `100 m v_B^2`.
pub fn default_depth(spec: &ExperimentSpec) -> f64 {
    let m = spec.species.mass;
    let c = &spec.constants;
    let k = spec.lattice.k;
    let v_b = spec.kinematics().v_b;
    let pi = std::f64::consts::PI;
    let period_matched = pi * pi * m.powi(3) * c.g * c.g / (4.0 * c.hbar * c.hbar * k.powi(4));
    let v0 = matched_speed(spec);
    if traps(m, c.g, k, period_matched, 0.5 * m * v0 * v0, TRAP_MARGIN) {
        period_matched
    } else {
        FALLBACK_DEPTH_FACTOR * m * v_b * v_b
    }
}

/// Velocity-Verlet integration from `(z0, v0)` over `duration`.
pub fn integrate_lattice_motion(
    z0: f64,
    v0: f64,
    duration: f64,
    spec: &ExperimentSpec,
    opts: &LatticeOptions,
) -> Result<LatticeTrajectory, LatticeError> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(LatticeError::Duration(duration));
    }
    let m = spec.species.mass;
    let g = spec.constants.g;
    let k = spec.lattice.k;
    let depth = opts.depth;
    let phase = match opts.phase {
        Some(p) => p,
        None => equilibrium_phase(m, g, k, depth)?,
    };
    if !(depth > 0.0 && depth.is_finite()) {
        return Err(LatticeError::Depth(depth));
    }
    let kinetic = 0.5 * m * v0 * v0;
    let trapped = opts.phase.is_none() && traps(m, g, k, depth, kinetic, 1.0);

    let omega_w = well_frequency(m, g, k, depth);
    let e0 = mechanical_energy(0.0, v0, m, g, k, depth, phase);
    let e_scale = e0.abs().max(depth);
    // Once trapped the speed never exceeds its value at the minimum.
    let v_bound = if trapped {
        v0.abs()
    } else {
        (v0 * v0 + 4.0 * depth / m).sqrt() + g * duration
    };
    let mut h = duration;
    if v_bound > 0.0 {
        h = h.min(MAX_LATTICE_PHASE_PER_STEP / (2.0 * k * v_bound));
    }
    if omega_w > 0.0 && kinetic > 0.0 {
        let wh = (8.0 * ENERGY_TARGET * e_scale / kinetic).sqrt().min(0.5);
        h = h.min(wh / omega_w);
    }
    if let Some(s) = opts.step {
        h = h.min(s);
    }
    let needed = (duration / h).ceil();
    if needed > opts.step_budget as f64 {
        return Err(LatticeError::StepBudget {
            needed,
            budget: opts.step_budget,
        });
    }
    let n = (needed as u64).max(1);
    let h = duration / n as f64;
    let stride = n.div_ceil(opts.max_samples.max(2) as u64 - 1).max(1);

    let k2 = 2.0 * k;
    let force = |u: f64| -g + k2 * depth / m * (k2 * u + phase).sin();
    let cap = (n / stride) as usize + 2;
    let mut ts = Vec::with_capacity(cap);
    let mut zs = Vec::with_capacity(cap);
    let mut vs = Vec::with_capacity(cap);
    let mut u = Dd::ZERO;
    let mut v = v0;
    let mut a = force(0.0);
    let mut int_u = CompensatedSum::new();
    let mut int_v2 = CompensatedSum::new();
    let mut drift: f64 = 0.0;
    ts.push(0.0);
    zs.push(z0);
    vs.push(v0);
    for i in 1..=n {
        let (u_prev, v_prev) = (u.to_f64(), v);
        let v_half = v + 0.5 * h * a;
        u += Dd::new(h * v_half);
        let uf = u.to_f64();
        a = force(uf);
        v = v_half + 0.5 * h * a;
        int_u.add(0.5 * h * (u_prev + uf));
        int_v2.add(0.5 * h * (v_prev * v_prev + v * v));
        let e = mechanical_energy(uf, v, m, g, k, depth, phase);
        drift = drift.max((e - e0).abs() / e_scale);
        if i % stride == 0 || i == n {
            ts.push(duration * (i as f64 / n as f64));
            zs.push(z0 + uf);
            vs.push(v);
        }
    }
    if drift > ENERGY_TOLERANCE {
        return Err(LatticeError::EnergyDrift {
            drift,
            bound: ENERGY_TOLERANCE,
        });
    }
    Ok(LatticeTrajectory {
        t: ts,
        z: zs,
        v: vs,
        z0,
        depth,
        phase,
        k,
        mass: m,
        g,
        step: h,
        steps: n,
        stride,
        method: "velocity_verlet",
        energy_drift: drift,
        trapped,
        full: Some(Averages {
            mean_z: z0 + int_u.value() / duration,
            mean_v2: int_v2.value() / duration,
        }),
    })
}

/// Trapezoid averages over the samples themselves.
pub fn sample_averages(t: &[f64], z: &[f64], v: &[f64]) -> Averages {
    if t.len() < 2 {
        return Averages {
            mean_z: z.first().copied().unwrap_or(0.0),
            mean_v2: v.first().map_or(0.0, |v| v * v),
        };
    }
    let mut iz = CompensatedSum::new();
    let mut iv = CompensatedSum::new();
    for i in 1..t.len() {
        let dt = t[i] - t[i - 1];
        iz.add(0.5 * dt * (z[i] + z[i - 1]));
        iv.add(0.5 * dt * (v[i] * v[i] + v[i - 1] * v[i - 1]));
    }
    let span = t[t.len() - 1] - t[0];
    Averages {
        mean_z: iz.value() / span,
        mean_v2: iv.value() / span,
    }
}

/// `(<z>, <v^2>)` over the whole run, at full step resolution when the
/// integrator recorded it.
pub fn time_averages(traj: &LatticeTrajectory) -> Averages {
    traj.full
        .unwrap_or_else(|| sample_averages(&traj.t, &traj.z, &traj.v))
}

/// Times of the maxima of `z`, where `v` crosses zero downwards, linearly
/// interpolated between samples.
pub fn turning_times(traj: &LatticeTrajectory) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..traj.v.len() {
        let (v0, v1) = (traj.v[i - 1], traj.v[i]);
        if v0 > 0.0 && v1 <= 0.0 {
            let f = v0 / (v0 - v1);
            out.push(traj.t[i - 1] + f * (traj.t[i] - traj.t[i - 1]));
        }
    }
    out
}

/// Mean spacing of the upper turning points.
pub fn oscillation_period(traj: &LatticeTrajectory) -> Option<f64> {
    let tt = turning_times(traj);
    if tt.len() < 2 {
        return None;
    }
    Some((tt[tt.len() - 1] - tt[0]) / (tt.len() - 1) as f64)
}

/// Complete elliptic integral of the first kind, `K(k)` with modulus `k`,
/// by the arithmetic-geometric mean.
pub fn elliptic_k(k: f64) -> f64 {
    let (mut a, mut b) = (1.0f64, (1.0 - k * k).sqrt());
    for _ in 0..64 {
        if (a - b).abs() <= 1e-17 * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    std::f64::consts::PI / (2.0 * a)
}

/// Exact period of the untilted lattice pendulum launched from a minimum
/// with speed `v0`.
pub fn pendulum_period(m: f64, k: f64, depth: f64, v0: f64) -> f64 {
    let omega = 2.0 * k * (depth / m).sqrt();
    let cos_max = 1.0 - 0.5 * m * v0 * v0 / depth;
    let half = (0.5 * (1.0 - cos_max)).sqrt();
    4.0 * elliptic_k(half) / omega
}

/// Hold trajectory of one arm: the well minimum at the arm's mean height,
/// matched initial speed, lasting `T_B`.
pub fn arm_hold_trajectory(spec: &ExperimentSpec, arm: Arm) -> Result<LatticeTrajectory, LatticeError> {
    let z0 = match arm {
        Arm::Lower => 0.0,
        Arm::Upper => spec.kinematics().delta_z,
    };
    integrate_lattice_motion(
        z0,
        matched_speed(spec),
        spec.timing.t_b,
        spec,
        &LatticeOptions::for_spec(spec),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LatticeClockPhases {
    pub delta_d: f64,
    pub delta_u: f64,
    /// `delta - (omega - omega0) T_B` for each arm.
    pub correction_d: f64,
    pub correction_u: f64,
    pub lower: Averages,
    pub upper: Averages,
}

fn check_duration(traj: &LatticeTrajectory, t_b: f64) -> Result<(), LatticeError> {
    let found = traj.duration();
    if (found - t_b).abs() > 1e-12 * t_b.abs() {
        return Err(LatticeError::DurationMismatch { found, expected: t_b });
    }
    Ok(())
}

/// `delta = omega T_B - omega0 T_B [1 + g <z>/c^2 - <v^2>/2c^2]` per arm,
/// from each trajectory's own averages. Returns `(delta_d, delta_u)` in
/// double-double together with the f64 summary.
pub fn lattice_clock_corrections(
    lower: &LatticeTrajectory,
    upper: &LatticeTrajectory,
    spec: &ExperimentSpec,
) -> Result<((Dd, Dd), LatticeClockPhases), LatticeError> {
    let t_b = spec.timing.t_b;
    check_duration(lower, t_b)?;
    check_duration(upper, t_b)?;
    let c2 = spec.constants.c * spec.constants.c;
    let g = spec.constants.g;
    let w0t = Dd::prod(spec.species.omega0, t_b);
    let base = Dd::sum2(spec.timing.omega, -spec.species.omega0) * t_b;
    let corr = |a: Averages| -(w0t * ((g * a.mean_z - 0.5 * a.mean_v2) / c2));
    let (la, ua) = (time_averages(lower), time_averages(upper));
    let (cd, cu) = (corr(la), corr(ua));
    let (dd, du) = (base + cd, base + cu);
    Ok((
        (dd, du),
        LatticeClockPhases {
            delta_d: dd.to_f64(),
            delta_u: du.to_f64(),
            correction_d: cd.to_f64(),
            correction_u: cu.to_f64(),
            lower: la,
            upper: ua,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;

    fn demo() -> ExperimentSpec {
        presets::reduced_demo(0.01, 0.01)
    }

    #[test]
    fn elliptic_k_reference_values() {
        // K(0) = pi/2; K(1/sqrt 2) = Gamma(1/4)^2 / (4 sqrt(pi)).
        assert!((elliptic_k(0.0) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((elliptic_k(0.5f64.sqrt()) - 1.854_074_677_301_372).abs() < 1e-14);
        assert!((elliptic_k(0.9) - 2.280_549_138_422_770_2).abs() < 1e-13);
    }

    #[test]
    fn default_depth_is_period_matched_in_reduced_units() {
        let s = demo();
        let d = default_depth(&s);
        let w = well_frequency(1.0, 1.0, s.lattice.k, d);
        let tau_b = s.kinematics().tau_b;
        // The tilt shifts the frequency only at second order in m g/(2kV0).
        assert!((2.0 * std::f64::consts::PI / w / tau_b - 1.0).abs() < 1e-3);
    }

    #[test]
    fn fallback_depth_in_si() {
        let s = presets::strontium();
        let v_b = s.kinematics().v_b;
        let d = default_depth(&s);
        assert_eq!(d, FALLBACK_DEPTH_FACTOR * s.species.mass * v_b * v_b);
        assert!(barrier_heights(s.species.mass, 9.81, s.lattice.k, d).is_some());
    }

    #[test]
    fn shallow_lattice_has_no_well() {
        let s = demo();
        let mut o = LatticeOptions::for_spec(&s);
        o.depth = 0.5 * 1.0 / (2.0 * s.lattice.k);
        let e = integrate_lattice_motion(0.0, 0.0, 1.0, &s, &o).unwrap_err();
        assert!(matches!(e, LatticeError::NoWell { .. }));
    }

    #[test]
    fn at_rest_in_minimum_stays_put() {
        let s = demo();
        let o = LatticeOptions::for_spec(&s);
        let tr = integrate_lattice_motion(0.25, 0.0, 3.0, &s, &o).unwrap();
        let a = time_averages(&tr);
        // Only the rounding of sin(pi - asin s) against s moves the atom.
        let v_b = s.kinematics().v_b;
        assert!((a.mean_z - 0.25).abs() < 1e-12);
        assert!(a.mean_v2 < 1e-20 * v_b * v_b, "{a:?}");
    }

    #[test]
    fn step_budget_is_enforced() {
        let s = demo();
        let mut o = LatticeOptions::for_spec(&s);
        o.step_budget = 10;
        let e = integrate_lattice_motion(0.0, 0.3, 10.0, &s, &o).unwrap_err();
        assert!(matches!(e, LatticeError::StepBudget { .. }));
    }

    #[test]
    fn step_resolves_lattice_phase() {
        let s = demo();
        let tr = arm_hold_trajectory(&s, Arm::Lower).unwrap();
        let vmax = tr.v.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(2.0 * s.lattice.k * vmax * tr.step < MAX_LATTICE_PHASE_PER_STEP);
        assert!(tr.energy_drift < ENERGY_TOLERANCE);
        assert!(tr.trapped);
    }

    #[test]
    fn untilted_period_matches_pendulum() {
        let mut s = demo();
        s.constants.g = 0.0;
        let mut o = LatticeOptions::for_spec(&s);
        o.depth = 2.0;
        let v0 = 1.1;
        let want = pendulum_period(1.0, s.lattice.k, o.depth, v0);
        o.step = Some(want * 2e-4);
        let tr = integrate_lattice_motion(0.0, v0, 30.0 * want, &s, &o).unwrap();
        let got = oscillation_period(&tr).unwrap();
        assert!((got / want - 1.0).abs() < 1e-6, "{got} {want}");
    }

    #[test]
    fn matched_depth_bounces_with_bloch_period() {
        let s = demo();
        let tr = arm_hold_trajectory(&s, Arm::Lower).unwrap();
        let p = oscillation_period(&tr).unwrap();
        assert!((p / s.kinematics().tau_b - 1.0).abs() < 0.01, "{p}");
    }

    #[test]
    fn mean_square_speed_near_bounce_value() {
        let s = demo();
        let tr = arm_hold_trajectory(&s, Arm::Lower).unwrap();
        let a = time_averages(&tr);
        let want = s.kinematics().mean_v2;
        assert!((a.mean_v2 / want - 1.0).abs() < 0.05, "{a:?}");
    }

    #[test]
    fn sample_averages_of_bounce_parabola() {
        // v runs linearly from v_B to -v_B over one bounce.
        let (v_b, tau) = (0.5, 1.0);
        let n = 20_000;
        let t: Vec<f64> = (0..=n).map(|i| tau * i as f64 / n as f64).collect();
        let v: Vec<f64> = t.iter().map(|&t| v_b - 2.0 * v_b * t / tau).collect();
        let z: Vec<f64> = t.iter().map(|&t| v_b * t - v_b * t * t / tau).collect();
        let a = sample_averages(&t, &z, &v);
        assert!((a.mean_v2 / (v_b * v_b / 3.0) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn pure_offset_splits_by_gravity() {
        let s = demo();
        let tr = arm_hold_trajectory(&s, Arm::Lower).unwrap();
        let mut up = tr.clone();
        let dz = s.kinematics().delta_z;
        up.full = up.full.map(|a| Averages {
            mean_z: a.mean_z + dz,
            ..a
        });
        let ((d, u), _) = lattice_clock_corrections(&tr, &up, &s).unwrap();
        let c2 = s.constants.c * s.constants.c;
        let want = -s.species.omega0 * s.constants.g * dz * s.timing.t_b / c2;
        assert!(((u - d).to_f64() / want - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duration_mismatch_is_an_error() {
        let s = demo();
        let tr = arm_hold_trajectory(&s, Arm::Lower).unwrap();
        let short = s.with_hold(2.0);
        let e = lattice_clock_corrections(&tr, &tr, &short).unwrap_err();
        assert!(matches!(e, LatticeError::DurationMismatch { .. }));
    }
}
