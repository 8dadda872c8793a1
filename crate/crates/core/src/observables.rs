//! Detection probabilities, visibility and Ramsey-scan resonance extraction.

use serde::Serialize;
use thiserror::Error;

use crate::model::ExperimentSpec;
use crate::numeric::{reduce_two_pi, Dd};
use crate::phase::{delta_phi_closed_form, ClockPhases, TrigArgs};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PortProbabilities {
    pub p0: f64,
    pub p1: f64,
    pub total: f64,
    pub difference: f64,
}

fn port_from_args(a: &TrigArgs, j: u8) -> f64 {
    let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
    let cross = a.phi_plus_half_split.cos() * a.half_d.sin() * a.half_u.sin();
    (1.0 - a.mean.cos() * a.half_split.cos() + 2.0 * sign * cross) / 16.0
}

fn args(delta_phi: f64, delta_d: f64, delta_u: f64) -> TrigArgs {
    ClockPhases {
        delta_phi: Dd::new(delta_phi),
        delta_d: Dd::new(delta_d),
        delta_u: Dd::new(delta_u),
    }
    .trig_args()
}

/// Ground-state probability at output port `j`.
pub fn port_probability(delta_phi: f64, delta_d: f64, delta_u: f64, j: u8) -> f64 {
    port_from_args(&args(delta_phi, delta_d, delta_u), j)
}

/// The same probability from the six-pulse amplitude,
/// `|(1/8)[1 - e^{i d} + (-1)^j e^{i phi}(1 - e^{i u})]|^2`.
pub fn port_probability_amplitude(delta_phi: f64, delta_d: f64, delta_u: f64, j: u8) -> f64 {
    let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
    let (p, d, u) = (
        reduce_two_pi(Dd::new(delta_phi)),
        reduce_two_pi(Dd::new(delta_d)),
        reduce_two_pi(Dd::new(delta_u)),
    );
    let (sd, cd) = d.sin_cos();
    let (su, cu) = u.sin_cos();
    let (sp, cp) = p.sin_cos();
    // e^{i phi} (1 - e^{i u})
    let (br, bi) = (1.0 - cu, -su);
    let (xr, xi) = (cp * br - sp * bi, cp * bi + sp * br);
    let re = (1.0 - cd + sign * xr) / 8.0;
    let im = (-sd + sign * xi) / 8.0;
    re * re + im * im
}

pub fn port_probabilities(phases: &ClockPhases) -> PortProbabilities {
    let a = phases.trig_args();
    let p0 = port_from_args(&a, 0);
    let p1 = port_from_args(&a, 1);
    PortProbabilities {
        p0,
        p1,
        total: total_from_args(&a),
        difference: difference_from_args(&a),
    }
}

fn total_from_args(a: &TrigArgs) -> f64 {
    (1.0 - a.half_split.cos() * a.mean.cos()) / 8.0
}

// P^(0) - P^(1) from the port formula: twice the cross term over 16.
fn difference_from_args(a: &TrigArgs) -> f64 {
    a.phi_plus_half_split.cos() * a.half_d.sin() * a.half_u.sin() / 4.0
}

/// `P_g = (1/8)[1 - cos((u - d)/2) cos((u + d)/2)]`.
pub fn total_ground_probability(delta_d: f64, delta_u: f64) -> f64 {
    total_from_args(&args(0.0, delta_d, delta_u))
}

/// `P_g = (1/8)[1 - V cos((omega - <omega0>) T_B)]`. The detuning from the
/// mean frequency is passed directly so it keeps its precision.
pub fn total_ground_probability_visibility(mean_detuning: f64, eps_g: f64, omega0: f64, t_b: f64) -> f64 {
    let v = visibility(eps_g, omega0, t_b);
    let x = reduce_two_pi(Dd::prod(mean_detuning, t_b));
    (1.0 - v * x.cos()) / 8.0
}

/// `D_g = P_g^(0) - P_g^(1) = (1/4) cos(phi + (u - d)/2) sin(d/2) sin(u/2)`.
pub fn probability_difference(delta_phi: f64, delta_d: f64, delta_u: f64) -> f64 {
    difference_from_args(&args(delta_phi, delta_d, delta_u))
}

fn visibility_arg(eps_g: f64, omega0: f64, t_b: f64) -> f64 {
    eps_g * omega0 * t_b
}

/// `V = cos(eps_g omega0 T_B / 2)`.
pub fn visibility(eps_g: f64, omega0: f64, t_b: f64) -> f64 {
    reduce_two_pi(Dd::new(visibility_arg(eps_g, omega0, t_b)).half()).cos()
}

/// `1 - V`, formed as `2 sin^2(x/4)` so it stays accurate when tiny.
pub fn visibility_drop(eps_g: f64, omega0: f64, t_b: f64) -> f64 {
    let s = (0.25 * visibility_arg(eps_g, omega0, t_b)).sin();
    2.0 * s * s
}

/// Leading term `(eps_g omega0 T_B)^2 / 8`.
pub fn visibility_drop_small(eps_g: f64, omega0: f64, t_b: f64) -> f64 {
    let x = visibility_arg(eps_g, omega0, t_b);
    x * x / 8.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanFrequency {
    pub mean_omega0: f64,
    pub fractional_shift: f64,
}

/// `<omega0> = omega0 (1 - eps_k + eps_g/2)`.
pub fn mean_frequency_shift(eps_k: f64, eps_g: f64, omega0: f64) -> MeanFrequency {
    let fractional_shift = -eps_k + 0.5 * eps_g;
    MeanFrequency {
        mean_omega0: omega0 + omega0 * fractional_shift,
        fractional_shift,
    }
}

/// Incoherent average of the two single-height Ramsey signals. Each height
/// alone gives port probabilities `sin^2(delta/2)/8` split evenly, so the
/// ports never differ.
pub fn mixture_probabilities(delta_d: f64, delta_u: f64) -> PortProbabilities {
    let a = args(0.0, delta_d, delta_u);
    let (sd, su) = (a.half_d.sin(), a.half_u.sin());
    let port = (sd * sd + su * su) / 16.0;
    PortProbabilities {
        p0: port,
        p1: port,
        total: 2.0 * port,
        difference: 0.0,
    }
}

/// Every observable reported for one run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Observables {
    pub delta_phi: f64,
    pub delta_d: f64,
    pub delta_u: f64,
    /// `delta_u - delta_d`, formed before rounding.
    pub delta_split: f64,
    pub p0: f64,
    pub p1: f64,
    pub total: f64,
    /// `P_g / (1/4)`.
    pub total_normalized: f64,
    pub difference: f64,
    pub visibility: f64,
    pub visibility_drop: f64,
    pub mean_omega0: f64,
    pub fractional_shift: f64,
    pub eps_k: f64,
    pub eps_g: f64,
}

pub fn observables(spec: &ExperimentSpec, phases: &ClockPhases) -> Observables {
    let p = port_probabilities(phases);
    let e = spec.epsilons();
    let w0 = spec.species.omega0;
    let t_b = spec.timing.t_b;
    let mf = mean_frequency_shift(e.eps_k, e.eps_g, w0);
    Observables {
        delta_phi: phases.delta_phi.to_f64(),
        delta_d: phases.delta_d.to_f64(),
        delta_u: phases.delta_u.to_f64(),
        delta_split: (phases.delta_u - phases.delta_d).to_f64(),
        p0: p.p0,
        p1: p.p1,
        total: p.total,
        total_normalized: 4.0 * p.total,
        difference: p.difference,
        visibility: visibility(e.eps_g, w0, t_b),
        visibility_drop: visibility_drop(e.eps_g, w0, t_b),
        mean_omega0: mf.mean_omega0,
        fractional_shift: mf.fractional_shift,
        eps_k: e.eps_k,
        eps_g: e.eps_g,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanAxis {
    HoldTime,
    /// Absolute clock frequency `omega`.
    ClockFrequency,
    /// `omega - omega0`.
    Detuning,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScanError {
    #[error("a scan needs at least 5 points, got {0}")]
    TooFewPoints(usize),
    #[error("empty or invalid range [{0}, {1}]")]
    Range(f64, f64),
    #[error("resonance not bracketed: the extremum sits at the edge of the scan")]
    NotBracketed,
    #[error("flat scan: no fringe to locate")]
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RamseyScan {
    pub axis: ScanAxis,
    pub values: Vec<f64>,
    pub p0: Vec<f64>,
    pub p1: Vec<f64>,
    pub total: Vec<f64>,
    pub difference: Vec<f64>,
    pub visibility: Vec<f64>,
    /// Extracted resonance `omega_res`.
    pub resonance: f64,
    /// `omega_res - omega0`.
    pub resonance_detuning: f64,
    /// `(omega_res - omega0) / omega0`.
    pub fractional_shift: f64,
    /// Fringe frequency in `T_B` for hold-time scans.
    pub fringe_frequency: Option<f64>,
}

/// Perturbative phases at a given detuning and hold, in double-double.
pub fn phases_at(spec: &ExperimentSpec, detuning: Dd, t_b: f64) -> ClockPhases {
    let s = spec.with_hold(t_b);
    let e = s.epsilons();
    let w0t = Dd::prod(s.species.omega0, t_b);
    let delta_d = detuning * t_b + w0t * e.eps_k;
    let delta_u = delta_d - w0t * e.eps_g;
    ClockPhases {
        delta_phi: delta_phi_closed_form(&s),
        delta_d,
        delta_u,
    }
}

fn grid(from: f64, to: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                to
            } else {
                from + (to - from) * (i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

pub fn ramsey_scan(
    spec: &ExperimentSpec,
    axis: ScanAxis,
    range: (f64, f64),
    n_points: usize,
) -> Result<RamseyScan, ScanError> {
    if n_points < 5 {
        return Err(ScanError::TooFewPoints(n_points));
    }
    let (from, to) = range;
    if !(from.is_finite() && to.is_finite() && to > from) {
        return Err(ScanError::Range(from, to));
    }
    let values = grid(from, to, n_points);
    let w0 = spec.species.omega0;
    let base_detuning = Dd::sum2(spec.timing.omega, -w0);
    let eps_g = spec.epsilons().eps_g;
    let point = |x: f64| -> (ClockPhases, f64) {
        match axis {
            ScanAxis::HoldTime => (phases_at(spec, base_detuning, x), x),
            ScanAxis::ClockFrequency => (phases_at(spec, Dd::sum2(x, -w0), spec.timing.t_b), spec.timing.t_b),
            ScanAxis::Detuning => (phases_at(spec, Dd::new(x), spec.timing.t_b), spec.timing.t_b),
        }
    };
    let mut scan = RamseyScan {
        axis,
        values: values.clone(),
        p0: Vec::with_capacity(n_points),
        p1: Vec::with_capacity(n_points),
        total: Vec::with_capacity(n_points),
        difference: Vec::with_capacity(n_points),
        visibility: Vec::with_capacity(n_points),
        resonance: f64::NAN,
        resonance_detuning: f64::NAN,
        fractional_shift: f64::NAN,
        fringe_frequency: None,
    };
    for &x in &values {
        let (ph, t_b) = point(x);
        let p = port_probabilities(&ph);
        scan.p0.push(p.p0);
        scan.p1.push(p.p1);
        scan.total.push(p.total);
        scan.difference.push(p.difference);
        scan.visibility.push(visibility(eps_g, w0, t_b));
    }

    let detuning_res = match axis {
        ScanAxis::HoldTime => {
            let omega_f = fringe_frequency(&values, &scan.total)?;
            scan.fringe_frequency = Some(omega_f);
            let d = base_detuning.to_f64();
            // The fringe gives |omega - omega_res|; pick the side nearer omega0.
            let (a, b) = (d - omega_f, d + omega_f);
            if a.abs() <= b.abs() {
                a
            } else {
                b
            }
        }
        ScanAxis::ClockFrequency | ScanAxis::Detuning => {
            let det: Vec<f64> = match axis {
                ScanAxis::ClockFrequency => values.iter().map(|&x| Dd::sum2(x, -w0).to_f64()).collect(),
                _ => values.clone(),
            };
            let v = visibility(eps_g, w0, spec.timing.t_b);
            central_extremum(&det, &scan.total, v >= 0.0)?
        }
    };
    scan.resonance_detuning = detuning_res;
    scan.resonance = w0 + detuning_res;
    scan.fractional_shift = if w0 != 0.0 { detuning_res / w0 } else { f64::NAN };
    Ok(scan)
}

/// The minimum (or maximum) of `y` nearest the middle of the scan, refined
/// by a parabola through it and its neighbours.
fn central_extremum(x: &[f64], y: &[f64], minimum: bool) -> Result<f64, ScanError> {
    let (lo, hi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi - lo > 1e-14) {
        return Err(ScanError::Degenerate);
    }
    let s = if minimum { 1.0 } else { -1.0 };
    let n = y.len();
    let centre = 0.5 * (x[0] + x[n - 1]);
    let mut best: Option<usize> = None;
    for i in 1..n - 1 {
        let (a, b, c) = (s * y[i - 1], s * y[i], s * y[i + 1]);
        if b <= a && b <= c && (b < a || b < c) {
            let closer = best.is_none_or(|j| (x[i] - centre).abs() < (x[j] - centre).abs());
            if closer {
                best = Some(i);
            }
        }
    }
    let i = best.ok_or(ScanError::NotBracketed)?;
    let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
    let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
    let den = (x0 - x1) * (x0 - x2) * (x1 - x2);
    let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den;
    let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / den;
    if a == 0.0 {
        return Ok(x1);
    }
    let vertex = -b / (2.0 * a);
    Ok(vertex.clamp(x0, x2))
}

/// Centroid of the windowed power spectrum of `1 - 8 P_g` around its peak.
fn fringe_frequency(t: &[f64], total: &[f64]) -> Result<f64, ScanError> {
    let n = t.len();
    let ys: Vec<f64> = total.iter().map(|p| 1.0 - 8.0 * p).collect();
    let mean = ys.iter().sum::<f64>() / n as f64;
    let span = t[n - 1] - t[0];
    let dt = span / (n - 1) as f64;
    let pi = std::f64::consts::PI;
    let w: Vec<f64> = (0..n)
        .map(|i| {
            let s = (pi * i as f64 / (n - 1) as f64).sin();
            (ys[i] - mean) * s * s
        })
        .collect();
    if w.iter().all(|v| v.abs() < 1e-14) {
        return Err(ScanError::Degenerate);
    }
    let power = |f: f64| {
        let (mut re, mut im) = (0.0, 0.0);
        for (i, wi) in w.iter().enumerate() {
            let (s, c) = (f * (t[i] - t[0])).sin_cos();
            re += wi * c;
            im -= wi * s;
        }
        re * re + im * im
    };
    let nyquist = pi / dt;
    let df = 2.0 * pi / (8.0 * span);
    let grid_n = (nyquist / df).ceil() as usize;
    let (mut f_peak, mut p_peak) = (0.0, 0.0);
    for i in 1..grid_n {
        let f = i as f64 * df;
        let p = power(f);
        if p > p_peak {
            p_peak = p;
            f_peak = f;
        }
    }
    if !(p_peak > 0.0) || f_peak <= df {
        return Err(ScanError::Degenerate);
    }
    let (a, b) = (0.5 * f_peak, (1.5 * f_peak).min(nyquist));
    let m = (((b - a) / (df / 4.0)).ceil() as usize).max(16) & !1;
    let h = (b - a) / m as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..=m {
        let f = a + h * i as f64;
        let wgt = if i == 0 || i == m {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let p = power(f);
        num += wgt * f * p;
        den += wgt * p;
    }
    Ok(num / den)
}
