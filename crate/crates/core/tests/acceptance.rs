//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion does.

use std::time::{Duration, Instant};

use clocksim::dsl::{parse_spec, SequenceSource};
use clocksim::lattice::{arm_hold_trajectory, lattice_clock_corrections};
use clocksim::model::{presets, AtomSpecies, ExperimentSpec, LatticeConfig, PhysicalConstants, TimingConfig, UnitMode};
use clocksim::numeric::Dd;
use clocksim::observables::{
    mixture_probabilities, phases_at, port_probabilities, port_probability, port_probability_amplitude,
    probability_difference, ramsey_scan, total_ground_probability, total_ground_probability_visibility,
    mean_frequency_shift, visibility_drop, ScanAxis,
};
use clocksim::phase::clock::{clock_phase_corrections, single_oscillation_correction, single_oscillation_quadrature};
use clocksim::phase::interferometer::{interferometer_phase, stage_closed_forms};
use clocksim::phase::nonperturbative::nonperturbative_report;
use clocksim::phase::propagation::{propagation_closed_form, propagation_phase, propagation_quadrature};
use clocksim::trajectory::{thermal_wavelength, trajectory_pair, Arm, Segment};

const PROBABILITY_ABS_TOL: f64 = 1e-12;
const SHIFT_REL_TOL: f64 = 1e-3;
const SCAN_ABS_TOL: f64 = 1e-12;
const DELTA_PHI_REL_TOL: f64 = 1e-9;
const MAGNITUDE_FACTOR_10: f64 = 10.0;
const MAGNITUDE_FACTOR_3: f64 = 3.0;
const ENGINE_K: f64 = 10.0;
const LATTICE_REL_TOL: f64 = 0.05;
const ENVELOPE_FRACTION: f64 = 1e-3;
const MIXTURE_ABS_TOL: f64 = 1e-12;
const QUADRATURE_REL_TOL: f64 = 1e-8;
const QUADRATURE_PANELS: usize = 20_000;

/// SplitMix64; enough for reproducible test inputs.
struct Rng(u64);

impl Rng {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn uniform(&mut self, a: f64, b: f64) -> f64 {
        a + (b - a) * self.unit()
    }

    fn log_uniform(&mut self, a: f64, b: f64) -> f64 {
        self.uniform(a.ln(), b.ln()).exp()
    }
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn within_factor(x: f64, target: f64, factor: f64) -> bool {
    x > 0.0 && x / target <= factor && target / x <= factor
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn probability_forms() -> Outcome {
    let mut rng = Rng(1);
    let (mut port, mut total) = (0.0_f64, 0.0_f64);
    for _ in 0..1_000_000 {
        let phi = rng.uniform(-100.0, 100.0);
        let d = rng.uniform(-100.0, 100.0);
        let u = rng.uniform(-100.0, 100.0);
        let p0 = port_probability(phi, d, u, 0);
        let p1 = port_probability(phi, d, u, 1);
        port = port
            .max((p0 - port_probability_amplitude(phi, d, u, 0)).abs())
            .max((p1 - port_probability_amplitude(phi, d, u, 1)).abs());
        total = total.max((p0 + p1 - total_ground_probability(d, u)).abs());
    }
    outcome(
        port <= PROBABILITY_ABS_TOL && total <= PROBABILITY_ABS_TOL,
        format!("10^6 samples: port vs amplitude {port:.2e}, sum vs total {total:.2e} (tol {PROBABILITY_ABS_TOL:e})"),
    )
}

fn fringe_reproduction() -> Outcome {
    let a = presets::reduced_demo(0.01, 0.0);
    let b = presets::reduced_demo(0.01, 0.01);
    let (range, n) = ((0.0, 50.0), 1000);
    let (sa, sb) = match (
        ramsey_scan(&a, ScanAxis::HoldTime, range, n),
        ramsey_scan(&b, ScanAxis::HoldTime, range, n),
    ) {
        (Ok(x), Ok(y)) => (x, y),
        (x, y) => return outcome(false, format!("scan failed: {:?} / {:?}", x.err(), y.err())),
    };
    let w0 = b.species.omega0;
    let mean_detuning = |s: &ExperimentSpec| {
        let e = s.epsilons();
        s.timing.omega - mean_frequency_shift(e.eps_k, e.eps_g, w0).mean_omega0
    };
    let (da, db) = (mean_detuning(&a), mean_detuning(&b));
    let eps_g = b.epsilons().eps_g;
    let mut envelope = 0.0_f64;
    let mut total = 0.0_f64;
    for (i, &t) in sa.values.iter().enumerate() {
        envelope = envelope
            .max((sa.visibility[i] - 1.0).abs())
            .max((sb.visibility[i] - (eps_g * w0 * t / 2.0).cos()).abs());
        total = total
            .max((sa.total[i] - total_ground_probability_visibility(da, 0.0, w0, t)).abs())
            .max((sb.total[i] - total_ground_probability_visibility(db, eps_g, w0, t)).abs());
    }
    let shift = sb.resonance - sa.resonance;
    let expected = w0 * eps_g / 2.0;
    let shift_err = rel(shift, expected);
    outcome(
        envelope <= SCAN_ABS_TOL && total <= SCAN_ABS_TOL && shift_err <= SHIFT_REL_TOL,
        format!(
            "envelopes off by {envelope:.2e}, totals by {total:.2e}; resonance shift {shift:.6} vs {expected:.6} (rel {shift_err:.2e}, tol {SHIFT_REL_TOL:e})"
        ),
    )
}

fn random_spec(rng: &mut Rng) -> ExperimentSpec {
    if rng.unit() < 0.5 {
        let c = rng.log_uniform(10.0, 1e4);
        let (t, t_prime) = (rng.uniform(0.1, 2.0), rng.uniform(0.1, 2.0));
        let omega0 = rng.uniform(0.0, 100.0);
        let timing = TimingConfig {
            t,
            t_prime,
            t_b: rng.uniform(0.3, 50.0),
            v0: 0.0,
            delta_v: 0.0,
            omega: omega0,
        };
        let spec = ExperimentSpec {
            mode: UnitMode::Reduced,
            constants: PhysicalConstants::reduced(c),
            species: AtomSpecies { mass: rng.uniform(0.5, 2.0), omega0, temperature: None },
            lattice: LatticeConfig { k: rng.uniform(0.2, 1.0), depth: None, step: None },
            timing,
        };
        spec.with_delta_v(rng.uniform(1e-3, 0.5))
    } else {
        let mut spec = presets::strontium();
        spec.timing.t = rng.uniform(1e-3, 20e-3);
        spec.timing.t_prime = rng.uniform(1e-3, 10e-3);
        spec.timing.t_b = rng.uniform(1e-3, 2.0);
        spec.with_delta_v(rng.log_uniform(1e-4, 1e-2))
    }
}

fn closed_form_phase() -> Outcome {
    let mut rng = Rng(3);
    let (mut total, mut prop, mut laser, mut stages) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for i in 0..1000 {
        let spec = random_spec(&mut rng);
        let ph = match interferometer_phase(&spec) {
            Ok(p) => p,
            Err(e) => return outcome(false, format!("spec {i}: {e}")),
        };
        let scale = ph.closed_form.to_f64().abs();
        total = total.max(rel(ph.delta_phi.to_f64(), ph.closed_form.to_f64()));
        prop = prop.max((ph.propagation - ph.propagation_closed_form).to_f64().abs() / scale);
        laser = laser.max(((ph.laser_bragg + ph.laser_bloch) - ph.laser_from_heights).to_f64().abs() / scale);
        let sum: f64 = ph.stages.iter().map(|s| s.value).sum();
        let forms = stage_closed_forms(&spec);
        let stage_err = ph
            .stages
            .iter()
            .zip(forms)
            .map(|(s, f)| (s.value - f).abs() / scale)
            .fold((sum - ph.propagation.to_f64()).abs() / scale, f64::max);
        stages = stages.max(stage_err);
    }
    let worst = total.max(prop).max(laser).max(stages);
    outcome(
        worst <= DELTA_PHI_REL_TOL,
        format!(
            "1000 specs: total {total:.2e}, propagation {prop:.2e}, laser {laser:.2e}, stages {stages:.2e} (rel tol {DELTA_PHI_REL_TOL:e})"
        ),
    )
}

fn magnitude_claims() -> Outcome {
    let sr = presets::strontium();
    let v_b = sr.kinematics().v_b;
    let dz = sr.kinematics().delta_z;
    let e = sr.epsilons();
    let far = sr.with_delta_v(1e-2);
    let far_e = far.epsilons();
    let shift = mean_frequency_shift(far_e.eps_k, far_e.eps_g, sr.species.omega0).fractional_shift.abs();
    let drop = visibility_drop(1e-22, sr.species.omega0, 1.0);
    let drop_sr = visibility_drop(e.eps_g, sr.species.omega0, 1.0);
    let checks = [
        within_factor(e.eps_k, 1e-22, MAGNITUDE_FACTOR_10),
        within_factor(e.eps_g.abs(), 1e-22, MAGNITUDE_FACTOR_10),
        within_factor(shift, 1e-21, MAGNITUDE_FACTOR_10),
        within_factor(drop, 1e-15, MAGNITUDE_FACTOR_10),
    ];
    outcome(
        checks.iter().all(|&c| c),
        format!(
            "v_B {:.2} mm/s, dz {:.0} um: eps_k {:.2e} [{}], eps_g {:.2e} [{}]; 100 um shift {shift:.2e} [{}]; drop at eps_g 1e-22 {drop:.2e} [{}] (own eps_g gives {drop_sr:.2e})",
            v_b * 1e3,
            dz * 1e6,
            e.eps_k,
            mark(checks[0]),
            e.eps_g,
            mark(checks[1]),
            mark(checks[2]),
            mark(checks[3]),
        ),
    )
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "out of range"
    }
}

fn separation_magnitudes() -> Outcome {
    let base = presets::strontium();
    let spec = base.with_hold(500.0 * base.kinematics().tau_b);
    let n = spec.partition().n;
    let pair = match trajectory_pair(&spec, Arm::Lower) {
        Ok(p) => p,
        Err(e) => return outcome(false, e.to_string()),
    };
    let lambda = thermal_wavelength(&spec).unwrap_or(f64::NAN);
    let sep_ok = within_factor(pair.max_separation, 1e-13, MAGNITUDE_FACTOR_3);
    let lambda_ok = within_factor(lambda, 1e-7, MAGNITUDE_FACTOR_3);
    outcome(
        sep_ok && lambda_ok && n == 500,
        format!(
            "N = {n}: max separation {:.3e} m (traced {:.3e}) [{}]; thermal wavelength {lambda:.3e} m [{}]",
            pair.max_separation,
            pair.measured_max_separation,
            mark(sep_ok),
            mark(lambda_ok)
        ),
    )
}

fn engine_cross_validation() -> Outcome {
    let demo = presets::reduced_demo(0.01, 0.01);
    let c2 = demo.constants.c * demo.constants.c;
    let mut cases = Vec::new();
    for exp in -12..=-6 {
        let r = 10f64.powi(exp);
        for t_b in [10.0, 100.0] {
            let mut s = demo.with_hold(t_b);
            s.species.omega0 = r * c2;
            s.timing.omega = 0.9 * s.species.omega0;
            cases.push(s);
        }
    }
    cases.push(presets::strontium());
    let mut worst = 0.0_f64;
    for s in &cases {
        let report = nonperturbative_report(s);
        for arm in [report.lower, report.upper] {
            worst = worst.max(arm.discrepancy_first_order / (ENGINE_K * report.dm_over_m));
        }
    }

    let text = include_str!("../examples/deep_lattice_reduced.seq");
    let deep = match parse_spec(&SequenceSource::inline(text)) {
        Ok(v) => v.spec,
        Err(e) => return outcome(false, format!("example: {e:?}")),
    };
    let lattice = arm_hold_trajectory(&deep, Arm::Lower)
        .and_then(|lo| arm_hold_trajectory(&deep, Arm::Upper).map(|up| (lo, up)))
        .and_then(|(lo, up)| lattice_clock_corrections(&lo, &up, &deep));
    let ((ld, lu), _) = match lattice {
        Ok(x) => x,
        Err(e) => return outcome(false, format!("lattice: {e}")),
    };
    let p = clock_phase_corrections(&deep);
    let e = deep.epsilons();
    let w0t = deep.species.omega0 * deep.timing.t_b;
    let (scale_d, scale_u) = (w0t * e.eps_k, w0t * (e.eps_k + e.eps_g.abs()));
    let lat_d = (ld - p.delta_d).to_f64().abs() / scale_d;
    let lat_u = (lu - p.delta_u).to_f64().abs() / scale_u;
    let lat = lat_d.max(lat_u);
    outcome(
        worst <= 1.0 && lat <= LATTICE_REL_TOL,
        format!(
            "{} specs, dm/m in [1e-12, 1e-6] plus Sr: worst first-order discrepancy {worst:.3} of {ENGINE_K} dm/m; lattice vs closed form {lat:.2e} of the correction (tol {LATTICE_REL_TOL})",
            cases.len()
        ),
    )
}

fn superposition_discriminator() -> Outcome {
    let spec = presets::reduced_demo(0.01, 0.01);
    let detuning = Dd::sum2(spec.timing.omega, -spec.species.omega0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut envelope, mut mixture, mut consistency) = (0.0_f64, 0.0_f64, 0.0_f64);
    for i in 0..=4000 {
        let t_b = 0.5 + 99.5 * i as f64 / 4000.0;
        let ph = phases_at(&spec, detuning, t_b);
        let p = port_probabilities(&ph);
        let (phi, d, u) = (ph.delta_phi.to_f64(), ph.delta_d.to_f64(), ph.delta_u.to_f64());
        lo = lo.min(p.difference);
        hi = hi.max(p.difference);
        consistency = consistency.max((p.difference - probability_difference(phi, d, u)).abs());
        envelope = envelope.max(((d / 2.0).sin() * (u / 2.0).sin() / 4.0).abs());
        mixture = mixture.max(mixture_probabilities(d, u).difference.abs());
    }
    let p2p = hi - lo;
    outcome(
        p2p >= ENVELOPE_FRACTION * envelope && mixture <= MIXTURE_ABS_TOL && consistency <= PROBABILITY_ABS_TOL,
        format!(
            "coherent D_g peak-to-peak {p2p:.3e} vs envelope {envelope:.3e}; mixture |D_g| <= {mixture:.1e} (tol {MIXTURE_ABS_TOL:e})"
        ),
    )
}

fn quadrature_oracles() -> Outcome {
    let mut rng = Rng(8);
    let (mut prop, mut bounce) = (0.0_f64, 0.0_f64);
    for _ in 0..100 {
        let (spec, seg) = if rng.unit() < 0.5 {
            let s = presets::reduced_demo(rng.log_uniform(1e-6, 1e-2), rng.log_uniform(1e-6, 1e-2));
            let t0 = rng.uniform(0.0, 10.0);
            let seg = Segment {
                t_start: t0,
                t_end: t0 + rng.uniform(1e-2, 3.0),
                z_start: rng.uniform(-2.0, 2.0),
                v_start: rng.uniform(-3.0, 3.0),
            };
            (s, seg)
        } else {
            let s = presets::strontium();
            let t0 = rng.uniform(0.0, 1.0);
            let seg = Segment {
                t_start: t0,
                t_end: t0 + rng.uniform(1e-4, 2e-2),
                z_start: rng.uniform(-1e-2, 1e-2),
                v_start: rng.uniform(-0.2, 0.2),
            };
            (s, seg)
        };
        let m = spec.species.mass;
        let (_, rem) = propagation_quadrature(&seg, m, &spec.constants, QUADRATURE_PANELS);
        let split = propagation_phase(&seg, m, &spec.constants).non_rest().to_f64();
        let closed = propagation_closed_form(&seg, m, &spec.constants);
        let c = &spec.constants;
        let dt = Dd::sum2(seg.t_end, -seg.t_start);
        let closed_rest = -(Dd::prod(c.c, c.c) * dt * (Dd::new(m) / c.hbar));
        let closed_non_rest = (closed - closed_rest).to_f64();
        prop = prop.max(rel(split, rem)).max(rel(closed_non_rest, rem));

        let z_b = seg.z_start;
        let (_, rem) = single_oscillation_quadrature(z_b, &spec, QUADRATURE_PANELS);
        let rest = Dd::prod(spec.species.omega0, spec.kinematics().tau_b);
        let closed = (single_oscillation_correction(z_b, &spec) + rest).to_f64();
        bounce = bounce.max(rel(closed, rem));
    }
    outcome(
        prop <= QUADRATURE_REL_TOL && bounce <= QUADRATURE_REL_TOL,
        format!("100 segments: propagation {prop:.2e}, single oscillation {bounce:.2e} (rel tol {QUADRATURE_REL_TOL:e})"),
    )
}

#[test]
fn acceptance() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check, Duration); 8] = [
        ("probability forms", probability_forms, Duration::from_secs(30)),
        ("fringe reproduction", fringe_reproduction, Duration::from_secs(10)),
        ("closed-form phase", closed_form_phase, Duration::from_secs(10)),
        ("order of magnitude", magnitude_claims, Duration::from_secs(1)),
        ("separation magnitudes", separation_magnitudes, Duration::from_secs(1)),
        ("engine cross-validation", engine_cross_validation, Duration::from_secs(60)),
        ("superposition discriminator", superposition_discriminator, Duration::from_secs(5)),
        ("quadrature oracles", quadrature_oracles, Duration::from_secs(10)),
    ];
    let mut failed = Vec::new();
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = check();
        let took = start.elapsed();
        let ok = out.passed && took <= *limit;
        println!(
            "{} {} {name}: {} [{:.2} s of {} s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            took.as_secs_f64(),
            limit.as_secs()
        );
        if !ok {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

