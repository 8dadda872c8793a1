use proptest::prelude::*;

use clocksim::cli::{sweep, SweepAxis};
use clocksim::dsl::{parse_spec, to_dsl, SequenceSource};
use clocksim::engine::Engine;
use clocksim::io::fmt_float;
use clocksim::lattice::{arm_hold_trajectory, equilibrium_phase, integrate_lattice_motion, time_averages, LatticeOptions};
use clocksim::model::{bloch_partition, presets, AtomSpecies, ExperimentSpec, LatticeConfig, PhysicalConstants, TimingConfig, UnitMode};
use clocksim::numeric::Dd;
use clocksim::observables::{
    mean_frequency_shift, phases_at, port_probabilities, port_probability, port_probability_amplitude,
    probability_difference, total_ground_probability, total_ground_probability_visibility, visibility,
};
use clocksim::phase::clock::clock_phase_corrections_with;
use clocksim::phase::interferometer::interferometer_phase;
use clocksim::phase::ledger::PhaseTag;
use clocksim::trajectory::{build_arm_trajectories, excited_fall_trajectory, trajectory_pair, Arm, ArmTrajectory, EventKind};

fn reduced_spec() -> impl Strategy<Value = ExperimentSpec> {
    (
        10.0..1e4f64,
        0.5..2.0f64,
        0.0..100.0f64,
        0.2..1.0f64,
        (0.1..2.0f64, 0.1..2.0f64, 0.3..50.0f64),
        1e-3..0.5f64,
        0.0..1.0f64,
    )
        .prop_map(|(c, mass, omega0, k, (t, t_prime, t_b), delta_v, detune)| {
            ExperimentSpec {
                mode: UnitMode::Reduced,
                constants: PhysicalConstants::reduced(c),
                species: AtomSpecies { mass, omega0, temperature: None },
                lattice: LatticeConfig { k, depth: None, step: None },
                timing: TimingConfig { t, t_prime, t_b, v0: 0.0, delta_v: 0.0, omega: omega0 + detune },
            }
            .with_delta_v(delta_v)
        })
}

fn si_spec() -> impl Strategy<Value = ExperimentSpec> {
    (1e-3..20e-3f64, 1e-3..10e-3f64, 1e-3..2.0f64, 1e-4..1e-2f64, -10.0..10.0f64).prop_map(
        |(t, t_prime, t_b, delta_v, detune)| {
            let mut s = presets::strontium();
            s.timing.t = t;
            s.timing.t_prime = t_prime;
            s.timing.t_b = t_b;
            s.timing.omega += detune;
            s.with_delta_v(delta_v)
        },
    )
}

fn any_spec() -> impl Strategy<Value = ExperimentSpec> {
    prop_oneof![reduced_spec(), si_spec()]
}

/// Reduced demos with a chosen defect `dm/m`.
fn defect_spec() -> impl Strategy<Value = ExperimentSpec> {
    (-9.0..-3.0f64, 1.0..30.0f64, 1e-3..0.1f64).prop_map(|(log_r, t_b, eps_g)| {
        let mut s = presets::reduced_demo(0.01, eps_g).with_hold(t_b);
        let c2 = s.constants.c * s.constants.c;
        s.species.omega0 = 10f64.powf(log_r) * c2;
        s.timing.omega = s.species.omega0;
        s
    })
}

fn check_continuity(traj: &ArmTrajectory, g: f64, scale: f64, v_scale: f64) -> Result<(), TestCaseError> {
    for w in traj.segments.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        prop_assert!(a.t_end >= a.t_start);
        prop_assert_eq!(a.t_end, b.t_start);
        prop_assert!((a.z_end(g) - b.z_start).abs() <= 1e-12 * scale, "height jump at t = {}", a.t_end);
        let (v_end, v_next) = (a.v_end(g), b.v_start);
        if (v_end - v_next).abs() > 1e-12 * v_scale {
            let kick = traj.events.iter().find(|e| e.time == a.t_end && e.velocity_after != e.velocity_before);
            prop_assert!(kick.is_some(), "velocity jump {} -> {} without an event at t = {}", v_end, v_next, a.t_end);
            let e = kick.unwrap();
            prop_assert!((e.velocity_after - e.velocity_before - (v_next - v_end)).abs() <= 1e-12 * v_scale);
        }
    }
    Ok(())
}

proptest! {
    #[test]
    fn partition_reassembles_hold(t_b in 1e-6..1e4f64, tau_b in 1e-6..10.0f64) {
        let p = bloch_partition(t_b, tau_b);
        prop_assert!(p.tau >= -0.5 * tau_b && p.tau < 0.5 * tau_b);
        let back = p.n as f64 * tau_b + p.tau;
        prop_assert!((back - t_b).abs() <= 4.0 * f64::EPSILON * t_b.max(tau_b));
    }

    #[test]
    fn kinematics_scale_with_k(spec in any_spec(), factor in 0.5..4.0f64) {
        let a = spec.kinematics();
        let mut s = spec;
        s.lattice.k *= factor;
        let b = s.kinematics();
        prop_assert!((b.v_b / a.v_b - factor).abs() <= 1e-14 * factor);
        prop_assert!((b.tau_b / a.tau_b - factor).abs() <= 1e-14 * factor);
    }

    #[test]
    fn eps_g_linear_eps_k_independent_of_separation(spec in any_spec()) {
        let e = spec.epsilons();
        let mut s = spec;
        s.timing.delta_v *= 2.0;
        let e2 = s.epsilons();
        prop_assert_eq!(e2.eps_g, 2.0 * e.eps_g);
        prop_assert_eq!(e2.eps_k, e.eps_k);
    }

    #[test]
    fn dsl_round_trip(spec in any_spec()) {
        let text = to_dsl(&spec);
        let back = parse_spec(&SequenceSource::inline(text.clone()));
        prop_assert!(back.is_ok(), "{}", text);
        prop_assert_eq!(back.unwrap().spec, spec);
    }

    #[test]
    fn parsing_is_total(text in "[a-z_ =0-9.eE+\\-/*^#\n]{0,160}") {
        let lines: Vec<&str> = text.split('\n').collect();
        let widest = lines.iter().map(|l| l.chars().count()).max().unwrap_or(0);
        if let Err(diags) = parse_spec(&SequenceSource::inline(text.clone())) {
            prop_assert!(!diags.is_empty());
            for d in diags {
                prop_assert!(d.line >= 1 && d.line <= lines.len() + 1, "{:?}", d);
                prop_assert!(d.column >= 1 && d.column <= widest + 2, "{:?}", d);
            }
        }
    }

    #[test]
    fn float_text_round_trips(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn probabilities_bounded(phi in -1e3..1e3f64, d in -1e3..1e3f64, u in -1e3..1e3f64) {
        let p0 = port_probability(phi, d, u, 0);
        let p1 = port_probability(phi, d, u, 1);
        prop_assert!(p0 >= -1e-16 && p1 >= -1e-16);
        let total = p0 + p1;
        prop_assert!((-1e-16..=0.25 + 1e-16).contains(&total));
        prop_assert!((p0 - p1).abs() <= 0.25 + 1e-16);
        prop_assert!((p0 - p1 - probability_difference(phi, d, u)).abs() <= 1e-12);
        prop_assert!((total - total_ground_probability(d, u)).abs() <= 1e-12);
        prop_assert!((p0 - port_probability_amplitude(phi, d, u, 0)).abs() <= 1e-12);
    }

    #[test]
    fn visibility_bounded(eps_g in -1.0..1.0f64, omega0 in 0.0..1e3f64, t_b in 0.0..1e3f64) {
        let v = visibility(eps_g, omega0, t_b);
        prop_assert!((-1.0..=1.0).contains(&v));
    }

    #[test]
    fn envelope_form_equals_two_phase_form(spec in reduced_spec()) {
        let w0 = spec.species.omega0;
        let detuning = Dd::sum2(spec.timing.omega, -w0);
        let ph = phases_at(&spec, detuning, spec.timing.t_b);
        let e = spec.epsilons();
        let mean = mean_frequency_shift(e.eps_k, e.eps_g, w0).mean_omega0;
        let direct = total_ground_probability(ph.delta_d.to_f64(), ph.delta_u.to_f64());
        let envelope = total_ground_probability_visibility(spec.timing.omega - mean, e.eps_g, w0, spec.timing.t_b);
        prop_assert!((direct - envelope).abs() <= 1e-12);
        let p = port_probabilities(&ph);
        prop_assert!((p.total - direct).abs() <= 1e-12);
    }

    #[test]
    fn no_relativity_no_correction(spec in any_spec()) {
        let p = clock_phase_corrections_with(&spec, false);
        let bare = Dd::sum2(spec.timing.omega, -spec.species.omega0) * spec.timing.t_b;
        prop_assert_eq!(p.delta_d, bare);
        prop_assert_eq!(p.delta_u, bare);
    }

    #[test]
    fn rest_energy_cancels_between_arms(spec in any_spec()) {
        let ph = interferometer_phase(&spec).unwrap();
        prop_assert_eq!(ph.difference.get(PhaseTag::RestMass), Dd::ZERO);
        prop_assert!(ph.difference.cancelled_rest_spans > 0);
        let c = &spec.constants;
        let rest_scale = spec.species.mass * c.c * c.c / c.hbar * spec.timing.t_b;
        for (tag, v) in &ph.difference.by_tag {
            prop_assert!(v.to_f64().abs() <= 1e-3 * rest_scale, "{:?} = {}", tag, v.to_f64());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trajectories_continuous_and_closed(spec in any_spec()) {
        let g = spec.constants.g;
        let (upper, lower) = build_arm_trajectories(&spec).unwrap();
        let k = spec.kinematics();
        let scale = (k.v_b * k.tau_b).max(spec.timing.delta_v * spec.timing.t).max(g * spec.timing.t * spec.timing.t);
        let v_scale = k.v_b + spec.timing.v0.abs() + spec.timing.delta_v + g * (spec.timing.t + spec.timing.t_prime);
        check_continuity(&upper, g, scale, v_scale)?;
        check_continuity(&lower, g, scale, v_scale)?;
        let z_up = upper.segments.last().unwrap().z_end(g);
        let z_lo = lower.segments.last().unwrap().z_end(g);
        prop_assert!((z_up - z_lo).abs() <= 1e-10 * z_up.abs().max(scale));
    }

    #[test]
    fn ground_bounces_are_periodic(spec in any_spec()) {
        let g = spec.constants.g;
        let tau_b = spec.kinematics().tau_b;
        let (upper, _) = build_arm_trajectories(&spec).unwrap();
        let kicks: Vec<_> = upper.events_of(EventKind::BlochKick).collect();
        prop_assert_eq!(kicks.len() as u64, spec.partition().n);
        for w in kicks.windows(2) {
            prop_assert!((w[1].time - w[0].time - tau_b).abs() <= 1e-9 * tau_b, "spacing {}", w[1].time - w[0].time);
            prop_assert!((w[1].height - w[0].height).abs() <= 1e-9 * (g * tau_b * tau_b).max(w[0].height.abs()));
        }
    }

    #[test]
    fn excited_bounces_come_early(spec in defect_spec()) {
        let (upper, _) = build_arm_trajectories(&spec).unwrap();
        let excited = excited_fall_trajectory(&upper, &spec);
        let pair = trajectory_pair(&spec, Arm::Upper).unwrap();
        let tau_b = spec.kinematics().tau_b;
        let expected = tau_b - pair.delta_tau_b;
        let kicks: Vec<_> = excited.events_of(EventKind::BlochKick).collect();
        for w in kicks.windows(2) {
            prop_assert!((w[1].time - w[0].time - expected).abs() <= 1e-9 * tau_b);
        }
    }

    #[test]
    fn separation_grows_to_bound(spec in defect_spec()) {
        // The first excited kick coincides with the ground one, so the last
        // of N kicks sits 2(N-1) dz_B below the bouncing ground state.
        let pair = trajectory_pair(&spec, Arm::Lower).unwrap();
        let n = spec.partition().n as f64;
        let tol = 1e-9 + 10.0 * n * spec.dm_over_m();
        prop_assert!(pair.measured_max_separation >= 0.0);
        prop_assert!(pair.measured_max_separation <= pair.max_separation * (1.0 + tol) + 1e-15);
        if n >= 1.0 {
            let kicked = pair.max_separation * (n - 1.0) / n;
            prop_assert!(pair.measured_max_separation >= kicked * (1.0 - tol), "{} vs {}", pair.measured_max_separation, kicked);
        }
    }

    #[test]
    fn sweep_rows_sorted(from in -1.0..0.0f64, span in 0.1..2.0f64, points in 2usize..20) {
        let spec = presets::reduced_demo(0.01, 0.01);
        let rows = sweep(&spec, Engine::Perturbative, SweepAxis::Detuning, (from, from + span), points).unwrap();
        prop_assert_eq!(rows.len(), points);
        prop_assert!(rows.windows(2).all(|w| w[0].0 < w[1].0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn lattice_conserves_energy(eps_g in 1e-3..0.05f64, t_b in 2.0..20.0f64) {
        let spec = presets::reduced_demo(0.01, eps_g).with_hold(t_b);
        for arm in [Arm::Lower, Arm::Upper] {
            let traj = arm_hold_trajectory(&spec, arm).unwrap();
            prop_assert!(traj.energy_drift <= 1e-8, "drift {}", traj.energy_drift);
            prop_assert!(traj.t.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn lattice_offset_covariance(shift in -3.0..3.0f64) {
        let spec = presets::reduced_demo(0.01, 0.01);
        let v0 = spec.kinematics().v_b;
        let base = LatticeOptions::for_spec(&spec);
        let (m, g, k) = (spec.species.mass, spec.constants.g, spec.lattice.k);
        let phi = equilibrium_phase(m, g, k, base.depth).unwrap();
        // The well phase is measured from the start height, so the same phase
        // moves the whole lattice along with the atom.
        let opts = LatticeOptions { phase: Some(phi), ..base };
        let a = integrate_lattice_motion(0.0, v0, 5.0, &spec, &opts).unwrap();
        let b = integrate_lattice_motion(shift, v0, 5.0, &spec, &opts).unwrap();
        let (za, zb) = (time_averages(&a).mean_z, time_averages(&b).mean_z);
        prop_assert!((zb - za - shift).abs() <= 1e-9 * (1.0 + shift.abs()), "{} vs {}", zb - za, shift);
    }
}
