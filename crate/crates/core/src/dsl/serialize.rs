//! Canonical text form of an experiment.

use std::fmt::Write;

use crate::model::{ExperimentSpec, UnitMode};

/// Writes `spec` so that parsing the result gives back the same values.
/// Numbers use the shortest round-tripping form in base units.
pub fn to_dsl(spec: &ExperimentSpec) -> String {
    let si = spec.mode == UnitMode::Si;
    // `u` pairs each value with its SI unit, or nothing in reduced mode.
    let u = |unit: &str| if si { format!(" {unit}") } else { String::new() };
    let c = &spec.constants;
    let sp = &spec.species;
    let l = &spec.lattice;
    let t = &spec.timing;
    let mut out = String::new();
    let _ = writeln!(out, "mode {}", if si { "si" } else { "reduced" });
    let _ = writeln!(
        out,
        "constants c={:e}{} g={:e}{} hbar={:e}{} k_B={:e}{}",
        c.c,
        u("m/s"),
        c.g,
        u("m/s^2"),
        c.hbar,
        u("J*s"),
        c.k_b,
        u("J/K")
    );
    let _ = write!(out, "atom mass={:e}{} omega0={:e}{}", sp.mass, u("kg"), sp.omega0, u("rad/s"));
    if let Some(temp) = sp.temperature {
        let _ = write!(out, " temperature={temp:e}{}", u("K"));
    }
    out.push('\n');
    let _ = write!(out, "lattice k={:e}{}", l.k, u("1/m"));
    if let Some(d) = l.depth {
        let _ = write!(out, " depth={d:e}{}", u("J"));
    }
    if let Some(h) = l.step {
        let _ = write!(out, " step={h:e}{}", u("s"));
    }
    out.push('\n');
    let _ = writeln!(out, "launch v0={:e}{}", t.v0, u("m/s"));
    let _ = writeln!(out, "bragg_pair T={:e}{} delta_v={:e}{}", t.t, u("s"), t.delta_v, u("m/s"));
    let _ = writeln!(out, "clock_pulse omega={:e}{}", t.omega, u("rad/s"));
    let _ = writeln!(out, "lattice_hold T_B={:e}{} T_prime={:e}{}", t.t_b, u("s"), t.t_prime, u("s"));
    out.push_str("clock_pulse\nbragg_pair\n");
    out
}

#[cfg(test)]
mod tests {
    use super::super::{parse_spec, SequenceSource};
    use super::*;
    use crate::model::presets;

    #[test]
    fn presets_round_trip() {
        let mut deep = presets::reduced_demo(0.01, 0.02);
        deep.lattice.depth = Some(40.0);
        deep.lattice.step = Some(1e-3);
        for spec in [presets::strontium(), presets::reduced_demo(1e-3, 1e-3), deep] {
            let text = to_dsl(&spec);
            let back = parse_spec(&SequenceSource::inline(text.clone())).unwrap();
            assert_eq!(back.spec, spec, "{text}");
            assert!(!back.t_prime_derived);
        }
    }
}
