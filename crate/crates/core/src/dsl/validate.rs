//! From statements to a checked [`ExperimentSpec`].

use super::units::Dimension;
use crate::io::fmt_float;
use super::{Diagnostic, Keyword, SequenceSource, Severity, Statement};
use crate::model::{
    AtomSpecies, ExperimentSpec, LatticeConfig, PhysicalConstants, TimingConfig, UnitMode, APEX_RTOL,
    DM_OVER_M_WARN,
};

#[derive(Clone, Debug, PartialEq)]
pub struct Validated {
    pub spec: ExperimentSpec,
    pub warnings: Vec<Diagnostic>,
    /// `T_prime` was filled in from the apex condition.
    pub t_prime_derived: bool,
}

const TIMELINE: [Keyword; 6] = [
    Keyword::Launch,
    Keyword::BraggPair,
    Keyword::ClockPulse,
    Keyword::LatticeHold,
    Keyword::ClockPulse,
    Keyword::BraggPair,
];

fn allowed(kw: Keyword) -> &'static [(&'static str, Dimension)] {
    use Dimension::*;
    match kw {
        Keyword::Mode => &[],
        Keyword::Constants => &[
            ("c", Velocity),
            ("g", Acceleration),
            ("hbar", Action),
            ("k_B", EnergyPerTemperature),
        ],
        Keyword::Atom => &[("mass", Mass), ("omega0", Frequency), ("temperature", Temperature)],
        Keyword::Lattice => &[
            ("wavelength", Length),
            ("k", Wavenumber),
            ("depth", Energy),
            ("step", Time),
        ],
        Keyword::Launch => &[("v0", Velocity)],
        Keyword::BraggPair => &[("T", Time), ("delta_v", Velocity)],
        Keyword::ClockPulse => &[("omega", Frequency)],
        Keyword::LatticeHold => &[("T_B", Time), ("T_prime", Time)],
    }
}

struct Checker<'a> {
    errors: Vec<Diagnostic>,
    warnings: Vec<Diagnostic>,
    stmts: &'a [Statement],
    last_line: usize,
}

impl<'a> Checker<'a> {
    fn err(&mut self, line: usize, col: usize, msg: impl Into<String>) {
        self.errors.push(Diagnostic::error(line, col, msg));
    }

    fn all(&self, kw: Keyword) -> Vec<&'a Statement> {
        self.stmts.iter().filter(|s| s.keyword == kw).collect()
    }

    fn single(&mut self, kw: Keyword, required: bool) -> Option<&'a Statement> {
        let found = self.all(kw);
        for dup in found.iter().skip(1) {
            self.err(dup.line, dup.column, format!("duplicate statement '{kw}'"));
        }
        if found.is_empty() && required {
            self.err(self.last_line, 1, format!("missing statement '{kw}'"));
        }
        found.first().copied()
    }

    fn required(&mut self, s: &Statement, key: &str) -> Option<f64> {
        match s.arg(key) {
            Some(a) => Some(a.value),
            None => {
                self.err(s.line, s.column, format!("missing argument '{key}' for {}", s.keyword));
                None
            }
        }
    }

    fn positive(&mut self, s: &Statement, key: &str, value: f64) {
        if !(value > 0.0) {
            let col = s.arg(key).map_or(s.column, |a| a.value_column);
            self.err(s.line, col, format!("{key} must be positive, got {value:e}"));
        }
    }

    /// Arguments of a repeated statement must be absent or agree with the
    /// first occurrence.
    fn repeat_matches(&mut self, first: &Statement, second: &Statement, key: &str) {
        if let (Some(a), Some(b)) = (first.arg(key), second.arg(key)) {
            if (a.value - b.value).abs() > 1e-12 * a.value.abs().max(b.value.abs()) {
                self.err(
                    second.line,
                    b.value_column,
                    format!(
                        "second {} {key} = {:e} differs from the first ({:e})",
                        second.keyword, b.value, a.value
                    ),
                );
            }
        }
    }
}

fn check_arguments(ch: &mut Checker, mode: UnitMode) {
    for s in ch.stmts {
        let table = allowed(s.keyword);
        for a in &s.args {
            let Some(&(_, dim)) = table.iter().find(|(k, _)| *k == a.key) else {
                ch.err(s.line, a.key_column, format!("unknown argument '{}' for {}", a.key, s.keyword));
                continue;
            };
            match (mode, a.unit) {
                (UnitMode::Reduced, Some(u)) => ch.err(
                    s.line,
                    a.value_column,
                    format!("unit '{}' given in reduced mode, where numbers are dimensionless", u.symbol),
                ),
                (UnitMode::Si, None) => ch.err(
                    s.line,
                    a.value_column,
                    format!("missing unit for '{}' (expected {dim}, e.g. {})", a.key, dim.si_unit()),
                ),
                (UnitMode::Si, Some(u)) if u.dimension != dim => ch.err(
                    s.line,
                    a.value_column,
                    format!("unit '{}' is {} but '{}' needs {dim}", u.symbol, u.dimension, a.key),
                ),
                _ => {}
            }
        }
    }
}

fn check_mode(ch: &mut Checker) -> UnitMode {
    let modes = ch.all(Keyword::Mode);
    let Some(first) = modes.first().copied() else {
        return UnitMode::Si;
    };
    for dup in modes.iter().skip(1) {
        ch.err(dup.line, dup.column, "duplicate statement 'mode'");
    }
    if !std::ptr::eq(first, &ch.stmts[0]) {
        ch.err(first.line, first.column, "mode must be the first statement");
    }
    match first.words.as_slice() {
        [(w, _)] if w.eq_ignore_ascii_case("si") => UnitMode::Si,
        [(w, _)] if w.eq_ignore_ascii_case("reduced") => UnitMode::Reduced,
        _ => {
            let col = first.words.first().map_or(first.column, |w| w.1);
            ch.err(first.line, col, "mode expects a single word: 'si' or 'reduced'");
            UnitMode::Si
        }
    }
}

fn check_timeline(ch: &mut Checker) {
    let tl: Vec<&Statement> = ch.stmts.iter().filter(|s| s.keyword.is_timeline()).collect();
    let anchor = ch
        .stmts
        .iter()
        .find(|s| s.keyword == Keyword::LatticeHold)
        .map_or((ch.last_line, 1), |s| (s.line, s.column));
    let count = |kw| tl.iter().filter(|s| s.keyword == kw).count();
    let clocks = count(Keyword::ClockPulse);
    let braggs = count(Keyword::BraggPair);
    if clocks < 2 {
        ch.err(anchor.0, anchor.1, format!("clock pulses required: found {clocks}"));
    } else if clocks > 2 {
        ch.err(anchor.0, anchor.1, format!("exactly 2 clock pulses expected: found {clocks}"));
    }
    if braggs != 2 {
        ch.err(anchor.0, anchor.1, format!("2 bragg pairs required: found {braggs}"));
    }
    if clocks != 2 || braggs != 2 || !ch.errors.is_empty() {
        return;
    }
    let order: Vec<Keyword> = tl.iter().map(|s| s.keyword).collect();
    if order == TIMELINE {
        return;
    }
    let hold = order.iter().position(|&k| k == Keyword::LatticeHold);
    let brackets = hold.is_some_and(|h| {
        h > 0 && order.get(h - 1) == Some(&Keyword::ClockPulse) && order.get(h + 1) == Some(&Keyword::ClockPulse)
    });
    let culprit = tl
        .iter()
        .zip(TIMELINE)
        .find(|(s, k)| s.keyword != *k)
        .map_or(anchor, |(s, _)| (s.line, s.column));
    let names: Vec<&str> = order.iter().map(|k| k.as_str()).collect();
    let msg = if brackets {
        format!(
            "timeline out of order: expected launch, bragg_pair, clock_pulse, lattice_hold, clock_pulse, bragg_pair; found {}",
            names.join(", ")
        )
    } else {
        "clock pulses must bracket the lattice hold: one immediately before and one immediately after".to_string()
    };
    ch.err(culprit.0, culprit.1, msg);
}

/// Checks the statements and builds the experiment.
pub fn validate_sequence(stmts: &[Statement], src: &SequenceSource) -> Result<Validated, Vec<Diagnostic>> {
    let last_line = src.text.lines().count().max(1);
    if stmts.is_empty() {
        return Err(vec![Diagnostic::error(1, 1, "no statements")]);
    }
    let mut ch = Checker {
        errors: Vec::new(),
        warnings: Vec::new(),
        stmts,
        last_line,
    };
    let mode = check_mode(&mut ch);
    check_arguments(&mut ch, mode);
    let constants = ch.single(Keyword::Constants, mode == UnitMode::Reduced);
    let atom = ch.single(Keyword::Atom, true);
    let lattice = ch.single(Keyword::Lattice, true);
    let launch = ch.single(Keyword::Launch, true);
    let hold = ch.single(Keyword::LatticeHold, true);
    check_timeline(&mut ch);
    if !ch.errors.is_empty() {
        return Err(ch.errors);
    }
    let (Some(atom), Some(lattice), Some(launch), Some(hold)) = (atom, lattice, launch, hold) else {
        return Err(ch.errors);
    };
    let braggs = ch.all(Keyword::BraggPair);
    let clocks = ch.all(Keyword::ClockPulse);

    let mut pc = match mode {
        UnitMode::Si => PhysicalConstants::SI,
        UnitMode::Reduced => PhysicalConstants::reduced(f64::NAN),
    };
    if let Some(cs) = constants {
        if mode == UnitMode::Reduced {
            if let Some(c) = ch.required(cs, "c") {
                pc.c = c;
            }
        }
        for (key, slot) in [("c", &mut pc.c), ("g", &mut pc.g), ("hbar", &mut pc.hbar), ("k_B", &mut pc.k_b)] {
            if let Some(a) = cs.arg(key) {
                *slot = a.value;
            }
        }
        for key in ["c", "g", "hbar", "k_B"] {
            if let Some(a) = cs.arg(key) {
                ch.positive(cs, key, a.value);
            }
        }
    }

    let mass = ch.required(atom, "mass");
    let omega0 = ch.required(atom, "omega0");
    let temperature = atom.arg("temperature").map(|a| a.value);
    if let Some(m) = mass {
        ch.positive(atom, "mass", m);
    }
    if let Some(t) = temperature {
        ch.positive(atom, "temperature", t);
    }

    let k = match (lattice.arg("wavelength"), lattice.arg("k")) {
        (Some(_), Some(b)) => {
            ch.err(lattice.line, b.key_column, "lattice takes either wavelength or k, not both");
            None
        }
        (Some(w), None) => {
            ch.positive(lattice, "wavelength", w.value);
            Some(2.0 * std::f64::consts::PI / w.value)
        }
        (None, Some(k)) => {
            ch.positive(lattice, "k", k.value);
            Some(k.value)
        }
        (None, None) => {
            ch.err(lattice.line, lattice.column, "lattice needs wavelength or k");
            None
        }
    };
    let depth = lattice.arg("depth").map(|a| a.value);
    let step = lattice.arg("step").map(|a| a.value);
    if let Some(d) = depth {
        ch.positive(lattice, "depth", d);
    }
    if let Some(s) = step {
        ch.positive(lattice, "step", s);
    }

    let v0 = ch.required(launch, "v0");
    let (b1, b2) = (braggs[0], braggs[1]);
    let t = ch.required(b1, "T");
    let delta_v = ch.required(b1, "delta_v");
    ch.repeat_matches(b1, b2, "T");
    ch.repeat_matches(b1, b2, "delta_v");
    if let Some(t) = t {
        ch.positive(b1, "T", t);
    }
    if let Some(dv) = delta_v {
        if dv < 0.0 {
            let col = b1.arg("delta_v").map_or(b1.column, |a| a.value_column);
            ch.err(b1.line, col, format!("delta_v must be non-negative, got {dv:e}"));
        }
    }
    let omega = ch.required(clocks[0], "omega");
    ch.repeat_matches(clocks[0], clocks[1], "omega");
    let t_b = ch.required(hold, "T_B");
    if let Some(tb) = t_b {
        ch.positive(hold, "T_B", tb);
    }
    if !ch.errors.is_empty() {
        return Err(ch.errors);
    }
    let (mass, omega0, k, v0, t, delta_v, omega, t_b) = match (mass, omega0, k, v0, t, delta_v, omega, t_b) {
        (Some(a), Some(b), Some(c), Some(d), Some(e), Some(f), Some(g), Some(h)) => (a, b, c, d, e, f, g, h),
        _ => return Err(ch.errors),
    };

    let derived = (v0 + delta_v) / pc.g - t;
    let (t_prime, t_prime_derived) = match hold.arg("T_prime") {
        None => (derived, true),
        Some(a) => {
            let lhs = v0 + delta_v;
            let rhs = pc.g * (t + a.value);
            if (lhs - rhs).abs() > APEX_RTOL * lhs.abs().max(rhs.abs()) {
                ch.err(
                    hold.line,
                    a.value_column,
                    format!(
                        "apex condition violated: T_prime = {:e} but (v0 + delta_v)/g - T = {derived:e}",
                        a.value
                    ),
                );
            }
            (a.value, false)
        }
    };
    if !(t_prime > 0.0) {
        let col = hold.arg("T_prime").map_or(hold.column, |a| a.value_column);
        ch.err(hold.line, col, format!("T_prime must be positive, got {t_prime:e}"));
    }
    if !ch.errors.is_empty() {
        return Err(ch.errors);
    }

    let spec = ExperimentSpec {
        mode,
        constants: pc,
        species: AtomSpecies {
            mass,
            omega0,
            temperature,
        },
        lattice: LatticeConfig { k, depth, step },
        timing: TimingConfig {
            t,
            t_prime,
            t_b,
            v0,
            delta_v,
            omega,
        },
    };
    if let Err(e) = spec.validate() {
        ch.err(atom.line, atom.column, e.to_string());
        return Err(ch.errors);
    }
    let dm = spec.dm_over_m();
    if dm > DM_OVER_M_WARN {
        ch.warnings.push(Diagnostic::warning(
            atom.line,
            atom.column,
            format!("dm/m = {} exceeds {DM_OVER_M_WARN:e}; perturbative results are outside their regime", fmt_float(dm)),
        ));
    }
    debug_assert!(ch.warnings.iter().all(|w| w.severity == Severity::Warning));
    Ok(Validated {
        spec,
        warnings: ch.warnings,
        t_prime_derived,
    })
}
