//! A line-oriented description of one experiment.
//!
//! ```text
//! # strontium, 10 um arm separation
//! atom         mass=87.9056125 u  omega0=429.228004229873 THz  temperature=400 nK
//! lattice      wavelength=532 nm
//! launch       v0=0.14615 m/s
//! bragg_pair   T=10 ms  delta_v=1 mm/s
//! clock_pulse  omega=429.228004229873 THz
//! lattice_hold T_B=1 s
//! clock_pulse
//! bragg_pair
//! ```
//!
//! Every line is `keyword key=value [unit] ...`; `#` starts a comment.
//! The timeline statements must appear in the order of the pulse sequence.
//! `mode reduced` as the first line switches to dimensionless numbers with
//! a user-chosen `c`.

mod parse;
mod serialize;
pub mod units;
mod validate;

use std::fmt;

use serde::Serialize;

pub use parse::parse_sequence;
pub use serialize::to_dsl;
pub use validate::{validate_sequence, Validated};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceSource {
    pub text: String,
    pub origin: String,
}

impl SequenceSource {
    pub fn inline(text: impl Into<String>) -> Self {
        SequenceSource {
            text: text.into(),
            origin: "<inline>".into(),
        }
    }

    pub fn file(text: impl Into<String>, path: impl Into<String>) -> Self {
        SequenceSource {
            text: text.into(),
            origin: path.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Keyword {
    Mode,
    Constants,
    Atom,
    Lattice,
    Launch,
    BraggPair,
    ClockPulse,
    LatticeHold,
}

impl Keyword {
    pub const ALL: [Keyword; 8] = [
        Keyword::Mode,
        Keyword::Constants,
        Keyword::Atom,
        Keyword::Lattice,
        Keyword::Launch,
        Keyword::BraggPair,
        Keyword::ClockPulse,
        Keyword::LatticeHold,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Mode => "mode",
            Keyword::Constants => "constants",
            Keyword::Atom => "atom",
            Keyword::Lattice => "lattice",
            Keyword::Launch => "launch",
            Keyword::BraggPair => "bragg_pair",
            Keyword::ClockPulse => "clock_pulse",
            Keyword::LatticeHold => "lattice_hold",
        }
    }

    pub fn parse(s: &str) -> Option<Keyword> {
        Keyword::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Part of the pulse timeline, as opposed to configuration.
    pub fn is_timeline(self) -> bool {
        matches!(
            self,
            Keyword::Launch | Keyword::BraggPair | Keyword::ClockPulse | Keyword::LatticeHold
        )
    }
}

impl fmt::Display for Keyword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Argument {
    pub key: String,
    pub key_column: usize,
    /// Value converted to SI, or the bare number without a unit.
    pub value: f64,
    pub value_column: usize,
    pub unit: Option<units::Unit>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Statement {
    pub keyword: Keyword,
    pub args: Vec<Argument>,
    /// Bare words, only meaningful for `mode`.
    pub words: Vec<(String, usize)>,
    pub line: usize,
    pub column: usize,
}

impl Statement {
    pub fn arg(&self, key: &str) -> Option<&Argument> {
        self.args.iter().find(|a| a.key == key)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub line: usize,
    pub column: usize,
}

impl Diagnostic {
    pub fn error(line: usize, column: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            message: message.into(),
            line,
            column,
        }
    }

    pub fn warning(line: usize, column: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            message: message.into(),
            line,
            column,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {sev}: {}", self.line, self.column, self.message)
    }
}

/// Parse and validate in one go.
pub fn parse_spec(src: &SequenceSource) -> Result<Validated, Vec<Diagnostic>> {
    let stmts = parse_sequence(src)?;
    validate_sequence(&stmts, src)
}

/// Renders diagnostics as `origin:line:col: severity: message` lines.
pub fn render_diagnostics(src: &SequenceSource, diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("{}:{d}\n", src.origin))
        .collect()
}
