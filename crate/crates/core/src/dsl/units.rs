//! Unit suffixes and their conversion to SI.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dimension {
    Time,
    Length,
    Velocity,
    Acceleration,
    /// Angular frequency; `Hz` suffixes are multiplied by `2 pi`.
    Frequency,
    Temperature,
    Energy,
    Mass,
    Action,
    /// Energy per kelvin, the Boltzmann constant.
    EnergyPerTemperature,
    Wavenumber,
}

impl Dimension {
    pub fn si_unit(self) -> &'static str {
        match self {
            Dimension::Time => "s",
            Dimension::Length => "m",
            Dimension::Velocity => "m/s",
            Dimension::Acceleration => "m/s^2",
            Dimension::Frequency => "rad/s",
            Dimension::Temperature => "K",
            Dimension::Energy => "J",
            Dimension::Mass => "kg",
            Dimension::Action => "J*s",
            Dimension::EnergyPerTemperature => "J/K",
            Dimension::Wavenumber => "1/m",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Time => "time",
            Dimension::Length => "length",
            Dimension::Velocity => "velocity",
            Dimension::Acceleration => "acceleration",
            Dimension::Frequency => "frequency",
            Dimension::Temperature => "temperature",
            Dimension::Energy => "energy",
            Dimension::Mass => "mass",
            Dimension::Action => "action",
            Dimension::EnergyPerTemperature => "energy per temperature",
            Dimension::Wavenumber => "wavenumber",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unit {
    pub symbol: &'static str,
    pub dimension: Dimension,
    /// Power of ten applied in the decimal text before parsing, so that a
    /// prefixed value rounds exactly once.
    pub exponent: i32,
    /// Remaining non-decimal factor.
    pub factor: f64,
}

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
const ELECTRON_VOLT: f64 = 1.602_176_634e-19;
const DALTON: f64 = 1.660_539_066_60e-27;

const fn u(symbol: &'static str, dimension: Dimension, exponent: i32, factor: f64) -> Unit {
    Unit {
        symbol,
        dimension,
        exponent,
        factor,
    }
}

use Dimension::*;

pub const UNITS: &[Unit] = &[
    u("s", Time, 0, 1.0),
    u("ms", Time, -3, 1.0),
    u("us", Time, -6, 1.0),
    u("µs", Time, -6, 1.0),
    u("ns", Time, -9, 1.0),
    u("m", Length, 0, 1.0),
    u("mm", Length, -3, 1.0),
    u("um", Length, -6, 1.0),
    u("µm", Length, -6, 1.0),
    u("nm", Length, -9, 1.0),
    u("m/s", Velocity, 0, 1.0),
    u("mm/s", Velocity, -3, 1.0),
    u("um/s", Velocity, -6, 1.0),
    u("m/s^2", Acceleration, 0, 1.0),
    u("m/s2", Acceleration, 0, 1.0),
    u("rad/s", Frequency, 0, 1.0),
    u("Hz", Frequency, 0, TWO_PI),
    u("kHz", Frequency, 3, TWO_PI),
    u("MHz", Frequency, 6, TWO_PI),
    u("GHz", Frequency, 9, TWO_PI),
    u("THz", Frequency, 12, TWO_PI),
    u("K", Temperature, 0, 1.0),
    u("mK", Temperature, -3, 1.0),
    u("uK", Temperature, -6, 1.0),
    u("µK", Temperature, -6, 1.0),
    u("nK", Temperature, -9, 1.0),
    u("J", Energy, 0, 1.0),
    u("eV", Energy, 0, ELECTRON_VOLT),
    u("kg", Mass, 0, 1.0),
    u("u", Mass, 0, DALTON),
    u("J*s", Action, 0, 1.0),
    u("J.s", Action, 0, 1.0),
    u("J/K", EnergyPerTemperature, 0, 1.0),
    u("1/m", Wavenumber, 0, 1.0),
    u("rad/m", Wavenumber, 0, 1.0),
];

pub fn lookup(symbol: &str) -> Option<Unit> {
    UNITS.iter().copied().find(|u| u.symbol == symbol)
}

/// Splits a leading decimal number off `text`: `(mantissa, exponent, rest)`.
/// The mantissa keeps its sign and digits; the exponent is the value after
/// `e`/`E`, or 0.
pub fn split_number(text: &str) -> Option<(&str, i64, &str)> {
    let b = text.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let digits_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut n_digits = i - digits_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        n_digits += i - frac;
    }
    if n_digits == 0 {
        return None;
    }
    let mantissa_end = i;
    let mut exponent = 0i64;
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        let mut j = i + 1;
        let neg = j < b.len() && b[j] == b'-';
        if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
            j += 1;
        }
        let exp_start = j;
        while j < b.len() && b[j].is_ascii_digit() {
            j += 1;
        }
        // An `e` without digits belongs to the unit, as in `1eV`.
        if j > exp_start {
            let mut e: i64 = 0;
            for &d in &b[exp_start..j] {
                e = e.saturating_mul(10).saturating_add((d - b'0') as i64);
            }
            exponent = if neg { -e } else { e };
            i = j;
        }
    }
    Some((&text[..mantissa_end], exponent, &text[i..]))
}

/// Parses `mantissa * 10^(exponent + unit.exponent) * unit.factor`.
pub fn to_si(mantissa: &str, exponent: i64, unit: Option<&Unit>) -> Option<f64> {
    let (shift, factor) = unit.map_or((0, 1.0), |u| (u.exponent as i64, u.factor));
    let e = exponent.saturating_add(shift).clamp(-100_000, 100_000);
    let v: f64 = format!("{mantissa}e{e}").parse().ok()?;
    let v = v * factor;
    v.is_finite().then_some(v)
}
