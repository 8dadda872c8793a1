//! Tagged phase bookkeeping per arm and internal state.
//!
//! Rest-mass terms are never evaluated on their own. They are kept as a rate
//! `-m c^2/hbar` over a time span, and only differences between ledgers are
//! formed: spans with the same rate are merged and cancelled symbolically
//! before anything is multiplied by the rate.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::numeric::Dd;
use crate::trajectory::{Arm, InternalState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseTag {
    RestMass,
    NewtonianPotential,
    Kinetic,
    LaserBragg,
    LaserBloch,
    LaserClock,
    MassEnergyCorrection,
    Separation,
}

impl PhaseTag {
    pub const ALL: [PhaseTag; 8] = [
        PhaseTag::RestMass,
        PhaseTag::NewtonianPotential,
        PhaseTag::Kinetic,
        PhaseTag::LaserBragg,
        PhaseTag::LaserBloch,
        PhaseTag::LaserClock,
        PhaseTag::MassEnergyCorrection,
        PhaseTag::Separation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PhaseTag::RestMass => "rest_mass",
            PhaseTag::NewtonianPotential => "newtonian_potential",
            PhaseTag::Kinetic => "kinetic",
            PhaseTag::LaserBragg => "laser_bragg",
            PhaseTag::LaserBloch => "laser_bloch",
            PhaseTag::LaserClock => "laser_clock",
            PhaseTag::MassEnergyCorrection => "mass_energy_correction",
            PhaseTag::Separation => "separation",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TermValue {
    Phase(Dd),
    /// Contributes `rate * (t_end - t_start)`; only ever differenced.
    RestEnergy { rate: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum TermSource {
    Segment(usize),
    Event(usize),
    Endpoint,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseTerm {
    pub tag: PhaseTag,
    pub value: TermValue,
    pub source: TermSource,
    pub t_start: f64,
    pub t_end: f64,
}

impl PhaseTerm {
    pub fn phase(tag: PhaseTag, value: Dd, source: TermSource, t_start: f64, t_end: f64) -> Self {
        PhaseTerm {
            tag,
            value: TermValue::Phase(value),
            source,
            t_start,
            t_end,
        }
    }

    pub fn rest(rate: f64, source: TermSource, t_start: f64, t_end: f64) -> Self {
        PhaseTerm {
            tag: PhaseTag::RestMass,
            value: TermValue::RestEnergy { rate },
            source,
            t_start,
            t_end,
        }
    }

    pub fn finite_value(&self) -> Option<Dd> {
        match self.value {
            TermValue::Phase(v) => Some(v),
            TermValue::RestEnergy { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseLedger {
    pub arm: Arm,
    pub state: InternalState,
    pub terms: Vec<PhaseTerm>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Span {
    rate: f64,
    t_start: f64,
    t_end: f64,
}

impl PhaseLedger {
    pub fn new(arm: Arm, state: InternalState) -> Self {
        PhaseLedger {
            arm,
            state,
            terms: Vec::new(),
        }
    }

    pub fn push(&mut self, term: PhaseTerm) {
        self.terms.push(term);
    }

    /// Sum of the evaluable terms carrying `tag`.
    pub fn subtotal(&self, tag: PhaseTag) -> Dd {
        Dd::sum(
            self.terms
                .iter()
                .filter(|t| t.tag == tag)
                .filter_map(PhaseTerm::finite_value),
        )
    }

    /// Sum of every evaluable term; the rest-mass spans are excluded.
    pub fn finite_total(&self) -> Dd {
        Dd::sum(self.terms.iter().filter_map(PhaseTerm::finite_value))
    }

    /// Rest-energy spans merged where they are contiguous at the same rate.
    fn rest_spans(&self) -> Vec<Span> {
        let mut spans: Vec<Span> = self
            .terms
            .iter()
            .filter_map(|t| match t.value {
                TermValue::RestEnergy { rate } => Some(Span {
                    rate,
                    t_start: t.t_start,
                    t_end: t.t_end,
                }),
                TermValue::Phase(_) => None,
            })
            .collect();
        spans.sort_by(|a, b| {
            a.rate
                .total_cmp(&b.rate)
                .then(a.t_start.total_cmp(&b.t_start))
        });
        let mut merged: Vec<Span> = Vec::with_capacity(spans.len());
        for s in spans {
            match merged.last_mut() {
                Some(last) if last.rate == s.rate && last.t_end == s.t_start => last.t_end = s.t_end,
                _ => merged.push(s),
            }
        }
        merged
    }
}

/// `a - b`, term by term.
#[derive(Clone, Debug, PartialEq)]
pub struct LedgerDifference {
    pub by_tag: BTreeMap<PhaseTag, Dd>,
    pub total: Dd,
    /// Number of rest-energy span pairs that cancelled exactly.
    pub cancelled_rest_spans: usize,
}

impl LedgerDifference {
    pub fn get(&self, tag: PhaseTag) -> Dd {
        self.by_tag.get(&tag).copied().unwrap_or(Dd::ZERO)
    }
}

pub fn ledger_difference(a: &PhaseLedger, b: &PhaseLedger) -> LedgerDifference {
    let mut by_tag = BTreeMap::new();
    for tag in PhaseTag::ALL {
        if tag != PhaseTag::RestMass {
            by_tag.insert(tag, a.subtotal(tag) - b.subtotal(tag));
        }
    }

    let sa = a.rest_spans();
    let sb = b.rest_spans();
    let mut cancelled = 0;
    let mut rest = Dd::ZERO;
    let mut leftover_a = Vec::new();
    let mut leftover_b = sb.clone();
    for s in sa {
        if let Some(pos) = leftover_b.iter().position(|o| *o == s) {
            leftover_b.swap_remove(pos);
            cancelled += 1;
        } else {
            leftover_a.push(s);
        }
    }
    // Whatever survives is grouped by rate so that only the net duration,
    // formed exactly, is scaled by the large rate.
    let mut rates: Vec<f64> = leftover_a
        .iter()
        .chain(leftover_b.iter())
        .map(|s| s.rate)
        .collect();
    rates.sort_by(f64::total_cmp);
    rates.dedup();
    for rate in rates {
        let mut net = Dd::ZERO;
        for s in leftover_a.iter().filter(|s| s.rate == rate) {
            net += Dd::sum2(s.t_end, -s.t_start);
        }
        for s in leftover_b.iter().filter(|s| s.rate == rate) {
            net -= Dd::sum2(s.t_end, -s.t_start);
        }
        rest += net * rate;
    }
    by_tag.insert(PhaseTag::RestMass, rest);

    let total = Dd::sum(by_tag.values().copied());
    LedgerDifference {
        by_tag,
        total,
        cancelled_rest_spans: cancelled,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ledger(spans: &[(f64, f64)], rate: f64) -> PhaseLedger {
        let mut l = PhaseLedger::new(Arm::Lower, InternalState::Ground);
        for (i, &(a, b)) in spans.iter().enumerate() {
            l.push(PhaseTerm::rest(rate, TermSource::Segment(i), a, b));
        }
        l
    }

    #[test]
    fn contiguous_spans_telescope() {
        let rate = -1.2e33;
        let a = ledger(&[(0.0, 0.1), (0.1, 0.35), (0.35, 1.0)], rate);
        let b = ledger(&[(0.0, 0.4), (0.4, 1.0)], rate);
        let d = ledger_difference(&a, &b);
        assert_eq!(d.get(PhaseTag::RestMass), Dd::ZERO);
        assert_eq!(d.cancelled_rest_spans, 1);
    }

    #[test]
    fn mismatched_spans_scale_net_duration() {
        let rate = -1e30;
        let a = ledger(&[(0.0, 1.0)], rate);
        let b = ledger(&[(0.0, 1.0 - 1e-12)], rate);
        let d = ledger_difference(&a, &b);
        let want = rate * 1e-12;
        assert!((d.get(PhaseTag::RestMass).to_f64() / want - 1.0).abs() < 1e-4);
    }

    #[test]
    fn finite_terms_difference_by_tag() {
        let mut a = PhaseLedger::new(Arm::Upper, InternalState::Excited);
        let mut b = PhaseLedger::new(Arm::Upper, InternalState::Ground);
        a.push(PhaseTerm::phase(PhaseTag::LaserClock, Dd::new(2.5), TermSource::Event(0), 0.0, 0.0));
        a.push(PhaseTerm::phase(PhaseTag::Kinetic, Dd::new(1.0), TermSource::Segment(0), 0.0, 1.0));
        b.push(PhaseTerm::phase(PhaseTag::Kinetic, Dd::new(0.25), TermSource::Segment(0), 0.0, 1.0));
        let d = ledger_difference(&a, &b);
        assert_eq!(d.get(PhaseTag::LaserClock).to_f64(), 2.5);
        assert_eq!(d.get(PhaseTag::Kinetic).to_f64(), 0.75);
        assert_eq!(d.total.to_f64(), 3.25);
    }
}
