//! Action of a free-fall segment, split into rest, potential and kinetic parts.

use crate::model::PhysicalConstants;
use crate::numeric::Dd;
use crate::trajectory::Segment;

/// Phase of one free-fall segment for a mass `m`.
///
/// The full value is
/// `-(m/hbar) [(c^2 + g z_A - v_A^2/2) dt + v_A g dt^2 - g^2 dt^3/3]`.
/// The rest part `-(m c^2/hbar) dt` is carried as a rate and a duration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagationPhase {
    /// `-m c^2/hbar`, rad/s.
    pub rest_rate: f64,
    pub duration: f64,
    /// `-(m/hbar) g (z_A dt + v_A dt^2/2 - g dt^3/6)`.
    pub newtonian: Dd,
    /// `(m/hbar) (v_A^2 dt - v_A g dt^2 + g^2 dt^3/3)/2`.
    pub kinetic: Dd,
}

impl PropagationPhase {
    pub fn non_rest(&self) -> Dd {
        self.newtonian + self.kinetic
    }

    /// Everything, rest part included. Only meaningful for inspection: the
    /// rest part is of order 1e26 rad for atoms in SI units.
    pub fn total(&self) -> Dd {
        Dd::prod(self.rest_rate, self.duration) + self.non_rest()
    }
}

/// Potential and kinetic parts in double-double arithmetic for a mass `mass`
/// given as a double-double so that `m + dm` keeps its small part.
pub fn free_fall_parts(z_a: Dd, v_a: Dd, dt: Dd, mass: Dd, g: f64, hbar: f64) -> (Dd, Dd) {
    let m_over_hbar = mass / hbar;
    let dt2 = dt * dt;
    let dt3 = dt2 * dt;
    let potential = z_a * dt + v_a * dt2 * 0.5 - dt3 * (g / 6.0);
    let newtonian = -(m_over_hbar * potential * g);
    let kinetic_action = v_a * v_a * dt - v_a * dt2 * g + dt3 * (g * g / 3.0);
    let kinetic = m_over_hbar * kinetic_action * 0.5;
    (newtonian, kinetic)
}

pub fn propagation_phase(seg: &Segment, mass: f64, constants: &PhysicalConstants) -> PropagationPhase {
    let dt = Dd::sum2(seg.t_end, -seg.t_start);
    let (newtonian, kinetic) = free_fall_parts(
        Dd::new(seg.z_start),
        Dd::new(seg.v_start),
        dt,
        Dd::new(mass),
        constants.g,
        constants.hbar,
    );
    PropagationPhase {
        rest_rate: -mass * constants.c * constants.c / constants.hbar,
        duration: seg.duration(),
        newtonian,
        kinetic,
    }
}

/// The closed form written as a single expression, used to cross-check the
/// split above.
pub fn propagation_closed_form(seg: &Segment, mass: f64, constants: &PhysicalConstants) -> Dd {
    let (g, c) = (constants.g, constants.c);
    let dt = Dd::sum2(seg.t_end, -seg.t_start);
    let z = Dd::new(seg.z_start);
    let v = Dd::new(seg.v_start);
    let bracket = (Dd::prod(c, c) + z * g - v * v * 0.5) * dt + v * dt * dt * g
        - dt * dt * dt * (g * g / 3.0);
    -(bracket * (Dd::new(mass) / constants.hbar))
}

/// Composite Simpson rule on `n` (rounded up to even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut acc = crate::numeric::CompensatedSum::new();
    acc.add(f(a));
    acc.add(f(b));
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc.add(w * f(a + h * i as f64));
    }
    acc.value() * h / 3.0
}

/// Direct quadrature of `L/hbar = -(m/hbar)(c^2 + g z - v^2/2)` along the
/// parabola, returning `(rest part, remainder)`.
pub fn propagation_quadrature(
    seg: &Segment,
    mass: f64,
    constants: &PhysicalConstants,
    panels: usize,
) -> (f64, f64) {
    let g = constants.g;
    let scale = -mass / constants.hbar;
    let rest = scale * constants.c * constants.c * seg.duration();
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
    (rest, scale * rem)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(dt: f64) -> Segment {
        Segment {
            t_start: 0.3,
            t_end: 0.3 + dt,
            z_start: 1.7e-3,
            v_start: 4.2e-2,
        }
    }

    #[test]
    fn empty_segment_has_zero_phase() {
        let p = propagation_phase(&seg(0.0), 1.46e-25, &PhysicalConstants::SI);
        assert_eq!(p.non_rest(), Dd::ZERO);
        assert_eq!(p.duration, 0.0);
    }

    #[test]
    fn split_matches_single_expression() {
        let c = PhysicalConstants::reduced(3.0);
        let s = seg(0.8);
        let p = propagation_phase(&s, 1.3, &c);
        let whole = propagation_closed_form(&s, 1.3, &c);
        assert!((p.total() - whole).to_f64().abs() < 1e-13 * whole.to_f64().abs());
    }

    #[test]
    fn matches_quadrature() {
        let c = PhysicalConstants::SI;
        let s = seg(0.01);
        let p = propagation_phase(&s, 1.46e-25, &c);
        let (_, rem) = propagation_quadrature(&s, 1.46e-25, &c, 2000);
        let want = p.non_rest().to_f64();
        assert!((rem - want).abs() < 1e-10 * want.abs(), "{rem} {want}");
    }

    #[test]
    fn identical_segments_cancel_exactly() {
        let c = PhysicalConstants::SI;
        let a = propagation_phase(&seg(0.02), 1.46e-25, &c);
        let b = propagation_phase(&seg(0.02), 1.46e-25, &c);
        assert_eq!((a.non_rest() - b.non_rest()), Dd::ZERO);
        assert_eq!(a.rest_rate, b.rest_rate);
        assert_eq!(a.duration, b.duration);
    }
}
