//! Physical constants, experiment description and the kinematics derived from it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance on `v0 + delta_v = g (T + T')`.
pub const APEX_RTOL: f64 = 1e-12;

/// Above this `dm/m` the perturbative engines are outside their regime.
pub const DM_OVER_M_WARN: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{field} must be positive and finite, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("{field} must be finite, got {value}")]
    NonFinite { field: &'static str, value: f64 },
    #[error("{field} must be non-negative, got {value}")]
    Negative { field: &'static str, value: f64 },
    #[error("apex condition violated: v0 + delta_v = {lhs} but g*(T + T_prime) = {rhs}")]
    Apex { lhs: f64, rhs: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Speed of light, m/s.
    pub c: f64,
    /// Gravitational acceleration, m/s^2.
    pub g: f64,
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
}

impl PhysicalConstants {
    pub const SI: PhysicalConstants = PhysicalConstants {
        c: 299_792_458.0,
        g: 9.81,
        hbar: 1.054_571_817e-34,
        k_b: 1.380_649e-23,
    };

    /// Natural units with `hbar = g = k_B = 1` and a chosen `c`.
    pub fn reduced(c: f64) -> Self {
        PhysicalConstants {
            c,
            g: 1.0,
            hbar: 1.0,
            k_b: 1.0,
        }
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::SI
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomSpecies {
    /// Ground-state mass `m`, kg.
    pub mass: f64,
    /// Clock transition angular frequency `omega0`, rad/s.
    pub omega0: f64,
    /// Cloud temperature, K.
    pub temperature: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    /// Lattice wavevector `k`, 1/m.
    pub k: f64,
    /// Potential depth `V0`, J. Only the lattice integrator reads it.
    pub depth: Option<f64>,
    /// Integrator step override, s.
    pub step: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingConfig {
    /// Separation of the Bragg pulses in each pair.
    pub t: f64,
    /// Free flight between the inner Bragg pulse and the lattice.
    pub t_prime: f64,
    /// Lattice hold between the clock pulses.
    pub t_b: f64,
    pub v0: f64,
    pub delta_v: f64,
    /// Clock laser angular frequency.
    pub omega: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitMode {
    Si,
    Reduced,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub mode: UnitMode,
    pub constants: PhysicalConstants,
    pub species: AtomSpecies,
    pub lattice: LatticeConfig,
    pub timing: TimingConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DerivedKinematics {
    pub v_b: f64,
    pub tau_b: f64,
    pub delta_m: f64,
    pub delta_z: f64,
    pub mean_v2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlochPartition {
    pub n: u64,
    pub tau: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Epsilons {
    pub eps_k: f64,
    pub eps_g: f64,
}

fn positive(field: &'static str, value: f64) -> Result<(), ModelError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonPositive { field, value })
    }
}

fn finite(field: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonFinite { field, value })
    }
}

fn non_negative(field: &'static str, value: f64) -> Result<(), ModelError> {
    finite(field, value)?;
    if value < 0.0 {
        return Err(ModelError::Negative { field, value });
    }
    Ok(())
}

/// `N = floor(T_B/tau_B + 1/2)` and `tau = T_B - N tau_B` with
/// `tau` in `[-tau_B/2, tau_B/2)`.
pub fn bloch_partition(t_b: f64, tau_b: f64) -> BlochPartition {
    let mut n = (t_b / tau_b + 0.5).floor().max(0.0);
    let residual = |n: f64| (-n).mul_add(tau_b, t_b);
    let mut tau = residual(n);
    // The quotient can round across the half-open boundary; fix it up on the
    // exact residual instead.
    if tau >= 0.5 * tau_b {
        n += 1.0;
        tau = residual(n);
    } else if tau < -0.5 * tau_b && n > 0.0 {
        n -= 1.0;
        tau = residual(n);
    }
    BlochPartition { n: n as u64, tau }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        let c = &self.constants;
        positive("c", c.c)?;
        positive("g", c.g)?;
        positive("hbar", c.hbar)?;
        positive("k_B", c.k_b)?;
        positive("mass", self.species.mass)?;
        non_negative("omega0", self.species.omega0)?;
        if let Some(t) = self.species.temperature {
            positive("temperature", t)?;
        }
        positive("k", self.lattice.k)?;
        if let Some(d) = self.lattice.depth {
            positive("depth", d)?;
        }
        if let Some(h) = self.lattice.step {
            positive("step", h)?;
        }
        let t = &self.timing;
        positive("T", t.t)?;
        positive("T_prime", t.t_prime)?;
        positive("T_B", t.t_b)?;
        finite("v0", t.v0)?;
        non_negative("delta_v", t.delta_v)?;
        non_negative("omega", t.omega)?;
        let lhs = t.v0 + t.delta_v;
        let rhs = c.g * (t.t + t.t_prime);
        if (lhs - rhs).abs() > APEX_RTOL * lhs.abs().max(rhs.abs()) {
            return Err(ModelError::Apex { lhs, rhs });
        }
        Ok(())
    }

    pub fn kinematics(&self) -> DerivedKinematics {
        derive_kinematics(self)
    }

    pub fn partition(&self) -> BlochPartition {
        let k = self.kinematics();
        bloch_partition(self.timing.t_b, k.tau_b)
    }

    pub fn epsilons(&self) -> Epsilons {
        epsilon_params(self)
    }

    pub fn dm_over_m(&self) -> f64 {
        self.kinematics().delta_m / self.species.mass
    }

    /// Launch velocity that puts the apex at the start of the hold.
    pub fn apex_v0(&self) -> f64 {
        self.constants.g * (self.timing.t + self.timing.t_prime) - self.timing.delta_v
    }

    pub fn with_hold(mut self, t_b: f64) -> Self {
        self.timing.t_b = t_b;
        self
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.timing.omega = omega;
        self
    }

    /// Change the Bragg kick and re-derive the launch velocity.
    pub fn with_delta_v(mut self, delta_v: f64) -> Self {
        self.timing.delta_v = delta_v;
        self.timing.v0 = self.apex_v0();
        self
    }

    /// Change the Bragg separation and re-derive the launch velocity.
    pub fn with_bragg_time(mut self, t: f64) -> Self {
        self.timing.t = t;
        self.timing.v0 = self.apex_v0();
        self
    }
}

pub fn derive_kinematics(spec: &ExperimentSpec) -> DerivedKinematics {
    let c = &spec.constants;
    let v_b = c.hbar * spec.lattice.k / spec.species.mass;
    DerivedKinematics {
        v_b,
        tau_b: 2.0 * v_b / c.g,
        delta_m: c.hbar * spec.species.omega0 / (c.c * c.c),
        delta_z: spec.timing.delta_v * spec.timing.t,
        mean_v2: v_b * v_b / 3.0,
    }
}

/// Kinetic `v_B^2/(6c^2)` and gravitational `g dz/c^2` correction sizes.
pub fn epsilon_params(spec: &ExperimentSpec) -> Epsilons {
    let k = derive_kinematics(spec);
    let c2 = spec.constants.c * spec.constants.c;
    Epsilons {
        eps_k: k.v_b * k.v_b / (6.0 * c2),
        eps_g: spec.constants.g * k.delta_z / c2,
    }
}

/// Ready-made experiments used by examples, tests and the C interface.
pub mod presets {
    use super::*;

    pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
    /// 88Sr.
    pub const SR_MASS: f64 = 87.905_612_5 * ATOMIC_MASS_UNIT;
    /// 1S0 - 3P0 clock line.
    pub const SR_OMEGA0: f64 = 2.0 * std::f64::consts::PI * 429.228_004_229_873e12;
    pub const LATTICE_532NM_K: f64 = 2.0 * std::f64::consts::PI / 532e-9;

    /// Strontium in a 532 nm lattice with a 10 um arm separation and a 1 s hold.
    pub fn strontium() -> ExperimentSpec {
        let g = PhysicalConstants::SI.g;
        let (t, t_prime, delta_v) = (10e-3, 5e-3, 1e-3);
        ExperimentSpec {
            mode: UnitMode::Si,
            constants: PhysicalConstants::SI,
            species: AtomSpecies {
                mass: SR_MASS,
                omega0: SR_OMEGA0,
                temperature: Some(400e-9),
            },
            lattice: LatticeConfig {
                k: LATTICE_532NM_K,
                depth: None,
                step: None,
            },
            timing: TimingConfig {
                t,
                t_prime,
                t_b: 1.0,
                v0: g * (t + t_prime) - delta_v,
                delta_v,
                omega: SR_OMEGA0,
            },
        }
    }

    /// Demonstration regime with `hbar = m = g = 1`, `v_B = 1/2`, `tau_B = 1`,
    /// `omega = 40 pi`, `omega0 = 1.1 omega` and `c` set by `eps_k`.
    /// `eps_g` fixes the arm separation through `dz = eps_g c^2 / g`.
    pub fn reduced_demo(eps_k: f64, eps_g: f64) -> ExperimentSpec {
        let v_b: f64 = 0.5;
        let c = (v_b * v_b / (6.0 * eps_k)).sqrt();
        let (t, t_prime) = (1.0, 1.0);
        let delta_v = eps_g * c * c / t;
        let omega = 40.0 * std::f64::consts::PI;
        ExperimentSpec {
            mode: UnitMode::Reduced,
            constants: PhysicalConstants::reduced(c),
            species: AtomSpecies {
                mass: 1.0,
                omega0: 1.1 * omega,
                temperature: None,
            },
            lattice: LatticeConfig {
                k: v_b,
                depth: None,
                step: None,
            },
            timing: TimingConfig {
                t,
                t_prime,
                t_b: 10.0,
                v0: (t + t_prime) - delta_v,
                delta_v,
                omega,
            },
        }
    }
}
