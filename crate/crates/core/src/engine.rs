//! The three routes to `(delta_phi, delta_d, delta_u)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{arm_hold_trajectory, lattice_clock_corrections, LatticeClockPhases, LatticeTrajectory};
use crate::model::ExperimentSpec;
use crate::numeric::Dd;
use crate::phase::{
    clock_phase_corrections, interferometer_phase, nonperturbative_clock_phases, nonperturbative_report,
    ClockPhases, InterferometerPhase, NonperturbativeReport,
};
use crate::trajectory::Arm;

/// The exact excited path needs an upward relaunch `v_B (1 - 2 dm/m) > 0`.
pub const EXACT_PATH_MAX_DM_OVER_M: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Closed-form clock phases along the bounce-model ground paths.
    Perturbative,
    /// Phases accumulated along the exact falling excited paths.
    Nonperturbative,
    /// Clock phases from the time averages of the integrated lattice motion.
    LatticeOde,
}

impl Engine {
    pub const ALL: [Engine; 3] = [Engine::Perturbative, Engine::Nonperturbative, Engine::LatticeOde];

    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Perturbative => "perturbative",
            Engine::Nonperturbative => "nonperturbative",
            Engine::LatticeOde => "lattice_ode",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "perturbative" => Ok(Engine::Perturbative),
            "nonperturbative" | "non_perturbative" => Ok(Engine::Nonperturbative),
            "lattice_ode" | "lattice" => Ok(Engine::LatticeOde),
            other => Err(format!(
                "unknown engine '{other}' (expected perturbative, nonperturbative or lattice_ode)"
            )),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("[{engine}] {message}")]
pub struct EngineError {
    pub engine: Engine,
    pub message: String,
}

impl EngineError {
    fn new(engine: Engine, e: impl fmt::Display) -> Self {
        EngineError {
            engine,
            message: e.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeRun {
    pub lower: LatticeTrajectory,
    pub upper: LatticeTrajectory,
    pub phases: LatticeClockPhases,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineRun {
    pub engine: Engine,
    pub phases: ClockPhases,
    /// Ground-arm ledgers and the stage breakdown of `delta_phi`.
    pub interferometer: InterferometerPhase,
    pub nonperturbative: Option<NonperturbativeReport>,
    pub lattice: Option<LatticeRun>,
}

/// Runs one engine. `delta_phi` always comes from the ground-arm ledgers,
/// which every engine shares.
pub fn run_engine(spec: &ExperimentSpec, engine: Engine) -> Result<EngineRun, EngineError> {
    let ip = interferometer_phase(spec).map_err(|e| EngineError::new(engine, e))?;
    let delta_phi = ip.delta_phi;
    let mut run = EngineRun {
        engine,
        phases: ClockPhases {
            delta_phi,
            delta_d: Dd::ZERO,
            delta_u: Dd::ZERO,
        },
        interferometer: ip,
        nonperturbative: None,
        lattice: None,
    };
    match engine {
        Engine::Perturbative => {
            let p = clock_phase_corrections(spec);
            run.phases.delta_d = p.delta_d;
            run.phases.delta_u = p.delta_u;
        }
        Engine::Nonperturbative => {
            let r = spec.dm_over_m();
            if !(r < EXACT_PATH_MAX_DM_OVER_M) {
                return Err(EngineError::new(
                    engine,
                    format!("dm/m = {r} leaves no upward relaunch for the excited path (needs < {EXACT_PATH_MAX_DM_OVER_M})"),
                ));
            }
            let (d, u) = nonperturbative_clock_phases(spec);
            run.phases.delta_d = d;
            run.phases.delta_u = u;
            run.nonperturbative = Some(nonperturbative_report(spec));
        }
        Engine::LatticeOde => {
            let lower = arm_hold_trajectory(spec, Arm::Lower).map_err(|e| EngineError::new(engine, e))?;
            let upper = arm_hold_trajectory(spec, Arm::Upper).map_err(|e| EngineError::new(engine, e))?;
            let ((d, u), phases) =
                lattice_clock_corrections(&lower, &upper, spec).map_err(|e| EngineError::new(engine, e))?;
            run.phases.delta_d = d;
            run.phases.delta_u = u;
            run.lattice = Some(LatticeRun { lower, upper, phases });
        }
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;

    #[test]
    fn names_round_trip() {
        for e in Engine::ALL {
            assert_eq!(e.as_str().parse::<Engine>().unwrap(), e);
        }
        assert!("exact".parse::<Engine>().is_err());
    }

    #[test]
    fn zero_defect_all_engines_agree() {
        let mut s = presets::reduced_demo(0.01, 0.01);
        s.species.omega0 = 0.0;
        s.timing.omega = 0.0;
        for e in Engine::ALL {
            let r = run_engine(&s, e).unwrap();
            assert_eq!(r.phases.delta_d.to_f64(), 0.0, "{e}");
            assert_eq!(r.phases.delta_u.to_f64(), 0.0, "{e}");
        }
    }

    #[test]
    fn exact_paths_need_small_defect() {
        let s = presets::reduced_demo(0.01, 0.01);
        let e = run_engine(&s, Engine::Nonperturbative).unwrap_err();
        assert!(e.message.contains("upward relaunch"), "{e}");
    }

    #[test]
    fn lattice_failure_is_tagged() {
        let mut s = presets::reduced_demo(0.01, 0.01);
        s.lattice.depth = Some(1e-3);
        let e = run_engine(&s, Engine::LatticeOde).unwrap_err();
        assert_eq!(e.engine, Engine::LatticeOde);
        assert!(e.to_string().starts_with("[lattice_ode]"));
    }
}
