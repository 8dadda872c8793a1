//! Piecewise ballistic arm trajectories in the bounce model.
//!
//! Time is measured from the first clock pulse, so the hold spans exactly
//! `[0, T_B]`. Heights are referenced to the lower arm's mean hold height,
//! which puts the lower apex at `v_B^2/(6g)`.

use serde::Serialize;
use thiserror::Error;

use crate::model::{ExperimentSpec, APEX_RTOL};
use crate::numeric::Dd;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("kick pattern does not reach the apex at the first clock pulse: v0 + delta_v = {lhs}, g*(T + T_prime) = {rhs}")]
    NoApex { lhs: f64, rhs: f64 },
    #[error("thermal wavelength needs a positive temperature, got {0:?}")]
    Temperature(Option<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Upper,
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InternalState {
    Ground,
    Excited,
}

impl Arm {
    pub fn as_str(self) -> &'static str {
        match self {
            Arm::Upper => "upper",
            Arm::Lower => "lower",
        }
    }
}

impl InternalState {
    pub fn as_str(self) -> &'static str {
        match self {
            InternalState::Ground => "ground",
            InternalState::Excited => "excited",
        }
    }
}

/// Free fall from `(t_start, z_start, v_start)` under gravity `g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub z_start: f64,
    pub v_start: f64,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn z_at(&self, t: f64, g: f64) -> f64 {
        let dt = t - self.t_start;
        self.z_start + self.v_start * dt - 0.5 * g * dt * dt
    }

    pub fn v_at(&self, t: f64, g: f64) -> f64 {
        self.v_start - g * (t - self.t_start)
    }

    pub fn z_end(&self, g: f64) -> f64 {
        self.z_at(self.t_end, g)
    }

    pub fn v_end(&self, g: f64) -> f64 {
        self.v_at(self.t_end, g)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    BraggKick,
    BlochKick,
    ClockPulseOn,
    ClockPulseOff,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::BraggKick => "bragg_kick",
            EventKind::BlochKick => "bloch_kick",
            EventKind::ClockPulseOn => "clock_pulse_on",
            EventKind::ClockPulseOff => "clock_pulse_off",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub height: f64,
    pub velocity_before: f64,
    pub velocity_after: f64,
}

impl Event {
    /// +1 for an upward kick, -1 for a downward one, 0 for clock pulses.
    pub fn direction(&self) -> f64 {
        let dv = self.velocity_after - self.velocity_before;
        if dv > 0.0 {
            1.0
        } else if dv < 0.0 {
            -1.0
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArmTrajectory {
    pub arm: Arm,
    pub state: InternalState,
    pub segments: Vec<Segment>,
    pub events: Vec<Event>,
}

impl ArmTrajectory {
    /// Segment containing `t` (the later one at a joint).
    pub fn segment_at(&self, t: f64) -> Option<&Segment> {
        self.segments
            .iter()
            .rev()
            .find(|s| s.t_start <= t && t <= s.t_end)
    }

    pub fn z_at(&self, t: f64, g: f64) -> Option<f64> {
        self.segment_at(t).map(|s| s.z_at(t, g))
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

/// Pulse times `t1 < t2 < t_i = 0 < t_f = T_B < t3 < t4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SequenceTimes {
    pub t1: f64,
    pub t2: f64,
    pub ti: f64,
    pub tf: f64,
    pub t3: f64,
    pub t4: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// t1 -> t2
    Split,
    /// t2 -> t_i
    Rise,
    /// t_i -> t_f
    Hold,
    /// t_f -> t3
    Fall,
    /// t3 -> t4
    Recombine,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Split,
        Stage::Rise,
        Stage::Hold,
        Stage::Fall,
        Stage::Recombine,
    ];
}

impl SequenceTimes {
    pub fn of(spec: &ExperimentSpec) -> Self {
        let t = &spec.timing;
        let t3 = t.t_b + t.t_prime;
        SequenceTimes {
            t1: -(t.t + t.t_prime),
            t2: -t.t_prime,
            ti: 0.0,
            tf: t.t_b,
            t3,
            t4: t3 + t.t,
        }
    }

    pub fn bounds(&self, stage: Stage) -> (f64, f64) {
        match stage {
            Stage::Split => (self.t1, self.t2),
            Stage::Rise => (self.t2, self.ti),
            Stage::Hold => (self.ti, self.tf),
            Stage::Fall => (self.tf, self.t3),
            Stage::Recombine => (self.t3, self.t4),
        }
    }

    /// Stage owning a segment; segments never straddle stage boundaries.
    pub fn stage_of(&self, seg: &Segment) -> Stage {
        let mid = 0.5 * (seg.t_start + seg.t_end);
        if seg.t_end <= self.t2 && mid <= self.t2 {
            Stage::Split
        } else if seg.t_end <= self.ti {
            Stage::Rise
        } else if seg.t_end <= self.tf && seg.t_start >= self.ti {
            Stage::Hold
        } else if seg.t_end <= self.t3 {
            Stage::Fall
        } else {
            Stage::Recombine
        }
    }
}

/// One free-fall piece of a hold path in double-double precision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DdSegment {
    pub t_start: Dd,
    pub dt: Dd,
    pub z_start: Dd,
    pub v_start: Dd,
}

impl DdSegment {
    pub fn z_after(&self, dt: Dd, g: f64) -> Dd {
        self.z_start + self.v_start * dt - (dt * dt) * (0.5 * g)
    }

    pub fn v_after(&self, dt: Dd, g: f64) -> Dd {
        self.v_start - dt * g
    }

    pub fn t_end(&self) -> Dd {
        self.t_start + self.dt
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DdKick {
    pub time: Dd,
    pub height: Dd,
    pub velocity_before: Dd,
    pub velocity_after: Dd,
}

/// Bounce-model motion during the hold, starting at rest at `z_apex`.
#[derive(Clone, Debug, PartialEq)]
pub struct HoldPath {
    pub segments: Vec<DdSegment>,
    pub kicks: Vec<DdKick>,
    pub z_end: Dd,
    pub v_end: Dd,
}

impl HoldPath {
    /// Kick whenever the downward speed reaches `v_b`, relaunching at
    /// `launch`. The last piece is truncated at `t_b`.
    pub fn build(z_apex: Dd, v_b: Dd, launch: Dd, g: f64, t_b: f64) -> HoldPath {
        let t_b = Dd::new(t_b);
        let mut segments = Vec::new();
        let mut kicks = Vec::new();
        let (mut t, mut z, mut v) = (Dd::ZERO, z_apex, Dd::ZERO);
        loop {
            let dt = (v + v_b) / g;
            let t_kick = t + dt;
            // A relaunch at or below `-v_b` would kick again at once.
            if t_kick > t_b || !(dt > Dd::ZERO) {
                break;
            }
            let seg = DdSegment {
                t_start: t,
                dt,
                z_start: z,
                v_start: v,
            };
            z = seg.z_after(dt, g);
            let before = seg.v_after(dt, g);
            segments.push(seg);
            kicks.push(DdKick {
                time: t_kick,
                height: z,
                velocity_before: before,
                velocity_after: launch,
            });
            t = t_kick;
            v = launch;
        }
        let seg = DdSegment {
            t_start: t,
            dt: t_b - t,
            z_start: z,
            v_start: v,
        };
        let z_end = seg.z_after(seg.dt, g);
        let v_end = seg.v_after(seg.dt, g);
        segments.push(seg);
        HoldPath {
            segments,
            kicks,
            z_end,
            v_end,
        }
    }

    pub fn z_at(&self, t: Dd, g: f64) -> Dd {
        let seg = self
            .segments
            .iter()
            .rev()
            .find(|s| s.t_start <= t)
            .unwrap_or(&self.segments[0]);
        seg.z_after(t - seg.t_start, g)
    }
}

/// Double-double values of `v_B`, `dm/m` and the lower apex height.
#[derive(Clone, Copy, Debug)]
pub struct HoldScales {
    pub v_b: Dd,
    pub dm_over_m: Dd,
    pub z_apex_lower: Dd,
    pub delta_z: Dd,
}

impl HoldScales {
    pub fn of(spec: &ExperimentSpec) -> Self {
        let c = &spec.constants;
        let v_b = Dd::prod(c.hbar, spec.lattice.k) / spec.species.mass;
        let delta_m = Dd::prod(c.hbar, spec.species.omega0) / Dd::prod(c.c, c.c);
        HoldScales {
            v_b,
            dm_over_m: delta_m / spec.species.mass,
            z_apex_lower: v_b.sqr() / (6.0 * c.g),
            delta_z: Dd::prod(spec.timing.delta_v, spec.timing.t),
        }
    }

    pub fn z_apex(&self, arm: Arm) -> Dd {
        match arm {
            Arm::Lower => self.z_apex_lower,
            Arm::Upper => self.z_apex_lower + self.delta_z,
        }
    }

    /// Launch speed after a lattice kick for the given internal state,
    /// `v_B - 2 v_B dm/m` when excited.
    pub fn launch(&self, state: InternalState) -> Dd {
        match state {
            InternalState::Ground => self.v_b,
            InternalState::Excited => self.v_b - self.v_b * self.dm_over_m * 2.0,
        }
    }

    pub fn hold_path(&self, spec: &ExperimentSpec, arm: Arm, state: InternalState) -> HoldPath {
        HoldPath::build(
            self.z_apex(arm),
            self.v_b,
            self.launch(state),
            spec.constants.g,
            spec.timing.t_b,
        )
    }
}

fn check_apex(spec: &ExperimentSpec) -> Result<(), TrajectoryError> {
    let t = &spec.timing;
    let lhs = t.v0 + t.delta_v;
    let rhs = spec.constants.g * (t.t + t.t_prime);
    if (lhs - rhs).abs() > APEX_RTOL * lhs.abs().max(rhs.abs()) {
        return Err(TrajectoryError::NoApex { lhs, rhs });
    }
    Ok(())
}

fn push_hold(
    traj: &mut ArmTrajectory,
    path: &HoldPath,
    t_b: f64,
) {
    let first = path.segments[0];
    traj.events.push(Event {
        time: 0.0,
        kind: EventKind::ClockPulseOn,
        height: first.z_start.to_f64(),
        velocity_before: 0.0,
        velocity_after: 0.0,
    });
    for (i, seg) in path.segments.iter().enumerate() {
        let t_end = if i + 1 == path.segments.len() {
            t_b
        } else {
            path.kicks[i].time.to_f64()
        };
        traj.segments.push(Segment {
            t_start: seg.t_start.to_f64(),
            t_end,
            z_start: seg.z_start.to_f64(),
            v_start: seg.v_start.to_f64(),
        });
        if let Some(k) = path.kicks.get(i) {
            traj.events.push(Event {
                time: k.time.to_f64(),
                kind: EventKind::BlochKick,
                height: k.height.to_f64(),
                velocity_before: k.velocity_before.to_f64(),
                velocity_after: k.velocity_after.to_f64(),
            });
        }
    }
    let v_end = path.v_end.to_f64();
    traj.events.push(Event {
        time: t_b,
        kind: EventKind::ClockPulseOff,
        height: path.z_end.to_f64(),
        velocity_before: v_end,
        velocity_after: v_end,
    });
}

fn push_after_hold(traj: &mut ArmTrajectory, spec: &ExperimentSpec, z_f: f64, v_f: f64) {
    let times = SequenceTimes::of(spec);
    let g = spec.constants.g;
    let dv = spec.timing.delta_v;
    let fall = Segment {
        t_start: times.tf,
        t_end: times.t3,
        z_start: z_f,
        v_start: v_f,
    };
    let z3 = fall.z_end(g);
    let v3 = fall.v_end(g);
    traj.segments.push(fall);
    // The upper arm is pushed down at t3, the lower one at t4.
    let v_after3 = match traj.arm {
        Arm::Upper => {
            traj.events.push(Event {
                time: times.t3,
                kind: EventKind::BraggKick,
                height: z3,
                velocity_before: v3,
                velocity_after: v3 - dv,
            });
            v3 - dv
        }
        Arm::Lower => v3,
    };
    let last = Segment {
        t_start: times.t3,
        t_end: times.t4,
        z_start: z3,
        v_start: v_after3,
    };
    if traj.arm == Arm::Lower {
        let v4 = last.v_end(g);
        traj.events.push(Event {
            time: times.t4,
            kind: EventKind::BraggKick,
            height: last.z_end(g),
            velocity_before: v4,
            velocity_after: v4 - dv,
        });
    }
    traj.segments.push(last);
}

fn build_arm(spec: &ExperimentSpec, scales: &HoldScales, arm: Arm) -> ArmTrajectory {
    let g = spec.constants.g;
    let dv = spec.timing.delta_v;
    let times = SequenceTimes::of(spec);
    let apex = scales.z_apex(arm).to_f64();
    let mut traj = ArmTrajectory {
        arm,
        state: InternalState::Ground,
        segments: Vec::new(),
        events: Vec::new(),
    };
    // Everything before the hold is anchored on the apex at t = 0.
    let on_rise = |t: f64| Segment {
        t_start: t,
        t_end: 0.0,
        z_start: apex - 0.5 * g * t * t,
        v_start: -g * t,
    };
    let rise = Segment {
        t_end: 0.0,
        ..on_rise(times.t2)
    };
    match arm {
        Arm::Upper => {
            let split = Segment {
                t_end: times.t2,
                ..on_rise(times.t1)
            };
            traj.events.push(Event {
                time: times.t1,
                kind: EventKind::BraggKick,
                height: split.z_start,
                velocity_before: split.v_start - dv,
                velocity_after: split.v_start,
            });
            traj.segments.push(split);
        }
        Arm::Lower => {
            // Before its kick the lower arm is the apex parabola offset by
            // the missing `dv`.
            let d = times.t2 - times.t1;
            let base = on_rise(times.t1);
            let split = Segment {
                t_end: times.t2,
                z_start: base.z_start + dv * d,
                v_start: base.v_start - dv,
                ..base
            };
            traj.segments.push(split);
            traj.events.push(Event {
                time: times.t2,
                kind: EventKind::BraggKick,
                height: rise.z_start,
                velocity_before: rise.v_start - dv,
                velocity_after: rise.v_start,
            });
        }
    }
    traj.segments.push(rise);
    let path = scales.hold_path(spec, arm, InternalState::Ground);
    push_hold(&mut traj, &path, spec.timing.t_b);
    push_after_hold(&mut traj, spec, path.z_end.to_f64(), path.v_end.to_f64());
    traj
}

/// Ground-state trajectories of the two kept arms, `(upper, lower)`.
pub fn build_arm_trajectories(
    spec: &ExperimentSpec,
) -> Result<(ArmTrajectory, ArmTrajectory), TrajectoryError> {
    check_apex(spec)?;
    let scales = HoldScales::of(spec);
    Ok((
        build_arm(spec, &scales, Arm::Upper),
        build_arm(spec, &scales, Arm::Lower),
    ))
}

/// The excited path of one arm: it shares the ground path up to the first
/// clock pulse, falls through the lattice with the reduced relaunch speed,
/// and continues ballistically from its own end state afterwards.
pub fn excited_fall_trajectory(ground: &ArmTrajectory, spec: &ExperimentSpec) -> ArmTrajectory {
    let scales = HoldScales::of(spec);
    let mut traj = ArmTrajectory {
        arm: ground.arm,
        state: InternalState::Excited,
        segments: ground
            .segments
            .iter()
            .copied()
            .filter(|s| s.t_end <= 0.0)
            .collect(),
        events: ground
            .events
            .iter()
            .copied()
            .filter(|e| e.time < 0.0)
            .collect(),
    };
    let path = scales.hold_path(spec, ground.arm, InternalState::Excited);
    push_hold(&mut traj, &path, spec.timing.t_b);
    push_after_hold(&mut traj, spec, path.z_end.to_f64(), path.v_end.to_f64());
    traj
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryPair {
    pub ground: ArmTrajectory,
    pub excited: ArmTrajectory,
    pub delta_v_b: f64,
    pub delta_z_b: f64,
    pub delta_tau_b: f64,
    /// `2 N dz_B`.
    pub max_separation: f64,
    /// Largest ground-minus-excited height seen at the excited kicks.
    pub measured_max_separation: f64,
}

pub fn trajectory_pair(
    spec: &ExperimentSpec,
    arm: Arm,
) -> Result<TrajectoryPair, TrajectoryError> {
    let (upper, lower) = build_arm_trajectories(spec)?;
    let ground = match arm {
        Arm::Upper => upper,
        Arm::Lower => lower,
    };
    let excited = excited_fall_trajectory(&ground, spec);
    let k = spec.kinematics();
    let g = spec.constants.g;
    let delta_v_b = 2.0 * k.v_b * spec.dm_over_m();
    let delta_z_b = k.v_b * delta_v_b / g;
    let n = spec.partition().n as f64;

    let scales = HoldScales::of(spec);
    let gp = scales.hold_path(spec, arm, InternalState::Ground);
    let ep = scales.hold_path(spec, arm, InternalState::Excited);
    let measured = ep
        .kicks
        .iter()
        .map(|kick| (gp.z_at(kick.time, g) - kick.height).to_f64())
        .chain(std::iter::once((gp.z_end - ep.z_end).to_f64()))
        .fold(0.0_f64, f64::max);

    Ok(TrajectoryPair {
        ground,
        excited,
        delta_v_b,
        delta_z_b,
        delta_tau_b: delta_v_b / g,
        max_separation: 2.0 * n * delta_z_b,
        measured_max_separation: measured,
    })
}

/// `sqrt(2 pi hbar^2 / (m k_B T))`.
pub fn thermal_wavelength(spec: &ExperimentSpec) -> Result<f64, TrajectoryError> {
    let temp = spec.species.temperature;
    match temp {
        Some(t) if t > 0.0 && t.is_finite() => {
            let c = &spec.constants;
            Ok((2.0 * std::f64::consts::PI * c.hbar * c.hbar / (spec.species.mass * c.k_b * t))
                .sqrt())
        }
        _ => Err(TrajectoryError::Temperature(temp)),
    }
}
