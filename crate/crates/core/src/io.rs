//! Output artifacts: CSV tables, JSON documents and run manifests.
//!
//! Floats are written in their shortest round-trip form, so identical
//! inputs produce byte-identical files.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dsl::units::Dimension;
use crate::engine::{Engine, EngineRun};
use crate::lattice::LatticeTrajectory;
use crate::model::{ExperimentSpec, UnitMode};
use crate::observables::Observables;
use crate::phase::{PhaseLedger, PhaseTag, TermSource, TermValue};
use crate::trajectory::{excited_fall_trajectory, ArmTrajectory};

pub const TOOL: &str = "clocksim";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest round-trip decimal; scientific notation for very small or
/// very large magnitudes.
pub fn fmt_float(x: f64) -> String {
    let a = x.abs();
    if x != 0.0 && x.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Writes `bytes` to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable value");
    out.push(b'\n');
    out
}

/// What a column measures, for the unit in its header.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    Angle,
    Dimensionless,
    Physical(Dimension),
}

pub fn unit_label(mode: UnitMode, q: Quantity) -> &'static str {
    match (q, mode) {
        (Quantity::Angle, _) => "rad",
        (Quantity::Dimensionless, _) => "1",
        (Quantity::Physical(d), UnitMode::Si) => d.si_unit(),
        (Quantity::Physical(_), UnitMode::Reduced) => "reduced",
    }
}

pub fn header(name: &str, mode: UnitMode, q: Quantity) -> String {
    format!("{name}[{}]", unit_label(mode, q))
}

/// Observable columns of simulate and sweep outputs, in file order.
pub const OBSERVABLE_COLUMNS: [(&str, Quantity); 15] = [
    ("delta_phi", Quantity::Angle),
    ("delta_d", Quantity::Angle),
    ("delta_u", Quantity::Angle),
    ("delta_split", Quantity::Angle),
    ("p0", Quantity::Dimensionless),
    ("p1", Quantity::Dimensionless),
    ("total", Quantity::Dimensionless),
    ("total_normalized", Quantity::Dimensionless),
    ("difference", Quantity::Dimensionless),
    ("visibility", Quantity::Dimensionless),
    ("visibility_drop", Quantity::Dimensionless),
    ("mean_omega0", Quantity::Physical(Dimension::Frequency)),
    ("fractional_shift", Quantity::Dimensionless),
    ("eps_k", Quantity::Dimensionless),
    ("eps_g", Quantity::Dimensionless),
];

pub fn observable_values(o: &Observables) -> [f64; 15] {
    [
        o.delta_phi,
        o.delta_d,
        o.delta_u,
        o.delta_split,
        o.p0,
        o.p1,
        o.total,
        o.total_normalized,
        o.difference,
        o.visibility,
        o.visibility_drop,
        o.mean_omega0,
        o.fractional_shift,
        o.eps_k,
        o.eps_g,
    ]
}

fn csv_bytes(header: Vec<String>, rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// One row per point. Columns: `arm, state, model, index, t, z, v`.
/// Bounce-model paths list each segment start plus the final end point;
/// lattice paths list the stored samples.
pub fn trajectories_csv(spec: &ExperimentSpec, run: &EngineRun) -> Vec<u8> {
    let mode = spec.mode;
    let g = spec.constants.g;
    let head = vec![
        "arm".to_string(),
        "state".to_string(),
        "model".to_string(),
        "index".to_string(),
        header("t", mode, Quantity::Physical(Dimension::Time)),
        header("z", mode, Quantity::Physical(Dimension::Length)),
        header("v", mode, Quantity::Physical(Dimension::Velocity)),
    ];
    let mut rows = Vec::new();
    let mut bounce = |traj: &ArmTrajectory| {
        let mut push = |i: usize, t: f64, z: f64, v: f64| {
            rows.push(vec![
                traj.arm.as_str().to_string(),
                traj.state.as_str().to_string(),
                "bounce".to_string(),
                i.to_string(),
                fmt_float(t),
                fmt_float(z),
                fmt_float(v),
            ]);
        };
        for (i, s) in traj.segments.iter().enumerate() {
            push(i, s.t_start, s.z_start, s.v_start);
        }
        if let Some(s) = traj.segments.last() {
            push(traj.segments.len(), s.t_end, s.z_end(g), s.v_end(g));
        }
    };
    let ip = &run.interferometer;
    bounce(&ip.lower);
    bounce(&ip.upper);
    if run.engine == Engine::Nonperturbative {
        bounce(&excited_fall_trajectory(&ip.lower, spec));
        bounce(&excited_fall_trajectory(&ip.upper, spec));
    }
    if let Some(l) = &run.lattice {
        for (arm, traj) in [("lower", &l.lower), ("upper", &l.upper)] {
            lattice_rows(&mut rows, arm, traj);
        }
    }
    csv_bytes(head, rows)
}

fn lattice_rows(rows: &mut Vec<Vec<String>>, arm: &str, traj: &LatticeTrajectory) {
    for i in 0..traj.t.len() {
        rows.push(vec![
            arm.to_string(),
            "ground".to_string(),
            "lattice".to_string(),
            i.to_string(),
            fmt_float(traj.t[i]),
            fmt_float(traj.z[i]),
            fmt_float(traj.v[i]),
        ]);
    }
}

fn source_json(s: TermSource) -> Value {
    match s {
        TermSource::Segment(i) => json!({ "kind": "segment", "index": i }),
        TermSource::Event(i) => json!({ "kind": "event", "index": i }),
        TermSource::Endpoint => json!({ "kind": "endpoint" }),
    }
}

fn ledger_json(l: &PhaseLedger) -> Value {
    let terms: Vec<Value> = l
        .terms
        .iter()
        .map(|t| {
            let mut v = json!({
                "tag": t.tag,
                "source": source_json(t.source),
                "t_start": t.t_start,
                "t_end": t.t_end,
            });
            match t.value {
                TermValue::Phase(p) => {
                    v["value"] = json!(p.hi);
                    v["value_lo"] = json!(p.lo);
                }
                TermValue::RestEnergy { rate } => v["rest_rate"] = json!(rate),
            }
            v
        })
        .collect();
    let subtotals: serde_json::Map<String, Value> = PhaseTag::ALL
        .iter()
        .filter(|&&tag| tag != PhaseTag::RestMass)
        .map(|&tag| (tag.as_str().to_string(), json!(l.subtotal(tag).to_f64())))
        .collect();
    json!({
        "arm": l.arm,
        "state": l.state,
        "finite_total": l.finite_total().to_f64(),
        "subtotals": subtotals,
        "terms": terms,
    })
}

/// Phase bookkeeping of a run: ground ledgers, stage breakdown and the
/// engine's clock phases.
pub fn ledger_document(run: &EngineRun) -> Value {
    let ip = &run.interferometer;
    let difference: serde_json::Map<String, Value> = PhaseTag::ALL
        .iter()
        .map(|&tag| (tag.as_str().to_string(), json!(ip.difference.get(tag).to_f64())))
        .collect();
    let mut doc = json!({
        "engine": run.engine,
        "delta_phi": {
            "value": ip.delta_phi.hi,
            "value_lo": ip.delta_phi.lo,
            "closed_form": ip.closed_form.to_f64(),
            "propagation": ip.propagation.to_f64(),
            "propagation_closed_form": ip.propagation_closed_form.to_f64(),
            "laser_bragg": ip.laser_bragg.to_f64(),
            "laser_bloch": ip.laser_bloch.to_f64(),
            "laser_from_heights": ip.laser_from_heights.to_f64(),
        },
        "difference_by_tag": difference,
        "stages": ip.stages,
        "clock": {
            "delta_d": run.phases.delta_d.hi,
            "delta_d_lo": run.phases.delta_d.lo,
            "delta_u": run.phases.delta_u.hi,
            "delta_u_lo": run.phases.delta_u.lo,
        },
        "ledgers": ip.ledgers.iter().map(ledger_json).collect::<Vec<_>>(),
    });
    if let Some(np) = &run.nonperturbative {
        doc["nonperturbative"] = json!(np);
    }
    if let Some(l) = &run.lattice {
        doc["lattice"] = json!({
            "phases": l.phases,
            "lower": lattice_summary(&l.lower),
            "upper": lattice_summary(&l.upper),
        });
    }
    doc
}

fn lattice_summary(t: &LatticeTrajectory) -> Value {
    json!({
        "z0": t.z0,
        "depth": t.depth,
        "phase": t.phase,
        "step": t.step,
        "steps": t.steps,
        "stride": t.stride,
        "method": t.method,
        "energy_drift": t.energy_drift,
        "trapped": t.trapped,
        "samples": t.t.len(),
    })
}

pub fn observables_document(spec: &ExperimentSpec, engine: Engine, o: &Observables) -> Value {
    let k = spec.kinematics();
    let p = spec.partition();
    json!({
        "engine": engine,
        "mode": spec.mode,
        "observables": o,
        "derived": {
            "v_b": k.v_b,
            "tau_b": k.tau_b,
            "delta_m": k.delta_m,
            "dm_over_m": spec.dm_over_m(),
            "delta_z": k.delta_z,
            "mean_v2": k.mean_v2,
            "oscillations": p.n,
            "tau": p.tau,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub axis: String,
    pub from: f64,
    pub to: f64,
    pub points: usize,
    pub format: String,
}

/// Everything needed to regenerate a run's outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub input: String,
    /// Canonical text of the resolved experiment.
    pub spec: String,
    pub engines: Vec<Engine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSettings>,
    /// Output directory, or the output file of a sweep.
    pub out: PathBuf,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn read(path: &Path) -> io::Result<RunManifest> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

/// Manifest location for an output: `manifest.json` inside a directory,
/// `<file>.manifest.json` next to a file.
pub fn manifest_path_for_file(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;
    use crate::observables::observables;

    #[test]
    fn float_format_round_trips() {
        for x in [0.0, -0.0, 1.0, 0.1, 1e-4, 9.99e-5, 1e15, 123456.789, -2.5e-22, 1e300, f64::MIN_POSITIVE] {
            let s = fmt_float(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_float(2.5e-22), "2.5e-22");
        assert_eq!(fmt_float(0.25), "0.25");
        assert_eq!(fmt_float(1e15), "1e15");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn headers_name_units() {
        assert_eq!(header("t", UnitMode::Si, Quantity::Physical(Dimension::Time)), "t[s]");
        assert_eq!(header("t", UnitMode::Reduced, Quantity::Physical(Dimension::Time)), "t[reduced]");
        assert_eq!(header("delta_d", UnitMode::Si, Quantity::Angle), "delta_d[rad]");
    }

    #[test]
    fn trajectory_table_is_continuous() {
        let s = presets::reduced_demo(0.01, 0.01);
        let run = crate::engine::run_engine(&s, Engine::Perturbative).unwrap();
        let text = String::from_utf8(trajectories_csv(&s, &run)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "arm,state,model,index,t[reduced],z[reduced],v[reduced]");
        let lower: Vec<&str> = lines.filter(|l| l.starts_with("lower,ground,bounce")).collect();
        assert_eq!(lower.len(), run.interferometer.lower.segments.len() + 1);
        let o = observables(&s, &run.phases);
        let doc = observables_document(&s, Engine::Perturbative, &o);
        assert_eq!(doc["derived"]["oscillations"], json!(10));
    }

    #[test]
    fn manifest_paths() {
        assert_eq!(manifest_path_for_file(Path::new("out/scan.csv")), Path::new("out/scan.csv.manifest.json"));
    }
}
