//! `clocksim` subcommands: validate, simulate, sweep, compare and replay.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::dsl::units::Dimension;
use crate::dsl::{parse_spec, render_diagnostics, to_dsl, SequenceSource, Validated};
use crate::engine::{run_engine, Engine, EngineError};
use crate::error::{exit, Error};
use crate::io::{
    fmt_float, header, ledger_document, manifest_path_for_file, observable_values, observables_document,
    to_json_bytes, trajectories_csv, write_atomic, Quantity, RunManifest, SweepSettings, OBSERVABLE_COLUMNS,
    TOOL, VERSION,
};
use crate::lattice::LatticeClockPhases;
use crate::model::{ExperimentSpec, UnitMode};
use crate::observables::{observables, Observables};
use crate::numeric::Dd;
use crate::phase::NonperturbativeReport;
use crate::trajectory::Arm;

/// Environment variable holding the sweep thread count.
pub const THREADS_ENV: &str = "CLOCKSIM_THREADS";

/// Allowed lattice-vs-bounce discrepancy, relative to the correction scale.
pub const LATTICE_TOLERANCE: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(name = "clocksim", version, about = "Clock-interferometer phase simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum SweepAxis {
    #[value(name = "T_B")]
    #[serde(rename = "T_B")]
    HoldTime,
    #[value(name = "omega")]
    #[serde(rename = "omega")]
    Omega,
    /// `omega - omega0`.
    #[value(name = "detuning")]
    #[serde(rename = "detuning")]
    Detuning,
    /// Arm separation, varied through `delta_v` at fixed `T`.
    #[value(name = "delta_z")]
    #[serde(rename = "delta_z")]
    DeltaZ,
    #[value(name = "delta_v")]
    #[serde(rename = "delta_v")]
    DeltaV,
    #[value(name = "T")]
    #[serde(rename = "T")]
    BraggTime,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::HoldTime => "T_B",
            SweepAxis::Omega => "omega",
            SweepAxis::Detuning => "detuning",
            SweepAxis::DeltaZ => "delta_z",
            SweepAxis::DeltaV => "delta_v",
            SweepAxis::BraggTime => "T",
        }
    }

    pub fn from_name(s: &str) -> Option<SweepAxis> {
        SweepAxis::value_variants().iter().copied().find(|a| a.name() == s)
    }

    pub fn dimension(self) -> Dimension {
        match self {
            SweepAxis::HoldTime | SweepAxis::BraggTime => Dimension::Time,
            SweepAxis::Omega | SweepAxis::Detuning => Dimension::Frequency,
            SweepAxis::DeltaZ => Dimension::Length,
            SweepAxis::DeltaV => Dimension::Velocity,
        }
    }

    /// The experiment at axis value `x`. Changes to `delta_v` or `T`
    /// re-derive `v0` so the apex stays at the start of the hold.
    pub fn apply(self, spec: &ExperimentSpec, x: f64) -> ExperimentSpec {
        match self {
            SweepAxis::HoldTime => spec.with_hold(x),
            SweepAxis::Omega => spec.with_omega(x),
            SweepAxis::Detuning => spec.with_omega(spec.species.omega0 + x),
            SweepAxis::DeltaZ => spec.with_delta_v(x / spec.timing.t),
            SweepAxis::DeltaV => spec.with_delta_v(x),
            SweepAxis::BraggTime => spec.with_bragg_time(x),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a sequence file and print its diagnostics.
    Validate { file: PathBuf },
    /// Run one engine and write trajectories, ledger, observables and manifest.
    Simulate {
        file: PathBuf,
        #[arg(long, default_value = "perturbative")]
        engine: Engine,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Observables over a range of one parameter.
    Sweep {
        file: PathBuf,
        #[arg(long, default_value = "perturbative")]
        engine: Engine,
        #[arg(long)]
        axis: SweepAxis,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Run all engines and check their clock phases against each other.
    Compare {
        file: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Regenerate the outputs recorded in a manifest.
    Replay {
        manifest: PathBuf,
        /// Write somewhere other than the recorded location.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Reads and validates a sequence file, printing warnings to `err`.
pub fn load(path: &Path, err: &mut dyn Write) -> Result<Validated, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_source(&SequenceSource::file(text, path.display().to_string()), err)
}

fn load_source(src: &SequenceSource, err: &mut dyn Write) -> Result<Validated, Error> {
    match parse_spec(src) {
        Ok(v) => {
            let _ = write!(err, "{}", render_diagnostics(src, &v.warnings));
            Ok(v)
        }
        Err(diags) => Err(Error::Spec(render_diagnostics(src, &diags).trim_end().to_string())),
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, Error> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Spec(format!("{THREADS_ENV} must be a non-negative integer, got '{v}'")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::Spec(format!("cannot start worker threads: {e}")))
}

/// Named output files of a simulate run, in write order.
pub fn simulate(spec: &ExperimentSpec, engine: Engine) -> Result<Vec<(&'static str, Vec<u8>)>, Error> {
    let run = run_engine(spec, engine)?;
    let obs = observables(spec, &run.phases);
    Ok(vec![
        ("trajectories.csv", trajectories_csv(spec, &run)),
        ("ledger.json", to_json_bytes(&ledger_document(&run))),
        ("observables.json", to_json_bytes(&observables_document(spec, engine, &obs))),
    ])
}

fn grid(from: f64, to: f64, n: usize) -> Result<Vec<f64>, Error> {
    let ok = from.is_finite() && to.is_finite() && n > 0 && (to > from || (n == 1 && to == from));
    if !ok {
        return Err(Error::Spec(format!("empty sweep range [{from}, {to}] with {n} points")));
    }
    Ok((0..n)
        .map(|i| match i {
            0 => from,
            _ if i + 1 == n => to,
            _ => from + (to - from) * (i as f64 / (n - 1) as f64),
        })
        .collect())
}

/// Observables at one axis value.
pub fn sweep_point(spec: &ExperimentSpec, engine: Engine, axis: SweepAxis, x: f64) -> Result<Observables, Error> {
    let s = axis.apply(spec, x);
    s.validate()
        .map_err(|e| Error::Spec(format!("{} = {}: {e}", axis.name(), fmt_float(x))))?;
    let run = run_engine(&s, engine)?;
    Ok(observables(&s, &run.phases))
}

/// Every point is computed independently; rows come back sorted by axis value.
pub fn sweep(
    spec: &ExperimentSpec,
    engine: Engine,
    axis: SweepAxis,
    range: (f64, f64),
    points: usize,
) -> Result<Vec<(f64, Observables)>, Error> {
    let xs = grid(range.0, range.1, points)?;
    let pool = thread_pool()?;
    let mut rows = pool.install(|| {
        xs.par_iter()
            .map(|&x| sweep_point(spec, engine, axis, x).map(|o| (x, o)))
            .collect::<Result<Vec<_>, _>>()
    })?;
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(rows)
}

pub fn sweep_bytes(spec: &ExperimentSpec, axis: SweepAxis, rows: &[(f64, Observables)], format: Format) -> Vec<u8> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut head = vec![header(axis.name(), spec.mode, Quantity::Physical(axis.dimension()))];
            head.extend(OBSERVABLE_COLUMNS.iter().map(|(n, q)| header(n, spec.mode, *q)));
            w.write_record(&head).expect("in-memory write");
            for (x, o) in rows {
                let mut r = vec![fmt_float(*x)];
                r.extend(observable_values(o).iter().map(|&v| fmt_float(v)));
                w.write_record(&r).expect("in-memory write");
            }
            w.into_inner().expect("in-memory flush")
        }
        Format::Json => {
            let arr: Vec<serde_json::Value> = rows
                .iter()
                .map(|(x, o)| {
                    let mut v = serde_json::to_value(o).expect("serializable");
                    v[axis.name()] = serde_json::json!(x);
                    v
                })
                .collect();
            to_json_bytes(&serde_json::json!({ "axis": axis.name(), "mode": spec.mode, "rows": arr }))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EngineSummary {
    pub engine: Engine,
    pub delta_d: f64,
    pub delta_u: f64,
    /// `delta - (omega - omega0) T_B`.
    pub correction_d: f64,
    pub correction_u: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairCheck {
    pub a: Engine,
    pub b: Engine,
    pub arm: Arm,
    pub measure: &'static str,
    pub absolute: f64,
    /// Discrepancy over the arm's correction scale.
    pub relative: f64,
    pub tolerance: f64,
    pub passes: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareReport {
    pub dm_over_m: f64,
    pub oscillations: u64,
    pub correction_scale_d: f64,
    pub correction_scale_u: f64,
    pub engines: Vec<EngineSummary>,
    pub checks: Vec<PairCheck>,
    pub nonperturbative: Option<NonperturbativeReport>,
    pub lattice: Option<LatticeClockPhases>,
    pub failures: Vec<String>,
    pub passes: bool,
}

/// `omega0 T_B (eps_k + g |<z>|/c^2)` for the lower and upper arm.
pub fn correction_scales(spec: &ExperimentSpec) -> (f64, f64) {
    let e = spec.epsilons();
    let w0t = spec.species.omega0 * spec.timing.t_b;
    (w0t * e.eps_k, w0t * (e.eps_k + e.eps_g.abs()))
}

fn relative(abs: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        abs / scale
    } else if abs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Runs the engines concurrently and checks them pairwise: perturbative
/// against the exact paths with the first-order and all-orders bounds, and
/// the lattice against both within [`LATTICE_TOLERANCE`] of the correction
/// scale. Engine failures are recorded, not raised.
pub fn compare(spec: &ExperimentSpec) -> Result<(CompareReport, Option<EngineError>), Error> {
    let pool = thread_pool()?;
    let runs: Vec<_> = pool.install(|| Engine::ALL.par_iter().map(|&e| run_engine(spec, e)).collect());
    let base = Dd::sum2(spec.timing.omega, -spec.species.omega0) * spec.timing.t_b;
    let mut engines = Vec::new();
    let mut failures = Vec::new();
    let mut first_error = None;
    let mut np = None;
    let mut lattice = None;
    for r in runs {
        match r {
            Ok(run) => {
                let (d, u) = (run.phases.delta_d.to_f64(), run.phases.delta_u.to_f64());
                engines.push(EngineSummary {
                    engine: run.engine,
                    delta_d: d,
                    delta_u: u,
                    correction_d: (run.phases.delta_d - base).to_f64(),
                    correction_u: (run.phases.delta_u - base).to_f64(),
                });
                if let Some(rep) = run.nonperturbative {
                    np = Some(rep);
                }
                if let Some(l) = run.lattice {
                    lattice = Some(l.phases);
                }
            }
            Err(e) => {
                failures.push(e.to_string());
                first_error.get_or_insert(e);
            }
        }
    }
    let (sd, su) = correction_scales(spec);
    let mut checks = Vec::new();
    for a in np.iter().flat_map(|r| [r.lower, r.upper]) {
        for (measure, value, bound) in [
            ("first_order", a.discrepancy_first_order, a.bound_first_order),
            ("all_orders", a.discrepancy_all_orders, a.bound_all_orders),
        ] {
            let scale = a.correction_scale;
            checks.push(PairCheck {
                a: Engine::Perturbative,
                b: Engine::Nonperturbative,
                arm: a.arm,
                measure,
                absolute: if scale > 0.0 { value * scale } else { value },
                relative: value,
                tolerance: bound,
                passes: value <= bound,
            });
        }
    }
    let find = |e: Engine| engines.iter().find(|s| s.engine == e).copied();
    if let Some(l) = find(Engine::LatticeOde) {
        for other in [Engine::Perturbative, Engine::Nonperturbative] {
            let Some(o) = find(other) else { continue };
            for (arm, x, y, scale) in [
                (Arm::Lower, o.correction_d, l.correction_d, sd),
                (Arm::Upper, o.correction_u, l.correction_u, su),
            ] {
                let abs = (x - y).abs();
                let rel = relative(abs, scale);
                checks.push(PairCheck {
                    a: other,
                    b: Engine::LatticeOde,
                    arm,
                    measure: "correction",
                    absolute: abs,
                    relative: rel,
                    tolerance: LATTICE_TOLERANCE,
                    passes: rel <= LATTICE_TOLERANCE,
                });
            }
        }
    }
    let passes = failures.is_empty() && checks.iter().all(|c| c.passes);
    Ok((
        CompareReport {
            dm_over_m: spec.dm_over_m(),
            oscillations: spec.partition().n,
            correction_scale_d: sd,
            correction_scale_u: su,
            engines,
            checks,
            nonperturbative: np,
            lattice,
            failures,
            passes,
        },
        first_error,
    ))
}

struct Ctx<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    write_atomic(path, bytes).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_manifest(path: &Path, mut m: RunManifest, started: Instant) -> Result<(), Error> {
    m.wall_clock_seconds = started.elapsed().as_secs_f64();
    write_file(path, &to_json_bytes(&m))
}

fn manifest(command: &str, input: &str, spec: &ExperimentSpec, engines: Vec<Engine>, out: &Path) -> RunManifest {
    RunManifest {
        tool: TOOL.to_string(),
        version: VERSION.to_string(),
        command: command.to_string(),
        input: input.to_string(),
        spec: to_dsl(spec),
        engines,
        sweep: None,
        out: out.to_path_buf(),
        outputs: Vec::new(),
        wall_clock_seconds: 0.0,
    }
}

fn cmd_validate(ctx: &mut Ctx, file: &Path) -> Result<(), Error> {
    let v = load(file, ctx.err)?;
    let p = v.spec.partition();
    let _ = writeln!(
        ctx.out,
        "{}: valid ({} mode, {} oscillations, dm/m = {})",
        file.display(),
        match v.spec.mode {
            UnitMode::Si => "si",
            UnitMode::Reduced => "reduced",
        },
        p.n,
        fmt_float(v.spec.dm_over_m())
    );
    Ok(())
}

fn do_simulate(ctx: &mut Ctx, input: &str, spec: &ExperimentSpec, engine: Engine, out: &Path) -> Result<(), Error> {
    let started = Instant::now();
    let files = simulate(spec, engine)?;
    ensure_dir(out)?;
    let mut m = manifest("simulate", input, spec, vec![engine], out);
    for (name, bytes) in &files {
        let p = out.join(name);
        write_file(&p, bytes)?;
        m.outputs.push(p);
    }
    write_manifest(&out.join("manifest.json"), m, started)?;
    let _ = writeln!(ctx.out, "{engine}: wrote {}", out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn do_sweep(
    ctx: &mut Ctx,
    input: &str,
    spec: &ExperimentSpec,
    engine: Engine,
    axis: SweepAxis,
    range: (f64, f64),
    points: usize,
    out: &Path,
    format: Format,
) -> Result<(), Error> {
    let started = Instant::now();
    let rows = sweep(spec, engine, axis, range, points)?;
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    write_file(out, &sweep_bytes(spec, axis, &rows, format))?;
    let mut m = manifest("sweep", input, spec, vec![engine], out);
    m.sweep = Some(SweepSettings {
        axis: axis.name().to_string(),
        from: range.0,
        to: range.1,
        points,
        format: match format {
            Format::Csv => "csv",
            Format::Json => "json",
        }
        .to_string(),
    });
    m.outputs.push(out.to_path_buf());
    write_manifest(&manifest_path_for_file(out), m, started)?;
    let _ = writeln!(ctx.out, "{} points over {}: wrote {}", rows.len(), axis.name(), out.display());
    Ok(())
}

fn do_compare(ctx: &mut Ctx, input: &str, spec: &ExperimentSpec, out: &Path) -> Result<(), Error> {
    let started = Instant::now();
    let (report, engine_error) = compare(spec)?;
    ensure_dir(out)?;
    let path = out.join("compare.json");
    write_file(&path, &to_json_bytes(&report))?;
    let mut m = manifest("compare", input, spec, Engine::ALL.to_vec(), out);
    m.outputs.push(path);
    write_manifest(&out.join("manifest.json"), m, started)?;
    for c in &report.checks {
        let _ = writeln!(
            ctx.out,
            "{} {} vs {} {:?} {}: {} (tolerance {})",
            if c.passes { "ok  " } else { "FAIL" },
            c.a,
            c.b,
            c.arm,
            c.measure,
            fmt_float(c.relative),
            fmt_float(c.tolerance)
        );
    }
    if let Some(e) = engine_error {
        return Err(Error::Engine(e));
    }
    if !report.passes {
        let n = report.checks.iter().filter(|c| !c.passes).count();
        return Err(Error::Tolerance(format!("{n} engine comparison(s) outside tolerance")));
    }
    Ok(())
}

fn cmd_replay(ctx: &mut Ctx, path: &Path, out: Option<PathBuf>) -> Result<(), Error> {
    let m = RunManifest::read(path).map_err(|e| Error::io(path, e))?;
    let src = SequenceSource::file(m.spec.clone(), format!("{} (manifest)", path.display()));
    let v = load_source(&src, ctx.err)?;
    let out = out.unwrap_or_else(|| m.out.clone());
    let engine = m.engines.first().copied().unwrap_or(Engine::Perturbative);
    match m.command.as_str() {
        "simulate" => do_simulate(ctx, &m.input, &v.spec, engine, &out),
        "compare" => do_compare(ctx, &m.input, &v.spec, &out),
        "sweep" => {
            let s = m
                .sweep
                .as_ref()
                .ok_or_else(|| Error::Spec("sweep manifest without sweep settings".into()))?;
            let axis = SweepAxis::from_name(&s.axis)
                .ok_or_else(|| Error::Spec(format!("unknown sweep axis '{}'", s.axis)))?;
            let format = Format::from_str(&s.format, false).map_err(Error::Spec)?;
            do_sweep(ctx, &m.input, &v.spec, engine, axis, (s.from, s.to), s.points, &out, format)
        }
        other => Err(Error::Spec(format!("cannot replay command '{other}'"))),
    }
}

fn dispatch(ctx: &mut Ctx, cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Validate { file } => cmd_validate(ctx, &file),
        Command::Simulate { file, engine, out } => {
            let v = load(&file, ctx.err)?;
            do_simulate(ctx, &file.display().to_string(), &v.spec, engine, &out)
        }
        Command::Sweep {
            file,
            engine,
            axis,
            from,
            to,
            points,
            out,
            format,
        } => {
            let v = load(&file, ctx.err)?;
            do_sweep(ctx, &file.display().to_string(), &v.spec, engine, axis, (from, to), points, &out, format)
        }
        Command::Compare { file, out } => {
            let v = load(&file, ctx.err)?;
            do_compare(ctx, &file.display().to_string(), &v.spec, &out)
        }
        Command::Replay { manifest, out } => cmd_replay(ctx, &manifest, out),
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::SPEC } else { exit::OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let mut ctx = Ctx { out, err };
    match dispatch(&mut ctx, cli.command) {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(ctx.err, "error: {e}");
            e.exit_code()
        }
    }
}
