//! Subcommand runners and their report and trace formats.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::thread;

use anyhow::{anyhow, Context, Result};
use chanproj::{
    channel_ipf_tracking, complexity_c1, complexity_c2, compose, joint_ipf_tracking, ri_project,
    standard_joint_constraints, synergy_d2, Divergence, FamilySpec, LogBase, Measure, ProjectionResult,
    SweepRecord,
};
use serde::Serialize;
use serde_json::Value;

use crate::config::{BuiltinName, ConfigError, Overrides, Problem, ProblemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Project,
    Synergy,
    Complexity,
    Compare,
}

impl Command {
    fn uses_constraints(self) -> bool {
        matches!(self, Command::Project | Command::Compare)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunArgs {
    pub config: Option<PathBuf>,
    pub builtin: Option<BuiltinName>,
    pub output: Option<PathBuf>,
    pub trace_output: Option<PathBuf>,
    pub dump_config: bool,
    pub overrides: Overrides,
}

/// Exit status for an error: 2 when a scaling step could not be carried out,
/// 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<chanproj::Error>() {
            if matches!(
                e,
                chanproj::Error::InfeasibleScaling { .. }
                    | chanproj::Error::DegenerateRow { .. }
                    | chanproj::Error::DegenerateInput { .. }
            ) {
                return 2;
            }
        }
    }
    1
}

pub fn run(command: Command, args: &RunArgs) -> Result<()> {
    let mut cfg = match (&args.config, args.builtin) {
        (Some(path), None) => ProblemConfig::load(path)?,
        (None, Some(name)) => ProblemConfig::builtin(name, command.uses_constraints()),
        _ => return Err(ConfigError("give exactly one of --config and --builtin".into()).into()),
    };
    cfg.apply(&args.overrides)?;
    if args.dump_config {
        return emit(args.output.as_deref(), &cfg.to_json());
    }
    let problem = cfg.resolve()?;
    match command {
        Command::Project => project(&problem, args),
        Command::Synergy | Command::Complexity => {
            if !problem.specs.is_empty() {
                return Err(ConfigError("constraints: measures fix their own family; leave this empty".into()).into());
            }
            if !cfg.has_uniform_reference() {
                return Err(ConfigError("reference_channel: measures use the uniform reference".into()).into());
            }
            measure(command, &problem, args)
        }
        Command::Compare => compare(&problem, args),
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// A divergence in the requested unit; `"inf"` when infinite.
fn divergence_value(d: Divergence, base: LogBase) -> Value {
    match d {
        Divergence::Finite(_) => Value::from(d.in_base(base)),
        Divergence::Infinite => Value::from("inf"),
    }
}

fn fmt_opt(d: Option<Divergence>) -> String {
    match d {
        Some(Divergence::Finite(v)) => v.to_string(),
        Some(Divergence::Infinite) => "inf".into(),
        None => String::new(),
    }
}

fn trace_path(args: &RunArgs) -> PathBuf {
    if let Some(p) = &args.trace_output {
        return p.clone();
    }
    match &args.output {
        Some(out) => out.with_extension("trace.csv"),
        None => PathBuf::from("trace.csv"),
    }
}

/// Writes per-sweep records of one or more labelled runs.
fn write_trace(path: &Path, runs: &[(&str, &[SweepRecord])]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record([
        "sweep",
        "run",
        "divergence_from_prescription_nats",
        "divergence_to_target_nats",
        "residual_linf",
        "elapsed_ns",
    ])?;
    for (label, records) in runs {
        for r in records.iter() {
            w.write_record([
                r.sweep.to_string(),
                label.to_string(),
                fmt_opt(r.divergence_to_prescription),
                fmt_opt(r.divergence_to_target),
                r.residual.to_string(),
                r.elapsed_ns.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ProjectReport {
    divergence: Value,
    unit: &'static str,
    converged: bool,
    sweeps: usize,
    residual: f64,
    limit: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace_file: Option<String>,
}

fn project(problem: &Problem, args: &RunArgs) -> Result<()> {
    if problem.specs.is_empty() {
        return Err(ConfigError("constraints: at least one constraint is required".into()).into());
    }
    let opts = &problem.options;
    let r = ri_project(&problem.channel, &problem.specs, &problem.reference, &problem.input, opts)?;
    let trace_file = if opts.trace {
        let path = trace_path(args);
        write_trace(&path, &[("project", &r.projection.trace)])?;
        Some(path.display().to_string())
    } else {
        None
    };
    let report = ProjectReport {
        divergence: divergence_value(r.divergence, opts.log_base),
        unit: opts.log_base.unit(),
        converged: r.projection.converged,
        sweeps: r.projection.sweeps_used,
        residual: r.projection.residual,
        limit: r.limit().rows().map(|row| row.to_vec()).collect(),
        trace_file,
    };
    emit(args.output.as_deref(), &to_json(&report))
}

#[derive(Serialize)]
struct MeasureReport {
    measure: &'static str,
    value: Value,
    unit: &'static str,
    converged: bool,
    sweeps: usize,
    residual: f64,
}

impl MeasureReport {
    fn new(measure: &'static str, m: &Measure, base: LogBase) -> Self {
        MeasureReport {
            measure,
            value: divergence_value(m.value, base),
            unit: base.unit(),
            converged: m.projection.converged,
            sweeps: m.projection.sweeps_used,
            residual: m.projection.residual,
        }
    }
}

#[derive(Serialize)]
struct MeasuresReport {
    measures: Vec<MeasureReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace_file: Option<String>,
}

fn measure(command: Command, problem: &Problem, args: &RunArgs) -> Result<()> {
    let (p, k, opts) = (&problem.input, &problem.channel, &problem.options);
    let measures: Vec<(&'static str, Measure)> = if command == Command::Synergy {
        vec![("d2", synergy_d2(p, k, opts)?)]
    } else {
        vec![("c1", complexity_c1(p, k, opts)?), ("c2", complexity_c2(p, k, opts)?)]
    };
    let trace_file = if opts.trace {
        let path = trace_path(args);
        let runs: Vec<(&str, &[SweepRecord])> =
            measures.iter().map(|(name, m)| (*name, m.projection.trace.as_slice())).collect();
        write_trace(&path, &runs)?;
        Some(path.display().to_string())
    } else {
        None
    };
    let report = MeasuresReport {
        measures: measures.iter().map(|(name, m)| MeasureReport::new(name, m, opts.log_base)).collect(),
        trace_file,
    };
    emit(args.output.as_deref(), &to_json(&report))
}

#[derive(Serialize)]
struct RunSummary {
    converged: bool,
    sweeps: usize,
    residual: f64,
}

#[derive(Serialize)]
struct CompareReport {
    channel: RunSummary,
    joint: RunSummary,
    /// `max |p l - q|` between the two limits.
    limit_gap_linf: f64,
}

fn compare(problem: &Problem, args: &RunArgs) -> Result<()> {
    if problem.specs.is_empty() {
        return Err(ConfigError("constraints: at least one constraint is required".into()).into());
    }
    let (p, k, k0) = (&problem.input, &problem.channel, &problem.reference);
    let opts = chanproj::SolverOptions { trace: true, ..problem.options };
    let family = FamilySpec::new(problem.specs.clone(), k.clone())?;
    let constraints = standard_joint_constraints(p, &family)?;
    let q0 = compose(p, k0)?;
    let target = compose(p, k)?;

    let (ch, jt) = thread::scope(|s| {
        let ch = s.spawn(|| channel_ipf_tracking(k0, p, &family, &opts, Some(k)));
        let jt = s.spawn(|| joint_ipf_tracking(&q0, &constraints, &opts, Some(&target)));
        (ch.join(), jt.join())
    });
    let ch: ProjectionResult = ch.map_err(|_| anyhow!("channel solver panicked"))??;
    let jt = jt.map_err(|_| anyhow!("joint solver panicked"))??;

    // rows come out ordered by (method, sweep)
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["sweep", "method", "divergence_to_target_nats", "residual_linf", "elapsed_ns"])?;
    for (method, records) in [("channel", &ch.trace), ("joint", &jt.trace)] {
        for r in records {
            w.write_record([
                r.sweep.to_string(),
                method.to_string(),
                fmt_opt(r.divergence_to_target),
                r.residual.to_string(),
                r.elapsed_ns.to_string(),
            ])?;
        }
    }
    let csv_text = String::from_utf8(w.into_inner()?)?;

    let summary = CompareReport {
        limit_gap_linf: compose(p, &ch.limit)?.max_abs_diff(&jt.limit),
        channel: RunSummary { converged: ch.converged, sweeps: ch.sweeps_used, residual: ch.residual },
        joint: RunSummary { converged: jt.converged, sweeps: jt.sweeps_used, residual: jt.residual },
    };
    match &args.output {
        Some(path) => {
            emit(Some(path), &csv_text)?;
            emit(None, &to_json(&summary))
        }
        None => {
            emit(None, &csv_text)?;
            eprint!("{}", to_json(&summary));
            Ok(())
        }
    }
}
