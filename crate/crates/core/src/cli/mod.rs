//! Command-line front end: resolves a run specification, runs it, and writes
//! CSV or JSON.
//!
//! Exit status is 0 on success, 2 for an invalid specification and 3 for a
//! numerical failure.

mod output;
pub mod spec;

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::analysis::{self, Axis, ModelSpec, PointRecord, SweepOptions};
use crate::error::Error;
use crate::models::{model_a_gp_closed_form, model_b_reduced_bp};
use output::{csv_header, emit, num, opt, spec_json};
use spec::{Command, Format, Model, RunSpec, SpecError};

#[derive(Debug, Parser)]
#[command(
    name = "thermogp",
    version,
    about = "Geometric phases of spin-1/2 systems in thermal environments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Thermally diluted precessing spin at one temperature
    ModelA(RunArgs),
    /// Reduced Berry phase of spin 1 in the coupled pair
    ModelB(RunArgs),
    /// Damped spin in a static or rotating field at one bath occupation
    ModelC(RunArgs),
    /// Phase, overlap and Bloch radius over a T or nbar grid
    Sweep(RunArgs),
    /// Bloch vector at every sample of one period
    BlochPath(RunArgs),
    /// Bath occupation at which adiabaticity is lost
    Threshold(RunArgs),
}

/// Every parameter is accepted as text and validated after merging with the
/// preset and config file.
#[derive(Debug, Default, clap::Args)]
pub struct RunArgs {
    /// `key = value` file; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named parameter set (fig1 .. fig7b)
    #[arg(long)]
    pub preset: Option<String>,
    /// Output file (default stdout)
    #[arg(short, long)]
    pub output: Option<String>,
    /// csv or json
    #[arg(long)]
    pub format: Option<String>,
    /// model-a, model-b or model-c
    #[arg(long)]
    pub model: Option<String>,
    /// static or rotating (model-c)
    #[arg(long)]
    pub mode: Option<String>,
    /// Polar angle of the field, radians
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    #[arg(long)]
    pub omega0: Option<String>,
    /// Field magnitude
    #[arg(long = "B")]
    pub field: Option<String>,
    #[arg(long)]
    pub kappa: Option<String>,
    #[arg(long)]
    pub epsilon: Option<String>,
    /// Energy gap (model-a)
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long, visible_alias = "T")]
    pub temperature: Option<String>,
    /// Mean bath occupation (model-c)
    #[arg(long)]
    pub nbar: Option<String>,
    /// Eigenbranch 1..4 (model-b)
    #[arg(long)]
    pub branch: Option<String>,
    /// Segments per period
    #[arg(long, visible_alias = "M")]
    pub samples: Option<String>,
    /// T or nbar
    #[arg(long)]
    pub axis: Option<String>,
    /// start:stop:points
    #[arg(long)]
    pub grid: Option<String>,
    /// Check each point against a run with twice the samples (true/false)
    #[arg(long)]
    pub convergence: Option<String>,
    /// overlap or phase-zero
    #[arg(long)]
    pub criterion: Option<String>,
    /// W below which adiabaticity counts as lost
    #[arg(long)]
    pub w_threshold: Option<String>,
    /// Coarse scan spacing in nbar
    #[arg(long)]
    pub step: Option<String>,
    #[arg(long)]
    pub nbar_max: Option<String>,
    /// Bisection target width in nbar
    #[arg(long)]
    pub resolution: Option<String>,
}

impl RunArgs {
    fn flags(&self) -> Vec<(&'static str, String)> {
        let all: [(&'static str, &Option<String>); 22] = [
            ("output", &self.output),
            ("format", &self.format),
            ("model", &self.model),
            ("mode", &self.mode),
            ("theta", &self.theta),
            ("omega0", &self.omega0),
            ("B", &self.field),
            ("kappa", &self.kappa),
            ("epsilon", &self.epsilon),
            ("delta", &self.delta),
            ("temperature", &self.temperature),
            ("nbar", &self.nbar),
            ("branch", &self.branch),
            ("samples", &self.samples),
            ("axis", &self.axis),
            ("grid", &self.grid),
            ("convergence", &self.convergence),
            ("criterion", &self.criterion),
            ("w_threshold", &self.w_threshold),
            ("step", &self.step),
            ("nbar_max", &self.nbar_max),
            ("resolution", &self.resolution),
        ];
        all.into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k, v.clone())))
            .collect()
    }
}

#[derive(Debug)]
pub enum CliError {
    Spec(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spec(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Spec(m) => write!(f, "invalid specification: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        CliError::Spec(e.0)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Spec(e.to_string())
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let (command, args) = match &cli.command {
        Sub::ModelA(a) => (Command::ModelA, a),
        Sub::ModelB(a) => (Command::ModelB, a),
        Sub::ModelC(a) => (Command::ModelC, a),
        Sub::Sweep(a) => (Command::Sweep, a),
        Sub::BlochPath(a) => (Command::BlochPath, a),
        Sub::Threshold(a) => (Command::Threshold, a),
    };
    let spec = RunSpec::resolve(
        command,
        args.preset.as_deref(),
        args.config.as_deref(),
        &args.flags(),
    )?;
    execute(&spec)
}

/// Runs a resolved specification and writes its output.
pub fn execute(spec: &RunSpec) -> CliResult<()> {
    let model = spec.model()?;
    spec.check_keys(&spec.allowed_keys(model))?;
    let format = spec.format()?;
    let content = match spec.command {
        Command::ModelA | Command::ModelB | Command::ModelC => single_point(spec, model, format)?,
        Command::Sweep => sweep(spec, model, format)?,
        Command::BlochPath => bloch_path(spec, model, format)?,
        Command::Threshold => threshold(spec, model, format)?,
    };
    let out = spec.output();
    emit(out.as_deref(), &content).map_err(|e| {
        CliError::Io(format!(
            "cannot write {}: {e}",
            out.map(|p| p.display().to_string())
                .unwrap_or_else(|| "stdout".into())
        ))
    })
}

fn warn_adiabaticity(model: &ModelSpec) {
    if let ModelSpec::ModelC { params } = model {
        if let Some(w) = params.adiabaticity_warning() {
            eprintln!("warning: {w}");
        }
    }
}

fn axis_value(model: &ModelSpec) -> (Axis, f64) {
    match model {
        ModelSpec::ModelA { params, .. } => (Axis::Temperature, params.temperature),
        ModelSpec::ModelB { params, .. } => (Axis::Temperature, params.temperature),
        ModelSpec::ModelC { params } => (Axis::Nbar, params.bath.nbar),
    }
}

fn records_csv(spec: &RunSpec, axis: Axis, records: &[PointRecord]) -> String {
    let mut out = csv_header(spec);
    let _ = writeln!(out, "{},phi_rad,W,r_final,converged", axis.name());
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            num(Some(r.value)),
            num(r.phi),
            num(r.w),
            num(r.r_final),
            r.converged
        );
    }
    out
}

fn record_json(r: &PointRecord) -> serde_json::Value {
    json!({
        "value": r.value,
        "phi_rad": opt(r.phi),
        "W": opt(r.w),
        "r_final": opt(r.r_final),
        "converged": r.converged,
        "diagnostic": r.diagnostic,
    })
}

fn single_point(spec: &RunSpec, model: Model, format: Format) -> CliResult<String> {
    let model_spec = spec.model_spec(model, None)?;
    warn_adiabaticity(&model_spec);
    let (axis, value) = axis_value(&model_spec);
    let result = analysis::sweep(&model_spec, axis, &[value], SweepOptions::default())?;
    let record = &result.records[0];
    if record.phi.is_none() {
        return Err(CliError::Numerical(
            record
                .diagnostic
                .clone()
                .unwrap_or_else(|| "phase undefined".into()),
        ));
    }
    if !record.converged {
        if let Some(d) = &record.diagnostic {
            eprintln!("warning: not converged: {d}");
        }
    }
    Ok(match format {
        Format::Csv => records_csv(spec, axis, &result.records),
        Format::Json => {
            let mut doc = json!({ "spec": spec_json(spec), "axis": axis.name() });
            doc["record"] = record_json(record);
            match &model_spec {
                ModelSpec::ModelA { params, .. } => {
                    doc["phi_closed_form"] = opt(model_a_gp_closed_form(params).ok().map(|a| a.value()));
                }
                ModelSpec::ModelB { params, segments } => {
                    let r = model_b_reduced_bp(params, *segments)?;
                    doc["phi_lifted"] = json!(r.lifted);
                    doc["weights"] = json!(r.weights);
                    doc["schmidt_phases"] = json!(r.schmidt_phases);
                }
                ModelSpec::ModelC { .. } => {}
            }
            pretty(&doc)
        }
    })
}

fn pretty(doc: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn sweep(spec: &RunSpec, model: Model, format: Format) -> CliResult<String> {
    let axis = spec.axis(model)?;
    let grid = spec.grid()?;
    let model_spec = spec.model_spec(model, Some(axis))?;
    warn_adiabaticity(&model_spec);
    let opts = SweepOptions {
        check_convergence: spec.bool_or("convergence", true)?,
    };
    let result = analysis::sweep(&model_spec, axis, &grid, opts)?;
    let failed = result.records.iter().filter(|r| !r.converged).count();
    if failed > 0 {
        eprintln!(
            "warning: {failed} of {} points not converged",
            result.records.len()
        );
    }
    Ok(match format {
        Format::Csv => records_csv(spec, axis, &result.records),
        Format::Json => pretty(&json!({
            "spec": spec_json(spec),
            "axis": axis.name(),
            "records": result.records.iter().map(record_json).collect::<Vec<_>>(),
        })),
    })
}

fn bloch_path(spec: &RunSpec, model: Model, format: Format) -> CliResult<String> {
    if model == Model::B {
        return Err(CliError::Spec(
            "`bloch-path` needs a single-spin trajectory: use model-a or model-c".into(),
        ));
    }
    let model_spec = spec.model_spec(model, None)?;
    warn_adiabaticity(&model_spec);
    let traj = model_spec.trajectory()?;
    let points = analysis::bloch_path(&traj)?;
    Ok(match format {
        Format::Csv => {
            let mut out = csv_header(spec);
            out.push_str("t,x,y,z,r\n");
            for (t, b) in traj.times().iter().zip(&points) {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    num(Some(*t)),
                    num(Some(b.x)),
                    num(Some(b.y)),
                    num(Some(b.z)),
                    num(Some(b.norm()))
                );
            }
            out
        }
        Format::Json => pretty(&json!({
            "spec": spec_json(spec),
            "points": traj.times().iter().zip(&points).map(|(t, b)| json!({
                "t": t, "x": b.x, "y": b.y, "z": b.z, "r": b.norm(),
            })).collect::<Vec<_>>(),
        })),
    })
}

fn threshold(spec: &RunSpec, model: Model, format: Format) -> CliResult<String> {
    if model != Model::C {
        return Err(CliError::Spec(
            "`threshold` scans the bath occupation: use model-c".into(),
        ));
    }
    let (criterion, opts) = spec.threshold_settings()?;
    let kappas = spec.kappa_list()?;
    let mut results = Vec::new();
    for &kappa in &kappas {
        let mut single = spec.clone();
        single.params.insert("kappa".into(), kappa.to_string());
        let ModelSpec::ModelC { params } = single.model_spec(model, None)? else {
            unreachable!("model-c spec");
        };
        warn_adiabaticity(&ModelSpec::ModelC { params });
        results.push((kappa, analysis::threshold_nbar_ad(&params, criterion, opts)?));
    }
    for (kappa, r) in &results {
        if r.nbar_ad.is_none() {
            eprintln!(
                "note: no threshold found for kappa = {kappa} in [0, {}]",
                opts.nbar_max
            );
        }
    }
    let criterion_name = match criterion {
        analysis::ThresholdCriterion::Overlap { .. } => "overlap",
        analysis::ThresholdCriterion::PhaseZero => "phase-zero",
    };
    Ok(match format {
        Format::Csv => {
            let mut out = csv_header(spec);
            out.push_str("kappa,nbar_ad,bracket_lo,bracket_hi\n");
            for (kappa, r) in &results {
                let (lo, hi) = r.bracket.map_or((None, None), |(a, b)| (Some(a), Some(b)));
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    num(Some(*kappa)),
                    num(r.nbar_ad),
                    num(lo),
                    num(hi)
                );
            }
            out
        }
        Format::Json => {
            let entries: Vec<_> = results
                .iter()
                .map(|(kappa, r)| {
                    json!({
                        "kappa": kappa,
                        "nbar_ad": opt(r.nbar_ad),
                        "bracket": r.bracket.map(|(a, b)| vec![a, b]),
                        "scan": r.scan.iter().map(|p| json!({
                            "nbar": p.nbar, "phi_rad": opt(p.phi), "W": opt(p.w),
                        })).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let mut doc = json!({
                "spec": spec_json(spec),
                "criterion": criterion_name,
                "results": entries,
            });
            if let [(_, r)] = results.as_slice() {
                doc["nbar_ad"] = opt(r.nbar_ad);
                doc["bracket"] = json!(r.bracket.map(|(a, b)| vec![a, b]));
            }
            pretty(&doc)
        }
    })
}
