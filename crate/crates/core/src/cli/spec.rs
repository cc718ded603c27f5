use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{Axis, ModelSpec, ThresholdCriterion, ThresholdOptions};
use crate::gp::DEFAULT_SAMPLES;
use crate::lindblad::{BathParams, FieldMode, ModelCParams};
use crate::models::{ModelAParams, ModelBParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    ModelA,
    ModelB,
    ModelC,
    Sweep,
    BlochPath,
    Threshold,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::ModelA => "model-a",
            Command::ModelB => "model-b",
            Command::ModelC => "model-c",
            Command::Sweep => "sweep",
            Command::BlochPath => "bloch-path",
            Command::Threshold => "threshold",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    A,
    B,
    C,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::A => "model-a",
            Model::B => "model-b",
            Model::C => "model-c",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Model::A => &["theta", "omega0", "epsilon", "delta", "temperature", "samples"],
            Model::B => &[
                "kappa",
                "theta",
                "omega0",
                "B",
                "epsilon",
                "temperature",
                "branch",
                "samples",
            ],
            Model::C => &[
                "mode",
                "theta",
                "omega0",
                "B",
                "kappa",
                "nbar",
                "temperature",
                "samples",
            ],
        }
    }
}

/// Invalid run specification. Always names the key at fault when there is one.
#[derive(Clone, Debug, PartialEq)]
pub struct SpecError(pub String);

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for SpecError {}

type SpecResult<T> = std::result::Result<T, SpecError>;

fn err<T>(msg: impl Into<String>) -> SpecResult<T> {
    Err(SpecError(msg.into()))
}

pub const KEYS: &[&str] = &[
    "model",
    "mode",
    "theta",
    "omega0",
    "B",
    "kappa",
    "epsilon",
    "delta",
    "temperature",
    "nbar",
    "branch",
    "samples",
    "axis",
    "grid",
    "criterion",
    "w_threshold",
    "step",
    "nbar_max",
    "resolution",
    "convergence",
    "format",
    "output",
];

/// Maps accepted spellings to the canonical key.
pub fn canonical_key(key: &str) -> Option<&'static str> {
    let key = match key {
        "T" => "temperature",
        "M" => "samples",
        "w-threshold" => "w_threshold",
        "nbar-max" => "nbar_max",
        other => other,
    };
    KEYS.iter().copied().find(|k| *k == key)
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> SpecResult<BTreeMap<String, String>> {
    let mut out: BTreeMap<String, String> = BTreeMap::new();
    let mut seen_at: BTreeMap<&'static str, usize> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return err(format!("line {line_no}: expected `key = value`, got `{line}`"));
        };
        let (k, v) = (k.trim(), v.trim());
        let Some(key) = canonical_key(k) else {
            return err(format!("line {line_no}: unknown key `{k}`"));
        };
        if v.is_empty() {
            return err(format!("line {line_no}: key `{key}` has no value"));
        }
        if let Some(first) = seen_at.insert(key, line_no) {
            if out.get(key).map(String::as_str) != Some(v) {
                return err(format!(
                    "line {line_no}: key `{key}` conflicts with its earlier value on line {first}"
                ));
            }
        }
        out.insert(key.to_string(), v.to_string());
    }
    Ok(out)
}

pub fn load_config(path: &Path) -> SpecResult<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SpecError(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| SpecError(format!("{}: {}", path.display(), e.0)))
}

const PI_4: &str = "0.785398163397448";
const PI_2: &str = "1.570796326794897";
const PI_3_4: &str = "2.356194490192345";

/// Named parameter sets.
pub fn preset(name: &str) -> Option<(Command, Vec<(&'static str, &'static str)>)> {
    let rotating = [
        ("model", "model-c"),
        ("mode", "rotating"),
        ("B", "1000"),
        ("omega0", "2"),
    ];
    let p = match name {
        "fig1" => (
            Command::Sweep,
            vec![
                ("model", "model-a"),
                ("theta", "1.0"),
                ("epsilon", "0.333333333333333"),
                ("delta", "1"),
                ("omega0", "1"),
                ("axis", "T"),
                ("grid", "0.1:6:60"),
            ],
        ),
        "fig2" => (
            Command::Sweep,
            vec![
                ("model", "model-b"),
                ("kappa", "2"),
                ("theta", PI_4),
                ("epsilon", "0.1"),
                ("branch", "1"),
                ("B", "2"),
                ("omega0", "1"),
                ("axis", "T"),
                ("grid", "0.05:5:100"),
            ],
        ),
        "fig3" => (
            Command::Sweep,
            vec![
                ("model", "model-b"),
                ("kappa", "2"),
                ("theta", PI_4),
                ("epsilon", "0.3"),
                ("branch", "1"),
                ("B", "2"),
                ("omega0", "1"),
                ("axis", "T"),
                ("grid", "0.05:5:100"),
            ],
        ),
        "fig4a" | "fig4b" => (
            Command::Sweep,
            vec![
                ("model", "model-c"),
                ("mode", "static"),
                ("theta", if name == "fig4a" { PI_2 } else { PI_3_4 }),
                ("omega0", "2"),
                ("kappa", "0.05"),
                ("axis", "nbar"),
                ("grid", "0:20:81"),
            ],
        ),
        "fig5" => (
            Command::BlochPath,
            [
                rotating.as_slice(),
                &[("theta", PI_2), ("kappa", "0.01"), ("nbar", "80")],
            ]
            .concat(),
        ),
        "fig6" => (
            Command::Sweep,
            [
                rotating.as_slice(),
                &[
                    ("theta", PI_4),
                    ("kappa", "0.001"),
                    ("axis", "nbar"),
                    ("grid", "0:20:81"),
                ],
            ]
            .concat(),
        ),
        "fig7a" => (
            Command::Sweep,
            [
                rotating.as_slice(),
                &[
                    ("theta", PI_4),
                    ("kappa", "0.005"),
                    ("axis", "nbar"),
                    ("grid", "0:100:401"),
                ],
            ]
            .concat(),
        ),
        "fig7b" => (
            Command::Threshold,
            [
                rotating.as_slice(),
                &[
                    ("theta", PI_4),
                    ("kappa", "0.002,0.005,0.01"),
                    ("nbar_max", "400"),
                ],
            ]
            .concat(),
        ),
        _ => return None,
    };
    Some(p)
}

pub const PRESETS: &[&str] = &[
    "fig1", "fig2", "fig3", "fig4a", "fig4b", "fig5", "fig6", "fig7a", "fig7b",
];

/// A fully merged run specification.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub command: Command,
    pub params: BTreeMap<String, String>,
}

impl RunSpec {
    /// Merges preset, config file and flags, later sources winning.
    pub fn resolve(
        command: Command,
        preset_name: Option<&str>,
        config: Option<&Path>,
        flags: &[(&'static str, String)],
    ) -> SpecResult<RunSpec> {
        let mut params = BTreeMap::new();
        if let Some(name) = preset_name {
            let Some((cmd, values)) = preset(name) else {
                return err(format!("unknown preset `{name}` (known: {})", PRESETS.join(", ")));
            };
            if cmd != command {
                return err(format!("preset `{name}` belongs to the `{}` command", cmd.name()));
            }
            for (k, v) in values {
                params.insert(k.to_string(), v.to_string());
            }
        }
        if let Some(path) = config {
            params.extend(load_config(path)?);
        }
        for (k, v) in flags {
            params.insert(k.to_string(), v.clone());
        }
        Ok(RunSpec { command, params })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    pub fn f64(&self, key: &str) -> SpecResult<Option<f64>> {
        self.get(key).map(|v| parse_f64(key, v)).transpose()
    }

    pub fn require_f64(&self, key: &str) -> SpecResult<f64> {
        self.f64(key)?
            .ok_or_else(|| SpecError(format!("missing required key `{key}`")))
    }

    fn f64_or(&self, key: &str, default: f64) -> SpecResult<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    fn usize(&self, key: &str) -> SpecResult<Option<usize>> {
        self.get(key)
            .map(|v| {
                v.parse::<usize>().map_err(|_| {
                    SpecError(format!(
                        "invalid value for `{key}`: `{v}` is not a non-negative integer"
                    ))
                })
            })
            .transpose()
    }

    pub fn bool_or(&self, key: &str, default: bool) -> SpecResult<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => err(format!("invalid value for `{key}`: `{v}` is not a boolean")),
        }
    }

    pub fn output(&self) -> Option<PathBuf> {
        self.get("output").map(PathBuf::from)
    }

    pub fn format(&self) -> SpecResult<Format> {
        let default = if self.command == Command::Threshold {
            Format::Json
        } else {
            Format::Csv
        };
        match self.get("format") {
            None => Ok(default),
            Some("csv") => Ok(Format::Csv),
            Some("json") => Ok(Format::Json),
            Some(v) => err(format!(
                "invalid value for `format`: `{v}` (expected csv or json)"
            )),
        }
    }

    /// Rejects keys that the command and model do not use.
    pub fn check_keys(&self, allowed: &[&str]) -> SpecResult<()> {
        for key in self.params.keys() {
            if !allowed.contains(&key.as_str()) && !["format", "output"].contains(&key.as_str()) {
                return err(format!("key `{key}` does not apply to `{}`", self.context()));
            }
        }
        Ok(())
    }

    fn context(&self) -> String {
        match (self.command, self.get("model")) {
            (Command::Sweep | Command::BlochPath | Command::Threshold, Some(m)) => {
                format!("{} --model {m}", self.command.name())
            }
            _ => self.command.name().to_string(),
        }
    }

    pub fn model(&self) -> SpecResult<Model> {
        let fixed = match self.command {
            Command::ModelA => Some(Model::A),
            Command::ModelB => Some(Model::B),
            Command::ModelC => Some(Model::C),
            _ => None,
        };
        match (fixed, self.get("model")) {
            (Some(m), None) => Ok(m),
            (Some(m), Some(v)) if v == m.name() => Ok(m),
            (Some(m), Some(v)) => err(format!("`model` is `{v}` but the command is `{}`", m.name())),
            (None, Some("model-a")) => Ok(Model::A),
            (None, Some("model-b")) => Ok(Model::B),
            (None, Some("model-c")) => Ok(Model::C),
            (None, None) if self.command == Command::Threshold => Ok(Model::C),
            (None, None) => err("missing required key `model`"),
            (None, Some(v)) => err(format!(
                "invalid value for `model`: `{v}` (expected model-a, model-b or model-c)"
            )),
        }
    }

    pub fn axis(&self, model: Model) -> SpecResult<Axis> {
        match self.get("axis") {
            None if model == Model::C => Ok(Axis::Nbar),
            None => Ok(Axis::Temperature),
            Some("T" | "temperature") => Ok(Axis::Temperature),
            Some("nbar") => Ok(Axis::Nbar),
            Some(v) => err(format!("invalid value for `axis`: `{v}` (expected T or nbar)")),
        }
    }

    /// `start:stop:points`
    pub fn grid(&self) -> SpecResult<Vec<f64>> {
        let Some(v) = self.get("grid") else {
            return err("missing required key `grid`");
        };
        let parts: Vec<&str> = v.split(':').collect();
        if parts.len() != 3 {
            return err(format!(
                "invalid value for `grid`: `{v}` (expected start:stop:points)"
            ));
        }
        let start = parse_f64("grid", parts[0])?;
        let stop = parse_f64("grid", parts[1])?;
        let points: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| SpecError(format!("invalid value for `grid`: point count `{}`", parts[2])))?;
        if points == 0 || (points > 1 && !(stop > start)) {
            return err(format!(
                "invalid value for `grid`: `{v}` must have stop > start and points >= 1"
            ));
        }
        Ok(crate::analysis::linspace(start, stop, points))
    }

    /// The model at a single point. `axis` names the variable a sweep will
    /// overwrite, so it need not be present.
    pub fn model_spec(&self, model: Model, axis: Option<Axis>) -> SpecResult<ModelSpec> {
        let swept = |a: Axis| axis == Some(a);
        let temperature = |spec: &Self| -> SpecResult<f64> {
            if swept(Axis::Temperature) {
                spec.f64_or("temperature", 1.0)
            } else {
                spec.require_f64("temperature")
            }
        };
        let samples = self.usize("samples")?;
        if samples.is_some_and(|m| m < 2) {
            return err("invalid value for `samples`: need at least 2");
        }
        let spec = match model {
            Model::A => {
                let params = ModelAParams {
                    theta: self.require_f64("theta")?,
                    omega0: self.f64_or("omega0", 1.0)?,
                    epsilon: self.require_f64("epsilon")?,
                    delta: self.require_f64("delta")?,
                    temperature: temperature(self)?,
                };
                named(params.validate())?;
                ModelSpec::ModelA {
                    params,
                    segments: samples.unwrap_or(DEFAULT_SAMPLES),
                }
            }
            Model::B => {
                let branch = self.usize("branch")?.unwrap_or(1);
                let params = ModelBParams {
                    kappa: self.require_f64("kappa")?,
                    theta: self.require_f64("theta")?,
                    omega0: self.f64_or("omega0", 1.0)?,
                    field: self.f64_or("B", 2.0)?,
                    epsilon: self.f64_or("epsilon", 0.0)?,
                    temperature: temperature(self)?,
                    branch,
                };
                named(params.validate())?;
                ModelSpec::ModelB {
                    params,
                    segments: samples.unwrap_or(DEFAULT_SAMPLES),
                }
            }
            Model::C => {
                let mode = match self.get("mode") {
                    None | Some("rotating") => FieldMode::Rotating,
                    Some("static") => FieldMode::Static,
                    Some(v) => {
                        return err(format!(
                            "invalid value for `mode`: `{v}` (expected static or rotating)"
                        ))
                    }
                };
                let kappa = self.require_f64("kappa")?;
                let omega0 = self.require_f64("omega0")?;
                let field = match mode {
                    FieldMode::Rotating => self.require_f64("B")?,
                    FieldMode::Static => {
                        if self.get("B").is_some() {
                            return err(
                                "key `B` does not apply to static mode (the field is omega0/2 along z)",
                            );
                        }
                        omega0
                    }
                };
                let nbar = match (self.f64("nbar")?, self.f64("temperature")?) {
                    (Some(_), Some(_)) => return err("give `nbar` or `temperature`, not both"),
                    (Some(n), None) => n,
                    (None, Some(t)) => crate::lindblad::nbar_from_temperature(omega0, t)
                        .map_err(|e| SpecError(format!("invalid value for `temperature`: {e}")))?,
                    (None, None) if axis.is_some() || self.command == Command::Threshold => 0.0,
                    (None, None) => return err("missing required key `nbar` (or `temperature`)"),
                };
                let bath = BathParams::new(kappa, omega0, nbar).map_err(|e| SpecError(e.to_string()))?;
                let params = ModelCParams {
                    field,
                    theta: self.require_f64("theta")?,
                    bath,
                    mode,
                    samples,
                };
                named(params.validate())?;
                ModelSpec::ModelC { params }
            }
        };
        Ok(spec)
    }

    pub fn threshold_settings(&self) -> SpecResult<(ThresholdCriterion, ThresholdOptions)> {
        let defaults = ThresholdOptions::default();
        let opts = ThresholdOptions {
            step: self.f64_or("step", defaults.step)?,
            nbar_max: self.f64_or("nbar_max", defaults.nbar_max)?,
            resolution: self.f64_or("resolution", defaults.resolution)?,
        };
        for (k, v) in [
            ("step", opts.step),
            ("nbar_max", opts.nbar_max),
            ("resolution", opts.resolution),
        ] {
            if !(v > 0.0) {
                return err(format!("invalid value for `{k}`: must be positive, got {v}"));
            }
        }
        let criterion = match self.get("criterion") {
            None | Some("overlap") => {
                let threshold = self.f64_or("w_threshold", 0.05)?;
                if !(0.0..=1.0).contains(&threshold) {
                    return err(format!(
                        "invalid value for `w_threshold`: must lie in [0, 1], got {threshold}"
                    ));
                }
                ThresholdCriterion::Overlap { threshold }
            }
            Some("phase-zero") => {
                if self.get("w_threshold").is_some() {
                    return err("key `w_threshold` does not apply to criterion phase-zero");
                }
                ThresholdCriterion::PhaseZero
            }
            Some(v) => {
                return err(format!(
                    "invalid value for `criterion`: `{v}` (expected overlap or phase-zero)"
                ))
            }
        };
        Ok((criterion, opts))
    }

    /// `kappa` for `threshold` may be a comma-separated list.
    pub fn kappa_list(&self) -> SpecResult<Vec<f64>> {
        let Some(v) = self.get("kappa") else {
            return err("missing required key `kappa`");
        };
        v.split(',').map(|s| parse_f64("kappa", s)).collect()
    }

    pub fn allowed_keys(&self, model: Model) -> Vec<&'static str> {
        let mut keys: Vec<&'static str> = model.keys().to_vec();
        match self.command {
            Command::ModelA | Command::ModelB | Command::ModelC => {}
            Command::Sweep => keys.extend(["model", "axis", "grid", "convergence"]),
            Command::BlochPath => keys.push("model"),
            Command::Threshold => {
                keys.retain(|k| !["nbar", "temperature"].contains(k));
                keys.extend([
                    "model",
                    "criterion",
                    "w_threshold",
                    "step",
                    "nbar_max",
                    "resolution",
                ]);
            }
        }
        keys
    }
}

fn parse_f64(key: &str, v: &str) -> SpecResult<f64> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| SpecError(format!("invalid value for `{key}`: `{v}` is not a number")))?;
    if !x.is_finite() {
        return err(format!("invalid value for `{key}`: `{v}` is not finite"));
    }
    Ok(x)
}

/// Converts a library validation error into a [`SpecError`].
fn named(r: crate::Result<()>) -> SpecResult<()> {
    r.map_err(|e| SpecError(e.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}
