//! Flat `key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment. Values are numbers,
//! double-quoted strings, `true`/`false`, or bracketed number lists.

use std::collections::BTreeMap;
use std::path::Path;

use ksgd_core::diagnostics::MonitorConfig;
use ksgd_core::experiments::{InitialKind, Scenario, PARAMETER_PATHS};
use ksgd_core::model::{ModelParams, SourceSpec, Tau};
use ksgd_core::solvers::{SolverConfig, TimeScheme};
use ksgd_core::GridSpec;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(String),
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Str(String),
    Bool(bool),
    List(Vec<f64>),
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Number(_) => "a number",
            Value::Str(_) => "a string",
            Value::Bool(_) => "a boolean",
            Value::List(_) => "a list",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: Value,
    pub line: usize,
}

/// Keys that are not numeric scenario parameters.
const OTHER_KEYS: &[&str] = &[
    "source.f",
    "source.g",
    "solver.scheme",
    "scenario.name",
    "scenario.u0.kind",
    "scenario.v0.kind",
    "diagnostics.p",
    "diagnostics.dense",
    "sweep.max_combinations",
    "sweep.threads",
];

const REQUIRED: &[&str] = &[
    "grid.n",
    "model.tau",
    "source.a",
    "source.b",
    "source.alpha",
    "source.beta",
    "source.c",
    "source.gamma",
];

fn is_known(key: &str) -> bool {
    if PARAMETER_PATHS.contains(&key) || OTHER_KEYS.contains(&key) {
        return true;
    }
    // sweep.axis.<i>.key / sweep.axis.<i>.values
    if let Some(rest) = key.strip_prefix("sweep.axis.") {
        if let Some((idx, field)) = rest.split_once('.') {
            return idx.parse::<usize>().is_ok() && (field == "key" || field == "values");
        }
    }
    false
}

fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '"' => in_str = !in_str,
            '#' if !in_str => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_number(text: &str) -> Option<f64> {
    let x: f64 = text.trim().parse().ok()?;
    x.is_finite().then_some(x)
}

fn parse_value(text: &str) -> Result<Value, String> {
    let text = text.trim();
    if text.is_empty() {
        return Err("missing value".into());
    }
    if let Some(inner) = text.strip_prefix('"') {
        let inner = inner
            .strip_suffix('"')
            .ok_or_else(|| "unterminated string".to_string())?;
        if inner.contains('"') {
            return Err("stray quote in string".into());
        }
        return Ok(Value::Str(inner.to_string()));
    }
    if let Some(inner) = text.strip_prefix('[') {
        let inner = inner
            .strip_suffix(']')
            .ok_or_else(|| "unterminated list".to_string())?;
        if inner.trim().is_empty() {
            return Ok(Value::List(Vec::new()));
        }
        return inner
            .split(',')
            .map(|item| parse_number(item).ok_or_else(|| format!("bad list item `{}`", item.trim())))
            .collect::<Result<_, _>>()
            .map(Value::List);
    }
    match text {
        "true" => return Ok(Value::Bool(true)),
        "false" => return Ok(Value::Bool(false)),
        _ => {}
    }
    parse_number(text)
        .map(Value::Number)
        .ok_or_else(|| format!("cannot parse value `{text}`"))
}

/// A parsed configuration file: every assignment with its line number.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, Entry>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = strip_comment(raw).trim();
            if body.is_empty() {
                continue;
            }
            let err = |msg: String| ConfigError::Line { line, msg };
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(err("empty key".into()));
            }
            if !is_known(key) {
                return Err(err(format!("unknown key `{key}`")));
            }
            let value = parse_value(value).map_err(err)?;
            let entry = Entry {
                key: key.to_string(),
                value,
                line,
            };
            if let Some(prev) = entries.insert(key.to_string(), entry) {
                return Err(err(format!("duplicate key `{key}` (first set on line {})", prev.line)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    pub fn entries(&self) -> impl Iterator<Item = &Entry> {
        self.entries.values()
    }

    fn number(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Entry {
                value: Value::Number(x),
                ..
            }) => Ok(Some(*x)),
            Some(e) => Err(type_error(e, "a number")),
        }
    }

    fn string(&self, key: &str) -> Result<Option<&str>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Entry {
                value: Value::Str(s),
                ..
            }) => Ok(Some(s)),
            Some(e) => Err(type_error(e, "a string")),
        }
    }

    fn numbers(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Entry {
                value: Value::List(xs),
                ..
            }) => Ok(Some(xs.clone())),
            Some(Entry {
                value: Value::Number(x),
                ..
            }) => Ok(Some(vec![*x])),
            Some(e) => Err(type_error(e, "a list of numbers")),
        }
    }

    fn line_err(&self, key: &str, msg: impl Into<String>) -> ConfigError {
        match self.get(key) {
            Some(e) => ConfigError::Line {
                line: e.line,
                msg: msg.into(),
            },
            None => ConfigError::Invalid(msg.into()),
        }
    }
}

fn type_error(entry: &Entry, expected: &str) -> ConfigError {
    ConfigError::Line {
        line: entry.line,
        msg: format!(
            "`{}` expects {expected}, got {}",
            entry.key,
            entry.value.type_name()
        ),
    }
}

/// Everything a run or sweep needs, built from a [`ConfigFile`].
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Scenario,
    /// `(parameter path, values)` in axis-index order.
    pub axes: Vec<(String, Vec<f64>)>,
    pub max_combinations: usize,
    pub threads: Option<usize>,
}

fn initial_kind(name: &str, side: f64) -> Option<InitialKind> {
    Some(match name {
        "constant" => InitialKind::Constant(1.0),
        "bump" | "gaussian" => InitialKind::GaussianBump {
            center: [0.5 * side, 0.5 * side],
            width: 0.1 * side,
            amplitude: 1.0,
            floor: 0.1,
        },
        "checkerboard" => InitialKind::Checkerboard {
            amplitude: 1.0,
            floor: 0.1,
        },
        "noise" => InitialKind::SeededNoise {
            seed: 0,
            floor: 0.1,
            amplitude: 1.0,
        },
        _ => return None,
    })
}

impl RunConfig {
    /// Builds the scenario and checks every model and solver invariant.
    pub fn from_file(file: &ConfigFile) -> Result<Self, ConfigError> {
        let cfg = Self::from_file_unchecked(file)?;
        let s = &cfg.scenario;
        s.params
            .check()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        s.cfg
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !s.u0.is_nonnegative() || !s.v0.as_ref().is_none_or(|k| k.is_nonnegative()) {
            return Err(ConfigError::Invalid("initial data must be nonnegative".into()));
        }
        Ok(cfg)
    }

    /// Builds the scenario without checking the source parameters, so that
    /// hypothesis checks can report on out-of-range sources.
    pub fn from_file_unchecked(file: &ConfigFile) -> Result<Self, ConfigError> {
        for key in REQUIRED {
            if file.get(key).is_none() {
                return Err(ConfigError::Missing(key.to_string()));
            }
        }
        for (key, expected) in [("source.f", "logistic"), ("source.g", "gradpower")] {
            if let Some(kind) = file.string(key)? {
                if kind != expected {
                    return Err(file.line_err(key, format!("`{key}` must be \"{expected}\", got \"{kind}\"")));
                }
            }
        }

        let grid = GridSpec::new(2, 3, 1.0).expect("placeholder grid");
        let params = ModelParams {
            chi: 1.0,
            tau: Tau::Elliptic,
            source: SourceSpec::logistic_gradpower(1.0, 1.0, 1.0, 2.0, 0.0, 2.0),
            c2: 1.0,
        };
        let mut scenario = Scenario {
            name: file.string("scenario.name")?.unwrap_or("run").to_string(),
            grid,
            params,
            cfg: SolverConfig::default(),
            monitors: MonitorConfig::default(),
            u0: InitialKind::Constant(1.0),
            v0: None,
        };

        let set = |s: &mut Scenario, key: &str| -> Result<(), ConfigError> {
            if let Some(x) = file.number(key)? {
                s.set_param(key, x)
                    .map_err(|e| file.line_err(key, e.to_string()))?;
            }
            Ok(())
        };

        for key in ["grid.dim", "grid.side", "grid.n"] {
            set(&mut scenario, key)?;
        }
        let side = scenario.grid.side();
        if let Some(kind) = file.string("scenario.u0.kind")? {
            scenario.u0 = initial_kind(kind, side).ok_or_else(|| {
                file.line_err("scenario.u0.kind", format!("unknown initial data kind \"{kind}\""))
            })?;
        }
        if let Some(kind) = file.string("scenario.v0.kind")? {
            scenario.v0 = Some(initial_kind(kind, side).ok_or_else(|| {
                file.line_err("scenario.v0.kind", format!("unknown initial data kind \"{kind}\""))
            })?);
        }
        for key in PARAMETER_PATHS {
            if !key.starts_with("grid.") {
                set(&mut scenario, key)?;
            }
        }

        if let Some(scheme) = file.string("solver.scheme")? {
            scenario.cfg.scheme = match scheme {
                "imex-euler" => TimeScheme::ImexEuler,
                "imex-ssp2" => TimeScheme::ImexSsp2,
                other => {
                    return Err(file.line_err(
                        "solver.scheme",
                        format!("unknown scheme \"{other}\" (expected \"imex-euler\" or \"imex-ssp2\")"),
                    ))
                }
            };
        }
        if let Some(ps) = file.numbers("diagnostics.p")? {
            if ps.is_empty() || ps.iter().any(|&p| !(p >= 1.0)) {
                return Err(file.line_err("diagnostics.p", "diagnostics.p needs values >= 1"));
            }
            scenario.monitors.p_list = ps;
        }
        match file.get("diagnostics.dense") {
            None => {}
            Some(Entry {
                value: Value::Bool(b),
                ..
            }) => scenario.monitors.dense = *b,
            Some(e) => return Err(type_error(e, "a boolean")),
        }

        let axes = collect_axes(file)?;
        let max_combinations = match file.number("sweep.max_combinations")? {
            None => 4096,
            Some(x) if x >= 1.0 && x.fract() == 0.0 => x as usize,
            Some(_) => {
                return Err(file.line_err(
                    "sweep.max_combinations",
                    "sweep.max_combinations must be a positive integer",
                ))
            }
        };
        let threads = match file.number("sweep.threads")? {
            None => None,
            Some(x) if x >= 1.0 && x.fract() == 0.0 => Some(x as usize),
            Some(_) => {
                return Err(file.line_err("sweep.threads", "sweep.threads must be a positive integer"))
            }
        };

        Ok(Self {
            scenario,
            axes,
            max_combinations,
            threads,
        })
    }
}

fn collect_axes(file: &ConfigFile) -> Result<Vec<(String, Vec<f64>)>, ConfigError> {
    let mut indices: Vec<usize> = file
        .entries()
        .filter_map(|e| e.key.strip_prefix("sweep.axis."))
        .filter_map(|rest| rest.split_once('.'))
        .filter_map(|(idx, _)| idx.parse().ok())
        .collect();
    indices.sort_unstable();
    indices.dedup();
    let mut axes = Vec::with_capacity(indices.len());
    for (expected, &idx) in indices.iter().enumerate() {
        let key_name = format!("sweep.axis.{idx}.key");
        let values_name = format!("sweep.axis.{idx}.values");
        if idx != expected {
            let any = file.get(&key_name).or_else(|| file.get(&values_name));
            return Err(ConfigError::Line {
                line: any.map_or(0, |e| e.line),
                msg: format!("sweep axes must be numbered from 0 without gaps; found axis {idx}, expected {expected}"),
            });
        }
        let path = file
            .string(&key_name)?
            .ok_or_else(|| ConfigError::Missing(key_name.clone()))?;
        if !PARAMETER_PATHS.contains(&path) {
            return Err(file.line_err(&key_name, format!("`{path}` is not a sweepable parameter")));
        }
        let values = file
            .numbers(&values_name)?
            .ok_or_else(|| ConfigError::Missing(values_name.clone()))?;
        if values.is_empty() {
            return Err(file.line_err(&values_name, "sweep axis needs at least one value"));
        }
        axes.push((path.to_string(), values));
    }
    Ok(axes)
}
