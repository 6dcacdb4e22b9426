//! Run configuration, its canonical echo and the derived sampling seed.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};

use weylpinch::forms::Orientation;
use weylpinch::metric::{parse_metric_spec, ChartMetric, DerivativeBackend, DIM};
use weylpinch::models::{builtin_model, Model};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(CliError::Config(format!("unknown format {s:?} (expected json or csv)"))),
        }
    }
}

/// Pointwise and global analysis suites, in dependency order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Spectra,
    Pinch,
    Kahler,
    Identities,
    Invariants,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Spectra, Suite::Pinch, Suite::Kahler, Suite::Identities, Suite::Invariants];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Spectra => "spectra",
            Suite::Pinch => "pinch",
            Suite::Kahler => "kahler",
            Suite::Identities => "identities",
            Suite::Invariants => "invariants",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses a comma-separated suite list; the result is sorted and deduplicated.
pub fn parse_suites(s: &str) -> Result<Vec<Suite>, CliError> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if part == "all" {
            out.extend(Suite::ALL);
            continue;
        }
        let suite = Suite::ALL
            .into_iter()
            .find(|x| x.name() == part)
            .ok_or_else(|| CliError::Config(format!("unknown suite {part:?}")))?;
        out.push(suite);
    }
    if out.is_empty() {
        return Err(CliError::Config("empty suite list".into()));
    }
    out.sort();
    out.dedup();
    Ok(out)
}

pub fn parse_orientation(s: &str) -> Result<Orientation, CliError> {
    match s.trim() {
        "+1" | "1" | "+" | "positive" => Ok(Orientation::Positive),
        "-1" | "-" | "negative" => Ok(Orientation::Negative),
        _ => Err(CliError::Config(format!("orientation must be +1 or -1, got {s:?}"))),
    }
}

pub fn parse_point(s: &str) -> Result<[f64; DIM], CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("bad point {s:?}: {e}")))?;
    <[f64; DIM]>::try_from(v.as_slice())
        .map_err(|_| CliError::Config(format!("a point needs {DIM} coordinates, got {s:?}")))
}

pub fn parse_grid(s: &str) -> Result<[usize; DIM], CliError> {
    let v: Vec<usize> = s
        .split(['x', 'X'])
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("bad grid {s:?}: {e}")))?;
    let g = <[usize; DIM]>::try_from(v.as_slice())
        .map_err(|_| CliError::Config(format!("grid must be NxNxNxN, got {s:?}")))?;
    if g.contains(&0) {
        return Err(CliError::Config("grid counts must be positive".into()));
    }
    Ok(g)
}

fn parse_params(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| CliError::Config(format!("bad parameter {t:?}: {e}"))))
        .collect()
}

/// `name`, or `name(p1,p2)`, plus an optional separate parameter list.
pub fn parse_model(spec: &str, params: Option<&str>) -> Result<(Model, Vec<f64>), CliError> {
    let (name, inline) = match spec.split_once('(') {
        Some((n, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| CliError::Config(format!("unbalanced parentheses in {spec:?}")))?;
            (n.trim(), Some(inner))
        }
        None => (spec.trim(), None),
    };
    let model = Model::from_name(name).ok_or_else(|| {
        let known: Vec<&str> = Model::ALL.iter().map(|m| m.name()).collect();
        CliError::Config(format!("unknown model {name:?}; known models: {}", known.join(", ")))
    })?;
    let p = match (inline, params) {
        (Some(_), Some(_)) => return Err(CliError::Config("parameters given twice".into())),
        (Some(i), None) | (None, Some(i)) => parse_params(i)?,
        (None, None) => Vec::new(),
    };
    let p = model.resolve_params(&p).map_err(|e| CliError::Config(e.to_string()))?;
    Ok((model, p))
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MetricChoice {
    Builtin {
        #[serde(serialize_with = "model_name")]
        model: Model,
        params: Vec<f64>,
    },
    File { path: String, sha256: String },
}

pub fn model_name<S: serde::Serializer>(m: &Model, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(m.name())
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PointSet {
    Explicit { points: Vec<[f64; DIM]> },
    Grid { counts: [usize; DIM], bounds: [(f64, f64); DIM] },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Hyperdual,
    FiniteDifference,
}

impl FromStr for Backend {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "hyperdual" => Ok(Backend::Hyperdual),
            "finite_difference" => Ok(Backend::FiniteDifference),
            _ => Err(CliError::Config(format!(
                "unknown backend {s:?} (expected hyperdual or finite_difference)"
            ))),
        }
    }
}

impl From<Backend> for DerivativeBackend {
    fn from(b: Backend) -> Self {
        match b {
            Backend::Hyperdual => DerivativeBackend::HyperDual,
            Backend::FiniteDifference => DerivativeBackend::FiniteDifference,
        }
    }
}

/// Everything that determines the numbers in a report. The output path is
/// deliberately absent so that the same run written elsewhere is identical.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisConfig {
    pub metric: MetricChoice,
    pub points: PointSet,
    pub orientation: i8,
    pub suites: Vec<Suite>,
    pub quadrature_order: usize,
    pub sphere_samples: usize,
    pub backend: Backend,
    pub format: Format,
}

pub fn orientation_sign(o: Orientation) -> i8 {
    match o {
        Orientation::Positive => 1,
        Orientation::Negative => -1,
    }
}

impl AnalysisConfig {
    pub fn orientation(&self) -> Orientation {
        if self.orientation < 0 {
            Orientation::Negative
        } else {
            Orientation::Positive
        }
    }
}

pub fn load_metric(choice: &MetricChoice, backend: Backend) -> Result<ChartMetric, CliError> {
    let m = match choice {
        MetricChoice::Builtin { model, params } => {
            builtin_model(model.name(), params).map_err(|e| CliError::Config(e.to_string()))?
        }
        MetricChoice::File { path, .. } => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
            parse_metric_spec(&text).map_err(|e| CliError::Config(format!("{path}: {e}")))?
        }
    };
    Ok(m.with_backend(backend.into()))
}

pub fn metric_file_choice(path: &str) -> Result<MetricChoice, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
    Ok(MetricChoice::File {
        path: path.to_string(),
        sha256: hex(&Sha256::digest(&bytes)),
    })
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of the canonical JSON echo, and the seed taken from its first
/// eight bytes.
pub fn config_digest<T: Serialize>(config: &T) -> (String, u64) {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    let d = Sha256::digest(&bytes);
    let seed = u64::from_le_bytes(d[..8].try_into().expect("8 bytes"));
    (hex(&d), seed)
}
