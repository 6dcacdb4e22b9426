//! Report document, JSON and CSV emission.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use weylpinch::invariants::{InvariantReport, Range, WeylScalarComparison};
use weylpinch::metric::DIM;
use weylpinch::spectral::PinchReport;

use crate::checks::CheckRecord;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

impl Tool {
    pub fn current() -> Self {
        Tool {
            name: "weylpinch",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectraRecord {
    pub orientation: i8,
    pub lambda_plus: [f64; 3],
    pub lambda_minus: [f64; 3],
    pub norm_sq_plus: f64,
    pub norm_sq_minus: f64,
    pub det_plus: f64,
    pub det_minus: f64,
    pub degenerate_plus: bool,
    pub degenerate_minus: bool,
    pub in_zero_set: bool,
    pub ric0_block_norm: f64,
    /// `None` when the neighbouring points needed for differencing leave the chart.
    pub grad_wplus_norm_sq: Option<f64>,
    pub div_wplus_norm: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PinchSide {
    pub det_nonneg: bool,
    pub sum13_nonneg: bool,
    pub polombo_band: bool,
    pub gursky_band: bool,
    pub lambda2_sign: i8,
    pub det: f64,
    pub sum13: f64,
    pub polombo_lower: f64,
    pub polombo_upper: f64,
    pub gursky: f64,
}

impl From<&PinchReport> for PinchSide {
    fn from(p: &PinchReport) -> Self {
        PinchSide {
            det_nonneg: p.det_nonneg,
            sum13_nonneg: p.sum13_nonneg,
            polombo_band: p.polombo_band,
            gursky_band: p.gursky_band,
            lambda2_sign: p.lambda2_sign,
            det: p.margins.det,
            sum13: p.margins.sum13,
            polombo_lower: p.margins.polombo_lower,
            polombo_upper: p.margins.polombo_upper,
            gursky: p.margins.gursky,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PinchRecord {
    pub plus: PinchSide,
    pub minus: PinchSide,
}

#[derive(Debug, Clone, Serialize)]
pub struct KahlerRecord {
    /// Orientation in which the fundamental form is self-dual.
    pub orientation: i8,
    pub integrable_kahler: bool,
    pub h_max: f64,
    pub h_min: f64,
    pub h_av: f64,
    pub s_star: f64,
    pub b_max: f64,
    pub b_min: f64,
    pub kperp_max: f64,
    pub kperp_min: f64,
    pub max_gradient_norm: f64,
    pub average_prediction_kahler: f64,
    pub average_prediction_hermitian: f64,
    pub kperp_prediction_max: f64,
    pub kperp_prediction_min: f64,
    pub residuals: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityRecord {
    pub weitzenboeck_gap: f64,
    pub norm_sq_identity_residual: f64,
    pub ab_minus_c2: f64,
    pub psi_factored_residual: f64,
    pub inequalities: Vec<InequalityRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InequalityRecord {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointRecord {
    pub index: Vec<usize>,
    pub point: [f64; DIM],
    pub scalar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectra: Option<SpectraRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pinch: Option<PinchRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kahler: Option<KahlerRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identities: Option<IdentityRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RangeRecord {
    pub min: f64,
    pub max: f64,
}

impl From<Range> for RangeRecord {
    fn from(r: Range) -> Self {
        RangeRecord { min: r.min, max: r.max }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReferenceRecord {
    pub tau: Option<i32>,
    pub chi: Option<i32>,
    pub volume: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantRecord {
    pub model: String,
    pub params: Vec<f64>,
    pub orientation: i8,
    pub order: usize,
    pub rule: String,
    pub node_count: usize,
    pub volume: f64,
    pub int_wplus_sq: f64,
    pub int_wminus_sq: f64,
    pub int_s2_over_24: f64,
    pub int_ric0_sq: f64,
    pub tau: f64,
    pub chi_minus_3tau: f64,
    pub chi: f64,
    pub tau_rounded: i64,
    pub chi_rounded: i64,
    pub wplus_vs_scalar_gap: f64,
    pub wplus_vs_scalar_relative_gap: f64,
    pub wplus_vanishes: bool,
    pub integrand_wplus_sq: RangeRecord,
    pub integrand_wminus_sq: RangeRecord,
    pub integrand_scalar: RangeRecord,
    pub integrand_ric0_sq: RangeRecord,
    pub reference: Option<ReferenceRecord>,
}

impl InvariantRecord {
    pub fn new(
        model: &str,
        params: &[f64],
        rule: &str,
        order: usize,
        r: &InvariantReport,
        reference: Option<ReferenceRecord>,
    ) -> Self {
        let g = WeylScalarComparison::from_report(r);
        let st = r.integrand_stats;
        InvariantRecord {
            model: model.to_string(),
            params: params.to_vec(),
            orientation: crate::config::orientation_sign(r.orientation),
            order,
            rule: rule.to_string(),
            node_count: r.node_count,
            volume: r.volume,
            int_wplus_sq: r.int_wplus_sq,
            int_wminus_sq: r.int_wminus_sq,
            int_s2_over_24: r.int_s2_over_24,
            int_ric0_sq: r.int_ric0_sq,
            tau: r.tau,
            chi_minus_3tau: r.chi_minus_3tau,
            chi: r.chi,
            tau_rounded: r.tau.round() as i64,
            chi_rounded: r.chi.round() as i64,
            wplus_vs_scalar_gap: g.gap,
            wplus_vs_scalar_relative_gap: g.relative_gap,
            wplus_vanishes: g.wplus_vanishes,
            integrand_wplus_sq: st.wplus_sq.into(),
            integrand_wminus_sq: st.wminus_sq.into(),
            integrand_scalar: st.scalar.into(),
            integrand_ric0_sq: st.ric0_sq.into(),
            reference,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SkipRecord {
    pub suite: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct GlobalRecords {
    pub invariants: Vec<InvariantRecord>,
    pub skipped: Vec<SkipRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub pass: bool,
    pub checks: usize,
    pub failed: usize,
    pub failed_checks: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub tool: Tool,
    pub command: &'static str,
    pub config: serde_json::Value,
    pub config_sha256: String,
    pub seed: u64,
    pub points: Vec<PointRecord>,
    pub global: GlobalRecords,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
}

impl Report {
    pub fn new<C: Serialize>(
        command: &'static str,
        config: &C,
        points: Vec<PointRecord>,
        global: GlobalRecords,
        checks: Vec<CheckRecord>,
    ) -> Self {
        let (config_sha256, seed) = crate::config::config_digest(config);
        let failed: Vec<String> = checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{}/{}", c.suite, c.name))
            .collect();
        Report {
            schema: SCHEMA_VERSION,
            tool: Tool::current(),
            command,
            config: serde_json::to_value(config).expect("config serializes"),
            config_sha256,
            seed,
            points,
            global,
            summary: Summary {
                pass: failed.is_empty(),
                checks: checks.len(),
                failed: failed.len(),
                failed_checks: failed,
            },
            checks,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per point when there are points, otherwise one row per
    /// invariant record, otherwise one row per check.
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if !self.points.is_empty() {
            w.write_record(POINT_COLUMNS)?;
            for p in &self.points {
                w.write_record(point_row(p))?;
            }
        } else if !self.global.invariants.is_empty() {
            w.write_record(INVARIANT_COLUMNS)?;
            for r in &self.global.invariants {
                w.write_record(invariant_row(r))?;
            }
        } else {
            w.write_record(["suite", "name", "statement", "kind", "samples", "worst_residual", "tolerance", "pass"])?;
            for c in &self.checks {
                let kind = match c.kind {
                    crate::checks::CheckKind::Residual => "residual",
                    crate::checks::CheckKind::Violations => "violations",
                };
                w.write_record([
                    c.suite.clone(),
                    c.name.clone(),
                    c.statement.clone(),
                    kind.to_string(),
                    c.samples.to_string(),
                    num(c.worst_residual),
                    num(c.tolerance),
                    c.pass.to_string(),
                ])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn render(&self, format: crate::config::Format) -> Result<String, CliError> {
        match format {
            crate::config::Format::Json => Ok(self.to_json()),
            crate::config::Format::Csv => self.to_csv(),
        }
    }
}

/// Shortest round-trip decimal, matching the JSON output.
fn num(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&x).expect("finite float")
    } else {
        x.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

const POINT_COLUMNS: &[&str] = &[
    "index", "x1", "x2", "x3", "x4", "scalar", "error",
    "lambda_plus_1", "lambda_plus_2", "lambda_plus_3",
    "lambda_minus_1", "lambda_minus_2", "lambda_minus_3",
    "norm_sq_plus", "norm_sq_minus", "degenerate_plus", "in_zero_set",
    "ric0_block_norm", "div_wplus_norm",
    "det_plus_nonneg", "sum13_plus_nonneg", "lambda2_plus_sign", "polombo_band_plus", "gursky_band_plus",
    "h_max", "h_min", "h_av", "b_max", "b_min", "kperp_max", "kperp_min",
    "weitzenboeck_gap", "ab_minus_c2",
];

fn point_row(p: &PointRecord) -> Vec<String> {
    let idx = p.index.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("-");
    let mut row = vec![idx];
    row.extend(p.point.iter().map(|&x| num(x)));
    row.push(opt(p.scalar));
    row.push(p.error.clone().unwrap_or_default());
    match &p.spectra {
        Some(s) => {
            row.extend(s.lambda_plus.iter().map(|&x| num(x)));
            row.extend(s.lambda_minus.iter().map(|&x| num(x)));
            row.push(num(s.norm_sq_plus));
            row.push(num(s.norm_sq_minus));
            row.push(s.degenerate_plus.to_string());
            row.push(s.in_zero_set.to_string());
            row.push(num(s.ric0_block_norm));
            row.push(opt(s.div_wplus_norm));
        }
        None => row.extend(std::iter::repeat_n(String::new(), 12)),
    }
    match &p.pinch {
        Some(q) => {
            row.push(q.plus.det_nonneg.to_string());
            row.push(q.plus.sum13_nonneg.to_string());
            row.push(q.plus.lambda2_sign.to_string());
            row.push(q.plus.polombo_band.to_string());
            row.push(q.plus.gursky_band.to_string());
        }
        None => row.extend(std::iter::repeat_n(String::new(), 5)),
    }
    match &p.kahler {
        Some(k) => row.extend([k.h_max, k.h_min, k.h_av, k.b_max, k.b_min, k.kperp_max, k.kperp_min].map(num)),
        None => row.extend(std::iter::repeat_n(String::new(), 7)),
    }
    match &p.identities {
        Some(i) => {
            row.push(num(i.weitzenboeck_gap));
            row.push(num(i.ab_minus_c2));
        }
        None => row.extend(std::iter::repeat_n(String::new(), 2)),
    }
    row
}

const INVARIANT_COLUMNS: &[&str] = &[
    "model", "params", "orientation", "order", "node_count", "volume",
    "int_wplus_sq", "int_wminus_sq", "int_s2_over_24", "int_ric0_sq",
    "tau", "chi_minus_3tau", "chi", "wplus_vs_scalar_relative_gap",
];

fn invariant_row(r: &InvariantRecord) -> Vec<String> {
    let params = r.params.iter().map(|&p| num(p)).collect::<Vec<_>>().join(";");
    vec![
        r.model.clone(),
        params,
        r.orientation.to_string(),
        r.order.to_string(),
        r.node_count.to_string(),
        num(r.volume),
        num(r.int_wplus_sq),
        num(r.int_wminus_sq),
        num(r.int_s2_over_24),
        num(r.int_ric0_sq),
        num(r.tau),
        num(r.chi_minus_3tau),
        num(r.chi),
        num(r.wplus_vs_scalar_relative_gap),
    ]
}

/// Writes the rendered report to `path`, or to stdout when there is none.
pub fn emit(text: &str, path: Option<&std::path::Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Output(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Output(e.to_string()))
        }
    }
}
