//! Chart metrics: component expressions, domains and derivative evaluation.

use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix4;
use thiserror::Error;

use crate::expr::{parse_expr_at, EvalError, Expr, ParseError};
use crate::hyperdual::HyperDual;
use crate::models::Model;

pub const DIM: usize = 4;

/// `dg[k][i][j] = ∂_k g_ij`.
pub type MetricGradient = [[[f64; DIM]; DIM]; DIM];
/// `d2g[k][l][i][j] = ∂_k ∂_l g_ij`.
pub type MetricHessian = [[[[f64; DIM]; DIM]; DIM]; DIM];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("metric evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("point {point:?} lies outside the chart domain ({reason})")]
    OutOfDomain { point: [f64; DIM], reason: String },
    #[error("point {point:?} lies on a coordinate-singular locus ({locus})")]
    SingularLocus { point: [f64; DIM], locus: String },
    #[error("metric is not positive definite at {0:?}")]
    NotPositiveDefinite([f64; DIM]),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("invalid model parameters: {0}")]
    InvalidParameter(String),
}

/// Admissible range of one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisDomain {
    /// Open interval `(lo, hi)`.
    Interval { lo: f64, hi: f64 },
    Periodic { period: f64 },
    /// The whole real line.
    Line,
}

impl AxisDomain {
    fn contains(&self, x: f64) -> bool {
        match *self {
            AxisDomain::Interval { lo, hi } => x > lo && x < hi,
            AxisDomain::Periodic { .. } | AxisDomain::Line => x.is_finite(),
        }
    }
}

impl fmt::Display for AxisDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisDomain::Interval { lo, hi } => write!(f, "in ({lo}, {hi})"),
            AxisDomain::Periodic { period } => write!(f, "periodic {period}"),
            AxisDomain::Line => write!(f, "in (-inf, inf)"),
        }
    }
}

/// Closed set `{x_axis = value}` where the chart degenerates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularLocus {
    pub axis: usize,
    pub value: f64,
}

/// Extra open-set constraint on top of the per-axis domains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// Euclidean ball `|x| < radius` in chart coordinates.
    Ball { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DerivativeBackend {
    #[default]
    HyperDual,
    FiniteDifference,
}

/// How an almost-complex structure is attached to a chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComplexStructure {
    /// Constant matrix `J^i_j` in chart coordinates (column j is `J ∂_j`).
    Coordinate([[f64; DIM]; DIM]),
    /// Pointwise: `J e1 = e2`, `J e3 = e4` in the Gram–Schmidt frame.
    FrameAdapted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianDecl {
    pub structure: ComplexStructure,
    /// Declared, not computed.
    pub integrable_kahler: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricSource {
    Builtin { model: Model, params: Vec<f64> },
    User,
}

/// A metric on one coordinate chart of a four-manifold.
#[derive(Debug, Clone)]
pub struct ChartMetric {
    pub name: String,
    pub coords: [String; DIM],
    /// Upper-triangular storage, so `g_ij` and `g_ji` share one expression.
    components: [Arc<Expr>; 10],
    pub domain: [AxisDomain; DIM],
    pub singular_loci: Vec<SingularLocus>,
    pub region: Option<Region>,
    pub backend: DerivativeBackend,
    pub source: MetricSource,
    pub hermitian: Option<HermitianDecl>,
}

#[inline]
pub(crate) fn upper_index(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    // rows: (0,0..3)=0..3, (1,1..3)=4..6, (2,2..3)=7..8, (3,3)=9
    a * DIM - a * (a + 1) / 2 + b
}

/// Metric and its first two derivatives at a chart point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricValue {
    pub point: [f64; DIM],
    pub g: Matrix4<f64>,
    pub g_inv: Matrix4<f64>,
    pub dg: MetricGradient,
    pub d2g: MetricHessian,
    pub sqrt_det_g: f64,
}

impl ChartMetric {
    /// Builds a metric from upper-triangular component expressions, listed
    /// row by row (`g11 g12 g13 g14 g22 ... g44`).
    pub fn new(
        name: impl Into<String>,
        coords: [String; DIM],
        components: [Expr; 10],
        domain: [AxisDomain; DIM],
    ) -> Self {
        Self {
            name: name.into(),
            coords,
            components: components.map(Arc::new),
            domain,
            singular_loci: Vec::new(),
            region: None,
            backend: DerivativeBackend::HyperDual,
            source: MetricSource::User,
            hermitian: None,
        }
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.components[upper_index(i, j)]
    }

    /// True when `g_ij` and `g_ji` are the same expression object.
    pub fn shares_component(&self, i: usize, j: usize) -> bool {
        std::ptr::eq(self.component(i, j), self.component(j, i))
    }

    pub fn with_backend(mut self, backend: DerivativeBackend) -> Self {
        self.backend = backend;
        self
    }

    pub fn model(&self) -> Option<(Model, &[f64])> {
        match &self.source {
            MetricSource::Builtin { model, params } => Some((*model, params.as_slice())),
            MetricSource::User => None,
        }
    }

    /// Checks that `point` is inside the chart domain and off the singular loci.
    pub fn check_point(&self, point: [f64; DIM]) -> Result<(), MetricError> {
        for locus in &self.singular_loci {
            if (point[locus.axis] - locus.value).abs() < 1e-12 {
                return Err(MetricError::SingularLocus {
                    point,
                    locus: format!("{} = {}", self.coords[locus.axis], locus.value),
                });
            }
        }
        for (k, d) in self.domain.iter().enumerate() {
            if !d.contains(point[k]) {
                return Err(MetricError::OutOfDomain {
                    point,
                    reason: format!("{} {d}", self.coords[k]),
                });
            }
        }
        if let Some(Region::Ball { radius }) = self.region {
            let r2: f64 = point.iter().map(|x| x * x).sum();
            if r2 >= radius * radius {
                return Err(MetricError::OutOfDomain {
                    point,
                    reason: format!("outside the ball of radius {radius}"),
                });
            }
        }
        Ok(())
    }

    /// Metric matrix only, after domain and positivity checks.
    pub fn g_at(&self, point: [f64; DIM]) -> Result<Matrix4<f64>, MetricError> {
        self.check_point(point)?;
        let g = self.g_unchecked(point)?;
        if g.cholesky().is_none() {
            return Err(MetricError::NotPositiveDefinite(point));
        }
        Ok(g)
    }

    fn g_unchecked(&self, point: [f64; DIM]) -> Result<Matrix4<f64>, MetricError> {
        let mut g = Matrix4::zeros();
        for i in 0..DIM {
            for j in i..DIM {
                let v = self.component(i, j).eval(&point)?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }

    /// Evaluates the metric with derivatives using the chart's backend.
    pub fn metric_at(&self, point: [f64; DIM]) -> Result<MetricValue, MetricError> {
        self.metric_at_with(point, self.backend)
    }

    pub fn metric_at_with(
        &self,
        point: [f64; DIM],
        backend: DerivativeBackend,
    ) -> Result<MetricValue, MetricError> {
        self.check_point(point)?;
        let (g, dg, d2g) = match backend {
            DerivativeBackend::HyperDual => self.derivatives_hyperdual(point)?,
            DerivativeBackend::FiniteDifference => self.derivatives_fd(point)?,
        };
        let chol = g
            .cholesky()
            .ok_or(MetricError::NotPositiveDefinite(point))?;
        let sqrt_det_g = chol.l_dirty().diagonal().iter().product::<f64>().abs();
        let mut g_inv = chol.inverse();
        g_inv = (g_inv + g_inv.transpose()) * 0.5;
        Ok(MetricValue {
            point,
            g,
            g_inv,
            dg,
            d2g,
            sqrt_det_g,
        })
    }

    fn derivatives_hyperdual(
        &self,
        point: [f64; DIM],
    ) -> Result<(Matrix4<f64>, MetricGradient, MetricHessian), MetricError> {
        let x = [0, 1, 2, 3].map(|k| HyperDual::variable(point[k], k));
        let mut g = Matrix4::zeros();
        let mut dg = [[[0.0; DIM]; DIM]; DIM];
        let mut d2g = [[[[0.0; DIM]; DIM]; DIM]; DIM];
        for i in 0..DIM {
            for j in i..DIM {
                let e = self.component(i, j);
                if let Expr::Const(c) = e {
                    g[(i, j)] = *c;
                    g[(j, i)] = *c;
                    continue;
                }
                let v = e.eval(&x)?;
                g[(i, j)] = v.re;
                g[(j, i)] = v.re;
                for k in 0..DIM {
                    dg[k][i][j] = v.grad[k];
                    dg[k][j][i] = v.grad[k];
                    for l in 0..DIM {
                        d2g[k][l][i][j] = v.hess[k][l];
                        d2g[k][l][j][i] = v.hess[k][l];
                    }
                }
            }
        }
        Ok((g, dg, d2g))
    }

    /// Central differences; `cbrt(eps)` steps for first derivatives and
    /// `eps^(1/4)` steps for second derivatives, both scaled by `max(1,|x|)`.
    fn derivatives_fd(
        &self,
        point: [f64; DIM],
    ) -> Result<(Matrix4<f64>, MetricGradient, MetricHessian), MetricError> {
        let g = self.g_unchecked(point)?;
        let step = |base: f64, k: usize| {
            let h = base * point[k].abs().max(1.0);
            // make the step exactly representable relative to x
            (point[k] + h) - point[k]
        };
        let shifted = |moves: &[(usize, f64)]| -> Result<Matrix4<f64>, MetricError> {
            let mut p = point;
            for &(k, h) in moves {
                p[k] += h;
            }
            self.g_unchecked(p)
        };
        let mut dg = [[[0.0; DIM]; DIM]; DIM];
        let h1 = f64::EPSILON.cbrt();
        for k in 0..DIM {
            let h = step(h1, k);
            let d = (shifted(&[(k, h)])? - shifted(&[(k, -h)])?) / (2.0 * h);
            for i in 0..DIM {
                for j in 0..DIM {
                    dg[k][i][j] = d[(i, j)];
                }
            }
        }
        let mut d2g = [[[[0.0; DIM]; DIM]; DIM]; DIM];
        // one Richardson step on the central second difference: O(h⁴) error
        let h2 = f64::EPSILON.powf(1.0 / 6.0);
        let second = |k: usize, l: usize, base: f64| -> Result<Matrix4<f64>, MetricError> {
            let hk = step(base, k);
            Ok(if k == l {
                (shifted(&[(k, hk)])? - g * 2.0 + shifted(&[(k, -hk)])?) / (hk * hk)
            } else {
                let hl = step(base, l);
                (shifted(&[(k, hk), (l, hl)])? - shifted(&[(k, hk), (l, -hl)])?
                    - shifted(&[(k, -hk), (l, hl)])?
                    + shifted(&[(k, -hk), (l, -hl)])?)
                    / (4.0 * hk * hl)
            })
        };
        for k in 0..DIM {
            for l in k..DIM {
                let d = (second(k, l, 0.5 * h2)? * 4.0 - second(k, l, h2)?) / 3.0;
                for i in 0..DIM {
                    for j in 0..DIM {
                        d2g[k][l][i][j] = d[(i, j)];
                        d2g[l][k][i][j] = d[(i, j)];
                    }
                }
            }
        }
        Ok((g, dg, d2g))
    }
}

/// Parses a metric specification file.
///
/// ```text
/// # comment
/// name: my_metric
/// coords: x1 x2 x3 x4
/// domain: x1 in (0, pi)
/// domain: x4 periodic 2*pi
/// g[1][1] = 1
/// g[2][2] = sin(x1)^2
/// ```
///
/// Indices are 1-based. Unspecified off-diagonal components are zero; every
/// diagonal component must be given. `g[j][i]` with `j > i` is accepted as a
/// mirror of `g[i][j]` but must not disagree with it.
pub fn parse_metric_spec(text: &str) -> Result<ChartMetric, MetricError> {
    let mut name = String::from("user_metric");
    let mut coords: [String; DIM] = ["x1", "x2", "x3", "x4"].map(String::from);
    let mut domain = [AxisDomain::Line; DIM];
    let mut domain_lines: Vec<(usize, usize, String)> = Vec::new();
    let mut comps: [Option<(Expr, usize)>; 10] = Default::default();
    let mut comp_lines: Vec<(usize, usize, usize, usize, String, usize)> = Vec::new();

    let perr = |line: usize, column: usize, message: String| {
        MetricError::Parse(ParseError {
            line,
            column,
            message,
        })
    };

    for (ln0, raw) in text.lines().enumerate() {
        let line = ln0 + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let lead = content.len() - content.trim_start().len();
        let body = content.trim();
        if let Some(rest) = body.strip_prefix("name:") {
            name = rest.trim().to_string();
        } else if let Some(rest) = body.strip_prefix("coords:") {
            let names: Vec<&str> = rest.split_whitespace().collect();
            if names.len() != DIM {
                return Err(perr(
                    line,
                    lead + 1,
                    format!("dimension must be 4, got {} coordinates", names.len()),
                ));
            }
            for (k, n) in names.iter().enumerate() {
                if !n.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
                    || n.chars().any(|c| !(c.is_alphanumeric() || c == '_'))
                {
                    return Err(perr(line, lead + 1, format!("invalid coordinate name `{n}`")));
                }
                coords[k] = n.to_string();
            }
        } else if let Some(rest) = body.strip_prefix("domain:") {
            let col = lead + 1 + "domain:".len() + (rest.len() - rest.trim_start().len());
            domain_lines.push((line, col, rest.trim().to_string()));
        } else if body.starts_with("g[") {
            let Some(eq) = body.find('=') else {
                return Err(perr(line, lead + 1, "expected `=` in component line".into()));
            };
            let lhs = body[..eq].trim();
            let idx = parse_indices(lhs).ok_or_else(|| {
                perr(line, lead + 1, format!("malformed component `{lhs}`"))
            })?;
            let (i, j) = idx;
            if i == 0 || j == 0 || i > DIM || j > DIM {
                return Err(perr(
                    line,
                    lead + 1,
                    format!("component index out of range for dimension 4: g[{i}][{j}]"),
                ));
            }
            let rhs = &body[eq + 1..];
            let rhs_col = lead + eq + 2;
            comp_lines.push((line, rhs_col, i - 1, j - 1, rhs.to_string(), lead + 1));
        } else {
            return Err(perr(line, lead + 1, format!("unrecognised line `{body}`")));
        }
    }

    for (line, col, spec) in domain_lines {
        let (k, d) = parse_domain(&spec, &coords, line, col)?;
        domain[k] = d;
    }

    for (line, col, i, j, rhs, lhs_col) in comp_lines {
        let e = parse_expr_at(&rhs, &coords, line, col)?;
        let slot = upper_index(i, j);
        match &comps[slot] {
            None => comps[slot] = Some((e, line)),
            Some((prev, prev_line)) => {
                let msg = if *prev == e && i != j {
                    format!("component g[{}][{}] declared twice (first on line {prev_line})", i + 1, j + 1)
                } else if i != j {
                    format!(
                        "asymmetric component declaration: g[{}][{}] disagrees with line {prev_line}",
                        i + 1,
                        j + 1
                    )
                } else {
                    format!("component g[{}][{}] declared twice", i + 1, j + 1)
                };
                if !(*prev == e && i != j) {
                    return Err(perr(line, lhs_col, msg));
                }
            }
        }
    }

    for i in 0..DIM {
        if comps[upper_index(i, i)].is_none() {
            return Err(perr(
                text.lines().count().max(1),
                1,
                format!("diagonal component g[{}][{}] is missing", i + 1, i + 1),
            ));
        }
    }

    let components: [Expr; 10] = comps.map(|c| c.map(|(e, _)| e).unwrap_or(Expr::Const(0.0)));
    let mut metric = ChartMetric::new(name, coords, components, domain);
    metric.source = MetricSource::User;
    Ok(metric)
}

fn parse_indices(lhs: &str) -> Option<(usize, usize)> {
    let rest = lhs.strip_prefix("g[")?;
    let (a, rest) = rest.split_once(']')?;
    let rest = rest.trim_start().strip_prefix('[')?;
    let (b, rest) = rest.split_once(']')?;
    if !rest.trim().is_empty() {
        return None;
    }
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

fn parse_domain(
    spec: &str,
    coords: &[String; DIM],
    line: usize,
    col: usize,
) -> Result<(usize, AxisDomain), MetricError> {
    let perr = |message: String| {
        MetricError::Parse(ParseError {
            line,
            column: col,
            message,
        })
    };
    let mut parts = spec.splitn(2, char::is_whitespace);
    let cname = parts.next().unwrap_or("");
    let rest = parts.next().unwrap_or("").trim();
    let k = coords
        .iter()
        .position(|c| c == cname)
        .ok_or_else(|| perr(format!("unknown coordinate `{cname}` in domain")))?;
    let no_coords: [String; 0] = [];
    let constant = |s: &str| -> Result<f64, MetricError> {
        let e = parse_expr_at(s, &no_coords, line, col)?;
        Ok(e.eval::<f64>(&[])?)
    };
    if let Some(p) = rest.strip_prefix("periodic") {
        let period = constant(p.trim())?;
        if !(period > 0.0) {
            return Err(perr("period must be positive".into()));
        }
        Ok((k, AxisDomain::Periodic { period }))
    } else if let Some(iv) = rest.strip_prefix("in") {
        let iv = iv.trim();
        let inner = iv
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| perr("expected open interval `(lo, hi)`".into()))?;
        let (lo, hi) = inner
            .split_once(',')
            .ok_or_else(|| perr("expected `,` in interval".into()))?;
        let (lo, hi) = (constant(lo.trim())?, constant(hi.trim())?);
        if !(lo < hi) {
            return Err(perr("empty interval".into()));
        }
        Ok((k, AxisDomain::Interval { lo, hi }))
    } else {
        Err(perr(format!("expected `in (lo, hi)` or `periodic p`, got `{rest}`")))
    }
}
