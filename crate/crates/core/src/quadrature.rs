//! Product quadrature atlases for the compact catalog models.

use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

use crate::metric::{ChartMetric, MetricError, DIM};
use crate::models::Model;

pub const MIN_ORDER: usize = 4;

/// Standard affine charts of CP²; each chart's unit polydisc is isometric to
/// the others under the chart transitions.
const FS_CHARTS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("integration needs a built-in model; user metrics have no global atlas")]
    NotBuiltin,
    #[error("{0} is non-compact and cannot be integrated")]
    NonCompact(&'static str),
    #[error("quadrature order {0} is below the minimum {MIN_ORDER}")]
    OrderTooSmall(usize),
    #[error("atlas was built for {atlas} but the metric is {metric}")]
    AtlasMismatch { atlas: String, metric: String },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// One-dimensional rule on an axis.
#[derive(Debug, Clone)]
struct AxisRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn legendre_on(lo: f64, hi: f64, n: usize) -> AxisRule {
    let (x, w) = gauss_legendre(n);
    let (h, m) = (0.5 * (hi - lo), 0.5 * (hi + lo));
    AxisRule {
        nodes: x.iter().map(|t| m + h * t).collect(),
        weights: w.iter().map(|v| v * h).collect(),
    }
}

/// Gauss–Legendre in `w = cos θ` on `(0, π)`; the weights carry `1/sin θ`
/// so that `Σ wᵢ sin θᵢ f(θᵢ)` is exact for `f` polynomial in `cos θ`.
fn cosine_legendre(n: usize) -> AxisRule {
    let (x, w) = gauss_legendre(n);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (xi, wi) in x.iter().zip(&w).rev() {
        let t = xi.acos();
        nodes.push(t);
        weights.push(wi / t.sin());
    }
    AxisRule { nodes, weights }
}

/// Chebyshev rule of the second kind in `w = cos θ`: uniform nodes
/// `θ_k = kπ/(n+1)`, exact for `∫ sin²θ f(θ) dθ` with `f` polynomial in
/// `cos θ` of degree below `2n`.
fn cosine_chebyshev(n: usize) -> AxisRule {
    let h = PI / (n as f64 + 1.0);
    AxisRule {
        nodes: (1..=n).map(|k| k as f64 * h).collect(),
        weights: vec![h; n],
    }
}

fn trapezoid_periodic(period: f64, n: usize, offset: f64) -> AxisRule {
    let h = period / n as f64;
    AxisRule {
        nodes: (0..n).map(|k| (k as f64 + offset) * h).collect(),
        weights: vec![h; n],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureNode {
    pub point: [f64; DIM],
    /// Rule weight times the chart Jacobian and `√det g`.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureAtlas {
    pub model: Model,
    pub params: Vec<f64>,
    pub order: usize,
    pub nodes: Vec<QuadratureNode>,
    pub exactness: String,
    /// The atlas omits only measure-zero coordinate loci.
    pub excluded_locus_measure: f64,
}

impl QuadratureAtlas {
    pub fn volume(&self) -> f64 {
        pairwise_sum(&self.nodes.iter().map(|n| n.weight).collect::<Vec<_>>())
    }

    pub fn check_matches(&self, metric: &ChartMetric) -> Result<(), QuadratureError> {
        let describe = |m: Model, p: &[f64]| format!("{}{:?}", m.name(), p);
        match metric.model() {
            Some((m, p)) if m == self.model && p == self.params.as_slice() => Ok(()),
            Some((m, p)) => Err(QuadratureError::AtlasMismatch {
                atlas: describe(self.model, &self.params),
                metric: describe(m, p),
            }),
            None => Err(QuadratureError::AtlasMismatch {
                atlas: describe(self.model, &self.params),
                metric: metric.name.clone(),
            }),
        }
    }
}

/// Fixed-order pairwise summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let (a, b) = v.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Builds the product rule for a compact built-in model.
///
/// Periodic axes use the trapezoid rule. Polar angles of the sphere chart
/// are integrated in `cos θ`, which keeps nodes about `π/n` away from the
/// poles, where the coordinate curvature formula loses digits. CP² is
/// covered by the unit polydiscs `|z₁|, |z₂| ≤ 1` of its three standard
/// affine charts; the metric has the same expression in each, so the
/// chart-0 polydisc is weighted by 3. Only chart-independent scalars may
/// be integrated against this atlas.
pub fn atlas_for(metric: &ChartMetric, order: usize) -> Result<QuadratureAtlas, QuadratureError> {
    let (model, params) = metric.model().ok_or(QuadratureError::NotBuiltin)?;
    if !model.is_compact() {
        return Err(QuadratureError::NonCompact(model.name()));
    }
    if order < MIN_ORDER {
        return Err(QuadratureError::OrderTooSmall(order));
    }
    let n = order;
    // (axis rules, map from rule coordinates to chart point and Jacobian)
    type ChartMap = fn(&[f64; DIM]) -> ([f64; DIM], f64);
    let identity: ChartMap = |x| (*x, 1.0);
    let (rules, map, exactness): ([AxisRule; DIM], ChartMap, String) = match model {
        Model::FlatT4 => (
            std::array::from_fn(|_| trapezoid_periodic(2.0 * PI, n, 0.0)),
            identity,
            format!("trapezoid with {n} nodes on each periodic axis"),
        ),
        Model::RoundS4 => (
            [
                cosine_legendre(n),
                cosine_chebyshev(n),
                cosine_legendre(n),
                trapezoid_periodic(2.0 * PI, n, 0.5),
            ],
            identity,
            format!(
                "Gauss–Legendre order {n} in cos(chi) and cos(phi), Chebyshev second kind order {n} in cos(theta), trapezoid {n} on psi"
            ),
        ),
        Model::ProductS2xS2 => (
            [
                cosine_legendre(n),
                trapezoid_periodic(2.0 * PI, n, 0.5),
                cosine_legendre(n),
                trapezoid_periodic(2.0 * PI, n, 0.5),
            ],
            identity,
            format!("Gauss–Legendre order {n} in cos(th1) and cos(th2); trapezoid {n} on ph1, ph2"),
        ),
        Model::FubiniStudyCp2 => (
            [
                legendre_on(0.0, 1.0, n),
                trapezoid_periodic(2.0 * PI, n, 0.5),
                legendre_on(0.0, 1.0, n),
                trapezoid_periodic(2.0 * PI, n, 0.5),
            ],
            |x| {
                let [r1, xi1, r2, xi2] = *x;
                let p = [r1 * xi1.cos(), r1 * xi1.sin(), r2 * xi2.cos(), r2 * xi2.sin()];
                (p, FS_CHARTS * r1 * r2)
            },
            format!(
                "unit polydisc of the affine chart with multiplicity {FS_CHARTS}: Gauss–Legendre order {n} on |z1|, |z2|, trapezoid {n} on both phases"
            ),
        ),
        Model::ComplexHyperbolicCh2 => unreachable!("rejected as non-compact"),
    };

    let mut rule_points = Vec::with_capacity(n.pow(DIM as u32));
    for (i0, &x0) in rules[0].nodes.iter().enumerate() {
        for (i1, &x1) in rules[1].nodes.iter().enumerate() {
            for (i2, &x2) in rules[2].nodes.iter().enumerate() {
                for (i3, &x3) in rules[3].nodes.iter().enumerate() {
                    let w = rules[0].weights[i0]
                        * rules[1].weights[i1]
                        * rules[2].weights[i2]
                        * rules[3].weights[i3];
                    rule_points.push(([x0, x1, x2, x3], w));
                }
            }
        }
    }
    let nodes = rule_points
        .par_iter()
        .map(|(x, w)| {
            let (point, jac) = map(x);
            let g = metric.g_at(point)?;
            Ok(QuadratureNode {
                point,
                weight: w * jac * g.determinant().sqrt(),
            })
        })
        .collect::<Result<Vec<_>, MetricError>>()?;
    Ok(QuadratureAtlas {
        model,
        params: params.to_vec(),
        order,
        nodes,
        exactness,
        excluded_locus_measure: 0.0,
    })
}
