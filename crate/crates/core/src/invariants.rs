//! Signature and Euler characteristic from curvature integrals.

use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

use crate::curvature::curvature_at;
use crate::forms::{curvature_operator, orthonormal_frame, FormError, Orientation};
use crate::metric::{ChartMetric, MetricError};
use crate::quadrature::{pairwise_sum, QuadratureAtlas, QuadratureError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvariantError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Form(#[from] FormError),
}

/// Smallest and largest value of an integrand over the nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    fn of(v: impl Iterator<Item = f64>) -> Range {
        v.fold(
            Range {
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
            },
            |r, x| Range {
                min: r.min.min(x),
                max: r.max.max(x),
            },
        )
    }

    pub fn spread(&self) -> f64 {
        self.max - self.min
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrandStats {
    pub wplus_sq: Range,
    pub wminus_sq: Range,
    pub scalar: Range,
    pub ric0_sq: Range,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub orientation: Orientation,
    pub node_count: usize,
    pub volume: f64,
    /// `∫|W⁺|²`.
    pub int_wplus_sq: f64,
    /// `∫|W⁻|²`.
    pub int_wminus_sq: f64,
    /// `∫s²/24`.
    pub int_s2_over_24: f64,
    /// `∫|ric₀|²`.
    pub int_ric0_sq: f64,
    /// `(1/12π²)∫(|W⁺|² − |W⁻|²)`.
    pub tau: f64,
    /// `(1/8π²)∫(s²/24 − |W⁺|² + 3|W⁻|² − |ric₀|²/2)`.
    pub chi_minus_3tau: f64,
    pub chi: f64,
    pub integrand_stats: IntegrandStats,
}

#[derive(Debug, Clone, Copy)]
struct NodeIntegrand {
    wplus_sq: f64,
    wminus_sq: f64,
    scalar: f64,
    ric0_sq: f64,
}

pub fn integrate_invariants(
    metric: &ChartMetric,
    atlas: &QuadratureAtlas,
    orientation: Orientation,
) -> Result<InvariantReport, InvariantError> {
    atlas.check_matches(metric)?;
    let vals = atlas
        .nodes
        .par_iter()
        .map(|node| -> Result<NodeIntegrand, InvariantError> {
            let c = curvature_at(metric, node.point)?;
            let frame = orthonormal_frame(&c.metric, orientation)?;
            let b = curvature_operator(&c, &frame)?;
            Ok(NodeIntegrand {
                wplus_sq: b.wplus_block.norm_squared(),
                wminus_sq: b.wminus_block.norm_squared(),
                scalar: c.scalar,
                ric0_sq: c.ric0_norm_sq(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let integrate = |f: &dyn Fn(&NodeIntegrand) -> f64| -> f64 {
        let terms: Vec<f64> = vals.iter().zip(&atlas.nodes).map(|(v, n)| n.weight * f(v)).collect();
        pairwise_sum(&terms)
    };
    let int_wplus_sq = integrate(&|v| v.wplus_sq);
    let int_wminus_sq = integrate(&|v| v.wminus_sq);
    let int_s2_over_24 = integrate(&|v| v.scalar * v.scalar / 24.0);
    let int_ric0_sq = integrate(&|v| v.ric0_sq);
    let tau = (int_wplus_sq - int_wminus_sq) / (12.0 * PI * PI);
    let chi_minus_3tau =
        (int_s2_over_24 - int_wplus_sq + 3.0 * int_wminus_sq - 0.5 * int_ric0_sq) / (8.0 * PI * PI);

    Ok(InvariantReport {
        orientation,
        node_count: atlas.nodes.len(),
        volume: atlas.volume(),
        int_wplus_sq,
        int_wminus_sq,
        int_s2_over_24,
        int_ric0_sq,
        tau,
        chi_minus_3tau,
        chi: chi_minus_3tau + 3.0 * tau,
        integrand_stats: IntegrandStats {
            wplus_sq: Range::of(vals.iter().map(|v| v.wplus_sq)),
            wminus_sq: Range::of(vals.iter().map(|v| v.wminus_sq)),
            scalar: Range::of(vals.iter().map(|v| v.scalar)),
            ric0_sq: Range::of(vals.iter().map(|v| v.ric0_sq)),
        },
    })
}

/// `∫|W⁺|²` against `∫s²/24`; `gap` is their signed difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylScalarComparison {
    pub int_wplus_sq: f64,
    pub int_s2_over_24: f64,
    pub gap: f64,
    /// `gap / max(∫s²/24, ∫|W⁺|²)`.
    pub relative_gap: f64,
    /// `W⁺` vanishes identically, so the comparison is only reported.
    pub wplus_vanishes: bool,
}

impl WeylScalarComparison {
    pub fn from_report(r: &InvariantReport) -> Self {
        let gap = r.int_wplus_sq - r.int_s2_over_24;
        let denom = r.int_s2_over_24.abs().max(r.int_wplus_sq.abs());
        WeylScalarComparison {
            int_wplus_sq: r.int_wplus_sq,
            int_s2_over_24: r.int_s2_over_24,
            gap,
            relative_gap: if denom > 0.0 { gap / denom } else { 0.0 },
            wplus_vanishes: r.integrand_stats.wplus_sq.max <= 1e-12 * r.integrand_stats.scalar.max.abs().max(1.0).powi(2),
        }
    }
}

pub fn gursky_lebrun_comparison(
    metric: &ChartMetric,
    atlas: &QuadratureAtlas,
) -> Result<WeylScalarComparison, InvariantError> {
    let r = integrate_invariants(metric, atlas, Orientation::Positive)?;
    Ok(WeylScalarComparison::from_report(&r))
}
