//! Pointwise and global analysis of one metric.

use std::collections::BTreeMap;

use rayon::prelude::*;

use weylpinch::curvature::{curvature_at, weyl_plus_at};
use weylpinch::forms::{curvature_operator, orthonormal_frame, Orientation};
use weylpinch::identities::{ab_minus_c2, norm_chain, psi_factored_residual, weitzenboeck_gap, LambdaTriple};
use weylpinch::invariants::integrate_invariants;
use weylpinch::kahler::{
    extremize_curvatures, kahler_pointwise_identities, sphere_average_h, verify_biorthogonal_extremes,
    verify_bisectional_extremes, verify_holomorphic_extremes, KahlerPoint, SampleBudget,
};
use weylpinch::metric::{ChartMetric, DIM};
use weylpinch::models::{cell_centred_grid, reference_invariants, Model, ReferenceInvariants};
use weylpinch::quadrature::atlas_for;
use weylpinch::spectral::{triple_inequalities, PinchReport, WeylSpectrum};

use crate::checks::CheckLog;
use crate::config::{orientation_sign, AnalysisConfig, PointSet, Suite};
use crate::report::{
    GlobalRecords, IdentityRecord, InequalityRecord, InvariantRecord, KahlerRecord, PinchRecord,
    PointRecord, ReferenceRecord, SkipRecord, SpectraRecord,
};
use crate::CliError;

pub const TOL_KAHLER_SPECTRUM: f64 = 1e-7;
pub const TOL_RIC0: f64 = 1e-8;
pub const TOL_DIVERGENCE: f64 = 1e-5;
pub const TOL_AVERAGE: f64 = 1e-10;
pub const TOL_EXTREMES: f64 = 1e-6;
pub const TOL_KAHLER_IDENTITY: f64 = 1e-8;
pub const TOL_TRACE: f64 = 1e-9;
pub const TOL_WEITZENBOECK: f64 = 1e-10;
pub const TOL_ALGEBRA: f64 = 1e-10;
pub const TOL_INTEGER: f64 = 1e-3;
pub const TOL_VOLUME: f64 = 1e-6;
pub const TOL_WPLUS_SCALAR: f64 = 1e-6;
pub const TOL_SPREAD: f64 = 1e-7;

/// Model facts used to decide which assertions apply.
#[derive(Debug, Clone)]
pub struct MetricFacts {
    pub model: Option<(Model, Vec<f64>)>,
    pub reference: Option<ReferenceInvariants>,
}

impl MetricFacts {
    pub fn of(metric: &ChartMetric) -> Self {
        match metric.model() {
            Some((m, p)) => MetricFacts {
                model: Some((m, p.to_vec())),
                reference: reference_invariants(m, p).ok(),
            },
            None => MetricFacts {
                model: None,
                reference: None,
            },
        }
    }

    fn einstein(&self) -> bool {
        self.reference.as_ref().is_some_and(|r| r.einstein)
    }

    fn builtin_kahler(&self) -> bool {
        self.reference.as_ref().is_some_and(|r| r.kahler)
    }

    /// Every catalog model is locally symmetric, so `∇R = 0` there.
    fn parallel_curvature(&self) -> bool {
        self.model.is_some()
    }
}

/// Points with their grid multi-indices, validated against the chart.
pub fn resolve_points(set: &PointSet, metric: &ChartMetric) -> Result<Vec<(Vec<usize>, [f64; DIM])>, CliError> {
    let pts: Vec<(Vec<usize>, [f64; DIM])> = match set {
        PointSet::Explicit { points } => points.iter().enumerate().map(|(i, p)| (vec![i], *p)).collect(),
        PointSet::Grid { counts, bounds } => {
            let grid = cell_centred_grid(bounds, *counts);
            grid.into_iter()
                .enumerate()
                .map(|(n, p)| {
                    let mut idx = vec![0; DIM];
                    let mut rest = n;
                    for k in (0..DIM).rev() {
                        idx[k] = rest % counts[k];
                        rest /= counts[k];
                    }
                    (idx, p)
                })
                .collect()
        }
    };
    for (_, p) in &pts {
        metric.check_point(*p).map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(pts)
}

fn triple(l: [f64; 3]) -> LambdaTriple<f64> {
    LambdaTriple::new(l[0], l[1], l[2])
}

fn rel(x: f64, scale: f64) -> f64 {
    x.abs() / scale.abs().max(1.0)
}

struct PointWork<'a> {
    metric: &'a ChartMetric,
    facts: &'a MetricFacts,
    suites: &'a [Suite],
    orientation: Orientation,
    budget: SampleBudget,
}

impl PointWork<'_> {
    fn wants(&self, s: Suite) -> bool {
        self.suites.contains(&s)
    }

    fn run(&self, index: Vec<usize>, point: [f64; DIM]) -> (PointRecord, CheckLog) {
        let mut log = CheckLog::new();
        let mut rec = PointRecord {
            index,
            point,
            scalar: None,
            error: None,
            spectra: None,
            pinch: None,
            kahler: None,
            identities: None,
        };
        if let Err(e) = self.fill(&mut rec, &mut log) {
            rec.error = Some(e.to_string());
            log.holds("analysis", "point_evaluation", "curvature pipeline evaluates at every point", false);
        }
        (rec, log)
    }

    fn fill(&self, rec: &mut PointRecord, log: &mut CheckLog) -> Result<(), weylpinch::Error> {
        let x = rec.point;
        let c = curvature_at(self.metric, x)?;
        let frame = orthonormal_frame(&c.metric, self.orientation)?;
        let blocks = curvature_operator(&c, &frame)?;
        let sp = weylpinch::spectral::spectrum(&blocks)?;
        let s = c.scalar;
        let scale = blocks.full.amax();
        rec.scalar = Some(s);

        if self.wants(Suite::Spectra) {
            rec.spectra = Some(self.spectra(x, &sp, blocks.ric0_block.norm(), s, scale, log));
        }
        if self.wants(Suite::Pinch) {
            rec.pinch = Some(self.pinch(&sp, s, scale, log));
        }
        if self.wants(Suite::Kahler) {
            rec.kahler = Some(self.kahler(x, log)?);
        }
        if self.wants(Suite::Identities) {
            rec.identities = Some(self.identities(&sp, s, log));
        }
        Ok(())
    }

    fn spectra(
        &self,
        x: [f64; DIM],
        sp: &WeylSpectrum,
        ric0: f64,
        s: f64,
        scale: f64,
        log: &mut CheckLog,
    ) -> SpectraRecord {
        const SUITE: &str = "spectra";
        for l in [sp.lambda_plus, sp.lambda_minus] {
            log.residual(SUITE, "trace_free", "Weyl eigenvalues sum to zero", rel(l.iter().sum(), scale), TOL_TRACE);
        }
        if self.facts.builtin_kahler() && self.orientation == Orientation::Positive && s != 0.0 {
            let want = if s > 0.0 {
                [-s / 12.0, -s / 12.0, s / 6.0]
            } else {
                [s / 6.0, -s / 12.0, -s / 12.0]
            };
            let r = (0..3).map(|k| (sp.lambda_plus[k] - want[k]).abs()).fold(0.0, f64::max) / s.abs();
            log.residual(SUITE, "kahler_wplus_spectrum", "Kähler W⁺ spectrum is (−s/12, −s/12, s/6)", r, TOL_KAHLER_SPECTRUM);
        }
        if self.facts.einstein() {
            log.residual(SUITE, "ric0_block", "traceless Ricci block vanishes on Einstein models", ric0, TOL_RIC0);
        }
        let w = weyl_plus_at(self.metric, x, self.orientation).ok();
        if self.facts.parallel_curvature() {
            match &w {
                Some(w) => log.residual(SUITE, "harmonic_wplus", "δW⁺ vanishes on locally symmetric models", w.divergence_norm, TOL_DIVERGENCE),
                None => log.holds(SUITE, "harmonic_wplus_evaluable", "δW⁺ is computable at every point", false),
            }
        }
        SpectraRecord {
            orientation: orientation_sign(self.orientation),
            lambda_plus: sp.lambda_plus,
            lambda_minus: sp.lambda_minus,
            norm_sq_plus: sp.norm_sq_plus,
            norm_sq_minus: sp.norm_sq_minus,
            det_plus: sp.det_plus,
            det_minus: sp.det_minus,
            degenerate_plus: sp.degenerate_plus,
            degenerate_minus: sp.degenerate_minus,
            in_zero_set: sp.in_zero_set,
            ric0_block_norm: ric0,
            grad_wplus_norm_sq: w.as_ref().map(|w| w.grad_norm_sq),
            div_wplus_norm: w.as_ref().map(|w| w.divergence_norm),
        }
    }

    fn pinch(&self, sp: &WeylSpectrum, s: f64, scale: f64, log: &mut CheckLog) -> PinchRecord {
        const SUITE: &str = "pinch";
        let plus = PinchReport::evaluate(sp.lambda_plus, s);
        let minus = PinchReport::evaluate(sp.lambda_minus, s);
        for (p, l) in [(&plus, sp.lambda_plus), (&minus, sp.lambda_minus)] {
            let norm = l.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 * scale.max(1.0) {
                let agree = p.det_nonneg == p.sum13_nonneg && p.sum13_nonneg == (p.lambda2_sign <= 0);
                log.holds(SUITE, "predicate_equivalence", "det ≥ 0 ⇔ λ₁+λ₃ ≥ 0 ⇔ λ₂ ≤ 0", agree);
                // a roundoff-level block is not trace-free to the bounds' precision
                let ok = triple_inequalities(l).iter().all(|q| q.holds);
                log.holds(SUITE, "trace_free_bounds", "|W|/√6 ≤ λ₃, |W|/√6 ≤ −λ₁, |W|² = 2(λ₁²−λ₂λ₃) ≤ 6λ₁²", ok);
            }
        }
        PinchRecord {
            plus: (&plus).into(),
            minus: (&minus).into(),
        }
    }

    fn kahler(&self, x: [f64; DIM], log: &mut CheckLog) -> Result<KahlerRecord, weylpinch::Error> {
        const SUITE: &str = "kahler";
        let kp = KahlerPoint::at(self.metric, x)?;
        let samples = extremize_curvatures(&kp, self.budget)?;
        let avg = sphere_average_h(&kp);
        let kahler = kp.kahler.is_integrable_kahler;
        let sc = kp.scale();
        let mut residuals = BTreeMap::new();
        let mut put = |log: &mut CheckLog, name: &str, statement: &str, v: f64, tol: f64| {
            residuals.insert(name.to_string(), v);
            log.residual(SUITE, name, statement, rel(v, sc), tol);
        };

        put(log, "average_hermitian", "H averages to (s + 3s*)/24 for orthogonal J", avg.h_av - avg.hall_murphy_pred, TOL_AVERAGE);
        let bi = verify_biorthogonal_extremes(&kp, &samples);
        put(log, "kperp_max", "K⊥ max = s/12 + (λ₃⁺+λ₃⁻)/2", bi.residual_max, TOL_EXTREMES);
        put(log, "kperp_min", "K⊥ min = s/12 + (λ₁⁺+λ₁⁻)/2", bi.residual_min, TOL_EXTREMES);
        if kahler {
            put(log, "average_kahler", "H averages to s/6 on Kähler surfaces", avg.h_av - avg.berger_pred, TOL_AVERAGE);
            let b = verify_bisectional_extremes(&kp, &samples)?;
            put(log, "bisectional_min", "s/6 − λ₃⁻ = 2 B min", b.residual_min, TOL_EXTREMES);
            put(log, "bisectional_max", "s/6 − λ₁⁻ = 2 B max", b.residual_max, TOL_EXTREMES);
            put(log, "bisectional_bridge", "H and B extremes are linked through the Ricci form", b.bridge_residual, TOL_EXTREMES);
            if self.facts.einstein() {
                let h = verify_holomorphic_extremes(&kp, &samples)?;
                put(log, "holomorphic_max", "H max = s/6 + λ₃⁻/2", h.residual_max, TOL_EXTREMES);
                put(log, "holomorphic_min", "H min = s/6 + λ₁⁻/2", h.residual_min, TOL_EXTREMES);
            }
            for r in kahler_pointwise_identities(&kp, self.facts.einstein())? {
                put(log, r.name, "Kähler curvature identity", r.residual, TOL_KAHLER_IDENTITY);
            }
            for c in &bi.sign_checks {
                log.holds(SUITE, c.name, "K⊥ extreme compared with half the bisectional extreme", c.holds);
            }
        }
        Ok(KahlerRecord {
            orientation: orientation_sign(kp.frame.orientation),
            integrable_kahler: kahler,
            h_max: samples.h_max,
            h_min: samples.h_min,
            h_av: samples.h_av,
            s_star: samples.s_star,
            b_max: samples.b_max,
            b_min: samples.b_min,
            kperp_max: samples.kperp_max,
            kperp_min: samples.kperp_min,
            max_gradient_norm: samples.max_gradient_norm,
            average_prediction_kahler: avg.berger_pred,
            average_prediction_hermitian: avg.hall_murphy_pred,
            kperp_prediction_max: bi.predicted_max,
            kperp_prediction_min: bi.predicted_min,
            residuals,
        })
    }

    fn identities(&self, sp: &WeylSpectrum, s: f64, log: &mut CheckLog) -> IdentityRecord {
        const SUITE: &str = "identities";
        let t = triple(sp.lambda_plus);
        let scale = t.scale().max(s.abs());
        let gap = weitzenboeck_gap(&t, &s);
        if self.facts.builtin_kahler() && self.orientation == Orientation::Positive {
            log.residual(SUITE, "weitzenboeck_gap", "36 det W⁺ = s|W⁺|² on Kähler spectra", rel(gap, scale.powi(3)), TOL_WEITZENBOECK);
        }
        let nc = norm_chain(&t, s);
        let id_res = (nc.two_l1_sq_minus_l2_l3 - nc.norm_sq).abs();
        log.residual(SUITE, "norm_identity", "|W|² = 2(λ₁² − λ₂λ₃)", rel(id_res, scale * scale), TOL_ALGEBRA);
        let ab = ab_minus_c2(&t);
        log.residual(SUITE, "ab_minus_c2", "AB − C² = 0 at k = 2/3", rel(ab, scale.powi(4)), TOL_ALGEBRA);
        let pf = psi_factored_residual(&t);
        log.residual(SUITE, "psi_factored", "Ψ coefficients factor at k = 2/3", pf, TOL_ALGEBRA);
        log.holds(SUITE, "norm_lower_link", "|W|/√6 ≤ −λ₁", nc.first_link);
        if nc.precondition_holds {
            log.holds(SUITE, "norm_upper_link", "−λ₁ ≤ s/12 when −s/12 ≤ λ₁", nc.second_link);
        }
        IdentityRecord {
            weitzenboeck_gap: gap,
            norm_sq_identity_residual: id_res,
            ab_minus_c2: ab,
            psi_factored_residual: pf,
            inequalities: triple_inequalities(sp.lambda_plus)
                .into_iter()
                .map(|q| InequalityRecord {
                    name: q.name,
                    lhs: q.lhs,
                    rhs: q.rhs,
                    holds: q.holds,
                })
                .collect(),
        }
    }
}

/// Integrates the characteristic numbers of a compact catalog model.
pub fn integrate_model(metric: &ChartMetric, order: usize, orientation: Orientation) -> Result<InvariantRecord, CliError> {
    let facts = MetricFacts::of(metric);
    let (model, params) = facts
        .model
        .clone()
        .ok_or_else(|| CliError::Config("integration needs a built-in model".into()))?;
    let atlas = atlas_for(metric, order).map_err(|e| CliError::Config(e.to_string()))?;
    let r = integrate_invariants(metric, &atlas, orientation).map_err(|e| CliError::Numerical(e.to_string()))?;
    let reference = facts.reference.as_ref().map(|x| ReferenceRecord {
        tau: x.tau,
        chi: x.chi,
        volume: x.volume,
    });
    Ok(InvariantRecord::new(model.name(), &params, &atlas.exactness, order, &r, reference))
}

/// Which assertions to attach to an invariant record.
#[derive(Debug, Clone, Copy)]
pub struct InvariantChecks {
    pub tau: bool,
    pub chi: bool,
    pub kahler_equality: bool,
    pub volume: bool,
    pub spread: bool,
}

impl InvariantChecks {
    pub fn for_model(model: Option<Model>, orientation: Orientation) -> Self {
        let kahler = model.is_some_and(|m| m.is_kahler() && m != Model::FlatT4);
        InvariantChecks {
            tau: true,
            chi: true,
            kahler_equality: kahler && orientation == Orientation::Positive,
            volume: true,
            spread: model.is_some(),
        }
    }
}

/// Targets come from the closed-form reference when there is one and from
/// the nearest integer otherwise.
pub fn record_invariant_checks(rec: &InvariantRecord, which: InvariantChecks, log: &mut CheckLog, suite: &str) {
    let tag = |n: &str| format!("{n}:{}", rec.model);
    let reference = rec.reference.as_ref();
    if which.tau {
        let sign = f64::from(rec.orientation);
        let target = reference.and_then(|x| x.tau).map(|t| sign * f64::from(t)).unwrap_or(rec.tau.round());
        log.residual(suite, &tag("tau"), "signature from ∫(|W⁺|² − |W⁻|²)/12π²", rec.tau - target, TOL_INTEGER);
    }
    if which.chi {
        let target = reference.and_then(|x| x.chi).map(f64::from).unwrap_or(rec.chi.round());
        log.residual(suite, &tag("chi"), "Euler characteristic from the curvature integrals", rec.chi - target, TOL_INTEGER);
    }
    if which.volume {
        if let Some(v) = reference.and_then(|x| x.volume) {
            log.residual(suite, &tag("volume"), "quadrature volume matches the closed form", (rec.volume - v) / v, TOL_VOLUME);
        }
    }
    if which.kahler_equality {
        log.residual(suite, &tag("wplus_equals_scalar"), "∫|W⁺|² = ∫s²/24 for Kähler metrics of constant s", rec.wplus_vs_scalar_relative_gap, TOL_WPLUS_SCALAR);
    }
    if which.spread {
        let spread = [&rec.integrand_wplus_sq, &rec.integrand_wminus_sq, &rec.integrand_scalar, &rec.integrand_ric0_sq]
            .iter()
            .map(|q| (q.max - q.min) / q.max.abs().max(1.0))
            .fold(0.0, f64::max);
        log.residual(suite, &tag("constant_integrands"), "integrands are constant on homogeneous models", spread, TOL_SPREAD);
    }
}

pub struct AnalysisOutcome {
    pub points: Vec<PointRecord>,
    pub global: GlobalRecords,
    pub checks: CheckLog,
}

pub fn run_analyze(cfg: &AnalysisConfig, metric: &ChartMetric) -> Result<AnalysisOutcome, CliError> {
    let facts = MetricFacts::of(metric);
    let pointwise = cfg.suites.iter().any(|s| *s != Suite::Invariants);
    let pts = if pointwise { resolve_points(&cfg.points, metric)? } else { Vec::new() };
    let work = PointWork {
        metric,
        facts: &facts,
        suites: &cfg.suites,
        orientation: cfg.orientation(),
        budget: SampleBudget {
            sphere_points: cfg.sphere_samples,
            ..SampleBudget::default()
        },
    };
    let results: Vec<(PointRecord, CheckLog)> = pts.into_par_iter().map(|(i, p)| work.run(i, p)).collect();
    let mut checks = CheckLog::new();
    let mut points = Vec::with_capacity(results.len());
    for (r, l) in results {
        points.push(r);
        checks.extend(l);
    }

    let mut global = GlobalRecords::default();
    if cfg.suites.contains(&Suite::Invariants) {
        match &facts.model {
            Some((m, _)) if m.is_compact() => {
                let rec = integrate_model(metric, cfg.quadrature_order, cfg.orientation())?;
                let which = InvariantChecks::for_model(Some(*m), cfg.orientation());
                record_invariant_checks(&rec, which, &mut checks, "invariants");
                global.invariants.push(rec);
            }
            Some((m, _)) => global.skipped.push(SkipRecord {
                suite: "invariants".into(),
                reason: format!("{} is non-compact", m.name()),
            }),
            None => global.skipped.push(SkipRecord {
                suite: "invariants".into(),
                reason: "user metrics have no global atlas".into(),
            }),
        }
    }
    Ok(AnalysisOutcome { points, global, checks })
}
