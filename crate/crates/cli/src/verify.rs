//! Named verification suites over the model catalog and random spectra.

use std::f64::consts::SQRT_2;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use weylpinch::curvature::{curvature_at, weyl_plus_at};
use weylpinch::forms::{curvature_operator, form_from_lambda, orthonormal_frame, Orientation};
use weylpinch::identities::{
    ab_minus_c2, ab_minus_c2_expansions, laplacian_rhs, norm_chain, phi_combination, psi_factored_residual, psi_k,
    psi_value, sign_lemma_nonnegative_scalar, sign_lemma_nonpositive_scalar, weitzenboeck_gap, zero_forcing,
    LambdaTriple, PsiInputs,
};
use weylpinch::kahler::{
    extremize_curvatures, kahler_pointwise_identities, sphere_average_h, unitary_frame_for_asd_form,
    verify_biorthogonal_extremes, verify_bisectional_extremes, verify_holomorphic_extremes, KahlerPoint,
    KahlerStructure, SampleBudget,
};
use weylpinch::metric::{parse_metric_spec, ChartMetric, DerivativeBackend};
use weylpinch::models::{builtin_model, sample_point, Model};
use weylpinch::spectral::{polombo_constant, spectrum, PinchReport};

use crate::analyze::{
    integrate_model, record_invariant_checks, InvariantChecks, TOL_AVERAGE, TOL_DIVERGENCE, TOL_EXTREMES,
    TOL_KAHLER_IDENTITY, TOL_KAHLER_SPECTRUM, TOL_RIC0, TOL_WEITZENBOECK,
};
use crate::checks::CheckLog;
use crate::config::Format;
use crate::report::{GlobalRecords, InvariantRecord};
use crate::CliError;

pub const SUITES: [&str; 11] = [
    "all",
    "lemma1",
    "lemma2",
    "lemma3",
    "prop2",
    "berger",
    "hall_murphy",
    "psi",
    "weitzenboeck",
    "signature",
    "chi",
];

pub const TOL_FRAME: f64 = 1e-9;
pub const TOL_IDENTITY_SWEEP: f64 = 1e-10;
pub const TOL_BACKENDS: f64 = 1e-6;
pub const DEFAULT_ORDER: usize = 32;
const EXACT_CASES: usize = 100;

#[derive(Debug, Clone, Serialize)]
pub struct VerifyConfig {
    pub suite: String,
    /// Sample count for sweeps and random-point suites; sphere samples for
    /// the extremization suites. `None` selects each suite's default.
    pub budget: Option<usize>,
    pub quadrature_order: usize,
    pub format: Format,
}

pub struct VerifyOutcome {
    pub checks: CheckLog,
    pub global: GlobalRecords,
}

pub fn check_suite(name: &str) -> Result<(), CliError> {
    if SUITES.contains(&name) {
        Ok(())
    } else {
        Err(CliError::Config(format!("unknown suite {name:?}; expected one of {}", SUITES.join(", "))))
    }
}

struct Ctx {
    seed: u64,
    budget: Option<usize>,
    order: usize,
    log: CheckLog,
    integrals: Vec<(InvariantRecord, bool)>,
}

impl Ctx {
    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    fn count(&self, default: usize) -> usize {
        self.budget.unwrap_or(default)
    }

    fn sphere_budget(&self) -> SampleBudget {
        SampleBudget {
            sphere_points: self.budget.unwrap_or(SampleBudget::default().sphere_points),
            ..SampleBudget::default()
        }
    }
}

fn model(name: &str, p: &[f64]) -> ChartMetric {
    builtin_model(name, p).expect("catalog model")
}

fn label(name: &str, p: &[f64]) -> String {
    let ps: Vec<String> = p.iter().map(|x| x.to_string()).collect();
    format!("{name}({})", ps.join(","))
}

/// A non-diagonal metric with the pointwise frame-adapted almost complex
/// structure, which is orthogonal but not Kähler.
pub fn hermitian_test_metric() -> ChartMetric {
    parse_metric_spec(
        "name: warped_hermitian\ncoords: x y z w\n\
         g[1][1] = 1 + 0.2*sin(y)^2\ng[1][2] = 0.1*cos(z)\ng[2][2] = exp(0.3*x)\n\
         g[3][3] = 1 + 0.1*x^2\ng[4][4] = 2 + sin(x*z)\ng[3][4] = 0.2*sin(y)",
    )
    .expect("valid test metric")
}

fn kahler_models() -> Vec<(&'static str, Vec<f64>)> {
    vec![
        ("fubini_study_cp2", vec![1.0]),
        ("product_s2xs2", vec![1.0, 1.0]),
        ("product_s2xs2", vec![1.0, 2.0]),
        ("complex_hyperbolic_ch2", vec![1.0]),
    ]
}

fn kahler_point(m: &ChartMetric, rng: &mut ChaCha8Rng) -> Result<KahlerPoint, CliError> {
    KahlerPoint::at(m, sample_point(m, rng)).map_err(|e| CliError::Numerical(e.to_string()))
}

fn num_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numerical(e.to_string())
}

fn lemma1(ctx: &mut Ctx) -> Result<(), CliError> {
    const S: &str = "lemma1";
    let k = KahlerStructure::flat_standard();
    let mut rng = ctx.rng(1);
    for _ in 0..ctx.count(1000) {
        let v = loop {
            let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if n > 1e-3 && n <= 1.0 {
                break v.map(|x| x / n);
            }
        };
        let phi = form_from_lambda(&[0.0; 3], &v) * SQRT_2;
        let uf = unitary_frame_for_asd_form(&phi, &k).map_err(num_err)?;
        ctx.log.residual(S, "reconstruction", "φ = E₁∧JE₁ − E₃∧JE₃ for a unitary frame", uf.reconstruction_residual, TOL_FRAME);
        ctx.log.residual(S, "orthonormality", "the frame (E₁, JE₁, E₃, JE₃) is orthonormal", uf.orthonormality_defect, TOL_FRAME);
    }
    Ok(())
}

fn kahler_spectrum_sweep(ctx: &mut Ctx, suite: &str) -> Result<(), CliError> {
    let mut rng = ctx.rng(2);
    for (name, p) in kahler_models() {
        let m = model(name, &p);
        for _ in 0..50 {
            let c = curvature_at(&m, sample_point(&m, &mut rng)).map_err(num_err)?;
            let f = orthonormal_frame(&c.metric, Orientation::Positive).map_err(num_err)?;
            let sp = spectrum(&curvature_operator(&c, &f).map_err(num_err)?).map_err(num_err)?;
            let s = c.scalar;
            let want = if s > 0.0 {
                [-s / 12.0, -s / 12.0, s / 6.0]
            } else {
                [s / 6.0, -s / 12.0, -s / 12.0]
            };
            let r = (0..3).map(|k| (sp.lambda_plus[k] - want[k]).abs()).fold(0.0, f64::max) / s.abs();
            ctx.log.residual(suite, &format!("kahler_wplus_spectrum:{}", label(name, &p)), "Kähler W⁺ spectrum is (−s/12, −s/12, s/6)", r, TOL_KAHLER_SPECTRUM);
        }
    }
    Ok(())
}

fn lemma2(ctx: &mut Ctx) -> Result<(), CliError> {
    const S: &str = "lemma2";
    kahler_spectrum_sweep(ctx, S)?;
    let budget = ctx.sphere_budget();
    let mut rng = ctx.rng(3);
    for (name, p, einstein) in [
        ("product_s2xs2", vec![1.0, 2.0], false),
        ("fubini_study_cp2", vec![1.0], true),
        ("complex_hyperbolic_ch2", vec![1.0], true),
    ] {
        let m = model(name, &p);
        let tag = label(name, &p);
        for _ in 0..5 {
            let kp = kahler_point(&m, &mut rng)?;
            let sc = kp.scale().max(1.0);
            let samples = extremize_curvatures(&kp, budget).map_err(num_err)?;
            let b = verify_bisectional_extremes(&kp, &samples).map_err(num_err)?;
            ctx.log.residual(S, &format!("bisectional_min:{tag}"), "s/6 − λ₃⁻ = 2 B min", b.residual_min / sc, TOL_EXTREMES);
            ctx.log.residual(S, &format!("bisectional_max:{tag}"), "s/6 − λ₁⁻ = 2 B max", b.residual_max / sc, TOL_EXTREMES);
            for r in kahler_pointwise_identities(&kp, einstein).map_err(num_err)? {
                ctx.log.residual(S, &format!("{}:{tag}", r.name), "Kähler curvature identity", r.residual / sc, TOL_KAHLER_IDENTITY);
            }
        }
    }
    Ok(())
}

fn lemma3(ctx: &mut Ctx) -> Result<(), CliError> {
    const S: &str = "lemma3";
    let budget = ctx.sphere_budget();
    let mut rng = ctx.rng(4);
    for (name, p) in [
        ("fubini_study_cp2", vec![1.0]),
        ("product_s2xs2", vec![1.0, 1.0]),
        ("complex_hyperbolic_ch2", vec![1.0]),
    ] {
        let m = model(name, &p);
        let tag = label(name, &p);
        for _ in 0..5 {
            let kp = kahler_point(&m, &mut rng)?;
            let sc = kp.scale().max(1.0);
            let samples = extremize_curvatures(&kp, budget).map_err(num_err)?;
            let h = verify_holomorphic_extremes(&kp, &samples).map_err(num_err)?;
            ctx.log.residual(S, &format!("holomorphic_max:{tag}"), "H max = s/6 + λ₃⁻/2", h.residual_max / sc, TOL_EXTREMES);
            ctx.log.residual(S, &format!("holomorphic_min:{tag}"), "H min = s/6 + λ₁⁻/2", h.residual_min / sc, TOL_EXTREMES);
            if name == "product_s2xs2" {
                let st = "product of unit spheres has (H max, H min, H av) = (1, 1/2, 2/3)";
                ctx.log.residual(S, "product_h_max", st, samples.h_max - 1.0, TOL_EXTREMES);
                ctx.log.residual(S, "product_h_min", st, samples.h_min - 0.5, TOL_EXTREMES);
                ctx.log.residual(S, "product_h_av", st, samples.h_av - 2.0 / 3.0, TOL_EXTREMES);
            }
        }
    }
    // the standing hypothesis: Einstein with harmonic W⁺
    for (name, p) in [("fubini_study_cp2", vec![1.0]), ("round_s4", vec![1.0]), ("product_s2xs2", vec![1.0, 1.0])] {
        let m = model(name, &p);
        let tag = label(name, &p);
        for _ in 0..20 {
            let x = sample_point(&m, &mut rng);
            let c = curvature_at(&m, x).map_err(num_err)?;
            let f = orthonormal_frame(&c.metric, Orientation::Positive).map_err(num_err)?;
            let b = curvature_operator(&c, &f).map_err(num_err)?;
            ctx.log.residual(S, &format!("ric0_block:{tag}"), "traceless Ricci block vanishes", b.ric0_block.norm(), TOL_RIC0);
            let w = weyl_plus_at(&m, x, Orientation::Positive).map_err(num_err)?;
            ctx.log.residual(S, &format!("harmonic_wplus:{tag}"), "δW⁺ vanishes", w.divergence_norm, TOL_DIVERGENCE);
        }
    }
    Ok(())
}

fn prop2(ctx: &mut Ctx) -> Result<(), CliError> {
    const S: &str = "prop2";
    let budget = ctx.sphere_budget();
    let mut rng = ctx.rng(5);
    let mut models = kahler_models();
    models.push(("round_s4", vec![1.0]));
    for (name, p) in models {
        let m = model(name, &p);
        let tag = label(name, &p);
        for _ in 0..5 {
            let kp = kahler_point(&m, &mut rng)?;
            let sc = kp.scale().max(1.0);
            let samples = extremize_curvatures(&kp, budget).map_err(num_err)?;
            let b = verify_biorthogonal_extremes(&kp, &samples);
            ctx.log.residual(S, &format!("kperp_max:{tag}"), "K⊥ max − s/12 = (λ₃⁺+λ₃⁻)/2", b.residual_max / sc, TOL_EXTREMES);
            ctx.log.residual(S, &format!("kperp_min:{tag}"), "K⊥ min − s/12 = (λ₁⁺+λ₁⁻)/2", b.residual_min / sc, TOL_EXTREMES);
            if kp.kahler.is_integrable_kahler {
                for c in &b.sign_checks {
                    ctx.log.holds(S, &format!("{}:{tag}", c.name), "K⊥ extreme compared with half the bisectional extreme", c.holds);
                }
            }
        }
    }
    Ok(())
}

fn berger(ctx: &mut Ctx) -> Result<(), CliError> {
    const S: &str = "berger";
    let mut rng = ctx.rng(6);
    let n = ctx.count(20);
    for (name, p) in kahler_models() {
        let m = model(name, &p);
        let tag = label(name, &p);
        for _ in 0..n {
            let kp = kahler_point(&m, &mut rng)?;
            let a = sphere_average_h(&kp);
            let sc = kp.scale().max(1.0);
            ctx.log.residual(S, &format!("average:{tag}"), "H averages to s/6 on Kähler surfaces", (a.h_av - a.berger_pred) / sc, TOL_AVERAGE);
        }
    }
    Ok(())
}

fn hall_murphy(ctx: &mut Ctx) -> Result<(), CliError> {
    const S: &str = "hall_murphy";
    let mut rng = ctx.rng(7);
    let n = ctx.count(20);
    for m in [model("round_s4", &[1.0]), hermitian_test_metric()] {
        let tag = m.name.clone();
        for _ in 0..n {
            let kp = kahler_point(&m, &mut rng)?;
            let a = sphere_average_h(&kp);
            let sc = kp.scale().max(1.0);
            ctx.log.holds(S, &format!("non_kahler:{tag}"), "the structure is orthogonal but not Kähler", !kp.kahler.is_integrable_kahler);
            ctx.log.residual(S, &format!("average:{tag}"), "H averages to (s + 3s*)/24 for orthogonal J", (a.h_av - a.hall_murphy_pred) / sc, TOL_AVERAGE);
        }
    }
    Ok(())
}

fn random_triple(rng: &mut ChaCha8Rng) -> LambdaTriple<f64> {
    LambdaTriple::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn random_rational(rng: &mut ChaCha8Rng) -> BigRational {
    BigRational::new(BigInt::from(rng.gen_range(-60i64..=60)), BigInt::from(rng.gen_range(1i64..=24)))
}

fn psi(ctx: &mut Ctx) -> Result<(), CliError> {
    const S: &str = "psi";
    let mut rng = ctx.rng(8);
    let n = ctx.count(100_000);
    for _ in 0..n {
        let t = random_triple(&mut rng);
        let l4 = t.l3().powi(4).max(f64::MIN_POSITIVE);
        ctx.log.residual(S, "ab_minus_c2", "AB − C² = 0 at k = 2/3", ab_minus_c2(&t) / l4, TOL_IDENTITY_SWEEP);
        ctx.log.residual(S, "psi_factored", "Ψ coefficients factor at k = 2/3", psi_factored_residual(&t), TOL_IDENTITY_SWEEP);

        let p = random_psi_inputs(&mut rng, true);
        let value = psi_value(&p);
        let sc = p.triple.scale().powi(2) * (p.a_norm_sq + p.c_norm_sq).max(1e-300);
        ctx.log.holds(S, "psi_nonnegative", "Ψ ≥ 0 when λ₁ + λ₃ ≥ 0", value >= -1e-12 * sc);

        let s: f64 = rng.gen_range(-3.0..3.0);
        let (lhs, rhs) = phi_combination(&p, &s);
        let sc3 = p.triple.scale().max(s.abs()).max(1e-300).powi(3) * (1.0 + p.a_norm_sq + p.c_norm_sq);
        ctx.log.residual(S, "phi_combination", "ΦΔΦ + k|∇Φ|² = λ₂(2λ₂² + 4λ₁λ₃ − λ₂s/2) + Ψ", (lhs - rhs) / sc3, TOL_IDENTITY_SWEEP);
        let lap = laplacian_rhs(&p.triple, &s, &p.a_norm_sq, &rng.gen_range(0.0..1.0), &p.c_norm_sq);
        ctx.log.residual(S, "laplacian_trace", "Δλ₁ + Δλ₂ + Δλ₃ = 0", (lap[0] + lap[1] + lap[2]) / sc3, TOL_IDENTITY_SWEEP);

        // nonpositive scalar curvature: λ₁ + λ₃ ≥ 0, s ≤ 0
        let t = pinched_triple(&mut rng);
        let s = -rng.gen_range(0.0..3.0);
        let r = sign_lemma_nonpositive_scalar(&t, &s);
        ctx.log.holds(S, "sign_nonpositive_scalar", "2λ₂² + 4λ₁λ₃ − λ₂s/2 ≤ 0 when λ₁+λ₃ ≥ 0, s ≤ 0", r.is_nonpositive);

        // nonnegative scalar curvature: λ₂ ≤ −s/12, s ≥ 0
        let s = rng.gen_range(0.0..3.0);
        let t = loop {
            let t = random_triple(&mut rng);
            if t.l2() <= -s / 12.0 {
                break t;
            }
        };
        let r = sign_lemma_nonnegative_scalar(&t, &s);
        ctx.log.holds(S, "sign_nonnegative_scalar", "2λ₂² + 4λ₁λ₃ − λ₂s/2 ≤ −λ₂(6λ₂ + s/2) ≤ 0 when λ₂ ≤ −s/12", r.is_nonpositive && r.chain_holds);

        let t = random_triple(&mut rng);
        if t.scale() > 1e-6 {
            let q = PinchReport::evaluate(*t.values(), 0.0);
            let agree = q.det_nonneg == q.sum13_nonneg && q.sum13_nonneg == (q.lambda2_sign <= 0);
            ctx.log.holds(S, "pinch_equivalence", "det W ≥ 0 ⇔ λ₁+λ₃ ≥ 0 ⇔ λ₂ ≤ 0", agree);
        }
        let (ante, cons) = zero_forcing(&t);
        ctx.log.holds(S, "zero_forcing", "λ₂ = 0 with a repeated eigenvalue forces W = 0", !ante || cons);
    }

    let two = BigRational::from_integer(2.into());
    for _ in 0..EXACT_CASES {
        let t = LambdaTriple::new(random_rational(&mut rng), random_rational(&mut rng), random_rational(&mut rng));
        let exact = ab_minus_c2(&t).is_zero() && ab_minus_c2_expansions(&t).iter().all(Zero::is_zero);
        ctx.log.holds(S, "ab_minus_c2_exact", "AB − C² = 0 exactly over the rationals", exact);
        let id = t.norm_sq() == two.clone() * (t.l1() * t.l1() - t.l2() * t.l3());
        ctx.log.holds(S, "norm_identity_exact", "|W|² = 2(λ₁² − λ₂λ₃) exactly", id);
    }

    // Polombo band constant and hand-computed memberships
    ctx.log.residual(S, "polombo_constant", "8(1 − √3/2) = 1.0717967697…", polombo_constant() - 1.071_796_769_724_490_8, 1e-15);
    // λ₃ must lie in [1.0718·|λ₁|, 2|λ₁|]
    for (l, inside) in [
        ([-1.0, -0.08, 1.08], true),
        ([-1.0, -0.06, 1.06], false),
        ([-1.0, -0.5, 1.5], true),
        ([-1.0, -1.0, 2.0], true),
        ([-1.0, 0.0, 1.0], false),
        ([-2.0, 1.0, 1.0], false),
    ] {
        let q = PinchReport::evaluate(l, 0.0);
        ctx.log.holds(S, "polombo_band_cases", "hand-computed Polombo band memberships", q.polombo_band == inside);
    }
    Ok(())
}

fn pinched_triple(rng: &mut ChaCha8Rng) -> LambdaTriple<f64> {
    loop {
        let t = random_triple(rng);
        if t.l1() + t.l3() >= 0.0 {
            return t;
        }
    }
}

fn random_psi_inputs(rng: &mut ChaCha8Rng, pinched: bool) -> PsiInputs<f64> {
    let t = if pinched { pinched_triple(rng) } else { random_triple(rng) };
    let a: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let c: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let dot = |u: &[f64; 3], v: &[f64; 3]| u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    PsiInputs::new(t, dot(&a, &a), dot(&c, &c), dot(&a, &c), psi_k()).expect("Cauchy–Schwarz holds for real vectors")
}

fn weitzenboeck(ctx: &mut Ctx) -> Result<(), CliError> {
    const S: &str = "weitzenboeck";
    let mut rng = ctx.rng(9);
    for _ in 0..ctx.count(100_000) {
        let s: f64 = rng.gen_range(-30.0..30.0);
        let t = LambdaTriple::new(-s / 12.0, -s / 12.0, s / 6.0);
        let sc = s.abs().max(1e-300).powi(3);
        ctx.log.residual(S, "kahler_gap", "36 det W⁺ = s|W⁺|² on Kähler spectra", weitzenboeck_gap(&t, &s) / sc, TOL_WEITZENBOECK);

        let t = random_triple(&mut rng);
        let s = rng.gen_range(0.0..3.0);
        let c = norm_chain(&t, s);
        ctx.log.holds(S, "norm_identity", "|W|² = 2(λ₁² − λ₂λ₃) ≤ 6λ₁²", c.identity_holds && c.six_bound);
        ctx.log.holds(S, "norm_lower_link", "|W|/√6 ≤ −λ₁", c.first_link);
        if c.precondition_holds {
            ctx.log.holds(S, "norm_upper_link", "−λ₁ ≤ s/12 when −s/12 ≤ λ₁", c.second_link);
        }
    }
    let m = model("fubini_study_cp2", &[1.0]);
    let mut rng = ctx.rng(10);
    for _ in 0..20 {
        let c = curvature_at(&m, sample_point(&m, &mut rng)).map_err(num_err)?;
        let f = orthonormal_frame(&c.metric, Orientation::Positive).map_err(num_err)?;
        let sp = spectrum(&curvature_operator(&c, &f).map_err(num_err)?).map_err(num_err)?;
        let [a, b, d] = sp.lambda_plus;
        let gap = weitzenboeck_gap(&LambdaTriple::new(a, b, d), &c.scalar);
        ctx.log.residual(S, "fubini_study_gap", "the gap closes on the computed Fubini–Study spectrum", gap / c.scalar.powi(3), TOL_WEITZENBOECK);
    }
    Ok(())
}

const COMPACT_CATALOG: [(&str, &[f64]); 4] = [
    ("flat_t4", &[]),
    ("round_s4", &[1.0]),
    ("fubini_study_cp2", &[1.0]),
    ("product_s2xs2", &[1.0, 1.0]),
];

fn integrals(ctx: &mut Ctx) -> Result<(), CliError> {
    if !ctx.integrals.is_empty() {
        return Ok(());
    }
    for (name, p) in COMPACT_CATALOG {
        let m = model(name, p);
        let kahler = Model::from_name(name).is_some_and(|x| x.is_kahler() && x != Model::FlatT4);
        let rec = integrate_model(&m, ctx.order, Orientation::Positive)?;
        ctx.integrals.push((rec, kahler));
    }
    Ok(())
}

fn signature(ctx: &mut Ctx) -> Result<(), CliError> {
    integrals(ctx)?;
    for (rec, kahler) in &ctx.integrals {
        let which = InvariantChecks {
            tau: true,
            chi: false,
            kahler_equality: *kahler,
            volume: true,
            spread: true,
        };
        record_invariant_checks(rec, which, &mut ctx.log, "signature");
    }
    Ok(())
}

fn chi(ctx: &mut Ctx) -> Result<(), CliError> {
    integrals(ctx)?;
    for (rec, _) in &ctx.integrals {
        let which = InvariantChecks {
            tau: false,
            chi: true,
            kahler_equality: false,
            volume: false,
            spread: false,
        };
        record_invariant_checks(rec, which, &mut ctx.log, "chi");
    }
    Ok(())
}

/// Hyperdual and finite-difference second derivatives across the catalog.
fn backends(ctx: &mut Ctx) -> Result<(), CliError> {
    const S: &str = "backends";
    let mut rng = ctx.rng(11);
    for m in Model::ALL {
        let hd = model(m.name(), &[]);
        let fd = hd.clone().with_backend(DerivativeBackend::FiniteDifference);
        for _ in 0..10 {
            let x = sample_point(&hd, &mut rng);
            let a = hd.metric_at(x).map_err(num_err)?;
            let b = fd.metric_at(x).map_err(num_err)?;
            let mut worst = 0.0f64;
            for (u, v) in a.d2g.iter().flatten().flatten().flatten().zip(b.d2g.iter().flatten().flatten().flatten()) {
                worst = worst.max((u - v).abs() / u.abs().max(1.0));
            }
            ctx.log.residual(S, &format!("d2g:{}", m.name()), "hyperdual and finite-difference ∂²g agree", worst, TOL_BACKENDS);
        }
    }
    Ok(())
}

pub fn run_verify(cfg: &VerifyConfig, seed: u64) -> Result<VerifyOutcome, CliError> {
    check_suite(&cfg.suite)?;
    let mut ctx = Ctx {
        seed,
        budget: cfg.budget,
        order: cfg.quadrature_order,
        log: CheckLog::new(),
        integrals: Vec::new(),
    };
    let all = cfg.suite == "all";
    let run = |name: &str| all || cfg.suite == name;
    if run("lemma1") {
        lemma1(&mut ctx)?;
    }
    if run("lemma2") {
        lemma2(&mut ctx)?;
    }
    if run("lemma3") {
        lemma3(&mut ctx)?;
    }
    if run("prop2") {
        prop2(&mut ctx)?;
    }
    if run("berger") {
        berger(&mut ctx)?;
    }
    if run("hall_murphy") {
        hall_murphy(&mut ctx)?;
    }
    if run("psi") {
        psi(&mut ctx)?;
    }
    if run("weitzenboeck") {
        weitzenboeck(&mut ctx)?;
    }
    if run("signature") {
        signature(&mut ctx)?;
    }
    if run("chi") {
        chi(&mut ctx)?;
    }
    if all {
        backends(&mut ctx)?;
    }
    let global = GlobalRecords {
        invariants: ctx.integrals.into_iter().map(|(r, _)| r).collect(),
        skipped: Vec::new(),
    };
    Ok(VerifyOutcome { checks: ctx.log, global })
}
