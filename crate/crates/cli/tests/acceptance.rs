//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Tolerances are pinned here rather than taken
//! from the library so that loosening a library constant cannot hide a
//! regression.

use std::process::Command;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use weylpinch::curvature::{curvature_at, weyl_plus_at};
use weylpinch::forms::{curvature_operator, orthonormal_frame, Orientation};
use weylpinch::kahler::{
    extremize_curvatures, sphere_average_h, verify_biorthogonal_extremes, verify_bisectional_extremes,
    verify_holomorphic_extremes, KahlerPoint, SampleBudget,
};
use weylpinch::metric::{ChartMetric, DerivativeBackend};
use weylpinch::models::{builtin_model, sample_point, Model};
use weylpinch::spectral::spectrum;
use weylpinch_cli::checks::CheckRecord;
use weylpinch_cli::config::Format;
use weylpinch_cli::verify::{hermitian_test_metric, run_verify, VerifyConfig, VerifyOutcome};

type Outcome = Result<String, String>;

fn model(name: &str, p: &[f64]) -> ChartMetric {
    builtin_model(name, p).expect("catalog model")
}

fn rng(salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_0000 + salt)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn verify(suite: &str, budget: Option<usize>) -> Result<VerifyOutcome, String> {
    let cfg = VerifyConfig {
        suite: suite.into(),
        budget,
        quadrature_order: 32,
        format: Format::Json,
    };
    run_verify(&cfg, 0xacce_97a1).map_err(err)
}

fn record<'a>(out: &'a VerifyOutcome, suite: &str, name: &str) -> Result<&'a CheckRecord, String> {
    out.checks
        .records()
        .iter()
        .find(|r| r.suite == suite && r.name == name)
        .ok_or_else(|| format!("missing check {suite}/{name}"))
}

/// The named check passed, saw enough samples, and its worst residual is
/// below the pinned tolerance (zero violations for predicate checks).
fn pinned(out: &VerifyOutcome, suite: &str, name: &str, min_samples: usize, tol: f64) -> Result<f64, String> {
    let r = record(out, suite, name)?;
    ensure(r.pass, || format!("{suite}/{name} failed: {}", r.line()))?;
    ensure(r.samples >= min_samples, || format!("{suite}/{name}: {} samples < {min_samples}", r.samples))?;
    ensure(r.worst_residual < tol || (tol == 0.0 && r.worst_residual == 0.0), || {
        format!("{suite}/{name}: {:e} ≥ {tol:e}", r.worst_residual)
    })?;
    Ok(r.worst_residual)
}

fn kahler_point(m: &ChartMetric, rng: &mut ChaCha8Rng) -> Result<KahlerPoint, String> {
    KahlerPoint::at(m, sample_point(m, rng)).map_err(err)
}

fn criterion_1() -> Outcome {
    let mut rng = rng(1);
    let mut worst = 0.0f64;
    for (name, p) in [
        ("fubini_study_cp2", vec![1.0]),
        ("product_s2xs2", vec![1.0, 1.0]),
        ("product_s2xs2", vec![1.0, 2.0]),
        ("complex_hyperbolic_ch2", vec![1.0]),
    ] {
        let m = model(name, &p);
        for _ in 0..50 {
            let c = curvature_at(&m, sample_point(&m, &mut rng)).map_err(err)?;
            let f = orthonormal_frame(&c.metric, Orientation::Positive).map_err(err)?;
            let sp = spectrum(&curvature_operator(&c, &f).map_err(err)?).map_err(err)?;
            let s = c.scalar;
            let mut want = [-s / 12.0, -s / 12.0, s / 6.0];
            want.sort_by(f64::total_cmp);
            let r = (0..3).map(|k| (sp.lambda_plus[k] - want[k]).abs()).fold(0.0, f64::max) / s.abs();
            ensure(r < 1e-7, || format!("{name}{p:?}: relative residual {r:e}"))?;
            worst = worst.max(r);
        }
    }
    Ok(format!("worst relative residual {worst:.1e} over 4 models x 50 points"))
}

fn criterion_2() -> Outcome {
    let mut rng = rng(2);
    let budget = SampleBudget::default();
    let mut worst = 0.0f64;
    for (name, p) in [
        ("fubini_study_cp2", vec![1.0]),
        ("product_s2xs2", vec![1.0, 1.0]),
        ("complex_hyperbolic_ch2", vec![1.0]),
    ] {
        let m = model(name, &p);
        for _ in 0..5 {
            let kp = kahler_point(&m, &mut rng)?;
            let samples = extremize_curvatures(&kp, budget).map_err(err)?;
            let h = verify_holomorphic_extremes(&kp, &samples).map_err(err)?;
            let r = h.residual_max.abs().max(h.residual_min.abs());
            ensure(r < 1e-6, || format!("{name}: holomorphic extreme residual {r:e}"))?;
            worst = worst.max(r);
            if name == "product_s2xs2" {
                for (got, want) in [(samples.h_max, 1.0), (samples.h_min, 0.5), (samples.h_av, 2.0 / 3.0)] {
                    ensure((got - want).abs() < 1e-6, || format!("product: {got} vs {want}"))?;
                }
            }
        }
    }
    let m = model("product_s2xs2", &[1.0, 2.0]);
    for _ in 0..5 {
        let kp = kahler_point(&m, &mut rng)?;
        let samples = extremize_curvatures(&kp, budget).map_err(err)?;
        let b = verify_bisectional_extremes(&kp, &samples).map_err(err)?;
        let r = b.residual_max.abs().max(b.residual_min.abs());
        ensure(r < 1e-6, || format!("product(1,2): bisectional residual {r:e}"))?;
        worst = worst.max(r);
    }
    Ok(format!("worst |residual| {worst:.1e}; product(1,1) gives (1, 1/2, 2/3)"))
}

fn criterion_3() -> Outcome {
    let mut rng = rng(3);
    let mut worst = 0.0f64;
    for (name, p) in [
        ("fubini_study_cp2", vec![1.0]),
        ("product_s2xs2", vec![1.0, 2.0]),
        ("complex_hyperbolic_ch2", vec![1.0]),
    ] {
        let m = model(name, &p);
        for _ in 0..20 {
            let kp = kahler_point(&m, &mut rng)?;
            let a = sphere_average_h(&kp);
            let r = (a.h_av - a.berger_pred).abs();
            ensure(kp.kahler.is_integrable_kahler, || format!("{name} is not Kähler at a sample"))?;
            ensure(r < 1e-10, || format!("{name}: |H_av − s/6| = {r:e}"))?;
            worst = worst.max(r);
        }
    }
    let m = hermitian_test_metric();
    for _ in 0..20 {
        let kp = kahler_point(&m, &mut rng)?;
        let a = sphere_average_h(&kp);
        let r = (a.h_av - a.hall_murphy_pred).abs();
        ensure(!kp.kahler.is_integrable_kahler, || "test structure is unexpectedly Kähler".into())?;
        ensure(r < 1e-10, || format!("non-Kähler chart: |H_av − (s+3s*)/24| = {r:e}"))?;
        worst = worst.max(r);
    }
    Ok(format!("worst |residual| {worst:.1e} over Kähler and orthogonal non-Kähler structures"))
}

fn criterion_4() -> Outcome {
    let mut rng = rng(4);
    let mut worst = 0.0f64;
    for (name, p) in [
        ("fubini_study_cp2", vec![1.0]),
        ("product_s2xs2", vec![1.0, 1.0]),
        ("product_s2xs2", vec![1.0, 2.0]),
        ("complex_hyperbolic_ch2", vec![1.0]),
    ] {
        let m = model(name, &p);
        for _ in 0..5 {
            let kp = kahler_point(&m, &mut rng)?;
            let samples = extremize_curvatures(&kp, SampleBudget::default()).map_err(err)?;
            let b = verify_biorthogonal_extremes(&kp, &samples);
            let r = b.residual_max.abs().max(b.residual_min.abs());
            ensure(r < 1e-6, || format!("{name}{p:?}: K⊥ residual {r:e}"))?;
            worst = worst.max(r);
        }
    }
    Ok(format!("worst |residual| {worst:.1e}, CH² included"))
}

fn criterion_5() -> Outcome {
    let out = verify("signature", None)?;
    let table = [
        ("flat_t4", 0, 0),
        ("round_s4", 0, 2),
        ("fubini_study_cp2", 1, 3),
        ("product_s2xs2", 0, 4),
    ];
    ensure(out.global.invariants.len() == table.len(), || "expected four integrated models".into())?;
    let mut worst = 0.0f64;
    for (rec, (name, tau, chi)) in out.global.invariants.iter().zip(table) {
        ensure(rec.model == name && rec.order == 32, || format!("unexpected record {} at order {}", rec.model, rec.order))?;
        let r = (rec.tau - f64::from(tau)).abs().max((rec.chi - f64::from(chi)).abs());
        ensure(r < 1e-3, || format!("{name}: (τ, χ) = ({}, {})", rec.tau, rec.chi))?;
        worst = worst.max(r);
        if name == "fubini_study_cp2" || name == "product_s2xs2" {
            let g = rec.wplus_vs_scalar_relative_gap.abs();
            ensure(g < 1e-6, || format!("{name}: ∫|W⁺|² vs ∫s²/24 relative gap {g:e}"))?;
        }
    }
    Ok(format!("(τ, χ) table matched to {worst:.1e} at order 32; Kähler equality holds"))
}

fn criterion_6() -> Outcome {
    let psi = verify("psi", Some(100_000))?;
    pinned(&psi, "psi", "ab_minus_c2", 100_000, 1e-10)?;
    pinned(&psi, "psi", "ab_minus_c2_exact", 100, 0.0)?;
    pinned(&psi, "psi", "psi_nonnegative", 100_000, 0.0)?;
    pinned(&psi, "psi", "norm_identity_exact", 100, 0.0)?;
    pinned(&psi, "psi", "sign_nonpositive_scalar", 100_000, 0.0)?;
    pinned(&psi, "psi", "sign_nonnegative_scalar", 100_000, 0.0)?;
    let w = verify("weitzenboeck", Some(100_000))?;
    let gap = pinned(&w, "weitzenboeck", "kahler_gap", 100_000, 1e-10)?;
    Ok(format!("10⁵-sample sweeps clean, exact rationals exact, Weitzenböck gap {gap:.1e}"))
}

fn criterion_7() -> Outcome {
    let out = verify("lemma1", Some(1000))?;
    let a = pinned(&out, "lemma1", "reconstruction", 1000, 1e-9)?;
    let b = pinned(&out, "lemma1", "orthonormality", 1000, 1e-9)?;
    Ok(format!("1000 forms, reconstruction {a:.1e}, orthonormality {b:.1e}"))
}

fn criterion_8() -> Outcome {
    let out = verify("psi", Some(100_000))?;
    pinned(&out, "psi", "pinch_equivalence", 100_000, 0.0)?;
    pinned(&out, "psi", "polombo_constant", 1, 1e-15)?;
    pinned(&out, "psi", "polombo_band_cases", 6, 0.0)?;
    Ok("predicates agree on 10⁵ triples; band constant and hand cases match".into())
}

fn criterion_9() -> Outcome {
    let mut rng = rng(9);
    let (mut ric, mut div) = (0.0f64, 0.0f64);
    for (name, p) in [("fubini_study_cp2", vec![1.0]), ("round_s4", vec![1.0]), ("product_s2xs2", vec![1.0, 1.0])] {
        let m = model(name, &p);
        for _ in 0..20 {
            let x = sample_point(&m, &mut rng);
            let c = curvature_at(&m, x).map_err(err)?;
            let f = orthonormal_frame(&c.metric, Orientation::Positive).map_err(err)?;
            let r = curvature_operator(&c, &f).map_err(err)?.ric0_block.norm();
            let d = weyl_plus_at(&m, x, Orientation::Positive).map_err(err)?.divergence_norm;
            ensure(r < 1e-8, || format!("{name}: ric₀ block {r:e}"))?;
            ensure(d < 1e-5, || format!("{name}: |δW⁺| {d:e}"))?;
            ric = ric.max(r);
            div = div.max(d);
        }
    }
    Ok(format!("ric₀ block ≤ {ric:.1e}, |δW⁺| ≤ {div:.1e}"))
}

fn run_cli(args: &[&str], threads: &str, out: &std::path::Path) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_weylpinch"))
        .args(args)
        .arg("--output")
        .arg(out)
        .env("WEYLPINCH_THREADS", threads)
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .status()
        .map_err(err)?;
    ensure(status.code() == Some(0), || format!("{args:?} exited with {status}"))?;
    std::fs::read(out).map_err(err)
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let configs: [&[&str]; 3] = [
        &["analyze", "--model", "product_s2xs2(1,2)", "--suites", "all", "--grid", "2x2x2x1", "--order", "8"],
        &["analyze", "--model", "fubini_study_cp2", "--grid", "3x3x2x2", "--format", "csv"],
        &["verify", "lemma2", "--budget", "2000"],
    ];
    for (i, args) in configs.iter().enumerate() {
        let a = run_cli(args, "1", &dir.path().join(format!("a{i}")))?;
        let b = run_cli(args, "3", &dir.path().join(format!("b{i}")))?;
        ensure(!a.is_empty() && a == b, || format!("{args:?}: reports differ between runs"))?;
    }

    let mut rng = rng(10);
    let mut worst = 0.0f64;
    for m in Model::ALL {
        let hd = model(m.name(), &[]);
        let fd = hd.clone().with_backend(DerivativeBackend::FiniteDifference);
        for _ in 0..10 {
            let x = sample_point(&hd, &mut rng);
            let a = hd.metric_at(x).map_err(err)?;
            let b = fd.metric_at(x).map_err(err)?;
            let pairs = a.d2g.iter().flatten().flatten().flatten().zip(b.d2g.iter().flatten().flatten().flatten());
            for (u, v) in pairs {
                // relative once |∂²g| exceeds one
                let r = (u - v).abs() / u.abs().max(1.0);
                ensure(r < 1e-6, || format!("{}: ∂²g {u} vs {v}", m.name()))?;
                worst = worst.max(r);
            }
        }
    }
    Ok(format!("three configs byte-identical across thread counts; ∂²g backends agree to {worst:.1e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("Kähler W⁺ spectrum (−s/12, −s/12, s/6)", criterion_1),
        ("holomorphic and bisectional extremes", criterion_2),
        ("sphere averages of H", criterion_3),
        ("biorthogonal curvature extremes", criterion_4),
        ("signature, Euler characteristic, Kähler equality", criterion_5),
        ("algebraic identity sweeps", criterion_6),
        ("unitary frames for anti-self-dual forms", criterion_7),
        ("pinching predicates and band constants", criterion_8),
        ("Einstein and harmonic W⁺ on models", criterion_9),
        ("determinism and backend agreement", criterion_10),
    ];
    let mut failed = 0;
    for (i, (title, f)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} {title}: PASS ({detail}; {secs:.1}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} {title}: FAIL ({why})", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
