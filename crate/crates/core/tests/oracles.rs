use std::f64::consts::{PI, SQRT_2};

use nalgebra::Vector4;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use weylpinch::curvature::{curvature_at, weyl_plus_at};
use weylpinch::forms::{curvature_operator, form_from_lambda, orthonormal_frame, Orientation};
use weylpinch::identities::{ab_minus_c2, ab_minus_c2_expansions, weitzenboeck_gap, LambdaTriple};
use weylpinch::invariants::{gursky_lebrun_comparison, integrate_invariants};
use weylpinch::kahler::{
    extremize_curvatures, holomorphic_sectional, kahler_pointwise_identities, sphere_average_h,
    unitary_frame_for_asd_form, verify_biorthogonal_extremes, verify_bisectional_extremes,
    verify_holomorphic_extremes, KahlerError, KahlerPoint, KahlerStructure, SampleBudget,
};
use weylpinch::metric::{parse_metric_spec, DerivativeBackend};
use weylpinch::models::{builtin_model, sample_point, Model};
use weylpinch::quadrature::atlas_for;
use weylpinch::spectral::spectrum;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn sphere_christoffels_match_closed_form() {
    let r = 1.3;
    let m = builtin_model("round_s4", &[r]).unwrap();
    let mut rng = rng(1);
    for _ in 0..20 {
        let x = sample_point(&m, &mut rng);
        let c = curvature_at(&m, x).unwrap();
        // g_kk = r² Π_{m<k} sin²x_m, so ∂_i g_kk = 2 cot(x_i) g_kk for i < k
        let gkk = |k: usize| r * r * (0..k).map(|j| x[j].sin().powi(2)).product::<f64>();
        let dg = |i: usize, k: usize| if i < k { 2.0 / x[i].tan() * gkk(k) } else { 0.0 };
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    let expect = if i == k && j == k {
                        0.0
                    } else if i == k {
                        dg(j, k) / (2.0 * gkk(k))
                    } else if j == k {
                        dg(i, k) / (2.0 * gkk(k))
                    } else if i == j {
                        -dg(k, i) / (2.0 * gkk(k))
                    } else {
                        0.0
                    };
                    assert!(
                        (c.gamma[k][i][j] - expect).abs() < 1e-9,
                        "Γ^{k}_{i}{j} at {x:?}: {} vs {expect}",
                        c.gamma[k][i][j]
                    );
                }
            }
        }
    }
}

#[test]
fn sphere_matches_constant_curvature_tensor() {
    let r = 0.7;
    let m = builtin_model("round_s4", &[r]).unwrap();
    let mut rng = rng(2);
    for _ in 0..10 {
        let c = curvature_at(&m, sample_point(&m, &mut rng)).unwrap();
        let g = c.metric.g;
        let k = 1.0 / (r * r);
        for i in 0..4 {
            for j in 0..4 {
                for a in 0..4 {
                    for b in 0..4 {
                        let e = k * (g[(i, a)] * g[(j, b)] - g[(i, b)] * g[(j, a)]);
                        assert!((c.riemann[i][j][a][b] - e).abs() < 1e-9);
                    }
                }
            }
        }
        assert!((c.scalar - 12.0 * k).abs() < 1e-9);
        assert!(c.max_abs_riemann() > 0.0);
        assert!(weylpinch::curvature::max_abs4(&c.weyl) < 1e-9);
    }
}

#[test]
fn catalog_scalar_curvatures() {
    let cases: [(&str, Vec<f64>, f64); 6] = [
        ("flat_t4", vec![], 0.0),
        ("round_s4", vec![2.0], 3.0),
        ("product_s2xs2", vec![1.0, 2.0], 2.5),
        ("product_s2xs2", vec![0.5, 0.5], 16.0),
        ("fubini_study_cp2", vec![2.0], 12.0),
        ("complex_hyperbolic_ch2", vec![0.5], -48.0),
    ];
    let mut rng = rng(3);
    for (name, p, s) in cases {
        let m = builtin_model(name, &p).unwrap();
        for _ in 0..5 {
            let c = curvature_at(&m, sample_point(&m, &mut rng)).unwrap();
            assert!((c.scalar - s).abs() < 1e-9 * s.abs().max(1.0), "{name}: {}", c.scalar);
        }
    }
}

#[test]
fn kahler_models_have_kahler_wplus_spectrum() {
    let mut rng = rng(4);
    for (name, p) in [
        ("fubini_study_cp2", vec![1.0]),
        ("product_s2xs2", vec![1.0, 1.0]),
        ("product_s2xs2", vec![1.0, 2.0]),
        ("complex_hyperbolic_ch2", vec![1.0]),
    ] {
        let m = builtin_model(name, &p).unwrap();
        for _ in 0..10 {
            let c = curvature_at(&m, sample_point(&m, &mut rng)).unwrap();
            let f = orthonormal_frame(&c.metric, Orientation::Positive).unwrap();
            let sp = spectrum(&curvature_operator(&c, &f).unwrap()).unwrap();
            let s = c.scalar;
            let want = if s >= 0.0 {
                [-s / 12.0, -s / 12.0, s / 6.0]
            } else {
                [s / 6.0, -s / 12.0, -s / 12.0]
            };
            for (a, b) in sp.lambda_plus.iter().zip(want) {
                assert!((a - b).abs() < 1e-7 * s.abs(), "{name}: {:?}", sp.lambda_plus);
            }
            assert!(sp.degenerate_plus);
        }
    }
}

#[test]
fn backends_agree_on_second_derivatives() {
    let mut rng = rng(5);
    for model in Model::ALL {
        let m = builtin_model(model.name(), &[]).unwrap();
        let fd = m.clone().with_backend(DerivativeBackend::FiniteDifference);
        for _ in 0..5 {
            let x = sample_point(&m, &mut rng);
            let a = m.metric_at(x).unwrap();
            let b = fd.metric_at(x).unwrap();
            for k in 0..4 {
                for l in 0..4 {
                    for i in 0..4 {
                        for j in 0..4 {
                            let (u, v) = (a.d2g[k][l][i][j], b.d2g[k][l][i][j]);
                            // absolute at unit size, relative where g varies fast near the ball edge
                            let d = (u - v).abs() / u.abs().max(1.0);
                            assert!(d < 1e-6, "{}: d2g differs by {d}", model.name());
                        }
                    }
                }
            }
        }
    }
}

fn fs_volume_oracle(scale: f64) -> f64 {
    // 2π² c² ∫₀^∞ r³/(1+r²)³ dr with r = tan t, composite Simpson in t
    let n = 20_000;
    let h = (PI / 2.0) / n as f64;
    let f = |t: f64| {
        if t >= PI / 2.0 {
            return 0.0;
        }
        let r = t.tan();
        r.powi(3) / (1.0 + r * r).powi(3) / t.cos().powi(2)
    };
    let mut s = f(0.0) + f(PI / 2.0);
    for k in 1..n {
        s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    2.0 * PI * PI * scale * scale * s * h / 3.0
}

#[test]
fn atlas_volumes_match_closed_forms() {
    let flat = builtin_model("flat_t4", &[]).unwrap();
    let v = atlas_for(&flat, 8).unwrap().volume();
    assert!((v - (2.0 * PI).powi(4)).abs() < 1e-10 * v);

    let s4 = builtin_model("round_s4", &[1.0]).unwrap();
    let v = atlas_for(&s4, 32).unwrap().volume();
    assert!((v / (8.0 * PI * PI / 3.0) - 1.0).abs() < 1e-8);

    let prod = builtin_model("product_s2xs2", &[1.0, 2.0]).unwrap();
    let v = atlas_for(&prod, 16).unwrap().volume();
    assert!((v / (16.0 * PI * PI * 4.0) - 1.0).abs() < 1e-10);

    let fs = builtin_model("fubini_study_cp2", &[1.5]).unwrap();
    let v = atlas_for(&fs, 32).unwrap().volume();
    assert!((v / fs_volume_oracle(1.5) - 1.0).abs() < 1e-6, "{v}");
}

#[test]
fn atlas_volumes_converge_under_doubling() {
    for (name, p) in [
        ("round_s4", vec![1.0]),
        ("product_s2xs2", vec![1.0, 1.0]),
        ("fubini_study_cp2", vec![1.0]),
    ] {
        let m = builtin_model(name, &p).unwrap();
        let a = atlas_for(&m, 16).unwrap().volume();
        let b = atlas_for(&m, 32).unwrap().volume();
        assert!(((a - b) / b).abs() < 1e-6, "{name}");
    }
}

#[test]
fn atlas_nodes_lie_inside_the_chart() {
    for model in [Model::FlatT4, Model::RoundS4, Model::ProductS2xS2, Model::FubiniStudyCp2] {
        let m = builtin_model(model.name(), &[]).unwrap();
        for n in atlas_for(&m, 6).unwrap().nodes {
            m.check_point(n.point).unwrap();
            assert!(n.weight > 0.0);
        }
    }
}

#[test]
fn characteristic_numbers_are_integers() {
    let cases = [
        ("flat_t4", vec![], 0.0, 0.0),
        ("round_s4", vec![1.0], 0.0, 2.0),
        ("fubini_study_cp2", vec![1.0], 1.0, 3.0),
        ("product_s2xs2", vec![1.0, 1.0], 0.0, 4.0),
    ];
    for (name, p, tau, chi) in cases {
        let m = builtin_model(name, &p).unwrap();
        let a = atlas_for(&m, 12).unwrap();
        let r = integrate_invariants(&m, &a, Orientation::Positive).unwrap();
        assert!((r.tau - tau).abs() < 1e-3, "{name} τ = {}", r.tau);
        assert!((r.chi - chi).abs() < 1e-3, "{name} χ = {}", r.chi);
        assert!((r.chi - (r.chi_minus_3tau + 3.0 * r.tau)).abs() < 1e-12);
        let st = r.integrand_stats;
        for range in [st.wplus_sq, st.wminus_sq, st.scalar, st.ric0_sq] {
            assert!(range.spread() < 1e-7, "{name}: {range:?}");
        }
        let flipped = integrate_invariants(&m, &a, Orientation::Negative).unwrap();
        assert!((flipped.tau + r.tau).abs() < 1e-6);
        assert!((flipped.chi - r.chi).abs() < 1e-6);
    }
}

#[test]
fn characteristic_numbers_are_scale_invariant() {
    for c in [0.5, 2.0] {
        for (name, p) in [
            ("round_s4", vec![c]),
            ("product_s2xs2", vec![c, c]),
            ("fubini_study_cp2", vec![c * c]),
        ] {
            let base_p: Vec<f64> = if name == "fubini_study_cp2" { vec![1.0] } else { p.iter().map(|_| 1.0).collect() };
            let m = builtin_model(name, &p).unwrap();
            let m0 = builtin_model(name, &base_p).unwrap();
            let r = integrate_invariants(&m, &atlas_for(&m, 10).unwrap(), Orientation::Positive).unwrap();
            let r0 = integrate_invariants(&m0, &atlas_for(&m0, 10).unwrap(), Orientation::Positive).unwrap();
            assert!((r.tau - r0.tau).abs() < 1e-6, "{name} c={c}");
            assert!((r.chi - r0.chi).abs() < 1e-6, "{name} c={c}");
        }
    }
}

#[test]
fn weyl_scalar_integrals_compare_as_expected() {
    let fs = builtin_model("fubini_study_cp2", &[1.0]).unwrap();
    let g = gursky_lebrun_comparison(&fs, &atlas_for(&fs, 12).unwrap()).unwrap();
    assert!(g.relative_gap.abs() < 1e-6);

    let prod = builtin_model("product_s2xs2", &[1.0, 1.0]).unwrap();
    let g = gursky_lebrun_comparison(&prod, &atlas_for(&prod, 12).unwrap()).unwrap();
    assert!(g.relative_gap.abs() < 1e-6);
    let w = weyl_plus_at(&prod, [1.0, 0.5, 2.0, 3.0], Orientation::Positive).unwrap();
    assert!(w.grad_norm_sq < 1e-6);

    let s4 = builtin_model("round_s4", &[1.0]).unwrap();
    let g = gursky_lebrun_comparison(&s4, &atlas_for(&s4, 8).unwrap()).unwrap();
    assert!(g.wplus_vanishes);
    assert!(g.int_wplus_sq < g.int_s2_over_24);
}

#[test]
fn non_compact_model_is_not_integrated() {
    let ch = builtin_model("complex_hyperbolic_ch2", &[]).unwrap();
    let e = atlas_for(&ch, 8).unwrap_err();
    assert!(e.to_string().contains("non-compact"));
}

fn random_rational(rng: &mut ChaCha8Rng) -> BigRational {
    BigRational::new(BigInt::from(rng.gen_range(-50i64..=50)), BigInt::from(rng.gen_range(1i64..=12)))
}

#[test]
fn ab_minus_c2_vanishes_exactly_on_rationals() {
    let mut rng = rng(6);
    let zero = BigRational::from_integer(0.into());
    for _ in 0..100 {
        let t = LambdaTriple::new(random_rational(&mut rng), random_rational(&mut rng), random_rational(&mut rng));
        assert_eq!(t.trace(), zero);
        assert_eq!(ab_minus_c2(&t), zero);
        for e in ab_minus_c2_expansions(&t) {
            assert_eq!(e, zero);
        }
        let s = random_rational(&mut rng);
        // |W|² = 2(λ₁² − λ₂λ₃) exactly
        let two = BigRational::from_integer(2.into());
        assert_eq!(t.norm_sq(), two * (t.l1() * t.l1() - t.l2() * t.l3()));
        // Kähler spectra close the Weitzenböck gap exactly
        let k = LambdaTriple::new(-s.clone() / BigRational::from_integer(12.into()), -s.clone() / BigRational::from_integer(12.into()), s.clone() / BigRational::from_integer(6.into()));
        assert_eq!(weitzenboeck_gap(&k, &s), zero);
    }
}

#[test]
fn unitary_frames_reconstruct_random_asd_forms() {
    let k = KahlerStructure::flat_standard();
    let mut rng = rng(7);
    for _ in 0..1000 {
        let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n < 1e-3 {
            continue;
        }
        let phi = form_from_lambda(&[0.0; 3], &v.map(|x| x / n)) * SQRT_2;
        let uf = unitary_frame_for_asd_form(&phi, &k).unwrap();
        assert!(uf.reconstruction_residual < 1e-9);
        assert!(uf.orthonormality_defect < 1e-10);
        assert!((k.apply(&uf.e1) - uf.je1).norm() < 1e-12);
    }
    let phi = form_from_lambda(&[0.0; 3], &[1.0, 0.0, 0.0]);
    let e = unitary_frame_for_asd_form(&phi, &k).unwrap_err();
    assert!(e.to_string().contains("norm must be √2"));
}

fn samples(name: &str, p: &[f64], x: [f64; 4]) -> (KahlerPoint, weylpinch::kahler::CurvatureSamples) {
    let m = builtin_model(name, p).unwrap();
    let kp = KahlerPoint::at(&m, x).unwrap();
    let s = extremize_curvatures(&kp, SampleBudget::default()).unwrap();
    (kp, s)
}

#[test]
fn product_holomorphic_extremes() {
    let (kp, s) = samples("product_s2xs2", &[1.0, 1.0], [1.2, 0.4, 2.0, 5.0]);
    assert!((s.h_max - 1.0).abs() < 1e-8);
    assert!((s.h_min - 0.5).abs() < 1e-8);
    assert!((s.h_av - 2.0 / 3.0).abs() < 1e-10);
    assert!((s.h_av - 2.0 / 3.0 * s.h_max).abs() < 1e-9);
    assert!((s.h_max - 2.0 * s.h_min).abs() < 1e-9);
    assert!(s.max_gradient_norm < 1e-10);
    let h = verify_holomorphic_extremes(&kp, &s).unwrap();
    assert!(h.residual_max < 1e-6 && h.residual_min < 1e-6);
    let x = Vector4::new(1.0, 0.0, 0.0, 0.0);
    assert!((holomorphic_sectional(&kp, &x).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn fubini_study_has_constant_holomorphic_curvature() {
    let (kp, s) = samples("fubini_study_cp2", &[1.0], [0.3, -0.2, 0.5, 0.1]);
    assert!(s.h_max - s.h_min < 1e-8);
    assert!((s.h_max - kp.scalar() / 6.0).abs() < 1e-9);
    assert!((s.s_star - kp.scalar()).abs() < 1e-9);
    let b = verify_bisectional_extremes(&kp, &s).unwrap();
    assert!(b.residual_min < 1e-8 && b.residual_max < 1e-8);
    assert!((s.b_min - kp.scalar() / 12.0).abs() < 1e-8 && (s.b_max - kp.scalar() / 12.0).abs() < 1e-8);
    for r in kahler_pointwise_identities(&kp, true).unwrap() {
        assert!(r.residual < 1e-8, "{}: {}", r.name, r.residual);
    }
}

#[test]
fn non_einstein_product_bisectional_extremes() {
    let (kp, s) = samples("product_s2xs2", &[1.0, 2.0], [1.0, 2.0, 0.7, 4.0]);
    let b = verify_bisectional_extremes(&kp, &s).unwrap();
    assert!(b.residual_min < 1e-6 && b.residual_max < 1e-6);
    assert!(b.bridge_residual < 1e-9);
    for r in kahler_pointwise_identities(&kp, false).unwrap() {
        assert!(r.residual < 1e-8, "{}: {}", r.name, r.residual);
    }
}

#[test]
fn flat_torus_checks_are_trivial() {
    let (kp, s) = samples("flat_t4", &[], [1.0, 2.0, 3.0, 4.0]);
    let b = verify_bisectional_extremes(&kp, &s).unwrap();
    assert_eq!(b.residual_min, 0.0);
    assert!(kahler_pointwise_identities(&kp, true).unwrap().iter().all(|r| r.residual == 0.0));
}

#[test]
fn biorthogonal_extremes_match_eigenvalue_formula() {
    let (kp, s) = samples("product_s2xs2", &[1.0, 1.0], [1.2, 0.4, 2.0, 5.0]);
    let b = verify_biorthogonal_extremes(&kp, &s);
    assert!(s.kperp_min.abs() < 1e-8);
    assert!(b.residual_min < 1e-8 && b.residual_max < 1e-8);
    assert!(b.sign_checks.iter().all(|c| c.holds));

    let (kp, s) = samples("complex_hyperbolic_ch2", &[1.0], [0.2, -0.1, 0.3, 0.2]);
    let b = verify_biorthogonal_extremes(&kp, &s);
    let lm3 = kp.spectrum.lambda_minus[2];
    assert!((s.kperp_max - (kp.scalar() / 24.0 + lm3 / 2.0)).abs() < 1e-7);
    assert!(b.residual_max < 1e-6 && b.residual_min < 1e-6);
    assert!(b.sign_checks.iter().all(|c| c.holds));

    let (kp, s) = samples("round_s4", &[1.0], [1.0, 1.2, 0.8, 2.0]);
    assert!((s.kperp_max - 1.0).abs() < 1e-9 && (s.kperp_min - 1.0).abs() < 1e-9);
    assert!(verify_biorthogonal_extremes(&kp, &s).residual_max < 1e-9);
}

#[test]
fn kahler_only_checks_reject_other_structures() {
    let (kp, s) = samples("round_s4", &[1.0], [1.0, 1.2, 0.8, 2.0]);
    assert!(matches!(verify_bisectional_extremes(&kp, &s), Err(KahlerError::NotKahler(_))));
    assert!(matches!(kahler_pointwise_identities(&kp, true), Err(KahlerError::NotKahler(_))));
}

#[test]
fn sphere_average_matches_both_predictions() {
    let mut rng = rng(8);
    let warped = parse_metric_spec(
        "name: warped\ncoords: x y z w\ng[1][1] = 1 + 0.2*sin(y)^2\ng[1][2] = 0.1*cos(z)\ng[2][2] = exp(0.3*x)\ng[3][3] = 1 + 0.1*x^2\ng[4][4] = 2 + sin(x*z)\ng[3][4] = 0.2*sin(y)",
    )
    .unwrap();
    for m in [builtin_model("round_s4", &[1.0]).unwrap(), warped] {
        for _ in 0..20 {
            let kp = KahlerPoint::at(&m, sample_point(&m, &mut rng)).unwrap();
            let a = sphere_average_h(&kp);
            assert!((a.h_av - a.hall_murphy_pred).abs() < 1e-10 * kp.scale().max(1.0));
        }
    }
    for name in ["fubini_study_cp2", "product_s2xs2", "complex_hyperbolic_ch2"] {
        let m = builtin_model(name, &[]).unwrap();
        for _ in 0..10 {
            let kp = KahlerPoint::at(&m, sample_point(&m, &mut rng)).unwrap();
            let a = sphere_average_h(&kp);
            assert!((a.h_av - a.berger_pred).abs() < 1e-10 * kp.scale());
            assert!((a.s_star - kp.scalar()).abs() < 1e-9 * kp.scale());
        }
    }
}

#[test]
fn extremes_scale_with_the_metric() {
    let x = [1.0, 2.0, 0.7, 4.0];
    let (_, s1) = samples("product_s2xs2", &[1.0, 2.0], x);
    for c in [0.5, 2.0] {
        let (_, sc) = samples("product_s2xs2", &[c, 2.0 * c], x);
        let k = c * c;
        for (a, b) in [
            (s1.h_max, sc.h_max),
            (s1.h_min, sc.h_min),
            (s1.b_max, sc.b_max),
            (s1.b_min, sc.b_min),
            (s1.kperp_max, sc.kperp_max),
            (s1.kperp_min, sc.kperp_min),
        ] {
            assert!((a - b * k).abs() < 1e-9, "c={c}: {a} vs {}", b * k);
        }
    }
}

#[test]
fn einstein_models_have_harmonic_weyl() {
    let mut rng = rng(9);
    for (name, p) in [("fubini_study_cp2", vec![1.0]), ("round_s4", vec![1.0]), ("product_s2xs2", vec![1.0, 1.0])] {
        let m = builtin_model(name, &p).unwrap();
        for _ in 0..5 {
            let x = sample_point(&m, &mut rng);
            let c = curvature_at(&m, x).unwrap();
            let f = orthonormal_frame(&c.metric, Orientation::Positive).unwrap();
            let b = curvature_operator(&c, &f).unwrap();
            assert!(b.ric0_block.norm() < 1e-8);
            let w = weyl_plus_at(&m, x, Orientation::Positive).unwrap();
            assert!(w.divergence_norm < 1e-5, "{name}: {}", w.divergence_norm);
        }
    }
}

#[test]
fn fubini_study_weitzenboeck_gap_closes() {
    let m = builtin_model("fubini_study_cp2", &[1.0]).unwrap();
    let c = curvature_at(&m, [0.4, 0.1, -0.2, 0.3]).unwrap();
    let f = orthonormal_frame(&c.metric, Orientation::Positive).unwrap();
    let sp = spectrum(&curvature_operator(&c, &f).unwrap()).unwrap();
    let [a, b, d] = sp.lambda_plus;
    let gap = weitzenboeck_gap(&LambdaTriple::new(a, b, d), &c.scalar);
    assert!(gap.abs() < 1e-7);
}
