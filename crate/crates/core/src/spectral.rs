//! Spectra of the W± blocks, pinching predicates and pointwise spectral
//! inequalities.

use nalgebra::Matrix3;

use crate::eigen::{eigen3_sym, EigenError};
use crate::forms::{form_from_lambda, OperatorBlocks, TwoForm};

/// `8(1 − √3/2)`, the lower Polombo constant.
pub fn polombo_constant() -> f64 {
    8.0 * (1.0 - 3f64.sqrt() / 2.0)
}

/// Relative threshold on `|W⁺|` for membership of the zero set.
pub const ZERO_SET_TOL: f64 = 1e-8;
/// Relative slack used by the boolean pinching predicates.
pub const PREDICATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct WeylSpectrum {
    pub lambda_plus: [f64; 3],
    pub lambda_minus: [f64; 3],
    pub norm_sq_plus: f64,
    pub norm_sq_minus: f64,
    pub det_plus: f64,
    pub det_minus: f64,
    /// Unit eigenforms of W⁺ in the simple frame basis, matching `lambda_plus`.
    pub eigenforms_plus: [TwoForm; 3],
    /// Unit eigenforms of W⁻, matching `lambda_minus`.
    pub eigenforms_minus: [TwoForm; 3],
    pub degenerate_plus: bool,
    pub degenerate_minus: bool,
    /// `|W⁺|` below the zero-set threshold.
    pub in_zero_set: bool,
}

pub fn spectrum(blocks: &OperatorBlocks) -> Result<WeylSpectrum, EigenError> {
    let p = eigen3_sym(&blocks.wplus_block)?;
    let m = eigen3_sym(&blocks.wminus_block)?;
    let forms = |v: &Matrix3<f64>, plus: bool| -> [TwoForm; 3] {
        std::array::from_fn(|i| {
            let c = [v[(0, i)], v[(1, i)], v[(2, i)]];
            if plus {
                form_from_lambda(&c, &[0.0; 3])
            } else {
                form_from_lambda(&[0.0; 3], &c)
            }
        })
    };
    let norm_plus = blocks.wplus_block.norm_squared();
    let full_norm = blocks.full.norm();
    Ok(WeylSpectrum {
        lambda_plus: p.values,
        lambda_minus: m.values,
        norm_sq_plus: norm_plus,
        norm_sq_minus: blocks.wminus_block.norm_squared(),
        det_plus: p.values.iter().product(),
        det_minus: m.values.iter().product(),
        eigenforms_plus: forms(&p.vectors, true),
        eigenforms_minus: forms(&m.vectors, false),
        degenerate_plus: p.degenerate,
        degenerate_minus: m.degenerate,
        in_zero_set: norm_plus.sqrt() < ZERO_SET_TOL * full_norm.max(1.0),
    })
}

/// Slack of each predicate; non-negative means satisfied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinchMargins {
    /// `det W⁺`.
    pub det: f64,
    /// `λ₁ + λ₃`.
    pub sum13: f64,
    /// `λ₃ + 8(1 − √3/2)λ₁`.
    pub polombo_lower: f64,
    /// `−2λ₁ − λ₃`.
    pub polombo_upper: f64,
    /// `λ₁ + λ₃ − s/12`.
    pub gursky: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinchReport {
    pub det_nonneg: bool,
    pub sum13_nonneg: bool,
    pub polombo_band: bool,
    pub gursky_band: bool,
    /// −1, 0 or +1.
    pub lambda2_sign: i8,
    pub margins: PinchMargins,
}

impl PinchReport {
    /// Evaluates the predicates on a sorted trace-free triple. Linear
    /// predicates tolerate `1e−12·|λ|`, the determinant `1e−12·|λ|³`.
    pub fn evaluate(lambda: [f64; 3], s: f64) -> Self {
        let [l1, l2, l3] = lambda;
        let norm = (l1 * l1 + l2 * l2 + l3 * l3).sqrt();
        let tol = PREDICATE_TOL * norm;
        let det = l1 * l2 * l3;
        let margins = PinchMargins {
            det,
            sum13: l1 + l3,
            polombo_lower: l3 + polombo_constant() * l1,
            polombo_upper: -2.0 * l1 - l3,
            gursky: l1 + l3 - s / 12.0,
        };
        let lambda2_sign = if l2 > tol {
            1
        } else if l2 < -tol {
            -1
        } else {
            0
        };
        PinchReport {
            det_nonneg: det >= -PREDICATE_TOL * norm.powi(3),
            sum13_nonneg: margins.sum13 >= -tol,
            polombo_band: margins.polombo_lower >= -tol && margins.polombo_upper >= -tol,
            gursky_band: margins.gursky >= -PREDICATE_TOL * norm.max(s.abs()),
            lambda2_sign,
            margins,
        }
    }
}

pub fn pinch_predicates(spec: &WeylSpectrum, s: f64) -> PinchReport {
    PinchReport::evaluate(spec.lambda_plus, s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    LessEq,
    Equal,
}

/// One evaluated inequality `lhs ≤ rhs` (or identity `lhs = rhs`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralInequality {
    pub name: &'static str,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs` for inequalities, `|rhs − lhs|` for identities.
    pub slack: f64,
    pub holds: bool,
}

/// Equality characterisation of `|W|² ≤ 6λ₁²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SixLambdaEquality {
    pub lambda1_eq_lambda2: bool,
    pub lambda3_plus_2lambda1_zero: bool,
}

pub fn six_lambda_equality(lambda: [f64; 3]) -> SixLambdaEquality {
    let [l1, l2, l3] = lambda;
    let tol = 1e-9 * (l1 * l1 + l2 * l2 + l3 * l3).sqrt().max(f64::MIN_POSITIVE);
    SixLambdaEquality {
        lambda1_eq_lambda2: (l2 - l1).abs() <= tol,
        lambda3_plus_2lambda1_zero: (l3 + 2.0 * l1).abs() <= tol,
    }
}

/// Trace-free spectral bounds for one sorted triple:
/// `|W|/√6 ≤ λ₃`, `|W|/√6 ≤ −λ₁`, `|W|² = 2(λ₁² − λ₂λ₃)`, `|W|² ≤ 6λ₁²`.
pub fn triple_inequalities(lambda: [f64; 3]) -> Vec<SpectralInequality> {
    let [l1, l2, l3] = lambda;
    let nsq = l1 * l1 + l2 * l2 + l3 * l3;
    let n = nsq.sqrt();
    let tol = 1e-12 * nsq.max(1e-300);
    let le = |name, lhs: f64, rhs: f64, t: f64| SpectralInequality {
        name,
        relation: Relation::LessEq,
        lhs,
        rhs,
        slack: rhs - lhs,
        holds: rhs - lhs >= -t,
    };
    let id = 2.0 * (l1 * l1 - l2 * l3);
    vec![
        le("norm_over_sqrt6_le_lambda3", n / 6f64.sqrt(), l3, 1e-12 * n),
        le("norm_over_sqrt6_le_minus_lambda1", n / 6f64.sqrt(), -l1, 1e-12 * n),
        SpectralInequality {
            name: "norm_sq_eq_two_lambda1_sq_minus_lambda2_lambda3",
            relation: Relation::Equal,
            lhs: nsq,
            rhs: id,
            slack: (id - nsq).abs(),
            holds: (id - nsq).abs() <= 1e-12 * nsq.max(1.0),
        },
        le("norm_sq_le_six_lambda1_sq", nsq, 6.0 * l1 * l1, tol),
    ]
}

pub fn spectral_inequalities(spec: &WeylSpectrum) -> Vec<SpectralInequality> {
    triple_inequalities(spec.lambda_plus)
}

/// Re-centres to trace zero and sorts ascending.
pub fn trace_free_sorted(l: [f64; 3]) -> [f64; 3] {
    let m = (l[0] + l[1] + l[2]) / 3.0;
    let mut t = [l[0] - m, l[1] - m, l[2] - m];
    t.sort_by(f64::total_cmp);
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polombo_constant_value() {
        assert!((polombo_constant() - 1.0717967697244912).abs() < 1e-15);
    }

    #[test]
    fn hand_computed_pinching_cases() {
        let r = PinchReport::evaluate([-1.0, -0.5, 1.5], -1.0);
        assert!(r.polombo_band);
        let r = PinchReport::evaluate([-1.0, -1.0, 2.0], 0.0);
        assert!(r.det_nonneg && r.sum13_nonneg);
        assert_eq!(r.margins.det, 2.0);
        assert_eq!(r.margins.sum13, 1.0);
        let r = PinchReport::evaluate([-2.0, 1.0, 1.0], 0.0);
        assert!(!r.det_nonneg && !r.sum13_nonneg);
        assert_eq!(r.margins.det, -2.0);
        assert_eq!(r.lambda2_sign, 1);
    }

    #[test]
    fn six_lambda_equality_case() {
        let v = triple_inequalities([-1.0, -1.0, 2.0]);
        assert_eq!(v[3].lhs, 6.0);
        assert_eq!(v[3].rhs, 6.0);
        let f = six_lambda_equality([-1.0, -1.0, 2.0]);
        assert!(f.lambda1_eq_lambda2 && f.lambda3_plus_2lambda1_zero);
    }

    #[test]
    fn generic_triple_inequalities() {
        let v = triple_inequalities([-2.0, -1.0, 3.0]);
        assert_eq!(v[2].lhs, 14.0);
        assert_eq!(v[2].rhs, 14.0);
        assert!((v[0].lhs - 14f64.sqrt() / 6f64.sqrt()).abs() < 1e-15);
        assert!(v.iter().all(|i| i.holds));
        let z = triple_inequalities([0.0; 3]);
        assert!(z.iter().all(|i| i.holds && i.slack == 0.0));
    }
}
