//! Algebraic identities on trace-free eigenvalue triples: the Ψ quadratic
//! and its `AB − C²` cancellation, Laplacian right-hand sides, sign lemmas,
//! the Weitzenböck gap and the norm chain.
//!
//! The polynomial parts are generic so they can run on exact rationals.

use std::fmt::Debug;
use std::ops::Neg;

use num_traits::{FromPrimitive, Num};
use thiserror::Error;

/// Scalar type for the identity lab: `f64` or an exact rational.
pub trait LabScalar: Num + Clone + PartialOrd + Neg<Output = Self> + FromPrimitive + Debug {
    /// Absolute slack accepted when comparing quantities of size `scale`.
    fn slack(scale: &Self) -> Self;
    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl LabScalar for f64 {
    fn slack(scale: &f64) -> f64 {
        1e-12 * scale.abs()
    }
}

impl LabScalar for num_rational::BigRational {
    fn slack(_: &Self) -> Self {
        Self::from_integer(0.into())
    }
}

fn int<T: LabScalar>(n: i64) -> T {
    T::from_i64(n).expect("small integers are representable")
}

fn ratio<T: LabScalar>(p: i64, q: i64) -> T {
    int::<T>(p) / int::<T>(q)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdentityError {
    #[error("eigenvalues must be finite")]
    NonFinite,
    #[error("norms must be non-negative")]
    NegativeNorm,
    #[error("⟨a, c⟩² exceeds |a|²|c|² (Cauchy–Schwarz)")]
    CauchySchwarz,
}

/// Sorted trace-free triple `λ₁ ≤ λ₂ ≤ λ₃`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaTriple<T> {
    l: [T; 3],
}

impl<T: LabScalar> LambdaTriple<T> {
    /// Re-centres to trace zero and sorts. The largest entry is stored as
    /// `−(λ₁ + λ₂)`, so `λ₁ + λ₂ + λ₃` evaluates to exactly zero.
    pub fn new(a: T, b: T, c: T) -> Self {
        let three = int::<T>(3);
        let mean = (a.clone() + b.clone() + c.clone()) / three;
        let mut v = [a - mean.clone(), b - mean.clone(), c - mean];
        v.sort_by(|x, y| x.partial_cmp(y).expect("comparable eigenvalues"));
        let [l1, l2, _] = v;
        let l3 = -(l1.clone() + l2.clone());
        LambdaTriple { l: [l1, l2, l3] }
    }

    pub fn values(&self) -> &[T; 3] {
        &self.l
    }

    pub fn l1(&self) -> T {
        self.l[0].clone()
    }
    pub fn l2(&self) -> T {
        self.l[1].clone()
    }
    pub fn l3(&self) -> T {
        self.l[2].clone()
    }

    pub fn trace(&self) -> T {
        self.l1() + self.l2() + self.l3()
    }

    /// `Σλ²`, which is `|W|²` for the corresponding Weyl block.
    pub fn norm_sq(&self) -> T {
        self.l.iter().fold(T::zero(), |s, x| s + x.clone() * x.clone())
    }

    pub fn det(&self) -> T {
        self.l1() * self.l2() * self.l3()
    }

    /// `max(1, |λ|)`, used for relative tolerances.
    pub fn scale(&self) -> T {
        let m = self.l.iter().fold(T::one(), |m, x| {
            let a = x.abs_val();
            if a > m {
                a
            } else {
                m
            }
        });
        m
    }
}

impl LambdaTriple<f64> {
    pub fn try_from_f64(a: f64, b: f64, c: f64) -> Result<Self, IdentityError> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(IdentityError::NonFinite);
        }
        Ok(Self::new(a, b, c))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsiCoefficients<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

/// `A = 2λ₂(λ₃−λ₂) + k(λ₂−λ₃)²`, `B = 2λ₂(λ₁−λ₂) + k(λ₂−λ₁)²`,
/// `C = k(λ₂−λ₁)(λ₂−λ₃)`.
pub fn psi_coefficients<T: LabScalar>(t: &LambdaTriple<T>, k: &T) -> PsiCoefficients<T> {
    let (l1, l2, l3) = (t.l1(), t.l2(), t.l3());
    let two = int::<T>(2);
    let d32 = l3.clone() - l2.clone();
    let d21 = l2.clone() - l1.clone();
    PsiCoefficients {
        a: two.clone() * l2.clone() * d32.clone() + k.clone() * d32.clone() * d32.clone(),
        b: -(two * l2 * d21.clone()) + k.clone() * d21.clone() * d21.clone(),
        c: -(k.clone() * d21 * d32),
    }
}

/// Factored coefficients at `k = 2/3`:
/// `A = (2/3)(λ₃−λ₂)(2λ₂+λ₃)`, `B = −(2/3)(λ₂−λ₁)(2λ₂+λ₁)`,
/// `C = (2/3)(λ₂−λ₁)(λ₂−λ₃)`.
pub fn psi_coefficients_factored<T: LabScalar>(t: &LambdaTriple<T>) -> PsiCoefficients<T> {
    let (l1, l2, l3) = (t.l1(), t.l2(), t.l3());
    let k = ratio::<T>(2, 3);
    let two = int::<T>(2);
    PsiCoefficients {
        a: k.clone() * (l3.clone() - l2.clone()) * (two.clone() * l2.clone() + l3.clone()),
        b: -(k.clone() * (l2.clone() - l1.clone()) * (two * l2.clone() + l1.clone())),
        c: k * (l2.clone() - l1) * (l2 - l3),
    }
}

/// The natural coefficient `k = 2/3`.
pub fn psi_k<T: LabScalar>() -> T {
    ratio(2, 3)
}

/// Largest relative disagreement between the definitional and factored
/// coefficients at `k = 2/3`.
pub fn psi_factored_residual(t: &LambdaTriple<f64>) -> f64 {
    let d = psi_coefficients(t, &psi_k());
    let f = psi_coefficients_factored(t);
    let s = t.scale().powi(2);
    [(d.a - f.a), (d.b - f.b), (d.c - f.c)]
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs() / s))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsiInputs<T> {
    pub triple: LambdaTriple<T>,
    pub a_norm_sq: T,
    pub c_norm_sq: T,
    pub ac_inner: T,
    pub k: T,
}

impl<T: LabScalar> PsiInputs<T> {
    pub fn new(triple: LambdaTriple<T>, a_norm_sq: T, c_norm_sq: T, ac_inner: T, k: T) -> Result<Self, IdentityError> {
        if a_norm_sq < T::zero() || c_norm_sq < T::zero() {
            return Err(IdentityError::NegativeNorm);
        }
        let prod = a_norm_sq.clone() * c_norm_sq.clone();
        if ac_inner.clone() * ac_inner.clone() > prod.clone() + T::slack(&prod) {
            return Err(IdentityError::CauchySchwarz);
        }
        Ok(PsiInputs {
            triple,
            a_norm_sq,
            c_norm_sq,
            ac_inner,
            k,
        })
    }
}

/// `Ψ = A|a|² + B|c|² + 2C⟨a, c⟩`.
pub fn psi_value<T: LabScalar>(p: &PsiInputs<T>) -> T {
    let co = psi_coefficients(&p.triple, &p.k);
    co.a * p.a_norm_sq.clone() + co.b * p.c_norm_sq.clone() + int::<T>(2) * co.c * p.ac_inner.clone()
}

/// `AB − C²` at `k = 2/3` from the definitional coefficients.
pub fn ab_minus_c2<T: LabScalar>(t: &LambdaTriple<T>) -> T {
    let co = psi_coefficients(t, &psi_k());
    co.a * co.b - co.c.clone() * co.c
}

/// The two intermediate expansions of `AB − C²`:
/// `−(4/9)(λ₃−λ₂)(λ₂−λ₁)[(2λ₂+λ₃)(2λ₂+λ₁) + (λ₂−λ₁)(λ₃−λ₂)]` and
/// `−(4/3)λ₂(λ₃−λ₂)(λ₂−λ₁)(λ₁+λ₂+λ₃)`.
pub fn ab_minus_c2_expansions<T: LabScalar>(t: &LambdaTriple<T>) -> [T; 2] {
    let (l1, l2, l3) = (t.l1(), t.l2(), t.l3());
    let two = int::<T>(2);
    let d32 = l3.clone() - l2.clone();
    let d21 = l2.clone() - l1.clone();
    let bracket = (two.clone() * l2.clone() + l3.clone()) * (two * l2.clone() + l1.clone()) + d21.clone() * d32.clone();
    [
        -(ratio::<T>(4, 9) * d32.clone() * d21.clone() * bracket),
        -(ratio::<T>(4, 3) * l2 * d32 * d21 * t.trace()),
    ]
}

/// Right-hand sides of `Δλ₁, Δλ₂, Δλ₃` in terms of the connection-form
/// magnitudes `|a|², |b|², |c|²`:
///
/// `Δλ₁ = 2λ₁² + 4λ₂λ₃ − λ₁s/2 + 2(λ₃−λ₁)|b|² + 2(λ₂−λ₁)|c|²`,
/// `Δλ₂ = 2λ₂² + 4λ₁λ₃ − λ₂s/2 + 2(λ₁−λ₂)|c|² + 2(λ₃−λ₂)|a|²`,
/// `Δλ₃ = 2λ₃² + 4λ₁λ₂ − λ₃s/2 + 2(λ₁−λ₃)|b|² + 2(λ₂−λ₃)|a|²`.
pub fn laplacian_rhs<T: LabScalar>(t: &LambdaTriple<T>, s: &T, a_sq: &T, b_sq: &T, c_sq: &T) -> [T; 3] {
    let (l1, l2, l3) = (t.l1(), t.l2(), t.l3());
    let two = int::<T>(2);
    let four = int::<T>(4);
    let half_s = s.clone() / two.clone();
    let base = |x: &T, y: &T, z: &T| {
        two.clone() * x.clone() * x.clone() + four.clone() * y.clone() * z.clone() - x.clone() * half_s.clone()
    };
    [
        base(&l1, &l2, &l3)
            + two.clone() * (l3.clone() - l1.clone()) * b_sq.clone()
            + two.clone() * (l2.clone() - l1.clone()) * c_sq.clone(),
        base(&l2, &l1, &l3)
            + two.clone() * (l1.clone() - l2.clone()) * c_sq.clone()
            + two.clone() * (l3.clone() - l2.clone()) * a_sq.clone(),
        base(&l3, &l1, &l2)
            + two.clone() * (l1 - l3.clone()) * b_sq.clone()
            + two * (l2 - l3) * a_sq.clone(),
    ]
}

/// Both sides of `ΦΔΦ + k|∇Φ|² = λ₂(2λ₂² + 4λ₁λ₃ − λ₂s/2) + Ψ` for
/// `Φ = −λ₂`, with `ΔΦ = −Δλ₂` and
/// `|∇Φ|² = (λ₂−λ₁)²|c|² + (λ₃−λ₂)²|a|² + 2(λ₂−λ₁)(λ₂−λ₃)⟨c, a⟩`.
pub fn phi_combination<T: LabScalar>(p: &PsiInputs<T>, s: &T) -> (T, T) {
    let t = &p.triple;
    let (l1, l2, l3) = (t.l1(), t.l2(), t.l3());
    let zero = T::zero();
    let lap = laplacian_rhs(t, s, &p.a_norm_sq, &zero, &p.c_norm_sq);
    let phi = -l2.clone();
    let lap_phi = -lap[1].clone();
    let d21 = l2.clone() - l1.clone();
    let d32 = l3.clone() - l2.clone();
    let grad_sq = d21.clone() * d21.clone() * p.c_norm_sq.clone()
        + d32.clone() * d32.clone() * p.a_norm_sq.clone()
        - int::<T>(2) * d21 * d32 * p.ac_inner.clone();
    let lhs = phi * lap_phi + p.k.clone() * grad_sq;
    let rhs = l2.clone() * sign_lemma_value(t, s) + psi_value(p);
    (lhs, rhs)
}

/// `2λ₂² + 4λ₁λ₃ − λ₂s/2`.
pub fn sign_lemma_value<T: LabScalar>(t: &LambdaTriple<T>, s: &T) -> T {
    let (l1, l2, l3) = (t.l1(), t.l2(), t.l3());
    int::<T>(2) * l2.clone() * l2.clone() + int::<T>(4) * l1 * l3 - l2 * s.clone() / int::<T>(2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonpositiveScalarLemma<T> {
    pub value: T,
    pub is_nonpositive: bool,
    /// `λ₁ + λ₃ ≥ 0` and `s ≤ 0`.
    pub precondition_holds: bool,
    /// `2λ₁ + λ₃ = 0`.
    pub twice_l1_plus_l3_zero: bool,
    /// `λ₁ + λ₃ = 0`.
    pub l1_plus_l3_zero: bool,
}

/// Sign of `2λ₂² + 4λ₁λ₃ − λ₂s/2` under `λ₁ + λ₃ ≥ 0`, `s ≤ 0`, with the
/// equality flags of the degenerate case.
pub fn sign_lemma_nonpositive_scalar<T: LabScalar>(t: &LambdaTriple<T>, s: &T) -> NonpositiveScalarLemma<T> {
    let value = sign_lemma_value(t, s);
    let scale = t.scale().max_with(&s.abs_val());
    let tol = T::slack(&(scale.clone() * scale.clone() * scale.clone()));
    let tol1 = T::slack(&scale);
    let sum13 = t.l1() + t.l3();
    let twice = int::<T>(2) * t.l1() + t.l3();
    NonpositiveScalarLemma {
        is_nonpositive: value <= tol,
        precondition_holds: sum13 >= -tol1.clone() && *s <= T::zero(),
        twice_l1_plus_l3_zero: twice.abs_val() <= tol1,
        l1_plus_l3_zero: sum13.abs_val() <= T::slack(&scale),
        value,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonnegativeScalarLemma<T> {
    pub value: T,
    /// `−λ₂(2λ₂ + 4λ₁ + s/2)`.
    pub first_bound: T,
    /// `−λ₂(6λ₂ + s/2)`.
    pub second_bound: T,
    pub is_nonpositive: bool,
    /// `value ≤ first_bound ≤ second_bound ≤ 0`.
    pub chain_holds: bool,
    /// `λ₂ ≤ −s/12` and `s ≥ 0`.
    pub precondition_holds: bool,
}

/// Sign of `2λ₂² + 4λ₁λ₃ − λ₂s/2` under `λ₂ ≤ −s/12`, `s ≥ 0`, through the
/// bounds `≤ −λ₂(2λ₂ + 4λ₁ + s/2) ≤ −λ₂(6λ₂ + s/2) ≤ 0`.
pub fn sign_lemma_nonnegative_scalar<T: LabScalar>(t: &LambdaTriple<T>, s: &T) -> NonnegativeScalarLemma<T> {
    let (l1, l2) = (t.l1(), t.l2());
    let value = sign_lemma_value(t, s);
    let half_s = s.clone() / int::<T>(2);
    let first_bound = -(l2.clone() * (int::<T>(2) * l2.clone() + int::<T>(4) * l1 + half_s.clone()));
    let second_bound = -(l2.clone() * (int::<T>(6) * l2.clone() + half_s));
    let scale = t.scale().max_with(&s.abs_val());
    let tol = T::slack(&(scale.clone() * scale.clone() * scale.clone()));
    let zero = T::zero();
    NonnegativeScalarLemma {
        is_nonpositive: value <= tol,
        chain_holds: value <= first_bound.clone() + tol.clone()
            && first_bound <= second_bound.clone() + tol.clone()
            && second_bound <= tol.clone(),
        precondition_holds: l2 <= -(s.clone() / int::<T>(12)) + T::slack(&scale) && *s >= zero,
        value,
        first_bound,
        second_bound,
    }
}

trait MaxWith {
    fn max_with(self, o: &Self) -> Self;
}

impl<T: LabScalar> MaxWith for T {
    fn max_with(self, o: &Self) -> Self {
        if *o > self {
            o.clone()
        } else {
            self
        }
    }
}

/// `36 det W − s|W|²` on a trace-free spectrum.
pub fn weitzenboeck_gap<T: LabScalar>(t: &LambdaTriple<T>, s: &T) -> T {
    int::<T>(36) * t.det() - s.clone() * t.norm_sq()
}

/// `(1/√6)|W| ≤ −λ₁ ≤ s/12` with `|W|² = 2(λ₁² − λ₂λ₃) ≤ 6λ₁²`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormChain {
    pub norm_over_sqrt6: f64,
    pub minus_l1: f64,
    pub s_over_12: f64,
    pub norm_sq: f64,
    pub two_l1_sq_minus_l2_l3: f64,
    pub six_l1_sq: f64,
    pub first_link: bool,
    pub second_link: bool,
    pub identity_holds: bool,
    pub six_bound: bool,
    /// `λ₁ = λ₂`.
    pub l1_eq_l2: bool,
    /// `λ₃ + 2λ₁ = 0`.
    pub l3_plus_2l1_zero: bool,
    /// `−s/12 ≤ λ₁`.
    pub precondition_holds: bool,
}

pub fn norm_chain(t: &LambdaTriple<f64>, s: f64) -> NormChain {
    let (l1, l2, l3) = (t.l1(), t.l2(), t.l3());
    let norm_sq = t.norm_sq();
    let scale = t.scale().max(s.abs());
    let tol = 1e-12 * scale;
    let tol2 = 1e-12 * scale * scale;
    let norm_over_sqrt6 = (norm_sq / 6.0).sqrt();
    let two = 2.0 * (l1 * l1 - l2 * l3);
    NormChain {
        norm_over_sqrt6,
        minus_l1: -l1,
        s_over_12: s / 12.0,
        norm_sq,
        two_l1_sq_minus_l2_l3: two,
        six_l1_sq: 6.0 * l1 * l1,
        first_link: norm_over_sqrt6 <= -l1 + tol,
        second_link: -l1 <= s / 12.0 + tol,
        identity_holds: (two - norm_sq).abs() <= tol2,
        six_bound: norm_sq <= 6.0 * l1 * l1 + tol2,
        l1_eq_l2: (l2 - l1).abs() <= 1e-9 * scale,
        l3_plus_2l1_zero: (l3 + 2.0 * l1).abs() <= 1e-9 * scale,
        precondition_holds: -s / 12.0 <= l1 + tol,
    }
}

/// `λ₂ = 0` together with a repeated eigenvalue forces the zero triple.
/// Returns `(antecedent, consequent)`; the implication holds when the
/// antecedent is false or the consequent true.
pub fn zero_forcing<T: LabScalar>(t: &LambdaTriple<T>) -> (bool, bool) {
    let tol = T::slack(&t.scale());
    let l2_zero = t.l2().abs_val() <= tol;
    let repeated = (t.l2() - t.l1()).abs_val() <= tol.clone() || (t.l3() - t.l2()).abs_val() <= tol.clone();
    let zero = t.values().iter().all(|x| x.abs_val() <= tol);
    (l2_zero && repeated, zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tr(a: f64, b: f64, c: f64) -> LambdaTriple<f64> {
        LambdaTriple::new(a, b, c)
    }

    #[test]
    fn constructor_recentres_and_sorts() {
        let t = tr(3.0, 1.0, 2.0);
        assert_eq!(t.values(), &[-1.0, 0.0, 1.0]);
        assert_eq!(t.trace(), 0.0);
    }

    #[test]
    fn psi_coefficients_hand_values() {
        let t = tr(-2.0, -1.0, 3.0);
        let c = psi_coefficients(&t, &(2.0 / 3.0));
        assert!((c.a - 8.0 / 3.0).abs() < 1e-14);
        assert!((c.b - 8.0 / 3.0).abs() < 1e-14);
        assert!((c.c + 8.0 / 3.0).abs() < 1e-14);
        assert!(psi_factored_residual(&t) < 1e-14);
        let z = psi_coefficients(&tr(-1.0, -1.0, 2.0), &(2.0 / 3.0));
        assert_eq!((z.a, z.b, z.c), (0.0, 0.0, 0.0));
    }

    #[test]
    fn psi_value_hand_values() {
        let t = tr(-2.0, -1.0, 3.0);
        let p = PsiInputs::new(t.clone(), 1.0, 1.0, -1.0, 2.0 / 3.0).unwrap();
        assert!((psi_value(&p) - 32.0 / 3.0).abs() < 1e-13);
        let p = PsiInputs::new(t.clone(), 1.0, 1.0, 1.0, 2.0 / 3.0).unwrap();
        assert!(psi_value(&p).abs() < 1e-13);
        assert!(PsiInputs::new(t, 1.0, 1.0, 1.5, 2.0 / 3.0).is_err());
    }

    #[test]
    fn sign_lemma_hand_values() {
        assert_eq!(sign_lemma_value(&tr(-1.0, -1.0, 2.0), &0.0), -6.0);
        let z = sign_lemma_nonpositive_scalar(&tr(0.0, 0.0, 0.0), &0.0);
        assert!(z.is_nonpositive && z.twice_l1_plus_l3_zero && z.l1_plus_l3_zero);
        assert_eq!(sign_lemma_value(&tr(-1.0, 0.0, 1.0), &-12.0), -4.0);
        let r = sign_lemma_nonnegative_scalar(&tr(-1.0, -1.0, 2.0), &6.0);
        assert_eq!(r.value, -3.0);
        assert!(r.chain_holds && r.precondition_holds);
        let r = sign_lemma_nonnegative_scalar(&tr(-1.0, -1.0, 2.0), &12.0);
        assert_eq!(r.value, 0.0);
        assert!(r.precondition_holds);
    }

    #[test]
    fn weitzenboeck_kahler_spectrum() {
        let s = 24.0;
        let t = tr(-s / 12.0, -s / 12.0, s / 6.0);
        assert!(weitzenboeck_gap(&t, &s).abs() < 1e-10 * 576.0);
        assert_eq!(weitzenboeck_gap(&tr(0.0, 0.0, 0.0), &5.0), 0.0);
    }

    #[test]
    fn norm_chain_hand_values() {
        let c = norm_chain(&tr(-1.0, -1.0, 2.0), 12.0);
        assert_eq!(c.norm_sq, 6.0);
        assert!(c.l1_eq_l2 && c.l3_plus_2l1_zero && c.first_link && c.second_link);
        let c = norm_chain(&tr(-1.0, 0.0, 1.0), 24.0);
        assert_eq!(c.norm_sq, 2.0);
        assert!(c.first_link && c.second_link && c.six_bound);
        let c = norm_chain(&tr(0.0, 0.0, 0.0), 1.0);
        assert!(c.first_link && c.second_link && c.identity_holds && c.six_bound);
        assert_eq!(c.norm_over_sqrt6, 0.0);
    }

    #[test]
    fn zero_forcing_cases() {
        assert_eq!(zero_forcing(&tr(0.0, 0.0, 0.0)), (true, true));
        assert_eq!(zero_forcing(&tr(-1.0, 0.0, 1.0)), (false, false));
    }
}
