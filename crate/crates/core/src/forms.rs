//! Orthonormal frames, 2-forms with the Hodge star, and the curvature
//! operator in the Λ⁺ ⊕ Λ⁻ basis.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix3, Matrix4, Matrix6, Vector4, Vector6};
use thiserror::Error;

use crate::curvature::{CurvaturePoint, Tensor4};
use crate::metric::{MetricValue, DIM};

/// Simple basis ordering of Λ²: e1∧e2, e1∧e3, e1∧e4, e2∧e3, e2∧e4, e3∧e4.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Slot of `e_a∧e_b` in [`PAIRS`] and the sign relating it to the stored
/// element; `None` for `a == b`.
pub fn pair_slot(a: usize, b: usize) -> Option<(usize, f64)> {
    if a == b {
        return None;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let idx = PAIRS.iter().position(|&p| p == (lo, hi))?;
    Some((idx, sign))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormError {
    #[error("frame was built at {frame:?} but the curvature data is at {point:?}")]
    FrameMismatch { frame: [f64; DIM], point: [f64; DIM] },
    #[error("Gram-Schmidt produced a degenerate frame")]
    DegenerateFrame,
    #[error("rotation must be orthogonal with determinant +1")]
    NotARotation,
}

/// Orientation relative to the chart's coordinate order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Orientation {
    #[default]
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }

    pub fn from_sign(s: i32) -> Option<Self> {
        match s {
            1 => Some(Orientation::Positive),
            -1 => Some(Orientation::Negative),
            _ => None,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Orientation::Positive => Orientation::Negative,
            Orientation::Negative => Orientation::Positive,
        }
    }
}

/// Orthonormal frame at a chart point. Column `a` of `vectors` holds the
/// coordinate components of `e_a`; row `a` of `coframe` holds `θ^a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub point: [f64; DIM],
    pub vectors: Matrix4<f64>,
    pub coframe: Matrix4<f64>,
    pub orientation: Orientation,
}

/// Gram–Schmidt on the coordinate vectors; for the negative orientation
/// `e3` and `e4` are exchanged so that `det(E) · orientation > 0`.
pub fn orthonormal_frame(m: &MetricValue, orientation: Orientation) -> Result<Frame, FormError> {
    let g = &m.g;
    let ip = |x: &Vector4<f64>, y: &Vector4<f64>| (g * y).dot(x);
    let mut e: Vec<Vector4<f64>> = Vec::with_capacity(DIM);
    for k in 0..DIM {
        let mut v = Vector4::zeros();
        v[k] = 1.0;
        // modified Gram-Schmidt, two passes for stability
        for _ in 0..2 {
            for u in &e {
                v -= u * ip(u, &v);
            }
        }
        let n = ip(&v, &v);
        if !(n > 0.0) || !n.is_finite() {
            return Err(FormError::DegenerateFrame);
        }
        e.push(v / n.sqrt());
    }
    if orientation == Orientation::Negative {
        e.swap(2, 3);
    }
    let vectors = Matrix4::from_columns(&e);
    let coframe = vectors.try_inverse().ok_or(FormError::DegenerateFrame)?;
    Ok(Frame {
        point: m.point,
        vectors,
        coframe,
        orientation,
    })
}

impl Frame {
    pub fn vector(&self, a: usize) -> Vector4<f64> {
        self.vectors.column(a).into_owned()
    }

    /// Frame components of a coordinate vector.
    pub fn to_frame(&self, v: &Vector4<f64>) -> Vector4<f64> {
        self.coframe * v
    }

    /// Coordinate components of a frame vector.
    pub fn to_coords(&self, v: &Vector4<f64>) -> Vector4<f64> {
        self.vectors * v
    }

    /// The frame `e'_b = Σ_a e_a q_ab` for a rotation `q`.
    pub fn rotated(&self, q: &Matrix4<f64>) -> Result<Frame, FormError> {
        let err = (q.transpose() * q - Matrix4::identity()).amax();
        if err > 1e-10 || q.determinant() < 0.0 {
            return Err(FormError::NotARotation);
        }
        let vectors = self.vectors * q;
        Ok(Frame {
            point: self.point,
            coframe: q.transpose() * self.coframe,
            vectors,
            orientation: self.orientation,
        })
    }

    /// `M[(ij)][(ab)] = e_a^i e_b^j − e_a^j e_b^i`; maps coordinate pair
    /// matrices to frame pair matrices via `Mᵀ X M`.
    pub fn pair_transform(&self) -> Matrix6<f64> {
        let e = &self.vectors;
        Matrix6::from_fn(|r, c| {
            let (i, j) = PAIRS[r];
            let (a, b) = PAIRS[c];
            e[(i, a)] * e[(j, b)] - e[(j, a)] * e[(i, b)]
        })
    }

    /// `N[(ab)][(ij)] = θ^a_i θ^b_j − θ^a_j θ^b_i`; maps frame pair matrices
    /// back to coordinates via `Nᵀ X N`.
    pub fn pair_cotransform(&self) -> Matrix6<f64> {
        let t = &self.coframe;
        Matrix6::from_fn(|r, c| {
            let (a, b) = PAIRS[r];
            let (i, j) = PAIRS[c];
            t[(a, i)] * t[(b, j)] - t[(a, j)] * t[(b, i)]
        })
    }
}

/// A 2-form in frame components over the simple basis [`PAIRS`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoForm(pub Vector6<f64>);

impl TwoForm {
    pub fn new(c: [f64; 6]) -> Self {
        TwoForm(Vector6::from_column_slice(&c))
    }

    pub fn zero() -> Self {
        TwoForm(Vector6::zeros())
    }

    /// `x∧y` for frame-component vectors.
    pub fn wedge_vectors(x: &Vector4<f64>, y: &Vector4<f64>) -> Self {
        TwoForm(Vector6::from_fn(|r, _| {
            let (a, b) = PAIRS[r];
            x[a] * y[b] - x[b] * y[a]
        }))
    }

    /// Antisymmetric matrix `F_ab = φ(e_a, e_b)`.
    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        for (r, &(a, b)) in PAIRS.iter().enumerate() {
            m[(a, b)] = self.0[r];
            m[(b, a)] = -self.0[r];
        }
        m
    }

    /// Reads the upper triangle of an antisymmetric matrix.
    pub fn from_matrix(m: &Matrix4<f64>) -> Self {
        TwoForm(Vector6::from_fn(|r, _| {
            let (a, b) = PAIRS[r];
            0.5 * (m[(a, b)] - m[(b, a)])
        }))
    }

    pub fn dot(&self, o: &TwoForm) -> f64 {
        self.0.dot(&o.0)
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.norm_squared()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn star(&self) -> TwoForm {
        let w = &self.0;
        TwoForm::new([w[5], -w[4], w[3], w[2], -w[1], w[0]])
    }

    /// Coefficient of `e1∧e2∧e3∧e4` in `self ∧ o`.
    pub fn wedge(&self, o: &TwoForm) -> f64 {
        let (w, h) = (&self.0, &o.0);
        w[0] * h[5] - w[1] * h[4] + w[2] * h[3] + w[3] * h[2] - w[4] * h[1] + w[5] * h[0]
    }

    pub fn self_dual_part(&self) -> TwoForm {
        (*self + self.star()) * 0.5
    }

    pub fn anti_self_dual_part(&self) -> TwoForm {
        (*self - self.star()) * 0.5
    }
}

impl Add for TwoForm {
    type Output = TwoForm;
    fn add(self, o: TwoForm) -> TwoForm {
        TwoForm(self.0 + o.0)
    }
}

impl Sub for TwoForm {
    type Output = TwoForm;
    fn sub(self, o: TwoForm) -> TwoForm {
        TwoForm(self.0 - o.0)
    }
}

impl Neg for TwoForm {
    type Output = TwoForm;
    fn neg(self) -> TwoForm {
        TwoForm(-self.0)
    }
}

impl Mul<f64> for TwoForm {
    type Output = TwoForm;
    fn mul(self, c: f64) -> TwoForm {
        TwoForm(self.0 * c)
    }
}

/// Matrix of the Hodge star on the simple basis (symmetric, squares to I).
pub fn hodge_star_matrix() -> Matrix6<f64> {
    let mut s = Matrix6::zeros();
    for c in 0..6 {
        let mut e = [0.0; 6];
        e[c] = 1.0;
        let col = TwoForm::new(e).star();
        s.set_column(c, &col.0);
    }
    s
}

/// `α₁± = (e12 ± e34)/√2`, `α₂± = (e13 ∓ e24)/√2`, `α₃± = (e14 ± e23)/√2`,
/// ordered (α₁⁺, α₂⁺, α₃⁺, α₁⁻, α₂⁻, α₃⁻).
pub fn lambda_basis() -> [TwoForm; 6] {
    let h = FRAC_1_SQRT_2;
    [
        TwoForm::new([h, 0.0, 0.0, 0.0, 0.0, h]),
        TwoForm::new([0.0, h, 0.0, 0.0, -h, 0.0]),
        TwoForm::new([0.0, 0.0, h, h, 0.0, 0.0]),
        TwoForm::new([h, 0.0, 0.0, 0.0, 0.0, -h]),
        TwoForm::new([0.0, h, 0.0, 0.0, h, 0.0]),
        TwoForm::new([0.0, 0.0, h, -h, 0.0, 0.0]),
    ]
}

/// Rows are the Λ± basis forms; `A X Aᵀ` expresses a simple-basis pair
/// matrix in the Λ± basis.
pub fn lambda_change_of_basis() -> Matrix6<f64> {
    let basis = lambda_basis();
    Matrix6::from_fn(|r, c| basis[r].0[c])
}

/// Simple-basis form with Λ⁺ coordinates `u` and Λ⁻ coordinates `v`.
pub fn form_from_lambda(u: &[f64; 3], v: &[f64; 3]) -> TwoForm {
    let b = lambda_basis();
    let mut f = TwoForm::zero();
    for i in 0..3 {
        f = f + b[i] * u[i] + b[i + 3] * v[i];
    }
    f
}

/// The curvature operator at one point in the Λ⁺ ⊕ Λ⁻ basis:
///
/// ```text
/// full = | W⁺ + s/12 I   ric0        |
///        | ric0ᵀ         W⁻ + s/12 I |
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorBlocks {
    pub point: [f64; DIM],
    pub orientation: Orientation,
    /// `R(e_a∧e_b, e_c∧e_d)` on the simple frame basis.
    pub pair_matrix: Matrix6<f64>,
    pub full: Matrix6<f64>,
    pub wplus_block: Matrix3<f64>,
    pub wminus_block: Matrix3<f64>,
    pub ric0_block: Matrix3<f64>,
    pub scalar_term: f64,
}

impl OperatorBlocks {
    pub fn scalar(&self) -> f64 {
        12.0 * self.scalar_term
    }

    /// Frame components `R_abcd`.
    pub fn frame_riemann(&self) -> Tensor4 {
        tensor_from_pair_matrix(&self.pair_matrix)
    }

    /// `R(α, β)` for simple-basis forms.
    pub fn pairing(&self, a: &TwoForm, b: &TwoForm) -> f64 {
        a.0.dot(&(self.pair_matrix * b.0))
    }
}

/// Pair matrix `X[(ij)][(kl)] = T_ijkl` of a tensor with pair symmetries.
pub fn pair_matrix(t: &Tensor4) -> Matrix6<f64> {
    Matrix6::from_fn(|r, c| {
        let (i, j) = PAIRS[r];
        let (k, l) = PAIRS[c];
        t[i][j][k][l]
    })
}

/// Inverse of [`pair_matrix`], filling all antisymmetric slots.
pub fn tensor_from_pair_matrix(m: &Matrix6<f64>) -> Tensor4 {
    let mut t = [[[[0.0; DIM]; DIM]; DIM]; DIM];
    for i in 0..DIM {
        for j in 0..DIM {
            let Some((r, sr)) = pair_slot(i, j) else { continue };
            for k in 0..DIM {
                for l in 0..DIM {
                    let Some((c, sc)) = pair_slot(k, l) else { continue };
                    t[i][j][k][l] = sr * sc * m[(r, c)];
                }
            }
        }
    }
    t
}

/// Assembles the operator blocks from coordinate curvature and a frame at
/// the same point.
pub fn curvature_operator(c: &CurvaturePoint, f: &Frame) -> Result<OperatorBlocks, FormError> {
    if c.metric.point != f.point {
        return Err(FormError::FrameMismatch {
            frame: f.point,
            point: c.metric.point,
        });
    }
    let m = f.pair_transform();
    let r6 = pair_matrix(&c.riemann);
    let mut pf = m.transpose() * r6 * m;
    pf = (pf + pf.transpose()) * 0.5;
    Ok(blocks_from_pair_matrix(pf, c.scalar, f.point, f.orientation))
}

/// Block split of a frame pair matrix; `scalar` supplies the trace term.
pub fn blocks_from_pair_matrix(
    pair: Matrix6<f64>,
    scalar: f64,
    point: [f64; DIM],
    orientation: Orientation,
) -> OperatorBlocks {
    let a = lambda_change_of_basis();
    let mut full = a * pair * a.transpose();
    full = (full + full.transpose()) * 0.5;
    let st = scalar / 12.0;
    let id = Matrix3::identity();
    let wplus_block: Matrix3<f64> = full.fixed_view::<3, 3>(0, 0).into_owned() - id * st;
    let wminus_block: Matrix3<f64> = full.fixed_view::<3, 3>(3, 3).into_owned() - id * st;
    let ric0_block: Matrix3<f64> = full.fixed_view::<3, 3>(0, 3).into_owned();
    OperatorBlocks {
        point,
        orientation,
        pair_matrix: pair,
        full,
        wplus_block,
        wminus_block,
        ric0_block,
        scalar_term: st,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::curvature_at;
    use crate::models::builtin_model;

    fn unit_metric(diag: [f64; 4]) -> MetricValue {
        let g = Matrix4::from_diagonal(&Vector4::from_column_slice(&diag));
        MetricValue {
            point: [0.0; 4],
            g,
            g_inv: g.try_inverse().unwrap(),
            dg: [[[0.0; 4]; 4]; 4],
            d2g: [[[[0.0; 4]; 4]; 4]; 4],
            sqrt_det_g: diag.iter().product::<f64>().sqrt(),
        }
    }

    #[test]
    fn identity_and_diagonal_frames() {
        let f = orthonormal_frame(&unit_metric([1.0; 4]), Orientation::Positive).unwrap();
        assert_eq!(f.vectors, Matrix4::identity());
        let f = orthonormal_frame(&unit_metric([4.0, 1.0, 1.0, 1.0]), Orientation::Positive).unwrap();
        assert!((f.vectors[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lambda_basis_is_orthonormal_and_split_by_star() {
        let b = lambda_basis();
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((b[i].dot(&b[j]) - expect).abs() < 1e-15);
            }
            let sign = if i < 3 { 1.0 } else { -1.0 };
            assert!((b[i].star() - b[i] * sign).norm() < 1e-15);
        }
    }

    #[test]
    fn wedge_matches_star_pairing() {
        let b = lambda_basis();
        assert!((b[0].wedge(&b[0]) - 1.0).abs() < 1e-15);
        assert!((b[3].wedge(&b[3]) + 1.0).abs() < 1e-15);
        let x = TwoForm::new([0.3, -1.0, 2.0, 0.5, 0.25, -0.7]);
        let y = TwoForm::new([1.1, 0.2, -0.4, 0.9, -2.0, 0.6]);
        assert!((x.star().dot(&y) - x.wedge(&y)).abs() < 1e-14);
        assert!((x.star().star() - x).norm() < 1e-15);
    }

    #[test]
    fn round_sphere_operator_is_identity() {
        let m = builtin_model("round_s4", &[1.0]).unwrap();
        let c = curvature_at(&m, [1.0, 0.8, 2.0, 0.4]).unwrap();
        let f = orthonormal_frame(&c.metric, Orientation::Positive).unwrap();
        let b = curvature_operator(&c, &f).unwrap();
        assert!((b.full - Matrix6::identity()).amax() < 1e-9, "{}", b.full);
    }

    #[test]
    fn mismatched_frame_is_rejected() {
        let m = builtin_model("flat_t4", &[]).unwrap();
        let c = curvature_at(&m, [1.0, 1.0, 1.0, 1.0]).unwrap();
        let f = orthonormal_frame(&unit_metric([1.0; 4]), Orientation::Positive).unwrap();
        assert!(matches!(
            curvature_operator(&c, &f),
            Err(FormError::FrameMismatch { .. })
        ));
    }
}
