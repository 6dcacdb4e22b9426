//! Almost-Hermitian curvature: holomorphic sectional, orthogonal bisectional
//! and biorthogonal curvature, their brute-force extremes and sphere
//! averages, the unitary frame adapted to an anti-self-dual form, and
//! residual checks of the eigenvalue formulas for these extremes.
//!
//! Everything here works in orthonormal-frame components, where the metric
//! is the identity and `J` is an orthogonal antisymmetric matrix.

use nalgebra::{Matrix3, Matrix4, Matrix6, SymmetricEigen, Vector3, Vector4};
use thiserror::Error;

use crate::curvature::{curvature_at, to_frame_components, CurvaturePoint, Tensor4};
use crate::eigen::EigenError;
use crate::forms::{
    curvature_operator, form_from_lambda, orthonormal_frame, FormError, Frame, OperatorBlocks,
    Orientation, TwoForm,
};
use crate::metric::{ChartMetric, ComplexStructure, HermitianDecl, MetricError, DIM};
use crate::models::STANDARD_J;
use crate::spectral::{spectrum, WeylSpectrum};
use crate::sphere::{cell24_vertices, s2_fibonacci, s3_lattice};

pub const MIN_SPHERE_SAMPLES: usize = 1000;
/// Target norm of the Riemannian gradient at a refined extremum.
pub const REFINE_GRADIENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KahlerError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("J is not an orthogonal complex structure for the metric (defect {0:e})")]
    NotCompatible(f64),
    #[error("{0} requires a model declared Kähler")]
    NotKahler(&'static str),
    #[error("vector must have unit length, got |X| = {0}")]
    NotUnit(f64),
    #[error("vectors must be orthonormal with Y orthogonal to X and JX (defect {0:e})")]
    NotAdmissible(f64),
    #[error("sample budget too small: {0} sphere samples (minimum {MIN_SPHERE_SAMPLES})")]
    BudgetTooSmall(usize),
    #[error("norm must be √2, got {0}")]
    BadNorm(f64),
    #[error("form is not anti-self-dual (defect {0:e})")]
    NotAntiSelfDual(f64),
}

/// Almost-complex structure at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct KahlerStructure {
    /// Coordinate components, column j is `J ∂_j`.
    pub j: Matrix4<f64>,
    /// Frame components, column b is `J e_b`.
    pub j_frame: Matrix4<f64>,
    /// `ω(X, Y) = g(JX, Y)` on the simple frame basis; `|ω| = √2`.
    pub omega: TwoForm,
    pub is_integrable_kahler: bool,
}

fn standard_j() -> Matrix4<f64> {
    Matrix4::from_fn(|r, c| STANDARD_J[r][c])
}

impl KahlerStructure {
    pub fn from_frame_matrix(j_frame: Matrix4<f64>, frame: &Frame, kahler: bool) -> Self {
        let omega = TwoForm::from_matrix(&j_frame.transpose());
        KahlerStructure {
            j: frame.vectors * j_frame * frame.coframe,
            j_frame,
            omega,
            is_integrable_kahler: kahler,
        }
    }

    /// `J e1 = e2, J e3 = e4` on flat `C²` with the identity frame.
    pub fn flat_standard() -> Self {
        let j = standard_j();
        KahlerStructure {
            j,
            j_frame: j,
            omega: TwoForm::from_matrix(&j.transpose()),
            is_integrable_kahler: true,
        }
    }

    pub fn apply(&self, x: &Vector4<f64>) -> Vector4<f64> {
        self.j_frame * x
    }

    /// `max(|J² + I|, |JᵀJ − I|)` in frame components.
    pub fn defect(&self) -> f64 {
        let id = Matrix4::identity();
        let a = (self.j_frame * self.j_frame + id).amax();
        let b = (self.j_frame.transpose() * self.j_frame - id).amax();
        a.max(b)
    }
}

/// The declared complex structure of `metric` expressed in `frame`.
pub fn kahler_structure(metric: &ChartMetric, frame: &Frame) -> Result<KahlerStructure, KahlerError> {
    let decl = metric.hermitian.unwrap_or(HermitianDecl {
        structure: ComplexStructure::FrameAdapted,
        integrable_kahler: false,
    });
    let k = match decl.structure {
        ComplexStructure::FrameAdapted => {
            KahlerStructure::from_frame_matrix(standard_j(), frame, decl.integrable_kahler)
        }
        ComplexStructure::Coordinate(jc) => {
            let j = Matrix4::from_fn(|r, c| jc[r][c]);
            let jf = frame.coframe * j * frame.vectors;
            let mut k = KahlerStructure::from_frame_matrix(jf, frame, decl.integrable_kahler);
            k.j = j;
            k
        }
    };
    let d = k.defect();
    if d > 1e-10 {
        return Err(KahlerError::NotCompatible(d));
    }
    Ok(k)
}

/// All data needed for the Kähler-layer computations at one point, in the
/// orientation for which ω is self-dual.
#[derive(Debug, Clone)]
pub struct KahlerPoint {
    pub curvature: CurvaturePoint,
    pub frame: Frame,
    pub blocks: OperatorBlocks,
    pub spectrum: WeylSpectrum,
    pub kahler: KahlerStructure,
    /// `R_abcd` in the frame.
    pub riemann_frame: Tensor4,
}

impl KahlerPoint {
    pub fn at(metric: &ChartMetric, point: [f64; DIM]) -> Result<Self, KahlerError> {
        let c = curvature_at(metric, point)?;
        let mut frame = orthonormal_frame(&c.metric, Orientation::Positive)?;
        let mut k = kahler_structure(metric, &frame)?;
        if k.omega.wedge(&k.omega) < 0.0 {
            frame = orthonormal_frame(&c.metric, Orientation::Negative)?;
            k = kahler_structure(metric, &frame)?;
        }
        Self::from_parts(c, frame, k)
    }

    pub fn from_parts(
        curvature: CurvaturePoint,
        frame: Frame,
        kahler: KahlerStructure,
    ) -> Result<Self, KahlerError> {
        let blocks = curvature_operator(&curvature, &frame)?;
        let spectrum = spectrum(&blocks)?;
        let riemann_frame = blocks.frame_riemann();
        Ok(KahlerPoint {
            curvature,
            frame,
            blocks,
            spectrum,
            kahler,
            riemann_frame,
        })
    }

    pub fn scalar(&self) -> f64 {
        self.curvature.scalar
    }

    /// Curvature scale used for relative tolerances.
    pub fn scale(&self) -> f64 {
        self.blocks.full.amax().max(1e-300)
    }

    fn pairing(&self, a: &TwoForm, b: &TwoForm) -> f64 {
        self.blocks.pairing(a, b)
    }
}

fn check_unit(x: &Vector4<f64>) -> Result<(), KahlerError> {
    let n = x.norm();
    if (n - 1.0).abs() > 1e-10 {
        return Err(KahlerError::NotUnit(n));
    }
    Ok(())
}

/// `H(X) = R(X∧JX, X∧JX)` for a unit frame vector.
pub fn holomorphic_sectional(kp: &KahlerPoint, x: &Vector4<f64>) -> Result<f64, KahlerError> {
    check_unit(x)?;
    Ok(holomorphic_unchecked(kp, x))
}

fn holomorphic_unchecked(kp: &KahlerPoint, x: &Vector4<f64>) -> f64 {
    let p = TwoForm::wedge_vectors(x, &kp.kahler.apply(x));
    kp.pairing(&p, &p)
}

/// `B(X, Y) = R(X∧JX, Y∧JY)` for orthonormal `X, Y` with `Y ⊥ JX`.
pub fn bisectional(kp: &KahlerPoint, x: &Vector4<f64>, y: &Vector4<f64>) -> Result<f64, KahlerError> {
    check_unit(x)?;
    check_unit(y)?;
    let jx = kp.kahler.apply(x);
    let d = x.dot(y).abs().max(jx.dot(y).abs());
    if d > 1e-10 {
        return Err(KahlerError::NotAdmissible(d));
    }
    let a = TwoForm::wedge_vectors(x, &jx);
    let b = TwoForm::wedge_vectors(y, &kp.kahler.apply(y));
    Ok(kp.pairing(&a, &b))
}

/// Sectional curvature of the plane spanned by `x, y`.
pub fn sectional(kp: &KahlerPoint, x: &Vector4<f64>, y: &Vector4<f64>) -> f64 {
    let p = TwoForm::wedge_vectors(x, y);
    kp.pairing(&p, &p) / p.norm_sq()
}

/// A unit vector orthogonal to `x` and `jx`.
pub fn hermitian_complement(x: &Vector4<f64>, jx: &Vector4<f64>) -> Vector4<f64> {
    let mut best = Vector4::zeros();
    let mut best_n = -1.0;
    for k in 0..DIM {
        let mut v = Vector4::zeros();
        v[k] = 1.0;
        v -= x * x.dot(&v);
        v -= jx * jx.dot(&v);
        let n = v.norm();
        if n > best_n + 1e-12 {
            best_n = n;
            best = v / n;
        }
    }
    best
}

/// Fully symmetric quartic form on R⁴.
#[derive(Debug, Clone, PartialEq)]
pub struct Quartic {
    c: Vec<f64>,
}

#[inline]
fn qi(a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * 4 + b) * 4 + c) * 4 + d
}

const PERMS4: [[usize; 4]; 24] = [
    [0, 1, 2, 3], [0, 1, 3, 2], [0, 2, 1, 3], [0, 2, 3, 1], [0, 3, 1, 2], [0, 3, 2, 1],
    [1, 0, 2, 3], [1, 0, 3, 2], [1, 2, 0, 3], [1, 2, 3, 0], [1, 3, 0, 2], [1, 3, 2, 0],
    [2, 0, 1, 3], [2, 0, 3, 1], [2, 1, 0, 3], [2, 1, 3, 0], [2, 3, 0, 1], [2, 3, 1, 0],
    [3, 0, 1, 2], [3, 0, 2, 1], [3, 1, 0, 2], [3, 1, 2, 0], [3, 2, 0, 1], [3, 2, 1, 0],
];

impl Quartic {
    /// Symmetrises an arbitrary 4-tensor `t[a][b][c][d]` (flattened).
    pub fn from_tensor(t: &[f64]) -> Self {
        assert_eq!(t.len(), 256);
        let mut c = vec![0.0; 256];
        for a in 0..4 {
            for b in 0..4 {
                for cc in 0..4 {
                    for d in 0..4 {
                        let idx = [a, b, cc, d];
                        let mut s = 0.0;
                        for p in PERMS4 {
                            s += t[qi(idx[p[0]], idx[p[1]], idx[p[2]], idx[p[3]])];
                        }
                        c[qi(a, b, cc, d)] = s / 24.0;
                    }
                }
            }
        }
        Quartic { c }
    }

    /// `Q(X, X, ·, ·)`.
    fn contract2(&self, x: &Vector4<f64>) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        for a in 0..4 {
            for b in 0..4 {
                let mut v = 0.0;
                for c in 0..4 {
                    for d in 0..4 {
                        v += self.c[qi(a, b, c, d)] * x[c] * x[d];
                    }
                }
                m[(a, b)] = v;
            }
        }
        m
    }

    pub fn eval(&self, x: &Vector4<f64>) -> f64 {
        let m = self.contract2(x);
        x.dot(&(m * x))
    }

    pub fn grad(&self, x: &Vector4<f64>) -> Vector4<f64> {
        self.contract2(x) * x * 4.0
    }

    pub fn hess(&self, x: &Vector4<f64>) -> Matrix4<f64> {
        self.contract2(x) * 12.0
    }

    pub fn max_coefficient(&self) -> f64 {
        self.c.iter().fold(0.0f64, |a, b| a.max(b.abs()))
    }
}

/// `H` as a quartic: `Σ R_abcd J_bq J_ds X_a X_q X_c X_s`.
pub fn holomorphic_quartic(r: &Tensor4, j: &Matrix4<f64>) -> Quartic {
    let mut t = vec![0.0; 256];
    for a in 0..4 {
        for q in 0..4 {
            for c in 0..4 {
                for s in 0..4 {
                    let mut v = 0.0;
                    for b in 0..4 {
                        for d in 0..4 {
                            v += r[a][b][c][d] * j[(b, q)] * j[(d, s)];
                        }
                    }
                    t[qi(a, q, c, s)] = v;
                }
            }
        }
    }
    Quartic::from_tensor(&t)
}

/// `B(X) = |X|² R(X∧JX, ω) − H(X)`, equal to `R(X∧JX, Y∧JY)` on unit `X`
/// for any unit `Y ⊥ X, JX`.
pub fn bisectional_quartic(kp: &KahlerPoint) -> Quartic {
    let j = &kp.kahler.j_frame;
    let v = TwoForm(kp.blocks.pair_matrix * kp.kahler.omega.0).to_matrix();
    let vj = v * j;
    let m = (vj + vj.transpose()) * 0.5;
    let h = holomorphic_quartic(&kp.riemann_frame, j);
    let mut t = vec![0.0; 256];
    for a in 0..4 {
        for c in 0..4 {
            for d in 0..4 {
                t[qi(a, a, c, d)] += m[(c, d)];
            }
        }
    }
    let mut q = Quartic::from_tensor(&t);
    for (x, y) in q.c.iter_mut().zip(&h.c) {
        *x -= y;
    }
    q
}

/// Orthonormal basis of the tangent space of S³ at `x`.
fn tangent_basis(x: &Vector4<f64>) -> [Vector4<f64>; 3] {
    let mut out: Vec<Vector4<f64>> = Vec::with_capacity(3);
    let mut used = [false; 4];
    while out.len() < 3 {
        let mut best: Option<(usize, Vector4<f64>, f64)> = None;
        for k in 0..4 {
            if used[k] {
                continue;
            }
            let mut v = Vector4::zeros();
            v[k] = 1.0;
            v -= x * x.dot(&v);
            for u in &out {
                v -= u * u.dot(&v);
            }
            let n = v.norm();
            if best.as_ref().is_none_or(|b| n > b.2 + 1e-12) {
                best = Some((k, v, n));
            }
        }
        let (k, v, n) = best.expect("unused axis");
        used[k] = true;
        out.push(v / n);
    }
    [out[0], out[1], out[2]]
}

/// A refined critical point.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereExtremum {
    pub value: f64,
    pub argument: Vector4<f64>,
    pub gradient_norm: f64,
}

/// Saddle-free Riemannian Newton iteration on S³ for `±q`.
fn refine_on_s3(q: &Quartic, x0: &Vector4<f64>, maximize: bool, scale: f64) -> SphereExtremum {
    let sign = if maximize { 1.0 } else { -1.0 };
    let mut x = x0.normalize();
    let mut f = q.eval(&x);
    let floor = 1e-6 * scale;
    let mut gnorm = f64::INFINITY;
    for _ in 0..200 {
        let grad = q.grad(&x);
        let t = tangent_basis(&x);
        let g = Vector3::new(t[0].dot(&grad), t[1].dot(&grad), t[2].dot(&grad)) * sign;
        gnorm = g.norm();
        if gnorm < 0.01 * REFINE_GRADIENT_TOL * scale.max(1.0) {
            break;
        }
        let h4 = q.hess(&x) - Matrix4::identity() * (4.0 * f);
        let h = Matrix3::from_fn(|r, c| t[r].dot(&(h4 * t[c]))) * sign;
        let eig = SymmetricEigen::new(h);
        let mut d = Vector3::zeros();
        for i in 0..3 {
            let v = eig.eigenvectors.column(i);
            let mu = eig.eigenvalues[i].abs().max(floor);
            d += v * (v.dot(&g) / mu);
        }
        let step = t[0] * d[0] + t[1] * d[1] + t[2] * d[2];
        let mut alpha = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let xn = (x + step * alpha).normalize();
            let fnew = q.eval(&xn);
            if sign * (fnew - f) >= -1e-15 * scale {
                moved = (xn - x).norm() > 0.0;
                x = xn;
                f = fnew;
                break;
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let grad = q.grad(&x);
    let rg = grad - x * x.dot(&grad);
    gnorm = gnorm.min(rg.norm()).max(0.0);
    SphereExtremum {
        value: f,
        argument: x,
        gradient_norm: rg.norm().min(gnorm.max(rg.norm())),
    }
}

/// Dense lattice search followed by Newton refinement of the best `starts`
/// candidates.
pub fn extremize_quartic(
    q: &Quartic,
    lattice: &[Vector4<f64>],
    starts: usize,
    maximize: bool,
) -> SphereExtremum {
    let scale = q.max_coefficient().max(1e-300);
    let mut vals: Vec<(usize, f64)> = lattice.iter().map(|x| q.eval(x)).enumerate().collect();
    vals.sort_by(|a, b| {
        let o = if maximize { b.1.total_cmp(&a.1) } else { a.1.total_cmp(&b.1) };
        o.then(a.0.cmp(&b.0))
    });
    let mut best: Option<SphereExtremum> = None;
    for &(i, _) in vals.iter().take(starts.max(1)) {
        let e = refine_on_s3(q, &lattice[i], maximize, scale);
        let better = match &best {
            None => true,
            Some(b) => {
                if maximize {
                    e.value > b.value
                } else {
                    e.value < b.value
                }
            }
        };
        if better {
            best = Some(e);
        }
    }
    best.expect("at least one start")
}

/// Orthonormal basis `(X, Y, Z, W)` with `X∧Y` the plane of a unit
/// decomposable 2-form and `Z, W` spanning its complement.
pub fn plane_basis(xi: &TwoForm) -> Matrix4<f64> {
    let a = xi.to_matrix();
    // A v = X(Y·v) − Y(X·v) lies in the plane
    let mut k = 0;
    let mut n = -1.0;
    for c in 0..4 {
        let cn = a.column(c).norm();
        if cn > n + 1e-12 {
            n = cn;
            k = c;
        }
    }
    let x: Vector4<f64> = a.column(k).into_owned() / n;
    let y: Vector4<f64> = -(a * x);
    let y = (y - x * x.dot(&y)).normalize();
    let mut rest: Vec<Vector4<f64>> = Vec::with_capacity(2);
    let mut used = [false; 4];
    while rest.len() < 2 {
        let mut best: Option<(usize, Vector4<f64>, f64)> = None;
        for c in 0..4 {
            if used[c] {
                continue;
            }
            let mut v = Vector4::zeros();
            v[c] = 1.0;
            for u in [&x, &y].into_iter().chain(rest.iter()) {
                v -= u * u.dot(&v);
            }
            let vn = v.norm();
            if best.as_ref().is_none_or(|b| vn > b.2 + 1e-12) {
                best = Some((c, v, vn));
            }
        }
        let (c, v, vn) = best.expect("unused axis");
        used[c] = true;
        rest.push(v / vn);
    }
    Matrix4::from_columns(&[x, y, rest[0], rest[1]])
}

fn plane_form(f: &Matrix4<f64>, i: usize, j: usize) -> TwoForm {
    TwoForm::wedge_vectors(&f.column(i).into_owned(), &f.column(j).into_owned())
}

/// `K⊥(P) = (K(P) + K(P⊥))/2` for the plane basis `f`.
pub fn biorthogonal(pair: &Matrix6<f64>, f: &Matrix4<f64>) -> f64 {
    let p = plane_form(f, 0, 1);
    let q = plane_form(f, 2, 3);
    0.5 * (p.0.dot(&(pair * p.0)) + q.0.dot(&(pair * q.0)))
}

/// Derivatives of `K⊥` along the four rotations mixing `{X, Y}` with `{Z, W}`.
fn biorthogonal_gradient(pair: &Matrix6<f64>, f: &Matrix4<f64>) -> [f64; 4] {
    let col = |i: usize| -> Vector4<f64> { f.column(i).into_owned() };
    let p = plane_form(f, 0, 1);
    let q = plane_form(f, 2, 3);
    let rp = pair * p.0;
    let rq = pair * q.0;
    let mut g = [0.0; 4];
    for (n, (i, j)) in [(0, 2), (0, 3), (1, 2), (1, 3)].into_iter().enumerate() {
        // column i moves toward column j; column j moves toward −column i
        let dp = if i == 0 {
            TwoForm::wedge_vectors(&col(j), &col(1))
        } else {
            TwoForm::wedge_vectors(&col(0), &col(j))
        };
        let dq = if j == 2 {
            TwoForm::wedge_vectors(&(-col(i)), &col(3))
        } else {
            TwoForm::wedge_vectors(&col(2), &(-col(i)))
        };
        g[n] = dp.0.dot(&rp) + dq.0.dot(&rq);
    }
    g
}

fn cayley(a: &Matrix4<f64>) -> Matrix4<f64> {
    let id = Matrix4::identity();
    let m = id - a * 0.5;
    m.try_inverse().expect("Cayley transform of a small rotation") * (id + a * 0.5)
}

const PLANE_GENERATORS: [(usize, usize); 4] = [(0, 2), (0, 3), (1, 2), (1, 3)];

fn generator(c: &[f64; 4]) -> Matrix4<f64> {
    let mut a = Matrix4::zeros();
    for (n, (i, j)) in PLANE_GENERATORS.into_iter().enumerate() {
        a[(j, i)] = c[n];
        a[(i, j)] = -c[n];
    }
    a
}

fn orthonormalize(f: &Matrix4<f64>) -> Matrix4<f64> {
    let qr = f.qr();
    qr.q() * Matrix4::from_diagonal(&qr.r().diagonal().map(f64::signum))
}

fn norm4(g: &[f64; 4]) -> f64 {
    g.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Saddle-free Newton ascent (or descent) of `K⊥` over planes, moving the
/// basis by Cayley rotations; the Hessian is a central difference of the
/// analytic gradient.
fn refine_plane(pair: &Matrix6<f64>, f0: &Matrix4<f64>, maximize: bool, scale: f64) -> (f64, Matrix4<f64>, f64) {
    let sign = if maximize { 1.0 } else { -1.0 };
    let mut f = *f0;
    let mut val = biorthogonal(pair, &f);
    let floor = 1e-6 * scale;
    let h = 1e-4;
    let mut gnorm = norm4(&biorthogonal_gradient(pair, &f));
    for _ in 0..200 {
        if gnorm < 0.01 * REFINE_GRADIENT_TOL * scale.max(1.0) {
            break;
        }
        let g = biorthogonal_gradient(pair, &f);
        let mut hess = nalgebra::Matrix4::<f64>::zeros();
        for l in 0..4 {
            let mut c = [0.0; 4];
            c[l] = h;
            let gp = biorthogonal_gradient(pair, &(f * cayley(&generator(&c))));
            c[l] = -h;
            let gm = biorthogonal_gradient(pair, &(f * cayley(&generator(&c))));
            for k in 0..4 {
                hess[(k, l)] = sign * (gp[k] - gm[k]) / (2.0 * h);
            }
        }
        let hess = (hess + hess.transpose()) * 0.5;
        let gs = Vector4::from(g) * sign;
        let eig = SymmetricEigen::new(hess);
        let mut d = Vector4::zeros();
        for i in 0..4 {
            let v = eig.eigenvectors.column(i);
            d += v * (v.dot(&gs) / eig.eigenvalues[i].abs().max(floor));
        }
        let mut alpha = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let c = d * alpha;
            let fnew = orthonormalize(&(f * cayley(&generator(&[c[0], c[1], c[2], c[3]]))));
            let vnew = biorthogonal(pair, &fnew);
            if sign * (vnew - val) >= -1e-15 * scale {
                let gn = norm4(&biorthogonal_gradient(pair, &fnew));
                // at rounding level only a smaller gradient counts as progress
                if sign * (vnew - val) > 1e-14 * scale || gn < gnorm {
                    f = fnew;
                    val = vnew;
                    gnorm = gn;
                    moved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (val, f, gnorm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleBudget {
    /// Points of the S³ lattice searched for `H` and `B`.
    pub sphere_points: usize,
    /// Fibonacci points per S² factor for the plane grid.
    pub plane_points: usize,
    /// Candidates refined per extremum.
    pub refine_starts: usize,
}

impl Default for SampleBudget {
    fn default() -> Self {
        SampleBudget {
            sphere_points: 8192,
            plane_points: 48,
            refine_starts: 6,
        }
    }
}

/// Extremes and averages of the Kähler-layer curvatures at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSamples {
    pub h_max: f64,
    pub h_min: f64,
    pub b_max: f64,
    pub b_min: f64,
    pub kperp_max: f64,
    pub kperp_min: f64,
    pub h_av: f64,
    pub s_star: f64,
    pub h_argmax: Vector4<f64>,
    pub h_argmin: Vector4<f64>,
    pub b_argmax: Vector4<f64>,
    pub b_argmin: Vector4<f64>,
    /// Largest final gradient norm over all refined extrema.
    pub max_gradient_norm: f64,
}

pub fn extremize_curvatures(kp: &KahlerPoint, budget: SampleBudget) -> Result<CurvatureSamples, KahlerError> {
    if budget.sphere_points < MIN_SPHERE_SAMPLES {
        return Err(KahlerError::BudgetTooSmall(budget.sphere_points));
    }
    let lattice = s3_lattice(budget.sphere_points);
    let hq = holomorphic_quartic(&kp.riemann_frame, &kp.kahler.j_frame);
    let bq = bisectional_quartic(kp);
    let starts = budget.refine_starts;
    let h_max = extremize_quartic(&hq, &lattice, starts, true);
    let h_min = extremize_quartic(&hq, &lattice, starts, false);
    let b_max = extremize_quartic(&bq, &lattice, starts, true);
    let b_min = extremize_quartic(&bq, &lattice, starts, false);

    let pair = &kp.blocks.pair_matrix;
    let scale = kp.scale();
    let s2 = s2_fibonacci(budget.plane_points.max(4));
    let mut planes: Vec<(usize, f64, Matrix4<f64>)> = Vec::with_capacity(s2.len() * s2.len());
    for u in &s2 {
        for v in &s2 {
            let xi = form_from_lambda(&[u[0], u[1], u[2]], &[v[0], v[1], v[2]]) * std::f64::consts::FRAC_1_SQRT_2;
            let f = plane_basis(&xi);
            planes.push((planes.len(), biorthogonal(pair, &f), f));
        }
    }
    let plane_extreme = |maximize: bool| -> (f64, f64) {
        let mut order: Vec<&(usize, f64, Matrix4<f64>)> = planes.iter().collect();
        order.sort_by(|a, b| {
            let o = if maximize { b.1.total_cmp(&a.1) } else { a.1.total_cmp(&b.1) };
            o.then(a.0.cmp(&b.0))
        });
        let mut best: Option<(f64, f64)> = None;
        for p in order.into_iter().take(starts.max(1)) {
            let (v, _, g) = refine_plane(pair, &p.2, maximize, scale);
            let better = best.is_none_or(|b| if maximize { v > b.0 } else { v < b.0 });
            if better {
                best = Some((v, g));
            }
        }
        best.expect("plane grid is non-empty")
    };
    let (kperp_max, gk1) = plane_extreme(true);
    let (kperp_min, gk2) = plane_extreme(false);

    let avg = sphere_average_h(kp);
    let grads = [
        h_max.gradient_norm,
        h_min.gradient_norm,
        b_max.gradient_norm,
        b_min.gradient_norm,
        gk1,
        gk2,
    ];
    Ok(CurvatureSamples {
        h_max: h_max.value,
        h_min: h_min.value,
        b_max: b_max.value,
        b_min: b_min.value,
        kperp_max,
        kperp_min,
        h_av: avg.h_av,
        s_star: avg.s_star,
        h_argmax: h_max.argument,
        h_argmin: h_min.argument,
        b_argmax: b_max.argument,
        b_argmin: b_min.argument,
        max_gradient_norm: grads.iter().fold(0.0f64, |a, &b| a.max(b)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereAverage {
    pub h_av: f64,
    /// `2R(ω, ω)`.
    pub s_star: f64,
    /// `s/6`.
    pub berger_pred: f64,
    /// `(s + 3s*)/24`.
    pub hall_murphy_pred: f64,
}

/// Mean of `H` over S³ from the 24-cell design (exact for quartics).
pub fn sphere_average_h(kp: &KahlerPoint) -> SphereAverage {
    let pts = cell24_vertices();
    let h_av = pts.iter().map(|x| holomorphic_unchecked(kp, x)).sum::<f64>() / pts.len() as f64;
    let om = &kp.kahler.omega;
    let s_star = 2.0 * kp.pairing(om, om);
    let s = kp.scalar();
    SphereAverage {
        h_av,
        s_star,
        berger_pred: s / 6.0,
        hall_murphy_pred: (s + 3.0 * s_star) / 24.0,
    }
}

/// Orthonormal basis `(E₁, JE₁, E₃, JE₃)` with `φ = E₁∧JE₁ − E₃∧JE₃`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryFrame {
    pub e1: Vector4<f64>,
    pub je1: Vector4<f64>,
    pub e3: Vector4<f64>,
    pub je3: Vector4<f64>,
    /// `|φ − (E₁∧JE₁ − E₃∧JE₃)|`.
    pub reconstruction_residual: f64,
    /// `max |⟨E_a, E_b⟩ − δ_ab|`.
    pub orthonormality_defect: f64,
}

impl UnitaryFrame {
    pub fn matrix(&self) -> Matrix4<f64> {
        Matrix4::from_columns(&[self.e1, self.je1, self.e3, self.je3])
    }
}

/// Builds the unitary frame adapted to an anti-self-dual `φ` with `|φ| = √2`.
///
/// `I` is defined by `g(IX, Y) = φ(X, Y)`; since `I` and `J` commute, `IJ`
/// is a symmetric involution. A unit `V` with `⟨IV, JV⟩ = 0` is located by
/// bisection on the arc between the reference axes where `⟨IV, JV⟩` is
/// largest and smallest, and `E₁ ∝ V − IJV`, `E₃ ∝ V + IJV`.
pub fn unitary_frame_for_asd_form(phi: &TwoForm, k: &KahlerStructure) -> Result<UnitaryFrame, KahlerError> {
    let n = phi.norm();
    if (n - std::f64::consts::SQRT_2).abs() > 1e-9 {
        return Err(KahlerError::BadNorm(n));
    }
    let sd = phi.self_dual_part().norm();
    if sd > 1e-9 {
        return Err(KahlerError::NotAntiSelfDual(sd));
    }
    let j = &k.j_frame;
    let i_mat = phi.to_matrix().transpose();
    let ij = i_mat * j;
    let f = |v: &Vector4<f64>| (i_mat * v).dot(&(j * v));

    let axes: Vec<Vector4<f64>> = (0..4)
        .map(|c| {
            let mut v = Vector4::zeros();
            v[c] = 1.0;
            v
        })
        .collect();
    let fa: Vec<f64> = axes.iter().map(&f).collect();
    let (mut hi_k, mut lo_k) = (0, 0);
    for c in 1..4 {
        if fa[c] > fa[hi_k] {
            hi_k = c;
        }
        if fa[c] < fa[lo_k] {
            lo_k = c;
        }
    }
    let v = if fa[hi_k].abs() <= 1e-15 {
        axes[hi_k]
    } else if fa[lo_k].abs() <= 1e-15 {
        axes[lo_k]
    } else {
        // f(arc(0)) > 0 > f(arc(π/2))
        let arc = |t: f64| axes[hi_k] * t.cos() + axes[lo_k] * t.sin();
        let (mut a, mut b) = (0.0f64, std::f64::consts::FRAC_PI_2);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if f(&arc(m)) > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        arc(0.5 * (a + b))
    };

    let e1 = (v - ij * v).normalize();
    let e3 = (v + ij * v).normalize();
    let je1 = j * e1;
    let je3 = j * e3;
    let recon = TwoForm::wedge_vectors(&e1, &je1) - TwoForm::wedge_vectors(&e3, &je3);
    let basis = Matrix4::from_columns(&[e1, je1, e3, je3]);
    let defect = (basis.transpose() * basis - Matrix4::identity()).amax();
    Ok(UnitaryFrame {
        e1,
        je1,
        e3,
        je3,
        reconstruction_residual: (*phi - recon).norm(),
        orthonormality_defect: defect,
    })
}

fn require_kahler(kp: &KahlerPoint, what: &'static str) -> Result<(), KahlerError> {
    if kp.kahler.is_integrable_kahler {
        Ok(())
    } else {
        Err(KahlerError::NotKahler(what))
    }
}

/// Residuals of `s/6 − λ₃⁻ = 2B_min` and `s/6 − λ₁⁻ = 2B_max`, plus the
/// pointwise bridge `(s/6)|φ|² − W⁻(φ, φ) = 4B(E₁, E₃)` over the W⁻
/// eigenforms.
#[derive(Debug, Clone, PartialEq)]
pub struct BisectionalCheck {
    pub b_min: f64,
    pub b_max: f64,
    pub residual_min: f64,
    pub residual_max: f64,
    pub bridge_residual: f64,
}

pub fn verify_bisectional_extremes(
    kp: &KahlerPoint,
    samples: &CurvatureSamples,
) -> Result<BisectionalCheck, KahlerError> {
    require_kahler(kp, "the bisectional-curvature check")?;
    let s = kp.scalar();
    let lm = kp.spectrum.lambda_minus;
    let mut bridge = 0.0f64;
    for (i, form) in kp.spectrum.eigenforms_minus.iter().enumerate() {
        let phi = *form * std::f64::consts::SQRT_2;
        let uf = unitary_frame_for_asd_form(&phi, &kp.kahler)?;
        let lhs = s / 6.0 * phi.norm_sq() - 2.0 * lm[i];
        let a = TwoForm::wedge_vectors(&uf.e1, &uf.je1);
        let b = TwoForm::wedge_vectors(&uf.e3, &uf.je3);
        let rhs = 4.0 * kp.pairing(&a, &b);
        bridge = bridge.max((lhs - rhs).abs());
    }
    Ok(BisectionalCheck {
        b_min: samples.b_min,
        b_max: samples.b_max,
        residual_min: (s / 6.0 - lm[2] - 2.0 * samples.b_min).abs(),
        residual_max: (s / 6.0 - lm[0] - 2.0 * samples.b_max).abs(),
        bridge_residual: bridge,
    })
}

/// Residuals of `H_max = s/6 + λ₃⁻/2` and `H_min = s/6 + λ₁⁻/2`
/// (Kähler–Einstein metrics).
#[derive(Debug, Clone, PartialEq)]
pub struct HolomorphicCheck {
    pub h_max: f64,
    pub h_min: f64,
    pub residual_max: f64,
    pub residual_min: f64,
}

pub fn verify_holomorphic_extremes(
    kp: &KahlerPoint,
    samples: &CurvatureSamples,
) -> Result<HolomorphicCheck, KahlerError> {
    require_kahler(kp, "the holomorphic-curvature check")?;
    let s = kp.scalar();
    let lm = kp.spectrum.lambda_minus;
    Ok(HolomorphicCheck {
        h_max: samples.h_max,
        h_min: samples.h_min,
        residual_max: (samples.h_max - (s / 6.0 + lm[2] / 2.0)).abs(),
        residual_min: (samples.h_min - (s / 6.0 + lm[0] / 2.0)).abs(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Brute-force `K⊥` extremes against `s/12 + (λ₃⁺ + λ₃⁻)/2` and
/// `s/12 + (λ₁⁺ + λ₁⁻)/2`, with the sign-dependent comparison to `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiorthogonalCheck {
    pub kperp_max: f64,
    pub kperp_min: f64,
    pub predicted_max: f64,
    pub predicted_min: f64,
    pub residual_max: f64,
    pub residual_min: f64,
    pub sign_checks: Vec<SignCheck>,
}

pub fn verify_biorthogonal_extremes(kp: &KahlerPoint, samples: &CurvatureSamples) -> BiorthogonalCheck {
    let s = kp.scalar();
    let (lp, lm) = (kp.spectrum.lambda_plus, kp.spectrum.lambda_minus);
    let predicted_max = s / 12.0 + (lp[2] + lm[2]) / 2.0;
    let predicted_min = s / 12.0 + (lp[0] + lm[0]) / 2.0;
    let tol = 1e-8 * kp.scale();
    let mut sign_checks = Vec::new();
    if s >= 0.0 {
        sign_checks.push(SignCheck {
            name: "kperp_min_le_half_b_min",
            lhs: samples.kperp_min,
            rhs: samples.b_min / 2.0,
            holds: samples.kperp_min <= samples.b_min / 2.0 + tol,
        });
    }
    if s <= 0.0 {
        sign_checks.push(SignCheck {
            name: "kperp_max_ge_half_b_max",
            lhs: samples.kperp_max,
            rhs: samples.b_max / 2.0,
            holds: samples.kperp_max >= samples.b_max / 2.0 - tol,
        });
    }
    BiorthogonalCheck {
        kperp_max: samples.kperp_max,
        kperp_min: samples.kperp_min,
        predicted_max,
        predicted_min,
        residual_max: (samples.kperp_max - predicted_max).abs(),
        residual_min: (samples.kperp_min - predicted_min).abs(),
        sign_checks,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityResidual {
    pub name: &'static str,
    pub residual: f64,
}

/// J-invariance of the curvature in a unitary frame
/// (`R_ij13 = R_ij24`, `R_ij14 = −R_ij23`) and `Ric(X, X) = H(X) + B(X, Y)`
/// over lattice directions; for Einstein metrics also `s/4 = H + B`.
pub fn kahler_pointwise_identities(kp: &KahlerPoint, einstein: bool) -> Result<Vec<IdentityResidual>, KahlerError> {
    require_kahler(kp, "the Kähler curvature identities")?;
    let j = &kp.kahler.j_frame;
    let mut f1 = Vector4::zeros();
    f1[0] = 1.0;
    let f2 = j * f1;
    let f3 = hermitian_complement(&f1, &f2);
    let f4 = j * f3;
    let u = Matrix4::from_columns(&[f1, f2, f3, f4]);
    let flat: Vec<f64> = kp.riemann_frame.iter().flatten().flatten().flatten().copied().collect();
    let r = to_frame_components(&flat, 4, &u);
    let at = |a: usize, b: usize, c: usize, d: usize| r[((a * 4 + b) * 4 + c) * 4 + d];
    let mut r1 = 0.0f64;
    let mut r2 = 0.0f64;
    for a in 0..4 {
        for b in 0..4 {
            r1 = r1.max((at(a, b, 0, 2) - at(a, b, 1, 3)).abs());
            r2 = r2.max((at(a, b, 0, 3) + at(a, b, 1, 2)).abs());
        }
    }

    let rf = &kp.riemann_frame;
    let ric = Matrix4::from_fn(|b, d| (0..4).map(|a| rf[a][b][a][d]).sum::<f64>());
    let s = kp.scalar();
    let mut r3 = 0.0f64;
    let mut r4 = 0.0f64;
    for x in s3_lattice(64) {
        let jx = j * x;
        let y = hermitian_complement(&x, &jx);
        let h = holomorphic_unchecked(kp, &x);
        let b = bisectional(kp, &x, &y)?;
        r3 = r3.max((x.dot(&(ric * x)) - h - b).abs());
        r4 = r4.max((s / 4.0 - h - b).abs());
    }
    let mut out = vec![
        IdentityResidual {
            name: "r_ij13_eq_r_ij24",
            residual: r1,
        },
        IdentityResidual {
            name: "r_ij14_eq_minus_r_ij23",
            residual: r2,
        },
        IdentityResidual {
            name: "ricci_eq_h_plus_b",
            residual: r3,
        },
    ];
    if einstein {
        out.push(IdentityResidual {
            name: "quarter_scalar_eq_h_plus_b",
            residual: r4,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::lambda_basis;
    use crate::models::builtin_model;

    #[test]
    fn flat_standard_omega_is_self_dual_with_norm_sqrt2() {
        let k = KahlerStructure::flat_standard();
        assert!((k.omega.norm() - 2f64.sqrt()).abs() < 1e-15);
        assert!((k.omega.star() - k.omega).norm() < 1e-15);
        assert!(k.defect() < 1e-15);
    }

    #[test]
    fn canonical_asd_form_gives_standard_basis() {
        let k = KahlerStructure::flat_standard();
        let phi = lambda_basis()[3] * 2f64.sqrt();
        let uf = unitary_frame_for_asd_form(&phi, &k).unwrap();
        assert!(uf.reconstruction_residual < 1e-12);
        assert!(uf.orthonormality_defect < 1e-12);
    }

    #[test]
    fn wrong_norm_rejected() {
        let k = KahlerStructure::flat_standard();
        let phi = lambda_basis()[4];
        assert!(matches!(
            unitary_frame_for_asd_form(&phi, &k),
            Err(KahlerError::BadNorm(_))
        ));
        let sd = lambda_basis()[0] * 2f64.sqrt();
        assert!(matches!(
            unitary_frame_for_asd_form(&sd, &k),
            Err(KahlerError::NotAntiSelfDual(_))
        ));
    }

    #[test]
    fn product_holomorphic_sectional_values() {
        let m = builtin_model("product_s2xs2", &[1.0, 1.0]).unwrap();
        let kp = KahlerPoint::at(&m, [1.1, 0.3, 1.7, 2.2]).unwrap();
        let x = Vector4::new(1.0, 0.0, 0.0, 0.0);
        assert!((holomorphic_sectional(&kp, &x).unwrap() - 1.0).abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let x = Vector4::new(h, 0.0, h, 0.0);
        assert!((holomorphic_sectional(&kp, &x).unwrap() - 0.5).abs() < 1e-12);
        assert!(holomorphic_sectional(&kp, &(x * 2.0)).is_err());
    }

    #[test]
    fn quartic_matches_direct_evaluation() {
        let m = builtin_model("fubini_study_cp2", &[1.0]).unwrap();
        let kp = KahlerPoint::at(&m, [0.2, 0.4, -0.3, 0.1]).unwrap();
        let q = holomorphic_quartic(&kp.riemann_frame, &kp.kahler.j_frame);
        let bq = bisectional_quartic(&kp);
        for x in s3_lattice(20) {
            let direct = holomorphic_unchecked(&kp, &x);
            assert!((q.eval(&x) - direct).abs() < 1e-12);
            let jx = kp.kahler.apply(&x);
            let y = hermitian_complement(&x, &jx);
            let b = bisectional(&kp, &x, &y).unwrap();
            assert!((bq.eval(&x) - b).abs() < 1e-12);
        }
    }

    #[test]
    fn budget_floor_enforced() {
        let m = builtin_model("flat_t4", &[]).unwrap();
        let kp = KahlerPoint::at(&m, [1.0; 4]).unwrap();
        let b = SampleBudget {
            sphere_points: 999,
            ..SampleBudget::default()
        };
        assert!(matches!(
            extremize_curvatures(&kp, b),
            Err(KahlerError::BudgetTooSmall(999))
        ));
    }
}
