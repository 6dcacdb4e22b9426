//! Deterministic symmetric 3×3 eigensolver.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenError {
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    Asymmetric(f64),
    #[error("matrix has non-finite entries")]
    NonFinite,
}

/// Eigenvalues gaps below this multiple of `max(1, |A|)` flag a degenerate
/// spectrum.
pub const DEGENERACY_TOL: f64 = 1e-7;
/// Gaps below this multiple are treated as exact ties when fixing the
/// eigenvectors.
const TIE_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen3 {
    /// Ascending.
    pub values: [f64; 3],
    /// Column `i` is the unit eigenvector of `values[i]`.
    pub vectors: Matrix3<f64>,
    pub degenerate: bool,
    pub min_gap: f64,
}

/// Cyclic Jacobi rotations. Eigenvectors are sign-normalised (largest
/// component positive); within a cluster of tied eigenvalues they are
/// replaced by Gram–Schmidt of the reference axes projected onto the
/// cluster's eigenspace.
pub fn eigen3_sym(a: &Matrix3<f64>) -> Result<SymEigen3, EigenError> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(EigenError::NonFinite);
    }
    let scale = a.norm().max(1.0);
    let asym = (a - a.transpose()).amax();
    if asym > 1e-10 * scale {
        return Err(EigenError::Asymmetric(asym));
    }
    let mut m = (a + a.transpose()) * 0.5;
    let mut v = Matrix3::<f64>::identity();

    for _sweep in 0..64 {
        let off = m[(0, 1)].powi(2) + m[(0, 2)].powi(2) + m[(1, 2)].powi(2);
        if off <= (f64::EPSILON * m.norm()).powi(2) * 1e-4 || off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let apq = m[(p, q)];
            if apq == 0.0 {
                continue;
            }
            let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut rot = Matrix3::identity();
            rot[(p, p)] = c;
            rot[(q, q)] = c;
            rot[(p, q)] = s;
            rot[(q, p)] = -s;
            m = rot.transpose() * m * rot;
            m[(p, q)] = 0.0;
            m[(q, p)] = 0.0;
            v *= rot;
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.map(|i| m[(i, i)]);
    let mut vecs: Vec<Vector3<f64>> = order.iter().map(|&i| v.column(i).into_owned()).collect();

    let gaps = [values[1] - values[0], values[2] - values[1]];
    let min_gap = gaps[0].min(gaps[1]);

    // tie clusters as index ranges
    let tie = TIE_TOL * scale;
    let mut start = 0;
    while start < 3 {
        let mut end = start + 1;
        while end < 3 && values[end] - values[end - 1] < tie {
            end += 1;
        }
        if end - start > 1 {
            regularise_cluster(&mut vecs[start..end]);
        }
        start = end;
    }

    for x in vecs.iter_mut() {
        let k = x.iamax();
        if x[k] < 0.0 {
            *x = -*x;
        }
    }

    Ok(SymEigen3 {
        values,
        vectors: Matrix3::from_columns(&vecs),
        degenerate: min_gap < DEGENERACY_TOL * scale,
        min_gap,
    })
}

fn regularise_cluster(vecs: &mut [Vector3<f64>]) {
    let mut proj = Matrix3::zeros();
    for x in vecs.iter() {
        proj += x * x.transpose();
    }
    let mut chosen: Vec<Vector3<f64>> = Vec::with_capacity(vecs.len());
    let mut used = [false; 3];
    while chosen.len() < vecs.len() {
        let mut best: Option<(usize, Vector3<f64>, f64)> = None;
        for (k, u) in used.iter().enumerate() {
            if *u {
                continue;
            }
            let mut w = proj.column(k).into_owned();
            for c in &chosen {
                w -= c * c.dot(&w);
            }
            let n = w.norm();
            if best.as_ref().is_none_or(|b| n > b.2 + 1e-12) {
                best = Some((k, w, n));
            }
        }
        let (k, w, n) = best.expect("an unused axis remains");
        used[k] = true;
        chosen.push(w / n);
    }
    vecs.copy_from_slice(&chosen);
}
