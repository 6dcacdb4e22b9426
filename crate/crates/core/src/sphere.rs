//! Deterministic point sets on S² and S³.

use std::f64::consts::PI;

use nalgebra::{Vector3, Vector4};

/// Vertices of the 24-cell: `±e_i` and `(±½, ±½, ±½, ±½)`. They form a
/// spherical 5-design, so averaging any polynomial of degree ≤ 5 over them
/// gives its exact mean over S³.
pub fn cell24_vertices() -> Vec<Vector4<f64>> {
    let mut v = Vec::with_capacity(24);
    for i in 0..4 {
        for s in [1.0, -1.0] {
            let mut x = Vector4::zeros();
            x[i] = s;
            v.push(x);
        }
    }
    for mask in 0..16u32 {
        let c = |b: u32| if mask >> b & 1 == 1 { -0.5 } else { 0.5 };
        v.push(Vector4::new(c(0), c(1), c(2), c(3)));
    }
    v
}

/// `n` near-uniform points on S³ in Hopf coordinates: `sin²η` stratified on
/// a regular grid, the two circle angles from a Kronecker sequence.
pub fn s3_lattice(n: usize) -> Vec<Vector4<f64>> {
    // frac parts of the plastic-number sequence
    let g = 1.324_717_957_244_746_f64;
    let (a1, a2) = (1.0 / g, 1.0 / (g * g));
    (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) / n as f64;
            let (s, c) = (t.sqrt(), (1.0 - t).sqrt());
            let x1 = 2.0 * PI * (i as f64 * a1).fract();
            let x2 = 2.0 * PI * (i as f64 * a2).fract();
            Vector4::new(c * x1.cos(), c * x1.sin(), s * x2.cos(), s * x2.sin())
        })
        .collect()
}

/// Fibonacci spiral with `n` points on S².
pub fn s2_fibonacci(n: usize) -> Vec<Vector3<f64>> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            Vector3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell24_integrates_quartics_exactly() {
        let v = cell24_vertices();
        assert_eq!(v.len(), 24);
        let avg = |f: &dyn Fn(&Vector4<f64>) -> f64| v.iter().map(f).sum::<f64>() / 24.0;
        // S³ moments: E[x⁴] = 1/8, E[x²y²] = 1/24, E[x²] = 1/4
        assert!((avg(&|x| x[0].powi(4)) - 0.125).abs() < 1e-15);
        assert!((avg(&|x| x[0].powi(2) * x[2].powi(2)) - 1.0 / 24.0).abs() < 1e-15);
        assert!((avg(&|x| x[1].powi(2)) - 0.25).abs() < 1e-15);
        assert!(avg(&|x| x[0].powi(3) * x[1]).abs() < 1e-15);
        assert!(avg(&|x| x[0] * x[1].powi(2) * x[2].powi(2)).abs() < 1e-15);
    }

    #[test]
    fn lattices_are_unit() {
        for x in s3_lattice(100) {
            assert!((x.norm() - 1.0).abs() < 1e-14);
        }
        for x in s2_fibonacci(100) {
            assert!((x.norm() - 1.0).abs() < 1e-14);
        }
    }
}
