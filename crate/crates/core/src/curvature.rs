//! Christoffel symbols, Riemann, Ricci and Weyl tensors, and the covariant
//! derivative of the self-dual Weyl tensor.
//!
//! Sign convention: `R_ijkl = R(∂_i∧∂_j, ∂_k∧∂_l) = g(R(∂_i, ∂_j)∂_l, ∂_k)`,
//! so the round unit sphere has `R(X∧Y, X∧Y) = +1` for orthonormal `X, Y`.

use nalgebra::{Matrix4, Matrix6};
use thiserror::Error;

use crate::forms::{
    hodge_star_matrix, orthonormal_frame, pair_matrix, tensor_from_pair_matrix, FormError, Frame,
    Orientation,
};
use crate::metric::{ChartMetric, MetricError, MetricValue, DIM};

pub type Tensor3 = [[[f64; DIM]; DIM]; DIM];
pub type Tensor4 = [[[[f64; DIM]; DIM]; DIM]; DIM];

pub const ZERO3: Tensor3 = [[[0.0; DIM]; DIM]; DIM];
pub const ZERO4: Tensor4 = [[[[0.0; DIM]; DIM]; DIM]; DIM];

/// Step of the central differences used for `∇W⁺`.
pub const WEYL_DERIVATIVE_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurvatureError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Form(#[from] FormError),
}

/// `Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`, indexed `[l][i][j]`.
pub fn christoffel_lowered(m: &MetricValue) -> Tensor3 {
    let dg = &m.dg;
    let mut low = ZERO3;
    for l in 0..DIM {
        for i in 0..DIM {
            for j in i..DIM {
                let v = 0.5 * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                low[l][i][j] = v;
                low[l][j][i] = v;
            }
        }
    }
    low
}

/// `Γ^k_ij`, indexed `[k][i][j]`.
pub fn christoffel(m: &MetricValue) -> Tensor3 {
    raise_christoffel(m, &christoffel_lowered(m))
}

fn raise_christoffel(m: &MetricValue, low: &Tensor3) -> Tensor3 {
    let mut gamma = ZERO3;
    for k in 0..DIM {
        for i in 0..DIM {
            for j in i..DIM {
                let v: f64 = (0..DIM).map(|l| m.g_inv[(k, l)] * low[l][i][j]).sum();
                gamma[k][i][j] = v;
                gamma[k][j][i] = v;
            }
        }
    }
    gamma
}

/// Pointwise curvature data in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvaturePoint {
    pub metric: MetricValue,
    pub gamma: Tensor3,
    pub riemann: Tensor4,
    pub ricci: Matrix4<f64>,
    pub scalar: f64,
    pub ric0: Matrix4<f64>,
    pub weyl: Tensor4,
}

pub fn curvature_at(metric: &ChartMetric, point: [f64; DIM]) -> Result<CurvaturePoint, MetricError> {
    Ok(CurvaturePoint::from_metric_value(metric.metric_at(point)?))
}

/// `(h ⊙ k)_ijkl = h_ik k_jl + h_jl k_ik − h_il k_jk − h_jk k_il`.
pub fn kulkarni_nomizu(h: &Matrix4<f64>, k: &Matrix4<f64>) -> Tensor4 {
    let mut t = ZERO4;
    for i in 0..DIM {
        for j in 0..DIM {
            for a in 0..DIM {
                for b in 0..DIM {
                    t[i][j][a][b] = h[(i, a)] * k[(j, b)] + h[(j, b)] * k[(i, a)]
                        - h[(i, b)] * k[(j, a)]
                        - h[(j, a)] * k[(i, b)];
                }
            }
        }
    }
    t
}

impl CurvaturePoint {
    pub fn from_metric_value(m: MetricValue) -> Self {
        let low = christoffel_lowered(&m);
        let gamma = raise_christoffel(&m, &low);
        let d2 = &m.d2g;

        // the 21 independent pair-pair entries, then mirrored
        let pairs = crate::forms::PAIRS;
        let mut r6 = Matrix6::zeros();
        for (r, &(i, j)) in pairs.iter().enumerate() {
            for (c, &(k, l)) in pairs.iter().enumerate().skip(r) {
                let mut v = 0.5
                    * (d2[j][k][i][l] + d2[i][l][j][k] - d2[j][l][i][k] - d2[i][k][j][l]);
                for p in 0..DIM {
                    v += low[p][j][k] * gamma[p][i][l] - low[p][j][l] * gamma[p][i][k];
                }
                r6[(r, c)] = v;
                r6[(c, r)] = v;
            }
        }
        let riemann = tensor_from_pair_matrix(&r6);

        let gi = &m.g_inv;
        let mut ricci = Matrix4::zeros();
        for j in 0..DIM {
            for l in j..DIM {
                let mut v = 0.0;
                for i in 0..DIM {
                    for k in 0..DIM {
                        v += gi[(i, k)] * riemann[i][j][k][l];
                    }
                }
                ricci[(j, l)] = v;
                ricci[(l, j)] = v;
            }
        }
        let scalar = (gi.component_mul(&ricci)).sum();
        let ric0 = ricci - m.g * (scalar / 4.0);

        let kn_ric = kulkarni_nomizu(&ric0, &m.g);
        let kn_g = kulkarni_nomizu(&m.g, &m.g);
        let mut weyl = ZERO4;
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    for l in 0..DIM {
                        weyl[i][j][k][l] = riemann[i][j][k][l]
                            - 0.5 * kn_ric[i][j][k][l]
                            - scalar / 24.0 * kn_g[i][j][k][l];
                    }
                }
            }
        }

        CurvaturePoint {
            metric: m,
            gamma,
            riemann,
            ricci,
            scalar,
            ric0,
            weyl,
        }
    }

    pub fn point(&self) -> [f64; DIM] {
        self.metric.point
    }

    /// `|ric₀|² = g^ik g^jl ric0_ij ric0_kl`, the sum of squares of the
    /// orthonormal-frame components.
    pub fn ric0_norm_sq(&self) -> f64 {
        let gi = &self.metric.g_inv;
        let up = gi * self.ric0 * gi;
        up.component_mul(&self.ric0).sum()
    }

    pub fn max_abs_riemann(&self) -> f64 {
        max_abs4(&self.riemann)
    }

    /// Self-dual and anti-self-dual parts of the Weyl tensor in coordinates.
    pub fn weyl_split(&self, frame: &Frame) -> (Tensor4, Tensor4) {
        let m = frame.pair_transform();
        let n = frame.pair_cotransform();
        let wf = m.transpose() * pair_matrix(&self.weyl) * m;
        let s = hodge_star_matrix();
        let id = Matrix6::identity();
        let pp = (id + s) * 0.5;
        let pm = (id - s) * 0.5;
        let plus = n.transpose() * (pp * wf * pp) * n;
        let minus = n.transpose() * (pm * wf * pm) * n;
        (
            tensor_from_pair_matrix(&((plus + plus.transpose()) * 0.5)),
            tensor_from_pair_matrix(&((minus + minus.transpose()) * 0.5)),
        )
    }
}

pub fn max_abs4(t: &Tensor4) -> f64 {
    t.iter()
        .flatten()
        .flatten()
        .flatten()
        .fold(0.0f64, |a, &b| a.max(b.abs()))
}

/// Self-dual Weyl tensor with its first covariant derivative data.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylPlusTensor {
    pub point: [f64; DIM],
    pub orientation: Orientation,
    /// `W⁺_ijkl` in coordinates.
    pub wplus: Tensor4,
    /// `W⁻_ijkl` in coordinates.
    pub wminus: Tensor4,
    /// `|∇W⁺|²` in the operator norm on Λ² (a quarter of the tensor norm).
    pub grad_norm_sq: f64,
    /// `(δW⁺)_jkl = −g^{mi} ∇_m W⁺_ijkl`.
    pub divergence: Tensor3,
    /// Frame-component Euclidean norm of `δW⁺`.
    pub divergence_norm: f64,
}

fn wplus_coordinates(
    metric: &ChartMetric,
    point: [f64; DIM],
    orientation: Orientation,
) -> Result<(CurvaturePoint, Frame, Tensor4, Tensor4), CurvatureError> {
    let c = curvature_at(metric, point)?;
    let f = orthonormal_frame(&c.metric, orientation)?;
    let (p, m) = c.weyl_split(&f);
    Ok((c, f, p, m))
}

/// Computes `W⁺`, `|∇W⁺|²` and `δW⁺` at `point`. Derivatives are central
/// differences of the coordinate tensor with step [`WEYL_DERIVATIVE_STEP`]
/// plus the Christoffel terms.
pub fn weyl_plus_at(
    metric: &ChartMetric,
    point: [f64; DIM],
    orientation: Orientation,
) -> Result<WeylPlusTensor, CurvatureError> {
    let (c, frame, wplus, wminus) = wplus_coordinates(metric, point, orientation)?;
    let h = WEYL_DERIVATIVE_STEP;
    let mut partial = [ZERO4; DIM];
    for (m, pm) in partial.iter_mut().enumerate() {
        let mut fwd = point;
        let mut bwd = point;
        fwd[m] += h;
        bwd[m] -= h;
        let (_, _, wf, _) = wplus_coordinates(metric, fwd, orientation)?;
        let (_, _, wb, _) = wplus_coordinates(metric, bwd, orientation)?;
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    for l in 0..DIM {
                        pm[i][j][k][l] = (wf[i][j][k][l] - wb[i][j][k][l]) / (2.0 * h);
                    }
                }
            }
        }
    }

    // ∇_m W⁺_ijkl, flattened [m][i][j][k][l]
    let g = &c.gamma;
    let w = &wplus;
    let mut nabla = vec![0.0; DIM * DIM * DIM * DIM * DIM];
    let idx = |m: usize, i: usize, j: usize, k: usize, l: usize| (((m * 4 + i) * 4 + j) * 4 + k) * 4 + l;
    for m in 0..DIM {
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    for l in 0..DIM {
                        let mut v = partial[m][i][j][k][l];
                        for p in 0..DIM {
                            v -= g[p][m][i] * w[p][j][k][l]
                                + g[p][m][j] * w[i][p][k][l]
                                + g[p][m][k] * w[i][j][p][l]
                                + g[p][m][l] * w[i][j][k][p];
                        }
                        nabla[idx(m, i, j, k, l)] = v;
                    }
                }
            }
        }
    }

    let gi = &c.metric.g_inv;
    let mut divergence = ZERO3;
    for j in 0..DIM {
        for k in 0..DIM {
            for l in 0..DIM {
                let mut v = 0.0;
                for m in 0..DIM {
                    for i in 0..DIM {
                        v += gi[(m, i)] * nabla[idx(m, i, j, k, l)];
                    }
                }
                divergence[j][k][l] = -v;
            }
        }
    }

    let nabla_frame = to_frame_components(&nabla, 5, &frame.vectors);
    let grad_norm_sq = 0.25 * nabla_frame.iter().map(|x| x * x).sum::<f64>();
    let flat_div: Vec<f64> = divergence.iter().flatten().flatten().copied().collect();
    let div_frame = to_frame_components(&flat_div, 3, &frame.vectors);
    let divergence_norm = div_frame.iter().map(|x| x * x).sum::<f64>().sqrt();

    Ok(WeylPlusTensor {
        point,
        orientation,
        wplus,
        wminus,
        grad_norm_sq,
        divergence,
        divergence_norm,
    })
}

/// Contracts every slot of a covariant `rank`-tensor (row-major, dimension
/// 4) with the frame vectors `e_a^i`.
pub fn to_frame_components(t: &[f64], rank: usize, e: &Matrix4<f64>) -> Vec<f64> {
    let mut cur = t.to_vec();
    let n = cur.len();
    for slot in 0..rank {
        let stride = 4usize.pow((rank - 1 - slot) as u32);
        let mut next = vec![0.0; n];
        for (pos, out) in next.iter_mut().enumerate() {
            let a = (pos / stride) % 4;
            let base = pos - a * stride;
            let mut v = 0.0;
            for i in 0..4 {
                v += e[(i, a)] * cur[base + i * stride];
            }
            *out = v;
        }
        cur = next;
    }
    cur
}
