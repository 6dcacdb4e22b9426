//! Built-in model geometries and their reference invariants.
//!
//! Chart conventions are documented in `MODELS.md` at the repository root.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;

use crate::expr::parse_expr;
use crate::metric::{
    AxisDomain, ChartMetric, ComplexStructure, HermitianDecl, MetricError, MetricSource, Region,
    SingularLocus, DIM,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Model {
    FlatT4,
    RoundS4,
    FubiniStudyCp2,
    ProductS2xS2,
    ComplexHyperbolicCh2,
}

impl Model {
    pub const ALL: [Model; 5] = [
        Model::FlatT4,
        Model::RoundS4,
        Model::FubiniStudyCp2,
        Model::ProductS2xS2,
        Model::ComplexHyperbolicCh2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Model::FlatT4 => "flat_t4",
            Model::RoundS4 => "round_s4",
            Model::FubiniStudyCp2 => "fubini_study_cp2",
            Model::ProductS2xS2 => "product_s2xs2",
            Model::ComplexHyperbolicCh2 => "complex_hyperbolic_ch2",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Model::FlatT4 => &[],
            Model::RoundS4 => &["r"],
            Model::FubiniStudyCp2 | Model::ComplexHyperbolicCh2 => &["scale"],
            Model::ProductS2xS2 => &["r1", "r2"],
        }
    }

    pub fn default_params(self) -> Vec<f64> {
        vec![1.0; self.param_names().len()]
    }

    pub fn coords(self) -> [&'static str; DIM] {
        match self {
            Model::FlatT4 => ["x1", "x2", "x3", "x4"],
            Model::RoundS4 => ["chi", "theta", "phi", "psi"],
            Model::FubiniStudyCp2 | Model::ComplexHyperbolicCh2 => ["u1", "v1", "u2", "v2"],
            Model::ProductS2xS2 => ["th1", "ph1", "th2", "ph2"],
        }
    }

    pub fn is_compact(self) -> bool {
        self != Model::ComplexHyperbolicCh2
    }

    /// Whether the model's declared complex structure is Kähler.
    pub fn is_kahler(self) -> bool {
        self != Model::RoundS4
    }

    /// Validates a parameter list, substituting defaults when it is empty.
    pub fn resolve_params(self, params: &[f64]) -> Result<Vec<f64>, MetricError> {
        let names = self.param_names();
        if params.is_empty() {
            return Ok(self.default_params());
        }
        if params.len() != names.len() {
            return Err(MetricError::InvalidParameter(format!(
                "{} takes {} parameter(s) ({}), got {}",
                self.name(),
                names.len(),
                names.join(", "),
                params.len()
            )));
        }
        for (n, &v) in names.iter().zip(params) {
            if !(v.is_finite() && v > 0.0) {
                return Err(MetricError::InvalidParameter(format!(
                    "{n} must be a positive number, got {v}"
                )));
            }
        }
        Ok(params.to_vec())
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Known closed-form data for a catalog model, used as test oracles.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceInvariants {
    /// Constant scalar curvature.
    pub scalar: f64,
    pub volume: Option<f64>,
    pub chi: Option<i32>,
    pub tau: Option<i32>,
    pub einstein: bool,
    pub kahler: bool,
    /// Constant holomorphic sectional curvature, when there is one.
    pub holomorphic_sectional: Option<f64>,
}

pub fn reference_invariants(model: Model, params: &[f64]) -> Result<ReferenceInvariants, MetricError> {
    let p = model.resolve_params(params)?;
    Ok(match model {
        Model::FlatT4 => ReferenceInvariants {
            scalar: 0.0,
            volume: Some((2.0 * PI).powi(4)),
            chi: Some(0),
            tau: Some(0),
            einstein: true,
            kahler: true,
            holomorphic_sectional: Some(0.0),
        },
        Model::RoundS4 => {
            let r = p[0];
            ReferenceInvariants {
                scalar: 12.0 / (r * r),
                volume: Some(8.0 * PI * PI * r.powi(4) / 3.0),
                chi: Some(2),
                tau: Some(0),
                einstein: true,
                kahler: false,
                holomorphic_sectional: None,
            }
        }
        Model::FubiniStudyCp2 => {
            let c = p[0];
            ReferenceInvariants {
                scalar: 24.0 / c,
                volume: Some(PI * PI * c * c / 2.0),
                chi: Some(3),
                tau: Some(1),
                einstein: true,
                kahler: true,
                holomorphic_sectional: Some(4.0 / c),
            }
        }
        Model::ProductS2xS2 => {
            let (r1, r2) = (p[0], p[1]);
            ReferenceInvariants {
                scalar: 2.0 / (r1 * r1) + 2.0 / (r2 * r2),
                volume: Some(16.0 * PI * PI * r1 * r1 * r2 * r2),
                chi: Some(4),
                tau: Some(0),
                einstein: r1 == r2,
                kahler: true,
                holomorphic_sectional: None,
            }
        }
        Model::ComplexHyperbolicCh2 => {
            let c = p[0];
            ReferenceInvariants {
                scalar: -24.0 / c,
                volume: None,
                chi: None,
                tau: None,
                einstein: true,
                kahler: true,
                holomorphic_sectional: Some(-4.0 / c),
            }
        }
    })
}

/// `J ∂u_a = ∂v_a` in the (u1, v1, u2, v2) ordering; column j holds `J ∂_j`.
pub const STANDARD_J: [[f64; DIM]; DIM] = [
    [0.0, -1.0, 0.0, 0.0],
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, -1.0],
    [0.0, 0.0, 1.0, 0.0],
];

/// Builds a catalog model by name. An empty parameter list selects the
/// defaults (all radii and scales 1).
pub fn builtin_model(name: &str, params: &[f64]) -> Result<ChartMetric, MetricError> {
    let model = Model::from_name(name).ok_or_else(|| MetricError::UnknownModel(name.to_string()))?;
    model_metric(model, params)
}

pub fn model_metric(model: Model, params: &[f64]) -> Result<ChartMetric, MetricError> {
    let p = model.resolve_params(params)?;
    let coords = model.coords().map(String::from);
    let lit = |v: f64| format!("{v:?}");

    // upper-triangular sources, row by row
    let mut src: [String; 10] = Default::default();
    for s in src.iter_mut() {
        *s = "0".into();
    }
    let set = |src: &mut [String; 10], i: usize, j: usize, s: String| {
        src[crate::metric::upper_index(i, j)] = s;
    };

    let interval = |lo: f64, hi: f64| AxisDomain::Interval { lo, hi };
    let periodic = AxisDomain::Periodic { period: 2.0 * PI };
    let mut loci = Vec::new();
    let mut region = None;

    let (domain, hermitian) = match model {
        Model::FlatT4 => {
            for i in 0..DIM {
                set(&mut src, i, i, "1".into());
            }
            (
                [periodic; DIM],
                HermitianDecl {
                    structure: ComplexStructure::Coordinate(STANDARD_J),
                    integrable_kahler: true,
                },
            )
        }
        Model::RoundS4 => {
            let r2 = lit(p[0] * p[0]);
            set(&mut src, 0, 0, r2.clone());
            set(&mut src, 1, 1, format!("{r2}*sin(chi)^2"));
            set(&mut src, 2, 2, format!("{r2}*sin(chi)^2*sin(theta)^2"));
            set(
                &mut src,
                3,
                3,
                format!("{r2}*sin(chi)^2*sin(theta)^2*sin(phi)^2"),
            );
            for axis in 0..3 {
                loci.push(SingularLocus { axis, value: 0.0 });
                loci.push(SingularLocus { axis, value: PI });
            }
            (
                [interval(0.0, PI), interval(0.0, PI), interval(0.0, PI), periodic],
                HermitianDecl {
                    structure: ComplexStructure::FrameAdapted,
                    integrable_kahler: false,
                },
            )
        }
        Model::ProductS2xS2 => {
            let (a, b) = (lit(p[0] * p[0]), lit(p[1] * p[1]));
            set(&mut src, 0, 0, a.clone());
            set(&mut src, 1, 1, format!("{a}*sin(th1)^2"));
            set(&mut src, 2, 2, b.clone());
            set(&mut src, 3, 3, format!("{b}*sin(th2)^2"));
            for axis in [0, 2] {
                loci.push(SingularLocus { axis, value: 0.0 });
                loci.push(SingularLocus { axis, value: PI });
            }
            (
                [interval(0.0, PI), periodic, interval(0.0, PI), periodic],
                HermitianDecl {
                    structure: ComplexStructure::FrameAdapted,
                    integrable_kahler: true,
                },
            )
        }
        Model::FubiniStudyCp2 | Model::ComplexHyperbolicCh2 => {
            let c = lit(p[0]);
            let q = "(u1^2 + v1^2 + u2^2 + v2^2)";
            let fs = model == Model::FubiniStudyCp2;
            let rho = if fs { format!("(1 + {q})") } else { format!("(1 - {q})") };
            let (u, v) = (["u1", "u2"], ["v1", "v2"]);
            // index of u_a / v_a in the coordinate ordering
            let (iu, iv) = ([0, 2], [1, 3]);
            for a in 0..2 {
                for b in 0..2 {
                    let delta = if a == b { rho.clone() } else { "0".into() };
                    let sym = format!("({}*{} + {}*{})", u[a], u[b], v[a], v[b]);
                    let diag = if fs {
                        format!("{c}*({delta} - {sym})/{rho}^2")
                    } else {
                        format!("{c}*({delta} + {sym})/{rho}^2")
                    };
                    if a <= b {
                        set(&mut src, iu[a], iu[b], diag.clone());
                        set(&mut src, iv[a], iv[b], diag);
                    }
                    let mixed = if fs {
                        format!("{c}*({}*{} - {}*{})/{rho}^2", v[a], u[b], u[a], v[b])
                    } else {
                        format!("{c}*({}*{} - {}*{})/{rho}^2", u[a], v[b], v[a], u[b])
                    };
                    if a == b {
                        // the antisymmetric combination vanishes identically
                        set(&mut src, iu[a], iv[b], "0".into());
                    } else if iu[a] < iv[b] {
                        set(&mut src, iu[a], iv[b], mixed);
                    } else {
                        // g(∂u_a, ∂v_b) stored at (iv[b], iu[a])
                        set(&mut src, iv[b], iu[a], mixed);
                    }
                }
            }
            let domain = if fs {
                [AxisDomain::Line; DIM]
            } else {
                region = Some(Region::Ball { radius: 1.0 });
                [interval(-1.0, 1.0); DIM]
            };
            (
                domain,
                HermitianDecl {
                    structure: ComplexStructure::Coordinate(STANDARD_J),
                    integrable_kahler: true,
                },
            )
        }
    };

    let mut components = Vec::with_capacity(10);
    for s in &src {
        components.push(parse_expr(s, &coords)?);
    }
    let components: [crate::expr::Expr; 10] = components
        .try_into()
        .expect("ten upper-triangular components");

    let mut metric = ChartMetric::new(model.name(), coords, components, domain);
    metric.singular_loci = loci;
    metric.region = region;
    metric.source = MetricSource::Builtin { model, params: p };
    metric.hermitian = Some(hermitian);
    Ok(metric)
}

/// Per-axis box used for default grids and random sampling.
pub fn sampling_box(metric: &ChartMetric, margin: f64) -> [(f64, f64); DIM] {
    let mut b = [(0.0, 0.0); DIM];
    for (k, d) in metric.domain.iter().enumerate() {
        b[k] = match *d {
            AxisDomain::Interval { lo, hi } => {
                let w = hi - lo;
                (lo + margin * w, hi - margin * w)
            }
            AxisDomain::Periodic { period } => (0.0, period),
            AxisDomain::Line => (-1.5, 1.5),
        };
    }
    if let Some(Region::Ball { radius }) = metric.region {
        // keep box corners inside 0.9 of the ball
        let h = 0.45 * radius;
        for bk in b.iter_mut() {
            bk.0 = bk.0.max(-h);
            bk.1 = bk.1.min(h);
        }
    }
    b
}

/// Box for cell-centred analysis grids.
pub fn grid_box(metric: &ChartMetric) -> [(f64, f64); DIM] {
    let mut b = sampling_box(metric, 0.0);
    for (k, d) in metric.domain.iter().enumerate() {
        if matches!(d, AxisDomain::Line) {
            b[k] = (-1.0, 1.0);
        }
    }
    b
}

/// Cell-centred tensor grid with `counts[k]` points on axis `k`, ordered
/// lexicographically (last axis fastest).
pub fn cell_centred_grid(bounds: &[(f64, f64); DIM], counts: [usize; DIM]) -> Vec<[f64; DIM]> {
    let axis = |k: usize| -> Vec<f64> {
        let (lo, hi) = bounds[k];
        let n = counts[k];
        (0..n)
            .map(|i| lo + (i as f64 + 0.5) * (hi - lo) / n as f64)
            .collect()
    };
    let axes: Vec<Vec<f64>> = (0..DIM).map(axis).collect();
    let mut out = Vec::with_capacity(counts.iter().product());
    for &a in &axes[0] {
        for &b in &axes[1] {
            for &c in &axes[2] {
                for &d in &axes[3] {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

/// Random interior point kept away from chart edges: interval axes lose
/// 10% of their width at each end, unbounded axes use `[-1.5, 1.5]`, and a
/// ball region is shrunk to 85% of its radius.
pub fn sample_point<R: Rng + ?Sized>(metric: &ChartMetric, rng: &mut R) -> [f64; DIM] {
    let mut b = [(0.0, 0.0); DIM];
    for (k, d) in metric.domain.iter().enumerate() {
        b[k] = match *d {
            AxisDomain::Interval { lo, hi } => {
                let w = hi - lo;
                (lo + 0.1 * w, hi - 0.1 * w)
            }
            AxisDomain::Periodic { period } => (0.0, period),
            AxisDomain::Line => (-1.5, 1.5),
        };
    }
    loop {
        let p: [f64; DIM] = std::array::from_fn(|k| rng.gen_range(b[k].0..b[k].1));
        match metric.region {
            Some(Region::Ball { radius }) => {
                let r2: f64 = p.iter().map(|x| x * x).sum();
                if r2 < (0.85 * radius).powi(2) {
                    return p;
                }
            }
            None => return p,
        }
    }
}
