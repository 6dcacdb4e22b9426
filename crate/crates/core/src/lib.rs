//! Numerical curvature laboratory for oriented Riemannian four-manifolds.

pub mod curvature;
pub mod eigen;
pub mod expr;
pub mod forms;
pub mod hyperdual;
pub mod identities;
pub mod invariants;
pub mod kahler;
pub mod metric;
pub mod models;
pub mod quadrature;
pub mod spectral;
pub mod sphere;

use thiserror::Error;

/// Any error raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Metric(#[from] metric::MetricError),
    #[error(transparent)]
    Parse(#[from] expr::ParseError),
    #[error(transparent)]
    Curvature(#[from] curvature::CurvatureError),
    #[error(transparent)]
    Form(#[from] forms::FormError),
    #[error(transparent)]
    Eigen(#[from] eigen::EigenError),
    #[error(transparent)]
    Kahler(#[from] kahler::KahlerError),
    #[error(transparent)]
    Quadrature(#[from] quadrature::QuadratureError),
    #[error(transparent)]
    Invariant(#[from] invariants::InvariantError),
    #[error(transparent)]
    Identity(#[from] identities::IdentityError),
}
