//! Support functions on S¹ and on axisymmetric S² grids, curvature
//! extraction and (Lp) surface area measures.

mod curvature;
mod field;
mod grid;
mod measure;
mod support;

pub use curvature::{
    curvature, curvature_axisym, curvature_circle, radii_at, CurvatureData, PrincipalRadii,
    NON_CONVEX_RELATIVE_TOL, POLE_RELATIVE_TOL,
};
pub use field::{AnisotropyField, TabulatedField};
pub use grid::{GridKind, GridSpec};
pub use measure::{
    body_points, check_generalized_solution, check_generalized_solution_with, diameter,
    inradius, inradius_bound_check, inradius_with_center, lp_measure, volume, GeneralizedResidual,
    InradiusBound, LpMeasure, Partition,
};
pub use support::SupportFunction;

pub(crate) use curvature::check_convex;
pub(crate) use support::{stencil_d1, stencil_d2};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite support value at node {node}")]
    NonFinite { node: usize },
    #[error("body is not strictly convex: principal radius {radius:e} at node {node}")]
    NonConvex { node: usize, radius: f64 },
    #[error("pole {pole} is singular: pole radius {limit} vs extrapolated {extrapolated}")]
    PoleSingular {
        pole: usize,
        limit: f64,
        extrapolated: f64,
    },
    #[error("operation needs a {expected:?} grid")]
    WrongGrid { expected: GridKind },
    #[error("origin lies on the boundary (min u = {min_u:e}) but p = {p} > 1")]
    OriginOnBoundary { min_u: f64, p: f64 },
    #[error("origin lies outside the body (min u = {min_u:e})")]
    OriginOutside { min_u: f64 },
    #[error("partition does not match the grid: {0}")]
    BadPartition(String),
    #[error("invalid anisotropy field: {0}")]
    InvalidField(String),
    #[error("csv: {0}")]
    Csv(String),
}
