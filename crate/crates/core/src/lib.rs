//! Numerical laboratory for the anisotropic α-Gauss curvature flow and the
//! Lp Minkowski problem.

pub mod geometry;
pub mod flow;
pub mod estimates;
pub mod minkowski;
pub mod regularity;
