//! The degenerate radial Monge–Ampère ODE near the edge of a flat side:
//! model solution, weighted norms, the error functional and its Picard iteration.

mod functional;
mod lemmas;
mod mesh;
mod picard;

use serde::Serialize;

pub use functional::{brackets, error_functional, weighted_norm, Brackets, ErrorParts, NormReport, RadialProfile};
pub use lemmas::{lemma_bound_fits, lemma_bound_fits_with, C2Fits, LemmaFits};
pub use mesh::{integral_operator, RadialMesh, DEFAULT_NODES};
pub use picard::{
    ode_residual, picard_step, solve_profile, solve_profile_with, Attempt, ConvergenceLog,
    IterationRecord,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OdeError {
    #[error("invalid ODE parameters: {0}")]
    InvalidParams(String),
    #[error("invalid radial mesh: {0}")]
    InvalidMesh(String),
    #[error("profiles live on different meshes")]
    MeshMismatch,
    #[error("modulus Y = {y:e} or Z = {z:e} is not positive at r = {r:e}")]
    ModulusNonpositive { r: f64, y: f64, z: f64 },
    #[error("no contraction down to r0 = {r0:e}")]
    NoContraction { r0: f64 },
}

/// n, p with m = n + p − 1 > 0 and δ = min{1, 2/m}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeParams {
    pub n: usize,
    pub p: f64,
    pub m: f64,
    pub delta: f64,
}

impl OdeParams {
    pub fn new(n: usize, p: f64) -> Result<Self, OdeError> {
        if n == 0 {
            return Err(OdeError::InvalidParams("n must be at least 1".into()));
        }
        if !p.is_finite() {
            return Err(OdeError::InvalidParams(format!("p = {p} is not finite")));
        }
        let m = n as f64 + p - 1.0;
        if !(m > 0.0) {
            return Err(OdeError::InvalidParams(format!("m = n + p - 1 = {m} must be positive")));
        }
        Ok(Self {
            n,
            p,
            m,
            delta: (2.0 / m).min(1.0),
        })
    }

    /// Parameters with n fixed and p chosen so that n + p − 1 = m.
    pub fn from_m(n: usize, m: f64) -> Result<Self, OdeError> {
        Self::new(n, m + 1.0 - n as f64)
    }
}

/// h = m/(1+m)·m^{1/m} r^{(1+m)/m} with h_r = (mr)^{1/m}, h_rr = h_r/(mr).
pub fn model_h(r: f64, m: f64) -> (f64, f64, f64) {
    let h_r = (m * r).powf(1.0 / m);
    let h = m / (1.0 + m) * r * h_r;
    (h, h_r, h_r / (m * r))
}

/// |a^q − b^q| ≤ |q||a − b|(a^{q−1} + b^{q−1}) with `rel_slack` relative slack.
pub fn jensen_check(a: f64, b: f64, q: f64, rel_slack: f64) -> bool {
    let lhs = (a.powf(q) - b.powf(q)).abs();
    let rhs = q.abs() * (a - b).abs() * (a.powf(q - 1.0) + b.powf(q - 1.0));
    lhs <= rhs * (1.0 + rel_slack)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn params() {
        let p = OdeParams::new(2, 0.5).unwrap();
        assert_eq!((p.m, p.delta), (1.5, 1.0));
        assert_eq!(OdeParams::new(2, 2.0).unwrap().delta, 2.0 / 3.0);
        assert!(OdeParams::new(1, 0.0).is_err());
        assert!(OdeParams::new(0, 2.0).is_err());
        assert_eq!(OdeParams::from_m(2, 0.5).unwrap().p, -0.5);
    }

    #[test]
    fn model_h_examples() {
        let (h, h_r, h_rr) = model_h(0.2, 1.0);
        assert!((h - 0.02).abs() < 1e-15 && (h_r - 0.2).abs() < 1e-15 && (h_rr - 1.0).abs() < 1e-14);
        let (_, h_r, h_rr) = model_h(1.0, 2.0);
        assert!((h_r - 2f64.sqrt()).abs() < 1e-15);
        assert!((h_rr - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn model_h_defining_identity() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..1000 {
            let m = rng.gen_range(0.1..10.0);
            let r = 10f64.powf(rng.gen_range(-6.0..0.0));
            let (h, h_r, h_rr) = model_h(r, m);
            assert!((h_rr * h_r.powf(m - 1.0) - 1.0).abs() < 1e-13, "m={m} r={r}");
            assert!((h / (r * h_r) - m / (1.0 + m)).abs() < 1e-15);
        }
    }

    #[test]
    fn jensen_examples() {
        assert!(jensen_check(2.0, 1.0, 3.0, 0.0));
        assert!(jensen_check(1.7, 1.7, -2.3, 0.0));
        assert!(jensen_check(0.3, 5.0, 1.0, 1e-12));
        assert!(jensen_check(0.3, 5.0, 0.0, 0.0));
    }
}
