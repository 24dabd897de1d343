//! Support-function integration of the anisotropic α-Gauss curvature flow
//! ∂_t x = −f(ν) K^α ν, i.e. ∂_t u = −f K^α at fixed normal.

mod engine;
mod identities;

use std::fmt::Write as _;

use serde::Serialize;

use crate::geometry::{AnisotropyField, GeometryError, GridSpec, SupportFunction};

pub use engine::{barrier_time, evolve, flow_speed, shrinking_ball_radius, step};
pub use identities::{
    identity_convergence_study, verify_evolution_identities, IdentityLevel, IdentityReport,
    IdentityStudy,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid flow parameters: {0}")]
    InvalidParams(String),
    #[error("parameters are for n = {params} but the grid has dimension {grid}")]
    DimensionMismatch { params: usize, grid: usize },
    #[error("step of size {dt:e} at t = {t} lost convexity")]
    StepRejected { t: f64, dt: f64 },
    #[error("time step underflow at t = {t} (dt = {dt:e})")]
    Stalled { t: f64, dt: f64 },
    #[error("need at least 3 snapshots, got {got}")]
    InsufficientSnapshots { got: usize },
}

/// Flow exponent, dimension and anisotropy. `p = 1 − 1/α` is stored alongside α.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowParams {
    n: usize,
    alpha: f64,
    p: f64,
    field: AnisotropyField,
    curvature_regime: bool,
}

impl FlowParams {
    pub fn new(n: usize, alpha: f64, field: AnisotropyField) -> Result<Self, FlowError> {
        if !(n == 1 || n == 2) {
            return Err(FlowError::InvalidParams(format!("n must be 1 or 2, got {n}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(FlowError::InvalidParams(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self {
            n,
            alpha,
            p: 1.0 - 1.0 / alpha,
            field,
            curvature_regime: false,
        })
    }

    /// Tag the run as lying in the principal-curvature-bound regime
    /// (n ≥ 2 and α ≤ 1/(n−1)); rejects parameters outside it.
    pub fn in_curvature_regime(mut self) -> Result<Self, FlowError> {
        if self.n < 2 || self.alpha > 1.0 / (self.n as f64 - 1.0) {
            return Err(FlowError::InvalidParams(format!(
                "n = {}, alpha = {} is outside n >= 2, alpha <= 1/(n-1)",
                self.n, self.alpha
            )));
        }
        self.curvature_regime = true;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn field(&self) -> &AnisotropyField {
        &self.field
    }

    pub fn is_curvature_regime(&self) -> bool {
        self.curvature_regime
    }

    /// Same dimension and exponent with another field.
    pub fn with_field(&self, field: AnisotropyField) -> Self {
        Self {
            field,
            ..self.clone()
        }
    }

    /// nα + 1, the scaling exponent of the flow.
    pub fn scaling_exponent(&self) -> f64 {
        self.n as f64 * self.alpha + 1.0
    }

    pub(crate) fn check_grid(&self, grid: &GridSpec) -> Result<(), FlowError> {
        if grid.dimension() != self.n {
            return Err(FlowError::DimensionMismatch {
                params: self.n,
                grid: grid.dimension(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepControl {
    /// CFL factor: dt · max F ≤ safety · inradius.
    pub safety: f64,
    pub max_dt: f64,
    pub min_radius_stop: f64,
    pub t_end: f64,
    /// Number of uniformly spaced snapshot intervals in [0, t_end].
    pub snapshot_count: usize,
}

impl StepControl {
    pub fn new(t_end: f64) -> Self {
        Self {
            safety: 0.05,
            max_dt: f64::INFINITY,
            min_radius_stop: 1e-3,
            t_end,
            snapshot_count: 200,
        }
    }

    pub fn with_snapshots(mut self, count: usize) -> Self {
        self.snapshot_count = count;
        self
    }

    pub fn with_max_dt(mut self, max_dt: f64) -> Self {
        self.max_dt = max_dt;
        self
    }

    pub fn with_min_radius(mut self, r: f64) -> Self {
        self.min_radius_stop = r;
        self
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |m: String| Err(FlowError::InvalidParams(m));
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return bad(format!("safety must lie in (0,1), got {}", self.safety));
        }
        if !(self.min_radius_stop > 0.0) {
            return bad("min_radius_stop must be positive".into());
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.max_dt > 0.0) {
            return bad("max_dt must be positive".into());
        }
        if self.snapshot_count == 0 {
            return bad("snapshot_count must be positive".into());
        }
        Ok(())
    }
}

/// Scalar diagnostics recorded with each snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub t: f64,
    pub lambda_max: f64,
    pub k_max: f64,
    pub inradius: f64,
    pub diameter: f64,
    pub f_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: SupportFunction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrajectory {
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<Diagnostics>,
    /// Time reached when integration stopped.
    pub t_final: f64,
    /// Set when integration stopped because the inradius fell below
    /// `min_radius_stop`: the extrapolated extinction time.
    pub extinction_time: Option<f64>,
    pub steps: usize,
    pub rejections: usize,
}

impl FlowTrajectory {
    /// Trajectory from given snapshots (closed-form solutions, external data).
    pub fn from_snapshots(snapshots: Vec<Snapshot>, params: &FlowParams) -> Result<Self, FlowError> {
        let diagnostics = snapshots
            .iter()
            .map(|s| engine::diagnostics(&s.u, params, s.t))
            .collect::<Result<Vec<_>, _>>()?;
        let t_final = snapshots.last().map_or(0.0, |s| s.t);
        Ok(Self {
            snapshots,
            diagnostics,
            t_final,
            extinction_time: None,
            steps: 0,
            rejections: 0,
        })
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn diagnostics_csv(&self) -> String {
        let mut out = String::from("t,lambda_max,K_max,inradius,diameter,F_max\n");
        for d in &self.diagnostics {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                d.t, d.lambda_max, d.k_max, d.inradius, d.diameter, d.f_max
            );
        }
        out
    }
}
