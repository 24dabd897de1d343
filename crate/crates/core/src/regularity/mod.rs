//! Sharp low-regularity solutions: the glued flat-side body, the closed-form
//! example with a power-law support function, and Hölder-exponent estimation.

mod body;
mod chou_wang;

use serde::Serialize;

use crate::estimates::fit_exponent;
use crate::minkowski::OdeError;

pub use body::{build_glued_body, flat_part_measure_check, CapMass, EllipseCap, FlatPartReport, MeridianPoint, RadialGraphBody};
pub use chou_wang::{chou_wang_example, ChouWang};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RegularityError {
    #[error("p = {p} is outside (-n+1, 1) U (1, n+1) for n = {n}")]
    BadRange { n: usize, p: f64 },
    #[error("convexity lost: {0}")]
    ConvexityLost(String),
    #[error("samples span {decades:.2} decades of r, need at least 2")]
    InsufficientDecades { decades: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// Gap to the nearest integer below which k + γ is treated as an integer (γ = 1).
pub const CLASS_SNAP: f64 = 0.03;

/// Log-log slope s of v̄_r, read as regularity C^{k,γ} with k + γ = 1 + s, γ ∈ (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderEstimate {
    pub slope: f64,
    pub k: u32,
    pub gamma: f64,
    pub window: [f64; 2],
    /// rms of the log-log residuals.
    pub residual: f64,
    pub samples: usize,
}

impl HolderEstimate {
    pub fn accepted(&self, residual_threshold: f64) -> bool {
        self.residual <= residual_threshold && self.slope > 0.0 && self.slope < 2.0
    }

    pub fn class_label(&self) -> String {
        let g = if (self.gamma - 1.0).abs() < 1e-12 {
            "1".to_string()
        } else {
            format!("{:.3}", self.gamma)
        };
        format!("C^{{{},{}}}", self.k, g)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate serializes")
    }
}

/// (k, γ) with k + γ = total, γ ∈ (0, 1]; totals within [`CLASS_SNAP`] of an
/// integer are snapped to it.
pub fn holder_class(total: f64) -> (u32, f64) {
    let near = total.round();
    if (total - near).abs() < CLASS_SNAP && near >= 1.0 {
        return (near as u32 - 1, 1.0);
    }
    let k = total.ceil() - 1.0;
    (k.max(0.0) as u32, total - k.max(0.0))
}

/// Fits log v̄_r against log r.
pub fn holder_exponent(r: &[f64], v_r: &[f64]) -> Result<HolderEstimate, RegularityError> {
    if r.len() != v_r.len() {
        return Err(RegularityError::InvalidInput(format!(
            "{} radii but {} derivative values",
            r.len(),
            v_r.len()
        )));
    }
    if r.iter().chain(v_r).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(RegularityError::InvalidInput("radii and v_r must be positive".into()));
    }
    let (lo, hi) = r
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let decades = if r.is_empty() { 0.0 } else { (hi / lo).log10() };
    if !(decades >= 2.0) {
        return Err(RegularityError::InsufficientDecades { decades });
    }
    let fit = fit_exponent(r, v_r).map_err(|e| RegularityError::InvalidInput(e.to_string()))?;
    let (k, gamma) = holder_class(1.0 + fit.slope);
    Ok(HolderEstimate {
        slope: fit.slope,
        k,
        gamma,
        window: [lo, hi],
        residual: fit.residual,
        samples: fit.samples,
    })
}
