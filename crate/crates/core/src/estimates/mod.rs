//! Empirical checks of the curvature-rate bounds and of soliton self-similarity.

mod soliton;

use serde::{Serialize, Serializer};

use crate::flow::{barrier_time, evolve, FlowError, FlowParams, FlowTrajectory, StepControl};
use crate::geometry::{GeometryError, SupportFunction};

pub use soliton::{make_soliton_field, soliton_selfsimilarity_check, SolitonReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EstimateError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("degenerate fit window: {0}")]
    DegenerateWindow(String),
    #[error("n = {n}, alpha = {alpha} is outside the regime n >= 2, alpha <= 1/(n-1)")]
    RegimeViolation { n: usize, alpha: f64 },
    #[error("origin is not interior (min u = {min_u:e})")]
    OriginNotInterior { min_u: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Least-squares line through (log t, log q).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    pub t_lo: f64,
    pub t_hi: f64,
    pub slope: f64,
    pub intercept: f64,
    /// rms of the log-log residuals.
    pub residual: f64,
    pub samples: usize,
}

pub fn fit_exponent(t: &[f64], q: &[f64]) -> Result<ExponentFit, EstimateError> {
    const MIN_SAMPLES: usize = 8;
    if t.len() != q.len() {
        return Err(EstimateError::DegenerateWindow(format!(
            "{} times but {} values",
            t.len(),
            q.len()
        )));
    }
    if t.len() < MIN_SAMPLES {
        return Err(EstimateError::DegenerateWindow(format!(
            "need at least {MIN_SAMPLES} samples, got {}",
            t.len()
        )));
    }
    if t.iter().chain(q).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(EstimateError::DegenerateWindow("times and values must be positive".into()));
    }
    let x: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = q.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(EstimateError::DegenerateWindow("all times coincide".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let (t_lo, t_hi) = t
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    Ok(ExponentFit {
        t_lo,
        t_hi,
        slope,
        intercept,
        residual: (rss / n).sqrt(),
        samples: t.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Bounded,
    Unbounded,
}

/// Sampling window and ratio cap for boundedness verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundWindow {
    pub t_lo: f64,
    pub t_hi: f64,
    pub ratio_cap: f64,
}

impl BoundWindow {
    /// [10⁻³, 10⁻¹]·T with ratio cap 10.
    pub fn from_extinction(t_ext: f64) -> Self {
        Self {
            t_lo: 1e-3 * t_ext,
            t_hi: 1e-1 * t_ext,
            ratio_cap: 10.0,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            t_lo: self.t_lo * factor,
            t_hi: self.t_hi * factor,
            ..*self
        }
    }
}

fn window_pair<S: Serializer>(w: &BoundWindow, s: S) -> Result<S::Ok, S::Error> {
    [w.t_lo, w.t_hi].serialize(s)
}

/// Normalized series q(t) = quantity(t)/(1 + t^{−exponent}) and its verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub bound_id: String,
    pub exponent: f64,
    pub sup_q: f64,
    pub median_q: f64,
    pub verdict: Verdict,
    #[serde(serialize_with = "window_pair")]
    pub window: BoundWindow,
    #[serde(skip)]
    pub series: Vec<(f64, f64)>,
}

impl BoundReport {
    pub fn from_series(
        bound_id: &str,
        exponent: f64,
        samples: impl IntoIterator<Item = (f64, f64)>,
        window: BoundWindow,
    ) -> Result<Self, EstimateError> {
        let series: Vec<(f64, f64)> = samples
            .into_iter()
            .filter(|(t, _)| *t >= window.t_lo && *t <= window.t_hi && *t > 0.0)
            .map(|(t, v)| (t, v / (1.0 + t.powf(-exponent))))
            .collect();
        if series.is_empty() {
            return Err(EstimateError::DegenerateWindow(format!(
                "no samples in [{}, {}]",
                window.t_lo, window.t_hi
            )));
        }
        let mut qs: Vec<f64> = series.iter().map(|s| s.1).collect();
        qs.sort_by(f64::total_cmp);
        let mid = qs.len() / 2;
        let median_q = if qs.len() % 2 == 1 {
            qs[mid]
        } else {
            0.5 * (qs[mid - 1] + qs[mid])
        };
        let sup_q = qs[qs.len() - 1];
        let verdict = if sup_q <= window.ratio_cap * median_q {
            Verdict::Bounded
        } else {
            Verdict::Unbounded
        };
        Ok(Self {
            bound_id: bound_id.to_string(),
            exponent,
            sup_q,
            median_q,
            verdict,
            window,
            series,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Gauss-curvature rate exponent n/(nα+1).
pub fn gauss_exponent(params: &FlowParams) -> f64 {
    params.n() as f64 / params.scaling_exponent()
}

/// Principal-curvature rate exponent (2+α)/((nα+1)α).
pub fn lambda_exponent(params: &FlowParams) -> f64 {
    (2.0 + params.alpha()) / (params.scaling_exponent() * params.alpha())
}

pub fn verify_gauss_bound(
    traj: &FlowTrajectory,
    params: &FlowParams,
    window: BoundWindow,
) -> Result<BoundReport, EstimateError> {
    BoundReport::from_series(
        "gauss_curvature",
        gauss_exponent(params),
        traj.diagnostics.iter().map(|d| (d.t, d.k_max)),
        window,
    )
}

pub fn verify_lambda_bound(
    traj: &FlowTrajectory,
    params: &FlowParams,
    window: BoundWindow,
) -> Result<BoundReport, EstimateError> {
    let n = params.n();
    if n < 2 || params.alpha() > 1.0 / (n as f64 - 1.0) {
        return Err(EstimateError::RegimeViolation {
            n,
            alpha: params.alpha(),
        });
    }
    BoundReport::from_series(
        "principal_curvature",
        lambda_exponent(params),
        traj.diagnostics.iter().map(|d| (d.t, d.lambda_max)),
        window,
    )
}

/// Two-pass rate study: a first run to extinction fixes T, a second run on
/// [0, T/10] with `snapshots` snapshots feeds the reports over the default window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundStudy {
    pub extinction_time: f64,
    /// Extinction time of the origin-centered barrier ball of radius max u0.
    pub barrier_time: f64,
    pub gauss: BoundReport,
    /// Present when (n, α) lies in the principal-curvature regime.
    pub lambda: Option<BoundReport>,
    #[serde(skip)]
    pub trajectory: FlowTrajectory,
}

pub fn bound_study(
    u0: &SupportFunction,
    params: &FlowParams,
    snapshots: usize,
) -> Result<BoundStudy, EstimateError> {
    let barrier = barrier_time(params, u0.max_value());
    let first = StepControl::new(1.05 * barrier)
        .with_snapshots(20)
        .with_min_radius(1e-2 * crate::geometry::inradius(u0));
    let t_ext = evolve(u0, params, &first)?.extinction_time.ok_or_else(|| {
        EstimateError::InvalidParams("flow did not reach extinction before the barrier time".into())
    })?;
    let traj = evolve(u0, params, &StepControl::new(0.1 * t_ext).with_snapshots(snapshots))?;
    let window = BoundWindow::from_extinction(t_ext);
    let gauss = verify_gauss_bound(&traj, params, window)?;
    let lambda = match verify_lambda_bound(&traj, params, window) {
        Ok(r) => Some(r),
        Err(EstimateError::RegimeViolation { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(BoundStudy {
        extinction_time: t_ext,
        barrier_time: barrier,
        gauss,
        lambda,
        trajectory: traj,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AnisotropyField;

    #[test]
    fn exact_power_law_fit() {
        let t: Vec<f64> = (0..20).map(|k| 10f64.powf(-2.0 + k as f64 / 19.0)).collect();
        let q: Vec<f64> = t.iter().map(|t| t.powi(-2)).collect();
        let fit = fit_exponent(&t, &q).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-10);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn perturbed_power_law_fit() {
        let t: Vec<f64> = (0..30).map(|k| 10f64.powf(-3.0 + k as f64 / 29.0)).collect();
        let q: Vec<f64> = t.iter().map(|t| 3.0 * t.powf(-0.5) * (1.0 + 0.01 * t)).collect();
        assert!((fit_exponent(&t, &q).unwrap().slope + 0.5).abs() < 0.01);
        let c = vec![4.2; 30];
        assert!(fit_exponent(&t, &c).unwrap().slope.abs() < 1e-12);
    }

    #[test]
    fn degenerate_windows() {
        assert!(fit_exponent(&[1.0; 5], &[1.0; 5]).is_err());
        assert!(fit_exponent(&[1.0; 10], &[1.0; 10]).is_err());
        let t: Vec<f64> = (1..=10).map(f64::from).collect();
        let mut q = vec![1.0; 10];
        q[3] = -1.0;
        assert!(fit_exponent(&t, &q).is_err());
    }

    #[test]
    fn shrinking_circle_gauss_report() {
        // K_max(t) = (1−2t)^{−1/2}
        let params = FlowParams::new(1, 1.0, AnisotropyField::constant(1.0)).unwrap();
        let samples = (1..=100).map(|k| {
            let t = 0.0025 * k as f64;
            (t, (1.0 - 2.0 * t).powf(-0.5))
        });
        let w = BoundWindow {
            t_lo: 0.01,
            t_hi: 0.25,
            ratio_cap: 10.0,
        };
        let r = BoundReport::from_series("gauss_curvature", gauss_exponent(&params), samples, w).unwrap();
        assert_eq!(r.verdict, Verdict::Bounded);
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["verdict"], "bounded");
        assert_eq!(json["window"][1], 0.25);
        assert!(json.get("series").is_none());
    }

    #[test]
    fn exponents() {
        let p = FlowParams::new(2, 1.0, AnisotropyField::constant(1.0)).unwrap();
        assert!((lambda_exponent(&p) - 1.0).abs() < 1e-15);
        assert!((gauss_exponent(&p) - 2.0 / 3.0).abs() < 1e-15);
        let q = FlowParams::new(2, 0.5, AnisotropyField::constant(1.0)).unwrap();
        assert!((lambda_exponent(&q) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn unbounded_series_is_flagged() {
        let samples = (1..=50).map(|k| {
            let t = 0.01 * k as f64;
            (t, 1.0 / t.powi(4))
        });
        let w = BoundWindow {
            t_lo: 0.01,
            t_hi: 0.5,
            ratio_cap: 10.0,
        };
        let r = BoundReport::from_series("x", 1.0, samples, w).unwrap();
        assert_eq!(r.verdict, Verdict::Unbounded);
    }
}
