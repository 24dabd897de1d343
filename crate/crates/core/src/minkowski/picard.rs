use serde::Serialize;

use super::functional::RadialProfile;
use super::mesh::{integral_operator, RadialMesh, DEFAULT_NODES};
use super::{OdeError, OdeParams};

/// Ratio above which a Picard step is counted as non-contracting.
const RATIO_CAP: f64 = 0.6;
const MIN_R0: f64 = 1e-6;
const MAX_ITERATIONS: usize = 200;

/// w_next = w_curr + ∫₀^r s^{1/m−1} ∫₀^s m^{1/m−1}(E(w_curr) − E(w_prev)) dt ds.
/// `prev = None` stands for the convention E(w_{−1}) ≡ 0. The second
/// derivative comes from L w_next = m^{1/m−1} E(w_curr).
pub fn picard_step(prev: Option<&RadialProfile>, curr: &RadialProfile) -> Result<RadialProfile, OdeError> {
    let e_prev = match prev {
        Some(p) => {
            if p.r() != curr.r() {
                return Err(OdeError::MeshMismatch);
            }
            p.error_values()?
        }
        None => vec![0.0; curr.len()],
    };
    let e_curr = curr.error_values()?;
    step_with(curr, &e_prev, &e_curr)
}

fn step_with(curr: &RadialProfile, e_prev: &[f64], e_curr: &[f64]) -> Result<RadialProfile, OdeError> {
    let diff: Vec<f64> = e_curr.iter().zip(e_prev).map(|(a, b)| a - b).collect();
    let inc = integral_operator(&curr.params, &curr.mesh, &diff)?;
    let mut next = curr.add(&inc)?;
    let m = curr.params.m;
    let c = m.powf(1.0 / m - 1.0);
    for j in 0..next.len() {
        let r = next.mesh.r[j];
        next.w_rr[j] = c * r.powf(1.0 / m - 1.0) * e_curr[j] - (1.0 - 1.0 / m) * next.w_r[j] / r;
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    /// i of w_i.
    pub iteration: usize,
    /// ‖w_i − w_{i−1}‖_{C²_w(I₀)}.
    pub diff_norm: f64,
    /// ‖w_i − w_{i−1}‖/‖w_{i−1} − w_{i−2}‖.
    pub ratio: Option<f64>,
}

/// One run of the iteration on a fixed interval (0, r0].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Attempt {
    pub r0: f64,
    pub iterations: Vec<IterationRecord>,
    /// "accepted", or why r0 was halved.
    pub outcome: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceLog {
    pub params: OdeParams,
    pub tol: f64,
    pub nodes: usize,
    pub attempts: Vec<Attempt>,
    pub r0: f64,
    /// sup over nodes of ‖w‖_{C²_w((0,r])}/r^δ.
    pub c0: f64,
    /// C₀·r0^δ, to be compared with min{m, 1/m}/10.
    pub certificate: f64,
    pub certificate_bound: f64,
    pub ode_residual: f64,
}

impl ConvergenceLog {
    pub fn accepted(&self) -> &Attempt {
        self.attempts.last().expect("a returned log has an accepted attempt")
    }

    /// Largest ‖Δ_{i+1}‖/‖Δ_i‖ over i ≥ 2 in the accepted run.
    pub fn max_ratio_after_second(&self) -> Option<f64> {
        self.accepted()
            .iterations
            .iter()
            .filter(|it| it.iteration >= 3)
            .filter_map(|it| it.ratio)
            .reduce(f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("log serializes")
    }
}

pub fn solve_profile(params: &OdeParams, r0_init: f64, tol: f64) -> Result<(RadialProfile, ConvergenceLog), OdeError> {
    solve_profile_with(params, r0_init, tol, DEFAULT_NODES)
}

enum Outcome {
    Accepted(RadialProfile, f64),
    Rejected(String),
}

/// Picard iteration from w₀ = 0 until ‖w_{i+1} − w_i‖_{C²_w} < tol. r0 is
/// halved and the iteration restarted when two consecutive ratios exceed 0.6,
/// when an iterate leaves the region Y, Z > 0, or when the converged profile
/// misses a certificate (all ratios for i ≥ 2 at most 0.6, C₀r0^δ ≤ min{m,1/m}/10).
pub fn solve_profile_with(
    params: &OdeParams,
    r0_init: f64,
    tol: f64,
    nodes: usize,
) -> Result<(RadialProfile, ConvergenceLog), OdeError> {
    if !(r0_init > 0.0 && r0_init <= 1.0) {
        return Err(OdeError::InvalidParams(format!("r0 must lie in (0, 1], got {r0_init}")));
    }
    if !(tol > 0.0) {
        return Err(OdeError::InvalidParams(format!("tol must be positive, got {tol}")));
    }
    let bound = 0.1 * params.m.min(1.0 / params.m);
    let mut log = ConvergenceLog {
        params: *params,
        tol,
        nodes,
        attempts: Vec::new(),
        r0: r0_init,
        c0: f64::NAN,
        certificate: f64::NAN,
        certificate_bound: bound,
        ode_residual: f64::NAN,
    };
    let mut r0 = r0_init;
    loop {
        if r0 < MIN_R0 {
            return Err(OdeError::NoContraction { r0 });
        }
        let mesh = RadialMesh::new(params.m, r0, nodes)?;
        let mut attempt = Attempt {
            r0,
            iterations: Vec::new(),
            outcome: String::new(),
        };
        match iterate(params, mesh, tol, bound, &mut attempt)? {
            Outcome::Accepted(profile, c0) => {
                attempt.outcome = "accepted".into();
                log.attempts.push(attempt);
                log.r0 = r0;
                log.c0 = c0;
                log.certificate = c0 * r0.powf(params.delta);
                log.ode_residual = ode_residual(&profile);
                return Ok((profile, log));
            }
            Outcome::Rejected(why) => {
                attempt.outcome = why;
                log.attempts.push(attempt);
                r0 *= 0.5;
            }
        }
    }
}

fn iterate(
    params: &OdeParams,
    mesh: RadialMesh,
    tol: f64,
    bound: f64,
    attempt: &mut Attempt,
) -> Result<Outcome, OdeError> {
    let mut curr = RadialProfile::zero(*params, mesh)?;
    let mut e_prev = vec![0.0; curr.len()];
    let mut e_curr = curr.error_values()?;
    let mut last: Option<f64> = None;
    let mut high_streak = 0;
    for i in 1..=MAX_ITERATIONS {
        let next = step_with(&curr, &e_prev, &e_curr)?;
        let d = next.sub(&curr)?.norm(2);
        if !d.is_finite() {
            return Ok(Outcome::Rejected(format!("non-finite iterate at i = {i}")));
        }
        let ratio = last.map(|l| d / l);
        attempt.iterations.push(IterationRecord {
            iteration: i,
            diff_norm: d,
            ratio,
        });
        if ratio.is_some_and(|q| q > RATIO_CAP) {
            high_streak += 1;
            if high_streak >= 2 {
                return Ok(Outcome::Rejected(format!("two consecutive ratios above {RATIO_CAP}")));
            }
        } else {
            high_streak = 0;
        }
        let e_next = match next.error_values() {
            Ok(e) => e,
            Err(OdeError::ModulusNonpositive { r, .. }) => {
                return Ok(Outcome::Rejected(format!("iterate left Y, Z > 0 at r = {r:e}")))
            }
            Err(e) => return Err(e),
        };
        if d < tol {
            if attempt
                .iterations
                .iter()
                .any(|it| it.iteration >= 3 && it.ratio.is_some_and(|q| q > RATIO_CAP))
            {
                return Ok(Outcome::Rejected(format!("a ratio after the second iterate exceeds {RATIO_CAP}")));
            }
            let c0 = theorem_constant(&next);
            if c0 * next.r0().powf(params.delta) > bound {
                return Ok(Outcome::Rejected(format!("C0 r0^delta exceeds {bound}")));
            }
            return Ok(Outcome::Accepted(next, c0));
        }
        (e_prev, e_curr) = (e_curr, e_next);
        curr = next;
        last = Some(d);
    }
    Ok(Outcome::Rejected(format!("no convergence in {MAX_ITERATIONS} iterations")))
}

/// C₀ = sup over nodes of ‖w‖_{C²_w((0,r])}/r^δ.
fn theorem_constant(w: &RadialProfile) -> f64 {
    let d = w.params.delta;
    w.running_norm(2)
        .iter()
        .zip(w.r())
        .map(|(v, r)| v / r.powf(d))
        .fold(0.0, f64::max)
}

/// Relative sup residual of v̄_rr v̄_r^{n−1} = (v̄_r + r v̄_r − v̄)^{1−p}(1+r)^{n−1}(1+v̄_r²)^{(n+p+1)/2}
/// for v̄ = h + w.
pub fn ode_residual(profile: &RadialProfile) -> f64 {
    let OdeParams { n, p, .. } = profile.params;
    let mk = &profile.mesh;
    let mut worst = 0.0f64;
    for j in 0..profile.len() {
        let r = mk.r[j];
        let v = mk.h[j] + profile.w[j];
        let v_r = mk.h_r[j] + profile.w_r[j];
        let v_rr = mk.h_rr[j] + profile.w_rr[j];
        let lhs = v_rr * v_r.powi(n as i32 - 1);
        let rhs = ((1.0 + r) * v_r - v).powf(1.0 - p)
            * (1.0 + r).powi(n as i32 - 1)
            * (1.0 + v_r * v_r).powf(0.5 * (n as f64 + p + 1.0));
        let rel = ((lhs - rhs) / rhs).abs();
        worst = if rel.is_nan() { f64::INFINITY } else { worst.max(rel) };
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_is_kept() {
        let params = OdeParams::new(2, 0.0).unwrap();
        let mesh = RadialMesh::new(1.0, 0.1, 64).unwrap();
        let w = RadialProfile::scaled_model(params, mesh, 0.01).unwrap();
        let next = picard_step(Some(&w), &w).unwrap();
        assert_eq!(next.w, w.w);
        assert_eq!(next.w_r, w.w_r);
    }

    #[test]
    fn first_step_solves_the_linear_problem() {
        let params = OdeParams::new(2, 0.5).unwrap();
        let mesh = RadialMesh::new(params.m, 0.1, 256).unwrap();
        let zero = RadialProfile::zero(params, mesh.clone()).unwrap();
        let w1 = picard_step(None, &zero).unwrap();
        let direct = integral_operator(&params, &mesh, &zero.error_values().unwrap()).unwrap();
        assert_eq!(w1.w, direct.w);
        for j in 0..256 {
            assert!((w1.w_rr[j] - direct.w_rr[j]).abs() <= 1e-14 * direct.w_rr[j].abs().max(1e-300));
        }
    }

    #[test]
    fn zero_profile_residual_is_the_error() {
        let params = OdeParams::new(2, 0.0).unwrap();
        let mesh = RadialMesh::new(1.0, 0.2, 128).unwrap();
        let zero = RadialProfile::zero(params, mesh.clone()).unwrap();
        let e = zero.error_values().unwrap();
        // residual = |E(0)|·h_r^{1−p}/RHS with RHS = h_r^{1−p}(1 + E(0))
        let expect = e.iter().map(|v| v.abs() / (1.0 + v)).fold(0.0, f64::max);
        assert!((ode_residual(&zero) - expect).abs() < 1e-12);
        assert!(expect > 0.0);
    }

    #[test]
    fn converges_for_m_one() {
        let params = OdeParams::new(2, 0.0).unwrap();
        let (w, log) = solve_profile_with(&params, 1.0, 1e-11, 512).unwrap();
        assert!(log.ode_residual < 1e-6, "{}", log.to_json());
        assert!(log.certificate <= log.certificate_bound);
        assert!(log.max_ratio_after_second().unwrap() <= 0.6);
        assert!(w.norm(2) <= log.certificate_bound);
    }

    #[test]
    fn loose_tolerance_returns_first_iterate() {
        let params = OdeParams::new(2, 0.0).unwrap();
        let (w, log) = solve_profile_with(&params, 0.01, 1.0, 256).unwrap();
        assert_eq!(log.accepted().iterations.len(), 1);
        let mesh = RadialMesh::new(1.0, log.r0, 256).unwrap();
        let w1 = picard_step(None, &RadialProfile::zero(params, mesh).unwrap()).unwrap();
        assert_eq!(w.w, w1.w);
    }

    #[test]
    fn rejects_bad_inputs() {
        let params = OdeParams::new(2, 0.0).unwrap();
        assert!(solve_profile(&params, 2.0, 1e-8).is_err());
        assert!(solve_profile(&params, 0.5, 0.0).is_err());
    }
}
