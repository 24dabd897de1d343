use serde::Serialize;

use crate::flow::{evolve, FlowParams, StepControl};
use crate::geometry::{check_convex, diameter, radii_at, AnisotropyField, SupportFunction, TabulatedField};

use super::EstimateError;

/// f := det(u_ij + uδ_ij)·u^{1−p} tabulated on the grid of `u0`, so that u0
/// solves det(u_ij + uδ_ij) = f u^{p−1} node-wise.
pub fn make_soliton_field(u0: &SupportFunction, p: f64) -> Result<AnisotropyField, EstimateError> {
    let grid = u0.grid();
    check_convex(grid, u0.values())?;
    let min_u = u0.min_value();
    if !(min_u > 1e-12 * diameter(u0)) {
        return Err(EstimateError::OriginNotInterior { min_u });
    }
    let values = (0..u0.len())
        .map(|j| radii_at(grid, u0.values(), j).product() * u0.values()[j].powf(1.0 - p))
        .collect();
    Ok(AnisotropyField::Tabulated(TabulatedField::new(*grid, values)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolitonReport {
    pub p: f64,
    pub alpha: f64,
    pub t_end: f64,
    /// max over snapshots and nodes of |u − a(t)u0| / diameter(u0).
    pub max_deviation: f64,
    /// max over snapshots and nodes of |u − a(t)u0| / (a(t)u0).
    pub max_relative_deviation: f64,
    pub snapshots: usize,
}

/// Evolves u0 with speed f^α K^α, α = 1/(1−p), f from [`make_soliton_field`], and
/// compares with the homothetic solution a(t)u0, a = (1 − (nα+1)t)^{1/(nα+1)}.
pub fn soliton_selfsimilarity_check(
    u0: &SupportFunction,
    p: f64,
    control: &StepControl,
) -> Result<SolitonReport, EstimateError> {
    if !(p < 1.0) {
        return Err(EstimateError::InvalidParams(format!("need p < 1, got {p}")));
    }
    let alpha = 1.0 / (1.0 - p);
    let n = u0.grid().dimension();
    let q = n as f64 * alpha + 1.0;
    if control.t_end > 0.5 / q * (1.0 + 1e-12) {
        return Err(EstimateError::InvalidParams(format!(
            "t_end {} exceeds 0.5/(n alpha + 1) = {}",
            control.t_end,
            0.5 / q
        )));
    }
    let field = make_soliton_field(u0, p)?.powf(alpha);
    let params = FlowParams::new(n, alpha, field)?;
    let traj = evolve(u0, &params, control)?;
    let d0 = diameter(u0);
    let mut max_dev = 0.0f64;
    let mut max_rel = 0.0f64;
    for s in &traj.snapshots {
        let a = (1.0 - q * s.t).powf(1.0 / q);
        for (v, w) in s.u.values().iter().zip(u0.values()) {
            let dev = (v - a * w).abs();
            max_dev = max_dev.max(dev / d0);
            max_rel = max_rel.max(dev / (a * w));
        }
    }
    Ok(SolitonReport {
        p,
        alpha,
        t_end: traj.t_final,
        max_deviation: max_dev,
        max_relative_deviation: max_rel,
        snapshots: traj.snapshots.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GridKind, GridSpec};

    #[test]
    fn round_field_is_constant() {
        let r: f64 = 1.5;
        for (g, n) in [(GridSpec::circle(32).unwrap(), 1.0), (GridSpec::axisymmetric(33).unwrap(), 2.0)] {
            for p in [-1.0, 0.0, 0.5] {
                let f = make_soliton_field(&SupportFunction::ball(g, r), p).unwrap();
                let expect = r.powf(n - p + 1.0);
                assert!(f.sample_on(&g).iter().all(|v| (v - expect).abs() < 1e-12 * expect));
            }
        }
    }

    #[test]
    fn cosine_perturbation_field() {
        // p = 0, n = 1: f = (u_θθ + u)·u with discrete u_θθ
        let g = GridSpec::circle(64).unwrap();
        let u = SupportFunction::from_fn(g, |t| 1.0 + 0.2 * t.cos()).unwrap();
        let f = make_soliton_field(&u, 0.0).unwrap().sample_on(&g);
        let h = g.spacing();
        let fac = 2.0 * (1.0 - h.cos()) / (h * h);
        for (j, t) in g.angles().into_iter().enumerate() {
            let v = 1.0 + 0.2 * t.cos();
            let exact = (v - 0.2 * fac * t.cos()) * v;
            assert!((f[j] - exact).abs() < 1e-12);
            assert!(f[j] > 0.0);
        }
    }

    #[test]
    fn field_homogeneity() {
        let g = GridSpec::axisymmetric(33).unwrap();
        let u = SupportFunction::ellipsoid(g, 1.0, 1.3);
        let (s, p) = (1.7f64, -0.5);
        let f = make_soliton_field(&u, p).unwrap().sample_on(&g);
        let fs = make_soliton_field(&u.scaled(s), p).unwrap().sample_on(&g);
        let k = s.powf(2.0 - p + 1.0);
        assert!(f.iter().zip(&fs).all(|(a, b)| (b / a / k - 1.0).abs() < 1e-10));
    }

    #[test]
    fn origin_must_be_interior() {
        let g = GridSpec::circle(32).unwrap();
        let u = SupportFunction::ball(g, 1.0).translated([1.0, 0.0]).unwrap();
        assert!(matches!(
            make_soliton_field(&u, 0.0),
            Err(EstimateError::OriginNotInterior { .. })
        ));
    }

    #[test]
    fn round_soliton_tracks_homothety() {
        let g = GridSpec::circle(32).unwrap();
        let ctl = StepControl::new(0.25).with_snapshots(20);
        let r = soliton_selfsimilarity_check(&SupportFunction::ball(g, 1.0), 0.0, &ctl).unwrap();
        assert!(r.max_relative_deviation < 1e-4, "{r:?}");
        assert!(soliton_selfsimilarity_check(&SupportFunction::ball(g, 1.0), 1.0, &ctl).is_err());
        let late = StepControl::new(0.3);
        assert!(soliton_selfsimilarity_check(&SupportFunction::ball(g, 1.0), 0.0, &late).is_err());
    }

    #[test]
    fn tabulated_field_is_evaluated_exactly_on_its_grid() {
        let g = GridSpec::axisymmetric(33).unwrap();
        let u = SupportFunction::ellipsoid(g, 1.0, 1.2);
        let f = make_soliton_field(&u, 0.0).unwrap();
        let nodal = f.sample_on(&g);
        for j in 0..g.node_count() {
            assert!((f.value(GridKind::Axisymmetric, g.angle(j)) - nodal[j]).abs() < 1e-12);
        }
    }
}
