use serde::Serialize;

use crate::geometry::{radii_at, stencil_d1, stencil_d2, GridKind, GridSpec, SupportFunction};

use super::engine::{evolve, Kernel};
use super::{FlowError, FlowParams, FlowTrajectory, StepControl};

/// Relative sup residuals of the metric identity ∂_t g₁₁ = −2F h₁₁ and the speed
/// identity ∂_t F = ℒF + αF²H over the interior snapshots of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityReport {
    pub residual_metric: f64,
    pub residual_speed: f64,
    pub snapshots_used: usize,
}

/// Per-snapshot fields needed by the identities.
struct Frame {
    r1: Vec<f64>,
    h: Vec<f64>,
    speed: Vec<f64>,
}

fn frame(grid: &GridSpec, values: &[f64], kernel: &Kernel) -> Frame {
    let radii: Vec<_> = (0..values.len()).map(|j| radii_at(grid, values, j)).collect();
    Frame {
        r1: radii.iter().map(|r| r.first()).collect(),
        h: radii.iter().map(|r| r.mean()).collect(),
        speed: kernel.speed(values),
    }
}

/// Three-point derivative at the middle of unevenly spaced samples.
fn central(t: [f64; 3], y: [f64; 3]) -> f64 {
    let (h1, h2) = (t[1] - t[0], t[2] - t[1]);
    -h2 / (h1 * (h1 + h2)) * y[0] + (h2 - h1) / (h1 * h2) * y[1] + h1 / (h2 * (h1 + h2)) * y[2]
}

/// Evaluates both identities in the Gauss-map parametrization. Time derivatives
/// are taken at fixed normal and converted to material derivatives through the
/// tangential velocity F_φ/r₁ of material points.
pub fn verify_evolution_identities(
    traj: &FlowTrajectory,
    params: &FlowParams,
) -> Result<IdentityReport, FlowError> {
    let snaps = &traj.snapshots;
    if snaps.len() < 3 {
        return Err(FlowError::InsufficientSnapshots { got: snaps.len() });
    }
    let grid = *snaps[0].u.grid();
    let kernel = Kernel::new(&grid, params)?;
    let alpha = params.alpha();
    let kind = grid.kind();
    let df: Vec<f64> = grid
        .angles()
        .iter()
        .map(|&a| params.field().derivatives(kind, a).1)
        .collect();
    let f = kernel.field_values();
    let frames: Vec<Frame> = snaps.iter().map(|s| frame(&grid, s.u.values(), &kernel)).collect();

    let (mut num_i, mut den_i, mut num_v, mut den_v) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in 1..snaps.len() - 1 {
        let t = [snaps[k - 1].t, snaps[k].t, snaps[k + 1].t];
        let (prev, cur, next) = (&frames[k - 1], &frames[k], &frames[k + 1]);
        let fr = &cur.speed;
        for j in 0..grid.node_count() {
            let r1 = cur.r1[j];
            let big_f = fr[j];
            let f_a = stencil_d1(&grid, fr, j);
            let f_aa = stencil_d2(&grid, fr, j);

            let r1_t = central(t, [prev.r1[j], r1, next.r1[j]]);
            let lhs_i = 2.0 * r1 * r1_t;
            let rhs_i = -2.0 * r1 * (f_aa + big_f);
            num_i = num_i.max((lhs_i - rhs_i).abs());
            den_i = den_i.max(rhs_i.abs());

            let f_t = central(t, [prev.speed[j], big_f, next.speed[j]]);
            let material = f_t + f_a * f_a / r1;
            let r1_a = stencil_d1(&grid, &cur.r1, j);
            let f_ss = (f_aa - f_a * r1_a / r1) / (r1 * r1);
            let parallel = match kind {
                GridKind::Circle => 0.0,
                GridKind::Axisymmetric if grid.is_pole(j) => f_aa / r1,
                GridKind::Axisymmetric => f_a / (grid.angle(j).tan() * r1),
            };
            let k_alpha = big_f / f[j];
            let l_f = alpha * big_f * (r1 * f_ss + parallel) + k_alpha * df[j] * f_a / r1;
            let reaction = alpha * big_f * big_f * cur.h[j];
            num_v = num_v.max((material - l_f - reaction).abs());
            den_v = den_v.max(reaction.abs());
        }
    }
    Ok(IdentityReport {
        residual_metric: num_i / den_i,
        residual_speed: num_v / den_v,
        snapshots_used: snaps.len() - 2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityLevel {
    pub node_count: usize,
    pub cadence: f64,
    pub residual_metric: f64,
    pub residual_speed: f64,
}

/// Residuals under joint halving of the snapshot cadence and the grid spacing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityStudy {
    pub levels: Vec<IdentityLevel>,
    /// Smallest observed order between consecutive levels.
    pub order_metric: f64,
    pub order_speed: f64,
}

fn min_order(res: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = res.collect();
    v.windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .fold(f64::INFINITY, f64::min)
}

/// Runs `levels` flows from `make_u0` with grid spacing and snapshot cadence
/// both halved per level; the time step is capped by the cadence.
pub fn identity_convergence_study(
    make_u0: impl Fn(&GridSpec) -> SupportFunction,
    base_grid: GridSpec,
    params: &FlowParams,
    t_end: f64,
    base_snapshots: usize,
    levels: usize,
) -> Result<IdentityStudy, FlowError> {
    let mut out = Vec::with_capacity(levels);
    for l in 0..levels {
        let scale = 1usize << l;
        let nodes = match base_grid.kind() {
            GridKind::Circle => base_grid.node_count() * scale,
            GridKind::Axisymmetric => (base_grid.node_count() - 1) * scale + 1,
        };
        let grid = GridSpec::new(base_grid.kind(), nodes)?;
        let snaps = base_snapshots * scale;
        let cadence = t_end / snaps as f64;
        let control = StepControl::new(t_end)
            .with_snapshots(snaps)
            .with_max_dt(cadence)
            .with_min_radius(1e-12);
        let traj = evolve(&make_u0(&grid), params, &control)?;
        let rep = verify_evolution_identities(&traj, params)?;
        out.push(IdentityLevel {
            node_count: nodes,
            cadence,
            residual_metric: rep.residual_metric,
            residual_speed: rep.residual_speed,
        });
    }
    Ok(IdentityStudy {
        order_metric: min_order(out.iter().map(|l| l.residual_metric)),
        order_speed: min_order(out.iter().map(|l| l.residual_speed)),
        levels: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{shrinking_ball_radius, Snapshot};
    use crate::geometry::AnisotropyField;

    #[test]
    fn round_closed_form_residuals_vanish() {
        for (n, alpha) in [(1, 1.0), (2, 0.5), (2, 1.0)] {
            let grid = if n == 1 {
                GridSpec::circle(32).unwrap()
            } else {
                GridSpec::axisymmetric(33).unwrap()
            };
            let params = FlowParams::new(n, alpha, AnisotropyField::constant(1.0)).unwrap();
            let snaps = (0..50)
                .map(|k| {
                    let t = 1e-4 * k as f64;
                    let rho = shrinking_ball_radius(n, alpha, 1.0, 1.0, t);
                    Snapshot {
                        t,
                        u: SupportFunction::ball(grid, rho),
                    }
                })
                .collect();
            let traj = FlowTrajectory::from_snapshots(snaps, &params).unwrap();
            let rep = verify_evolution_identities(&traj, &params).unwrap();
            assert!(rep.residual_metric < 1e-6, "{rep:?}");
            assert!(rep.residual_speed < 1e-6, "{rep:?}");
        }
    }

    #[test]
    fn too_few_snapshots() {
        let params = FlowParams::new(1, 1.0, AnisotropyField::constant(1.0)).unwrap();
        let u = SupportFunction::ball(GridSpec::circle(32).unwrap(), 1.0);
        let traj = FlowTrajectory::from_snapshots(
            vec![Snapshot { t: 0.0, u: u.clone() }, Snapshot { t: 0.1, u }],
            &params,
        )
        .unwrap();
        assert!(matches!(
            verify_evolution_identities(&traj, &params),
            Err(FlowError::InsufficientSnapshots { got: 2 })
        ));
    }

    #[test]
    fn ellipse_flow_residuals_converge() {
        let params = FlowParams::new(1, 1.0, AnisotropyField::axial(1.0, 0.2)).unwrap();
        let study = identity_convergence_study(
            |g| SupportFunction::ellipsoid(*g, 2.0, 1.0),
            GridSpec::circle(64).unwrap(),
            &params,
            0.02,
            8,
            3,
        )
        .unwrap();
        assert!(study.order_metric >= 1.0, "{study:?}");
        assert!(study.order_speed >= 1.0, "{study:?}");
    }
}
