use crate::geometry::{
    check_convex, diameter, inradius, radii_at, GridKind, GridSpec, SupportFunction,
};

use super::{Diagnostics, FlowError, FlowParams, FlowTrajectory, Snapshot, StepControl};

/// Node-wise speed evaluation with the field sampled once per grid.
pub(crate) struct Kernel {
    grid: GridSpec,
    f: Vec<f64>,
    alpha: f64,
}

impl Kernel {
    pub(crate) fn new(grid: &GridSpec, params: &FlowParams) -> Result<Self, FlowError> {
        params.check_grid(grid)?;
        Ok(Self {
            grid: *grid,
            f: params.field().sample_on(grid),
            alpha: params.alpha(),
        })
    }

    /// Writes F = f K^α into `out`; returns (max F, max αF·H).
    fn speed_into(&self, values: &[f64], out: &mut [f64]) -> (f64, f64) {
        let mut max_f = 0.0f64;
        let mut max_diff = 0.0f64;
        for (j, o) in out.iter_mut().enumerate() {
            let r = radii_at(&self.grid, values, j);
            let speed = self.f[j] * r.product().powf(-self.alpha);
            *o = speed;
            max_f = max_f.max(speed);
            max_diff = max_diff.max(self.alpha * speed * r.mean());
        }
        (max_f, max_diff)
    }

    pub(crate) fn speed(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; values.len()];
        self.speed_into(values, &mut out);
        out
    }

    pub(crate) fn field_values(&self) -> &[f64] {
        &self.f
    }
}

/// F = f(ν)·K^α at every node.
pub fn flow_speed(u: &SupportFunction, params: &FlowParams) -> Result<Vec<f64>, FlowError> {
    let kernel = Kernel::new(u.grid(), params)?;
    check_convex(u.grid(), u.values())?;
    Ok(kernel.speed(u.values()))
}

struct Workspace {
    f1: Vec<f64>,
    f2: Vec<f64>,
    mid: Vec<f64>,
    next: Vec<f64>,
}

impl Workspace {
    fn new(len: usize) -> Self {
        Self {
            f1: vec![0.0; len],
            f2: vec![0.0; len],
            mid: vec![0.0; len],
            next: vec![0.0; len],
        }
    }
}

/// Midpoint RK2 from `values` (speed already in `ws.f1`); result in `ws.next`.
/// Returns the max midpoint speed, or None if a stage lost convexity.
fn rk2(kernel: &Kernel, values: &[f64], dt: f64, ws: &mut Workspace) -> Option<f64> {
    for ((m, v), f) in ws.mid.iter_mut().zip(values).zip(&ws.f1) {
        *m = v - 0.5 * dt * f;
    }
    check_convex(&kernel.grid, &ws.mid).ok()?;
    let (max_f2, _) = kernel.speed_into(&ws.mid, &mut ws.f2);
    for ((x, v), f) in ws.next.iter_mut().zip(values).zip(&ws.f2) {
        *x = v - dt * f;
    }
    check_convex(&kernel.grid, &ws.next).ok()?;
    Some(max_f2)
}

/// One midpoint RK2 step of ∂_t u = −F.
pub fn step(u: &SupportFunction, params: &FlowParams, dt: f64) -> Result<SupportFunction, FlowError> {
    let kernel = Kernel::new(u.grid(), params)?;
    check_convex(u.grid(), u.values())?;
    let mut ws = Workspace::new(u.len());
    kernel.speed_into(u.values(), &mut ws.f1);
    if rk2(&kernel, u.values(), dt, &mut ws).is_none() {
        return Err(FlowError::StepRejected { t: 0.0, dt });
    }
    Ok(u.with_values(ws.next)?)
}

pub(crate) fn diagnostics(u: &SupportFunction, params: &FlowParams, t: f64) -> Result<Diagnostics, FlowError> {
    let kernel = Kernel::new(u.grid(), params)?;
    check_convex(u.grid(), u.values())?;
    let mut lambda_max = 0.0f64;
    let mut k_max = 0.0f64;
    let mut f_max = 0.0f64;
    for j in 0..u.len() {
        let r = radii_at(u.grid(), u.values(), j);
        lambda_max = lambda_max.max(r.max_curvature());
        k_max = k_max.max(r.gauss());
        f_max = f_max.max(kernel.f[j] * r.product().powf(-kernel.alpha));
    }
    Ok(Diagnostics {
        t,
        lambda_max,
        k_max,
        inradius: inradius(u),
        diameter: diameter(u),
        f_max,
    })
}

/// Integrate from `u0` until `control.t_end` or until the inradius drops below
/// `control.min_radius_stop`.
///
/// The step is the smallest of the speed CFL bound safety·inradius/max F, the
/// parabolic bound h²/(4 max αF·H), and `max_dt`; steps land exactly on the
/// snapshot times. A rejected step halves the step scale, accepted steps grow it
/// back by 1.25.
pub fn evolve(
    u0: &SupportFunction,
    params: &FlowParams,
    control: &StepControl,
) -> Result<FlowTrajectory, FlowError> {
    const RECOMPUTE_EVERY: usize = 64;
    control.validate()?;
    let grid = *u0.grid();
    let kernel = Kernel::new(&grid, params)?;
    crate::geometry::curvature(u0)?;

    let h = grid.spacing();
    let count = control.snapshot_count;
    let snap_time = |k: usize| control.t_end * k as f64 / count as f64;
    let t_eps = 1e-12 * control.t_end;

    let mut values = u0.values().to_vec();
    let mut ws = Workspace::new(values.len());
    let mut snapshots = vec![Snapshot { t: 0.0, u: u0.clone() }];
    let mut diags = vec![diagnostics(u0, params, 0.0)?];
    let mut rho = diags[0].inradius;
    let mut rho_lb = rho;
    let mut since_recompute = 0usize;
    let mut scale = 1.0f64;
    let mut t = 0.0f64;
    let mut next_k = 1usize;
    let mut steps = 0usize;
    let mut rejections = 0usize;
    let mut extinction_time = None;

    while next_k <= count {
        if rho_lb < control.min_radius_stop
            || rho_lb < 0.5 * rho
            || since_recompute >= RECOMPUTE_EVERY
        {
            rho = inradius(&u0.with_values(values.clone())?);
            rho_lb = rho;
            since_recompute = 0;
            if rho < control.min_radius_stop {
                let mean_f = kernel.speed(&values).iter().sum::<f64>() / values.len() as f64;
                extinction_time = Some(t + rho / (params.scaling_exponent() * mean_f));
                break;
            }
        }
        let (max_f, max_diff) = kernel.speed_into(&values, &mut ws.f1);
        let dt_allowed = (control.safety * rho_lb / max_f)
            .min(0.25 * h * h / max_diff)
            .min(control.max_dt);
        let mut dt = scale * dt_allowed;
        let target = snap_time(next_k);
        let hits = t + dt >= target - t_eps;
        if hits {
            dt = target - t;
        }
        if !(dt > 1e-14 * control.t_end) {
            return Err(FlowError::Stalled { t, dt });
        }
        match rk2(&kernel, &values, dt, &mut ws) {
            None => {
                rejections += 1;
                scale *= 0.5;
                continue;
            }
            Some(max_f2) => {
                std::mem::swap(&mut values, &mut ws.next);
                steps += 1;
                since_recompute += 1;
                rho_lb -= dt * max_f2;
                scale = (scale * 1.25).min(1.0);
                t = if hits { target } else { t + dt };
            }
        }
        if hits {
            let u = u0.with_values(values.clone())?;
            let d = diagnostics(&u, params, t)?;
            rho = d.inradius;
            rho_lb = rho;
            since_recompute = 0;
            diags.push(d);
            snapshots.push(Snapshot { t, u });
            next_k += 1;
        }
    }
    Ok(FlowTrajectory {
        snapshots,
        diagnostics: diags,
        t_final: t,
        extinction_time,
        steps,
        rejections,
    })
}

/// Extinction time ρ₀^{nα+1}/((nα+1)·max f) of the barrier ball B_ρ₀(0).
pub fn barrier_time(params: &FlowParams, rho0: f64) -> f64 {
    let kind = if params.n() == 1 {
        GridKind::Circle
    } else {
        GridKind::Axisymmetric
    };
    let q = params.scaling_exponent();
    rho0.powf(q) / (q * params.field().max_sampled(kind))
}

/// Radius of the round solution with f ≡ c: (ρ₀^{nα+1} − (nα+1)c t)^{1/(nα+1)},
/// zero past extinction.
pub fn shrinking_ball_radius(n: usize, alpha: f64, rho0: f64, c: f64, t: f64) -> f64 {
    let q = n as f64 * alpha + 1.0;
    (rho0.powf(q) - q * c * t).max(0.0).powf(1.0 / q)
}
