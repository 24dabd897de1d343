use serde::Serialize;

use super::functional::RadialProfile;
use super::{model_h, OdeError, OdeParams};

pub const DEFAULT_NODES: usize = 2048;

/// Graded mesh r_j = r0·(j/J)^m, j = 1..J, uniform in σ = r^{1/m}.
/// The model solution is cached at every node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialMesh {
    pub m: f64,
    pub r0: f64,
    /// σ spacing r0^{1/m}/J.
    pub dsigma: f64,
    pub r: Vec<f64>,
    pub h: Vec<f64>,
    pub h_r: Vec<f64>,
    pub h_rr: Vec<f64>,
}

impl RadialMesh {
    pub fn new(m: f64, r0: f64, nodes: usize) -> Result<Self, OdeError> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(OdeError::InvalidMesh(format!("m = {m} must be positive")));
        }
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(OdeError::InvalidMesh(format!("r0 = {r0} must be positive")));
        }
        if nodes < 4 {
            return Err(OdeError::InvalidMesh(format!("need at least 4 nodes, got {nodes}")));
        }
        let r: Vec<f64> = (1..=nodes)
            .map(|j| r0 * (j as f64 / nodes as f64).powf(m))
            .collect();
        let (mut h, mut h_r, mut h_rr) = (vec![0.0; nodes], vec![0.0; nodes], vec![0.0; nodes]);
        for (j, &rj) in r.iter().enumerate() {
            (h[j], h_r[j], h_rr[j]) = model_h(rj, m);
        }
        Ok(Self {
            m,
            r0,
            dsigma: r0.powf(1.0 / m) / nodes as f64,
            r,
            h,
            h_r,
            h_rr,
        })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn sigma(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.dsigma
    }

    /// ∫₀^{r_j} g dt for every node by the trapezoid rule in t; g(0) is
    /// extrapolated linearly from the first two nodes.
    fn cumulative_dt(&self, g: &[f64]) -> Vec<f64> {
        let (r1, r2) = (self.r[0], self.r[1]);
        let g0 = g[0] - r1 * (g[1] - g[0]) / (r2 - r1);
        let (mut acc, mut ra, mut ga) = (0.0, 0.0, g0);
        g.iter()
            .zip(&self.r)
            .map(|(&gb, &rb)| {
                acc += 0.5 * (rb - ra) * (ga + gb);
                (ra, ga) = (rb, gb);
                acc
            })
            .collect()
    }

    /// m∫₀^{σ_j} G dσ for every node, G linear in r = σ^m on each cell
    /// (integrated exactly in σ), G(0) = 0.
    fn cumulative_dsigma(&self, big_g: &[f64]) -> Vec<f64> {
        let (m, ds) = (self.m, self.dsigma);
        let (mut acc, mut sa, mut ra, mut ga) = (0.0, 0.0, 0.0, 0.0);
        big_g
            .iter()
            .enumerate()
            .map(|(j, &gb)| {
                let (sb, rb) = (self.sigma(j), self.r[j]);
                let moment = (sb * rb - sa * ra) / (m + 1.0) - ra * ds;
                acc += m * (ds * ga + (gb - ga) * moment / (rb - ra));
                (sa, ra, ga) = (sb, rb, gb);
                acc
            })
            .collect()
    }
}

/// ŵ(r) = ∫₀^r s^{1/m−1} ∫₀^s m^{1/m−1} g(t) dt ds with derivatives, i.e. the
/// solution of (r^{1−1/m} ŵ_r)_r = m^{1/m−1} g vanishing to first order at 0.
/// The outer weight s^{1/m−1}ds = m dσ is removed exactly by s = σ^m; both
/// integrands are interpolated linearly in r between nodes.
pub fn integral_operator(params: &OdeParams, mesh: &RadialMesh, g: &[f64]) -> Result<RadialProfile, OdeError> {
    if g.len() != mesh.len() {
        return Err(OdeError::MeshMismatch);
    }
    let m = mesh.m;
    let c = m.powf(1.0 / m - 1.0);
    let inner: Vec<f64> = mesh.cumulative_dt(g).into_iter().map(|v| c * v).collect();
    let w = mesh.cumulative_dsigma(&inner);
    let w_r: Vec<f64> = inner
        .iter()
        .zip(&mesh.r)
        .map(|(gj, r)| r.powf(1.0 / m - 1.0) * gj)
        .collect();
    let w_rr = (0..g.len())
        .map(|j| {
            let r = mesh.r[j];
            c * r.powf(1.0 / m - 1.0) * g[j] - (1.0 - 1.0 / m) * w_r[j] / r
        })
        .collect();
    RadialProfile::new(*params, mesh.clone(), w, w_r, w_rr)
}
