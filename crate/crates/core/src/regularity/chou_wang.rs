use std::f64::consts::FRAC_PI_4;

use rand::{Rng, SeedableRng};
use serde::Serialize;

use super::RegularityError;
use crate::geometry::{GeneralizedResidual, GridSpec};

/// ũ(y) = |y|^{2α} on Rⁿ, α = n/(n−p+1), and its Legendre dual v̄ = c|x|^β.
/// The support function on the lower cap is u(z) = |z_{n+1}| ũ(z'/|z_{n+1}|).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChouWang {
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    /// (2α−1)/(2α)^{2α/(2α−1)}.
    pub c: f64,
    /// 2α/(2α−1).
    pub beta: f64,
}

pub fn chou_wang_example(n: usize, p: f64) -> Result<ChouWang, RegularityError> {
    let nf = n as f64;
    let in_range = (p > 1.0 - nf && p < 1.0) || (p > 1.0 && p < nf + 1.0);
    if n == 0 || !in_range {
        return Err(RegularityError::BadRange { n, p });
    }
    let alpha = nf / (nf - p + 1.0);
    let a2 = 2.0 * alpha;
    let beta = a2 / (a2 - 1.0);
    Ok(ChouWang {
        n,
        p,
        alpha,
        c: (a2 - 1.0) / a2.powf(beta),
        beta,
    })
}

impl ChouWang {
    /// (g, g', g'') for the radial profile g(ρ) = ρ^{2α} of ũ.
    pub fn u_tilde(&self, rho: f64) -> (f64, f64, f64) {
        let a2 = 2.0 * self.alpha;
        let g = rho.powf(a2);
        (g, a2 * g / rho, a2 * (a2 - 1.0) * g / (rho * rho))
    }

    /// (v̄, v̄_r, v̄_rr) at radius r.
    pub fn v_bar(&self, r: f64) -> (f64, f64, f64) {
        let (b, c) = (self.beta, self.c);
        let v = c * r.powf(b);
        (v, b * v / r, b * (b - 1.0) * v / (r * r))
    }

    /// Prescribed density as a function of |z_{n+1}|.
    pub fn density(&self, z_last: f64) -> f64 {
        self.constant() * z_last.abs().powf(-(self.n as f64 + self.p + 1.0))
    }

    /// The density with exponent −(n+2p), which the example does not satisfy
    /// unless p = 1.
    pub fn density_as_printed(&self, z_last: f64) -> f64 {
        self.constant() * z_last.abs().powf(-(self.n as f64 + 2.0 * self.p))
    }

    fn constant(&self) -> f64 {
        let a2 = 2.0 * self.alpha;
        a2.powi(self.n as i32) * (a2 - 1.0)
    }

    /// Support function on the lower cap at angle ψ from the south pole.
    pub fn support(&self, psi: f64) -> f64 {
        psi.cos() * psi.tan().powf(2.0 * self.alpha)
    }

    /// |det D²ũ − (2α)ⁿ(2α−1)ũ^{p−1}| relative to the right side, at |y| = ρ.
    /// For radial ũ, det D²ũ = g''·(g'/ρ)^{n−1}.
    pub fn determinant_residual(&self, rho: f64) -> f64 {
        let (g, g1, g2) = self.u_tilde(rho);
        let lhs = g2 * (g1 / rho).powi(self.n as i32 - 1);
        let rhs = self.constant() * g.powf(self.p - 1.0);
        (lhs - rhs).abs() / rhs.abs()
    }

    /// |⟨(x, v̄), (∇v̄, −1)⟩ − ũ(∇v̄)| relative to ũ(∇v̄).
    pub fn legendre_residual(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (v, v_r, _) = self.v_bar(r);
        let y: Vec<f64> = x.iter().map(|xi| v_r * xi / r).collect();
        let lhs = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() - v;
        let rhs = self.u_tilde(v_r).0;
        (lhs - rhs).abs() / rhs
    }

    /// Largest relative residual of both identities over `samples` random
    /// points with |x| ∈ [10⁻², 10²].
    pub fn max_identity_residuals(&self, samples: usize, seed: u64) -> (f64, f64) {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let (mut det, mut leg) = (0.0f64, 0.0f64);
        for _ in 0..samples {
            let rho = 10f64.powf(rng.gen_range(-2.0..2.0));
            det = det.max(self.determinant_residual(rho));
            let mut x: Vec<f64> = (0..self.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-3);
            x.iter_mut().for_each(|v| *v *= rho / norm);
            leg = leg.max(self.legendre_residual(&x));
        }
        (det, leg)
    }

    /// Measure identity u^{1−p} r₁r₂ = f on the meridian grid of `nodes`
    /// points, restricted to the lower cap ψ ≤ π/4 minus the polar disk
    /// ψ < `psi_min`, split into `arcs` blocks of equal angular width. Radii
    /// come from central differences of the sampled support function. Only
    /// n = 2.
    pub fn cap_measure_residual(
        &self,
        nodes: usize,
        arcs: usize,
        psi_min: f64,
        density: impl Fn(f64) -> f64,
    ) -> Result<GeneralizedResidual, RegularityError> {
        if self.n != 2 {
            return Err(RegularityError::InvalidInput(format!(
                "the cap check runs on S², got n = {}",
                self.n
            )));
        }
        if arcs == 0 || !(psi_min > 0.0 && psi_min < FRAC_PI_4) {
            return Err(RegularityError::InvalidInput(format!(
                "need arcs > 0 and 0 < psi_min < pi/4, got {arcs} and {psi_min}"
            )));
        }
        let grid = GridSpec::axisymmetric(nodes).map_err(|e| RegularityError::InvalidInput(e.to_string()))?;
        let h = grid.spacing();
        let psi = |j: usize| std::f64::consts::PI - grid.angle(j);
        let u = |j: usize| self.support(psi(j));
        let width = FRAC_PI_4 - psi_min;
        let mut lhs = vec![0.0; arcs];
        let mut rhs = vec![0.0; arcs];
        for j in 1..nodes - 1 {
            let (lo, hi) = grid.cell_bounds(j);
            let (a, b) = (std::f64::consts::PI - hi, std::f64::consts::PI - lo);
            if a < psi_min || b > FRAC_PI_4 {
                continue;
            }
            let (um, u0, up) = (u(j - 1), u(j), u(j + 1));
            // derivatives in φ; u_φ cot φ is invariant under ψ = π − φ
            let d1 = (up - um) / (2.0 * h);
            let d2 = (up - 2.0 * u0 + um) / (h * h);
            let r1 = d2 + u0;
            let r2 = d1 / grid.angle(j).tan() + u0;
            let area = grid.cell_area(j);
            let k = (((psi(j) - psi_min) / width * arcs as f64) as usize).min(arcs - 1);
            lhs[k] += u0.powf(1.0 - self.p) * r1 * r2 * area;
            rhs[k] += density(psi(j).cos()) * area;
        }
        let residuals: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        let max_abs = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let max_relative = residuals
            .iter()
            .zip(&rhs)
            .filter(|(_, t)| **t > 0.0)
            .fold(0.0f64, |m, (r, t)| m.max(r.abs() / t));
        Ok(GeneralizedResidual {
            residuals,
            target: rhs,
            max_abs,
            max_relative,
        })
    }
}
