use std::fmt::Write as _;

use serde::Serialize;

use super::mesh::RadialMesh;
use super::{OdeError, OdeParams};

/// Correction w = v̄ − h and its first two derivatives on a graded mesh.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    pub params: OdeParams,
    #[serde(skip)]
    pub mesh: RadialMesh,
    pub w: Vec<f64>,
    pub w_r: Vec<f64>,
    pub w_rr: Vec<f64>,
}

impl RadialProfile {
    pub fn new(
        params: OdeParams,
        mesh: RadialMesh,
        w: Vec<f64>,
        w_r: Vec<f64>,
        w_rr: Vec<f64>,
    ) -> Result<Self, OdeError> {
        if (mesh.m - params.m).abs() > 1e-12 * params.m {
            return Err(OdeError::InvalidMesh(format!(
                "mesh built for m = {} but params have m = {}",
                mesh.m, params.m
            )));
        }
        if w.len() != mesh.len() || w_r.len() != mesh.len() || w_rr.len() != mesh.len() {
            return Err(OdeError::MeshMismatch);
        }
        Ok(Self {
            params,
            mesh,
            w,
            w_r,
            w_rr,
        })
    }

    pub fn zero(params: OdeParams, mesh: RadialMesh) -> Result<Self, OdeError> {
        let n = mesh.len();
        Self::new(params, mesh, vec![0.0; n], vec![0.0; n], vec![0.0; n])
    }

    /// c·h restricted to the mesh.
    pub fn scaled_model(params: OdeParams, mesh: RadialMesh, c: f64) -> Result<Self, OdeError> {
        let (w, w_r, w_rr) = (
            mesh.h.iter().map(|v| c * v).collect(),
            mesh.h_r.iter().map(|v| c * v).collect(),
            mesh.h_rr.iter().map(|v| c * v).collect(),
        );
        Self::new(params, mesh, w, w_r, w_rr)
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn r(&self) -> &[f64] {
        &self.mesh.r
    }

    pub fn r0(&self) -> f64 {
        self.mesh.r0
    }

    fn same_mesh(&self, other: &Self) -> Result<(), OdeError> {
        if self.mesh.r != other.mesh.r {
            return Err(OdeError::MeshMismatch);
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self, OdeError> {
        self.same_mesh(other)?;
        let z = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect();
        Ok(Self {
            params: self.params,
            mesh: self.mesh.clone(),
            w: z(&self.w, &other.w),
            w_r: z(&self.w_r, &other.w_r),
            w_rr: z(&self.w_rr, &other.w_rr),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, OdeError> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self, OdeError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, c: f64) -> Self {
        let s = |v: &[f64]| v.iter().map(|x| c * x).collect();
        Self {
            params: self.params,
            mesh: self.mesh.clone(),
            w: s(&self.w),
            w_r: s(&self.w_r),
            w_rr: s(&self.w_rr),
        }
    }

    /// ‖w‖_{C^k_w} over the whole mesh.
    pub fn norm(&self, k: usize) -> f64 {
        weighted_norm(self, k, self.len() - 1).value
    }

    /// ‖w‖_{C^k_w((0, r_j])} for every node j (prefix maxima).
    pub fn running_norm(&self, k: usize) -> Vec<f64> {
        let mut acc = 0.0f64;
        (0..self.len())
            .map(|j| {
                acc = acc.max(node_weighted(self, k, j));
                acc
            })
            .collect()
    }

    /// E[w] at every node.
    pub fn error_values(&self) -> Result<Vec<f64>, OdeError> {
        (0..self.len())
            .map(|j| error_functional(self, j).map(|e| e.total))
            .collect()
    }

    /// `r,w,w_r,w_rr,h,h_r,h_rr,E`; E is left empty where it is undefined.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,w,w_r,w_rr,h,h_r,h_rr,E\n");
        for j in 0..self.len() {
            let e = error_functional(self, j)
                .map(|e| format!("{:.16e}", e.total))
                .unwrap_or_default();
            let mk = &self.mesh;
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                mk.r[j], self.w[j], self.w_r[j], self.w_rr[j], mk.h[j], mk.h_r[j], mk.h_rr[j], e
            );
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Brackets {
    /// w_r/h_r
    pub r: f64,
    /// [w]_r − w/(r h_r)
    pub s: f64,
    /// w_rr/h_rr
    pub rr: f64,
}

pub fn brackets(w: &RadialProfile, node: usize) -> Brackets {
    let mk = &w.mesh;
    let br = w.w_r[node] / mk.h_r[node];
    Brackets {
        r: br,
        s: br - w.w[node] / (mk.r[node] * mk.h_r[node]),
        rr: w.w_rr[node] / mk.h_rr[node],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormReport {
    pub k: usize,
    /// Right end of the interval (0, r].
    pub r: f64,
    pub value: f64,
    pub argmax: usize,
}

fn node_weighted(w: &RadialProfile, k: usize, j: usize) -> f64 {
    let mk = &w.mesh;
    let r = mk.r[j];
    let terms = [w.w[j] / r, w.w_r[j], r * w.w_rr[j]];
    terms[..=k.min(2)]
        .iter()
        .map(|t| t.abs() / mk.h_r[j])
        .fold(0.0, f64::max)
}

/// max over l ≤ k of sup over mesh nodes in (0, r_upto] of |r^{l−1} h_r^{−1} w^{(l)}|.
pub fn weighted_norm(w: &RadialProfile, k: usize, upto: usize) -> NormReport {
    let upto = upto.min(w.len() - 1);
    let (mut value, mut argmax) = (0.0f64, 0usize);
    for j in 0..=upto {
        let v = node_weighted(w, k, j);
        if v > value {
            (value, argmax) = (v, j);
        }
    }
    NormReport {
        k: k.min(2),
        r: w.mesh.r[upto],
        value,
        argmax,
    }
}

/// The six parts of E[w] = P₁ + P₂ + Q + R₁ − R₂ − R₃ at one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorParts {
    pub p1: f64,
    pub p2: f64,
    pub q: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub total: f64,
}

/// (1+x)^a − 1 without cancellation.
fn pow1p_m1(x: f64, a: f64) -> f64 {
    (a * x.ln_1p()).exp_m1()
}

pub fn error_functional(w: &RadialProfile, node: usize) -> Result<ErrorParts, OdeError> {
    let OdeParams { n, p, m, .. } = w.params;
    let n1 = n as f64 - 1.0;
    let r = w.mesh.r[node];
    let h_r = w.mesh.h_r[node];
    let b = brackets(w, node);
    let z = 1.0 + b.r;
    // Y − Z, kept separate so that Q does not cancel
    let y_minus_z = r / (m + 1.0) + r * b.s;
    let y = z + y_minus_z;
    if !(y > 0.0 && z > 0.0) {
        return Err(OdeError::ModulusNonpositive { r, y, z });
    }
    let x_m1 = h_r * h_r * z * z;
    let xe = 0.5 * (m + 2.0);
    let y_pow = if p == 1.0 { 1.0 } else { y.powf(1.0 - p) };

    let p1 = pow1p_m1(r, n1) * (1.0 + x_m1).powf(xe) * y_pow;
    let p2 = pow1p_m1(x_m1, xe) * y_pow;
    let (q, r1) = if p == 1.0 {
        (0.0, 0.0)
    } else {
        (
            z.powf(1.0 - p) * pow1p_m1(y_minus_z / z, 1.0 - p),
            pow1p_m1(b.r, 1.0 - p) - (1.0 - p) * b.r,
        )
    };
    let zn = pow1p_m1(b.r, n1);
    let r2 = b.rr * zn;
    let r3 = zn - n1 * b.r;
    Ok(ErrorParts {
        p1,
        p2,
        q,
        r1,
        r2,
        r3,
        total: p1 + p2 + q + r1 - r2 - r3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn setup(n: usize, p: f64, r0: f64, nodes: usize) -> (OdeParams, RadialMesh) {
        let params = OdeParams::new(n, p).unwrap();
        (params, RadialMesh::new(params.m, r0, nodes).unwrap())
    }

    #[test]
    fn brackets_of_model() {
        for m in [0.5, 1.0, 2.5] {
            let params = OdeParams::from_m(3, m).unwrap();
            let mesh = RadialMesh::new(m, 1.0, 32).unwrap();
            let h = RadialProfile::scaled_model(params, mesh.clone(), 1.0).unwrap();
            let z = RadialProfile::zero(params, mesh.clone()).unwrap();
            for j in [0, 7, 31] {
                let b = brackets(&h, j);
                assert!((b.r - 1.0).abs() < 1e-14 && (b.rr - 1.0).abs() < 1e-14);
                assert!((b.s - 1.0 / (1.0 + m)).abs() < 1e-14);
                let b0 = brackets(&z, j);
                assert_eq!((b0.r, b0.s, b0.rr), (0.0, 0.0, 0.0));
                let b3 = brackets(&h.scale(-2.5), j);
                assert!((b3.s + 2.5 * b.s).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn model_norm_is_one_half() {
        let (params, mesh) = setup(2, 0.0, 1.0, 256);
        let h = RadialProfile::scaled_model(params, mesh.clone(), 1.0).unwrap();
        let rep = weighted_norm(&h, 0, 255);
        assert!((rep.value - 0.5).abs() < 1e-14, "{rep:?}");
        assert_eq!(rep.r, 1.0);
        // l = 1, 2 terms of h are 1 and r h_rr/h_r = 1/m
        assert!((h.norm(2) - 1.0).abs() < 1e-14);
        assert_eq!(RadialProfile::zero(params, mesh).unwrap().norm(2), 0.0);
        assert!((h.scale(-3.0).norm(2) - 3.0).abs() < 1e-13);
    }

    #[test]
    fn running_norm_is_monotone() {
        let (params, mesh) = setup(2, 0.5, 0.3, 128);
        let g: Vec<f64> = mesh.r.iter().map(|r| (10.0 * r).cos()).collect();
        let w = super::super::integral_operator(&params, &mesh, &g).unwrap();
        let run = w.running_norm(2);
        assert!(run.windows(2).all(|p| p[0] <= p[1]));
        assert_eq!(*run.last().unwrap(), w.norm(2));
    }

    #[test]
    fn zero_profile_parts() {
        // (n, p) = (2, 0), r = 0.1: E(0) against an independent high-precision evaluation
        let params = OdeParams::new(2, 0.0).unwrap();
        let mesh = RadialMesh::new(1.0, 0.1, 8).unwrap();
        let z = RadialProfile::zero(params, mesh).unwrap();
        let e = error_functional(&z, 7).unwrap();
        assert!((e.total - 0.17236824058185745).abs() < 1e-15, "{e:?}");
        assert_eq!((e.r1, e.r2, e.r3), (0.0, 0.0, 0.0));
        assert!((e.q - (1.0 + 0.1 / 2.0 - 1.0)).abs() < 1e-15);
        let x: f64 = 1.0 + 0.01;
        assert!((e.p1 - 0.1 * x.powf(1.5) * 1.05).abs() < 1e-15);
        assert!((e.p2 - (x.powf(1.5) - 1.0) * 1.05).abs() < 1e-15);
    }

    #[test]
    fn p_equal_one_has_no_q_or_r1() {
        let (params, mesh) = setup(2, 1.0, 0.2, 16);
        let w = RadialProfile::scaled_model(params, mesh, 0.05).unwrap();
        for j in 0..16 {
            let e = error_functional(&w, j).unwrap();
            assert_eq!((e.q, e.r1), (0.0, 0.0));
        }
    }

    #[test]
    fn zero_error_vanishes_at_origin() {
        let (params, mesh) = setup(3, 0.5, 1.0, 4096);
        let z = RadialProfile::zero(params, mesh).unwrap();
        let e = z.error_values().unwrap();
        assert!(e[0].abs() < 1e-3 && e[0].abs() < e[4095].abs());
    }

    #[test]
    fn escaping_iterate_is_reported() {
        let (params, mesh) = setup(2, 0.5, 0.2, 16);
        let w = RadialProfile::scaled_model(params, mesh, -1.5).unwrap();
        assert!(matches!(
            error_functional(&w, 3),
            Err(OdeError::ModulusNonpositive { .. })
        ));
    }

    #[test]
    fn csv_shape() {
        let (params, mesh) = setup(2, 0.0, 0.2, 16);
        let csv = RadialProfile::zero(params, mesh).unwrap().to_csv();
        assert!(csv.starts_with("r,w,w_r,w_rr,h,h_r,h_rr,E\n"));
        assert_eq!(csv.lines().count(), 17);
    }

    proptest! {
        #[test]
        fn error_matches_direct_form(n in 1usize..4, p in -0.5f64..2.0, c in -0.2f64..0.2, j in 0usize..64) {
            // E[w] = (1+r)^{n−1}X^{(m+2)/2}Y^{1−p} − (1−p)[w]_r − [w]_rr(Z^{n−1} − 1) − Z^{n−1} + (n−1)[w]_r
            prop_assume!(n as f64 + p - 1.0 > 0.2);
            let (params, mesh) = setup(n, p, 0.5, 64);
            let w = RadialProfile::scaled_model(params, mesh.clone(), c).unwrap();
            let e = error_functional(&w, j).unwrap().total;
            let (r, hr) = (mesh.r[j], mesh.h_r[j]);
            let m = params.m;
            let b = brackets(&w, j);
            let (x, y, z) = (1.0 + hr * hr * (1.0 + b.r).powi(2), 1.0 + r / (m + 1.0) + b.r + r * b.s, 1.0 + b.r);
            let n1 = n as f64 - 1.0;
            let direct = (1.0 + r).powf(n1) * x.powf(0.5 * (m + 2.0)) * y.powf(1.0 - p) - (1.0 - p) * b.r
                - b.rr * (z.powf(n1) - 1.0) - z.powf(n1) + n1 * b.r;
            prop_assert!((e - direct).abs() < 1e-12 * (1.0 + direct.abs()));
        }
    }
}
