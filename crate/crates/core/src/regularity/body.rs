use std::f64::consts::PI;

use serde::Serialize;

use super::RegularityError;
use crate::minkowski::RadialProfile;

const FLAT_SAMPLES: usize = 17;
const CAP_SAMPLES: usize = 4096;

/// Lower half of the ellipse ρ = A sinψ, y = y_c − B cosψ, ψ ∈ [ψ_start, π],
/// rotated about the axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipseCap {
    pub a: f64,
    pub b: f64,
    pub center: f64,
    pub psi_start: f64,
}

impl EllipseCap {
    /// The unique axis-centred ellipse through (ρ, y) with slope y' and
    /// curvature y''. Needs 0 < y' < ρy''.
    pub fn matched(rho: f64, height: f64, slope: f64, second: f64) -> Result<Self, RegularityError> {
        if !(slope > 0.0 && second > 0.0 && slope < rho * second) {
            return Err(RegularityError::ConvexityLost(format!(
                "cannot close with an ellipse at rho = {rho}: y' = {slope}, y'' = {second}"
            )));
        }
        let q = slope / (rho * second);
        let a2 = rho * rho / (1.0 - q);
        let b = second * a2 * q.powf(1.5);
        let a = a2.sqrt();
        Ok(Self {
            a,
            b,
            center: height + b * q.sqrt(),
            psi_start: (rho / a).min(1.0).asin(),
        })
    }

    pub fn point(&self, psi: f64) -> (f64, f64) {
        (self.a * psi.sin(), self.center - self.b * psi.cos())
    }

    /// Angle of the outward normal from −e_z.
    pub fn normal_angle(&self, psi: f64) -> f64 {
        (psi.sin() / self.a).atan2(psi.cos() / self.b)
    }

    fn speed(&self, psi: f64) -> f64 {
        (self.a * psi.cos()).hypot(self.b * psi.sin())
    }

    fn meridian_curvature(&self, psi: f64) -> f64 {
        self.a * self.b / self.speed(psi).powi(3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeridianPoint {
    pub rho: f64,
    pub height: f64,
    /// Angle of the outward normal from −e_z; 0 on the flat side.
    pub normal_angle: f64,
}

/// Rotation body: flat disk |x| ≤ 1 in {y = 0}, the graph y = v̄(|x| − 1) for
/// 1 ≤ |x| ≤ 1 + r_J, then an ellipse cap matched to second order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialGraphBody {
    pub n: usize,
    pub rho: Vec<f64>,
    pub height: Vec<f64>,
    pub slope: Vec<f64>,
    pub second: Vec<f64>,
    pub cap: EllipseCap,
}

pub fn build_glued_body(profile: &RadialProfile) -> Result<RadialGraphBody, RegularityError> {
    let mesh = &profile.mesh;
    let len = profile.len();
    let v: Vec<f64> = (0..len).map(|j| mesh.h[j] + profile.w[j]).collect();
    let half = 0.5 * v[len - 1];
    let junction = v.iter().position(|&x| x >= half).unwrap_or(len - 1);
    if junction < 2 {
        return Err(RegularityError::InvalidInput(format!(
            "junction at node {junction} leaves too few graph samples"
        )));
    }
    let mut body = RadialGraphBody {
        n: profile.params.n,
        rho: Vec::with_capacity(junction + 1),
        height: Vec::with_capacity(junction + 1),
        slope: Vec::with_capacity(junction + 1),
        second: Vec::with_capacity(junction + 1),
        cap: EllipseCap {
            a: 0.0,
            b: 0.0,
            center: 0.0,
            psi_start: 0.0,
        },
    };
    for j in 0..=junction {
        let (v_r, v_rr) = (mesh.h_r[j] + profile.w_r[j], mesh.h_rr[j] + profile.w_rr[j]);
        if !(v_r > 0.0 && v_rr > 0.0) {
            return Err(RegularityError::ConvexityLost(format!(
                "v_r = {v_r}, v_rr = {v_rr} at r = {}",
                mesh.r[j]
            )));
        }
        body.rho.push(1.0 + mesh.r[j]);
        body.height.push(v[j]);
        body.slope.push(v_r);
        body.second.push(v_rr);
    }
    body.cap = EllipseCap::matched(body.rho[junction], v[junction], body.slope[junction], body.second[junction])?;
    Ok(body)
}

/// |S^{k}|.
fn sphere_area(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * sphere_area(k - 2),
    }
}

/// One piece of the curved boundary: normal angles and dS_p density per unit
/// parameter at both ends.
struct Segment {
    theta: [f64; 2],
    dens: [f64; 2],
    step: f64,
}

impl RadialGraphBody {
    fn cap_psi(&self, i: usize) -> f64 {
        let s = self.cap.psi_start;
        s + (PI - s) * i as f64 / CAP_SAMPLES as f64
    }

    pub fn meridian(&self) -> Vec<MeridianPoint> {
        let mut out: Vec<MeridianPoint> = (0..FLAT_SAMPLES - 1)
            .map(|i| MeridianPoint {
                rho: i as f64 / (FLAT_SAMPLES - 1) as f64,
                height: 0.0,
                normal_angle: 0.0,
            })
            .collect();
        out.push(MeridianPoint {
            rho: 1.0,
            height: 0.0,
            normal_angle: 0.0,
        });
        for j in 0..self.rho.len() {
            out.push(MeridianPoint {
                rho: self.rho[j],
                height: self.height[j],
                normal_angle: self.slope[j].atan(),
            });
        }
        for i in 1..=CAP_SAMPLES {
            let psi = self.cap_psi(i);
            let (rho, height) = self.cap.point(psi);
            out.push(MeridianPoint {
                rho: rho.max(0.0),
                height,
                normal_angle: self.cap.normal_angle(psi),
            });
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("rho,height,normal_angle\n");
        for p in self.meridian() {
            s.push_str(&format!("{:.12e},{:.12e},{:.12e}\n", p.rho, p.height, p.normal_angle));
        }
        s
    }

    /// Normal angle is 0 on the flat side and strictly increasing past it.
    pub fn normal_angle_monotone(&self) -> bool {
        let pts = self.meridian();
        let flat_ok = pts[..FLAT_SAMPLES].iter().all(|p| p.normal_angle == 0.0);
        flat_ok && pts[FLAT_SAMPLES..].windows(2).all(|w| w[1].normal_angle > w[0].normal_angle)
    }

    /// (normal angle, u^{1−p}/K) along the curved boundary, K the Gauss
    /// curvature. Equals the prescribed density where the profile solves the ODE.
    pub fn recovered_density(&self, p: f64) -> Vec<(f64, f64)> {
        let k = self.n as i32 - 1;
        let mut out = Vec::with_capacity(self.rho.len() + CAP_SAMPLES);
        for j in 0..self.rho.len() {
            let (rho, v, v_r, v_rr) = (self.rho[j], self.height[j], self.slope[j], self.second[j]);
            let root = (1.0 + v_r * v_r).sqrt();
            let u = (rho * v_r - v) / root;
            let gauss = v_rr / root.powi(3) * (v_r / (rho * root)).powi(k);
            out.push((v_r.atan(), u.powf(1.0 - p) / gauss));
        }
        for i in 1..CAP_SAMPLES {
            let psi = self.cap_psi(i);
            let (rho, y) = self.cap.point(psi);
            let theta = self.cap.normal_angle(psi);
            let u = rho * theta.sin() - y * theta.cos();
            let gauss = self.cap.meridian_curvature(psi) * (theta.sin() / rho).powi(k);
            out.push((theta, u.powf(1.0 - p) / gauss));
        }
        out
    }

    fn segments(&self, p: f64) -> Vec<Segment> {
        let area = sphere_area(self.n - 1);
        let k = self.n as i32 - 1;
        let mut out = Vec::with_capacity(self.rho.len() + CAP_SAMPLES);
        // graph part, parametrised by ρ, starting at the rim of the flat side
        let (mut t0, mut d0, mut r0) = (0.0, 0.0, 1.0);
        for j in 0..self.rho.len() {
            let (rho, v, v_r) = (self.rho[j], self.height[j], self.slope[j]);
            let root = (1.0 + v_r * v_r).sqrt();
            let u = ((rho * v_r - v) / root).max(0.0);
            let d = area * u.powf(1.0 - p) * rho.powi(k) * root;
            let t = v_r.atan();
            out.push(Segment {
                theta: [t0, t],
                dens: [d0, d],
                step: rho - r0,
            });
            (t0, d0, r0) = (t, d, rho);
        }
        let dpsi = (PI - self.cap.psi_start) / CAP_SAMPLES as f64;
        let cap_density = |psi: f64| {
            let (rho, y) = self.cap.point(psi);
            let theta = self.cap.normal_angle(psi);
            let u = (rho * theta.sin() - y * theta.cos()).max(0.0);
            (theta, area * u.powf(1.0 - p) * rho.max(0.0).powi(k) * self.cap.speed(psi))
        };
        let (mut ta, mut da) = cap_density(self.cap_psi(0));
        for i in 1..=CAP_SAMPLES {
            let (tb, db) = cap_density(self.cap_psi(i));
            out.push(Segment {
                theta: [ta, tb],
                dens: [da, db],
                step: dpsi,
            });
            (ta, da) = (tb, db);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapMass {
    pub angle: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatPartReport {
    pub p: f64,
    pub total_mass: f64,
    pub caps: Vec<CapMass>,
    /// Cap masses are non-increasing as the cap angle shrinks.
    pub decreasing: bool,
    /// Mass of the smallest cap over the total.
    pub final_fraction: f64,
}

impl FlatPartReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// S_p mass of the normal cones {θ < angle} around −e_z, i.e. of the flat
/// side and the part of the boundary whose normals lie within `angle` of it.
/// For p < 1 the flat side itself carries no mass, so the caps shrink to 0.
pub fn flat_part_measure_check(
    body: &RadialGraphBody,
    p: f64,
    cap_angles: &[f64],
) -> Result<FlatPartReport, RegularityError> {
    if !(p < 1.0) {
        return Err(RegularityError::InvalidInput(format!("needs p < 1, got {p}")));
    }
    if cap_angles.is_empty() || cap_angles.iter().any(|a| !(*a > 0.0 && *a <= PI)) {
        return Err(RegularityError::InvalidInput("cap angles must lie in (0, pi]".into()));
    }
    let segs = body.segments(p);
    let mass_below = |angle: f64| {
        let mut acc = 0.0;
        for s in &segs {
            let [ta, tb] = s.theta;
            let [da, db] = s.dens;
            if tb <= angle {
                acc += 0.5 * s.step * (da + db);
            } else if ta < angle {
                let t = (angle - ta) / (tb - ta);
                acc += s.step * (t * da + 0.5 * t * t * (db - da));
            } else {
                break;
            }
        }
        acc
    };
    let total_mass = mass_below(PI + 1.0);
    let caps: Vec<CapMass> = cap_angles
        .iter()
        .map(|&angle| CapMass {
            angle,
            mass: mass_below(angle),
        })
        .collect();
    let mut order: Vec<&CapMass> = caps.iter().collect();
    order.sort_by(|a, b| b.angle.total_cmp(&a.angle));
    let decreasing = order.windows(2).all(|w| w[1].mass <= w[0].mass);
    let smallest = order.last().map(|c| c.mass).unwrap_or(0.0);
    Ok(FlatPartReport {
        p,
        total_mass,
        caps,
        decreasing,
        final_fraction: smallest / total_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minkowski::{solve_profile_with, OdeParams};

    #[test]
    fn ellipse_match_is_second_order() {
        let cap = EllipseCap::matched(1.2, 0.3, 0.4, 2.0).unwrap();
        let psi = cap.psi_start;
        let (rho, y) = cap.point(psi);
        assert!((rho - 1.2).abs() < 1e-12 && (y - 0.3).abs() < 1e-12);
        assert!((cap.normal_angle(psi).tan() - 0.4).abs() < 1e-12);
        // graph curvature y''/(1+y'²)^{3/2} equals the ellipse curvature
        let k = 2.0 / (1.0f64 + 0.16).powf(1.5);
        assert!((cap.meridian_curvature(psi) - k).abs() < 1e-12);
        assert!(EllipseCap::matched(1.0, 0.0, 3.0, 2.0).is_err());
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
    }

    fn model_body(n: usize, p: f64) -> RadialGraphBody {
        let params = OdeParams::new(n, p).unwrap();
        let (profile, _) = solve_profile_with(&params, 0.5, 1e-12, 1024).unwrap();
        build_glued_body(&profile).unwrap()
    }

    #[test]
    fn glued_body_is_convex_and_consistent() {
        let body = model_body(2, 0.5);
        assert!(body.normal_angle_monotone());
        let csv = body.to_csv();
        assert!(csv.starts_with("rho,height,normal_angle\n"));
        for (theta, f) in body.recovered_density(0.5).iter().take(body.rho.len()) {
            assert!((f - 1.0).abs() < 1e-6, "theta={theta} f={f}");
        }
    }

    #[test]
    fn flat_caps_vanish() {
        let body = model_body(2, 0.5);
        let angles: Vec<f64> = (0..12).map(|k| 0.2 * 0.5f64.powi(k)).collect();
        let rep = flat_part_measure_check(&body, 0.5, &angles).unwrap();
        assert!(rep.decreasing, "{rep:?}");
        assert!(rep.final_fraction < 1e-6, "{rep:?}");
        assert!(flat_part_measure_check(&body, 1.0, &angles).is_err());
    }

    #[test]
    fn total_mass_for_p_zero_is_three_volumes() {
        // ∫ u dS = (n+1)·Vol; the volume comes from disks π ρ(y)² dy along the meridian
        let body = model_body(2, 0.0);
        let rep = flat_part_measure_check(&body, 0.0, &[0.1]).unwrap();
        let vol: f64 = body
            .meridian()
            .windows(2)
            .map(|w| 0.5 * PI * (w[0].rho.powi(2) + w[1].rho.powi(2)) * (w[1].height - w[0].height))
            .sum();
        assert!((rep.total_mass / (3.0 * vol) - 1.0).abs() < 1e-4, "{} {}", rep.total_mass, 3.0 * vol);
    }
}
