use super::support::{stencil_d1, stencil_d2};
use super::{GeometryError, GridKind, GridSpec, SupportFunction};

/// Principal radii at one node (one for curves, two for axisymmetric surfaces).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrincipalRadii {
    values: [f64; 2],
    count: usize,
}

impl PrincipalRadii {
    pub fn as_slice(&self) -> &[f64] {
        &self.values[..self.count]
    }

    /// Meridian (or only) radius.
    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn min(&self) -> f64 {
        self.as_slice().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// det(u_ij + u δ_ij), i.e. 1/K.
    pub fn product(&self) -> f64 {
        self.as_slice().iter().product()
    }

    pub fn gauss(&self) -> f64 {
        self.as_slice().iter().map(|r| 1.0 / r).product()
    }

    pub fn mean(&self) -> f64 {
        self.as_slice().iter().map(|r| 1.0 / r).sum()
    }

    pub fn max_curvature(&self) -> f64 {
        1.0 / self.min()
    }
}

/// Principal radii at node `j` from the second-order stencils.
///
/// Circle: r = u_θθ + u. Axisymmetric: r₁ = u_φφ + u (meridian) and
/// r₂ = u_φ cot φ + u (parallel), with r₂ = r₁ at the poles.
#[inline]
pub fn radii_at(grid: &GridSpec, values: &[f64], j: usize) -> PrincipalRadii {
    let r1 = stencil_d2(grid, values, j) + values[j];
    match grid.kind() {
        GridKind::Circle => PrincipalRadii {
            values: [r1, 0.0],
            count: 1,
        },
        GridKind::Axisymmetric => {
            let parallel = |k: usize| stencil_d1(grid, values, k) / grid.angle(k).tan() + values[k];
            let last = values.len() - 1;
            // even quadratic extrapolation keeps the truncation error smooth across the pole
            let r2 = if j == 0 {
                (4.0 * parallel(1) - parallel(2)) / 3.0
            } else if j == last {
                (4.0 * parallel(last - 1) - parallel(last - 2)) / 3.0
            } else {
                parallel(j)
            };
            PrincipalRadii {
                values: [r1, r2],
                count: 2,
            }
        }
    }
}

/// Maximal width over antipodal node pairs, computed on raw values.
pub(crate) fn width_max(grid: &GridSpec, values: &[f64]) -> f64 {
    (0..values.len())
        .map(|j| values[j] + values[grid.antipode(j)])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Relative threshold on principal radii below which a body counts as degenerate.
pub const NON_CONVEX_RELATIVE_TOL: f64 = 1e-10;

/// Tolerance on the pole-limit consistency check, relative to the pole radius.
pub const POLE_RELATIVE_TOL: f64 = 0.05;

/// Validate strict convexity node by node. Returns the first failing node.
pub(crate) fn check_convex(grid: &GridSpec, values: &[f64]) -> Result<(), GeometryError> {
    let tol = NON_CONVEX_RELATIVE_TOL * width_max(grid, values).abs();
    for j in 0..values.len() {
        let radii = radii_at(grid, values, j);
        let rmin = radii.min();
        if !(rmin > tol) {
            return Err(GeometryError::NonConvex { node: j, radius: rmin });
        }
    }
    Ok(())
}

/// Per-node curvature quantities derived from a support function.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureData {
    pub dimension: usize,
    /// `radii[i][j]`: i-th principal radius at node j.
    pub radii: Vec<Vec<f64>>,
    /// `curvatures[i][j] = 1 / radii[i][j]`.
    pub curvatures: Vec<Vec<f64>>,
    pub gauss: Vec<f64>,
    pub mean: Vec<f64>,
}

impl CurvatureData {
    fn from_radii(dimension: usize, per_node: Vec<PrincipalRadii>) -> Self {
        let radii: Vec<Vec<f64>> = (0..dimension)
            .map(|i| per_node.iter().map(|r| r.as_slice()[i]).collect())
            .collect();
        let curvatures = radii
            .iter()
            .map(|row| row.iter().map(|r| 1.0 / r).collect())
            .collect();
        let gauss = per_node.iter().map(PrincipalRadii::gauss).collect();
        let mean = per_node.iter().map(PrincipalRadii::mean).collect();
        Self {
            dimension,
            radii,
            curvatures,
            gauss,
            mean,
        }
    }

    pub fn node_count(&self) -> usize {
        self.gauss.len()
    }

    pub fn max_principal_curvature(&self) -> f64 {
        self.curvatures
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_gauss(&self) -> f64 {
        self.gauss.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn curvature_circle(u: &SupportFunction) -> Result<CurvatureData, GeometryError> {
    if u.grid().kind() != GridKind::Circle {
        return Err(GeometryError::WrongGrid {
            expected: GridKind::Circle,
        });
    }
    curvature(u)
}

pub fn curvature_axisym(u: &SupportFunction) -> Result<CurvatureData, GeometryError> {
    if u.grid().kind() != GridKind::Axisymmetric {
        return Err(GeometryError::WrongGrid {
            expected: GridKind::Axisymmetric,
        });
    }
    curvature(u)
}

/// Curvature on either grid kind, with convexity and pole checks.
pub fn curvature(u: &SupportFunction) -> Result<CurvatureData, GeometryError> {
    let grid = u.grid();
    let values = u.values();
    check_convex(grid, values)?;
    if grid.kind() == GridKind::Axisymmetric {
        check_poles(grid, values)?;
    }
    let per_node = (0..values.len()).map(|j| radii_at(grid, values, j)).collect();
    Ok(CurvatureData::from_radii(grid.dimension(), per_node))
}

/// The pole radius must agree with the linear extrapolation of the parallel
/// radius from the two nearest interior nodes.
fn check_poles(grid: &GridSpec, values: &[f64]) -> Result<(), GeometryError> {
    let last = values.len() - 1;
    for (pole, n1, n2) in [(0, 1, 2), (last, last - 1, last - 2)] {
        let limit = radii_at(grid, values, pole).first();
        let r_a = radii_at(grid, values, n1).as_slice()[1];
        let r_b = radii_at(grid, values, n2).as_slice()[1];
        let extrapolated = 2.0 * r_a - r_b;
        if (limit - extrapolated).abs() > POLE_RELATIVE_TOL * limit.abs().max(extrapolated.abs()) {
            return Err(GeometryError::PoleSingular {
                pole,
                limit,
                extrapolated,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_circle_has_unit_curvature() {
        let u = SupportFunction::ball(GridSpec::circle(64).unwrap(), 1.0);
        let c = curvature_circle(&u).unwrap();
        assert!(c.gauss.iter().all(|k| (k - 1.0).abs() < 1e-14));
        assert!(c.radii[0].iter().all(|r| (r - 1.0).abs() < 1e-14));
        assert_eq!(c.mean, c.gauss);
    }

    #[test]
    fn round_ball_of_radius_r() {
        let u = SupportFunction::ball(GridSpec::circle(32).unwrap(), 2.5);
        let c = curvature_circle(&u).unwrap();
        assert!(c.gauss.iter().all(|k| (k - 0.4).abs() < 1e-14));
    }

    #[test]
    fn ellipse_vertex_curvature_converges_to_a_over_b_squared() {
        // exact: K(θ=0) = a/b² = 2 for a = 2, b = 1
        let mut errs = vec![];
        for n in [128, 256, 512] {
            let u = SupportFunction::ellipsoid(GridSpec::circle(n).unwrap(), 2.0, 1.0);
            let c = curvature_circle(&u).unwrap();
            errs.push((c.gauss[0] - 2.0).abs());
        }
        assert!(errs[2] < 1e-3);
        let order = (errs[1] / errs[2]).log2();
        assert!(order > 1.9, "order {order}");
    }

    #[test]
    fn unit_sphere_axisym() {
        let u = SupportFunction::ball(GridSpec::axisymmetric(33).unwrap(), 1.0);
        let c = curvature_axisym(&u).unwrap();
        for i in 0..2 {
            assert!(c.radii[i].iter().all(|r| (r - 1.0).abs() < 1e-13));
        }
        assert!(c.gauss.iter().all(|k| (k - 1.0).abs() < 1e-13));
        assert!(c.mean.iter().all(|h| (h - 2.0).abs() < 1e-13));
    }

    #[test]
    fn spheroid_pole_gauss_curvature() {
        // polar semi-axis a = 1, equatorial b = 2: pole radii are b²/a = 4, K = 1/16
        let u = SupportFunction::ellipsoid(GridSpec::axisymmetric(257).unwrap(), 1.0, 2.0);
        let c = curvature_axisym(&u).unwrap();
        assert!((c.gauss[0] - 1.0 / 16.0).abs() < 1e-4, "{}", c.gauss[0]);
        // equator: meridian radius a²/b = 0.5, parallel radius b = 2
        let eq = 128;
        assert!((c.radii[0][eq] - 0.5).abs() < 1e-3);
        assert!((c.radii[1][eq] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_grid_kind_is_rejected() {
        let u = SupportFunction::ball(GridSpec::circle(32).unwrap(), 1.0);
        assert!(matches!(curvature_axisym(&u), Err(GeometryError::WrongGrid { .. })));
    }

    #[test]
    fn non_convex_body_is_reported() {
        let g = GridSpec::circle(64).unwrap();
        let u = SupportFunction::from_fn(g, |t| 1.0 + 0.2 * (3.0 * t).cos()).unwrap();
        assert!(matches!(curvature(&u), Err(GeometryError::NonConvex { .. })));
    }

    #[test]
    fn cone_tip_at_pole_is_singular() {
        // ball + equatorial disk: u_φ ≠ 0 at the poles, so the reflected data has a kink
        let g = GridSpec::axisymmetric(65).unwrap();
        let u = SupportFunction::from_fn(g, |p| 1.0 + 0.3 * p.sin()).unwrap();
        assert!(matches!(curvature(&u), Err(GeometryError::PoleSingular { .. })));
    }

    proptest! {
        #[test]
        fn scaling_and_reciprocity(s in 0.05f64..20.0, a in 0.5f64..2.0, b in 0.5f64..2.0) {
            for grid in [GridSpec::circle(64).unwrap(), GridSpec::axisymmetric(65).unwrap()] {
                let u = SupportFunction::ellipsoid(grid, a, b);
                let c = curvature(&u).unwrap();
                let cs = curvature(&u.scaled(s)).unwrap();
                for i in 0..c.dimension {
                    for j in 0..c.node_count() {
                        prop_assert!((c.curvatures[i][j] * c.radii[i][j] - 1.0).abs() <= 2.0 * f64::EPSILON);
                        let rel = (cs.curvatures[i][j] * s - c.curvatures[i][j]).abs() / c.curvatures[i][j];
                        // exact up to roundoff amplified by the second difference
                        prop_assert!(rel < 1e-10);
                    }
                }
                for j in 0..c.node_count() {
                    let prod: f64 = (0..c.dimension).map(|i| c.curvatures[i][j]).product();
                    let sum: f64 = (0..c.dimension).map(|i| c.curvatures[i][j]).sum();
                    prop_assert!((prod - c.gauss[j]).abs() <= 4.0 * f64::EPSILON * c.gauss[j]);
                    prop_assert!((sum - c.mean[j]).abs() <= 4.0 * f64::EPSILON * c.mean[j]);
                }
            }
        }
    }
}
