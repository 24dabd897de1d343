use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Which sphere the support function lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    /// Periodic grid on S¹, angle θ ∈ [0, 2π).
    Circle,
    /// Meridian grid on S² for rotationally symmetric bodies, polar angle φ ∈ [0, π]
    /// measured from the +z axis.
    Axisymmetric,
}

impl GridKind {
    /// Dimension n of the sphere Sⁿ (and of the hypersurface).
    pub fn dimension(self) -> usize {
        match self {
            GridKind::Circle => 1,
            GridKind::Axisymmetric => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GridKind::Circle => "circle",
            GridKind::Axisymmetric => "axisymmetric",
        }
    }

    /// Component of the unit direction at `angle` along the distinguished axis
    /// (y for the circle, z for the axisymmetric sphere).
    pub fn axis_component(self, angle: f64) -> f64 {
        match self {
            GridKind::Circle => angle.sin(),
            GridKind::Axisymmetric => angle.cos(),
        }
    }

    /// Area of the unit sphere Sⁿ.
    pub fn sphere_area(self) -> f64 {
        match self {
            GridKind::Circle => 2.0 * PI,
            GridKind::Axisymmetric => 4.0 * PI,
        }
    }
}

impl std::str::FromStr for GridKind {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "circle" => Ok(GridKind::Circle),
            "axisymmetric" => Ok(GridKind::Axisymmetric),
            other => Err(GeometryError::InvalidGrid(format!("unknown grid kind `{other}`"))),
        }
    }
}

/// Uniform angular grid.
///
/// Circle grids are periodic with an even node count (so that every node has an
/// antipodal node). Axisymmetric grids include both poles and have an odd node
/// count so that the equator is a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    kind: GridKind,
    node_count: usize,
}

impl GridSpec {
    pub fn circle(node_count: usize) -> Result<Self, GeometryError> {
        Self::new(GridKind::Circle, node_count)
    }

    pub fn axisymmetric(node_count: usize) -> Result<Self, GeometryError> {
        Self::new(GridKind::Axisymmetric, node_count)
    }

    pub fn new(kind: GridKind, node_count: usize) -> Result<Self, GeometryError> {
        match kind {
            GridKind::Circle if node_count < 16 || node_count % 2 != 0 => {
                Err(GeometryError::InvalidGrid(format!(
                    "circle grid needs an even node count >= 16, got {node_count}"
                )))
            }
            GridKind::Axisymmetric if node_count < 17 || node_count % 2 == 0 => {
                Err(GeometryError::InvalidGrid(format!(
                    "axisymmetric grid needs an odd node count >= 17, got {node_count}"
                )))
            }
            _ => Ok(Self { kind, node_count }),
        }
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn dimension(&self) -> usize {
        self.kind.dimension()
    }

    /// Uniform angular spacing in radians.
    pub fn spacing(&self) -> f64 {
        match self.kind {
            GridKind::Circle => 2.0 * PI / self.node_count as f64,
            GridKind::Axisymmetric => PI / (self.node_count - 1) as f64,
        }
    }

    pub fn angle(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.node_count).map(|j| self.angle(j)).collect()
    }

    /// Node whose direction is −z for the direction z of node `j`.
    pub fn antipode(&self, j: usize) -> usize {
        match self.kind {
            GridKind::Circle => (j + self.node_count / 2) % self.node_count,
            GridKind::Axisymmetric => self.node_count - 1 - j,
        }
    }

    /// Unit direction of node `j` in the plane of the grid: (cos θ, sin θ) for the
    /// circle, (sin φ, cos φ) = (radial, axial) in the meridian plane otherwise.
    pub fn direction(&self, j: usize) -> [f64; 2] {
        let a = self.angle(j);
        match self.kind {
            GridKind::Circle => [a.cos(), a.sin()],
            GridKind::Axisymmetric => [a.sin(), a.cos()],
        }
    }

    /// Unit tangent in the direction of increasing angle, same plane as [`Self::direction`].
    pub fn tangent(&self, j: usize) -> [f64; 2] {
        let a = self.angle(j);
        match self.kind {
            GridKind::Circle => [-a.sin(), a.cos()],
            GridKind::Axisymmetric => [a.cos(), -a.sin()],
        }
    }

    /// Angular interval of the spherical cell around node `j`.
    pub fn cell_bounds(&self, j: usize) -> (f64, f64) {
        let h = self.spacing();
        let a = self.angle(j);
        match self.kind {
            GridKind::Circle => (a - 0.5 * h, a + 0.5 * h),
            GridKind::Axisymmetric => ((a - 0.5 * h).max(0.0), (a + 0.5 * h).min(PI)),
        }
    }

    /// Spherical measure of the cell around node `j`. The cells tile the sphere
    /// exactly.
    pub fn cell_area(&self, j: usize) -> f64 {
        let (lo, hi) = self.cell_bounds(j);
        match self.kind {
            GridKind::Circle => hi - lo,
            GridKind::Axisymmetric => 2.0 * PI * (lo.cos() - hi.cos()),
        }
    }

    pub fn cell_areas(&self) -> Vec<f64> {
        (0..self.node_count).map(|j| self.cell_area(j)).collect()
    }

    pub fn is_pole(&self, j: usize) -> bool {
        self.kind == GridKind::Axisymmetric && (j == 0 || j + 1 == self.node_count)
    }
}
