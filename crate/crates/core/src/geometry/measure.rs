use serde::Serialize;

use super::curvature::{check_convex, radii_at, width_max};
use super::{AnisotropyField, GeometryError, GridKind, GridSpec, SupportFunction};

/// Boundary points x = u·z + u_angle·t in the plane of the grid
/// (meridian plane for axisymmetric bodies).
pub fn body_points(u: &SupportFunction) -> Vec<[f64; 2]> {
    let grid = u.grid();
    (0..u.len())
        .map(|j| {
            let z = grid.direction(j);
            let t = grid.tangent(j);
            let (v, d) = (u.values()[j], u.d1(j));
            [v * z[0] + d * t[0], v * z[1] + d * t[1]]
        })
        .collect()
}

/// max over antipodal node pairs of u(z) + u(−z).
pub fn diameter(u: &SupportFunction) -> f64 {
    width_max(u.grid(), u.values())
}

fn inscribed_objective(grid: &GridSpec, values: &[f64], c: [f64; 2]) -> f64 {
    values
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let z = grid.direction(j);
            v - c[0] * z[0] - c[1] * z[1]
        })
        .fold(f64::INFINITY, f64::min)
}

/// Inradius and the maximizing center.
///
/// Maximizes min_j (u_j − ⟨c, z_j⟩) over centers c by compass search started at
/// the mean of the body points. Axisymmetric bodies only search along the axis.
pub fn inradius_with_center(u: &SupportFunction) -> (f64, [f64; 2]) {
    const CENTER_TOL: f64 = 1e-8;
    let grid = u.grid();
    let values = u.values();
    let pts = body_points(u);
    let mut c = [0.0, 0.0];
    for p in &pts {
        c[0] += p[0];
        c[1] += p[1];
    }
    c = [c[0] / pts.len() as f64, c[1] / pts.len() as f64];
    let dirs: Vec<[f64; 2]> = match grid.kind() {
        GridKind::Circle => (0..16)
            .map(|k| {
                let a = k as f64 * std::f64::consts::PI / 8.0;
                [a.cos(), a.sin()]
            })
            .collect(),
        GridKind::Axisymmetric => {
            c[0] = 0.0;
            vec![[0.0, 1.0], [0.0, -1.0]]
        }
    };
    let mut best = inscribed_objective(grid, values, c);
    let mut step = 0.25 * diameter(u).abs().max(f64::MIN_POSITIVE);
    while step > CENTER_TOL {
        let mut moved = false;
        for d in &dirs {
            let trial = [c[0] + step * d[0], c[1] + step * d[1]];
            let val = inscribed_objective(grid, values, trial);
            if val > best {
                best = val;
                c = trial;
                moved = true;
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (best, c)
}

pub fn inradius(u: &SupportFunction) -> f64 {
    inradius_with_center(u).0
}

/// Enclosed volume (1/(n+1)) ∫ u dS.
pub fn volume(u: &SupportFunction) -> Result<f64, GeometryError> {
    let grid = u.grid();
    check_convex(grid, u.values())?;
    let n = grid.dimension() as f64;
    let sum: f64 = (0..u.len())
        .map(|j| u.values()[j] * radii_at(grid, u.values(), j).product() * grid.cell_area(j))
        .sum();
    Ok(sum / (n + 1.0))
}

/// Discrete Lp surface area measure: one weight per grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpMeasure {
    pub p: f64,
    pub grid: GridSpec,
    pub weights: Vec<f64>,
}

impl LpMeasure {
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn cell_bounds(&self, j: usize) -> (f64, f64) {
        self.grid.cell_bounds(j)
    }

    pub fn mass_of(&self, cells: &[usize]) -> f64 {
        cells.iter().map(|&j| self.weights[j]).sum()
    }
}

/// Weight of cell j is u^{1−p}·(1/K)·(cell area).
pub fn lp_measure(u: &SupportFunction, p: f64) -> Result<LpMeasure, GeometryError> {
    let grid = u.grid();
    let values = u.values();
    check_convex(grid, values)?;
    let tol = 1e-12 * width_max(grid, values).abs();
    let min_u = u.min_value();
    if p > 1.0 && min_u <= tol {
        return Err(GeometryError::OriginOnBoundary { min_u, p });
    }
    if p != 1.0 && min_u < -tol {
        return Err(GeometryError::OriginOutside { min_u });
    }
    let weights = (0..values.len())
        .map(|j| {
            let lp = if p == 1.0 { 1.0 } else { values[j].max(0.0).powf(1.0 - p) };
            lp * radii_at(grid, values, j).product() * grid.cell_area(j)
        })
        .collect();
    Ok(LpMeasure {
        p,
        grid: *grid,
        weights,
    })
}

/// Disjoint groups of grid cells (the Borel sets tested in the generalized
/// solution identity).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(grid: &GridSpec, blocks: Vec<Vec<usize>>) -> Result<Self, GeometryError> {
        let mut seen = vec![false; grid.node_count()];
        for &j in blocks.iter().flatten() {
            if j >= seen.len() {
                return Err(GeometryError::BadPartition(format!("node {j} out of range")));
            }
            if std::mem::replace(&mut seen[j], true) {
                return Err(GeometryError::BadPartition(format!("node {j} used twice")));
            }
        }
        Ok(Self { blocks })
    }

    /// One block per cell.
    pub fn cells(grid: &GridSpec) -> Self {
        Self {
            blocks: (0..grid.node_count()).map(|j| vec![j]).collect(),
        }
    }

    /// `count` arcs of equal angular length; cells are assigned by node angle, so
    /// the blocks are fixed sets under grid refinement.
    pub fn arcs(grid: &GridSpec, count: usize) -> Self {
        let span = match grid.kind() {
            GridKind::Circle => 2.0 * std::f64::consts::PI,
            GridKind::Axisymmetric => std::f64::consts::PI,
        };
        let mut blocks = vec![Vec::new(); count.max(1)];
        for j in 0..grid.node_count() {
            let k = ((grid.angle(j) / span * count as f64 + 1e-9).floor() as usize).min(count - 1);
            blocks[k].push(j);
        }
        Self { blocks }
    }

    /// Drop every cell whose angular interval meets `[lo, hi]`.
    pub fn excluding_angles(&self, grid: &GridSpec, lo: f64, hi: f64) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                b.iter()
                    .copied()
                    .filter(|&j| {
                        let (a, c) = grid.cell_bounds(j);
                        c <= lo || a >= hi
                    })
                    .collect::<Vec<_>>()
            })
            .filter(|b| !b.is_empty())
            .collect();
        Self { blocks }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralizedResidual {
    /// ∫_E dS_p − ∫_E f dσ per block.
    pub residuals: Vec<f64>,
    /// ∫_E f dσ per block.
    pub target: Vec<f64>,
    pub max_abs: f64,
    /// max |residual| / ∫_E f dσ over blocks with positive target.
    pub max_relative: f64,
}

/// Residuals of the measure identity ∫_E dS_p = ∫_E f dσ over the blocks of
/// `partition`, with f integrated by the node value times the cell area.
pub fn check_generalized_solution_with(
    u: &SupportFunction,
    density: impl Fn(f64) -> f64,
    p: f64,
    partition: &Partition,
) -> Result<GeneralizedResidual, GeometryError> {
    let grid = u.grid();
    if let Some(&j) = partition.blocks().iter().flatten().find(|&&j| j >= grid.node_count()) {
        return Err(GeometryError::BadPartition(format!("node {j} out of range")));
    }
    let mu = lp_measure(u, p)?;
    let mut residuals = Vec::with_capacity(partition.len());
    let mut target = Vec::with_capacity(partition.len());
    for block in partition.blocks() {
        let rhs: f64 = block
            .iter()
            .map(|&j| density(grid.angle(j)) * grid.cell_area(j))
            .sum();
        residuals.push(mu.mass_of(block) - rhs);
        target.push(rhs);
    }
    let max_abs = residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let max_relative = residuals
        .iter()
        .zip(&target)
        .filter(|(_, t)| **t > 0.0)
        .fold(0.0f64, |a, (r, t)| a.max(r.abs() / t));
    Ok(GeneralizedResidual {
        residuals,
        target,
        max_abs,
        max_relative,
    })
}

pub fn check_generalized_solution(
    u: &SupportFunction,
    f: &AnisotropyField,
    p: f64,
    partition: &Partition,
) -> Result<GeneralizedResidual, GeometryError> {
    let kind = u.grid().kind();
    check_generalized_solution_with(u, |a| f.value(kind, a), p, partition)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InradiusBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// ρ₋(Ω) ≥ C_n·V(Ω)·u_max^{−n} with C_n = (n+1)^{−(n+1)}.
pub fn inradius_bound_check(u: &SupportFunction) -> Result<InradiusBound, GeometryError> {
    let n = u.grid().dimension() as i32;
    let c_n = f64::from(n + 1).powi(-(n + 1));
    let lhs = inradius(u);
    let rhs = c_n * volume(u)? * u.max_value().powi(-n);
    Ok(InradiusBound {
        lhs,
        rhs,
        holds: lhs >= rhs,
    })
}
