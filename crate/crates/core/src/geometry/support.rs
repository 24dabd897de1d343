use std::fmt::Write as _;

use super::{GeometryError, GridKind, GridSpec};

/// Discretized support function u(z) = max⟨z, x⟩ of a convex body, sampled on a
/// [`GridSpec`].
///
/// Values are measured from the ambient origin. `center_offset` records the
/// translation that has been applied to the body (see [`SupportFunction::translated`]);
/// it does not enter any computation.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportFunction {
    grid: GridSpec,
    values: Vec<f64>,
    center_offset: [f64; 2],
}

impl SupportFunction {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self, GeometryError> {
        if values.len() != grid.node_count() {
            return Err(GeometryError::LengthMismatch {
                expected: grid.node_count(),
                got: values.len(),
            });
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite { node });
        }
        Ok(Self {
            grid,
            values,
            center_offset: [0.0; 2],
        })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Result<Self, GeometryError> {
        Self::new(grid, grid.angles().into_iter().map(f).collect())
    }

    /// Origin-centered ball of radius `radius`.
    pub fn ball(grid: GridSpec, radius: f64) -> Self {
        Self::new(grid, vec![radius; grid.node_count()]).expect("finite radius")
    }

    /// Origin-centered ellipse (circle grid) or spheroid (axisymmetric grid):
    /// u = √(a² cos² + b² sin²) of the grid angle. On the axisymmetric grid `a` is
    /// the polar semi-axis and `b` the equatorial one.
    pub fn ellipsoid(grid: GridSpec, a: f64, b: f64) -> Self {
        Self::from_fn(grid, |t| (a * a * t.cos().powi(2) + b * b * t.sin().powi(2)).sqrt())
            .expect("finite semi-axes")
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn center_offset(&self) -> [f64; 2] {
        self.center_offset
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Replace the values, keeping grid and offset.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, GeometryError> {
        let mut out = Self::new(self.grid, values)?;
        out.center_offset = self.center_offset;
        Ok(out)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| s * v).collect(),
            center_offset: [s * self.center_offset[0], s * self.center_offset[1]],
        }
    }

    /// Body translated by `c`, given in the plane of the grid (for the
    /// axisymmetric grid only the axial component `c[1]` may be nonzero).
    /// u ↦ u + ⟨c, z⟩.
    pub fn translated(&self, c: [f64; 2]) -> Result<Self, GeometryError> {
        if self.grid.kind() == GridKind::Axisymmetric && c[0] != 0.0 {
            return Err(GeometryError::InvalidGrid(
                "axisymmetric bodies can only be translated along the axis".into(),
            ));
        }
        let values = (0..self.len())
            .map(|j| {
                let z = self.grid.direction(j);
                self.values[j] + c[0] * z[0] + c[1] * z[1]
            })
            .collect();
        Ok(Self {
            grid: self.grid,
            values,
            center_offset: [self.center_offset[0] + c[0], self.center_offset[1] + c[1]],
        })
    }

    /// Central first difference in the grid angle.
    pub fn d1(&self, j: usize) -> f64 {
        stencil_d1(&self.grid, &self.values, j)
    }

    /// Central second difference in the grid angle.
    pub fn d2(&self, j: usize) -> f64 {
        stencil_d2(&self.grid, &self.values, j)
    }

    /// CSV form: a header line `kind,node_count,offset_x,offset_y`, its value
    /// line, then `angle,value` and one row per node. Floats carry 17
    /// significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("kind,node_count,offset_x,offset_y\n");
        let _ = writeln!(
            out,
            "{},{},{:.16e},{:.16e}",
            self.grid.kind().as_str(),
            self.grid.node_count(),
            self.center_offset[0],
            self.center_offset[1]
        );
        out.push_str("angle,value\n");
        for (j, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{:.16e},{:.16e}", self.grid.angle(j), v);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, GeometryError> {
        let bad = |msg: &str| GeometryError::Csv(msg.to_string());
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty input"))?;
        if !header.starts_with("kind,node_count") {
            return Err(bad("missing `kind,node_count` header"));
        }
        let meta = lines.next().ok_or_else(|| bad("missing grid line"))?;
        let fields: Vec<&str> = meta.split(',').map(str::trim).collect();
        if fields.len() < 4 {
            return Err(bad("grid line needs kind,node_count,offset_x,offset_y"));
        }
        let kind: GridKind = fields[0].parse()?;
        let node_count: usize = fields[1].parse().map_err(|_| bad("bad node_count"))?;
        let parse = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number `{s}`")));
        let offset = [parse(fields[2])?, parse(fields[3])?];
        let grid = GridSpec::new(kind, node_count)?;
        if lines.next().map(str::trim) != Some("angle,value") {
            return Err(bad("missing `angle,value` header"));
        }
        let mut values = Vec::with_capacity(node_count);
        for line in lines {
            let mut parts = line.split(',');
            let _angle = parts.next().ok_or_else(|| bad("missing angle"))?;
            let value = parts.next().ok_or_else(|| bad("missing value"))?;
            values.push(parse(value.trim())?);
        }
        let mut out = Self::new(grid, values)?;
        out.center_offset = offset;
        Ok(out)
    }
}

/// Value at node `j + offset` with periodic wrap (circle) or even reflection
/// about the poles (axisymmetric). Reflection encodes pole regularity.
#[inline]
pub(crate) fn neighbor(grid: &GridSpec, values: &[f64], j: usize, offset: isize) -> f64 {
    let n = values.len() as isize;
    let mut k = j as isize + offset;
    match grid.kind() {
        GridKind::Circle => values[k.rem_euclid(n) as usize],
        GridKind::Axisymmetric => {
            if k < 0 {
                k = -k;
            } else if k >= n {
                k = 2 * (n - 1) - k;
            }
            values[k as usize]
        }
    }
}

#[inline]
pub(crate) fn stencil_d1(grid: &GridSpec, values: &[f64], j: usize) -> f64 {
    if grid.is_pole(j) {
        return 0.0;
    }
    (neighbor(grid, values, j, 1) - neighbor(grid, values, j, -1)) / (2.0 * grid.spacing())
}

#[inline]
pub(crate) fn stencil_d2(grid: &GridSpec, values: &[f64], j: usize) -> f64 {
    let h = grid.spacing();
    (neighbor(grid, values, j, 1) - 2.0 * values[j] + neighbor(grid, values, j, -1)) / (h * h)
}
