use std::f64::consts::PI;

use super::{GeometryError, GridKind, GridSpec};

/// Positive function f on the sphere, evaluated through the grid angle.
///
/// Closed-form variants are keyed by an expression id in [`AnisotropyField::spec_string`];
/// tabulated fields come from manufactured data (see the soliton harness).
#[derive(Debug, Clone, PartialEq)]
pub enum AnisotropyField {
    Constant(f64),
    /// `max(base + slope · z_axis, floor)` where z_axis is the axial component of
    /// the direction (y on the circle, z on the axisymmetric sphere).
    Axial { base: f64, slope: f64, floor: f64 },
    Tabulated(TabulatedField),
    Scaled { factor: f64, inner: Box<AnisotropyField> },
    Power { exponent: f64, inner: Box<AnisotropyField> },
}

impl AnisotropyField {
    pub fn constant(c: f64) -> Self {
        AnisotropyField::Constant(c)
    }

    /// `1 + eps · z_axis`, clipped below at `floor`.
    pub fn axial(base: f64, slope: f64) -> Self {
        AnisotropyField::Axial {
            base,
            slope,
            floor: 1e-3 * base.abs().max(1e-12),
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        AnisotropyField::Scaled {
            factor,
            inner: Box::new(self),
        }
    }

    pub fn powf(self, exponent: f64) -> Self {
        AnisotropyField::Power {
            exponent,
            inner: Box::new(self),
        }
    }

    pub fn value(&self, kind: GridKind, angle: f64) -> f64 {
        match self {
            AnisotropyField::Constant(c) => *c,
            AnisotropyField::Axial { base, slope, floor } => {
                (base + slope * kind.axis_component(angle)).max(*floor)
            }
            AnisotropyField::Tabulated(t) => t.value(angle),
            AnisotropyField::Scaled { factor, inner } => factor * inner.value(kind, angle),
            AnisotropyField::Power { exponent, inner } => inner.value(kind, angle).powf(*exponent),
        }
    }

    /// (f, df/dangle, d²f/dangle²) along the grid angle.
    pub fn derivatives(&self, kind: GridKind, angle: f64) -> (f64, f64, f64) {
        match self {
            AnisotropyField::Constant(c) => (*c, 0.0, 0.0),
            AnisotropyField::Axial { base, slope, floor } => {
                let z = kind.axis_component(angle);
                let v = base + slope * z;
                if v <= *floor {
                    return (*floor, 0.0, 0.0);
                }
                let (dz, d2z) = match kind {
                    GridKind::Circle => (angle.cos(), -angle.sin()),
                    GridKind::Axisymmetric => (-angle.sin(), -angle.cos()),
                };
                (v, slope * dz, slope * d2z)
            }
            AnisotropyField::Scaled { factor, inner } => {
                let (f, d1, d2) = inner.derivatives(kind, angle);
                (factor * f, factor * d1, factor * d2)
            }
            AnisotropyField::Power { exponent, inner } => {
                let (f, d1, d2) = inner.derivatives(kind, angle);
                let e = *exponent;
                let fe = f.powf(e);
                let d1e = e * f.powf(e - 1.0) * d1;
                let d2e = e * (e - 1.0) * f.powf(e - 2.0) * d1 * d1 + e * f.powf(e - 1.0) * d2;
                (fe, d1e, d2e)
            }
            AnisotropyField::Tabulated(t) => t.derivatives(angle),
        }
    }

    /// Node values on `grid`. Tabulated fields on the same grid return their
    /// table exactly.
    pub fn sample_on(&self, grid: &GridSpec) -> Vec<f64> {
        match self {
            AnisotropyField::Tabulated(t) if t.grid == *grid => t.values.clone(),
            AnisotropyField::Scaled { factor, inner } => {
                inner.sample_on(grid).into_iter().map(|v| factor * v).collect()
            }
            AnisotropyField::Power { exponent, inner } => inner
                .sample_on(grid)
                .into_iter()
                .map(|v| v.powf(*exponent))
                .collect(),
            _ => grid.angles().into_iter().map(|a| self.value(grid.kind(), a)).collect(),
        }
    }

    /// Maximum over a fine sampling of the sphere.
    pub fn max_sampled(&self, kind: GridKind) -> f64 {
        Self::fine_samples(kind)
            .map(|a| self.value(kind, a))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_sampled(&self, kind: GridKind) -> f64 {
        Self::fine_samples(kind)
            .map(|a| self.value(kind, a))
            .fold(f64::INFINITY, f64::min)
    }

    fn fine_samples(kind: GridKind) -> impl Iterator<Item = f64> {
        const SAMPLES: usize = 4096;
        let span = match kind {
            GridKind::Circle => 2.0 * PI * (SAMPLES as f64 - 1.0) / SAMPLES as f64,
            GridKind::Axisymmetric => PI,
        };
        (0..SAMPLES).map(move |i| span * i as f64 / (SAMPLES - 1) as f64)
    }

    /// Checks positivity on a fine sampling.
    pub fn validate(&self, kind: GridKind) -> Result<(), GeometryError> {
        let min = self.min_sampled(kind);
        if !(min > 0.0) || !min.is_finite() {
            return Err(GeometryError::InvalidField(format!(
                "field minimum {min} is not positive"
            )));
        }
        Ok(())
    }

    /// Textual form of closed-form fields: `const:<c>` or `axial:<base>,<slope>`.
    pub fn spec_string(&self) -> Option<String> {
        match self {
            AnisotropyField::Constant(c) => Some(format!("const:{c}")),
            AnisotropyField::Axial { base, slope, .. } => Some(format!("axial:{base},{slope}")),
            _ => None,
        }
    }
}

impl std::str::FromStr for AnisotropyField {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GeometryError::InvalidField(format!("cannot parse field spec `{s}`"));
        let (id, args) = s.trim().split_once(':').ok_or_else(bad)?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        match (id, nums.as_slice()) {
            ("const", [c]) => Ok(AnisotropyField::constant(*c)),
            ("axial", [b, e]) => Ok(AnisotropyField::axial(*b, *e)),
            _ => Err(bad()),
        }
    }
}

/// Node table on a grid with local cubic (Catmull–Rom) interpolation.
/// Periodic on the circle, even reflection at the poles on the axisymmetric grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl TabulatedField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self, GeometryError> {
        if values.len() != grid.node_count() {
            return Err(GeometryError::LengthMismatch {
                expected: grid.node_count(),
                got: values.len(),
            });
        }
        if let Some(node) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(GeometryError::InvalidField(format!(
                "tabulated value at node {node} is not positive"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn at(&self, k: isize) -> f64 {
        super::support::neighbor(&self.grid, &self.values, 0, k)
    }

    fn locate(&self, angle: f64) -> (isize, f64) {
        let h = self.grid.spacing();
        let a = match self.grid.kind() {
            GridKind::Circle => angle.rem_euclid(2.0 * PI),
            GridKind::Axisymmetric => angle.clamp(0.0, PI),
        };
        let x = a / h;
        let mut k = x.floor() as isize;
        if self.grid.kind() == GridKind::Axisymmetric && k as usize >= self.grid.node_count() - 1 {
            k = self.grid.node_count() as isize - 2;
        }
        (k, x - k as f64)
    }

    fn value(&self, angle: f64) -> f64 {
        self.derivatives(angle).0
    }

    fn derivatives(&self, angle: f64) -> (f64, f64, f64) {
        let (k, t) = self.locate(angle);
        let (p0, p1, p2, p3) = (self.at(k - 1), self.at(k), self.at(k + 1), self.at(k + 2));
        // Catmull–Rom in Hermite form
        let m1 = 0.5 * (p2 - p0);
        let m2 = 0.5 * (p3 - p1);
        let (t2, t3) = (t * t, t * t * t);
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * p1
            + (t3 - 2.0 * t2 + t) * m1
            + (-2.0 * t3 + 3.0 * t2) * p2
            + (t3 - t2) * m2;
        let dv = (6.0 * t2 - 6.0 * t) * p1
            + (3.0 * t2 - 4.0 * t + 1.0) * m1
            + (-6.0 * t2 + 6.0 * t) * p2
            + (3.0 * t2 - 2.0 * t) * m2;
        let d2v = (12.0 * t - 6.0) * p1 + (6.0 * t - 4.0) * m1 + (-12.0 * t + 6.0) * p2 + (6.0 * t - 2.0) * m2;
        let h = self.grid.spacing();
        (v, dv / h, d2v / (h * h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_closed_forms() {
        let f: AnisotropyField = "axial:1,0.1".parse().unwrap();
        assert_eq!(f.spec_string().unwrap(), "axial:1,0.1");
        assert!((f.value(GridKind::Axisymmetric, 0.0) - 1.1).abs() < 1e-15);
        assert!("wobble:1".parse::<AnisotropyField>().is_err());
        assert!("const:1,2".parse::<AnisotropyField>().is_err());
    }

    #[test]
    fn axial_field_is_clipped_positive() {
        let f = AnisotropyField::axial(1.0, 3.0);
        assert!(f.min_sampled(GridKind::Circle) > 0.0);
        assert!(f.validate(GridKind::Circle).is_ok());
        assert!(AnisotropyField::constant(-1.0).validate(GridKind::Circle).is_err());
    }

    #[test]
    fn tabulated_reproduces_nodes_and_smooth_functions() {
        let g = GridSpec::circle(128).unwrap();
        let vals: Vec<f64> = g.angles().iter().map(|a| 2.0 + a.cos()).collect();
        let t = AnisotropyField::Tabulated(TabulatedField::new(g, vals.clone()).unwrap());
        for (j, v) in vals.iter().enumerate() {
            assert!((t.value(GridKind::Circle, g.angle(j)) - v).abs() < 1e-12);
        }
        assert_eq!(t.sample_on(&g), vals);
        let a = 0.123;
        let (f, d1, _) = t.derivatives(GridKind::Circle, a);
        assert!((f - (2.0 + a.cos())).abs() < 1e-5);
        assert!((d1 + a.sin()).abs() < 1e-3);
    }

    #[test]
    fn tabulated_axisymmetric_is_even_at_poles() {
        let g = GridSpec::axisymmetric(65).unwrap();
        let vals: Vec<f64> = g.angles().iter().map(|a| 2.0 + a.cos()).collect();
        let t = TabulatedField::new(g, vals).unwrap();
        let (_, d1, _) = t.derivatives(0.0);
        assert!(d1.abs() < 1e-12);
        assert!((t.value(PI) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_and_scale_derivatives_match_finite_differences() {
        let f = AnisotropyField::axial(1.0, 0.3).powf(1.7).scaled(2.0);
        let k = GridKind::Axisymmetric;
        let a = 0.8;
        let e = 1e-5;
        let (_, d1, d2) = f.derivatives(k, a);
        let fd1 = (f.value(k, a + e) - f.value(k, a - e)) / (2.0 * e);
        let fd2 = (f.value(k, a + e) - 2.0 * f.value(k, a) + f.value(k, a - e)) / (e * e);
        assert!((d1 - fd1).abs() < 1e-8);
        assert!((d2 - fd2).abs() < 1e-4);
    }
}
