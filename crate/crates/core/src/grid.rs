//! Rectangular phase-space grids in quadrature units, shared by the
//! Gaussian and Fock-basis Wigner functions.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Normalisation tag: `W(0, 0) = 1/pi` for the vacuum and `∬ W dx dy = 1`.
pub const WIGNER_CONVENTION: &str = "vacuum peak = 1/pi";

/// Window and resolution of a sampled phase-space field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridSpec {
    /// `±5` quadrature units, 201 x 201 points.
    fn default() -> Self {
        Self::square(5.0, 201)
    }
}

impl GridSpec {
    pub fn square(half_width: f64, n: usize) -> Self {
        Self {
            x_min: -half_width,
            x_max: half_width,
            y_min: -half_width,
            y_max: half_width,
            nx: n,
            ny: n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_max <= self.x_min || self.y_max <= self.y_min {
            return Err(Error::invalid("grid", "window must be finite with max > min"));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::invalid("grid", "need at least 2 points per axis"));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x_min + self.dx() * ix as f64
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.y_min + self.dy() * iy as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Anything that can be evaluated pointwise over phase space.
pub trait PhaseSpaceFunction {
    fn value(&self, x: f64, y: f64) -> f64;
}

/// Sampled Wigner field, stored row-major with `y` as the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    spec: GridSpec,
    values: Vec<f64>,
}

impl WignerGrid {
    /// Evaluates `f` at every grid point, serially.
    pub fn sample<F: PhaseSpaceFunction + ?Sized>(spec: GridSpec, f: &F) -> Result<Self> {
        spec.validate()?;
        let mut values = Vec::with_capacity(spec.len());
        for iy in 0..spec.ny {
            let y = spec.y(iy);
            for ix in 0..spec.nx {
                values.push(f.value(spec.x(ix), y));
            }
        }
        Ok(Self { spec, values })
    }

    /// Wraps values computed elsewhere (e.g. in parallel), in the same
    /// row-major layout as [`WignerGrid::sample`].
    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(Error::DimensionMismatch {
                expected: spec.len(),
                found: values.len(),
            });
        }
        Ok(Self { spec, values })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.spec.nx + ix]
    }

    /// Iterates `(x, y, W)` in storage order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let nx = self.spec.nx;
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &w)| (self.spec.x(k % nx), self.spec.y(k / nx), w))
    }

    fn trapezoid<M: Fn(f64) -> f64>(&self, map: M) -> f64 {
        let (nx, ny) = (self.spec.nx, self.spec.ny);
        let mut total = 0.0;
        for iy in 0..ny {
            let wy = if iy == 0 || iy == ny - 1 { 0.5 } else { 1.0 };
            for ix in 0..nx {
                let wx = if ix == 0 || ix == nx - 1 { 0.5 } else { 1.0 };
                total += wx * wy * map(self.at(ix, iy));
            }
        }
        total * self.spec.dx() * self.spec.dy()
    }

    /// Trapezoidal `∬ W dx dy`.
    pub fn integral(&self) -> f64 {
        self.trapezoid(|w| w)
    }

    /// Trapezoidal `∬ |W| dx dy`.
    pub fn abs_integral(&self) -> f64 {
        self.trapezoid(f64::abs)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest absolute pointwise difference to another field on the same grid.
    pub fn max_abs_diff(&self, other: &WignerGrid) -> Result<f64> {
        if self.spec != other.spec {
            return Err(Error::invalid("grid", "fields sampled on different grids"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}
