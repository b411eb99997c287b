//! Grid data types and the sampling, smoothing and file primitives shared by
//! every estimator and diagnostic.
//!
//! Sample `(i, j)` sits at continuous coordinate `(x, y) = (i, j)`: `x` is the
//! column index, `y` the row index, and storage is row-major from the top row.

pub(crate) mod fft;
mod io;
mod sample;
mod smooth;

pub(crate) use fft::signed_freq;
pub use fft::{fft2, Fft2};
pub use io::{read_flo, read_pgm, write_flo, write_flo_raw, write_pgm, FLO_MAGIC};
pub use sample::{bilinear_sample, warp_backward, warp_backward_lanczos};
pub use smooth::{downsample2, gaussian_kernel, gaussian_smooth};

use rayon::prelude::*;

use crate::error::{input_err, Result};

/// How coordinates outside `[0, width) x [0, height)` are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryMode {
    /// Wrap modulo the grid size.
    Periodic,
    /// Pin to the nearest valid grid index.
    #[default]
    Clamp,
}

/// Discrete domain shared by scalar and vector fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    width: usize,
    height: usize,
    boundary: BoundaryMode,
}

impl GridSpec {
    pub fn new(width: usize, height: usize, boundary: BoundaryMode) -> Result<Self> {
        if width < 2 || height < 2 {
            return input_err(format!("grid must be at least 2x2, got {width}x{height}"));
        }
        Ok(Self {
            width,
            height,
            boundary,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    /// Number of samples, `width * height`.
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn with_boundary(self, boundary: BoundaryMode) -> Self {
        Self { boundary, ..self }
    }

    /// True when both grids have identical dimensions (boundary ignored).
    pub fn same_shape(&self, other: &GridSpec) -> bool {
        self.width == other.width && self.height == other.height
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    /// Resolve an integer column index through the boundary mode.
    #[inline]
    pub fn resolve_x(&self, x: isize) -> usize {
        resolve(x, self.width, self.boundary)
    }

    /// Resolve an integer row index through the boundary mode.
    #[inline]
    pub fn resolve_y(&self, y: isize) -> usize {
        resolve(y, self.height, self.boundary)
    }

    /// True for pixels whose 3x3 neighbourhood lies inside the grid. Every
    /// pixel qualifies under [`BoundaryMode::Periodic`].
    #[inline]
    pub fn is_interior(&self, x: usize, y: usize) -> bool {
        self.is_inside_margin(x, y, 1)
    }

    /// True for pixels at least `margin` samples away from every edge
    /// (always true under [`BoundaryMode::Periodic`]).
    #[inline]
    pub fn is_inside_margin(&self, x: usize, y: usize, margin: usize) -> bool {
        match self.boundary {
            BoundaryMode::Periodic => true,
            BoundaryMode::Clamp => x >= margin && y >= margin && x + margin < self.width && y + margin < self.height,
        }
    }

    /// True if the continuous point lies within the sampled rectangle
    /// `[0, width-1] x [0, height-1]` (always true under periodic wrap).
    #[inline]
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self.boundary {
            BoundaryMode::Periodic => true,
            BoundaryMode::Clamp => {
                x >= 0.0 && y >= 0.0 && x <= (self.width - 1) as f64 && y <= (self.height - 1) as f64
            }
        }
    }
}

#[inline]
fn resolve(i: isize, n: usize, mode: BoundaryMode) -> usize {
    match mode {
        BoundaryMode::Periodic => i.rem_euclid(n as isize) as usize,
        BoundaryMode::Clamp => i.clamp(0, n as isize - 1) as usize,
    }
}

fn check_finite(name: &str, data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(i) => input_err(format!("{name} sample {i} is not finite")),
        None => Ok(()),
    }
}

/// Fill a row-major buffer by evaluating `f(x, y)` row by row in parallel.
/// Each row is computed independently so the result does not depend on the
/// thread count.
pub(crate) fn par_fill<F>(spec: &GridSpec, f: F) -> Vec<f64>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let mut out = vec![0.0; spec.len()];
    out.par_chunks_mut(spec.width).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            *o = f(x, y);
        }
    });
    out
}

/// Scalar samples on a grid: image intensity or density.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    spec: GridSpec,
    data: Vec<f64>,
}

impl ScalarField2D {
    pub fn new(spec: GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != spec.len() {
            return input_err(format!(
                "expected {} samples for a {}x{} grid, got {}",
                spec.len(),
                spec.width,
                spec.height,
                data.len()
            ));
        }
        check_finite("scalar", &data)?;
        Ok(Self { spec, data })
    }

    pub(crate) fn from_vec_unchecked(spec: GridSpec, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), spec.len());
        Self { spec, data }
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self::constant(spec, 0.0)
    }

    pub fn constant(spec: GridSpec, value: f64) -> Self {
        Self {
            spec,
            data: vec![value; spec.len()],
        }
    }

    /// Build from a closure of `(x, y)`; panics if the closure yields a
    /// non-finite value.
    pub fn from_fn(spec: GridSpec, f: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let data = par_fill(&spec, f);
        assert!(data.iter().all(|v| v.is_finite()), "non-finite sample");
        Self { spec, data }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn width(&self) -> usize {
        self.spec.width
    }

    pub fn height(&self) -> usize {
        self.spec.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[self.spec.index(x, y)]
    }

    /// Sample at an integer offset, resolved through the boundary mode.
    #[inline]
    pub fn get_resolved(&self, x: isize, y: isize) -> f64 {
        self.data[self.spec.resolve_y(y) * self.spec.width + self.spec.resolve_x(x)]
    }

    pub fn with_boundary(mut self, boundary: BoundaryMode) -> Self {
        self.spec = self.spec.with_boundary(boundary);
        self
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let data: Vec<f64> = self.data.iter().map(|&v| f(v)).collect();
        assert!(data.iter().all(|v| v.is_finite()), "non-finite sample");
        Self { spec: self.spec, data }
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn is_constant(&self) -> bool {
        let first = self.data[0];
        self.data.iter().all(|&v| v == first)
    }
}

/// Two-component displacement (or velocity) samples on a grid, in pixels per
/// frame interval.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2D {
    spec: GridSpec,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl VectorField2D {
    pub fn new(spec: GridSpec, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != spec.len() || v.len() != spec.len() {
            return input_err(format!(
                "expected {} samples per component, got u={} v={}",
                spec.len(),
                u.len(),
                v.len()
            ));
        }
        check_finite("u", &u)?;
        check_finite("v", &v)?;
        Ok(Self { spec, u, v })
    }

    pub(crate) fn from_vecs_unchecked(spec: GridSpec, u: Vec<f64>, v: Vec<f64>) -> Self {
        debug_assert!(u.len() == spec.len() && v.len() == spec.len());
        Self { spec, u, v }
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self::uniform(spec, 0.0, 0.0)
    }

    pub fn uniform(spec: GridSpec, du: f64, dv: f64) -> Self {
        assert!(du.is_finite() && dv.is_finite(), "non-finite displacement");
        Self {
            spec,
            u: vec![du; spec.len()],
            v: vec![dv; spec.len()],
        }
    }

    /// Build from a closure returning `(u, v)` at `(x, y)`; panics on
    /// non-finite output.
    pub fn from_fn(spec: GridSpec, f: impl Fn(usize, usize) -> (f64, f64) + Sync) -> Self {
        let u = par_fill(&spec, |x, y| f(x, y).0);
        let v = par_fill(&spec, |x, y| f(x, y).1);
        Self::new(spec, u, v).expect("non-finite vector sample")
    }

    pub fn from_components(u: ScalarField2D, v: ScalarField2D) -> Result<Self> {
        if !u.spec.same_shape(&v.spec) {
            return input_err("component grids differ in shape");
        }
        Ok(Self {
            spec: u.spec,
            u: u.data,
            v: v.data,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn width(&self) -> usize {
        self.spec.width
    }

    pub fn height(&self) -> usize {
        self.spec.height
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (f64, f64) {
        let i = self.spec.index(x, y);
        (self.u[i], self.v[i])
    }

    pub fn u_field(&self) -> ScalarField2D {
        ScalarField2D::from_vec_unchecked(self.spec, self.u.clone())
    }

    pub fn v_field(&self) -> ScalarField2D {
        ScalarField2D::from_vec_unchecked(self.spec, self.v.clone())
    }

    pub fn into_components(self) -> (ScalarField2D, ScalarField2D) {
        (
            ScalarField2D::from_vec_unchecked(self.spec, self.u),
            ScalarField2D::from_vec_unchecked(self.spec, self.v),
        )
    }

    pub fn with_boundary(mut self, boundary: BoundaryMode) -> Self {
        self.spec = self.spec.with_boundary(boundary);
        self
    }

    /// Largest displacement magnitude over the grid.
    pub fn max_magnitude(&self) -> f64 {
        self.u.iter().zip(&self.v).map(|(u, v)| u.hypot(*v)).fold(0.0, f64::max)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            spec: self.spec,
            u: self.u.iter().map(|u| u * factor).collect(),
            v: self.v.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn add(&self, other: &VectorField2D) -> Result<Self> {
        if !self.spec.same_shape(&other.spec) {
            return input_err("vector fields differ in shape");
        }
        Ok(Self {
            spec: self.spec,
            u: self.u.iter().zip(&other.u).map(|(a, b)| a + b).collect(),
            v: self.v.iter().zip(&other.v).map(|(a, b)| a + b).collect(),
        })
    }

    /// Negate the `v` component, converting between y-down (image) and y-up
    /// axis conventions.
    pub fn flip_y(&self) -> Self {
        Self {
            spec: self.spec,
            u: self.u.clone(),
            v: self.v.iter().map(|v| -v).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_degenerate_sizes() {
        assert!(GridSpec::new(1, 5, BoundaryMode::Clamp).is_err());
        assert!(GridSpec::new(5, 0, BoundaryMode::Periodic).is_err());
        assert!(GridSpec::new(2, 2, BoundaryMode::Clamp).is_ok());
    }

    #[test]
    fn index_resolution() {
        let p = GridSpec::new(5, 4, BoundaryMode::Periodic).unwrap();
        assert_eq!(p.resolve_x(-1), 4);
        assert_eq!(p.resolve_x(7), 2);
        assert_eq!(p.resolve_y(-9), 3);
        let c = p.with_boundary(BoundaryMode::Clamp);
        assert_eq!(c.resolve_x(-3), 0);
        assert_eq!(c.resolve_x(9), 4);
    }

    #[test]
    fn constructors_validate() {
        let s = GridSpec::new(3, 3, BoundaryMode::Clamp).unwrap();
        assert!(ScalarField2D::new(s, vec![0.0; 8]).is_err());
        assert!(ScalarField2D::new(s, vec![f64::NAN; 9]).is_err());
        assert!(VectorField2D::new(s, vec![0.0; 9], vec![f64::INFINITY; 9]).is_err());
        let f = VectorField2D::uniform(s, 3.0, 4.0);
        assert_eq!(f.max_magnitude(), 5.0);
    }
}
