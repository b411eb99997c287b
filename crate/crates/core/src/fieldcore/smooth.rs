use super::{par_fill, GridSpec, ScalarField2D};
use crate::error::{input_err, Result};

/// Normalized 1D Gaussian taps over `[-r, r]` with `r = ceil(3 sigma)`.
///
/// `sigma = 0` yields the single tap `[1.0]`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return input_err(format!("sigma must be finite and >= 0, got {sigma}"));
    }
    if sigma == 0.0 {
        return Ok(vec![1.0]);
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    Ok(taps.into_iter().map(|t| t / total).collect())
}

/// Separable Gaussian convolution under the field's boundary mode.
pub fn gaussian_smooth(field: &ScalarField2D, sigma: f64) -> Result<ScalarField2D> {
    let kernel = gaussian_kernel(sigma)?;
    if kernel.len() == 1 {
        return Ok(field.clone());
    }
    let spec = *field.spec();
    let radius = (kernel.len() / 2) as isize;
    let w = spec.width();

    let src = field.data();
    let rows = par_fill(&spec, |x, y| {
        let row = &src[y * w..(y + 1) * w];
        kernel
            .iter()
            .enumerate()
            .map(|(k, t)| t * row[spec.resolve_x(x as isize + k as isize - radius)])
            .sum()
    });
    let cols = par_fill(&spec, |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, t)| t * rows[spec.resolve_y(y as isize + k as isize - radius) * w + x])
            .sum()
    });
    Ok(ScalarField2D::from_vec_unchecked(spec, cols))
}

/// One pyramid step: Gaussian smoothing with `sigma = 1` followed by keeping
/// every second sample, so coarse sample `(i, j)` sits at fine `(2i, 2j)`.
pub fn downsample2(field: &ScalarField2D) -> Result<ScalarField2D> {
    let (w, h) = (field.width(), field.height());
    if w < 4 || h < 4 {
        return input_err(format!("cannot downsample a {w}x{h} field (need >= 4x4)"));
    }
    let smooth = gaussian_smooth(field, 1.0)?;
    let spec = GridSpec::new(w.div_ceil(2), h.div_ceil(2), field.spec().boundary())?;
    let data = par_fill(&spec, |x, y| smooth.get(2 * x, 2 * y));
    Ok(ScalarField2D::from_vec_unchecked(spec, data))
}
