use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Planned unnormalized 2D FFT over a row-major `width x height` buffer.
pub struct Fft2 {
    width: usize,
    height: usize,
    rows_fwd: Arc<dyn Fft<f64>>,
    rows_inv: Arc<dyn Fft<f64>>,
    cols_fwd: Arc<dyn Fft<f64>>,
    cols_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            width,
            height,
            rows_fwd: planner.plan_fft_forward(width),
            rows_inv: planner.plan_fft_inverse(width),
            cols_fwd: planner.plan_fft_forward(height),
            cols_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn forward(&self, data: &mut [Complex<f64>]) {
        self.run(data, false);
    }

    /// Inverse transform without the `1/(W H)` factor.
    pub fn inverse(&self, data: &mut [Complex<f64>]) {
        self.run(data, true);
    }

    fn run(&self, data: &mut [Complex<f64>], inverse: bool) {
        assert_eq!(data.len(), self.width * self.height);
        let (rows, cols) = if inverse {
            (&self.rows_inv, &self.cols_inv)
        } else {
            (&self.rows_fwd, &self.cols_fwd)
        };
        rows.process(data);
        let mut t = transpose(data, self.width, self.height);
        cols.process(&mut t);
        data.copy_from_slice(&transpose(&t, self.height, self.width));
    }
}

fn transpose(data: &[Complex<f64>], w: usize, h: usize) -> Vec<Complex<f64>> {
    let mut out = vec![Complex::new(0.0, 0.0); w * h];
    for y in 0..h {
        for x in 0..w {
            out[x * h + y] = data[y * w + x];
        }
    }
    out
}

/// Forward 2D FFT of real row-major samples.
pub fn fft2(data: &[f64], width: usize, height: usize) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = data.iter().map(|&v| Complex::new(v, 0.0)).collect();
    Fft2::new(width, height).forward(&mut buf);
    buf
}

/// Signed frequency index of FFT bin `i` out of `n`.
pub(crate) fn signed_freq(i: usize, n: usize) -> isize {
    if i <= n / 2 {
        i as isize
    } else {
        i as isize - n as isize
    }
}
