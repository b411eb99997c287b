//! Diagnostics of velocity and density fields: spectra, divergence and
//! gradient statistics, structure functions, coarse-grained gradient
//! invariants, density flux and the RMSE metric.
//!
//! Position averages are accumulated per row and merged in row order, so
//! every result is bit-identical regardless of the rayon thread count.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{input_err, Result};
use crate::fieldcore::fft::signed_freq;
use crate::fieldcore::{fft2, gaussian_smooth, BoundaryMode, GridSpec, ScalarField2D, VectorField2D};

/// Orientations per radius used by the CLI when none are given.
pub const DEFAULT_ORIENTATIONS: usize = 16;

/// Shell-summed power spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    /// Shell index `round(|k|)`, cycles per domain.
    pub k: Vec<usize>,
    pub e: Vec<f64>,
}

impl SpectrumResult {
    pub fn total(&self) -> f64 {
        self.e.iter().sum()
    }
}

/// Bin edges (`counts.len() + 1` of them) and counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// `bins` equal-width bins over `[min, max]` of `values`. A single value
    /// range yields one degenerate bin `[v, v]`.
    pub fn linear(values: &[f64], bins: usize) -> Result<Self> {
        if bins == 0 {
            return input_err("histogram needs at least one bin");
        }
        let (lo, hi) = min_max(values);
        if values.is_empty() || lo == hi {
            return Ok(Self {
                edges: vec![lo, hi],
                counts: vec![values.len() as u64],
            });
        }
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins)
            .map(|i| if i == bins { hi } else { lo + width * i as f64 })
            .collect();
        let mut counts = vec![0u64; bins];
        for &v in values {
            counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
        }
        Ok(Self { edges, counts })
    }

    /// Log-spaced bins for non-negative data. `bins` geometric bins span the
    /// smallest to the largest positive value; zeros, if any, get an extra
    /// leading bin `[0, smallest positive)`.
    pub fn log_spaced(values: &[f64], bins: usize) -> Result<Self> {
        if bins == 0 {
            return input_err("histogram needs at least one bin");
        }
        if values.iter().any(|&v| !(v >= 0.0)) {
            return input_err("log-spaced histogram needs non-negative values");
        }
        let zeros = values.iter().filter(|&&v| v == 0.0).count() as u64;
        let positive: Vec<f64> = values.iter().copied().filter(|&v| v > 0.0).collect();
        if positive.is_empty() {
            return Ok(Self {
                edges: vec![0.0, 0.0],
                counts: vec![zeros],
            });
        }
        let (lo, hi) = min_max(&positive);
        let mut edges = Vec::with_capacity(bins + 2);
        let mut counts = Vec::with_capacity(bins + 1);
        if zeros > 0 {
            edges.push(0.0);
            counts.push(zeros);
        }
        if lo == hi {
            edges.extend([lo, hi]);
            counts.push(positive.len() as u64);
            return Ok(Self { edges, counts });
        }
        let (llo, lhi) = (lo.ln(), hi.ln());
        let step = (lhi - llo) / bins as f64;
        let offset = counts.len();
        edges.extend((0..=bins).map(|i| match i {
            0 => lo,
            i if i == bins => hi,
            i => (llo + step * i as f64).exp(),
        }));
        counts.resize(offset + bins, 0);
        for v in positive {
            counts[offset + (((v.ln() - llo) / step) as usize).min(bins - 1)] += 1;
        }
        Ok(Self { edges, counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Probability density per bin, `count / (total * width)`; a zero-width
    /// bin reports its probability mass instead.
    pub fn density(&self) -> Vec<f64> {
        let total = self.total().max(1) as f64;
        self.counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&c, e)| {
                let width = e[1] - e[0];
                if width > 0.0 {
                    c as f64 / (total * width)
                } else {
                    c as f64 / total
                }
            })
            .collect()
    }
}

/// Joint histogram over `(P, Q)`; `counts[i * q_bins + j]` covers
/// `[p_edges[i], p_edges[i+1]] x [q_edges[j], q_edges[j+1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram2D {
    pub p_edges: Vec<f64>,
    pub q_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram2D {
    pub fn new(p: &[f64], q: &[f64], bins: usize) -> Result<Self> {
        if p.len() != q.len() {
            return input_err("joint histogram needs paired samples");
        }
        let hp = Histogram::linear(p, bins)?;
        let hq = Histogram::linear(q, bins)?;
        let (np, nq) = (hp.counts.len(), hq.counts.len());
        let index = |edges: &[f64], n: usize, v: f64| {
            let (lo, hi) = (edges[0], edges[n]);
            if hi == lo {
                0
            } else {
                (((v - lo) / ((hi - lo) / n as f64)) as usize).min(n - 1)
            }
        };
        let mut counts = vec![0u64; np * nq];
        for (&a, &b) in p.iter().zip(q) {
            counts[index(&hp.edges, np, a) * nq + index(&hq.edges, nq, b)] += 1;
        }
        Ok(Self {
            p_edges: hp.edges,
            q_edges: hq.edges,
            counts,
        })
    }
}

fn min_max(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
}

/// Energy spectrum `E(k) = Σ_shell (|û|² + |v̂|²) / N²`, with `N` the pixel
/// count, so that `Σ E = mean(u² + v²)`. Shells run from 0 to the largest
/// `round(|k|)` on the grid (the corner modes), which keeps Parseval exact.
pub fn energy_spectrum(field: &VectorField2D) -> Result<SpectrumResult> {
    require_periodic(field.spec())?;
    let (w, h) = (field.width(), field.height());
    Ok(shell_sum(w, h, &[fft2(field.u(), w, h), fft2(field.v(), w, h)]))
}

/// Power spectrum of a scalar field, normalized as [`energy_spectrum`].
pub fn scalar_spectrum(rho: &ScalarField2D) -> Result<SpectrumResult> {
    require_periodic(rho.spec())?;
    let (w, h) = (rho.width(), rho.height());
    Ok(shell_sum(w, h, &[fft2(rho.data(), w, h)]))
}

fn require_periodic(spec: &GridSpec) -> Result<()> {
    if spec.boundary() != BoundaryMode::Periodic {
        return input_err("spectra need a Periodic field");
    }
    Ok(())
}

fn shell_sum(w: usize, h: usize, transforms: &[Vec<rustfft::num_complex::Complex<f64>>]) -> SpectrumResult {
    let shell = |kx: usize, ky: usize| {
        let (fx, fy) = (signed_freq(kx, w) as f64, signed_freq(ky, h) as f64);
        (fx * fx + fy * fy).sqrt().round() as usize
    };
    let kmax = (0..h)
        .flat_map(|ky| (0..w).map(move |kx| (kx, ky)))
        .map(|(kx, ky)| shell(kx, ky))
        .max()
        .unwrap_or(0);
    let norm = ((w * h) as f64).powi(2);
    let mut e = vec![0.0; kmax + 1];
    for ky in 0..h {
        for kx in 0..w {
            let i = ky * w + kx;
            e[shell(kx, ky)] += transforms.iter().map(|t| t[i].norm_sqr()).sum::<f64>() / norm;
        }
    }
    SpectrumResult {
        k: (0..=kmax).collect(),
        e,
    }
}

/// Velocity gradient tensor components.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    /// `∂u/∂x`
    pub xx: ScalarField2D,
    /// `∂u/∂y`
    pub xy: ScalarField2D,
    /// `∂v/∂x`
    pub yx: ScalarField2D,
    /// `∂v/∂y`
    pub yy: ScalarField2D,
}

/// Sobel derivatives `(∂/∂x, ∂/∂y)` scaled by 1/8, Clamp edges.
pub fn sobel(field: &ScalarField2D) -> (ScalarField2D, ScalarField2D) {
    let (w, h) = (field.width(), field.height());
    let d = field.data();
    let at = |x: isize, y: isize| {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        d[yc * w + xc]
    };
    let spec = *field.spec();
    let gx = ScalarField2D::from_fn(spec, |x, y| {
        let (x, y) = (x as isize, y as isize);
        let right = at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1);
        let left = at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1);
        (right - left) / 8.0
    });
    let gy = ScalarField2D::from_fn(spec, |x, y| {
        let (x, y) = (x as isize, y as isize);
        let down = at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1);
        let up = at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1);
        (down - up) / 8.0
    });
    (gx, gy)
}

pub fn velocity_jacobian(field: &VectorField2D) -> Jacobian {
    let (xx, xy) = sobel(&field.u_field());
    let (yx, yy) = sobel(&field.v_field());
    Jacobian { xx, xy, yx, yy }
}

/// Divergence statistics over interior pixels (one pixel in from each edge).
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceStats {
    /// `J_xx + J_yy` on the interior, a `(W-2) x (H-2)` grid.
    pub div: ScalarField2D,
    /// `sqrt(J_xx² + J_yy²)` on the same grid.
    pub grad_mag: ScalarField2D,
    pub histogram: Histogram,
    pub rms_div: f64,
    pub rms_grad: f64,
}

impl DivergenceStats {
    /// `rms_div / rms_grad`, or 0 when both vanish.
    pub fn ratio(&self) -> f64 {
        if self.rms_grad == 0.0 {
            if self.rms_div == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.rms_div / self.rms_grad
        }
    }
}

pub fn divergence_stats(field: &VectorField2D, bins: usize) -> Result<DivergenceStats> {
    if bins == 0 {
        return input_err("histogram needs at least one bin");
    }
    let (w, h) = (field.width(), field.height());
    if w < 4 || h < 4 {
        return input_err(format!("divergence statistics need at least 4x4 samples, got {w}x{h}"));
    }
    let j = velocity_jacobian(field);
    let inner = GridSpec::new(w - 2, h - 2, BoundaryMode::Clamp)?;
    let div = ScalarField2D::from_fn(inner, |x, y| j.xx.get(x + 1, y + 1) + j.yy.get(x + 1, y + 1));
    let grad_mag = ScalarField2D::from_fn(inner, |x, y| j.xx.get(x + 1, y + 1).hypot(j.yy.get(x + 1, y + 1)));
    let histogram = Histogram::linear(div.data(), bins)?;
    Ok(DivergenceStats {
        rms_div: rms(div.data()),
        rms_grad: rms(grad_mag.data()),
        div,
        grad_mag,
        histogram,
    })
}

fn rms(values: &[f64]) -> f64 {
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

/// `S[n][r]`, indexed as `s[order_index][radius_index]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureFnResult {
    pub orders: Vec<u32>,
    pub radii: Vec<f64>,
    pub s: Vec<Vec<f64>>,
}

fn check_increment_args(spec: &GridSpec, orders: &[u32], radii: &[f64], samples_per_r: usize) -> Result<()> {
    if orders.is_empty() || orders.contains(&0) {
        return input_err("orders must be a non-empty list of integers >= 1");
    }
    if samples_per_r == 0 {
        return input_err("need at least one orientation per radius");
    }
    let limit = spec.width().min(spec.height()) as f64 / 2.0;
    for &r in radii {
        if !(r >= 1.0) || r >= limit {
            return input_err(format!("radius {r} outside [1, {limit})"));
        }
    }
    Ok(())
}

/// Unit vectors at `2πj / m`, `j = 0..m`.
fn orientations(m: usize) -> Vec<(f64, f64)> {
    (0..m)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / m as f64;
            // exact zeros on the axes keep Clamp pair validity symmetric
            let snap = |c: f64| if c.abs() < 1e-12 { 0.0 } else { c };
            (snap(t.cos()), snap(t.sin()))
        })
        .collect()
}

/// Averages `f(x, y, px, py)` over all grid points and the displaced points
/// `(px, py) = (x, y) + r·e(θ)`. Under Clamp only pairs whose displaced
/// point lies inside the frame count; each orientation is averaged over its
/// own valid positions and orientations are then weighted equally.
fn increment_mean<const K: usize>(
    spec: &GridSpec,
    r: f64,
    dirs: &[(f64, f64)],
    f: impl Fn(usize, usize, f64, f64) -> [f64; K] + Sync,
) -> [f64; K] {
    let (w, h) = (spec.width(), spec.height());
    let clamp = spec.boundary() == BoundaryMode::Clamp;
    let mut total = [0.0; K];
    for &(cx, cy) in dirs {
        let (dx, dy) = (r * cx, r * cy);
        let rows: Vec<([f64; K], usize)> = (0..h)
            .into_par_iter()
            .map(|y| {
                let mut acc = [0.0; K];
                let mut n = 0;
                for x in 0..w {
                    let (px, py) = (x as f64 + dx, y as f64 + dy);
                    if clamp && !spec.contains(px, py) {
                        continue;
                    }
                    let vals = f(x, y, px, py);
                    for k in 0..K {
                        acc[k] += vals[k];
                    }
                    n += 1;
                }
                (acc, n)
            })
            .collect();
        let mut acc = [0.0; K];
        let mut n = 0;
        for (a, c) in rows {
            for k in 0..K {
                acc[k] += a[k];
            }
            n += c;
        }
        if n > 0 {
            for k in 0..K {
                total[k] += acc[k] / n as f64;
            }
        }
    }
    total.map(|t| t / dirs.len() as f64)
}

fn increments<F>(spec: &GridSpec, orders: &[u32], radii: &[f64], samples_per_r: usize, delta: F) -> StructureFnResult
where
    F: Fn(usize, usize, f64, f64) -> f64 + Sync,
{
    let dirs = orientations(samples_per_r);
    let mut s = vec![vec![0.0; radii.len()]; orders.len()];
    for (ri, &r) in radii.iter().enumerate() {
        for (oi, &n) in orders.iter().enumerate() {
            let [m] = increment_mean(spec, r, &dirs, |x, y, px, py| [delta(x, y, px, py).powi(n as i32)]);
            s[oi][ri] = m;
        }
    }
    StructureFnResult {
        orders: orders.to_vec(),
        radii: radii.to_vec(),
        s,
    }
}

/// Velocity structure functions `<|v(x + r e) - v(x)|^n>` with bilinear
/// sampling of the displaced point.
pub fn structure_function(
    field: &VectorField2D,
    orders: &[u32],
    radii: &[f64],
    samples_per_r: usize,
) -> Result<StructureFnResult> {
    check_increment_args(field.spec(), orders, radii, samples_per_r)?;
    Ok(increments(
        field.spec(),
        orders,
        radii,
        samples_per_r,
        |x, y, px, py| {
            let (u0, v0) = field.at(x, y);
            let (u1, v1) = field.sample(px, py);
            (u1 - u0).hypot(v1 - v0)
        },
    ))
}

/// Scalar increment moments `<|ρ(x + r e) - ρ(x)|^n>`.
pub fn scalar_increments(
    rho: &ScalarField2D,
    orders: &[u32],
    radii: &[f64],
    samples_per_r: usize,
) -> Result<StructureFnResult> {
    check_increment_args(rho.spec(), orders, radii, samples_per_r)?;
    Ok(increments(rho.spec(), orders, radii, samples_per_r, |x, y, px, py| {
        (rho.sample(px, py) - rho.get(x, y)).abs()
    }))
}

/// Sobel gradient magnitudes over interior pixels, row-major.
pub fn gradient_magnitudes(rho: &ScalarField2D) -> Result<Vec<f64>> {
    let (w, h) = (rho.width(), rho.height());
    if w < 3 || h < 3 {
        return input_err(format!("gradient statistics need at least 3x3 samples, got {w}x{h}"));
    }
    let (gx, gy) = sobel(rho);
    Ok((1..h - 1)
        .flat_map(|y| (1..w - 1).map(move |x| (x, y)))
        .map(|(x, y)| gx.get(x, y).hypot(gy.get(x, y)))
        .collect())
}

/// Log-spaced histogram of [`gradient_magnitudes`].
pub fn density_gradient_pdf(rho: &ScalarField2D, bins: usize) -> Result<Histogram> {
    Histogram::log_spaced(&gradient_magnitudes(rho)?, bins)
}

/// `P = tr(m)` and `Q = det(m)` of the velocity gradient after Gaussian
/// coarse-graining with `sigma = r`.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantResult {
    pub scale: f64,
    pub p: ScalarField2D,
    pub q: ScalarField2D,
    /// Over interior pixels (one in from each edge).
    pub joint_histogram: Histogram2D,
}

/// Under Clamp, smoothing near the frame bends linear fields; pixels at
/// least `ceil(3r) + 1` from every edge are unaffected.
pub fn coarse_grained_invariants(field: &VectorField2D, r: f64, bins: usize) -> Result<InvariantResult> {
    if !(r >= 0.0 && r.is_finite()) {
        return input_err(format!("coarse-graining scale must be finite and >= 0, got {r}"));
    }
    let (w, h) = (field.width(), field.height());
    if w < 3 || h < 3 {
        return input_err(format!("invariants need at least 3x3 samples, got {w}x{h}"));
    }
    let smooth = VectorField2D::from_components(
        gaussian_smooth(&field.u_field(), r)?,
        gaussian_smooth(&field.v_field(), r)?,
    )?;
    let j = velocity_jacobian(&smooth);
    let spec = *field.spec();
    let p = ScalarField2D::from_fn(spec, |x, y| j.xx.get(x, y) + j.yy.get(x, y));
    let q = ScalarField2D::from_fn(spec, |x, y| {
        j.xx.get(x, y) * j.yy.get(x, y) - j.xy.get(x, y) * j.yx.get(x, y)
    });
    let interior = |f: &ScalarField2D| -> Vec<f64> {
        (1..h - 1)
            .flat_map(|y| (1..w - 1).map(move |x| (x, y)))
            .map(|(x, y)| f.get(x, y))
            .collect()
    };
    let joint_histogram = Histogram2D::new(&interior(&p), &interior(&q), bins)?;
    Ok(InvariantResult {
        scale: r,
        p,
        q,
        joint_histogram,
    })
}

/// Flux of density fluctuations per radius.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxResult {
    pub radii: Vec<f64>,
    pub flux: Vec<f64>,
}

/// `<ρ(x + r e) · v(x)·∇ρ(x)>` over positions and `samples_per_r`
/// orientations, with Sobel gradients and bilinear sampling of the displaced
/// density. Pair validity under Clamp follows [`structure_function`].
pub fn density_flux(
    rho: &ScalarField2D,
    field: &VectorField2D,
    radii: &[f64],
    samples_per_r: usize,
) -> Result<FluxResult> {
    if !rho.spec().same_shape(field.spec()) {
        return input_err("density and velocity grids differ");
    }
    if samples_per_r == 0 {
        return input_err("need at least one orientation per radius");
    }
    let limit = rho.width().min(rho.height()) as f64 / 2.0;
    if let Some(&r) = radii.iter().find(|&&r| !(r >= 0.0) || r >= limit) {
        return input_err(format!("radius {r} outside [0, {limit})"));
    }
    let (gx, gy) = sobel(rho);
    let w = rho.width();
    let advect: Vec<f64> = (0..rho.data().len())
        .map(|i| field.u()[i] * gx.data()[i] + field.v()[i] * gy.data()[i])
        .collect();
    let dirs = orientations(samples_per_r);
    let flux = radii
        .iter()
        .map(|&r| {
            increment_mean(rho.spec(), r, &dirs, |x, y, px, py| {
                [rho.sample(px, py) * advect[y * w + x]]
            })[0]
        })
        .collect();
    Ok(FluxResult {
        radii: radii.to_vec(),
        flux,
    })
}

/// `sqrt(mean(Δu² + Δv²))` over all pixels.
pub fn rmse(pred: &VectorField2D, truth: &VectorField2D) -> Result<f64> {
    if !pred.spec().same_shape(truth.spec()) {
        return input_err(format!(
            "fields are {}x{} and {}x{}",
            pred.width(),
            pred.height(),
            truth.width(),
            truth.height()
        ));
    }
    let se: f64 = pred
        .u()
        .iter()
        .zip(truth.u())
        .zip(pred.v().iter().zip(truth.v()))
        .map(|((a, b), (c, d))| (a - b).powi(2) + (c - d).powi(2))
        .sum();
    Ok((se / pred.u().len() as f64).sqrt())
}
