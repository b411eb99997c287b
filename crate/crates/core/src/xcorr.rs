//! Multi-pass window-deformation cross-correlation (WIDIM-style).
//!
//! Each pass deforms both images symmetrically by half the current flow
//! predictor, correlates interrogation windows over a bounded integer
//! search range, locates the correlation maximum (optionally refined with a
//! three-point Gaussian fit), optionally replaces outliers by the
//! normalized median test, and interpolates the window vectors back to a
//! dense per-pixel field.

use rayon::prelude::*;

use crate::error::{input_err, PivError, Result};
use crate::fieldcore::{gaussian_smooth, warp_backward_lanczos, BoundaryMode, ScalarField2D, VectorField2D};

/// Interrogation window geometry for one pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    /// Window covers offsets `[-half_size, half_size]` on both axes.
    pub half_size: usize,
    /// Distance between neighbouring window centres.
    pub stride: usize,
    /// Largest integer displacement searched along each axis.
    pub search_radius: usize,
}

impl WindowSpec {
    pub fn new(half_size: usize, stride: usize, search_radius: usize) -> Result<Self> {
        let w = Self {
            half_size,
            stride,
            search_radius,
        };
        w.validate()?;
        Ok(w)
    }

    fn validate(&self) -> Result<()> {
        if self.half_size < 1 {
            return input_err("window half size must be >= 1");
        }
        if self.stride < 1 || self.stride > self.size() {
            return input_err(format!("stride {} must lie in [1, {}]", self.stride, self.size()));
        }
        if self.search_radius < 1 {
            return input_err("search radius must be >= 1");
        }
        Ok(())
    }

    /// Window side length `2 k + 1`.
    pub fn size(&self) -> usize {
        2 * self.half_size + 1
    }
}

/// Correlation scores over the integer displacements `[-r, r]^2` for one
/// window centre.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    pub center: (usize, usize),
    radius: usize,
    scores: Vec<f64>,
}

impl CostVolume {
    /// Build from row-major scores (`uy` outer, `ux` inner), each axis
    /// spanning `[-radius, radius]`.
    pub fn new(center: (usize, usize), radius: usize, scores: Vec<f64>) -> Result<Self> {
        let side = 2 * radius + 1;
        if scores.len() != side * side {
            return input_err(format!("expected {} scores, got {}", side * side, scores.len()));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return input_err("cost volume scores must be finite");
        }
        Ok(Self { center, radius, scores })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Score at integer displacement `(ux, uy)`.
    pub fn score(&self, ux: isize, uy: isize) -> f64 {
        let r = self.radius as isize;
        let side = 2 * r + 1;
        self.scores[((uy + r) * side + ux + r) as usize]
    }
}

/// Pass schedule and post-processing switches.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipassConfig {
    pub passes: Vec<WindowSpec>,
    /// Replace normalized-median outliers after each pass.
    pub validate: bool,
    /// Refine integer peaks with a three-point Gaussian fit.
    pub subpixel: bool,
    /// Gaussian width (px) applied to each pass's dense correction before
    /// it is added to the predictor; 0 disables.
    pub correction_smoothing: f64,
}

impl Default for MultipassConfig {
    /// One coarse 33 px pass searching +-10 px, a 25 px pass, then four
    /// 13 px refinement passes (two at stride 4, two at stride 2).
    fn default() -> Self {
        let w = |k, s, r| WindowSpec {
            half_size: k,
            stride: s,
            search_radius: r,
        };
        Self {
            passes: vec![
                w(16, 16, 10),
                w(12, 8, 4),
                w(6, 4, 2),
                w(6, 4, 2),
                w(6, 2, 2),
                w(6, 2, 2),
            ],
            validate: true,
            subpixel: true,
            correction_smoothing: 2.5,
        }
    }
}

impl MultipassConfig {
    pub fn validate(&self) -> Result<()> {
        if self.passes.is_empty() {
            return input_err("at least one pass is required");
        }
        for p in &self.passes {
            p.validate()?;
        }
        if !(self.correction_smoothing >= 0.0) {
            return input_err("correction smoothing must be >= 0");
        }
        if self.passes.windows(2).any(|w| w[1].half_size > w[0].half_size) {
            return input_err("window sizes must be non-increasing across passes");
        }
        Ok(())
    }
}

/// Lanczos lobes used for image deformation.
pub const DEFORM_LOBES: usize = 4;

/// Normalized-median test parameters.
pub const MEDIAN_THRESHOLD: f64 = 2.0;
pub const MEDIAN_NOISE_FLOOR: f64 = 0.1;

/// Zero-mean, unit-energy correlation between the window of `img1` at
/// `center` and the windows of `img2` displaced by every `u` in the search
/// range. Zero-variance patches score 0.
pub fn cross_correlate(
    img1: &ScalarField2D,
    img2: &ScalarField2D,
    center: (usize, usize),
    win: &WindowSpec,
) -> Result<CostVolume> {
    if !img1.spec().same_shape(img2.spec()) {
        return input_err("images differ in shape");
    }
    win.validate()?;
    Ok(correlate_unchecked(img1, img2, center, win))
}

fn correlate_unchecked(
    img1: &ScalarField2D,
    img2: &ScalarField2D,
    center: (usize, usize),
    win: &WindowSpec,
) -> CostVolume {
    let r = win.search_radius as isize;
    let side = (2 * r + 1) as usize;
    let scores = match Correlator::new(img1, img2, center, win) {
        None => vec![0.0; side * side],
        Some(c) => {
            let mut s = Vec::with_capacity(side * side);
            for uy in -r..=r {
                for ux in -r..=r {
                    s.push(c.score(ux, uy));
                }
            }
            s
        }
    };
    CostVolume {
        center,
        radius: win.search_radius,
        scores,
    }
}

/// Zero-mean template of `img1` plus the search region of `img2` and its
/// summed-area tables, scoring single displacements on demand.
struct Correlator {
    n: usize,
    m: usize,
    r: isize,
    tmpl: Vec<f64>,
    energy1: f64,
    region: Vec<f64>,
    sat: Vec<f64>,
    sat2: Vec<f64>,
}

impl Correlator {
    /// `None` when the template has zero variance.
    fn new(img1: &ScalarField2D, img2: &ScalarField2D, center: (usize, usize), win: &WindowSpec) -> Option<Self> {
        let k = win.half_size as isize;
        let r = win.search_radius as isize;
        let (cx, cy) = (center.0 as isize, center.1 as isize);
        let n = win.size();
        let count = (n * n) as f64;

        let mut tmpl = extract(img1, cx - k, cy - k, n);
        let mean1 = tmpl.iter().sum::<f64>() / count;
        tmpl.iter_mut().for_each(|t| *t -= mean1);
        let energy1: f64 = tmpl.iter().map(|t| t * t).sum();
        if energy1 == 0.0 || energy1 <= 1e-12 * mean1 * mean1 * count {
            return None;
        }

        let m = n + 2 * r as usize;
        let region = extract(img2, cx - k - r, cy - k - r, m);
        let stride = m + 1;
        let mut sat = vec![0.0; stride * stride];
        let mut sat2 = vec![0.0; stride * stride];
        for y in 0..m {
            let (mut row, mut row2) = (0.0, 0.0);
            for x in 0..m {
                let b = region[y * m + x];
                row += b;
                row2 += b * b;
                sat[(y + 1) * stride + x + 1] = sat[y * stride + x + 1] + row;
                sat2[(y + 1) * stride + x + 1] = sat2[y * stride + x + 1] + row2;
            }
        }
        Some(Self {
            n,
            m,
            r,
            tmpl,
            energy1,
            region,
            sat,
            sat2,
        })
    }

    fn boxsum(&self, t: &[f64], x0: usize, y0: usize) -> f64 {
        let (n, stride) = (self.n, self.m + 1);
        t[(y0 + n) * stride + x0 + n] - t[y0 * stride + x0 + n] - t[(y0 + n) * stride + x0] + t[y0 * stride + x0]
    }

    fn score(&self, ux: isize, uy: isize) -> f64 {
        let (n, m) = (self.n, self.m);
        let (x0, y0) = ((ux + self.r) as usize, (uy + self.r) as usize);
        let count = (n * n) as f64;
        let sb = self.boxsum(&self.sat, x0, y0);
        let sb2 = self.boxsum(&self.sat2, x0, y0);
        let energy2 = sb2 - sb * sb / count;
        if energy2 <= 1e-12 * sb2.max(f64::MIN_POSITIVE) {
            return 0.0;
        }
        let mut acc = [0.0; 4];
        for oy in 0..n {
            let t = &self.tmpl[oy * n..(oy + 1) * n];
            let b = &self.region[(y0 + oy) * m + x0..(y0 + oy) * m + x0 + n];
            dot4(t, b, &mut acc);
        }
        let dot = (acc[0] + acc[1]) + (acc[2] + acc[3]);
        dot / (self.energy1 * energy2).sqrt()
    }
}

/// Square `side x side` patch with top-left corner `(x0, y0)`, resolved
/// through the image's boundary mode.
fn extract(img: &ScalarField2D, x0: isize, y0: isize, side: usize) -> Vec<f64> {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let s = side as isize;
    let mut out = Vec::with_capacity(side * side);
    if x0 >= 0 && y0 >= 0 && x0 + s <= w && y0 + s <= h {
        let d = img.data();
        for y in y0..y0 + s {
            let start = (y * w + x0) as usize;
            out.extend_from_slice(&d[start..start + side]);
        }
    } else {
        for y in y0..y0 + s {
            for x in x0..x0 + s {
                out.push(img.get_resolved(x, y));
            }
        }
    }
    out
}

#[inline]
fn dot4(a: &[f64], b: &[f64], acc: &mut [f64; 4]) {
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    for (k, (x, y)) in ra.iter().zip(rb).enumerate() {
        acc[k] += x * y;
    }
}

/// Displacement of the correlation maximum.
///
/// Ties go to the smaller `|u|`, then lexicographically smaller `(ux, uy)`.
/// With `subpixel`, a peak strictly inside the search range is refined per
/// axis by a three-point Gaussian fit (offset clamped to half a pixel). A
/// flat volume yields `(0, 0)`.
pub fn peak_displacement(cv: &CostVolume, subpixel: bool) -> (f64, f64) {
    let r = cv.radius as isize;
    let first = cv.scores[0];
    if cv.scores.iter().all(|&s| s == first) {
        return (0.0, 0.0);
    }
    let mut best = (0isize, 0isize);
    let mut best_score = f64::NEG_INFINITY;
    for uy in -r..=r {
        for ux in -r..=r {
            let s = cv.score(ux, uy);
            let better = s > best_score
                || (s == best_score && {
                    let (m, bm) = (ux * ux + uy * uy, best.0 * best.0 + best.1 * best.1);
                    m < bm || (m == bm && (ux, uy) < best)
                });
            if better {
                best = (ux, uy);
                best_score = s;
            }
        }
    }
    let (ux, uy) = best;
    if !subpixel || ux.abs() == r || uy.abs() == r {
        return (ux as f64, uy as f64);
    }
    let dx = gaussian_offset(cv.score(ux - 1, uy), best_score, cv.score(ux + 1, uy));
    let dy = gaussian_offset(cv.score(ux, uy - 1), best_score, cv.score(ux, uy + 1));
    (ux as f64 + dx, uy as f64 + dy)
}

/// Peak of the symmetrized correlation `(C12(u) + C21(-u)) / 2`.
///
/// The integer peak comes from the forward volume; the backward volume is
/// only evaluated at the peak and its four neighbours used by the subpixel
/// fit. Identical images therefore give exactly zero.
fn symmetric_peak(
    img1: &ScalarField2D,
    img2: &ScalarField2D,
    center: (usize, usize),
    win: &WindowSpec,
    subpixel: bool,
) -> (f64, f64) {
    let fwd = correlate_unchecked(img1, img2, center, win);
    let (px, py) = peak_displacement(&fwd, false);
    let (ux, uy) = (px as isize, py as isize);
    let r = win.search_radius as isize;
    if !subpixel || ux.abs() == r || uy.abs() == r {
        return (px, py);
    }
    let Some(bwd) = Correlator::new(img2, img1, center, win) else {
        return (px, py);
    };
    let sym = |dx: isize, dy: isize| 0.5 * (fwd.score(ux + dx, uy + dy) + bwd.score(-ux - dx, -uy - dy));
    let c0 = sym(0, 0);
    let dx = gaussian_offset(sym(-1, 0), c0, sym(1, 0));
    let dy = gaussian_offset(sym(0, -1), c0, sym(0, 1));
    (px + dx, py + dy)
}

/// Vertex of the parabola through the logarithms of three samples.
/// Samples are shifted to be positive when needed.
pub fn gaussian_offset(minus: f64, centre: f64, plus: f64) -> f64 {
    let lo = minus.min(centre).min(plus);
    let shift = if lo <= 0.0 { 1e-3 - lo } else { 0.0 };
    let (lm, l0, lp) = ((minus + shift).ln(), (centre + shift).ln(), (plus + shift).ln());
    let den = 2.0 * lm - 4.0 * l0 + 2.0 * lp;
    if !(den < 0.0) {
        return 0.0;
    }
    ((lm - lp) / den).clamp(-0.5, 0.5)
}

/// Vectors on the regular lattice of window centres.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowGrid {
    /// Column of each lattice column's centre, ascending and evenly spaced.
    pub xs: Vec<usize>,
    /// Row of each lattice row's centre.
    pub ys: Vec<usize>,
    /// Row-major `ys.len() x xs.len()` components.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl WindowGrid {
    fn nx(&self) -> usize {
        self.xs.len()
    }

    fn ny(&self) -> usize {
        self.ys.len()
    }

    /// Bilinear interpolation of the lattice to every pixel of `like`'s
    /// grid. Periodic grids interpolate across the wrap; on Clamp grids
    /// pixels beyond the outermost centres take the nearest edge value.
    pub fn densify(&self, like: &VectorField2D) -> VectorField2D {
        let spec = like.spec();
        let periodic = spec.boundary() == BoundaryMode::Periodic;
        let tx = axis_weights(&self.xs, spec.width(), periodic);
        let ty = axis_weights(&self.ys, spec.height(), periodic);
        let nx = self.nx();
        let interp = |d: &[f64], x: usize, y: usize| {
            let (x0, x1, fx) = tx[x];
            let (y0, y1, fy) = ty[y];
            let top = d[y0 * nx + x0] + fx * (d[y0 * nx + x1] - d[y0 * nx + x0]);
            let bot = d[y1 * nx + x0] + fx * (d[y1 * nx + x1] - d[y1 * nx + x0]);
            top + fy * (bot - top)
        };
        VectorField2D::from_fn(*spec, |x, y| (interp(&self.u, x, y), interp(&self.v, x, y)))
    }
}

fn axis_weights(centres: &[usize], n: usize, periodic: bool) -> Vec<(usize, usize, f64)> {
    let last = centres.len() - 1;
    let frac = |p: usize, a: usize, b: usize| (p as f64 - a as f64) / (b as f64 - a as f64);
    (0..n)
        .map(|p| {
            if last == 0 {
                return (0, 0, 0.0);
            }
            let j = centres.partition_point(|&c| c <= p);
            if j > 0 && j <= last {
                return (j - 1, j, frac(p, centres[j - 1], centres[j]));
            }
            if periodic {
                let gap = (centres[0] + n - centres[last]) as f64;
                let dist = (p + n - centres[last]) % n;
                (last, 0, dist as f64 / gap)
            } else if j == 0 {
                (0, 0, 0.0)
            } else {
                (last, last, 0.0)
            }
        })
        .collect()
}

/// Window centres along an axis of `n` pixels.
///
/// On Clamp grids the centres are evenly spaced, keep each window inside
/// `[0, n)` and sit centred within the leftover margin. On periodic grids
/// they start at 0 and cover the whole circle.
pub fn window_centres(n: usize, win: &WindowSpec, periodic: bool) -> Result<Vec<usize>> {
    let size = win.size();
    if size > n {
        return input_err(format!("window of {size} px does not fit in {n} px"));
    }
    if periodic {
        return Ok((0..n.div_ceil(win.stride)).map(|i| i * win.stride).collect());
    }
    let span = n - size;
    let count = span / win.stride + 1;
    let offset = win.half_size + (span - (count - 1) * win.stride) / 2;
    Ok((0..count).map(|i| offset + i * win.stride).collect())
}

/// Normalized median test over 3x3 lattice neighbourhoods.
///
/// A vector is an outlier when, for either component, its distance to the
/// neighbour median divided by (median neighbour residual + `noise`)
/// exceeds `threshold`. Outliers are replaced by the neighbour medians; all
/// decisions use the input grid. Returns the filtered grid and the number
/// of replaced vectors.
pub fn normalized_median_filter(grid: &WindowGrid, threshold: f64, noise: f64) -> (WindowGrid, usize) {
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut out = grid.clone();
    let mut replaced = 0;
    let mut nu = Vec::with_capacity(8);
    let mut nv = Vec::with_capacity(8);
    for j in 0..ny {
        for i in 0..nx {
            nu.clear();
            nv.clear();
            for dj in -1isize..=1 {
                for di in -1isize..=1 {
                    let (ii, jj) = (i as isize + di, j as isize + dj);
                    if (di, dj) == (0, 0) || ii < 0 || jj < 0 || ii >= nx as isize || jj >= ny as isize {
                        continue;
                    }
                    let idx = jj as usize * nx + ii as usize;
                    nu.push(grid.u[idx]);
                    nv.push(grid.v[idx]);
                }
            }
            if nu.is_empty() {
                continue;
            }
            let idx = j * nx + i;
            let (mu, ru) = median_and_residual(&mut nu, grid.u[idx], noise);
            let (mv, rv) = median_and_residual(&mut nv, grid.v[idx], noise);
            if ru > threshold || rv > threshold {
                out.u[idx] = mu;
                out.v[idx] = mv;
                replaced += 1;
            }
        }
    }
    (out, replaced)
}

fn median_and_residual(neigh: &mut [f64], value: f64, noise: f64) -> (f64, f64) {
    let med = median(neigh);
    let mut res: Vec<f64> = neigh.iter().map(|x| (x - med).abs()).collect();
    let rm = median(&mut res);
    (med, (value - med).abs() / (rm + noise))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Dense displacement field from an image pair.
pub fn estimate_widim(img1: &ScalarField2D, img2: &ScalarField2D, cfg: &MultipassConfig) -> Result<VectorField2D> {
    Ok(estimate_widim_passes(img1, img2, cfg)?
        .pop()
        .expect("at least one pass"))
}

/// Like [`estimate_widim`] but returns the dense field after every pass.
pub fn estimate_widim_passes(
    img1: &ScalarField2D,
    img2: &ScalarField2D,
    cfg: &MultipassConfig,
) -> Result<Vec<VectorField2D>> {
    if !img1.spec().same_shape(img2.spec()) {
        return input_err(format!(
            "images differ in shape: {}x{} vs {}x{}",
            img1.width(),
            img1.height(),
            img2.width(),
            img2.height()
        ));
    }
    cfg.validate()?;
    let periodic = img1.spec().boundary() == BoundaryMode::Periodic;
    let mut lattices = Vec::with_capacity(cfg.passes.len());
    for p in &cfg.passes {
        lattices.push((
            window_centres(img1.width(), p, periodic)?,
            window_centres(img1.height(), p, periodic)?,
        ));
    }
    if img1.is_constant() || img2.is_constant() {
        return Err(PivError::Estimation(
            "cannot correlate featureless (constant) images".into(),
        ));
    }

    let mut dense = VectorField2D::zeros(*img1.spec());
    let mut history = Vec::with_capacity(cfg.passes.len());
    for (pass, (xs, ys)) in cfg.passes.iter().zip(lattices) {
        let (w1, w2) = if history.is_empty() {
            (img1.clone(), img2.clone())
        } else {
            (
                warp_backward_lanczos(img1, &dense.scale(-0.5), DEFORM_LOBES)?,
                warp_backward_lanczos(img2, &dense.scale(0.5), DEFORM_LOBES)?,
            )
        };
        let nx = xs.len();
        let predicted: Vec<(f64, f64)> = (0..nx * ys.len()).map(|i| dense.at(xs[i % nx], ys[i / nx])).collect();
        let vectors: Vec<(f64, f64)> = (0..nx * ys.len())
            .into_par_iter()
            .map(|i| {
                let (du, dv) = symmetric_peak(&w1, &w2, (xs[i % nx], ys[i / nx]), pass, cfg.subpixel);
                (predicted[i].0 + du, predicted[i].1 + dv)
            })
            .collect();
        let mut grid = WindowGrid {
            xs,
            ys,
            u: vectors.iter().map(|p| p.0).collect(),
            v: vectors.iter().map(|p| p.1).collect(),
        };
        if cfg.validate {
            grid = normalized_median_filter(&grid, MEDIAN_THRESHOLD, MEDIAN_NOISE_FLOOR).0;
        }
        for (i, (pu, pv)) in predicted.iter().enumerate() {
            grid.u[i] -= pu;
            grid.v[i] -= pv;
        }
        let mut correction = grid.densify(&dense);
        if cfg.correction_smoothing > 0.0 {
            correction = VectorField2D::from_components(
                gaussian_smooth(&correction.u_field(), cfg.correction_smoothing)?,
                gaussian_smooth(&correction.v_field(), cfg.correction_smoothing)?,
            )?;
        }
        dense = dense.add(&correction)?;
        history.push(dense.clone());
    }
    Ok(history)
}
