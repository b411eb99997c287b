//! Horn–Schunck optical flow with coarse-to-fine warping.
//!
//! Each pyramid level linearizes the brightness constancy constraint about
//! the current flow and runs Jacobi sweeps on the quadratic energy
//!
//! `E(u) = Σ (Ix·u + Iy·v + It)² + (λ/4)·‖G u‖²`
//!
//! where `G` is either the forward-difference gradient of both components
//! (classic smoothness) or the forward-difference divergence.

use rayon::prelude::*;

use crate::error::{input_err, Result};
use crate::fieldcore::{
    downsample2, par_fill, warp_backward_lanczos, BoundaryMode, GridSpec, ScalarField2D, VectorField2D,
};

const WARP_LOBES: usize = 4;

/// Penalty applied to the flow field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Regularizer {
    /// `‖∇u‖² + ‖∇v‖²`.
    #[default]
    Gradient,
    /// `(∇·u)²`.
    Divergence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HsConfig {
    /// Smoothness weight in squared grey levels per pixel. Particle images
    /// on a 0-255 scale have gradients near 100, hence the large default.
    pub lambda: f64,
    pub levels: usize,
    pub iters_per_level: usize,
    /// Warps at full resolution; each coarser level doubles the count, which
    /// costs little and lets the slow Jacobi smoothing settle where the
    /// image gradients are weak.
    pub warps_per_level: usize,
    pub regularizer: Regularizer,
}

impl Default for HsConfig {
    fn default() -> Self {
        Self {
            lambda: 2.0e4,
            levels: 4,
            iters_per_level: 100,
            warps_per_level: 3,
            regularizer: Regularizer::Gradient,
        }
    }
}

impl HsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return input_err(format!("lambda must be finite and > 0, got {}", self.lambda));
        }
        if self.levels == 0 || self.iters_per_level == 0 || self.warps_per_level == 0 {
            return input_err("levels, iterations and warps must all be >= 1");
        }
        Ok(())
    }
}

/// Spatial and temporal image derivatives on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    ix: ScalarField2D,
    iy: ScalarField2D,
    it: ScalarField2D,
}

impl Derivatives {
    pub fn new(ix: ScalarField2D, iy: ScalarField2D, it: ScalarField2D) -> Result<Self> {
        if !ix.spec().same_shape(iy.spec()) || !ix.spec().same_shape(it.spec()) {
            return input_err("derivative fields have different shapes");
        }
        if [&ix, &iy, &it].iter().any(|f| f.data().iter().any(|c| !c.is_finite())) {
            return input_err("derivatives must be finite");
        }
        Ok(Self { ix, iy, it })
    }

    pub fn ix(&self) -> &ScalarField2D {
        &self.ix
    }

    pub fn iy(&self) -> &ScalarField2D {
        &self.iy
    }

    pub fn it(&self) -> &ScalarField2D {
        &self.it
    }

    pub fn spec(&self) -> &GridSpec {
        self.ix.spec()
    }
}

/// `Ix`, `Iy` from central differences of the average image (Clamp edges),
/// `It = img2_warped - img1`.
pub fn image_derivatives(img1: &ScalarField2D, img2_warped: &ScalarField2D) -> Result<Derivatives> {
    if !img1.spec().same_shape(img2_warped.spec()) {
        return input_err(format!(
            "images are {}x{} and {}x{}",
            img1.width(),
            img1.height(),
            img2_warped.width(),
            img2_warped.height()
        ));
    }
    let spec = *img1.spec();
    let (w, h) = (spec.width(), spec.height());
    let (a, b) = (img1.data(), img2_warped.data());
    let avg = |x: usize, y: usize| 0.5 * (a[y * w + x] + b[y * w + x]);
    let ix = par_fill(&spec, |x, y| {
        0.5 * (avg((x + 1).min(w - 1), y) - avg(x.saturating_sub(1), y))
    });
    let iy = par_fill(&spec, |x, y| {
        0.5 * (avg(x, (y + 1).min(h - 1)) - avg(x, y.saturating_sub(1)))
    });
    let it = b.iter().zip(a).map(|(p, q)| p - q).collect();
    Derivatives::new(
        ScalarField2D::new(spec, ix)?,
        ScalarField2D::new(spec, iy)?,
        ScalarField2D::new(spec, it)?,
    )
}

/// Discrete objective minimized by [`hs_solve_level`].
pub fn hs_energy(d: &Derivatives, flow: &VectorField2D, lambda: f64, reg: Regularizer) -> f64 {
    let (w, h) = (flow.width(), flow.height());
    let (u, v) = (flow.u(), flow.v());
    let (ix, iy, it) = (d.ix.data(), d.iy.data(), d.it.data());
    let mut data = 0.0;
    for i in 0..w * h {
        data += (ix[i] * u[i] + iy[i] * v[i] + it[i]).powi(2);
    }
    let mut smooth = 0.0;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            match reg {
                Regularizer::Gradient => {
                    if x + 1 < w {
                        smooth += (u[i + 1] - u[i]).powi(2) + (v[i + 1] - v[i]).powi(2);
                    }
                    if y + 1 < h {
                        smooth += (u[i + w] - u[i]).powi(2) + (v[i + w] - v[i]).powi(2);
                    }
                }
                Regularizer::Divergence => smooth += divergence_at(u, v, w, h, x, y).powi(2),
            }
        }
    }
    data + 0.25 * lambda * smooth
}

#[inline]
fn divergence_at(u: &[f64], v: &[f64], w: usize, h: usize, x: usize, y: usize) -> f64 {
    let i = y * w + x;
    let dx = if x + 1 < w { u[i + 1] - u[i] } else { 0.0 };
    let dy = if y + 1 < h { v[i + w] - v[i] } else { 0.0 };
    dx + dy
}

/// Jacobi iterations of the Horn–Schunck Euler–Lagrange equations starting
/// from `init`. The energy [`hs_energy`] never increases between sweeps.
pub fn hs_solve_level(d: &Derivatives, init: &VectorField2D, cfg: &HsConfig) -> Result<VectorField2D> {
    cfg.validate()?;
    if !d.spec().same_shape(init.spec()) {
        return input_err("derivatives and initial flow have different shapes");
    }
    let (w, h) = (init.width(), init.height());
    let lambda = cfg.lambda;
    let (ix, iy, it) = (d.ix.data(), d.iy.data(), d.it.data());
    let inv: Vec<f64> = ix.iter().zip(iy).map(|(a, b)| 1.0 / (lambda + a * a + b * b)).collect();

    let mut u = init.u().to_vec();
    let mut v = init.v().to_vec();
    let mut nu = vec![0.0; w * h];
    let mut nv = vec![0.0; w * h];
    let mut div = vec![
        0.0;
        if cfg.regularizer == Regularizer::Divergence {
            w * h
        } else {
            0
        }
    ];

    for _ in 0..cfg.iters_per_level {
        if cfg.regularizer == Regularizer::Divergence {
            div.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
                for (x, q) in row.iter_mut().enumerate() {
                    *q = divergence_at(&u, &v, w, h, x, y);
                }
            });
        }
        let (u0, v0, q) = (&u, &v, &div);
        nu.par_chunks_mut(w)
            .zip(nv.par_chunks_mut(w))
            .enumerate()
            .for_each(|(y, (ru, rv))| {
                let up = y.saturating_sub(1) * w;
                let down = (y + 1).min(h - 1) * w;
                let row = y * w;
                for x in 0..w {
                    let i = row + x;
                    let (ub, vb) = match cfg.regularizer {
                        Regularizer::Gradient => {
                            let l = row + x.saturating_sub(1);
                            let r = row + (x + 1).min(w - 1);
                            (
                                0.25 * (u0[l] + u0[r] + u0[up + x] + u0[down + x]),
                                0.25 * (v0[l] + v0[r] + v0[up + x] + v0[down + x]),
                            )
                        }
                        Regularizer::Divergence => {
                            // y = x - D^T D x / 4
                            let mut gu = 0.0;
                            let mut gv = 0.0;
                            if x + 1 < w {
                                gu -= q[i];
                            }
                            if x > 0 {
                                gu += q[i - 1];
                            }
                            if y + 1 < h {
                                gv -= q[i];
                            }
                            if y > 0 {
                                gv += q[i - w];
                            }
                            (u0[i] - 0.25 * gu, v0[i] - 0.25 * gv)
                        }
                    };
                    let r = (ix[i] * ub + iy[i] * vb + it[i]) * inv[i];
                    ru[x] = ub - ix[i] * r;
                    rv[x] = vb - iy[i] * r;
                }
            });
        std::mem::swap(&mut u, &mut nu);
        std::mem::swap(&mut v, &mut nv);
    }
    Ok(VectorField2D::from_vecs_unchecked(*init.spec(), u, v))
}

/// Dense flow from `img1` to `img2`. Before each linearization both images
/// are warped halfway towards each other (`img1` by `-f/2`, `img2` by
/// `+f/2`) with a 4-lobe Lanczos kernel.
pub fn estimate_hs(img1: &ScalarField2D, img2: &ScalarField2D, cfg: &HsConfig) -> Result<VectorField2D> {
    Ok(estimate_hs_levels(img1, img2, cfg)?.pop().expect("at least one level"))
}

/// Flow after each pyramid level, coarsest first, each in its own level's
/// pixel units and grid.
pub fn estimate_hs_levels(img1: &ScalarField2D, img2: &ScalarField2D, cfg: &HsConfig) -> Result<Vec<VectorField2D>> {
    if !img1.spec().same_shape(img2.spec()) {
        return input_err(format!(
            "images are {}x{} and {}x{}",
            img1.width(),
            img1.height(),
            img2.width(),
            img2.height()
        ));
    }
    cfg.validate()?;
    let min_side = img1.width().min(img1.height());
    if cfg.levels > 31 || min_side >> (cfg.levels - 1) < 8 {
        return input_err(format!(
            "{} pyramid levels need a side of at least {} px, image has {min_side}",
            cfg.levels,
            8u64 << (cfg.levels - 1).min(60)
        ));
    }

    let mut p1 = vec![img1.clone()];
    let mut p2 = vec![img2.clone()];
    for _ in 1..cfg.levels {
        p1.push(downsample2(p1.last().unwrap())?);
        p2.push(downsample2(p2.last().unwrap())?);
    }

    let mut history = Vec::with_capacity(cfg.levels);
    let mut flow = VectorField2D::zeros(*p1[cfg.levels - 1].spec());
    for level in (0..cfg.levels).rev() {
        let (a, b) = (&p1[level], &p2[level]);
        if flow.spec() != a.spec() {
            flow = upsample_flow(&flow, *a.spec());
        }
        for _ in 0..cfg.warps_per_level << level {
            let wa = warp_backward_lanczos(a, &flow.scale(-0.5), WARP_LOBES)?;
            let wb = warp_backward_lanczos(b, &flow.scale(0.5), WARP_LOBES)?;
            let d = linearize_about(image_derivatives(&wa, &wb)?, &flow)?;
            flow = hs_solve_level(&d, &flow, cfg)?;
        }
        history.push(flow.clone());
    }
    Ok(history)
}

/// Rewrites the constraint for a flow increment into one for the total flow
/// `f`: `It' = It - Ix·fu - Iy·fv`. Under Clamp, pixels where either
/// half-warp samples outside the frame carry no data term.
fn linearize_about(d: Derivatives, flow: &VectorField2D) -> Result<Derivatives> {
    let spec = *flow.spec();
    let (w, h) = (spec.width() as f64, spec.height() as f64);
    let clamp = spec.boundary() == BoundaryMode::Clamp;
    let (fu, fv) = (flow.u(), flow.v());
    let mut ix = d.ix.into_data();
    let mut iy = d.iy.into_data();
    let mut it = d.it.into_data();
    let width = spec.width();
    for i in 0..ix.len() {
        let (x, y) = ((i % width) as f64, (i / width) as f64);
        let (hu, hv) = (0.5 * fu[i].abs(), 0.5 * fv[i].abs());
        if clamp && !(x - hu >= 0.0 && x + hu <= w - 1.0 && y - hv >= 0.0 && y + hv <= h - 1.0) {
            ix[i] = 0.0;
            iy[i] = 0.0;
            it[i] = 0.0;
        } else {
            it[i] -= ix[i] * fu[i] + iy[i] * fv[i];
        }
    }
    Derivatives::new(
        ScalarField2D::new(spec, ix)?,
        ScalarField2D::new(spec, iy)?,
        ScalarField2D::new(spec, it)?,
    )
}

/// Doubles a coarse flow onto `fine`, where coarse sample `i` sits at fine `2i`.
pub fn upsample_flow(coarse: &VectorField2D, fine: GridSpec) -> VectorField2D {
    VectorField2D::from_fn(fine, |x, y| {
        let (u, v) = coarse.sample(0.5 * x as f64, 0.5 * y as f64);
        (2.0 * u, 2.0 * v)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{make_pair, random_solenoidal_flow, FlowSynthParams, GenParams};
    use proptest::prelude::*;

    fn clamp(w: usize, h: usize) -> GridSpec {
        GridSpec::new(w, h, BoundaryMode::Clamp).unwrap()
    }

    fn ramp(spec: GridSpec, a: f64, b: f64, shift: (f64, f64)) -> ScalarField2D {
        ScalarField2D::from_fn(spec, |x, y| 50.0 + a * (x as f64 - shift.0) + b * (y as f64 - shift.1))
    }

    fn rmse(a: &VectorField2D, b: &VectorField2D) -> f64 {
        let se: f64 = (0..a.u().len())
            .map(|i| (a.u()[i] - b.u()[i]).powi(2) + (a.v()[i] - b.v()[i]).powi(2))
            .sum();
        (se / a.u().len() as f64).sqrt()
    }

    #[test]
    fn derivative_examples() {
        let s = clamp(12, 9);
        let img = ramp(s, 3.0, 0.0, (0.0, 0.0));
        let d = image_derivatives(&img, &img).unwrap();
        assert!(d.it().data().iter().all(|&t| t == 0.0));
        for y in 0..9 {
            for x in 1..11 {
                assert!((d.ix().get(x, y) - 3.0).abs() < 1e-12);
                assert_eq!(d.iy().get(x, y), 0.0);
            }
        }
        let moved = ramp(s, 3.0, 0.0, (1.0, 0.0));
        let d = image_derivatives(&img, &moved).unwrap();
        for y in 0..9 {
            for x in 1..11 {
                assert!((d.it().get(x, y) + 3.0).abs() < 1e-12);
                assert!((d.it().get(x, y) + d.ix().get(x, y)).abs() < 1e-12);
            }
        }
        assert!(image_derivatives(&img, &ScalarField2D::zeros(clamp(12, 8))).is_err());
    }

    #[test]
    fn zero_temporal_derivative_is_a_fixed_point() {
        let s = clamp(16, 16);
        let img = ramp(s, 2.0, -1.0, (0.0, 0.0));
        let d = image_derivatives(&img, &img).unwrap();
        let out = hs_solve_level(&d, &VectorField2D::zeros(s), &HsConfig::default()).unwrap();
        assert!(out.u().iter().chain(out.v()).all(|&c| c == 0.0));
    }

    #[test]
    fn ramp_shift_converges_to_the_shift() {
        let s = clamp(24, 20);
        let cfg = HsConfig {
            lambda: 1.0,
            iters_per_level: 200,
            ..HsConfig::default()
        };
        for (a, b, t) in [(10.0, 0.0, 0.7), (4.0, 0.0, -0.3), (0.0, 8.0, 1.0)] {
            let n = f64::hypot(a, b);
            let shift = (t * a / n, t * b / n);
            let img1 = ramp(s, a, b, (0.0, 0.0));
            let img2 = ramp(s, a, b, shift);
            let d = image_derivatives(&img1, &img2).unwrap();
            let out = hs_solve_level(&d, &VectorField2D::zeros(s), &cfg).unwrap();
            for y in 2..18 {
                for x in 2..22 {
                    let (u, v) = out.at(x, y);
                    assert!(
                        (u - shift.0).abs() < 1e-3 && (v - shift.1).abs() < 1e-3,
                        "({u}, {v}) vs {shift:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn heavy_regularization_flattens_the_flow() {
        let s = clamp(48, 48);
        let texture = |dx: f64| {
            ScalarField2D::from_fn(s, move |x, y| {
                let (x, y) = (x as f64 - dx, y as f64);
                120.0 + 40.0 * (0.11 * x).sin() * (0.07 * y + 0.4).cos() + 20.0 * (0.05 * x - 0.09 * y).sin()
            })
        };
        let d = image_derivatives(&texture(0.0), &texture(0.6)).unwrap();
        let cfg = HsConfig {
            lambda: 1e6,
            iters_per_level: 100,
            ..HsConfig::default()
        };
        let out = hs_solve_level(&d, &VectorField2D::uniform(s, 1.0, -0.5), &cfg).unwrap();
        let n = out.u().len() as f64;
        let (mu, mv) = (out.u().iter().sum::<f64>() / n, out.v().iter().sum::<f64>() / n);
        let var: f64 = out.u().iter().map(|u| (u - mu).powi(2)).sum::<f64>() / n
            + out.v().iter().map(|v| (v - mv).powi(2)).sum::<f64>() / n;
        let ms: f64 = out.u().iter().chain(out.v()).map(|c| c * c).sum::<f64>() / n;
        assert!(var <= 1e-6 * ms, "{var} vs {ms}");
    }

    #[test]
    fn divergence_penalty_ignores_rotation() {
        let s = clamp(20, 14);
        let rot = VectorField2D::from_fn(s, |x, y| (-(y as f64) * 0.1, x as f64 * 0.1));
        let zero = ScalarField2D::zeros(s);
        let d = Derivatives::new(zero.clone(), zero.clone(), zero).unwrap();
        let cfg = HsConfig {
            regularizer: Regularizer::Divergence,
            ..HsConfig::default()
        };
        assert_eq!(hs_solve_level(&d, &rot, &cfg).unwrap(), rot);
        let smoothed = hs_solve_level(&d, &rot, &HsConfig::default()).unwrap();
        assert!(rmse(&smoothed, &rot) > 1e-3);
    }

    #[test]
    fn config_and_pyramid_checks() {
        let s = clamp(64, 40);
        let img = ramp(s, 1.0, 1.0, (0.0, 0.0));
        assert!(estimate_hs(
            &img,
            &img,
            &HsConfig {
                levels: 3,
                ..HsConfig::default()
            }
        )
        .is_ok());
        assert!(estimate_hs(
            &img,
            &img,
            &HsConfig {
                levels: 4,
                ..HsConfig::default()
            }
        )
        .is_err());
        assert!(estimate_hs(
            &img,
            &img,
            &HsConfig {
                lambda: 0.0,
                ..HsConfig::default()
            }
        )
        .is_err());
        assert!(estimate_hs(
            &img,
            &img,
            &HsConfig {
                warps_per_level: 0,
                ..HsConfig::default()
            }
        )
        .is_err());
        assert!(estimate_hs(&img, &ScalarField2D::zeros(clamp(64, 41)), &HsConfig::default()).is_err());
    }

    #[test]
    fn identical_images_give_zero_at_every_level() {
        let s = clamp(96, 80);
        let img = make_pair(&GenParams::default().with_seed(2), &VectorField2D::zeros(s))
            .unwrap()
            .image1;
        let levels = estimate_hs_levels(&img, &img, &HsConfig::default()).unwrap();
        assert_eq!(levels.len(), 4);
        for f in levels {
            assert!(f.u().iter().chain(f.v()).all(|&c| c == 0.0));
        }
    }

    #[test]
    fn uniform_pair_accuracy() {
        let s = clamp(128, 128);
        let truth = VectorField2D::uniform(s, 4.0, 0.0);
        let p = make_pair(&GenParams::default().with_seed(11), &truth).unwrap();
        let est = estimate_hs(&p.image1, &p.image2, &HsConfig::default()).unwrap();
        assert!(rmse(&est, &truth) <= 0.1, "{}", rmse(&est, &truth));
    }

    #[test]
    fn solenoidal_pair_accuracy() {
        let s = GridSpec::new(256, 256, BoundaryMode::Periodic).unwrap();
        let truth = random_solenoidal_flow(&FlowSynthParams::new(s, 5.0, 4)).unwrap();
        let p = make_pair(&GenParams::default().with_seed(12), &truth).unwrap();
        let est = estimate_hs(&p.image1, &p.image2, &HsConfig::default()).unwrap();
        assert!(rmse(&est, &truth) <= 0.3, "{}", rmse(&est, &truth));
    }

    #[test]
    fn pyramid_levels_refine() {
        let cfg = HsConfig::default();
        let s = clamp(256, 256);
        for (k, shift) in [(4.0, 0.0), (-3.0, 2.0), (0.0, 8.0), (6.0, -6.0), (-8.0, -5.0)]
            .into_iter()
            .enumerate()
        {
            let p = make_pair(
                &GenParams::default().with_seed(20 + k as u64),
                &VectorField2D::uniform(s, shift.0, shift.1),
            )
            .unwrap();
            let levels = estimate_hs_levels(&p.image1, &p.image2, &cfg).unwrap();
            let errs: Vec<f64> = levels
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    let scale = (1 << (cfg.levels - 1 - i)) as f64;
                    let truth = VectorField2D::uniform(*f.spec(), shift.0 / scale, shift.1 / scale);
                    scale * rmse(f, &truth)
                })
                .collect();
            assert!(errs[0] <= 0.5, "{errs:?}");
            for w in errs.windows(2) {
                assert!(w[1] <= w[0] + 0.02, "{errs:?}");
            }
        }
    }

    #[test]
    fn swapped_inputs_negate_the_field() {
        let s = clamp(128, 128);
        let cfg = HsConfig::default();
        let p = make_pair(
            &GenParams::default().with_seed(31),
            &VectorField2D::uniform(s, 2.4, 1.3),
        )
        .unwrap();
        let fwd = estimate_hs(&p.image1, &p.image2, &cfg).unwrap();
        let bwd = estimate_hs(&p.image2, &p.image1, &cfg).unwrap();
        assert!(rmse(&fwd, &bwd.scale(-1.0)) <= 0.05, "{}", rmse(&fwd, &bwd.scale(-1.0)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn energy_never_increases(
            a in proptest::collection::vec(0.0..255.0f64, 90),
            b in proptest::collection::vec(0.0..255.0f64, 90),
            lambda in 0.5..500.0f64,
            div in any::<bool>(),
        ) {
            let s = clamp(10, 9);
            let d = image_derivatives(&ScalarField2D::new(s, a).unwrap(), &ScalarField2D::new(s, b).unwrap()).unwrap();
            let reg = if div { Regularizer::Divergence } else { Regularizer::Gradient };
            let cfg = HsConfig { lambda, iters_per_level: 1, regularizer: reg, ..HsConfig::default() };
            let mut f = VectorField2D::zeros(s);
            let mut e = hs_energy(&d, &f, lambda, reg);
            for _ in 0..30 {
                f = hs_solve_level(&d, &f, &cfg).unwrap();
                let next = hs_energy(&d, &f, lambda, reg);
                prop_assert!(next <= e + 1e-9, "{next} > {e}");
                e = next;
            }
        }
    }
}
