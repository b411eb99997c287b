//! Synthetic PIV data: random incompressible flows, Gaussian particle
//! rendering and forward/backward particle advection.
//!
//! Randomness comes from one ChaCha8 stream per purpose (seeding density,
//! positions, diameters, intensities, spectra), so e.g. growing the particle
//! count appends particles without perturbing the ones already drawn.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex;

use crate::error::{input_err, Result};
use crate::fieldcore::{BoundaryMode, Fft2, GridSpec, ScalarField2D, VectorField2D};

const STREAM_PPP: u64 = 0;
const STREAM_POSITION: u64 = 1;
const STREAM_DIAMETER: u64 = 2;
const STREAM_INTENSITY: u64 = 3;
const STREAM_SPECTRUM_U: u64 = 10;
const STREAM_SPECTRUM_V: u64 = 11;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// A tracer particle: centre in pixels, diameter `d_p` and peak intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub x: f64,
    pub y: f64,
    pub d_p: f64,
    pub i0: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParticleSet {
    particles: Vec<Particle>,
}

impl ParticleSet {
    pub fn new(particles: Vec<Particle>) -> Result<Self> {
        for (i, p) in particles.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite()) {
                return input_err(format!("particle {i} has a non-finite position"));
            }
            if !(p.d_p > 0.0 && p.d_p.is_finite()) {
                return input_err(format!("particle {i} diameter {} must be > 0", p.d_p));
            }
            if !(p.i0 > 0.0 && p.i0 <= 255.0) {
                return input_err(format!("particle {i} intensity {} outside (0, 255]", p.i0));
            }
        }
        Ok(Self { particles })
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }
}

/// Particle seeding parameters. Defaults follow the usual synthetic-PIV
/// ranges: 0.05-0.1 particles per pixel, diameters 1-4 px, peak grey
/// values 200-255, displacements capped at 10 px.
#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub ppp: (f64, f64),
    pub d_p_range: (f64, f64),
    pub i0_range: (f64, f64),
    pub max_displacement: f64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            ppp: (0.05, 0.1),
            d_p_range: (1.0, 4.0),
            i0_range: (200.0, 255.0),
            max_displacement: 10.0,
            seed: 0,
        }
    }
}

impl GenParams {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    fn validate(&self) -> Result<()> {
        let check = |name: &str, (lo, hi): (f64, f64), min_exclusive: f64, max: f64| {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return input_err(format!("{name} range [{lo}, {hi}] is empty"));
            }
            if lo <= min_exclusive || hi > max {
                return input_err(format!(
                    "{name} range [{lo}, {hi}] must lie in ({min_exclusive}, {max}]"
                ));
            }
            Ok(())
        };
        check("ppp", self.ppp, 0.0, f64::MAX)?;
        check("d_p", self.d_p_range, 0.0, f64::MAX)?;
        check("I0", self.i0_range, 0.0, 255.0)?;
        if !(self.max_displacement > 0.0) {
            return input_err("max_displacement must be > 0");
        }
        Ok(())
    }
}

/// Seed particles uniformly over `[0, W) x [0, H)`.
///
/// The count is `round(ppp * W * H)` with `ppp` drawn once from its range.
pub fn seed_particles(params: &GenParams, spec: &GridSpec) -> Result<ParticleSet> {
    params.validate()?;
    let (w, h) = (spec.width() as f64, spec.height() as f64);
    let ppp = stream(params.seed, STREAM_PPP).random_range(params.ppp.0..=params.ppp.1);
    let count = (ppp * w * h).round() as usize;

    let mut pos = stream(params.seed, STREAM_POSITION);
    let mut dia = stream(params.seed, STREAM_DIAMETER);
    let mut int = stream(params.seed, STREAM_INTENSITY);
    let particles = (0..count)
        .map(|_| Particle {
            x: pos.random_range(0.0..w),
            y: pos.random_range(0.0..h),
            d_p: dia.random_range(params.d_p_range.0..=params.d_p_range.1),
            i0: int.random_range(params.i0_range.0..=params.i0_range.1),
        })
        .collect();
    Ok(ParticleSet { particles })
}

/// Render `I0 exp(-((x-x0)^2 + (y-y0)^2) / (d_p^2 / 8))` for every particle
/// within `3 d_p` of its centre, summed and clipped to `[0, 255]`.
///
/// Periodic grids wrap contributions across edges; clamped grids drop
/// out-of-frame pixels.
pub fn render_particles(particles: &ParticleSet, spec: &GridSpec) -> ScalarField2D {
    let (w, h) = (spec.width() as isize, spec.height() as isize);
    let mut image = vec![0.0; spec.len()];
    for p in &particles.particles {
        let reach = 3.0 * p.d_p;
        let inv = 8.0 / (p.d_p * p.d_p);
        let (x_lo, x_hi) = ((p.x - reach).ceil() as isize, (p.x + reach).floor() as isize);
        let (y_lo, y_hi) = ((p.y - reach).ceil() as isize, (p.y + reach).floor() as isize);
        for py in y_lo..=y_hi {
            let row = match spec.boundary() {
                BoundaryMode::Periodic => py.rem_euclid(h),
                BoundaryMode::Clamp if (0..h).contains(&py) => py,
                BoundaryMode::Clamp => continue,
            } as usize;
            let dy = py as f64 - p.y;
            for px in x_lo..=x_hi {
                let col = match spec.boundary() {
                    BoundaryMode::Periodic => px.rem_euclid(w),
                    BoundaryMode::Clamp if (0..w).contains(&px) => px,
                    BoundaryMode::Clamp => continue,
                } as usize;
                let dx = px as f64 - p.x;
                let r2 = dx * dx + dy * dy;
                if r2 <= reach * reach {
                    image[row * spec.width() + col] += p.i0 * (-r2 * inv).exp();
                }
            }
        }
    }
    for v in &mut image {
        *v = v.min(255.0);
    }
    ScalarField2D::new(*spec, image).expect("rendered samples are finite")
}

/// Move every particle through the steady `flow` with one classical RK4
/// step of size `dt` (negative `dt` integrates backward). Velocities are
/// sampled bilinearly under the flow's boundary mode; positions are not
/// wrapped.
pub fn advect_particles(particles: &ParticleSet, flow: &VectorField2D, dt: f64) -> ParticleSet {
    let particles = particles
        .particles
        .par_iter()
        .map(|p| {
            let (k1x, k1y) = flow.sample(p.x, p.y);
            let (k2x, k2y) = flow.sample(p.x + 0.5 * dt * k1x, p.y + 0.5 * dt * k1y);
            let (k3x, k3y) = flow.sample(p.x + 0.5 * dt * k2x, p.y + 0.5 * dt * k2y);
            let (k4x, k4y) = flow.sample(p.x + dt * k3x, p.y + dt * k3y);
            Particle {
                x: p.x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
                y: p.y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
                ..*p
            }
        })
        .collect();
    ParticleSet { particles }
}

/// A synthetic image pair with its ground-truth displacement field.
#[derive(Debug, Clone)]
pub struct ImagePair {
    pub image1: ScalarField2D,
    pub image2: ScalarField2D,
    pub truth: VectorField2D,
}

/// Seed particles, advect them half a frame backward (first image) and half
/// a frame forward (second image) through `flow`, and render both.
///
/// The truth is `flow` itself: the per-frame displacement from the first
/// image to the second.
pub fn make_pair(gen: &GenParams, flow: &VectorField2D) -> Result<ImagePair> {
    let peak = flow.max_magnitude();
    if peak > gen.max_displacement {
        return input_err(format!(
            "flow reaches {peak:.3} px, above the {} px displacement cap",
            gen.max_displacement
        ));
    }
    let spec = *flow.spec();
    let seeded = seed_particles(gen, &spec)?;
    let image1 = render_particles(&advect_particles(&seeded, flow, -0.5), &spec);
    let image2 = render_particles(&advect_particles(&seeded, flow, 0.5), &spec);
    Ok(ImagePair {
        image1,
        image2,
        truth: flow.clone(),
    })
}

/// Parameters of the random incompressible multi-scale flow.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSynthParams {
    /// Periodic grid, at least 8x8.
    pub spec: GridSpec,
    /// Modes with shell wavenumber below this (cycles per domain) are removed.
    pub k_min: usize,
    /// Width in pixels of the Gaussian spectral envelope.
    pub smooth_sigma: f64,
    pub target_max_displacement: f64,
    pub seed: u64,
}

impl FlowSynthParams {
    /// Defaults: `k_min = 2`, `smooth_sigma = 12` px.
    pub fn new(spec: GridSpec, target_max_displacement: f64, seed: u64) -> Self {
        Self {
            spec,
            k_min: 2,
            smooth_sigma: 12.0,
            target_max_displacement,
            seed,
        }
    }
}

/// Random amplitudes and phases per Fourier mode, high-pass at `k_min`,
/// Gaussian envelope, back to physical space, projection onto divergence-free
/// fields with `P(k) = I - k k^T / |k|^2`, then rescaling so the largest
/// displacement equals the target.
pub fn random_solenoidal_flow(params: &FlowSynthParams) -> Result<VectorField2D> {
    let spec = params.spec;
    let (w, h) = (spec.width(), spec.height());
    if spec.boundary() != BoundaryMode::Periodic {
        return input_err("flow synthesis needs a periodic grid");
    }
    if w < 8 || h < 8 {
        return input_err(format!("flow synthesis needs at least 8x8, got {w}x{h}"));
    }
    let nyquist = w.min(h) / 2;
    if params.k_min == 0 || params.k_min >= nyquist {
        return input_err(format!("k_min must be in [1, {nyquist}), got {}", params.k_min));
    }
    if !(params.smooth_sigma >= 0.0 && params.smooth_sigma.is_finite()) {
        return input_err("smooth_sigma must be finite and >= 0");
    }
    if !(params.target_max_displacement > 0.0 && params.target_max_displacement.is_finite()) {
        return input_err("target_max_displacement must be > 0");
    }

    let modes = Modes::new(w, h);
    let mut ru = stream(params.seed, STREAM_SPECTRUM_U);
    let mut rv = stream(params.seed, STREAM_SPECTRUM_V);
    let mut su = Vec::with_capacity(w * h);
    let mut sv = Vec::with_capacity(w * h);
    let s2 = params.smooth_sigma * params.smooth_sigma;
    for i in 0..w * h {
        let cu = Complex::from_polar(ru.random::<f64>(), 2.0 * PI * ru.random::<f64>());
        let cv = Complex::from_polar(rv.random::<f64>(), 2.0 * PI * rv.random::<f64>());
        let gain = if modes.nyquist[i] || modes.shell[i] < params.k_min as f64 {
            0.0
        } else {
            (-0.5 * modes.k2[i] * s2).exp()
        };
        su.push(cu * gain);
        sv.push(cv * gain);
    }

    let fft = Fft2::new(w, h);
    fft.inverse(&mut su);
    fft.inverse(&mut sv);
    let mut su: Vec<Complex<f64>> = su.iter().map(|c| Complex::new(c.re, 0.0)).collect();
    let mut sv: Vec<Complex<f64>> = sv.iter().map(|c| Complex::new(c.re, 0.0)).collect();
    fft.forward(&mut su);
    fft.forward(&mut sv);
    for i in 0..w * h {
        if modes.k2[i] == 0.0 || modes.nyquist[i] {
            su[i] = Complex::new(0.0, 0.0);
            sv[i] = Complex::new(0.0, 0.0);
            continue;
        }
        let (kx, ky) = (modes.kx[i], modes.ky[i]);
        let along = (su[i] * kx + sv[i] * ky) / modes.k2[i];
        su[i] -= along * kx;
        sv[i] -= along * ky;
    }
    fft.inverse(&mut su);
    fft.inverse(&mut sv);

    let u: Vec<f64> = su.iter().map(|c| c.re).collect();
    let v: Vec<f64> = sv.iter().map(|c| c.re).collect();
    let peak = u.iter().zip(&v).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max);
    if peak == 0.0 {
        return input_err("filter removed every mode; lower k_min or smooth_sigma");
    }
    let scale = params.target_max_displacement / peak;
    VectorField2D::new(
        spec,
        u.into_iter().map(|x| x * scale).collect(),
        v.into_iter().map(|x| x * scale).collect(),
    )
}

/// Per-bin wavenumber tables for a `w x h` FFT grid.
pub(crate) struct Modes {
    /// Angular wavenumbers in radians per pixel.
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
    pub k2: Vec<f64>,
    /// Wavenumber magnitude in cycles per `min(w, h)` pixels.
    pub shell: Vec<f64>,
    /// Bins on an even-length Nyquist row or column.
    pub nyquist: Vec<bool>,
}

impl Modes {
    pub fn new(w: usize, h: usize) -> Self {
        use crate::fieldcore::signed_freq;
        let l = w.min(h) as f64;
        let n = w * h;
        let mut m = Self {
            kx: Vec::with_capacity(n),
            ky: Vec::with_capacity(n),
            k2: Vec::with_capacity(n),
            shell: Vec::with_capacity(n),
            nyquist: Vec::with_capacity(n),
        };
        for iy in 0..h {
            let my = signed_freq(iy, h) as f64;
            for ix in 0..w {
                let mx = signed_freq(ix, w) as f64;
                let kx = 2.0 * PI * mx / w as f64;
                let ky = 2.0 * PI * my / h as f64;
                m.kx.push(kx);
                m.ky.push(ky);
                m.k2.push(kx * kx + ky * ky);
                m.shell.push((mx * l / w as f64).hypot(my * l / h as f64));
                m.nyquist
                    .push((w % 2 == 0 && ix == w / 2) || (h % 2 == 0 && iy == h / 2));
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldcore::fft2;

    fn periodic(w: usize, h: usize) -> GridSpec {
        GridSpec::new(w, h, BoundaryMode::Periodic).unwrap()
    }

    fn fixed_ppp(ppp: f64, seed: u64) -> GenParams {
        GenParams {
            ppp: (ppp, ppp),
            seed,
            ..GenParams::default()
        }
    }

    #[test]
    fn particle_count_rounding() {
        let set = seed_particles(&fixed_ppp(0.05, 1), &periodic(256, 256)).unwrap();
        assert_eq!(set.len(), 3277);
        let set = seed_particles(&fixed_ppp(0.1, 2), &periodic(100, 100)).unwrap();
        assert_eq!(set.len(), 1000);
        assert!(set
            .particles()
            .iter()
            .all(|p| (0.0..100.0).contains(&p.x) && (0.0..100.0).contains(&p.y)));
        assert!(set
            .particles()
            .iter()
            .all(|p| (1.0..=4.0).contains(&p.d_p) && (200.0..=255.0).contains(&p.i0)));
    }

    #[test]
    fn seeding_is_deterministic_and_prefix_stable() {
        let spec = periodic(64, 64);
        let a = seed_particles(&fixed_ppp(0.05, 9), &spec).unwrap();
        assert_eq!(a, seed_particles(&fixed_ppp(0.05, 9), &spec).unwrap());
        let b = seed_particles(&fixed_ppp(0.1, 9), &spec).unwrap();
        assert_eq!(&b.particles()[..a.len()], a.particles());
    }

    #[test]
    fn seeding_rejects_empty_ranges() {
        let spec = periodic(16, 16);
        let bad = GenParams {
            d_p_range: (4.0, 1.0),
            ..GenParams::default()
        };
        assert!(seed_particles(&bad, &spec).is_err());
        let bad = GenParams {
            i0_range: (200.0, 300.0),
            ..GenParams::default()
        };
        assert!(seed_particles(&bad, &spec).is_err());
    }

    #[test]
    fn single_particle_profile() {
        let spec = GridSpec::new(32, 32, BoundaryMode::Clamp).unwrap();
        let p = Particle {
            x: 10.0,
            y: 12.0,
            d_p: 2.0,
            i0: 220.0,
        };
        let img = render_particles(&ParticleSet::new(vec![p]).unwrap(), &spec);
        assert_eq!(img.get(10, 12), 220.0);
        // one pixel away = d_p / 2: I0 exp(-(1) / (4/8)) = I0 e^-2
        assert!((img.get(11, 12) - 220.0 * (-2.0f64).exp()).abs() < 1e-12);
        assert!((img.get(10, 11) / 220.0 - 0.1353).abs() < 1e-4);
        // outside 3 d_p nothing is drawn
        assert_eq!(img.get(17, 12), 0.0);
    }

    #[test]
    fn distant_particles_keep_their_peaks() {
        let spec = GridSpec::new(64, 32, BoundaryMode::Clamp).unwrap();
        let set = ParticleSet::new(vec![
            Particle {
                x: 10.0,
                y: 10.0,
                d_p: 3.0,
                i0: 210.0,
            },
            Particle {
                x: 40.0,
                y: 12.0,
                d_p: 3.0,
                i0: 250.0,
            },
        ])
        .unwrap();
        let img = render_particles(&set, &spec);
        assert_eq!(img.get(10, 10), 210.0);
        assert_eq!(img.get(40, 12), 250.0);
    }

    #[test]
    fn rendering_is_additive_then_clipped() {
        let spec = periodic(48, 48);
        let a = seed_particles(&fixed_ppp(0.05, 3), &spec).unwrap();
        let b = seed_particles(&fixed_ppp(0.05, 4), &spec).unwrap();
        let ab = ParticleSet::new([a.particles(), b.particles()].concat()).unwrap();
        // unclipped sums, rebuilt from the individual renders
        let ra = render_particles(&a, &spec);
        let rb = render_particles(&b, &spec);
        let rab = render_particles(&ab, &spec);
        for i in 0..spec.len() {
            let want = (ra.data()[i] + rb.data()[i]).min(255.0);
            if ra.data()[i] < 255.0 && rb.data()[i] < 255.0 {
                assert!((rab.data()[i] - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn periodic_rendering_wraps() {
        let spec = periodic(16, 16);
        let p = Particle {
            x: 0.0,
            y: 5.0,
            d_p: 2.0,
            i0: 200.0,
        };
        let img = render_particles(&ParticleSet::new(vec![p]).unwrap(), &spec);
        assert_eq!(img.get(1, 5), img.get(15, 5));
        assert!(img.get(15, 5) > 0.0);
    }

    #[test]
    fn advection_cases() {
        let spec = periodic(64, 64);
        let set = seed_particles(&fixed_ppp(0.05, 5), &spec).unwrap();
        let still = advect_particles(&set, &VectorField2D::zeros(spec), 1.0);
        assert_eq!(still, set);
        let moved = advect_particles(&set, &VectorField2D::uniform(spec, 2.0, 0.0), 1.0);
        for (a, b) in set.particles().iter().zip(moved.particles()) {
            assert_eq!(b.x, a.x + 2.0);
            assert_eq!(b.y, a.y);
            assert_eq!((b.d_p, b.i0), (a.d_p, a.i0));
        }
    }

    #[test]
    fn rk4_on_rigid_rotation() {
        let spec = GridSpec::new(64, 64, BoundaryMode::Clamp).unwrap();
        let (cx, cy, w) = (32.0, 32.0, 0.05);
        let rot = VectorField2D::from_fn(spec, |x, y| (w * (y as f64 - cy), -w * (x as f64 - cx)));
        let set = ParticleSet::new(
            (0..20)
                .map(|i| Particle {
                    x: 20.0 + i as f64 * 1.1,
                    y: 25.0 + (i % 7) as f64,
                    d_p: 2.0,
                    i0: 200.0,
                })
                .collect(),
        )
        .unwrap();
        let out = advect_particles(&set, &rot, 1.0);
        for (a, b) in set.particles().iter().zip(out.particles()) {
            let r0 = (a.x - cx).hypot(a.y - cy);
            let r1 = (b.x - cx).hypot(b.y - cy);
            assert!((r1 - r0).abs() / r0 < 1e-5, "{r0} -> {r1}");
        }
        // forward then backward returns home on a smooth (linear) flow
        let back = advect_particles(&advect_particles(&set, &rot, 0.5), &rot, -0.5);
        for (a, b) in set.particles().iter().zip(back.particles()) {
            assert!((a.x - b.x).abs() < 1e-6 && (a.y - b.y).abs() < 1e-6);
        }
    }

    fn flow_params(seed: u64) -> FlowSynthParams {
        FlowSynthParams::new(periodic(64, 48), 5.0, seed)
    }

    #[test]
    fn solenoidal_flow_contract() {
        let f = random_solenoidal_flow(&flow_params(11)).unwrap();
        assert!((f.max_magnitude() - 5.0).abs() < 1e-9);
        let n = f.u().len() as f64;
        assert!(f.u().iter().sum::<f64>().abs() / n < 1e-10);
        assert!(f.v().iter().sum::<f64>().abs() / n < 1e-10);

        let (w, h) = (64, 48);
        let fu = fft2(f.u(), w, h);
        let fv = fft2(f.v(), w, h);
        let modes = Modes::new(w, h);
        let energy: f64 = fu.iter().chain(&fv).map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let worst = (0..w * h)
            .map(|i| (fu[i] * modes.kx[i] + fv[i] * modes.ky[i]).norm())
            .fold(0.0, f64::max);
        assert!(worst / energy < 1e-10, "divergence residual {}", worst / energy);
    }

    #[test]
    fn solenoidal_flow_is_deterministic_and_high_passed() {
        let a = random_solenoidal_flow(&flow_params(3)).unwrap();
        assert_eq!(a, random_solenoidal_flow(&flow_params(3)).unwrap());
        assert_ne!(a, random_solenoidal_flow(&flow_params(4)).unwrap());
        let fu = fft2(a.u(), 64, 48);
        let modes = Modes::new(64, 48);
        let scale = fu.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for (c, s) in fu.iter().zip(&modes.shell) {
            if *s < 2.0 {
                assert!(c.norm() < 1e-9 * scale);
            }
        }
    }

    #[test]
    fn solenoidal_flow_rejections() {
        let mut p = flow_params(1);
        p.k_min = 24;
        assert!(random_solenoidal_flow(&p).is_err());
        let mut p = flow_params(1);
        p.spec = p.spec.with_boundary(BoundaryMode::Clamp);
        assert!(random_solenoidal_flow(&p).is_err());
    }

    #[test]
    fn pair_from_zero_flow_is_identical() {
        let spec = periodic(64, 64);
        let pair = make_pair(&GenParams::default().with_seed(1), &VectorField2D::zeros(spec)).unwrap();
        assert_eq!(pair.image1, pair.image2);
        assert!(pair.truth.u().iter().chain(pair.truth.v()).all(|&x| x == 0.0));
    }

    #[test]
    fn pair_from_uniform_flow_is_a_shift() {
        let spec = periodic(64, 64);
        let gen = GenParams::default().with_seed(8);
        let pair = make_pair(&gen, &VectorField2D::uniform(spec, 4.0, 0.0)).unwrap();
        for y in 0..64 {
            for x in 0..64 {
                let d = pair.image2.get((x + 4) % 64, y) - pair.image1.get(x, y);
                assert!(d.abs() < 1e-6);
            }
        }
    }

    #[test]
    fn pair_respects_displacement_cap() {
        let spec = periodic(32, 32);
        let gen = GenParams::default();
        assert!(make_pair(&gen, &VectorField2D::uniform(spec, 12.0, 0.0)).is_err());
    }
}
