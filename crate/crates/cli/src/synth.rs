//! Synthetic pairs shared by `generate` and `bench`.

use piv_core::synthgen::{random_solenoidal_flow, ImagePair};
use piv_core::{make_pair, BoundaryMode, FlowSynthParams, GenParams, GridSpec, ScalarField2D, VectorField2D};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::args::{FlowKind, SynthArgs};
use crate::error::{usage, CliError};

/// Independent generator for pair `index`: the same `(seed, index)` always
/// yields the same pair, whatever the batch size.
pub fn pair_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Uniform displacement with magnitude drawn from `[0, max]` and a uniform
/// direction.
pub fn random_uniform(rng: &mut impl Rng, max: f64) -> FlowKind {
    let mag = rng.random_range(0.0..=max);
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    FlowKind::Uniform(mag * angle.cos(), mag * angle.sin())
}

/// Truth flow and rendered images for pair `index`. Uniform flows live on a
/// Clamp grid, random solenoidal flows on a Periodic one.
pub fn synth_pair(kind: FlowKind, synth: &SynthArgs, index: usize) -> Result<ImagePair, CliError> {
    let gen = GenParams::default();
    let mut rng = pair_rng(synth.seed, index);
    let (flow_seed, particle_seed) = (rng.next_u64(), rng.next_u64());
    let flow = match kind {
        FlowKind::Uniform(dx, dy) => {
            if dx.hypot(dy).is_nan() || dx.hypot(dy) > gen.max_displacement {
                return usage(format!(
                    "uniform displacement ({dx}, {dy}) exceeds {} px",
                    gen.max_displacement
                ));
            }
            VectorField2D::uniform(GridSpec::new(synth.width, synth.height, BoundaryMode::Clamp)?, dx, dy)
        }
        FlowKind::Random => {
            if !(synth.max_disp > 0.0 && synth.max_disp <= gen.max_displacement) {
                return usage(format!("--max-disp must lie in (0, {}]", gen.max_displacement));
            }
            let spec = GridSpec::new(synth.width, synth.height, BoundaryMode::Periodic)?;
            random_solenoidal_flow(&FlowSynthParams::new(spec, synth.max_disp, flow_seed))?
        }
    };
    Ok(make_pair(&gen.with_seed(particle_seed), &flow)?)
}

/// The pair as it reads back from disk: grey levels rounded to integers,
/// flow rounded to `f32`, Clamp grids.
pub fn as_stored(pair: &ImagePair) -> ImagePair {
    let image = |f: &ScalarField2D| f.map(f64::round).with_boundary(BoundaryMode::Clamp);
    let t = &pair.truth;
    let narrow = |c: &[f64]| c.iter().map(|&x| x as f32 as f64).collect();
    let truth = VectorField2D::new(
        t.spec().with_boundary(BoundaryMode::Clamp),
        narrow(t.u()),
        narrow(t.v()),
    )
    .expect("same shape");
    ImagePair {
        image1: image(&pair.image1),
        image2: image(&pair.image2),
        truth,
    }
}
