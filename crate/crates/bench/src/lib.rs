//! Fixtures shared by the benchmarks.

use piv_core::synthgen::{random_solenoidal_flow, ImagePair};
use piv_core::{make_pair, BoundaryMode, FlowSynthParams, GenParams, GridSpec, VectorField2D};

/// Uniform-flow pair with integer grey levels on a Clamp grid.
pub fn uniform_pair(size: usize, dx: f64, dy: f64, seed: u64) -> ImagePair {
    let spec = GridSpec::new(size, size, BoundaryMode::Clamp).expect("positive size");
    let pair = make_pair(
        &GenParams::default().with_seed(seed),
        &VectorField2D::uniform(spec, dx, dy),
    )
    .expect("within cap");
    quantize(pair)
}

/// Random solenoidal flow on a Periodic grid with peak displacement 5 px.
pub fn solenoidal_flow(size: usize, seed: u64) -> VectorField2D {
    let spec = GridSpec::new(size, size, BoundaryMode::Periodic).expect("positive size");
    random_solenoidal_flow(&FlowSynthParams::new(spec, 5.0, seed)).expect("valid parameters")
}

fn quantize(p: ImagePair) -> ImagePair {
    ImagePair {
        image1: p.image1.map(f64::round),
        image2: p.image2.map(f64::round),
        truth: p.truth,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_requested_shape() {
        let p = uniform_pair(32, 1.0, -2.0, 3);
        assert_eq!((p.image1.width(), p.image2.height()), (32, 32));
        assert!(p.image1.data().iter().all(|v| v.fract() == 0.0));
        let f = solenoidal_flow(32, 1);
        assert!((f.max_magnitude() - 5.0).abs() < 1e-9);
    }
}
