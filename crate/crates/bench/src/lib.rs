//! Shared fixtures for the kernel benchmarks in `benches/`.

use halfspace_core::dist::{sample_band, DistributionSpec, DEFAULT_MAX_ATTEMPTS};
use halfspace_core::hinge::HingeProblem;
use halfspace_core::outlier::RemovalProblem;
use halfspace_core::rng::{stream, StreamTag};
use halfspace_core::{BandSpec, Label, SearchBall, UnitVec};

/// A band of half-width `b` around a random direction, with `n` draws in it.
pub fn banded(d: usize, n: usize, b: f64, seed: u64) -> (UnitVec, Vec<Vec<f64>>) {
    let u = UnitVec::random(d, &mut stream(seed, StreamTag::Diagnostics, 0));
    let band = BandSpec::new(u.clone(), b).expect("positive width");
    let xs = sample_band(&DistributionSpec::gaussian(d), &band, n, seed, DEFAULT_MAX_ATTEMPTS)
        .expect("gaussian band sampling")
        .points;
    (u, xs)
}

pub fn removal_problem(d: usize, n: usize, seed: u64) -> RemovalProblem {
    let (u, xs) = banded(d, n, 0.2, seed);
    RemovalProblem::new(xs, SearchBall::new(u.into_inner(), 0.2).expect("radius"), 0.2, 0.2, 2.0)
        .expect("valid problem")
}

/// Uniformly weighted, labeled by the band direction.
pub fn hinge_problem(d: usize, n: usize, seed: u64) -> HingeProblem {
    let (u, xs) = banded(d, n, 0.2, seed);
    let samples: Vec<(Vec<f64>, Label)> = xs
        .into_iter()
        .map(|x| {
            let y = Label::of(u.dot(&x));
            (x, y)
        })
        .collect();
    let w = vec![1.0 / n as f64; n];
    HingeProblem::new(
        samples,
        w,
        0.01,
        SearchBall::new(u.into_inner(), 0.2).expect("radius"),
        0.05,
    )
    .expect("valid problem")
}
