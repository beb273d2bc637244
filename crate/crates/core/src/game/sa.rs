//! Sample-average approximation of the pseudogradient.

use nalgebra::DVector;

use super::batch::BatchSchedule;
use super::sampler::GradPoint;
use super::GameModel;
use crate::rng::{stream_rng, StreamKind};
use crate::scalar::Scalar;

/// Averages `M_k` i.i.d. gradient samples for one agent at iteration `k`.
///
/// Samples come from the `(run_seed, agent, k)` stream, so the result is
/// bit-reproducible across runs and identical whether the caller is the
/// per-agent solver or the matrix-form engine. The mean is accumulated as a
/// running average, so a zero-variance sampler reproduces the exact gradient
/// bit for bit at any batch size.
pub fn sa_pseudogradient<T: Scalar>(
    game: &GameModel<T>,
    agent: usize,
    at: GradPoint<'_, T>,
    k: u64,
    schedule: &BatchSchedule,
    run_seed: u64,
) -> DVector<T> {
    let batch = schedule.batch_size(k);
    let mut rng = stream_rng(run_seed, StreamKind::Gradient, agent, k);
    let sampler = game.sampler();
    let mut mean = DVector::zeros(sampler.dim(agent));
    let mut draw = DVector::zeros(sampler.dim(agent));
    for t in 1..=batch {
        sampler.sample_into(agent, at, &mut rng, &mut draw);
        let inv_t = T::one() / T::of(t as f64);
        mean.zip_apply(&draw, |m, d| *m += (d - *m) * inv_t);
    }
    mean
}
