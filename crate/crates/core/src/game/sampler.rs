//! Gradient oracle interface.

use nalgebra::DVector;
use rand::RngCore;

use crate::scalar::Scalar;

/// Evaluation point for one agent's partial gradient.
///
/// Network games evaluate at the agent's estimate of the full decision
/// profile (its own block embedded at its offset); aggregative games
/// evaluate at the pair (own action, local estimate of the average).
#[derive(Debug, Clone, Copy)]
pub enum GradPoint<'a, T: Scalar> {
    Network { estimate: &'a DVector<T> },
    Aggregative {
        own: &'a DVector<T>,
        average: &'a DVector<T>,
    },
}

/// Stochastic gradient oracle of one game.
///
/// `exact` is the expected-value gradient (available for the built-in test
/// games); `sample_into` draws one realization of the sampled gradient. In
/// aggregative mode both return the combined own-plus-scaled-aggregate term.
pub trait GradientSampler<T: Scalar>: Send + Sync {
    /// Dimension of agent `i`'s gradient block.
    fn dim(&self, agent: usize) -> usize;

    fn exact(&self, agent: usize, at: GradPoint<'_, T>) -> DVector<T>;

    /// Writes one gradient sample into `out` (dimension of agent's block).
    fn sample_into(
        &self,
        agent: usize,
        at: GradPoint<'_, T>,
        rng: &mut dyn RngCore,
        out: &mut DVector<T>,
    );

    fn sample(&self, agent: usize, at: GradPoint<'_, T>, rng: &mut dyn RngCore) -> DVector<T> {
        let mut out = DVector::zeros(self.dim(agent));
        self.sample_into(agent, at, rng, &mut out);
        out
    }
}
