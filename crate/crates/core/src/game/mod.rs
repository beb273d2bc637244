//! Game model: per-agent stochastic costs, local box sets, affine coupling
//! constraints, and pseudogradient oracles.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

mod batch;
pub mod quadratic;
mod sa;
mod sampler;

pub use batch::BatchSchedule;
pub use sa::sa_pseudogradient;
pub use sampler::{GradPoint, GradientSampler};

/// Whether costs depend on the full decision profile or only on the average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameMode {
    Network,
    Aggregative,
}

/// Per-coordinate box `[lo, hi]`, the local feasible set of one agent.
#[derive(Debug, Clone)]
pub struct BoxBounds<T: Scalar> {
    lo: DVector<T>,
    hi: DVector<T>,
}

impl<T: Scalar> BoxBounds<T> {
    pub fn new(lo: DVector<T>, hi: DVector<T>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                context: "box bounds",
                expected: lo.len(),
                found: hi.len(),
            });
        }
        for (l, h) in lo.iter().zip(hi.iter()) {
            if !(l.is_finite() && h.is_finite()) || l > h {
                return Err(Error::InvalidParameter {
                    name: "box",
                    reason: "bounds must be finite with lo <= hi".into(),
                });
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn symmetric(dim: usize, radius: T) -> Self {
        Self {
            lo: DVector::from_element(dim, -radius),
            hi: DVector::from_element(dim, radius),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &DVector<T> {
        &self.lo
    }

    pub fn hi(&self) -> &DVector<T> {
        &self.hi
    }

    /// Componentwise clamp; the prox of the box indicator for any step size.
    pub fn project(&self, y: &DVector<T>) -> DVector<T> {
        DVector::from_fn(self.lo.len(), |i, _| clamp(y[i], self.lo[i], self.hi[i]))
    }

    pub fn project_mut(&self, y: &mut DVector<T>) {
        for i in 0..y.len() {
            y[i] = clamp(y[i], self.lo[i], self.hi[i]);
        }
    }

    pub fn contains(&self, y: &DVector<T>) -> bool {
        y.iter()
            .zip(self.lo.iter().zip(self.hi.iter()))
            .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    pub fn contains_interior(&self, y: &DVector<T>) -> bool {
        y.iter()
            .zip(self.lo.iter().zip(self.hi.iter()))
            .all(|(v, (l, h))| *v > *l && *v < *h)
    }

    /// Uniform draw from the box.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> DVector<T> {
        DVector::from_fn(self.lo.len(), |i, _| T::uniform(rng, self.lo[i], self.hi[i]))
    }
}

#[inline]
fn clamp<T: Scalar>(v: T, lo: T, hi: T) -> T {
    if v < lo {
        lo
    } else if v > hi {
        hi
    } else {
        v
    }
}

/// Componentwise `max(y, 0)`, the projection onto the nonnegative orthant.
pub fn project_nonneg<T: Scalar>(y: &DVector<T>) -> DVector<T> {
    y.map(|v| if v > T::zero() { v } else { T::zero() })
}

pub fn project_nonneg_mut<T: Scalar>(y: &mut DVector<T>) {
    for v in y.iter_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

/// Monotonicity/Lipschitz data of the expected game.
///
/// For the built-in quadratic games these are computed from the quadratic
/// form; for user games they must be supplied.
#[derive(Debug, Clone)]
pub struct GameConstants<T> {
    /// Strong monotonicity constant of the pseudogradient.
    pub eta: T,
    /// Lipschitz constant of the pseudogradient.
    pub ell_f: T,
    /// Lipschitz constant of the estimate-evaluated pseudogradient.
    pub ell_p: T,
    /// Lipschitz constants of the aggregative map in (own, aggregate).
    pub ell_agg: Option<AggregativeLipschitz<T>>,
}

#[derive(Debug, Clone, Copy)]
pub struct AggregativeLipschitz<T> {
    pub own: T,
    pub aggregate: T,
}

/// A stochastic generalized Nash game.
///
/// Each agent `i` holds a decision `x_i` in a compact box, a stochastic cost
/// whose gradient is reachable through [`GradientSampler`], and a share
/// `A_i` of the affine coupling constraint `A x <= b`.
pub struct GameModel<T: Scalar> {
    mode: GameMode,
    dims: Vec<usize>,
    offsets: Vec<usize>,
    boxes: Vec<BoxBounds<T>>,
    coupling: Vec<DMatrix<T>>,
    rhs: DVector<T>,
    sampler: Arc<dyn GradientSampler<T>>,
    constants: GameConstants<T>,
    slater_witness: Option<Vec<DVector<T>>>,
}

impl<T: Scalar> GameModel<T> {
    pub fn new(
        mode: GameMode,
        boxes: Vec<BoxBounds<T>>,
        coupling: Vec<DMatrix<T>>,
        rhs: DVector<T>,
        sampler: Arc<dyn GradientSampler<T>>,
        constants: GameConstants<T>,
    ) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::InvalidParameter {
                name: "boxes",
                reason: "at least one agent required".into(),
            });
        }
        if coupling.len() != boxes.len() {
            return Err(Error::DimensionMismatch {
                context: "coupling blocks",
                expected: boxes.len(),
                found: coupling.len(),
            });
        }
        let dims: Vec<usize> = boxes.iter().map(BoxBounds::dim).collect();
        let m = rhs.len();
        for (i, a) in coupling.iter().enumerate() {
            if a.nrows() != m || a.ncols() != dims[i] {
                return Err(Error::DimensionMismatch {
                    context: "coupling matrix",
                    expected: m * dims[i],
                    found: a.nrows() * a.ncols(),
                });
            }
        }
        if mode == GameMode::Aggregative && dims.iter().any(|&d| d != dims[0]) {
            return Err(Error::InvalidParameter {
                name: "dims",
                reason: "aggregative games need equal agent dimensions".into(),
            });
        }
        let mut offsets = Vec::with_capacity(dims.len());
        let mut acc = 0;
        for &d in &dims {
            offsets.push(acc);
            acc += d;
        }
        Ok(Self {
            mode,
            dims,
            offsets,
            boxes,
            coupling,
            rhs,
            sampler,
            constants,
            slater_witness: None,
        })
    }

    /// Registers and verifies a strictly feasible point: `A x0 < b`
    /// componentwise and `x0` interior to every box.
    pub fn with_slater_witness(mut self, witness: Vec<DVector<T>>) -> Result<Self> {
        if witness.len() != self.num_agents() {
            return Err(Error::DimensionMismatch {
                context: "slater witness",
                expected: self.num_agents(),
                found: witness.len(),
            });
        }
        for (i, w) in witness.iter().enumerate() {
            if !self.boxes[i].contains_interior(w) {
                return Err(Error::InfeasibleWitness(format!(
                    "agent {i} point is not interior to its box"
                )));
            }
        }
        let slack = &self.rhs - self.apply_coupling_blocks(&witness);
        if slack.iter().any(|s| *s <= T::zero()) {
            return Err(Error::InfeasibleWitness(
                "witness does not satisfy A x < b strictly".into(),
            ));
        }
        self.slater_witness = Some(witness);
        Ok(self)
    }

    pub fn mode(&self) -> GameMode {
        self.mode
    }

    pub fn num_agents(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim_of(&self, agent: usize) -> usize {
        self.dims[agent]
    }

    /// Offset of agent `i`'s block in the stacked decision vector.
    pub fn offset_of(&self, agent: usize) -> usize {
        self.offsets[agent]
    }

    pub fn dim_total(&self) -> usize {
        self.offsets.last().copied().unwrap_or(0) + self.dims.last().copied().unwrap_or(0)
    }

    pub fn constraint_dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn box_of(&self, agent: usize) -> &BoxBounds<T> {
        &self.boxes[agent]
    }

    pub fn coupling_of(&self, agent: usize) -> &DMatrix<T> {
        &self.coupling[agent]
    }

    /// Stacked coupling matrix `A = [A_1, ..., A_N]`.
    pub fn coupling_stacked(&self) -> DMatrix<T> {
        let mut a = DMatrix::zeros(self.constraint_dim(), self.dim_total());
        for (i, block) in self.coupling.iter().enumerate() {
            a.view_mut((0, self.offsets[i]), (self.constraint_dim(), self.dims[i]))
                .copy_from(block);
        }
        a
    }

    pub fn rhs(&self) -> &DVector<T> {
        &self.rhs
    }

    /// Per-agent share `b_i = b / N` of the constraint offset.
    pub fn rhs_share(&self) -> DVector<T> {
        &self.rhs / T::of(self.num_agents() as f64)
    }

    pub fn sampler(&self) -> &dyn GradientSampler<T> {
        self.sampler.as_ref()
    }

    pub fn constants(&self) -> &GameConstants<T> {
        &self.constants
    }

    /// Overrides the monotonicity/Lipschitz data (user-supplied games).
    pub fn constants_mut(&mut self) -> &mut GameConstants<T> {
        &mut self.constants
    }

    pub fn slater_witness(&self) -> Option<&[DVector<T>]> {
        self.slater_witness.as_deref()
    }

    /// Splits a stacked decision vector into per-agent blocks.
    pub fn split_blocks(&self, x: &DVector<T>) -> Vec<DVector<T>> {
        (0..self.num_agents())
            .map(|i| x.rows(self.offsets[i], self.dims[i]).into_owned())
            .collect()
    }

    pub fn stack_blocks(&self, blocks: &[DVector<T>]) -> DVector<T> {
        let mut x = DVector::zeros(self.dim_total());
        for (i, b) in blocks.iter().enumerate() {
            x.rows_mut(self.offsets[i], self.dims[i]).copy_from(b);
        }
        x
    }

    fn apply_coupling_blocks(&self, blocks: &[DVector<T>]) -> DVector<T> {
        let mut ax = DVector::zeros(self.constraint_dim());
        for (a, x) in self.coupling.iter().zip(blocks.iter()) {
            ax.gemv(T::one(), a, x, T::one());
        }
        ax
    }

    /// `A x` for a stacked decision vector.
    pub fn apply_coupling(&self, x: &DVector<T>) -> DVector<T> {
        let mut ax = DVector::zeros(self.constraint_dim());
        for (i, a) in self.coupling.iter().enumerate() {
            let block = x.rows(self.offsets[i], self.dims[i]);
            ax.gemv(T::one(), a, &block, T::one());
        }
        ax
    }

    /// `max`-norm of the positive part of `A x - b`.
    pub fn constraint_violation(&self, x: &DVector<T>) -> T {
        let slack = self.apply_coupling(x) - &self.rhs;
        slack
            .iter()
            .fold(T::zero(), |acc, &s| if s > acc { s } else { acc })
    }

    /// Average of the agent blocks (aggregative games).
    pub fn average_strategy(&self, x: &DVector<T>) -> DVector<T> {
        let nbar = self.dims[0];
        let mut avg = DVector::zeros(nbar);
        for i in 0..self.num_agents() {
            avg += x.rows(self.offsets[i], nbar);
        }
        avg / T::of(self.num_agents() as f64)
    }

    /// Exact expected pseudogradient of agent `i` at the given point.
    pub fn exact_grad(&self, agent: usize, at: GradPoint<'_, T>) -> DVector<T> {
        self.sampler.exact(agent, at)
    }

    /// Stacked exact pseudogradient `F(x)` of the expected game.
    pub fn exact_pseudogradient(&self, x: &DVector<T>) -> DVector<T> {
        let mut out = DVector::zeros(self.dim_total());
        match self.mode {
            GameMode::Network => {
                for i in 0..self.num_agents() {
                    let g = self.sampler.exact(i, GradPoint::Network { estimate: x });
                    out.rows_mut(self.offsets[i], self.dims[i]).copy_from(&g);
                }
            }
            GameMode::Aggregative => {
                let avg = self.average_strategy(x);
                for i in 0..self.num_agents() {
                    let own = x.rows(self.offsets[i], self.dims[i]).into_owned();
                    let g = self
                        .sampler
                        .exact(i, GradPoint::Aggregative { own: &own, average: &avg });
                    out.rows_mut(self.offsets[i], self.dims[i]).copy_from(&g);
                }
            }
        }
        out
    }
}

impl<T: Scalar> std::fmt::Debug for GameModel<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GameModel")
            .field("mode", &self.mode)
            .field("dims", &self.dims)
            .field("constraints", &self.rhs.len())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn prox_box_clamps_componentwise() {
        let b = BoxBounds::new(dvector![0.0], dvector![1.0]).unwrap();
        assert_eq!(b.project(&dvector![1.5]), dvector![1.0]);
        assert_eq!(b.project(&dvector![0.5]), dvector![0.5]);

        let b2 = BoxBounds::new(dvector![-2.0, 0.0], dvector![-1.0, 3.0]).unwrap();
        assert_eq!(b2.project(&dvector![0.0, 5.0]), dvector![-1.0, 3.0]);
        // idempotent
        let p = b2.project(&dvector![0.0, 5.0]);
        assert_eq!(b2.project(&p), p);
    }

    #[test]
    fn project_nonneg_examples() {
        assert_eq!(project_nonneg(&dvector![-1.0, 2.0]), dvector![0.0, 2.0]);
        assert_eq!(project_nonneg(&dvector![0.0, 0.0]), dvector![0.0, 0.0]);
        assert_eq!(project_nonneg(&dvector![-3.0, -0.5]), dvector![0.0, 0.0]);
    }

    #[test]
    fn box_bounds_validation() {
        assert!(BoxBounds::new(dvector![1.0], dvector![0.0]).is_err());
        assert!(BoxBounds::new(dvector![f64::NEG_INFINITY], dvector![0.0]).is_err());
    }
}
