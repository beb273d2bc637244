//! Distributed solvers: per-agent state, one-iteration steps, and the run
//! loop with stopping rules and trace collection.

use std::time::Instant;

use nalgebra::DVector;

use crate::error::Result;
use crate::ops::MatrixEngine;
use crate::scalar::Scalar;

mod state;
mod step;
mod trace;

pub use state::{init_state, init_state_explicit, EdgeDualForm, ExtendedState};
pub use step::{step, EvalMode, SolverContext};
pub use trace::{IterationTrace, TraceRecord};

/// Stopping rule for [`run`].
///
/// The tolerance applies to the max of consecutive-iterate distance, dual
/// consensus gap and constraint violation (all computable online, unlike the
/// residual, which needs exact gradients). `target_distance` additionally
/// stops once `‖x^k - x*‖` falls below it, when a reference is supplied.
#[derive(Debug, Clone, Copy)]
pub struct StopRule {
    pub max_iters: u64,
    pub tol: Option<f64>,
    pub target_distance: Option<f64>,
}

impl StopRule {
    pub fn max_iters(max_iters: u64) -> Self {
        Self { max_iters, tol: None, target_distance: None }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = Some(tol);
        self
    }

    pub fn with_target_distance(mut self, dist: f64) -> Self {
        self.target_distance = Some(dist);
        self
    }
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopCause {
    MaxIters,
    Tolerance,
    TargetDistance,
}

/// Final state plus the per-iteration trace.
#[derive(Debug)]
pub struct RunOutcome<T: Scalar = f64> {
    pub state: ExtendedState<T>,
    pub trace: IterationTrace,
    pub stopped: StopCause,
}

/// Runs the iteration until the stopping rule fires.
///
/// `reference` enables the distance column of the trace; `residual_probe`
/// evaluates the deterministic forward-backward residual each iteration
/// (test games only; it re-evaluates exact gradients through the engine).
pub fn run<T: Scalar>(
    ctx: &SolverContext<'_, T>,
    mut state: ExtendedState<T>,
    stop: &StopRule,
    reference: Option<&DVector<T>>,
    residual_probe: Option<&MatrixEngine<T>>,
) -> Result<RunOutcome<T>> {
    let start = Instant::now();
    let mut trace = IterationTrace::default();
    let mut cause = StopCause::MaxIters;
    let mut previous = state.clone();
    for _ in 0..stop.max_iters {
        let k = state.iteration;
        let batch = ctx.batch_used(k);
        let next = step(ctx, &state)?;
        previous.clone_from(&state);
        state = next;

        let x = state.decisions(ctx.game);
        let (primal_gap, dual_gap) = state.consensus_gaps();
        let violation = ctx.game.constraint_violation(&x);
        let dist = reference
            .map(|r| (&x - r).norm().to_f64())
            .unwrap_or(f64::NAN);
        let residual = residual_probe
            .map(|engine| {
                let omega = state.pack(engine.layout());
                engine.residual(ctx.game, &omega).to_f64()
            })
            .unwrap_or(f64::NAN);
        trace.records.push(TraceRecord {
            iter: k,
            dist_to_ref: dist,
            primal_gap: primal_gap.to_f64(),
            dual_gap: dual_gap.to_f64(),
            violation: violation.to_f64(),
            residual,
            batch_size: batch,
            wallclock_ms: start.elapsed().as_secs_f64() * 1e3,
        });

        if let (Some(target), Some(_)) = (stop.target_distance, reference) {
            if dist <= target {
                cause = StopCause::TargetDistance;
                break;
            }
        }
        if let Some(tol) = stop.tol {
            let consec = state_distance(&previous, &state);
            let measure = consec.max(dual_gap.to_f64()).max(violation.to_f64());
            if measure < tol {
                cause = StopCause::Tolerance;
                break;
            }
        }
    }
    Ok(RunOutcome { state, trace, stopped: cause })
}

/// Euclidean distance between two states of the same shape.
pub fn state_distance<T: Scalar>(a: &ExtendedState<T>, b: &ExtendedState<T>) -> f64 {
    let mut acc = T::zero();
    for (u, v) in a
        .estimates()
        .iter()
        .chain(a.tracking().iter())
        .chain(a.aux().iter())
        .chain(a.duals().iter())
        .zip(
            b.estimates()
                .iter()
                .chain(b.tracking().iter())
                .chain(b.aux().iter())
                .chain(b.duals().iter()),
        )
    {
        acc += (u - v).norm_squared();
    }
    acc.sqrt().to_f64()
}

#[cfg(test)]
mod tests;
