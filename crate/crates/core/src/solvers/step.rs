//! One iteration of each distributed algorithm, written as per-agent
//! message passing. Node-based variants use two exchange rounds per
//! iteration (decisions/estimates/multipliers, then updated auxiliaries);
//! edge-based variants need a single round because the dual update only
//! reads local state.
//!
//! Update formulas follow the operator/preconditioner resolvent, not the
//! printed listings: the dual reflection enters as `+(2z⁺ - z)` by default,
//! with the opposite sign available behind [`SignConvention::Printed`] for
//! comparison.

use nalgebra::DVector;

use super::state::{EdgeDualForm, ExtendedState};
use crate::error::{Error, Result};
use crate::game::{sa_pseudogradient, BatchSchedule, GameModel, GradPoint};
use crate::graph::Graph;
use crate::ops::{AlgorithmVariant, SignConvention, StepSizeProfile};
use crate::scalar::Scalar;

/// How the solver evaluates pseudogradients.
#[derive(Debug, Clone, Copy)]
pub enum EvalMode {
    /// Expected-value gradients; deterministic runs.
    Exact,
    /// Sample averages drawn from the per-(seed, agent, iteration) streams.
    Sampled { seed: u64 },
}

/// Immutable per-run inputs shared by every iteration.
pub struct SolverContext<'a, T: Scalar> {
    pub game: &'a GameModel<T>,
    pub graph: &'a Graph<T>,
    pub profile: &'a StepSizeProfile<T>,
    pub schedule: &'a BatchSchedule,
    pub eval: EvalMode,
    pub sign: SignConvention,
}

impl<'a, T: Scalar> SolverContext<'a, T> {
    fn gradient(&self, agent: usize, at: GradPoint<'_, T>, k: u64) -> DVector<T> {
        match self.eval {
            EvalMode::Exact => self.game.exact_grad(agent, at),
            EvalMode::Sampled { seed } => {
                sa_pseudogradient(self.game, agent, at, k, self.schedule, seed)
            }
        }
    }

    /// Batch size consumed at iteration `k` (zero for exact runs).
    pub fn batch_used(&self, k: u64) -> usize {
        match self.eval {
            EvalMode::Exact => 0,
            EvalMode::Sampled { .. } => self.schedule.batch_size(k),
        }
    }
}

/// Read access to the previous iterate, restricted to graph neighbors.
/// Mechanically enforces the partial-decision-information structure in
/// debug builds.
struct Exchange<'a, T: Scalar> {
    graph: &'a Graph<T>,
    blocks: &'a [DVector<T>],
}

impl<'a, T: Scalar> Exchange<'a, T> {
    fn new(graph: &'a Graph<T>, blocks: &'a [DVector<T>]) -> Self {
        Self { graph, blocks }
    }

    #[inline]
    fn read(&self, by: usize, of: usize) -> &DVector<T> {
        debug_assert!(
            by == of || self.graph.are_neighbors(by, of),
            "agent {by} read non-neighbor {of}"
        );
        &self.blocks[of]
    }
}

/// One full iteration; returns the next state. `NaN`/`Inf` anywhere in the
/// produced state aborts with a divergence error naming the iteration.
pub fn step<T: Scalar>(
    ctx: &SolverContext<'_, T>,
    state: &ExtendedState<T>,
) -> Result<ExtendedState<T>> {
    let next = match state.variant {
        AlgorithmVariant::NodeNetwork => node_network_step(ctx, state),
        AlgorithmVariant::EdgeNetwork => edge_network_step(ctx, state),
        AlgorithmVariant::NodeAggregative => node_aggregative_step(ctx, state),
        AlgorithmVariant::EdgeAggregative => edge_aggregative_step(ctx, state),
    };
    if let Some(block) = next.is_finite() {
        return Err(Error::Divergence { iteration: state.iteration, block });
    }
    Ok(next)
}

/// Laplacian row `Σ_j w_ij (own - neighbor_j)` over per-agent blocks.
fn disagreement<T: Scalar>(
    graph: &Graph<T>,
    exchange: &Exchange<'_, T>,
    agent: usize,
    own: &DVector<T>,
) -> DVector<T> {
    let mut out = DVector::zeros(own.len());
    for &(j, w) in graph.neighbors(agent) {
        out.axpy(w, &(own - exchange.read(agent, j)), T::one());
    }
    out
}

fn node_network_step<T: Scalar>(
    ctx: &SolverContext<'_, T>,
    state: &ExtendedState<T>,
) -> ExtendedState<T> {
    let game = ctx.game;
    let graph = ctx.graph;
    let profile = ctx.profile;
    let k = state.iteration;
    let n_agents = game.num_agents();
    let b_share = game.rhs_share();
    let c = profile.consensus_gain;

    // round 1: receive neighbors' estimates and multipliers
    let estimates = Exchange::new(graph, &state.primal);
    let duals = Exchange::new(graph, &state.duals);
    let mut primal_next = Vec::with_capacity(n_agents);
    let mut aux_next = Vec::with_capacity(n_agents);
    for i in 0..n_agents {
        let xhat_i = &state.primal[i];
        let spread = disagreement(graph, &estimates, i, xhat_i);
        let grad = ctx.gradient(i, GradPoint::Network { estimate: xhat_i }, k);

        // own block: prox step on gradient + dual pressure + disagreement
        let own = game.offset_of(i)..game.offset_of(i) + game.dim_of(i);
        let mut forces = grad;
        forces.gemv_tr(T::one(), game.coupling_of(i), &state.duals[i], T::one());
        forces.axpy(c, &spread.rows(own.start, own.len()).into_owned(), T::one());
        let mut x_new = xhat_i.rows(own.start, own.len()).into_owned();
        x_new.axpy(-profile.alpha[i], &forces, T::one());
        game.box_of(i).project_mut(&mut x_new);

        // estimate block: plain consensus step
        let mut est_new = xhat_i - spread * (profile.alpha[i] * c);
        est_new.rows_mut(own.start, own.len()).copy_from(&x_new);
        primal_next.push(est_new);

        let lambda_spread = disagreement(graph, &duals, i, &state.duals[i]);
        aux_next.push(&state.aux[i] - lambda_spread * profile.nu[i]);
    }

    // round 2: receive updated auxiliaries, reflected dual ascent
    let duals_next = dual_update_node(
        ctx,
        state,
        &primal_next,
        &aux_next,
        &b_share,
    );

    ExtendedState {
        variant: state.variant,
        dual_form: state.dual_form,
        primal: primal_next,
        tracking: Vec::new(),
        aux: aux_next,
        duals: duals_next,
        iteration: k + 1,
    }
}

/// Node-based dual update: reflected coupling image plus the Laplacian row
/// of the reflected auxiliaries.
fn dual_update_node<T: Scalar>(
    ctx: &SolverContext<'_, T>,
    state: &ExtendedState<T>,
    primal_next: &[DVector<T>],
    aux_next: &[DVector<T>],
    b_share: &DVector<T>,
) -> Vec<DVector<T>> {
    let game = ctx.game;
    let graph = ctx.graph;
    let profile = ctx.profile;
    let n_agents = game.num_agents();
    let two = T::of(2.0);
    let reflected: Vec<DVector<T>> = (0..n_agents)
        .map(|i| &aux_next[i] * two - &state.aux[i])
        .collect();
    let reflected_exchange = Exchange::new(graph, &reflected);
    let mut duals_next = Vec::with_capacity(n_agents);
    for i in 0..n_agents {
        let mut ascent = -b_share.clone();
        let x_old = state.decision(game, i);
        let x_new = decision_of(game, state.variant, primal_next, i);
        let reflected_x = &x_new * two - x_old;
        ascent.gemv(T::one(), game.coupling_of(i), &reflected_x, T::one());
        let spread = disagreement(graph, &reflected_exchange, i, &reflected[i]);
        ascent += spread;
        let mut lambda = state.duals[i].clone();
        lambda.axpy(profile.delta[i], &ascent, T::one());
        crate::game::project_nonneg_mut(&mut lambda);
        duals_next.push(lambda);
    }
    duals_next
}

fn decision_of<T: Scalar>(
    game: &GameModel<T>,
    variant: AlgorithmVariant,
    primal: &[DVector<T>],
    agent: usize,
) -> DVector<T> {
    if variant.is_aggregative() {
        primal[agent].clone()
    } else {
        primal[agent]
            .rows(game.offset_of(agent), game.dim_of(agent))
            .into_owned()
    }
}

fn edge_network_step<T: Scalar>(
    ctx: &SolverContext<'_, T>,
    state: &ExtendedState<T>,
) -> ExtendedState<T> {
    let game = ctx.game;
    let graph = ctx.graph;
    let profile = ctx.profile;
    let k = state.iteration;
    let n_agents = game.num_agents();
    let b_share = game.rhs_share();
    let c = profile.consensus_gain;

    // single round: estimates, multipliers; z (or v) and λ are local after it
    let estimates = Exchange::new(graph, &state.primal);
    let duals = Exchange::new(graph, &state.duals);
    let mut primal_next = Vec::with_capacity(n_agents);
    for i in 0..n_agents {
        let xhat_i = &state.primal[i];
        let spread = disagreement(graph, &estimates, i, xhat_i);
        let grad = ctx.gradient(i, GradPoint::Network { estimate: xhat_i }, k);
        let own = game.offset_of(i)..game.offset_of(i) + game.dim_of(i);
        let mut forces = grad;
        forces.gemv_tr(T::one(), game.coupling_of(i), &state.duals[i], T::one());
        forces.axpy(c, &spread.rows(own.start, own.len()).into_owned(), T::one());
        let mut x_new = xhat_i.rows(own.start, own.len()).into_owned();
        x_new.axpy(-profile.alpha[i], &forces, T::one());
        game.box_of(i).project_mut(&mut x_new);
        let mut est_new = xhat_i - spread * (profile.alpha[i] * c);
        est_new.rows_mut(own.start, own.len()).copy_from(&x_new);
        primal_next.push(est_new);
    }

    let (aux_next, duals_next) =
        edge_dual_update(ctx, state, &primal_next, &duals, &b_share);

    ExtendedState {
        variant: state.variant,
        dual_form: state.dual_form,
        primal: primal_next,
        tracking: Vec::new(),
        aux: aux_next,
        duals: duals_next,
        iteration: k + 1,
    }
}

/// Edge-based auxiliary and dual updates, shared by the network and
/// aggregative variants. Uses the uniform auxiliary step and either the
/// per-node `z` image or the explicit per-edge flow `v`.
fn edge_dual_update<T: Scalar>(
    ctx: &SolverContext<'_, T>,
    state: &ExtendedState<T>,
    primal_next: &[DVector<T>],
    duals: &Exchange<'_, T>,
    b_share: &DVector<T>,
) -> (Vec<DVector<T>>, Vec<DVector<T>>) {
    let game = ctx.game;
    let graph = ctx.graph;
    let profile = ctx.profile;
    let n_agents = game.num_agents();
    let nu = profile.edge_nu();
    let two = T::of(2.0);
    let sign = match ctx.sign {
        SignConvention::Derived => T::one(),
        SignConvention::Printed => -T::one(),
    };

    let mut aux_next = Vec::with_capacity(state.aux.len());
    let mut reflected_term: Vec<DVector<T>> = vec![DVector::zeros(game.constraint_dim()); n_agents];
    match state.dual_form {
        EdgeDualForm::PerNode => {
            for i in 0..n_agents {
                let lambda_spread = disagreement(graph, duals, i, &state.duals[i]);
                let z_new = &state.aux[i] - lambda_spread * nu;
                reflected_term[i] = &z_new * two - &state.aux[i];
                aux_next.push(z_new);
            }
        }
        EdgeDualForm::PerEdge => {
            for (l, edge) in graph.edges().iter().enumerate() {
                // the edge reads its two endpoints, which are mutual neighbors
                let diff = duals.read(edge.tail, edge.head);
                let v_new =
                    &state.aux[l] - (&state.duals[edge.tail] - diff) * (nu * edge.weight.sqrt());
                let refl = &v_new * two - &state.aux[l];
                let sw = edge.weight.sqrt();
                reflected_term[edge.tail].axpy(sw, &refl, T::one());
                reflected_term[edge.head].axpy(-sw, &refl, T::one());
                aux_next.push(v_new);
            }
        }
    }

    let mut duals_next = Vec::with_capacity(n_agents);
    for i in 0..n_agents {
        let mut ascent = -b_share.clone();
        let x_old = state.decision(game, i);
        let x_new = decision_of(game, state.variant, primal_next, i);
        let reflected_x = &x_new * two - x_old;
        ascent.gemv(T::one(), game.coupling_of(i), &reflected_x, T::one());
        ascent.axpy(sign, &reflected_term[i], T::one());
        let mut lambda = state.duals[i].clone();
        lambda.axpy(profile.delta[i], &ascent, T::one());
        crate::game::project_nonneg_mut(&mut lambda);
        duals_next.push(lambda);
    }
    (aux_next, duals_next)
}

fn node_aggregative_step<T: Scalar>(
    ctx: &SolverContext<'_, T>,
    state: &ExtendedState<T>,
) -> ExtendedState<T> {
    let game = ctx.game;
    let graph = ctx.graph;
    let profile = ctx.profile;
    let k = state.iteration;
    let n_agents = game.num_agents();
    let b_share = game.rhs_share();
    let c = profile.consensus_gain;

    // round 1: receive x_j, s_j, λ_j
    let averages: Vec<DVector<T>> = (0..n_agents)
        .map(|i| &state.primal[i] + &state.tracking[i])
        .collect();
    let average_exchange = Exchange::new(graph, &averages);
    let dual_exchange = Exchange::new(graph, &state.duals);
    let mut primal_next = Vec::with_capacity(n_agents);
    let mut tracking_next = Vec::with_capacity(n_agents);
    let mut aux_next = Vec::with_capacity(n_agents);
    for i in 0..n_agents {
        let spread = disagreement(graph, &average_exchange, i, &averages[i]);
        let grad = ctx.gradient(
            i,
            GradPoint::Aggregative { own: &state.primal[i], average: &averages[i] },
            k,
        );
        let mut forces = grad;
        forces.gemv_tr(T::one(), game.coupling_of(i), &state.duals[i], T::one());
        forces.axpy(c, &spread, T::one());
        let mut x_new = state.primal[i].clone();
        x_new.axpy(-profile.alpha[i], &forces, T::one());
        game.box_of(i).project_mut(&mut x_new);
        primal_next.push(x_new);
        tracking_next.push(&state.tracking[i] - &spread * profile.gamma);

        let lambda_spread = disagreement(graph, &dual_exchange, i, &state.duals[i]);
        aux_next.push(&state.aux[i] - lambda_spread * profile.nu[i]);
    }

    // round 2: updated auxiliaries
    let duals_next = dual_update_node(ctx, state, &primal_next, &aux_next, &b_share);

    ExtendedState {
        variant: state.variant,
        dual_form: state.dual_form,
        primal: primal_next,
        tracking: tracking_next,
        aux: aux_next,
        duals: duals_next,
        iteration: k + 1,
    }
}

fn edge_aggregative_step<T: Scalar>(
    ctx: &SolverContext<'_, T>,
    state: &ExtendedState<T>,
) -> ExtendedState<T> {
    let game = ctx.game;
    let graph = ctx.graph;
    let profile = ctx.profile;
    let k = state.iteration;
    let n_agents = game.num_agents();
    let b_share = game.rhs_share();
    let c = profile.consensus_gain;

    let averages: Vec<DVector<T>> = (0..n_agents)
        .map(|i| &state.primal[i] + &state.tracking[i])
        .collect();
    let average_exchange = Exchange::new(graph, &averages);
    let dual_exchange = Exchange::new(graph, &state.duals);
    let mut primal_next = Vec::with_capacity(n_agents);
    let mut tracking_next = Vec::with_capacity(n_agents);
    for i in 0..n_agents {
        let spread = disagreement(graph, &average_exchange, i, &averages[i]);
        let grad = ctx.gradient(
            i,
            GradPoint::Aggregative { own: &state.primal[i], average: &averages[i] },
            k,
        );
        let mut forces = grad;
        forces.gemv_tr(T::one(), game.coupling_of(i), &state.duals[i], T::one());
        forces.axpy(c, &spread, T::one());
        let mut x_new = state.primal[i].clone();
        x_new.axpy(-profile.alpha[i], &forces, T::one());
        game.box_of(i).project_mut(&mut x_new);
        primal_next.push(x_new);
        tracking_next.push(&state.tracking[i] - &spread * profile.gamma);
    }

    let (aux_next, duals_next) =
        edge_dual_update(ctx, state, &primal_next, &dual_exchange, &b_share);

    ExtendedState {
        variant: state.variant,
        dual_form: state.dual_form,
        primal: primal_next,
        tracking: tracking_next,
        aux: aux_next,
        duals: duals_next,
        iteration: k + 1,
    }
}
