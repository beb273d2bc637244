//! Extended algorithm state and initialization.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::game::GameModel;
use crate::graph::Graph;
use crate::ops::{AlgorithmVariant, StateLayout};
use crate::rng::{stream_rng, StreamKind};
use crate::scalar::Scalar;

/// Storage form of the edge-based auxiliary variable: the per-edge flow `v`
/// (the operator state) or its per-node image `z = V_mᵀ v`, which needs one
/// less communication round. Trajectories coincide when `v⁰ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeDualForm {
    #[default]
    PerNode,
    PerEdge,
}

/// State `ω` of one run.
///
/// `primal` holds the agents' estimate vectors (network variants, each of
/// dimension `n` with the own decision embedded) or the bare decisions
/// (aggregative variants). `tracking` is the aggregative offset `s` with
/// `u = x + s` estimating the average. `aux` is the dual-consensus helper:
/// per-node `z` or per-edge `v`. `duals` are the local multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedState<T: Scalar = f64> {
    pub(crate) variant: AlgorithmVariant,
    pub(crate) dual_form: EdgeDualForm,
    pub(crate) primal: Vec<DVector<T>>,
    pub(crate) tracking: Vec<DVector<T>>,
    pub(crate) aux: Vec<DVector<T>>,
    pub(crate) duals: Vec<DVector<T>>,
    pub(crate) iteration: u64,
}

impl<T: Scalar> ExtendedState<T> {
    pub fn variant(&self) -> AlgorithmVariant {
        self.variant
    }

    pub fn dual_form(&self) -> EdgeDualForm {
        self.dual_form
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    /// Agent `i`'s decision block.
    pub fn decision(&self, game: &GameModel<T>, agent: usize) -> DVector<T> {
        if self.variant.is_aggregative() {
            self.primal[agent].clone()
        } else {
            self.primal[agent]
                .rows(game.offset_of(agent), game.dim_of(agent))
                .into_owned()
        }
    }

    /// Stacked decisions of all agents.
    pub fn decisions(&self, game: &GameModel<T>) -> DVector<T> {
        let mut x = DVector::zeros(game.dim_total());
        for i in 0..game.num_agents() {
            x.rows_mut(game.offset_of(i), game.dim_of(i))
                .copy_from(&self.decision(game, i));
        }
        x
    }

    pub fn estimates(&self) -> &[DVector<T>] {
        &self.primal
    }

    pub fn tracking(&self) -> &[DVector<T>] {
        &self.tracking
    }

    pub fn aux(&self) -> &[DVector<T>] {
        &self.aux
    }

    pub fn duals(&self) -> &[DVector<T>] {
        &self.duals
    }

    /// Max pairwise primal/dual consensus gaps. For network variants the
    /// primal gap is over the estimate vectors; for aggregative variants it
    /// is over the local average estimates `u_i = x_i + s_i`. Zero for a
    /// single agent.
    pub fn consensus_gaps(&self) -> (T, T) {
        let n_agents = self.duals.len();
        let mut primal_gap = T::zero();
        let mut dual_gap = T::zero();
        for i in 0..n_agents {
            for j in (i + 1)..n_agents {
                let p = if self.variant.is_aggregative() {
                    ((&self.primal[i] + &self.tracking[i])
                        - (&self.primal[j] + &self.tracking[j]))
                        .norm()
                } else {
                    (&self.primal[i] - &self.primal[j]).norm()
                };
                if p > primal_gap {
                    primal_gap = p;
                }
                let d = (&self.duals[i] - &self.duals[j]).norm();
                if d > dual_gap {
                    dual_gap = d;
                }
            }
        }
        (primal_gap, dual_gap)
    }

    pub fn is_finite(&self) -> Option<&'static str> {
        let blocks: [(&str, &Vec<DVector<T>>); 4] = [
            ("primal", &self.primal),
            ("tracking", &self.tracking),
            ("aux", &self.aux),
            ("dual", &self.duals),
        ];
        for (name, block) in blocks {
            if block.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
                return Some(name);
            }
        }
        None
    }

    /// Flattens into the engine layout. Edge-based states must be in
    /// per-edge form to match the operator state.
    pub fn pack(&self, layout: &StateLayout) -> DVector<T> {
        if layout.variant.is_edge_based() {
            assert_eq!(
                self.dual_form,
                EdgeDualForm::PerEdge,
                "packing an edge-based state requires the per-edge form"
            );
        }
        let mut omega = DVector::zeros(layout.total());
        if self.variant.is_aggregative() {
            for i in 0..layout.n_agents {
                omega
                    .rows_mut(layout.offsets[i], layout.dims[i])
                    .copy_from(&self.primal[i]);
                omega
                    .rows_mut(layout.tracking_range().start + layout.offsets[i], layout.dims[i])
                    .copy_from(&self.tracking[i]);
            }
        } else {
            for i in 0..layout.n_agents {
                omega
                    .rows_mut(layout.estimate_range(i).start, layout.n)
                    .copy_from(&self.primal[i]);
            }
        }
        let aux_start = layout.aux_range().start;
        for (l, block) in self.aux.iter().enumerate() {
            omega
                .rows_mut(aux_start + l * layout.m, layout.m)
                .copy_from(block);
        }
        let dual_start = layout.dual_range().start;
        for (i, block) in self.duals.iter().enumerate() {
            omega
                .rows_mut(dual_start + i * layout.m, layout.m)
                .copy_from(block);
        }
        omega
    }

    /// Inverse of [`ExtendedState::pack`].
    pub fn unpack(layout: &StateLayout, omega: &DVector<T>, iteration: u64) -> Self {
        let dual_form = if layout.variant.is_edge_based() {
            EdgeDualForm::PerEdge
        } else {
            EdgeDualForm::PerNode
        };
        let (primal, tracking) = if layout.variant.is_aggregative() {
            let primal = (0..layout.n_agents)
                .map(|i| omega.rows(layout.offsets[i], layout.dims[i]).into_owned())
                .collect();
            let tr = layout.tracking_range().start;
            let tracking = (0..layout.n_agents)
                .map(|i| omega.rows(tr + layout.offsets[i], layout.dims[i]).into_owned())
                .collect();
            (primal, tracking)
        } else {
            let primal = (0..layout.n_agents)
                .map(|i| omega.rows(layout.estimate_range(i).start, layout.n).into_owned())
                .collect();
            (primal, Vec::new())
        };
        let aux_start = layout.aux_range().start;
        let aux_blocks = layout.aux_len / layout.m.max(1);
        let aux = (0..aux_blocks)
            .map(|l| omega.rows(aux_start + l * layout.m, layout.m).into_owned())
            .collect();
        let dual_start = layout.dual_range().start;
        let duals = (0..layout.n_agents)
            .map(|i| omega.rows(dual_start + i * layout.m, layout.m).into_owned())
            .collect();
        Self {
            variant: layout.variant,
            dual_form,
            primal,
            tracking,
            aux,
            duals,
            iteration,
        }
    }
}

fn aux_block_count<T: Scalar>(
    variant: AlgorithmVariant,
    dual_form: EdgeDualForm,
    graph: &Graph<T>,
) -> usize {
    if variant.is_edge_based() && dual_form == EdgeDualForm::PerEdge {
        graph.edge_count()
    } else {
        graph.node_count()
    }
}

/// Seeded initial state: `x_i⁰` uniform in its box, estimates set to one
/// initial broadcast of everyone's `x_j⁰`, multipliers and all auxiliary
/// variables at zero (required by the tracking and change-of-variables
/// invariants).
pub fn init_state<T: Scalar>(
    variant: AlgorithmVariant,
    game: &GameModel<T>,
    graph: &Graph<T>,
    seed: u64,
    dual_form: EdgeDualForm,
) -> ExtendedState<T> {
    let n_agents = game.num_agents();
    let decisions: Vec<DVector<T>> = (0..n_agents)
        .map(|i| {
            let mut rng = stream_rng(seed, StreamKind::Init, i, 0);
            game.box_of(i).sample(&mut rng)
        })
        .collect();
    build_state(variant, game, graph, decisions, vec![DVector::zeros(game.constraint_dim()); n_agents], dual_form)
}

/// Explicit initial decisions/multipliers; rejects box or nonnegativity
/// violations.
pub fn init_state_explicit<T: Scalar>(
    variant: AlgorithmVariant,
    game: &GameModel<T>,
    graph: &Graph<T>,
    decisions: Vec<DVector<T>>,
    duals: Vec<DVector<T>>,
    dual_form: EdgeDualForm,
) -> Result<ExtendedState<T>> {
    if decisions.len() != game.num_agents() || duals.len() != game.num_agents() {
        return Err(Error::InvalidState("one block per agent required".into()));
    }
    for (i, x) in decisions.iter().enumerate() {
        if !game.box_of(i).contains(x) {
            return Err(Error::InvalidState(format!(
                "agent {i} initial decision outside its box"
            )));
        }
    }
    for (i, l) in duals.iter().enumerate() {
        if l.len() != game.constraint_dim() || l.iter().any(|&v| v < T::zero()) {
            return Err(Error::InvalidState(format!(
                "agent {i} initial multiplier must be nonnegative of dimension m"
            )));
        }
    }
    Ok(build_state(variant, game, graph, decisions, duals, dual_form))
}

fn build_state<T: Scalar>(
    variant: AlgorithmVariant,
    game: &GameModel<T>,
    graph: &Graph<T>,
    decisions: Vec<DVector<T>>,
    duals: Vec<DVector<T>>,
    dual_form: EdgeDualForm,
) -> ExtendedState<T> {
    let n_agents = game.num_agents();
    let dual_form = if variant.is_edge_based() { dual_form } else { EdgeDualForm::PerNode };
    let stacked = game.stack_blocks(&decisions);
    let (primal, tracking) = if variant.is_aggregative() {
        (decisions, vec![DVector::zeros(game.dims()[0]); n_agents])
    } else {
        ((0..n_agents).map(|_| stacked.clone()).collect(), Vec::new())
    };
    let aux = vec![
        DVector::zeros(game.constraint_dim());
        aux_block_count(variant, dual_form, graph)
    ];
    ExtendedState {
        variant,
        dual_form,
        primal,
        tracking,
        aux,
        duals,
        iteration: 0,
    }
}
