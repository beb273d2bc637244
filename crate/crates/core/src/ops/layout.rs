//! Flat layout of the extended state vector.

use std::ops::Range;

use super::AlgorithmVariant;
use crate::game::GameModel;
use crate::graph::Graph;
use crate::scalar::Scalar;

/// Coordinate layout of `ω` for one variant:
/// `[primal | tracking (aggregative) | aux (z or v) | dual]`.
///
/// Network variants stack the agents' full estimate vectors (`N·n` primal
/// coordinates); aggregative variants stack decisions and tracking offsets
/// (`n` each). The auxiliary block is per-node (`N·m`) in node-based
/// variants and per-edge (`E·m`) in edge-based ones.
#[derive(Debug, Clone)]
pub struct StateLayout {
    pub variant: AlgorithmVariant,
    pub n_agents: usize,
    pub dims: Vec<usize>,
    pub offsets: Vec<usize>,
    pub n: usize,
    pub m: usize,
    pub edge_count: usize,
    pub primal_len: usize,
    pub tracking_len: usize,
    pub aux_len: usize,
    pub dual_len: usize,
}

impl StateLayout {
    pub fn new<T: Scalar>(variant: AlgorithmVariant, graph: &Graph<T>, game: &GameModel<T>) -> Self {
        let n_agents = game.num_agents();
        let dims = game.dims().to_vec();
        let offsets: Vec<usize> = (0..n_agents).map(|i| game.offset_of(i)).collect();
        let n = game.dim_total();
        let m = game.constraint_dim();
        let edge_count = graph.edge_count();
        let (primal_len, tracking_len) = if variant.is_aggregative() {
            (n, n)
        } else {
            (n_agents * n, 0)
        };
        let aux_len = if variant.is_edge_based() {
            edge_count * m
        } else {
            n_agents * m
        };
        StateLayout {
            variant,
            n_agents,
            dims,
            offsets,
            n,
            m,
            edge_count,
            primal_len,
            tracking_len,
            aux_len,
            dual_len: n_agents * m,
        }
    }

    pub fn total(&self) -> usize {
        self.primal_len + self.tracking_len + self.aux_len + self.dual_len
    }

    pub fn primal_range(&self) -> Range<usize> {
        0..self.primal_len
    }

    pub fn tracking_range(&self) -> Range<usize> {
        self.primal_len..self.primal_len + self.tracking_len
    }

    pub fn aux_range(&self) -> Range<usize> {
        let start = self.primal_len + self.tracking_len;
        start..start + self.aux_len
    }

    pub fn dual_range(&self) -> Range<usize> {
        let start = self.primal_len + self.tracking_len + self.aux_len;
        start..start + self.dual_len
    }

    /// Range of agent `i`'s estimate vector inside the primal block
    /// (network variants).
    pub fn estimate_range(&self, agent: usize) -> Range<usize> {
        debug_assert!(!self.variant.is_aggregative());
        agent * self.n..(agent + 1) * self.n
    }

    /// Range of agent `i`'s own decision inside the primal block.
    pub fn decision_range(&self, agent: usize) -> Range<usize> {
        if self.variant.is_aggregative() {
            self.offsets[agent]..self.offsets[agent] + self.dims[agent]
        } else {
            let base = agent * self.n + self.offsets[agent];
            base..base + self.dims[agent]
        }
    }

    /// Range of agent `i`'s dual block inside the dual segment.
    pub fn dual_block(&self, agent: usize) -> Range<usize> {
        agent * self.m..(agent + 1) * self.m
    }
}
