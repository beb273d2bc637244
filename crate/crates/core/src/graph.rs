//! Undirected weighted communication graphs.
//!
//! A [`Graph`] owns its Laplacian `L = D - W`, an incidence matrix `V` with
//! a fixed lexicographic edge orientation so that `VᵀV = L`, and the spectral
//! quantities (`λ₂`, `λ_N`, `d_max`) the step-size and consensus-gain bounds
//! are built from. Graphs are validated at construction: simple, positively
//! weighted, connected.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One undirected edge, stored with `tail < head`.
///
/// The orientation (tail = smaller node index) fixes the sign pattern of the
/// incidence matrix; `L = VᵀV` holds for any orientation, but a deterministic
/// choice keeps edge-based traces reproducible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub tail: usize,
    pub head: usize,
    pub weight: T,
}

/// Spectral data of a connected graph.
#[derive(Debug, Clone)]
pub struct SpectralSummary<T> {
    pub lambda2: T,
    pub lambda_n: T,
    pub d_max: T,
    pub degrees: Vec<T>,
}

/// Undirected, connected, positively weighted communication graph.
#[derive(Debug, Clone)]
pub struct Graph<T: Scalar = f64> {
    node_count: usize,
    edges: Vec<Edge<T>>,
    adjacency: Vec<Vec<(usize, T)>>,
    degrees: Vec<T>,
    laplacian: DMatrix<T>,
    lambda2: T,
    lambda_n: T,
}

impl<T: Scalar> Graph<T> {
    /// Builds a graph from an explicit weighted edge list.
    ///
    /// Edges may be given in either orientation; duplicates (in any
    /// orientation), self-loops and non-positive weights are rejected, and
    /// the graph must be connected.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize, T)]) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidGraph("node count must be positive".into()));
        }
        let mut normalized: Vec<Edge<T>> = Vec::with_capacity(edges.len());
        for &(a, b, w) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            if a >= node_count || b >= node_count {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) out of range for {node_count} nodes"
                )));
            }
            if w <= T::zero() {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) has non-positive weight"
                )));
            }
            let (tail, head) = if a < b { (a, b) } else { (b, a) };
            if normalized.iter().any(|e| e.tail == tail && e.head == head) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({tail}, {head})")));
            }
            normalized.push(Edge { tail, head, weight: w });
        }
        normalized.sort_by_key(|e| (e.tail, e.head));
        let graph = Self::assemble(node_count, normalized);
        if !graph.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(graph)
    }

    /// Explicit edge list with unit weights.
    pub fn from_unit_edges(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let weighted: Vec<(usize, usize, T)> =
            edges.iter().map(|&(a, b)| (a, b, T::one())).collect();
        Self::from_edges(node_count, &weighted)
    }

    /// Complete graph on `node_count` nodes, unit weights.
    pub fn complete(node_count: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..node_count {
            for j in (i + 1)..node_count {
                edges.push((i, j));
            }
        }
        Self::from_unit_edges(node_count, &edges)
    }

    /// Cycle graph on `node_count >= 3` nodes, unit weights.
    pub fn cycle(node_count: usize) -> Result<Self> {
        if node_count < 3 {
            return Err(Error::InvalidGraph("cycle needs at least 3 nodes".into()));
        }
        let edges: Vec<(usize, usize)> =
            (0..node_count).map(|i| (i, (i + 1) % node_count)).collect();
        Self::from_unit_edges(node_count, &edges)
    }

    /// Assembles adjacency, Laplacian and spectral data without the
    /// connectivity check; [`Graph::spectral_summary`] reports disconnection.
    pub(crate) fn assemble(node_count: usize, edges: Vec<Edge<T>>) -> Self {
        let mut adjacency = vec![Vec::new(); node_count];
        let mut degrees = vec![T::zero(); node_count];
        let mut laplacian = DMatrix::zeros(node_count, node_count);
        for e in &edges {
            adjacency[e.tail].push((e.head, e.weight));
            adjacency[e.head].push((e.tail, e.weight));
            degrees[e.tail] += e.weight;
            degrees[e.head] += e.weight;
            laplacian[(e.tail, e.head)] = -e.weight;
            laplacian[(e.head, e.tail)] = -e.weight;
        }
        for (i, d) in degrees.iter().enumerate() {
            laplacian[(i, i)] = *d;
        }
        for nbrs in &mut adjacency {
            nbrs.sort_by_key(|&(j, _)| j);
        }
        let (lambda2, lambda_n) = spectral_bounds(&laplacian);
        Self {
            node_count,
            edges,
            adjacency,
            degrees,
            laplacian,
            lambda2,
            lambda_n,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges sorted lexicographically, `tail < head`.
    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    /// Neighbors of `i` with edge weights, sorted by node index.
    pub fn neighbors(&self, i: usize) -> &[(usize, T)] {
        &self.adjacency[i]
    }

    pub fn are_neighbors(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].iter().any(|&(k, _)| k == j)
    }

    /// Weighted degree `d_i`.
    pub fn degree(&self, i: usize) -> T {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[T] {
        &self.degrees
    }

    pub fn d_max(&self) -> T {
        self.degrees
            .iter()
            .copied()
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    /// `L = D - W`; symmetric positive semidefinite with zero row sums.
    pub fn laplacian(&self) -> &DMatrix<T> {
        &self.laplacian
    }

    pub fn lambda2(&self) -> T {
        self.lambda2
    }

    pub fn lambda_n(&self) -> T {
        self.lambda_n
    }

    /// Incidence matrix `V` (edges × nodes): row `l` of edge `(i, j)`, `i < j`,
    /// carries `+√w` at column `i` and `-√w` at column `j`, so `VᵀV = L`.
    pub fn incidence(&self) -> DMatrix<T> {
        let mut v = DMatrix::zeros(self.edges.len(), self.node_count);
        for (l, e) in self.edges.iter().enumerate() {
            let sw = e.weight.sqrt();
            v[(l, e.tail)] = sw;
            v[(l, e.head)] = -sw;
        }
        v
    }

    /// Spectral quantities used by step-size bounds and `c_min`.
    ///
    /// Fails with [`Error::Disconnected`] when `λ₂` vanishes. For the
    /// single-node graph all spectral quantities are zero by convention.
    pub fn spectral_summary(&self) -> Result<SpectralSummary<T>> {
        if self.node_count > 1 {
            let scale = self.lambda_n.max(T::one());
            if self.lambda2 <= T::of(1e-9) * scale {
                return Err(Error::Disconnected);
            }
        }
        Ok(SpectralSummary {
            lambda2: self.lambda2,
            lambda_n: self.lambda_n,
            d_max: self.d_max(),
            degrees: self.degrees.clone(),
        })
    }

    /// Applies the Laplacian row of node `i` to per-node vectors:
    /// `Σ_j w_ij (values[i] - values[j])`.
    pub fn laplacian_row_apply(&self, i: usize, values: &[DVector<T>]) -> DVector<T> {
        let mut out = DVector::zeros(values[i].len());
        for &(j, w) in self.neighbors(i) {
            out.axpy(w, &(&values[i] - &values[j]), T::one());
        }
        out
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.node_count];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &(j, _) in &self.adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == self.node_count
    }
}

/// Smallest nonzero and largest Laplacian eigenvalues (0 for `N = 1`).
fn spectral_bounds<T: Scalar>(laplacian: &DMatrix<T>) -> (T, T) {
    let n = laplacian.nrows();
    if n <= 1 {
        return (T::zero(), T::zero());
    }
    let eig = laplacian.clone().symmetric_eigen();
    let mut values: Vec<T> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    (values[1], values[n - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_connected(seed: u64, n: usize) -> Graph<f64> {
        // spanning path plus random chords, random weights
        let mut rng = crate::rng::stream_rng(seed, crate::rng::StreamKind::Scenario, 0, 0);
        let mut edges: Vec<(usize, usize, f64)> = (1..n)
            .map(|i| (i - 1, i, rng.random_range(0.5..2.0)))
            .collect();
        for i in 0..n {
            for j in (i + 2)..n {
                if rng.random_range(0.0..1.0) < 0.3 {
                    edges.push((i, j, rng.random_range(0.5..2.0)));
                }
            }
        }
        Graph::from_edges(n, &edges).unwrap()
    }

    #[test]
    fn cycle_laplacian_matches_known_matrix() {
        let g = Graph::<f64>::cycle(3).unwrap();
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[2.0, -1.0, -1.0, -1.0, 2.0, -1.0, -1.0, -1.0, 2.0],
        );
        assert_eq!(g.laplacian(), &expected);
    }

    #[test]
    fn path_laplacian() {
        let g = Graph::<f64>::from_unit_edges(2, &[(0, 1)]).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert_eq!(g.laplacian(), &expected);
    }

    #[test]
    fn complete_graph_spectrum() {
        let g = Graph::<f64>::complete(4).unwrap();
        let s = g.spectral_summary().unwrap();
        assert_relative_eq!(s.lambda2, 4.0, epsilon = 1e-10);
        assert_relative_eq!(s.lambda_n, 4.0, epsilon = 1e-10);
        assert_relative_eq!(s.d_max, 3.0);
    }

    #[test]
    fn four_cycle_spectrum() {
        let g = Graph::<f64>::cycle(4).unwrap();
        let s = g.spectral_summary().unwrap();
        assert_relative_eq!(s.lambda2, 2.0, epsilon = 1e-10);
        assert_relative_eq!(s.lambda_n, 4.0, epsilon = 1e-10);
        assert_relative_eq!(s.d_max, 2.0);
    }

    #[test]
    fn path_incidence_is_forced_by_factorization() {
        let g = Graph::<f64>::from_unit_edges(2, &[(0, 1)]).unwrap();
        let v = g.incidence();
        assert_eq!(v, DMatrix::from_row_slice(1, 2, &[1.0, -1.0]));
        assert_eq!(&v.transpose() * &v, *g.laplacian());
    }

    #[test]
    fn incidence_rows_sum_to_zero_and_rank_is_n_minus_1() {
        let g = Graph::<f64>::cycle(3).unwrap();
        let v = g.incidence();
        let ones = DVector::from_element(3, 1.0);
        assert!((&v * &ones).amax() < 1e-14);
        assert_eq!(v.clone().svd(false, false).rank(1e-10), 2);
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let err = Graph::<f64>::from_unit_edges(4, &[(0, 1), (2, 3)]).unwrap_err();
        assert!(matches!(err, Error::Disconnected));
    }

    #[test]
    fn spectral_summary_reports_disconnection() {
        // bypass the constructor check to exercise the error path
        let edges = vec![
            Edge { tail: 0, head: 1, weight: 1.0 },
            Edge { tail: 2, head: 3, weight: 1.0 },
        ];
        let g = Graph::<f64>::assemble(4, edges);
        let err = g.spectral_summary().unwrap_err();
        assert!(err.to_string().contains("lambda2 is zero"));
    }

    #[test]
    fn rejects_self_loops_duplicates_and_bad_weights() {
        assert!(Graph::<f64>::from_edges(2, &[(0, 0, 1.0)]).is_err());
        assert!(Graph::<f64>::from_edges(2, &[(0, 1, 1.0), (1, 0, 1.0)]).is_err());
        assert!(Graph::<f64>::from_edges(2, &[(0, 1, -1.0)]).is_err());
        assert!(Graph::<f64>::from_edges(2, &[(0, 2, 1.0)]).is_err());
    }

    #[test]
    fn lambda2_matches_independent_eigensolve() {
        // Independent route: inverse-power iteration on (sI - L) restricted to
        // the complement of the constant vector.
        for seed in 0..5u64 {
            let g = random_connected(seed, 7);
            let l = g.laplacian();
            let n = l.nrows();
            let s = 2.0 * g.d_max() + 1.0;
            let shifted = DMatrix::<f64>::identity(n, n) * s - l;
            let mut rng = crate::rng::stream_rng(seed, crate::rng::StreamKind::Scenario, 1, 0);
            let mut v = DVector::<f64>::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let ones = DVector::from_element(n, 1.0 / (n as f64).sqrt());
            for _ in 0..20_000 {
                v -= &ones * ones.dot(&v);
                v = &shifted * v;
                v /= v.norm();
            }
            let lambda2 = (l * &v).dot(&v);
            assert_relative_eq!(g.lambda2(), lambda2, epsilon = 1e-10, max_relative = 1e-10);
        }
    }

    #[test]
    fn laplacian_restricted_cocoercivity() {
        let g = random_connected(11, 6);
        let l = g.laplacian();
        let beta = 1.0 / (2.0 * g.d_max());
        let mut rng = crate::rng::stream_rng(11, crate::rng::StreamKind::Scenario, 2, 0);
        for _ in 0..1000 {
            let x = DVector::<f64>::from_fn(6, |_, _| rng.random_range(-5.0..5.0));
            let y = DVector::<f64>::from_fn(6, |_, _| rng.random_range(-5.0..5.0));
            let diff = &x - &y;
            let ldiff = l * &diff;
            assert!(ldiff.dot(&diff) >= beta * ldiff.norm_squared() - 1e-9);
        }
    }

    #[test]
    fn laplacian_null_space_is_consensus() {
        let g = random_connected(3, 8);
        let l = g.laplacian();
        let ones = DVector::from_element(8, 1.0);
        assert!((l * &ones).amax() < 1e-12);
        assert_eq!(l.clone().svd(false, false).rank(1e-9), 7);
    }

    #[test]
    fn spectral_interlacing_with_degree() {
        for seed in 0..10u64 {
            let g = random_connected(seed, 6);
            let s = g.spectral_summary().unwrap();
            assert!(s.lambda2 > 0.0);
            assert!(s.lambda2 <= s.lambda_n + 1e-12);
            assert!(s.d_max <= s.lambda_n + 1e-9);
            assert!(s.lambda_n <= 2.0 * s.d_max + 1e-9);
        }
    }

    proptest! {
        #[test]
        fn incidence_factorizes_laplacian(seed in 0u64..200, n in 3usize..9) {
            let g = random_connected(seed, n);
            let v = g.incidence();
            let diff = &v.transpose() * &v - g.laplacian();
            prop_assert!(diff.amax() < 1e-12);
        }
    }
}
