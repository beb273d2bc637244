//! Preconditioner assembly and positive-definiteness checks.

use nalgebra::{Cholesky, DMatrix};

use super::layout::StateLayout;
use super::profile::{step_size_bounds, StepSizeProfile};
use super::AlgorithmVariant;
use crate::error::{Error, Result};
use crate::game::GameModel;
use crate::graph::Graph;
use crate::scalar::Scalar;

/// `A ⊗ I_q`.
pub(crate) fn kron_identity<T: Scalar>(a: &DMatrix<T>, q: usize) -> DMatrix<T> {
    let mut out = DMatrix::zeros(a.nrows() * q, a.ncols() * q);
    for r in 0..a.nrows() {
        for c in 0..a.ncols() {
            let v = a[(r, c)];
            if v != T::zero() {
                for t in 0..q {
                    out[(r * q + t, c * q + t)] = v;
                }
            }
        }
    }
    out
}

/// Selection-composed coupling operator mapping the primal block to the
/// stacked per-agent constraint images `col(A_i x_i)`.
pub(crate) fn coupling_selector<T: Scalar>(
    layout: &StateLayout,
    game: &GameModel<T>,
) -> DMatrix<T> {
    let mut a_sel = DMatrix::zeros(layout.dual_len, layout.primal_len);
    for i in 0..layout.n_agents {
        let a_i = game.coupling_of(i);
        let cols = layout.decision_range(i);
        a_sel
            .view_mut((i * layout.m, cols.start), (layout.m, layout.dims[i]))
            .copy_from(a_i);
    }
    a_sel
}

/// Assembled symmetric preconditioning matrix of one variant.
///
/// Diagonal blocks carry the inverse step sizes; the off-diagonal blocks tie
/// the dual row to the primal coupling images and to the auxiliary consensus
/// operator (Laplacian or incidence).
#[derive(Debug, Clone)]
pub struct Preconditioner<T: Scalar = f64> {
    variant: AlgorithmVariant,
    layout: StateLayout,
    matrix: DMatrix<T>,
}

impl<T: Scalar> Preconditioner<T> {
    pub fn variant(&self) -> AlgorithmVariant {
        self.variant
    }

    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn min_eigenvalue(&self) -> T {
        self.matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(T::of(f64::INFINITY), |a, b| if b < a { b } else { a })
    }

    pub fn cholesky(&self) -> Option<Cholesky<T, nalgebra::Dyn>> {
        Cholesky::new(self.matrix.clone())
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_some()
    }
}

/// Assembles the preconditioner without verifying definiteness.
pub fn assemble_preconditioner_unchecked<T: Scalar>(
    variant: AlgorithmVariant,
    profile: &StepSizeProfile<T>,
    graph: &Graph<T>,
    game: &GameModel<T>,
) -> Preconditioner<T> {
    let layout = StateLayout::new(variant, graph, game);
    let t = layout.total();
    let mut phi = DMatrix::zeros(t, t);

    for i in 0..layout.n_agents {
        let inv_alpha = T::one() / profile.alpha[i];
        let coords = if variant.is_aggregative() {
            layout.decision_range(i)
        } else {
            layout.estimate_range(i)
        };
        for c in coords {
            phi[(c, c)] = inv_alpha;
        }
    }
    if variant.is_aggregative() {
        let inv_gamma = T::one() / profile.gamma;
        for c in layout.tracking_range() {
            phi[(c, c)] = inv_gamma;
        }
    }
    let aux_start = layout.aux_range().start;
    if variant.is_edge_based() {
        let inv_nu = T::one() / profile.edge_nu();
        for c in layout.aux_range() {
            phi[(c, c)] = inv_nu;
        }
    } else {
        for i in 0..layout.n_agents {
            let inv_nu = T::one() / profile.nu[i];
            for t in 0..layout.m {
                let c = aux_start + i * layout.m + t;
                phi[(c, c)] = inv_nu;
            }
        }
    }
    let dual_start = layout.dual_range().start;
    for i in 0..layout.n_agents {
        let inv_delta = T::one() / profile.delta[i];
        for t in 0..layout.m {
            let c = dual_start + i * layout.m + t;
            phi[(c, c)] = inv_delta;
        }
    }

    let a_sel = coupling_selector(&layout, game);
    let neg_a_sel = -&a_sel;
    phi.view_mut((dual_start, 0), (layout.dual_len, layout.primal_len))
        .copy_from(&neg_a_sel);
    phi.view_mut((0, dual_start), (layout.primal_len, layout.dual_len))
        .copy_from(&neg_a_sel.transpose());

    let consensus = if variant.is_edge_based() {
        kron_identity(&graph.incidence(), layout.m)
    } else {
        kron_identity(graph.laplacian(), layout.m)
    };
    let neg = -&consensus;
    phi.view_mut((aux_start, dual_start), (layout.aux_len, layout.dual_len))
        .copy_from(&neg);
    phi.view_mut((dual_start, aux_start), (layout.dual_len, layout.aux_len))
        .copy_from(&neg.transpose());

    Preconditioner { variant, layout, matrix: phi }
}

/// Assembles and verifies the preconditioner by Cholesky factorization.
///
/// On failure the error names the step sizes exceeding their ceilings.
pub fn assemble_preconditioner<T: Scalar>(
    variant: AlgorithmVariant,
    profile: &StepSizeProfile<T>,
    graph: &Graph<T>,
    game: &GameModel<T>,
) -> Result<Preconditioner<T>> {
    let precond = assemble_preconditioner_unchecked(variant, profile, graph, game);
    if precond.is_positive_definite() {
        return Ok(precond);
    }
    let bounds = step_size_bounds(variant, graph, game, profile.tau)?;
    let violations = profile.violations(&bounds);
    let detail = if violations.is_empty() {
        "all step sizes within their ceilings; reduce the safety factor".to_string()
    } else {
        violations.join("; ")
    };
    Err(Error::IndefinitePreconditioner(detail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::quadratic::{build_network_game, NoiseSpec};
    use crate::game::BoxBounds;
    use nalgebra::{DMatrix, DVector};

    fn fixture(n_agents: usize) -> (Graph<f64>, GameModel<f64>) {
        let graph = Graph::complete(n_agents).unwrap();
        let dim = 2;
        let n = n_agents * dim;
        let m_full = DMatrix::<f64>::identity(n, n) * 2.0;
        let boxes = (0..n_agents).map(|_| BoxBounds::symmetric(dim, 5.0)).collect();
        let coupling = (0..n_agents)
            .map(|_| DMatrix::from_row_slice(1, 2, &[1.0, 0.5]))
            .collect();
        let game = build_network_game(
            m_full,
            vec![DVector::zeros(dim); n_agents],
            boxes,
            coupling,
            DVector::from_element(1, 1.0),
            NoiseSpec::None,
        )
        .unwrap();
        (graph, game)
    }

    #[test]
    fn valid_profile_gives_positive_definite_matrix() {
        let (graph, game) = fixture(3);
        for variant in AlgorithmVariant::ALL {
            if variant.is_aggregative() {
                continue;
            }
            let profile =
                StepSizeProfile::from_bounds(variant, &graph, &game, 0.1, 0.5, 1.0).unwrap();
            let p = assemble_preconditioner(variant, &profile, &graph, &game).unwrap();
            assert!(p.min_eigenvalue() > 0.0);
            assert!((p.matrix() - p.matrix().transpose()).amax() < 1e-14);
        }
    }

    #[test]
    fn inflated_profile_is_rejected_with_named_steps() {
        let (graph, game) = fixture(3);
        let profile = StepSizeProfile::from_bounds(
            AlgorithmVariant::NodeNetwork,
            &graph,
            &game,
            0.1,
            0.5,
            1.0,
        )
        .unwrap()
        .scaled(10.0);
        let err =
            assemble_preconditioner(AlgorithmVariant::NodeNetwork, &profile, &graph, &game)
                .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("nu[") || msg.contains("delta[") || msg.contains("alpha["), "{msg}");
        let unchecked = assemble_preconditioner_unchecked(
            AlgorithmVariant::NodeNetwork,
            &profile,
            &graph,
            &game,
        );
        assert!(unchecked.min_eigenvalue() <= 0.0);
    }

    #[test]
    fn no_coupling_no_edges_gives_diagonal_matrix() {
        // single agent: L = 0, A = 0 -> block diagonal of inverse step sizes
        let graph = Graph::from_edges(1, &[]).unwrap();
        let m_full = DMatrix::<f64>::identity(2, 2);
        let game = build_network_game(
            m_full,
            vec![DVector::zeros(2)],
            vec![BoxBounds::symmetric(2, 1.0)],
            vec![DMatrix::zeros(1, 2)],
            DVector::from_element(1, 1.0),
            NoiseSpec::None,
        )
        .unwrap();
        let profile = StepSizeProfile::from_bounds(
            AlgorithmVariant::NodeNetwork,
            &graph,
            &game,
            0.5,
            1.0,
            1.0,
        )
        .unwrap();
        let p = assemble_preconditioner(AlgorithmVariant::NodeNetwork, &profile, &graph, &game)
            .unwrap();
        let phi = p.matrix();
        let mut off_diag = phi.clone();
        off_diag.fill_diagonal(0.0);
        assert_eq!(off_diag.amax(), 0.0);
        assert!(phi.diagonal().iter().all(|&d| d > 0.0));
    }
}
