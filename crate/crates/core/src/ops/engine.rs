//! Dense matrix-form realization of the preconditioned forward-backward
//! iteration. The per-agent solvers must reproduce this engine step for
//! step; it also provides the residual and the metric norm used by the
//! convergence diagnostics.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::layout::StateLayout;
use super::precond::{
    assemble_preconditioner, coupling_selector, kron_identity, Preconditioner,
};
use super::profile::StepSizeProfile;
use super::AlgorithmVariant;
use crate::error::{Error, Result};
use crate::game::{sa_pseudogradient, BatchSchedule, GameModel, GradPoint};
use crate::graph::Graph;
use crate::scalar::Scalar;

/// How the forward operator evaluates the pseudogradient.
#[derive(Debug, Clone, Copy)]
pub enum GradEval<'a> {
    /// Expected-value gradients (test games and deterministic runs).
    Exact,
    /// Sample averages with the batch size of iteration `k`, drawn from the
    /// per-(seed, agent, k) stream.
    Sampled {
        seed: u64,
        k: u64,
        schedule: &'a BatchSchedule,
    },
}

/// Matrix-form engine for one (variant, graph, game, profile) combination.
pub struct MatrixEngine<T: Scalar = f64> {
    variant: AlgorithmVariant,
    layout: StateLayout,
    consensus_gain: T,
    /// `L ⊗ I` on the primal block (estimates or decisions).
    l_primal: DMatrix<T>,
    /// `L ⊗ I_m` (node-based auxiliary/dual coupling).
    l_m: DMatrix<T>,
    /// `V ⊗ I_m` for edge-based variants.
    v_m: Option<DMatrix<T>>,
    /// Maps the primal block to `col(A_i x_i)`.
    a_sel: DMatrix<T>,
    /// `1_N ⊗ b/N`.
    b_stack: DVector<T>,
    precond: Preconditioner<T>,
    phi_chol: Cholesky<T, Dyn>,
    laplacian_small: DMatrix<T>,
    incidence_small: Option<DMatrix<T>>,
    alpha_coord: DVector<T>,
    nu_coord: DVector<T>,
    delta_coord: DVector<T>,
    gamma: T,
    lo: DVector<T>,
    hi: DVector<T>,
}

impl<T: Scalar> MatrixEngine<T> {
    pub fn new(
        variant: AlgorithmVariant,
        graph: &Graph<T>,
        game: &GameModel<T>,
        profile: &StepSizeProfile<T>,
    ) -> Result<Self> {
        let precond = assemble_preconditioner(variant, profile, graph, game)?;
        let layout = precond.layout().clone();
        let phi_chol = precond
            .cholesky()
            .ok_or_else(|| Error::IndefinitePreconditioner("factorization failed".into()))?;

        let block = if variant.is_aggregative() {
            // equal agent dimensions; L acts blockwise on R^{n̄}
            layout.dims[0]
        } else {
            layout.n
        };
        let l_primal = kron_identity(graph.laplacian(), block);
        let l_m = kron_identity(graph.laplacian(), layout.m);
        let v_m = variant
            .is_edge_based()
            .then(|| kron_identity(&graph.incidence(), layout.m));
        let a_sel = coupling_selector(&layout, game);
        let mut b_stack = DVector::zeros(layout.dual_len);
        let share = game.rhs_share();
        for i in 0..layout.n_agents {
            b_stack.rows_mut(i * layout.m, layout.m).copy_from(&share);
        }

        let mut alpha_coord = DVector::zeros(layout.primal_len);
        let inf = T::of(f64::INFINITY);
        let mut lo = DVector::from_element(layout.primal_len, -inf);
        let mut hi = DVector::from_element(layout.primal_len, inf);
        for i in 0..layout.n_agents {
            let coords = if variant.is_aggregative() {
                layout.decision_range(i)
            } else {
                layout.estimate_range(i)
            };
            for c in coords {
                alpha_coord[c] = profile.alpha[i];
            }
            let own = layout.decision_range(i);
            let bounds = game.box_of(i);
            for (t, c) in own.enumerate() {
                lo[c] = bounds.lo()[t];
                hi[c] = bounds.hi()[t];
            }
        }
        let mut nu_coord = DVector::zeros(layout.aux_len);
        if variant.is_edge_based() {
            nu_coord.fill(profile.edge_nu());
        } else {
            for i in 0..layout.n_agents {
                nu_coord
                    .rows_mut(i * layout.m, layout.m)
                    .fill(profile.nu[i]);
            }
        }
        let mut delta_coord = DVector::zeros(layout.dual_len);
        for i in 0..layout.n_agents {
            delta_coord
                .rows_mut(i * layout.m, layout.m)
                .fill(profile.delta[i]);
        }

        Ok(Self {
            variant,
            layout,
            consensus_gain: profile.consensus_gain,
            l_primal,
            l_m,
            v_m,
            a_sel,
            b_stack,
            precond,
            phi_chol,
            laplacian_small: graph.laplacian().clone(),
            incidence_small: variant.is_edge_based().then(|| graph.incidence()),
            alpha_coord,
            nu_coord,
            delta_coord,
            gamma: profile.gamma,
            lo,
            hi,
        })
    }

    pub fn variant(&self) -> AlgorithmVariant {
        self.variant
    }

    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    pub fn preconditioner(&self) -> &Preconditioner<T> {
        &self.precond
    }

    pub fn phi(&self) -> &DMatrix<T> {
        self.precond.matrix()
    }

    /// `‖v‖_Φ`.
    pub fn phi_norm(&self, v: &DVector<T>) -> T {
        let q = v.dot(&(self.phi() * v));
        if q > T::zero() {
            q.sqrt()
        } else {
            T::zero()
        }
    }

    /// Forward operator `A(ω)` (or its sample-average estimate).
    pub fn forward(&self, game: &GameModel<T>, omega: &DVector<T>, eval: GradEval<'_>) -> DVector<T> {
        assert_eq!(omega.len(), self.layout.total(), "state dimension mismatch");
        let mut out = DVector::zeros(self.layout.total());
        let primal = omega.rows(0, self.layout.primal_len).into_owned();
        if self.variant.is_aggregative() {
            let tracking = omega
                .rows(self.layout.tracking_range().start, self.layout.tracking_len)
                .into_owned();
            let u = &primal + &tracking;
            let lu = &self.l_primal * &u;
            // x-row: F_a(x, u) + c L u ; s-row: L u
            {
                let mut x_rows = out.rows_mut(0, self.layout.primal_len);
                x_rows.axpy(self.consensus_gain, &lu, T::one());
            }
            out.rows_mut(self.layout.tracking_range().start, self.layout.tracking_len)
                .copy_from(&lu);
            let nbar = self.layout.dims[0];
            for i in 0..self.layout.n_agents {
                let own = primal.rows(i * nbar, nbar).into_owned();
                let avg = u.rows(i * nbar, nbar).into_owned();
                let at = GradPoint::Aggregative { own: &own, average: &avg };
                let g = self.eval_grad(game, i, at, eval);
                let mut rows = out.rows_mut(i * nbar, nbar);
                rows += g;
            }
        } else {
            let mut x_rows_owned = &self.l_primal * &primal;
            x_rows_owned *= self.consensus_gain;
            for i in 0..self.layout.n_agents {
                let estimate = primal
                    .rows(self.layout.estimate_range(i).start, self.layout.n)
                    .into_owned();
                let at = GradPoint::Network { estimate: &estimate };
                let g = self.eval_grad(game, i, at, eval);
                let mut rows = x_rows_owned.rows_mut(
                    self.layout.decision_range(i).start,
                    self.layout.dims[i],
                );
                rows += g;
            }
            out.rows_mut(0, self.layout.primal_len).copy_from(&x_rows_owned);
        }
        out.rows_mut(self.layout.dual_range().start, self.layout.dual_len)
            .copy_from(&self.b_stack);
        out
    }

    fn eval_grad(
        &self,
        game: &GameModel<T>,
        agent: usize,
        at: GradPoint<'_, T>,
        eval: GradEval<'_>,
    ) -> DVector<T> {
        match eval {
            GradEval::Exact => game.exact_grad(agent, at),
            GradEval::Sampled { seed, k, schedule } => {
                sa_pseudogradient(game, agent, at, k, schedule, seed)
            }
        }
    }

    /// Backward step on the metric right-hand side `q = Φ y`: the unique
    /// solution of `Φ ω' + B(ω') ∋ q`, computed by the sequential
    /// closed-form sweep (prox on the primal block, scaling on the tracking
    /// and auxiliary blocks, projection with reflected terms on the dual
    /// block).
    pub fn backward_metric(&self, q: &DVector<T>) -> DVector<T> {
        assert_eq!(q.len(), self.layout.total(), "state dimension mismatch");
        let mut out = DVector::zeros(self.layout.total());
        for c in 0..self.layout.primal_len {
            let v = self.alpha_coord[c] * q[c];
            out[c] = clamp(v, self.lo[c], self.hi[c]);
        }
        let tr = self.layout.tracking_range();
        for c in tr.clone() {
            out[c] = self.gamma * q[c];
        }
        let aux = self.layout.aux_range();
        for (t, c) in aux.clone().enumerate() {
            out[c] = self.nu_coord[t] * q[c];
        }

        let x_new = out.rows(0, self.layout.primal_len).into_owned();
        let aux_new = out.rows(aux.start, self.layout.aux_len).into_owned();
        let two = T::of(2.0);
        let mut reflect = DVector::zeros(self.layout.dual_len);
        reflect.gemv(two, &self.a_sel, &x_new, T::zero());
        match &self.v_m {
            Some(v_m) => reflect.gemv_tr(two, v_m, &aux_new, T::one()),
            None => reflect.gemv(two, &self.l_m, &aux_new, T::one()),
        }
        let dual = self.layout.dual_range();
        for (t, c) in dual.enumerate() {
            let v = self.delta_coord[t] * (q[c] + reflect[t]);
            out[c] = if v > T::zero() { v } else { T::zero() };
        }
        out
    }

    /// Backward step at `y`: solves `Φ ω' + B(ω') ∋ Φ y`.
    pub fn backward(&self, y: &DVector<T>) -> DVector<T> {
        self.backward_metric(&(self.phi() * y))
    }

    /// One preconditioned forward-backward iteration
    /// `ω⁺ = (Id + Φ⁻¹B)⁻¹(ω - Φ⁻¹ A(ω))`, computed without inverting `Φ`.
    pub fn step(&self, game: &GameModel<T>, omega: &DVector<T>, eval: GradEval<'_>) -> DVector<T> {
        let a = self.forward(game, omega, eval);
        let q = self.phi() * omega - a;
        self.backward_metric(&q)
    }

    /// `res_Φ(ω) = ‖ω - (Id + Φ⁻¹B)⁻¹(ω - Φ⁻¹ A(ω))‖_Φ` with exact
    /// gradients; zero exactly at solutions.
    pub fn residual(&self, game: &GameModel<T>, omega: &DVector<T>) -> T {
        let next = self.step(game, omega, GradEval::Exact);
        self.phi_norm(&(omega - next))
    }

    /// `Φ⁻¹ v` through the cached factorization.
    pub fn phi_solve(&self, v: &DVector<T>) -> DVector<T> {
        self.phi_chol.solve(v)
    }

    /// Linear skew part `K` of the backward operator (the conservative
    /// coupling between primal, auxiliary and dual blocks).
    pub fn skew_matrix(&self) -> DMatrix<T> {
        let t = self.layout.total();
        let mut k = DMatrix::zeros(t, t);
        let dual = self.layout.dual_range();
        let aux = self.layout.aux_range();
        k.view_mut((0, dual.start), (self.layout.primal_len, self.layout.dual_len))
            .copy_from(&self.a_sel.transpose());
        k.view_mut((dual.start, 0), (self.layout.dual_len, self.layout.primal_len))
            .copy_from(&(-&self.a_sel));
        match &self.v_m {
            Some(v_m) => {
                k.view_mut((aux.start, dual.start), (self.layout.aux_len, self.layout.dual_len))
                    .copy_from(v_m);
                k.view_mut((dual.start, aux.start), (self.layout.dual_len, self.layout.aux_len))
                    .copy_from(&(-v_m.transpose()));
            }
            None => {
                k.view_mut((aux.start, dual.start), (self.layout.aux_len, self.layout.dual_len))
                    .copy_from(&self.l_m);
                k.view_mut((dual.start, aux.start), (self.layout.dual_len, self.layout.aux_len))
                    .copy_from(&(-&self.l_m));
            }
        }
        k
    }

    /// Lifts a primal-dual solution `(x*, λ*)` of the expected game into a
    /// zero `ω*` of the extended operator pair: consensus estimates (or
    /// zero-sum tracking offsets), consensus duals, and the auxiliary block
    /// solving the stationarity of the dual row on the consensus complement.
    pub fn consensus_solution(
        &self,
        game: &GameModel<T>,
        x_star: &DVector<T>,
        lambda_star: &DVector<T>,
    ) -> DVector<T> {
        let mut omega = DVector::zeros(self.layout.total());
        if self.variant.is_aggregative() {
            omega.rows_mut(0, self.layout.primal_len).copy_from(x_star);
            let avg = game.average_strategy(x_star);
            let nbar = self.layout.dims[0];
            let tr = self.layout.tracking_range();
            for i in 0..self.layout.n_agents {
                let mut s_i = omega.rows_mut(tr.start + i * nbar, nbar);
                s_i.copy_from(&(&avg - x_star.rows(i * nbar, nbar)));
            }
        } else {
            for i in 0..self.layout.n_agents {
                omega
                    .rows_mut(self.layout.estimate_range(i).start, self.layout.n)
                    .copy_from(x_star);
            }
        }
        let dual = self.layout.dual_range();
        for i in 0..self.layout.n_agents {
            omega
                .rows_mut(dual.start + i * self.layout.m, self.layout.m)
                .copy_from(lambda_star);
        }

        // dual-row stationarity: consensus operator applied to the auxiliary
        // block must equal b_i - A_i x_i* + (A x* - b)/N per agent
        let slack = (game.apply_coupling(x_star) - game.rhs()) / T::of(self.layout.n_agents as f64);
        let primal = omega.rows(0, self.layout.primal_len).into_owned();
        let mut rhs = -(&self.a_sel * primal);
        for i in 0..self.layout.n_agents {
            let mut r_i = rhs.rows_mut(i * self.layout.m, self.layout.m);
            r_i += &self.b_stack.rows(i * self.layout.m, self.layout.m);
            r_i += &slack;
        }
        let aux_star = self.solve_aux_consensus(&rhs);
        omega
            .rows_mut(self.layout.aux_range().start, self.layout.aux_len)
            .copy_from(&aux_star);
        omega
    }

    /// Solves `L_m z = rhs` (node) or `V_mᵀ v = rhs` (edge) for a right-hand
    /// side orthogonal to the consensus subspace, via the Laplacian
    /// pseudoinverse applied per constraint coordinate.
    fn solve_aux_consensus(&self, rhs: &DVector<T>) -> DVector<T> {
        let n_agents = self.layout.n_agents;
        let m = self.layout.m;
        let eig = self.laplacian_small.clone().symmetric_eigen();
        let tol = T::of(1e-10) * self.laplacian_small.amax().max(T::one());
        let mut aux = DVector::zeros(self.layout.aux_len);
        for coord in 0..m {
            let r = DVector::from_fn(n_agents, |i, _| rhs[i * m + coord]);
            let mut z = DVector::zeros(n_agents);
            for e in 0..n_agents {
                let lam = eig.eigenvalues[e];
                if lam.abs() > tol {
                    let v = eig.eigenvectors.column(e);
                    z.axpy(v.dot(&r) / lam, &v.into_owned(), T::one());
                }
            }
            match &self.incidence_small {
                Some(v_small) => {
                    let ve = v_small * &z;
                    for l in 0..self.layout.edge_count {
                        aux[l * m + coord] = ve[l];
                    }
                }
                None => {
                    for i in 0..n_agents {
                        aux[i * m + coord] = z[i];
                    }
                }
            }
        }
        aux
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
