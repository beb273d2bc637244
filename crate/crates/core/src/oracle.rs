//! Centralized full-information reference solvers.
//!
//! These provide ground truth for the distributed algorithms: the unique
//! variational equilibrium of the expected game, a KKT verifier, and a slow
//! but unconditionally convergent inner solver for the backward resolvent
//! used to validate the closed-form sweep.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::game::quadratic::spectral_norm;
use crate::game::{project_nonneg_mut, GameModel};
use crate::ops::MatrixEngine;
use crate::scalar::Scalar;

/// Fixed prox step for the stationarity residual.
const KKT_PROX_STEP: f64 = 0.1;

/// Per-condition residuals of the KKT system at `(x, λ)`.
#[derive(Debug, Clone)]
pub struct KktReport<T> {
    /// `‖x - P_Ω(x - α (F(x) + Aᵀλ))‖_∞` for a small fixed `α`.
    pub stationarity: T,
    /// `max(0, -min_j λ_j)`.
    pub dual_feasibility: T,
    /// `‖max(A x - b, 0)‖_∞`.
    pub primal_feasibility: T,
    /// `|λᵀ (A x - b)|`.
    pub complementarity: T,
    pub tol: T,
    pub pass: bool,
}

/// Checks the stationarity and complementarity conditions at `(x, λ)`.
pub fn kkt_check<T: Scalar>(
    game: &GameModel<T>,
    x: &DVector<T>,
    lambda: &DVector<T>,
    tol: T,
) -> KktReport<T> {
    let grad = game.exact_pseudogradient(x);
    let mut shifted = grad;
    let a = game.coupling_stacked();
    shifted.gemv_tr(T::one(), &a, lambda, T::one());
    let step = T::of(KKT_PROX_STEP);
    let candidate = x - shifted * step;
    let mut stationarity = T::zero();
    for i in 0..game.num_agents() {
        let block = candidate.rows(game.offset_of(i), game.dim_of(i)).into_owned();
        let projected = game.box_of(i).project(&block);
        let x_block = x.rows(game.offset_of(i), game.dim_of(i));
        let r = (x_block - projected).amax();
        if r > stationarity {
            stationarity = r;
        }
    }
    let slack = game.apply_coupling(x) - game.rhs();
    let primal_feasibility = slack
        .iter()
        .fold(T::zero(), |acc, &s| if s > acc { s } else { acc });
    let dual_feasibility = lambda
        .iter()
        .fold(T::zero(), |acc, &l| if -l > acc { -l } else { acc });
    let complementarity = lambda.dot(&slack).abs();
    let pass = stationarity <= tol
        && dual_feasibility <= tol
        && primal_feasibility <= tol
        && complementarity <= tol;
    KktReport {
        stationarity,
        dual_feasibility,
        primal_feasibility,
        complementarity,
        tol,
        pass,
    }
}

/// Solves the expected game to its variational equilibrium `(x*, λ*)` by a
/// full-information preconditioned forward-backward iteration with reflected
/// dual update. Step sizes are scaled so the metric-compatibility bound
/// holds, which makes the iteration unconditionally convergent under the
/// game's strong monotonicity; speed is irrelevant here.
pub fn solve_vgne<T: Scalar>(game: &GameModel<T>, tol: T) -> Result<(DVector<T>, DVector<T>)> {
    let constants = game.constants();
    if constants.eta <= T::zero() {
        return Err(Error::InvalidParameter {
            name: "eta",
            reason: "oracle needs a strongly monotone game".into(),
        });
    }
    let a = game.coupling_stacked();
    let b = game.rhs();
    let n = game.dim_total();
    let m = game.constraint_dim();

    // Gershgorin ceilings without a graph, then shrink to the cocoercivity range.
    let two_beta = T::of(2.0) * constants.eta / (constants.ell_f * constants.ell_f);
    let margin = T::one();
    let scale = T::of(0.9) * if two_beta < T::one() { two_beta } else { T::one() };
    let mut col_sum = T::zero();
    let mut row_sum = T::zero();
    for c in 0..n {
        let s = (0..m).fold(T::zero(), |acc, r| acc + a[(r, c)].abs());
        if s > col_sum {
            col_sum = s;
        }
    }
    for r in 0..m {
        let s = (0..n).fold(T::zero(), |acc, c| acc + a[(r, c)].abs());
        if s > row_sum {
            row_sum = s;
        }
    }
    let tau_x = scale / (margin + col_sum);
    let tau_l = scale / (margin + row_sum);

    let mut x = DVector::zeros(n);
    for i in 0..game.num_agents() {
        let bounds = game.box_of(i);
        let mid = (bounds.lo() + bounds.hi()) * T::of(0.5);
        x.rows_mut(game.offset_of(i), game.dim_of(i)).copy_from(&mid);
    }
    let mut lambda = DVector::zeros(m);

    let max_iters: u64 = 1_000_000;
    let mut residual = T::of(f64::INFINITY);
    for iter in 0..max_iters {
        let mut grad = game.exact_pseudogradient(&x);
        grad.gemv_tr(T::one(), &a, &lambda, T::one());
        let mut x_next = &x - grad * tau_x;
        for i in 0..game.num_agents() {
            let mut block = x_next.rows_mut(game.offset_of(i), game.dim_of(i));
            let projected = game.box_of(i).project(&block.clone_owned());
            block.copy_from(&projected);
        }
        let reflected = &x_next * T::of(2.0) - &x;
        let mut lambda_next = lambda.clone();
        lambda_next.gemv(tau_l, &a, &reflected, T::one());
        lambda_next.axpy(-tau_l, b, T::one());
        project_nonneg_mut(&mut lambda_next);

        x = x_next;
        lambda = lambda_next;

        if iter % 64 == 0 {
            let report = kkt_check(game, &x, &lambda, tol);
            residual = report
                .stationarity
                .max(report.primal_feasibility)
                .max(report.complementarity);
            if report.pass {
                return Ok((x, lambda));
            }
        }
    }
    Err(Error::NonConvergence {
        what: "full-information equilibrium solve",
        iterations: max_iters,
        residual: residual.to_f64(),
    })
}

/// Solves `Φ ω + B(ω) ∋ Φ y` by a damped projected forward iteration on the
/// strongly monotone inclusion; used only to validate the closed-form
/// backward sweep.
pub fn oracle_resolvent<T: Scalar>(
    engine: &MatrixEngine<T>,
    game: &GameModel<T>,
    y: &DVector<T>,
    tol: T,
) -> Result<DVector<T>> {
    let phi = engine.phi();
    let skew = engine.skew_matrix();
    let target = phi * y;
    let map_matrix = phi + &skew;

    let mu = engine.preconditioner().min_eigenvalue();
    if mu <= T::zero() {
        return Err(Error::IndefinitePreconditioner(
            "resolvent oracle needs a positive definite metric".into(),
        ));
    }
    let lip = spectral_norm(&map_matrix);
    let rho = mu / (lip * lip);
    let half = T::of(0.5);

    let layout = engine.layout();
    let project = |v: &mut DVector<T>| {
        for i in 0..layout.n_agents {
            let bounds = game.box_of(i);
            for (t, c) in layout.decision_range(i).enumerate() {
                let lo = bounds.lo()[t];
                let hi = bounds.hi()[t];
                if v[c] < lo {
                    v[c] = lo;
                } else if v[c] > hi {
                    v[c] = hi;
                }
            }
        }
        for c in layout.dual_range() {
            if v[c] < T::zero() {
                v[c] = T::zero();
            }
        }
    };

    let mut omega = y.clone();
    project(&mut omega);
    let max_inner: u64 = 100_000;
    let mut gap = T::of(f64::INFINITY);
    for _ in 0..max_inner {
        let mut mapped = &omega - (&map_matrix * &omega - &target) * rho;
        project(&mut mapped);
        gap = (&mapped - &omega).amax();
        let scale = omega.amax().max(T::one());
        omega = &omega * half + mapped * half;
        if gap <= tol * scale {
            return Ok(omega);
        }
    }
    Err(Error::NonConvergence {
        what: "inner resolvent iteration",
        iterations: max_inner,
        residual: gap.to_f64(),
    })
}
