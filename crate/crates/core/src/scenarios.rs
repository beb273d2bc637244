//! Seeded scenario generators.
//!
//! Each generator draws its parameters from a dedicated stream of the given
//! seed, records them in a serializable parameter struct (so regeneration is
//! byte-identical), and assembles the corresponding [`GameModel`]. The two
//! market scenarios mirror the production/charging experiments at arbitrary
//! scale; the analytic fixtures carry their equilibrium in closed form.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::quadratic::{build_aggregative_game, build_network_game, NoiseSpec};
use crate::game::{BoxBounds, GameModel};
use crate::oracle::kkt_check;
use crate::rng::{stream_rng, StreamKind};
use crate::scalar::Scalar;

/// Scale of the Gaussian draws; zero gives a deterministic game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevel {
    pub sigma: f64,
}

impl Default for NoiseLevel {
    fn default() -> Self {
        Self { sigma: 1.0 }
    }
}

impl NoiseLevel {
    pub fn deterministic() -> Self {
        Self { sigma: 0.0 }
    }

    pub fn is_zero(&self) -> bool {
        self.sigma == 0.0
    }
}

// ---------------------------------------------------------------------------
// Cournot production game over capacitated markets
// ---------------------------------------------------------------------------

/// Generated parameters of one Cournot market instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashCournotParams {
    pub n_agents: usize,
    pub n_markets: usize,
    pub seed: u64,
    pub sigma: f64,
    /// Mean of the random cost-curvature diagonal.
    pub mean_cost_curvature: f64,
    /// Mean of the random market price offsets.
    pub mean_price: f64,
    /// Markets each company sells in (sorted, `ceil(m/2)` of them).
    pub participation: Vec<Vec<usize>>,
    /// Price sensitivity per market, in `[1, 3]`.
    pub price_sensitivity: Vec<f64>,
    /// Linear production-cost coefficients per company, in `[1, 2]`.
    pub cost_linear: Vec<Vec<f64>>,
    /// Production caps per company, in `[5, 10]`.
    pub capacity: Vec<Vec<f64>>,
    /// Market capacities, in `[1, 2]`.
    pub market_capacity: Vec<f64>,
}

/// Companies sell a commodity in a subset of capacitated markets; quadratic
/// production costs with random curvature, linear prices with random offsets.
/// Network-mode game with the participation matrix doubling as the coupling.
pub fn nash_cournot<T: Scalar>(
    n_agents: usize,
    n_markets: usize,
    seed: u64,
    noise: NoiseLevel,
) -> Result<(GameModel<T>, NashCournotParams)> {
    if n_agents < 2 || n_markets < 1 {
        return Err(Error::InvalidParameter {
            name: "dims",
            reason: "need at least 2 companies and 1 market".into(),
        });
    }
    let mut rng = stream_rng(seed, StreamKind::Scenario, 0, 0);
    let per_agent = n_markets.div_ceil(2);

    // draw order: participation, chi, q, caps, b
    let mut participation = Vec::with_capacity(n_agents);
    for _ in 0..n_agents {
        let mut markets: Vec<usize> = (0..n_markets).collect();
        for j in (1..markets.len()).rev() {
            let pick = (f64::uniform(&mut rng, 0.0, (j + 1) as f64)) as usize;
            markets.swap(j, pick.min(j));
        }
        let mut chosen: Vec<usize> = markets[..per_agent].to_vec();
        chosen.sort_unstable();
        participation.push(chosen);
    }
    let price_sensitivity: Vec<f64> =
        (0..n_markets).map(|_| f64::uniform(&mut rng, 1.0, 3.0)).collect();
    let cost_linear: Vec<Vec<f64>> = (0..n_agents)
        .map(|_| (0..per_agent).map(|_| f64::uniform(&mut rng, 1.0, 2.0)).collect())
        .collect();
    let capacity: Vec<Vec<f64>> = (0..n_agents)
        .map(|_| (0..per_agent).map(|_| f64::uniform(&mut rng, 5.0, 10.0)).collect())
        .collect();
    let market_capacity: Vec<f64> =
        (0..n_markets).map(|_| f64::uniform(&mut rng, 1.0, 2.0)).collect();

    let params = NashCournotParams {
        n_agents,
        n_markets,
        seed,
        sigma: noise.sigma,
        mean_cost_curvature: 4.5,
        mean_price: 15.0,
        participation,
        price_sensitivity,
        cost_linear,
        capacity,
        market_capacity,
    };
    let game = build_nash_cournot(&params)?;
    Ok((game, params))
}

/// Assembles the expected-game model from recorded parameters.
pub fn build_nash_cournot<T: Scalar>(p: &NashCournotParams) -> Result<GameModel<T>> {
    let n_agents = p.n_agents;
    let m = p.n_markets;
    let dims: Vec<usize> = p.participation.iter().map(Vec::len).collect();
    let n: usize = dims.iter().sum();

    let coupling: Vec<DMatrix<T>> = (0..n_agents)
        .map(|i| {
            let mut a = DMatrix::zeros(m, dims[i]);
            for (t, &market) in p.participation[i].iter().enumerate() {
                a[(market, t)] = T::one();
            }
            a
        })
        .collect();

    // expected pseudogradient: M x + r with
    // M = 2 Q̄ + Aᵀ diag(χ) A + blkdiag(A_iᵀ diag(χ) A_i), r_i = q_i - A_iᵀ p̄
    let chi = DVector::<T>::from_fn(m, |j, _| T::of(p.price_sensitivity[j]));
    let mut offsets = Vec::with_capacity(n_agents);
    let mut acc = 0;
    for &d in &dims {
        offsets.push(acc);
        acc += d;
    }
    let mut a_full = DMatrix::<T>::zeros(m, n);
    for i in 0..n_agents {
        a_full
            .view_mut((0, offsets[i]), (m, dims[i]))
            .copy_from(&coupling[i]);
    }
    let chi_a = DMatrix::<T>::from_fn(m, n, |r, c| chi[r] * a_full[(r, c)]);
    let mut m_full = a_full.transpose() * &chi_a;
    let two_qbar = T::of(2.0 * p.mean_cost_curvature);
    for i in 0..n_agents {
        let a_i = &coupling[i];
        let chi_ai = DMatrix::<T>::from_fn(m, dims[i], |r, c| chi[r] * a_i[(r, c)]);
        let local = a_i.transpose() * chi_ai;
        let mut block = m_full.view_mut((offsets[i], offsets[i]), (dims[i], dims[i]));
        block += local;
        for t in 0..dims[i] {
            block[(t, t)] += two_qbar;
        }
    }
    let p_bar = DVector::<T>::from_element(m, T::of(p.mean_price));
    let intercepts: Vec<DVector<T>> = (0..n_agents)
        .map(|i| {
            let q = DVector::<T>::from_fn(dims[i], |t, _| T::of(p.cost_linear[i][t]));
            q - coupling[i].transpose() * &p_bar
        })
        .collect();

    let boxes: Vec<BoxBounds<T>> = (0..n_agents)
        .map(|i| {
            BoxBounds::new(
                DVector::zeros(dims[i]),
                DVector::from_fn(dims[i], |t, _| T::of(p.capacity[i][t])),
            )
        })
        .collect::<Result<_>>()?;
    let rhs = DVector::<T>::from_fn(m, |j, _| T::of(p.market_capacity[j]));

    let noise = if p.sigma == 0.0 {
        NoiseSpec::None
    } else {
        NoiseSpec::CournotMarket { sigma_q: T::of(p.sigma), sigma_p: T::of(p.sigma) }
    };
    let game = build_network_game(m_full, intercepts, boxes, coupling, rhs, noise)?;

    // strictly feasible point: small equal production in every served market
    let max_load = p
        .participation
        .iter()
        .flatten()
        .fold(vec![0usize; m], |mut acc, &j| {
            acc[j] += 1;
            acc
        })
        .into_iter()
        .max()
        .unwrap_or(1)
        .max(1);
    let min_cap = p.market_capacity.iter().copied().fold(f64::INFINITY, f64::min);
    let eps = T::of(0.4 * min_cap / max_load as f64);
    let witness: Vec<DVector<T>> = (0..n_agents)
        .map(|i| DVector::from_element(dims[i], eps))
        .collect();
    game.with_slater_witness(witness)
}

// ---------------------------------------------------------------------------
// Charging-schedule game (aggregative)
// ---------------------------------------------------------------------------

/// Generated parameters of one charging-schedule instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvChargingParams {
    pub n_agents: usize,
    pub horizon: usize,
    pub seed: u64,
    pub sigma: f64,
    pub mean_cost: f64,
    pub mean_price: f64,
    /// Price sensitivity per slot, in `[1, 2]`.
    pub price_sensitivity: Vec<f64>,
    /// Per-user charging caps: 0.25 with probability 1/2, else 0.
    pub capacity: Vec<Vec<f64>>,
    /// Transmission-line limit per slot: 0.4 on night slots, 1.0 by day.
    pub line_limit: Vec<f64>,
}

/// Users schedule charging over `horizon` slots; linear battery cost plus a
/// price decreasing in the average load. Aggregative-mode game with the
/// two-sided total-load constraint `0 <= Σ_i x_i <= θ` stacked as
/// `[I; -I] x <= (θ; 0)`.
pub fn ev_charging<T: Scalar>(
    n_agents: usize,
    horizon: usize,
    seed: u64,
    noise: NoiseLevel,
) -> Result<(GameModel<T>, EvChargingParams)> {
    if n_agents < 2 || horizon < 2 {
        return Err(Error::InvalidParameter {
            name: "dims",
            reason: "need at least 2 users and 2 slots".into(),
        });
    }
    let mut rng = stream_rng(seed, StreamKind::Scenario, 0, 1);
    // draw order: chi, caps
    let price_sensitivity: Vec<f64> =
        (0..horizon).map(|_| f64::uniform(&mut rng, 1.0, 2.0)).collect();
    let capacity: Vec<Vec<f64>> = (0..n_agents)
        .map(|_| {
            (0..horizon)
                .map(|_| if f64::uniform(&mut rng, 0.0, 1.0) < 0.5 { 0.25 } else { 0.0 })
                .collect()
        })
        .collect();
    // night window: leading quarter and trailing sixth of the horizon
    let lead = horizon.div_ceil(4);
    let trail = horizon.div_ceil(6);
    let line_limit: Vec<f64> = (0..horizon)
        .map(|j| if j < lead || j >= horizon - trail { 0.4 } else { 1.0 })
        .collect();

    let params = EvChargingParams {
        n_agents,
        horizon,
        seed,
        sigma: noise.sigma,
        mean_cost: 4.0,
        mean_price: 4.5,
        price_sensitivity,
        capacity,
        line_limit,
    };
    let game = build_ev_charging(&params)?;
    Ok((game, params))
}

/// Assembles the expected-game model from recorded parameters.
pub fn build_ev_charging<T: Scalar>(p: &EvChargingParams) -> Result<GameModel<T>> {
    let nbar = p.horizon;
    let n_agents = p.n_agents;
    let chi = DVector::<T>::from_fn(nbar, |j, _| T::of(p.price_sensitivity[j]));
    let inv_n = T::one() / T::of(n_agents as f64);
    let own_jac: Vec<DMatrix<T>> = (0..n_agents)
        .map(|_| DMatrix::from_diagonal(&(&chi * inv_n)))
        .collect();
    let agg_jac: Vec<DMatrix<T>> = (0..n_agents)
        .map(|_| DMatrix::from_diagonal(&chi))
        .collect();
    let offset = T::of(p.mean_cost - p.mean_price);
    let intercepts: Vec<DVector<T>> = (0..n_agents)
        .map(|_| DVector::from_element(nbar, offset))
        .collect();
    let boxes: Vec<BoxBounds<T>> = (0..n_agents)
        .map(|i| {
            BoxBounds::new(
                DVector::zeros(nbar),
                DVector::from_fn(nbar, |j, _| T::of(p.capacity[i][j])),
            )
        })
        .collect::<Result<_>>()?;
    // two-sided total-load constraint
    let mut a_block = DMatrix::<T>::zeros(2 * nbar, nbar);
    for j in 0..nbar {
        a_block[(j, j)] = T::one();
        a_block[(nbar + j, j)] = -T::one();
    }
    let coupling: Vec<DMatrix<T>> = (0..n_agents).map(|_| a_block.clone()).collect();
    let mut rhs = DVector::<T>::zeros(2 * nbar);
    for j in 0..nbar {
        rhs[j] = T::of(p.line_limit[j]);
    }
    let noise = if p.sigma == 0.0 {
        NoiseSpec::None
    } else {
        NoiseSpec::LinearPrice { sigma_cost: T::of(p.sigma), sigma_price: T::of(p.sigma) }
    };
    build_aggregative_game(own_jac, agg_jac, intercepts, boxes, coupling, rhs, noise)
}

// ---------------------------------------------------------------------------
// Analytic quadratic fixtures
// ---------------------------------------------------------------------------

/// Parameters and closed-form solution of an analytic quadratic game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticQuadraticParams {
    pub n_agents: usize,
    pub block_dim: usize,
    pub seed: u64,
    pub aggregative: bool,
    pub curvature: Vec<f64>,
    pub interaction: f64,
    pub targets: Vec<Vec<f64>>,
    pub budget: Vec<f64>,
    pub sigma: f64,
    pub solution: Vec<f64>,
    pub multiplier: Vec<f64>,
}

/// Analytic quadratic game plus its equilibrium.
pub struct AnalyticQuadratic<T: Scalar> {
    pub game: GameModel<T>,
    pub x_star: DVector<T>,
    pub lambda_star: DVector<T>,
    pub params: AnalyticQuadraticParams,
}

/// Small network game with a single shared budget row whose KKT system is
/// solved in closed form at generation time. With `n_agents = 1` the budget
/// is left slack and the solution is the unconstrained minimizer.
pub fn analytic_quadratic<T: Scalar>(
    n_agents: usize,
    seed: u64,
    noise: NoiseLevel,
) -> Result<AnalyticQuadratic<T>> {
    if n_agents == 0 {
        return Err(Error::InvalidParameter {
            name: "n_agents",
            reason: "need at least one agent".into(),
        });
    }
    let mut rng = stream_rng(seed, StreamKind::Scenario, 0, 2);
    let curvature: Vec<f64> = (0..n_agents).map(|_| f64::uniform(&mut rng, 1.5, 2.5)).collect();
    let interaction = if n_agents > 1 { 0.5 / (n_agents as f64 - 1.0) } else { 0.0 };
    let targets: Vec<Vec<f64>> =
        (0..n_agents).map(|_| vec![f64::uniform(&mut rng, 1.0, 2.0)]).collect();

    // F(x) = M x - a with M = diag(kappa) + rho (11ᵀ - I)
    let m_full = DMatrix::<f64>::from_fn(n_agents, n_agents, |i, j| {
        if i == j {
            curvature[i]
        } else {
            interaction
        }
    });
    let a_vec = DVector::<f64>::from_fn(n_agents, |i, _| targets[i][0]);
    let unconstrained = m_full
        .clone()
        .lu()
        .solve(&a_vec)
        .ok_or_else(|| Error::InvalidState("singular quadratic form".into()))?;

    let (budget, x_star, lambda_star) = if n_agents == 1 {
        (unconstrained.sum() + 1.0, unconstrained.clone(), 0.0)
    } else {
        let budget = 0.8 * unconstrained.sum();
        // stationarity M x + λ 1 = a, activity 1ᵀ x = budget
        let m_inv_a = unconstrained.clone();
        let ones = DVector::from_element(n_agents, 1.0);
        let m_inv_ones = m_full
            .clone()
            .lu()
            .solve(&ones)
            .ok_or_else(|| Error::InvalidState("singular quadratic form".into()))?;
        let lambda = (m_inv_a.sum() - budget) / m_inv_ones.sum();
        let x = m_inv_a - m_inv_ones * lambda;
        (budget, x, lambda)
    };

    let params = AnalyticQuadraticParams {
        n_agents,
        block_dim: 1,
        seed,
        aggregative: false,
        curvature,
        interaction,
        targets,
        budget: vec![budget],
        sigma: noise.sigma,
        solution: x_star.iter().copied().collect(),
        multiplier: vec![lambda_star],
    };

    let noise_spec = if noise.is_zero() {
        NoiseSpec::None
    } else {
        NoiseSpec::Additive { sigma: T::of(noise.sigma) }
    };
    let boxes: Vec<BoxBounds<T>> = (0..n_agents).map(|_| BoxBounds::symmetric(1, T::of(10.0))).collect();
    let coupling: Vec<DMatrix<T>> = (0..n_agents)
        .map(|_| DMatrix::from_element(1, 1, T::one()))
        .collect();
    let intercepts: Vec<DVector<T>> = (0..n_agents)
        .map(|i| DVector::from_element(1, -T::of(params.targets[i][0])))
        .collect();
    let m_t = DMatrix::<T>::from_fn(n_agents, n_agents, |i, j| T::of(m_full[(i, j)]));
    let game = build_network_game(
        m_t,
        intercepts,
        boxes,
        coupling,
        DVector::from_element(1, T::of(budget)),
        noise_spec,
    )?;

    let x_star_t = DVector::<T>::from_fn(n_agents, |i, _| T::of(x_star[i]));
    let lambda_star_t = DVector::from_element(1, T::of(lambda_star));
    let report = kkt_check(&game, &x_star_t, &lambda_star_t, T::of(1e-10));
    if !report.pass {
        return Err(Error::InvalidState(format!(
            "analytic solution fails its KKT check: stationarity {:.2e}",
            report.stationarity.to_f64()
        )));
    }
    Ok(AnalyticQuadratic { game, x_star: x_star_t, lambda_star: lambda_star_t, params })
}

/// Aggregative analytic fixture: separable quadratic costs plus an
/// average-price term, per-slot budget rows, closed-form KKT solution.
pub fn analytic_quadratic_aggregative<T: Scalar>(
    n_agents: usize,
    block_dim: usize,
    seed: u64,
    noise: NoiseLevel,
) -> Result<AnalyticQuadratic<T>> {
    if n_agents < 2 || block_dim == 0 {
        return Err(Error::InvalidParameter {
            name: "dims",
            reason: "need at least 2 agents and 1 coordinate".into(),
        });
    }
    let mut rng = stream_rng(seed, StreamKind::Scenario, 0, 3);
    // weak coupling keeps the gain threshold near 1/2, so the default gain
    // 2 c_min sits where the unit-gain aggregative Lipschitz bound applies
    let kappa = 0.75;
    let rho = 0.05;
    let targets: Vec<Vec<f64>> = (0..n_agents)
        .map(|_| (0..block_dim).map(|_| f64::uniform(&mut rng, 1.0, 2.0)).collect())
        .collect();

    // induced full matrix M: block (i,j) = δ_ij (kappa + rho/N) I + (rho/N) I
    let n = n_agents * block_dim;
    let inv_n = 1.0 / n_agents as f64;
    let mut m_full = DMatrix::<f64>::zeros(n, n);
    for i in 0..n_agents {
        for j in 0..n_agents {
            let v = if i == j { kappa + rho * inv_n + rho * inv_n } else { rho * inv_n };
            for t in 0..block_dim {
                m_full[(i * block_dim + t, j * block_dim + t)] = v;
            }
        }
    }
    let a_vec = DVector::<f64>::from_fn(n, |c, _| targets[c / block_dim][c % block_dim]);
    let unconstrained = m_full
        .clone()
        .lu()
        .solve(&a_vec)
        .ok_or_else(|| Error::InvalidState("singular quadratic form".into()))?;
    // per-slot budget at 80% of the unconstrained total load
    let mut total = DVector::<f64>::zeros(block_dim);
    for i in 0..n_agents {
        total += unconstrained.rows(i * block_dim, block_dim);
    }
    let budget = total * 0.8;
    // saddle system [M Aᵀ; A 0] (x, λ) = (a, budget), A = [I ... I]
    let dim = n + block_dim;
    let mut kkt = DMatrix::<f64>::zeros(dim, dim);
    kkt.view_mut((0, 0), (n, n)).copy_from(&m_full);
    for i in 0..n_agents {
        for t in 0..block_dim {
            kkt[(i * block_dim + t, n + t)] = 1.0;
            kkt[(n + t, i * block_dim + t)] = 1.0;
        }
    }
    let mut rhs_sys = DVector::<f64>::zeros(dim);
    rhs_sys.rows_mut(0, n).copy_from(&a_vec);
    rhs_sys.rows_mut(n, block_dim).copy_from(&budget);
    let sol = kkt
        .lu()
        .solve(&rhs_sys)
        .ok_or_else(|| Error::InvalidState("singular KKT system".into()))?;
    let x_star = sol.rows(0, n).into_owned();
    let lambda_star = sol.rows(n, block_dim).into_owned();
    if lambda_star.iter().any(|&l| l < 1e-9) {
        return Err(Error::InvalidState(
            "generated budget is not uniformly active".into(),
        ));
    }

    let params = AnalyticQuadraticParams {
        n_agents,
        block_dim,
        seed,
        aggregative: true,
        curvature: vec![kappa; n_agents],
        interaction: rho,
        targets,
        budget: budget.iter().copied().collect(),
        sigma: noise.sigma,
        solution: x_star.iter().copied().collect(),
        multiplier: lambda_star.iter().copied().collect(),
    };

    let own_jac: Vec<DMatrix<T>> = (0..n_agents)
        .map(|_| DMatrix::identity(block_dim, block_dim) * T::of(kappa + rho * inv_n))
        .collect();
    let agg_jac: Vec<DMatrix<T>> = (0..n_agents)
        .map(|_| DMatrix::identity(block_dim, block_dim) * T::of(rho))
        .collect();
    let intercepts: Vec<DVector<T>> = (0..n_agents)
        .map(|i| DVector::from_fn(block_dim, |t, _| -T::of(params.targets[i][t])))
        .collect();
    let boxes: Vec<BoxBounds<T>> = (0..n_agents)
        .map(|_| BoxBounds::symmetric(block_dim, T::of(10.0)))
        .collect();
    let coupling: Vec<DMatrix<T>> =
        (0..n_agents).map(|_| DMatrix::identity(block_dim, block_dim)).collect();
    let noise_spec = if noise.is_zero() {
        NoiseSpec::None
    } else {
        NoiseSpec::Additive { sigma: T::of(noise.sigma) }
    };
    let game = build_aggregative_game(
        own_jac,
        agg_jac,
        intercepts,
        boxes,
        coupling,
        DVector::<T>::from_fn(block_dim, |t, _| T::of(params.budget[t])),
        noise_spec,
    )?;

    let x_star_t = DVector::<T>::from_fn(n, |c, _| T::of(x_star[c]));
    let lambda_star_t = DVector::<T>::from_fn(block_dim, |t, _| T::of(lambda_star[t]));
    let report = kkt_check(&game, &x_star_t, &lambda_star_t, T::of(1e-10));
    if !report.pass {
        return Err(Error::InvalidState(format!(
            "analytic solution fails its KKT check: stationarity {:.2e}",
            report.stationarity.to_f64()
        )));
    }
    Ok(AnalyticQuadratic { game, x_star: x_star_t, lambda_star: lambda_star_t, params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GradPoint;
    use crate::oracle::solve_vgne;
    use approx::assert_relative_eq;

    #[test]
    fn paper_scale_cournot_builds_with_parameters_in_range() {
        let (game, params) = nash_cournot::<f64>(20, 7, 0, NoiseLevel::default()).unwrap();
        assert_eq!(game.num_agents(), 20);
        assert_eq!(game.constraint_dim(), 7);
        assert!(params.price_sensitivity.iter().all(|&v| (1.0..=3.0).contains(&v)));
        assert!(params.market_capacity.iter().all(|&v| (1.0..=2.0).contains(&v)));
        assert!(params
            .capacity
            .iter()
            .flatten()
            .all(|&v| (5.0..=10.0).contains(&v)));
        assert!(params.cost_linear.iter().flatten().all(|&v| (1.0..=2.0).contains(&v)));
        assert!(params.participation.iter().all(|p| p.len() == 4));
        assert!(game.constants().eta > 0.0);
        assert!(game.slater_witness().is_some());
    }

    #[test]
    fn desk_cournot_is_strongly_monotone() {
        let (game, _) = nash_cournot::<f64>(5, 3, 0, NoiseLevel::default()).unwrap();
        let eta = game.constants().eta;
        assert!(eta > 0.0);
        let mut rng = stream_rng(1, StreamKind::Scenario, 9, 0);
        let n = game.dim_total();
        for _ in 0..1000 {
            let x = DVector::<f64>::from_fn(n, |_, _| f64::uniform(&mut rng, 0.0, 5.0));
            let y = DVector::<f64>::from_fn(n, |_, _| f64::uniform(&mut rng, 0.0, 5.0));
            let diff = &x - &y;
            let gap = (game.exact_pseudogradient(&x) - game.exact_pseudogradient(&y)).dot(&diff);
            assert!(gap >= eta * diff.norm_squared() - 1e-9);
        }
    }

    #[test]
    fn zero_variance_override_makes_samples_exact() {
        let (game, _) = nash_cournot::<f64>(3, 2, 1, NoiseLevel::deterministic()).unwrap();
        let x = DVector::from_element(game.dim_total(), 0.5);
        let mut rng = stream_rng(2, StreamKind::Gradient, 0, 0);
        let sample = game.sampler().sample(0, GradPoint::Network { estimate: &x }, &mut rng);
        let exact = game.exact_grad(0, GradPoint::Network { estimate: &x });
        assert_eq!(sample, exact);
    }

    #[test]
    fn scenario_generation_is_deterministic() {
        let (_, p1) = nash_cournot::<f64>(5, 3, 7, NoiseLevel::default()).unwrap();
        let (_, p2) = nash_cournot::<f64>(5, 3, 7, NoiseLevel::default()).unwrap();
        assert_eq!(
            serde_json::to_string(&p1).unwrap(),
            serde_json::to_string(&p2).unwrap()
        );
        let (_, e1) = ev_charging::<f64>(4, 6, 7, NoiseLevel::default()).unwrap();
        let (_, e2) = ev_charging::<f64>(4, 6, 7, NoiseLevel::default()).unwrap();
        assert_eq!(
            serde_json::to_string(&e1).unwrap(),
            serde_json::to_string(&e2).unwrap()
        );
    }

    #[test]
    fn paper_scale_ev_builds_with_stated_parameters() {
        let (game, params) = ev_charging::<f64>(10, 12, 0, NoiseLevel::default()).unwrap();
        assert_eq!(game.num_agents(), 10);
        assert_eq!(game.constraint_dim(), 24);
        assert!(params.price_sensitivity.iter().all(|&v| (1.0..=2.0).contains(&v)));
        assert!(params.capacity.iter().flatten().all(|&v| v == 0.0 || v == 0.25));
        // night window at horizon 12: slots 0..3 and 10..12
        let night: Vec<usize> = (0..12).filter(|&j| params.line_limit[j] == 0.4).collect();
        assert_eq!(night, vec![0, 1, 2, 10, 11]);
        assert!(game.constants().ell_agg.is_some());
    }

    #[test]
    fn desk_ev_solves_and_respects_line_limits() {
        let (game, params) = ev_charging::<f64>(4, 6, 0, NoiseLevel::default()).unwrap();
        let (x, _lambda) = solve_vgne(&game, 1e-9).unwrap();
        // total load within the line limits
        let total = game.apply_coupling(&x);
        for j in 0..6 {
            assert!(total[j] <= params.line_limit[j] + 1e-7);
        }
        assert!(game.constraint_violation(&x) < 1e-7);
    }

    #[test]
    fn zero_capacity_user_stays_at_zero() {
        // seed chosen arbitrarily; zero out one user's caps explicitly
        let (_, mut params) = ev_charging::<f64>(4, 6, 3, NoiseLevel::default()).unwrap();
        params.capacity[0] = vec![0.0; 6];
        let game = build_ev_charging::<f64>(&params).unwrap();
        let (x, _) = solve_vgne(&game, 1e-9).unwrap();
        assert_relative_eq!(x.rows(0, 6).amax(), 0.0);
    }

    #[test]
    fn analytic_two_agent_instance_matches_hand_kkt() {
        // generated curvature/targets vary; verify the structural facts
        let fixture = analytic_quadratic::<f64>(2, 0, NoiseLevel::deterministic()).unwrap();
        assert!(fixture.lambda_star[0] > 0.0);
        let report = kkt_check(&fixture.game, &fixture.x_star, &fixture.lambda_star, 1e-10);
        assert!(report.pass);
        // budget active
        let total = fixture.game.apply_coupling(&fixture.x_star);
        assert_relative_eq!(total[0], fixture.params.budget[0], epsilon = 1e-10);
    }

    #[test]
    fn analytic_single_agent_is_unconstrained() {
        let fixture = analytic_quadratic::<f64>(1, 4, NoiseLevel::deterministic()).unwrap();
        assert_relative_eq!(fixture.lambda_star[0], 0.0);
        // x* = a / kappa
        let expected = fixture.params.targets[0][0] / fixture.params.curvature[0];
        assert_relative_eq!(fixture.x_star[0], expected, epsilon = 1e-12);
    }

    #[test]
    fn analytic_random_instances_pass_generation_kkt() {
        for seed in 0..5 {
            let fixture = analytic_quadratic::<f64>(3, seed, NoiseLevel::default()).unwrap();
            let report = kkt_check(&fixture.game, &fixture.x_star, &fixture.lambda_star, 1e-10);
            assert!(report.pass, "seed {seed}");
        }
        for seed in 0..3 {
            let fixture =
                analytic_quadratic_aggregative::<f64>(3, 2, seed, NoiseLevel::default()).unwrap();
            let report = kkt_check(&fixture.game, &fixture.x_star, &fixture.lambda_star, 1e-10);
            assert!(report.pass, "aggregative seed {seed}");
        }
    }

    #[test]
    fn analytic_oracle_agrees_with_closed_form() {
        let fixture = analytic_quadratic::<f64>(3, 11, NoiseLevel::deterministic()).unwrap();
        let (x, lambda) = solve_vgne(&fixture.game, 1e-11).unwrap();
        assert!((x - &fixture.x_star).amax() < 1e-7);
        assert!((lambda - &fixture.lambda_star).amax() < 1e-6);
    }
}
