//! Linear-quadratic games with closed-form expected gradients.
//!
//! All built-in scenarios reduce to an affine pseudogradient `F(x) = M x + r`
//! (network form) or `F_a(x_i, u_i) = Jx_i x_i + Ju_i u_i + r_i` (aggregative
//! form) plus a structured zero-mean sampling noise. Monotonicity and
//! Lipschitz constants come from the assembled quadratic form.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::RngCore;

use super::sampler::{GradPoint, GradientSampler};
use super::{AggregativeLipschitz, BoxBounds, GameConstants, GameMode, GameModel};
use crate::error::Result;
use crate::scalar::Scalar;

/// Zero-mean noise structure of one gradient sample.
#[derive(Debug, Clone, Copy)]
pub enum NoiseSpec<T> {
    /// Deterministic game: the sample equals the exact gradient.
    None,
    /// `sigma * xi` added to every gradient coordinate.
    Additive { sigma: T },
    /// Cournot production/price noise: `2 sigma_q xi ∘ x_i - A_iᵀ (sigma_p zeta)`.
    CournotMarket { sigma_q: T, sigma_p: T },
    /// Linear cost/price noise: `sigma_cost xi - sigma_price zeta` per coordinate.
    LinearPrice { sigma_cost: T, sigma_price: T },
}

impl<T: Scalar> NoiseSpec<T> {
    pub fn is_zero(&self) -> bool {
        matches!(self, NoiseSpec::None)
    }
}

/// Affine network pseudogradient `F_i(x̂) = M_{i,:} x̂ + r_i` with sampling
/// noise. `rows[i]` is the block row of the full matrix `M` acting on the
/// agent's estimate of the whole profile.
pub struct QuadraticNetworkSampler<T: Scalar> {
    rows: Vec<DMatrix<T>>,
    intercepts: Vec<DVector<T>>,
    offsets: Vec<usize>,
    coupling: Vec<DMatrix<T>>,
    noise: NoiseSpec<T>,
}

impl<T: Scalar> QuadraticNetworkSampler<T> {
    pub fn from_full(
        m_full: &DMatrix<T>,
        dims: &[usize],
        intercepts: Vec<DVector<T>>,
        coupling: Vec<DMatrix<T>>,
        noise: NoiseSpec<T>,
    ) -> Self {
        let n = m_full.ncols();
        let mut rows = Vec::with_capacity(dims.len());
        let mut offsets = Vec::with_capacity(dims.len());
        let mut acc = 0;
        for &d in dims {
            rows.push(m_full.view((acc, 0), (d, n)).into_owned());
            offsets.push(acc);
            acc += d;
        }
        Self { rows, intercepts, offsets, coupling, noise }
    }

    fn estimate_of<'a>(&self, at: GradPoint<'a, T>) -> &'a DVector<T> {
        match at {
            GradPoint::Network { estimate } => estimate,
            GradPoint::Aggregative { .. } => {
                panic!("network sampler evaluated at an aggregative point")
            }
        }
    }
}

impl<T: Scalar> GradientSampler<T> for QuadraticNetworkSampler<T> {
    fn dim(&self, agent: usize) -> usize {
        self.rows[agent].nrows()
    }

    fn exact(&self, agent: usize, at: GradPoint<'_, T>) -> DVector<T> {
        let estimate = self.estimate_of(at);
        &self.rows[agent] * estimate + &self.intercepts[agent]
    }

    fn sample_into(
        &self,
        agent: usize,
        at: GradPoint<'_, T>,
        rng: &mut dyn RngCore,
        out: &mut DVector<T>,
    ) {
        let estimate = self.estimate_of(at);
        out.copy_from(&self.intercepts[agent]);
        out.gemv(T::one(), &self.rows[agent], estimate, T::one());
        match self.noise {
            NoiseSpec::None => {}
            NoiseSpec::Additive { sigma } => {
                for v in out.iter_mut() {
                    *v += sigma * T::standard_normal(rng);
                }
            }
            NoiseSpec::CournotMarket { sigma_q, sigma_p } => {
                // production-cost curvature noise, scaled by the own decision
                let dim = self.rows[agent].nrows();
                let own = estimate.rows(self.offsets[agent], dim);
                let two = T::of(2.0);
                for t in 0..dim {
                    out[t] += two * sigma_q * T::standard_normal(rng) * own[t];
                }
                // market price noise enters through the participation columns
                let a_i = &self.coupling[agent];
                for j in 0..a_i.nrows() {
                    let zeta = sigma_p * T::standard_normal(rng);
                    for t in 0..dim {
                        out[t] -= zeta * a_i[(j, t)];
                    }
                }
            }
            NoiseSpec::LinearPrice { sigma_cost, sigma_price } => {
                for v in out.iter_mut() {
                    *v += sigma_cost * T::standard_normal(rng);
                }
                for v in out.iter_mut() {
                    *v -= sigma_price * T::standard_normal(rng);
                }
            }
        }
    }
}

/// Affine aggregative pseudogradient
/// `F_a_i(x_i, u_i) = Jx_i x_i + Ju_i u_i + r_i` with sampling noise.
pub struct QuadraticAggregativeSampler<T: Scalar> {
    own_jac: Vec<DMatrix<T>>,
    agg_jac: Vec<DMatrix<T>>,
    intercepts: Vec<DVector<T>>,
    noise: NoiseSpec<T>,
}

impl<T: Scalar> QuadraticAggregativeSampler<T> {
    pub fn new(
        own_jac: Vec<DMatrix<T>>,
        agg_jac: Vec<DMatrix<T>>,
        intercepts: Vec<DVector<T>>,
        noise: NoiseSpec<T>,
    ) -> Self {
        Self { own_jac, agg_jac, intercepts, noise }
    }

    fn point_of<'a>(&self, at: GradPoint<'a, T>) -> (&'a DVector<T>, &'a DVector<T>) {
        match at {
            GradPoint::Aggregative { own, average } => (own, average),
            GradPoint::Network { .. } => {
                panic!("aggregative sampler evaluated at a network point")
            }
        }
    }
}

impl<T: Scalar> GradientSampler<T> for QuadraticAggregativeSampler<T> {
    fn dim(&self, agent: usize) -> usize {
        self.own_jac[agent].nrows()
    }

    fn exact(&self, agent: usize, at: GradPoint<'_, T>) -> DVector<T> {
        let (own, average) = self.point_of(at);
        &self.own_jac[agent] * own + &self.agg_jac[agent] * average + &self.intercepts[agent]
    }

    fn sample_into(
        &self,
        agent: usize,
        at: GradPoint<'_, T>,
        rng: &mut dyn RngCore,
        out: &mut DVector<T>,
    ) {
        let (own, average) = self.point_of(at);
        out.copy_from(&self.intercepts[agent]);
        out.gemv(T::one(), &self.own_jac[agent], own, T::one());
        out.gemv(T::one(), &self.agg_jac[agent], average, T::one());
        match self.noise {
            NoiseSpec::None => {}
            NoiseSpec::Additive { sigma } => {
                for v in out.iter_mut() {
                    *v += sigma * T::standard_normal(rng);
                }
            }
            NoiseSpec::LinearPrice { sigma_cost, sigma_price } => {
                for v in out.iter_mut() {
                    *v += sigma_cost * T::standard_normal(rng);
                }
                for v in out.iter_mut() {
                    *v -= sigma_price * T::standard_normal(rng);
                }
            }
            NoiseSpec::CournotMarket { .. } => {
                panic!("market-curvature noise is a network-game structure")
            }
        }
    }
}

/// Spectral norm via SVD.
pub fn spectral_norm<T: Scalar>(m: &DMatrix<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(T::zero(), |a, b| if b > a { b } else { a })
}

/// Smallest eigenvalue of the symmetric part.
pub fn min_symmetric_eigenvalue<T: Scalar>(m: &DMatrix<T>) -> T {
    let sym = (m + m.transpose()) * T::of(0.5);
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(T::of(f64::INFINITY), |a, b| if b < a { b } else { a })
}

/// Monotonicity constants of an affine network pseudogradient `F = M x + r`:
/// `eta` from the symmetric part, `ell_F` the spectral norm, `ell_p` the
/// largest block-row norm (the Lipschitz constant of the estimate-evaluated
/// map, which treats each agent's row independently).
pub fn network_constants<T: Scalar>(m_full: &DMatrix<T>, dims: &[usize]) -> GameConstants<T> {
    let eta = min_symmetric_eigenvalue(m_full);
    let ell_f = spectral_norm(m_full);
    let mut ell_p = T::zero();
    let mut acc = 0;
    for &d in dims {
        let row = m_full.view((acc, 0), (d, m_full.ncols())).into_owned();
        let s = spectral_norm(&row);
        if s > ell_p {
            ell_p = s;
        }
        acc += d;
    }
    GameConstants { eta, ell_f, ell_p, ell_agg: None }
}

/// Induced full pseudogradient matrix of an aggregative game:
/// block `(i, j) = δ_ij Jx_i + (1/N) Ju_i`.
pub fn induced_network_matrix<T: Scalar>(
    own_jac: &[DMatrix<T>],
    agg_jac: &[DMatrix<T>],
) -> DMatrix<T> {
    let n_agents = own_jac.len();
    let nbar = own_jac[0].nrows();
    let inv_n = T::one() / T::of(n_agents as f64);
    let mut m = DMatrix::zeros(n_agents * nbar, n_agents * nbar);
    for i in 0..n_agents {
        for j in 0..n_agents {
            let mut block = &agg_jac[i] * inv_n;
            if i == j {
                block += &own_jac[i];
            }
            m.view_mut((i * nbar, j * nbar), (nbar, nbar)).copy_from(&block);
        }
    }
    m
}

/// Constants of an aggregative game, including the per-argument Lipschitz
/// constants of the aggregative map.
pub fn aggregative_constants<T: Scalar>(
    own_jac: &[DMatrix<T>],
    agg_jac: &[DMatrix<T>],
) -> GameConstants<T> {
    let nbar = own_jac[0].nrows();
    let dims = vec![nbar; own_jac.len()];
    let m = induced_network_matrix(own_jac, agg_jac);
    let mut constants = network_constants(&m, &dims);
    let own = own_jac
        .iter()
        .map(spectral_norm)
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    let aggregate = agg_jac
        .iter()
        .map(spectral_norm)
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    constants.ell_agg = Some(AggregativeLipschitz { own, aggregate });
    constants
}

/// Builds a network [`GameModel`] from an affine pseudogradient.
pub fn build_network_game<T: Scalar>(
    m_full: DMatrix<T>,
    intercepts: Vec<DVector<T>>,
    boxes: Vec<BoxBounds<T>>,
    coupling: Vec<DMatrix<T>>,
    rhs: DVector<T>,
    noise: NoiseSpec<T>,
) -> Result<GameModel<T>> {
    let dims: Vec<usize> = boxes.iter().map(BoxBounds::dim).collect();
    let constants = network_constants(&m_full, &dims);
    let sampler = Arc::new(QuadraticNetworkSampler::from_full(
        &m_full,
        &dims,
        intercepts,
        coupling.clone(),
        noise,
    ));
    GameModel::new(GameMode::Network, boxes, coupling, rhs, sampler, constants)
}

/// Builds an aggregative [`GameModel`] from an affine aggregative map.
pub fn build_aggregative_game<T: Scalar>(
    own_jac: Vec<DMatrix<T>>,
    agg_jac: Vec<DMatrix<T>>,
    intercepts: Vec<DVector<T>>,
    boxes: Vec<BoxBounds<T>>,
    coupling: Vec<DMatrix<T>>,
    rhs: DVector<T>,
    noise: NoiseSpec<T>,
) -> Result<GameModel<T>> {
    let constants = aggregative_constants(&own_jac, &agg_jac);
    let sampler = Arc::new(QuadraticAggregativeSampler::new(
        own_jac, agg_jac, intercepts, noise,
    ));
    GameModel::new(GameMode::Aggregative, boxes, coupling, rhs, sampler, constants)
}
