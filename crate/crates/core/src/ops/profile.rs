//! Step-size bounds and profiles.

use super::AlgorithmVariant;
use crate::error::{Error, Result};
use crate::game::GameModel;
use crate::graph::Graph;
use crate::scalar::Scalar;

/// Per-agent ceilings on the primal, auxiliary and dual step sizes for a
/// Gershgorin margin `τ > 0`.
///
/// Node-based: `ᾱ_i = (τ + max col-sum |A_i|)⁻¹`, `ν̄_i = (τ + 2 d_i)⁻¹`,
/// `δ̄_i = (τ + 2 d_i + max row-sum |A_i|)⁻¹`. Edge-based variants replace
/// `2 d_i` with `Σ_j √w_ij`. The tracking gain `γ` has no ceiling (its
/// preconditioner row has no off-diagonal entries).
#[derive(Debug, Clone)]
pub struct StepSizeBounds<T> {
    pub alpha: Vec<T>,
    pub nu: Vec<T>,
    pub delta: Vec<T>,
    pub tau: T,
}

/// Largest absolute column sum (row sum of `|A_iᵀ|`).
fn max_abs_col_sum<T: Scalar>(a: &nalgebra::DMatrix<T>) -> T {
    let mut best = T::zero();
    for c in 0..a.ncols() {
        let mut s = T::zero();
        for r in 0..a.nrows() {
            s += a[(r, c)].abs();
        }
        if s > best {
            best = s;
        }
    }
    best
}

fn max_abs_row_sum<T: Scalar>(a: &nalgebra::DMatrix<T>) -> T {
    let mut best = T::zero();
    for r in 0..a.nrows() {
        let mut s = T::zero();
        for c in 0..a.ncols() {
            s += a[(r, c)].abs();
        }
        if s > best {
            best = s;
        }
    }
    best
}

pub fn step_size_bounds<T: Scalar>(
    variant: AlgorithmVariant,
    graph: &Graph<T>,
    game: &GameModel<T>,
    tau: T,
) -> Result<StepSizeBounds<T>> {
    if tau <= T::zero() {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: "Gershgorin margin must be positive".into(),
        });
    }
    let n_agents = game.num_agents();
    let mut alpha = Vec::with_capacity(n_agents);
    let mut nu = Vec::with_capacity(n_agents);
    let mut delta = Vec::with_capacity(n_agents);
    for i in 0..n_agents {
        let a_i = game.coupling_of(i);
        let col_sum = max_abs_col_sum(a_i);
        let row_sum = max_abs_row_sum(a_i);
        let graph_mass = if variant.is_edge_based() {
            graph
                .neighbors(i)
                .iter()
                .fold(T::zero(), |acc, &(_, w)| acc + w.sqrt())
        } else {
            T::of(2.0) * graph.degree(i)
        };
        alpha.push(T::one() / (tau + col_sum));
        nu.push(T::one() / (tau + graph_mass));
        delta.push(T::one() / (tau + graph_mass + row_sum));
    }
    Ok(StepSizeBounds { alpha, nu, delta, tau })
}

/// Concrete step sizes of one run: `safety × bound` per agent, a uniform
/// tracking gain `γ`, and the consensus gain `c`.
#[derive(Debug, Clone)]
pub struct StepSizeProfile<T: Scalar = f64> {
    pub alpha: Vec<T>,
    pub nu: Vec<T>,
    pub delta: Vec<T>,
    /// Tracking gain, uniform across agents so that `avg(s)` stays invariant.
    pub gamma: T,
    /// Consensus gain multiplying the disagreement term.
    pub consensus_gain: T,
    pub tau: T,
    pub safety: T,
}

impl<T: Scalar> StepSizeProfile<T> {
    /// Profile at `safety × bounds` with consensus gain `c`.
    ///
    /// `γ` defaults to `safety / (τ + 2 d_max)`, which keeps the tracking
    /// loop stable on every graph while satisfying the (vacuous) positivity
    /// requirement.
    pub fn from_bounds(
        variant: AlgorithmVariant,
        graph: &Graph<T>,
        game: &GameModel<T>,
        tau: T,
        safety: T,
        consensus_gain: T,
    ) -> Result<Self> {
        if safety <= T::zero() || safety > T::one() {
            return Err(Error::InvalidParameter {
                name: "safety",
                reason: "safety factor must lie in (0, 1]".into(),
            });
        }
        if consensus_gain <= T::zero() {
            return Err(Error::InvalidParameter {
                name: "c",
                reason: "consensus gain must be positive".into(),
            });
        }
        let bounds = step_size_bounds(variant, graph, game, tau)?;
        let gamma = safety / (tau + T::of(2.0) * graph.d_max());
        Ok(Self {
            alpha: bounds.alpha.iter().map(|&b| safety * b).collect(),
            nu: bounds.nu.iter().map(|&b| safety * b).collect(),
            delta: bounds.delta.iter().map(|&b| safety * b).collect(),
            gamma,
            consensus_gain,
            tau,
            safety,
        })
    }

    /// Uniform auxiliary step for edge-based variants (smallest `ν_i`).
    pub fn edge_nu(&self) -> T {
        self.nu
            .iter()
            .copied()
            .fold(T::of(f64::INFINITY), |a, b| if b < a { b } else { a })
    }

    /// Rescales every step size (not the consensus gain) by `factor`.
    pub fn scaled(mut self, factor: T) -> Self {
        for v in self.alpha.iter_mut().chain(self.nu.iter_mut()).chain(self.delta.iter_mut()) {
            *v *= factor;
        }
        self.gamma *= factor;
        self
    }

    /// Names of step sizes exceeding the given ceilings.
    pub fn violations(&self, bounds: &StepSizeBounds<T>) -> Vec<String> {
        let mut out = Vec::new();
        let eps = T::of(1e-12);
        for i in 0..self.alpha.len() {
            if self.alpha[i] > bounds.alpha[i] + eps {
                out.push(format!(
                    "alpha[{i}] = {:.4e} exceeds bound {:.4e}",
                    self.alpha[i].to_f64(),
                    bounds.alpha[i].to_f64()
                ));
            }
            if self.nu[i] > bounds.nu[i] + eps {
                out.push(format!(
                    "nu[{i}] = {:.4e} exceeds bound {:.4e}",
                    self.nu[i].to_f64(),
                    bounds.nu[i].to_f64()
                ));
            }
            if self.delta[i] > bounds.delta[i] + eps {
                out.push(format!(
                    "delta[{i}] = {:.4e} exceeds bound {:.4e}",
                    self.delta[i].to_f64(),
                    bounds.delta[i].to_f64()
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::quadratic::{build_network_game, NoiseSpec};
    use crate::game::BoxBounds;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    /// Three agents on a path graph so that the middle agent has d_i = 2,
    /// each with a 2x2 identity coupling block.
    fn fixture() -> (Graph<f64>, GameModel<f64>) {
        let graph = Graph::from_unit_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let n = 6;
        let m_full = DMatrix::<f64>::identity(n, n) * 3.0;
        let intercepts = vec![DVector::zeros(2); 3];
        let boxes = (0..3).map(|_| BoxBounds::symmetric(2, 5.0)).collect();
        let coupling = (0..3).map(|_| DMatrix::<f64>::identity(2, 2)).collect();
        let game = build_network_game(
            m_full,
            intercepts,
            boxes,
            coupling,
            DVector::from_element(2, 1.0),
            NoiseSpec::None,
        )
        .unwrap();
        (graph, game)
    }

    #[test]
    fn node_based_bounds_match_direct_substitution() {
        let (graph, game) = fixture();
        let b = step_size_bounds(AlgorithmVariant::NodeNetwork, &graph, &game, 0.1).unwrap();
        // middle agent: d_i = 2, |A_i| row/col sums = 1
        assert_relative_eq!(b.alpha[1], 1.0 / 1.1, epsilon = 1e-12);
        assert_relative_eq!(b.nu[1], 1.0 / 4.1, epsilon = 1e-12);
        assert_relative_eq!(b.delta[1], 1.0 / 5.1, epsilon = 1e-12);
    }

    #[test]
    fn edge_based_bounds_use_sqrt_weight_sums() {
        let (graph, game) = fixture();
        let b = step_size_bounds(AlgorithmVariant::EdgeNetwork, &graph, &game, 0.1).unwrap();
        // middle agent: sum of sqrt-weights = 2 for two unit edges
        assert_relative_eq!(b.nu[1], 1.0 / 2.1, epsilon = 1e-12);
        assert_relative_eq!(b.delta[1], 1.0 / 3.1, epsilon = 1e-12);
        assert_relative_eq!(b.alpha[1], 1.0 / 1.1, epsilon = 1e-12);
    }

    #[test]
    fn absent_coupling_leaves_only_the_margin() {
        let graph = Graph::from_unit_edges(2, &[(0, 1)]).unwrap();
        let m_full = DMatrix::<f64>::identity(2, 2);
        let boxes = (0..2).map(|_| BoxBounds::symmetric(1, 1.0)).collect();
        let coupling = vec![DMatrix::<f64>::zeros(1, 1); 2];
        let game = build_network_game(
            m_full,
            vec![DVector::zeros(1); 2],
            boxes,
            coupling,
            DVector::from_element(1, 1.0),
            NoiseSpec::None,
        )
        .unwrap();
        let b = step_size_bounds(AlgorithmVariant::NodeNetwork, &graph, &game, 0.25).unwrap();
        assert_relative_eq!(b.alpha[0], 4.0, epsilon = 1e-12);
    }

    #[test]
    fn invalid_margin_is_rejected() {
        let (graph, game) = fixture();
        assert!(step_size_bounds(AlgorithmVariant::NodeNetwork, &graph, &game, 0.0).is_err());
        assert!(step_size_bounds(AlgorithmVariant::NodeNetwork, &graph, &game, -1.0).is_err());
    }

    #[test]
    fn profile_violations_are_reported_by_name() {
        let (graph, game) = fixture();
        let bounds = step_size_bounds(AlgorithmVariant::NodeNetwork, &graph, &game, 0.1).unwrap();
        let profile =
            StepSizeProfile::from_bounds(AlgorithmVariant::NodeNetwork, &graph, &game, 0.1, 0.5, 1.0)
                .unwrap();
        assert!(profile.violations(&bounds).is_empty());
        let inflated = profile.scaled(20.0);
        let violations = inflated.violations(&bounds);
        assert!(violations.iter().any(|v| v.starts_with("alpha[0]")));
        assert!(violations.iter().any(|v| v.starts_with("delta[2]")));
    }
}
