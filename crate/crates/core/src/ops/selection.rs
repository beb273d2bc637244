//! Selection matrices splitting estimate vectors into own and others' parts.

use nalgebra::{DMatrix, DVector};

use crate::scalar::Scalar;

/// Block-diagonal selectors over the stacked estimates `x̂ ∈ R^{N·n}`.
///
/// `R x̂` picks every agent's own decision (`R^n`); `S x̂` keeps the
/// estimates of the others (`R^{N·n - n}`). Together they reconstruct:
/// `x̂ = Rᵀ(R x̂) + Sᵀ(S x̂)`.
#[derive(Debug, Clone)]
pub struct SelectionMatrices<T: Scalar> {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    n: usize,
    own: DMatrix<T>,
    others: DMatrix<T>,
}

impl<T: Scalar> SelectionMatrices<T> {
    pub fn new(dims: &[usize]) -> Self {
        let n: usize = dims.iter().sum();
        let n_agents = dims.len();
        let mut offsets = Vec::with_capacity(n_agents);
        let mut acc = 0;
        for &d in dims {
            offsets.push(acc);
            acc += d;
        }
        let mut own = DMatrix::zeros(n, n_agents * n);
        let mut others = DMatrix::zeros(n_agents * n - n, n_agents * n);
        let mut others_row = 0;
        for i in 0..n_agents {
            let base = i * n;
            for t in 0..dims[i] {
                own[(offsets[i] + t, base + offsets[i] + t)] = T::one();
            }
            for col in 0..n {
                if col < offsets[i] || col >= offsets[i] + dims[i] {
                    others[(others_row, base + col)] = T::one();
                    others_row += 1;
                }
            }
        }
        Self { dims: dims.to_vec(), offsets, n, own, others }
    }

    /// `R` (n × N·n).
    pub fn own(&self) -> &DMatrix<T> {
        &self.own
    }

    /// `S` ((N·n − n) × N·n).
    pub fn others(&self) -> &DMatrix<T> {
        &self.others
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Extracts the stacked own decisions from the stacked estimates.
    pub fn select_decisions(&self, xhat: &DVector<T>) -> DVector<T> {
        let mut x = DVector::zeros(self.n);
        for i in 0..self.dims.len() {
            let src = i * self.n + self.offsets[i];
            for t in 0..self.dims[i] {
                x[self.offsets[i] + t] = xhat[src + t];
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, StreamKind};
    use crate::scalar::Scalar;
    use nalgebra::DVector;

    #[test]
    fn reconstruction_identity_on_random_vectors() {
        let dims = vec![2usize, 1, 3];
        let sel = SelectionMatrices::<f64>::new(&dims);
        let total = dims.len() * 6;
        let mut rng = stream_rng(5, StreamKind::Scenario, 0, 0);
        for _ in 0..100 {
            let xhat = DVector::<f64>::from_fn(total, |_, _| f64::uniform(&mut rng, -3.0, 3.0));
            let rebuilt = sel.own().transpose() * (sel.own() * &xhat)
                + sel.others().transpose() * (sel.others() * &xhat);
            assert_eq!(rebuilt, xhat);
        }
    }

    #[test]
    fn selects_the_own_component() {
        let sel = SelectionMatrices::<f64>::new(&[1, 1]);
        // agent 0 estimates (x_0, x̂_{0,1}) = (1, 2); agent 1 (x̂_{1,0}, x_1) = (3, 4)
        let xhat = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let x = sel.own() * &xhat;
        assert_eq!(x, DVector::from_vec(vec![1.0, 4.0]));
        assert_eq!(sel.select_decisions(&xhat), x);
        let rest = sel.others() * &xhat;
        assert_eq!(rest, DVector::from_vec(vec![2.0, 3.0]));
    }
}
