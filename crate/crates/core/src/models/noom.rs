use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{check_normalizer, SequenceModel};
use crate::error::{Error, Result};
use crate::quantum::seeded_rng;
use crate::tol::Tolerances;

/// Norm-observable operator model: `P(y | v) = ‖φ_y v‖²` with unit-norm
/// states and `Σ_y φ_yᵀ φ_y = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Noom {
    operators: Vec<DMatrix<f64>>,
    initial: DVector<f64>,
}

impl Noom {
    pub fn new(operators: Vec<DMatrix<f64>>, initial: DVector<f64>) -> Result<Self> {
        Self::with_tolerances(operators, initial, &Tolerances::DEFAULT)
    }

    pub fn with_tolerances(operators: Vec<DMatrix<f64>>, initial: DVector<f64>, tol: &Tolerances) -> Result<Self> {
        let n = initial.len();
        if n == 0 || operators.is_empty() || operators.iter().any(|p| p.shape() != (n, n)) {
            return Err(Error::Dimension(format!("NOOM operators must all be {n}x{n}")));
        }
        if (initial.norm() - 1.0).abs() > tol.unit_norm {
            return Err(Error::Validity(format!("‖v0‖ = {} != 1", initial.norm())));
        }
        let total: DMatrix<f64> = operators.iter().map(|p| p.transpose() * p).sum();
        let residual = (total - DMatrix::identity(n, n)).norm();
        if residual > tol.stochastic {
            return Err(Error::Validity(format!("Σ_y φ_yᵀφ_y differs from I by {residual:e}")));
        }
        Ok(Self { operators, initial })
    }

    /// Random valid NOOM: operators are the blocks of a random real matrix
    /// with orthonormal columns, the initial state a random unit vector.
    pub fn random(n: usize, s: usize, seed: u64) -> Result<Self> {
        let mut rng = seeded_rng(seed);
        let g = DMatrix::from_fn(n * s, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = g.qr().q();
        let operators = (0..s).map(|y| q.view((y * n, 0), (n, n)).into_owned()).collect();
        let v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        Self::new(operators, v.normalize())
    }

    pub fn dim(&self) -> usize {
        self.initial.len()
    }

    pub fn operators(&self) -> &[DMatrix<f64>] {
        &self.operators
    }

    pub fn initial(&self) -> &DVector<f64> {
        &self.initial
    }
}

impl SequenceModel for Noom {
    type State = DVector<f64>;

    fn alphabet_size(&self) -> usize {
        self.operators.len()
    }

    fn initial_state(&self) -> DVector<f64> {
        self.initial.clone()
    }

    fn step(&self, v: &DVector<f64>, y: usize) -> Result<(DVector<f64>, f64)> {
        let op = self.operators.get(y).ok_or(Error::SymbolOutOfRange {
            symbol: y,
            alphabet: self.operators.len(),
        })?;
        let next = op * v;
        let p = next.norm_squared();
        check_normalizer(p, y, &Tolerances::DEFAULT)?;
        Ok((next.unscale(libm::sqrt(p)), p))
    }

    fn symbol_probabilities(&self, v: &DVector<f64>) -> Result<Vec<f64>> {
        Ok(self.operators.iter().map(|op| (op * v).norm_squared()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn one_dimensional_noom() {
        let c = [0.25, 0.75];
        let m = Noom::new(
            c.iter().map(|&x: &f64| DMatrix::from_element(1, 1, x.sqrt())).collect(),
            DVector::from_element(1, 1.0),
        )
        .unwrap();
        for (y, &cy) in c.iter().enumerate() {
            assert!((m.step(m.initial(), y).unwrap().1 - cy).abs() < 1e-15);
        }
    }

    #[test]
    fn orthogonal_operator_gives_zero_probability() {
        let phi0 = DMatrix::from_row_slice(2, 2, &[0., 0., 0., 1.]);
        let phi1 = DMatrix::from_row_slice(2, 2, &[1., 0., 0., 0.]);
        let m = Noom::new(vec![phi0, phi1], DVector::from_vec(vec![1., 0.])).unwrap();
        assert_eq!(m.symbol_probabilities(m.initial()).unwrap()[0], 0.0);
        assert!(matches!(m.step(m.initial(), 0), Err(Error::ZeroProbability { .. })));
    }

    #[test]
    fn completeness_and_unit_norm() {
        let m = Noom::random(3, 2, 17).unwrap();
        let mut v = m.initial_state();
        for y in [0, 1, 1, 0, 1] {
            let total: f64 = m.symbol_probabilities(&v).unwrap().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            v = m.step(&v, y).unwrap().0;
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }
}
