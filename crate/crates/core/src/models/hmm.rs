use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::Exp1;

use super::{check_normalizer, SequenceModel};
use crate::error::{Error, Result};
use crate::quantum::seeded_rng;
use crate::tol::Tolerances;

/// Hidden Markov model with column-stochastic transition `A` (n×n) and
/// emission `C` (s×n). A step transitions first, then conditions on the
/// emitted symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Hmm {
    transition: DMatrix<f64>,
    emission: DMatrix<f64>,
    initial: DVector<f64>,
}

impl Hmm {
    pub fn new(transition: DMatrix<f64>, emission: DMatrix<f64>, initial: DVector<f64>) -> Result<Self> {
        Self::with_tolerances(transition, emission, initial, &Tolerances::DEFAULT)
    }

    pub fn with_tolerances(
        transition: DMatrix<f64>,
        emission: DMatrix<f64>,
        initial: DVector<f64>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let n = transition.nrows();
        if n == 0 || !transition.is_square() || emission.ncols() != n || initial.len() != n || emission.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "HMM shapes A {}x{}, C {}x{}, x0 {} are inconsistent",
                transition.nrows(),
                transition.ncols(),
                emission.nrows(),
                emission.ncols(),
                initial.len()
            )));
        }
        check_column_stochastic(&transition, "transition", tol)?;
        check_column_stochastic(&emission, "emission", tol)?;
        check_column_stochastic(
            &DMatrix::from_column_slice(n, 1, initial.as_slice()),
            "initial state",
            tol,
        )?;
        Ok(Self {
            transition,
            emission,
            initial,
        })
    }

    /// Random HMM whose columns of `A`, `C` and `x0` are Dirichlet(1) draws.
    pub fn random(n: usize, s: usize, seed: u64) -> Result<Self> {
        let mut rng = seeded_rng(seed);
        let a = dirichlet_columns(n, n, &mut rng);
        let c = dirichlet_columns(s, n, &mut rng);
        let x0 = dirichlet_columns(n, 1, &mut rng);
        Self::new(a, c, DVector::from_column_slice(x0.as_slice()))
    }

    /// Every transition, emission and initial probability uniform.
    pub fn uniform(n: usize, s: usize) -> Self {
        Self {
            transition: DMatrix::from_element(n, n, 1.0 / n as f64),
            emission: DMatrix::from_element(s, n, 1.0 / s as f64),
            initial: DVector::from_element(n, 1.0 / n as f64),
        }
    }

    pub fn states(&self) -> usize {
        self.transition.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.emission.nrows()
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn emission(&self) -> &DMatrix<f64> {
        &self.emission
    }

    pub fn initial(&self) -> &DVector<f64> {
        &self.initial
    }

    /// Stationary distribution of the hidden chain (power iteration).
    pub fn stationary_distribution(&self) -> DVector<f64> {
        let mut x = DVector::from_element(self.states(), 1.0 / self.states() as f64);
        for _ in 0..10_000 {
            let next = &self.transition * &x;
            let diff = (&next - &x).abs().sum();
            x = next;
            if diff < 1e-15 {
                break;
            }
        }
        x
    }
}

fn dirichlet_columns<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for j in 0..cols {
        let draws: Vec<f64> = (0..rows).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = draws.iter().sum();
        for (i, d) in draws.into_iter().enumerate() {
            m[(i, j)] = d / total;
        }
    }
    m
}

pub(crate) fn check_column_stochastic(m: &DMatrix<f64>, what: &str, tol: &Tolerances) -> Result<()> {
    if m.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Validity(format!("{what} has negative or non-finite entries")));
    }
    for (j, col) in m.column_iter().enumerate() {
        let sum: f64 = col.sum();
        if (sum - 1.0).abs() > tol.stochastic {
            return Err(Error::Validity(format!("{what} column {j} sums to {sum}")));
        }
    }
    Ok(())
}

impl SequenceModel for Hmm {
    type State = DVector<f64>;

    fn alphabet_size(&self) -> usize {
        self.outputs()
    }

    fn initial_state(&self) -> DVector<f64> {
        self.initial.clone()
    }

    fn step(&self, x: &DVector<f64>, y: usize) -> Result<(DVector<f64>, f64)> {
        if y >= self.outputs() {
            return Err(Error::SymbolOutOfRange {
                symbol: y,
                alphabet: self.outputs(),
            });
        }
        let mut next = &self.transition * x;
        for (i, v) in next.iter_mut().enumerate() {
            *v *= self.emission[(y, i)];
        }
        let p = next.sum();
        check_normalizer(p, y, &Tolerances::DEFAULT)?;
        next.unscale_mut(p);
        Ok((next, p))
    }

    fn symbol_probabilities(&self, x: &DVector<f64>) -> Result<Vec<f64>> {
        let probs = &self.emission * (&self.transition * x);
        Ok(probs.iter().copied().collect())
    }
}
