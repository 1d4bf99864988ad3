use alloc::format;
use alloc::vec::Vec;

use super::{check_normalizer, real_probability, SequenceModel};
use crate::error::{Error, Result};
use crate::quantum::{
    devectorize, identity, perfect_square_root, random_density, vectorize, ComplexMatrix, ComplexVector, DensityMatrix,
    StiefelPoint,
};
use crate::representations::{choi_min_eigenvalue, reshuffle};
use crate::tol::Tolerances;

/// Kraus-form HQMM: `ρ ← Σ_u K_{y,u} ρ K_{y,u}† / p` with
/// `p = tr(Σ_u K_{y,u} ρ K_{y,u}†)`.
#[derive(Debug, Clone)]
pub struct KHqmm {
    kraus: StiefelPoint,
    rho0: DensityMatrix,
    blocks: Vec<ComplexMatrix>,
    adjoints: Vec<ComplexMatrix>,
}

impl PartialEq for KHqmm {
    fn eq(&self, other: &Self) -> bool {
        self.kraus == other.kraus && self.rho0 == other.rho0
    }
}

impl KHqmm {
    pub fn new(kraus: StiefelPoint, rho0: DensityMatrix) -> Result<Self> {
        Self::with_tolerances(kraus, rho0, &Tolerances::DEFAULT)
    }

    pub fn with_tolerances(kraus: StiefelPoint, rho0: DensityMatrix, tol: &Tolerances) -> Result<Self> {
        let residual = kraus.feasibility_residual();
        if !(residual <= tol.stiefel) {
            return Err(Error::Validity(format!(
                "Kraus operators are not trace preserving (‖κ†κ − I‖_F = {residual:e})"
            )));
        }
        Self::assemble(kraus, rho0)
    }

    /// Skips the trace-preservation check; used for finite-difference probes
    /// that step off the manifold.
    pub fn new_unchecked(kraus: StiefelPoint, rho0: DensityMatrix) -> Result<Self> {
        Self::assemble(kraus, rho0)
    }

    fn assemble(kraus: StiefelPoint, rho0: DensityMatrix) -> Result<Self> {
        if rho0.dim() != kraus.dim() {
            return Err(Error::Dimension(format!(
                "initial state is {}x{} but Kraus operators are {}x{}",
                rho0.dim(),
                rho0.dim(),
                kraus.dim(),
                kraus.dim()
            )));
        }
        let blocks = kraus.blocks();
        let adjoints = blocks.iter().map(|k| k.adjoint()).collect();
        Ok(Self {
            kraus,
            rho0,
            blocks,
            adjoints,
        })
    }

    /// Random valid `(n, s, w)` model: Haar-like κ and Ginibre ρ₀.
    pub fn random(n: usize, s: usize, w: usize, seed: u64) -> Result<Self> {
        let kraus = StiefelPoint::random(n, s, w, seed)?;
        let rho0 = random_density(n, seed ^ 0x9e37_79b9_7f4a_7c15)?;
        Self::new(kraus, rho0)
    }

    pub fn dim(&self) -> usize {
        self.kraus.dim()
    }

    pub fn outputs(&self) -> usize {
        self.kraus.outputs()
    }

    pub fn kraus_per_output(&self) -> usize {
        self.kraus.kraus_per_output()
    }

    pub fn kraus(&self) -> &StiefelPoint {
        &self.kraus
    }

    pub fn rho0(&self) -> &DensityMatrix {
        &self.rho0
    }

    /// Kraus operators of `symbol`, ordered by `u`.
    pub fn kraus_for(&self, symbol: usize) -> &[ComplexMatrix] {
        let w = self.kraus_per_output();
        &self.blocks[symbol * w..(symbol + 1) * w]
    }

    /// Unnormalized `Σ_u K_{y,u} ρ K_{y,u}†`.
    pub fn apply(&self, rho: &ComplexMatrix, symbol: usize) -> ComplexMatrix {
        let w = self.kraus_per_output();
        let n = self.dim();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in symbol * w..(symbol + 1) * w {
            out += &self.blocks[i] * rho * &self.adjoints[i];
        }
        out
    }

    fn check_symbol(&self, y: usize) -> Result<()> {
        if y >= self.outputs() {
            return Err(Error::SymbolOutOfRange {
                symbol: y,
                alphabet: self.outputs(),
            });
        }
        Ok(())
    }
}

impl SequenceModel for KHqmm {
    type State = ComplexMatrix;

    fn alphabet_size(&self) -> usize {
        self.outputs()
    }

    fn initial_state(&self) -> ComplexMatrix {
        self.rho0.matrix().clone()
    }

    fn step(&self, rho: &ComplexMatrix, y: usize) -> Result<(ComplexMatrix, f64)> {
        self.check_symbol(y)?;
        let tol = Tolerances::DEFAULT;
        let sigma = self.apply(rho, y);
        let p = real_probability(sigma.trace(), y, &tol)?;
        check_normalizer(p, y, &tol)?;
        Ok((sigma.unscale(p), p))
    }

    fn symbol_probabilities(&self, rho: &ComplexMatrix) -> Result<Vec<f64>> {
        let tol = Tolerances::DEFAULT;
        (0..self.outputs())
            .map(|y| real_probability(self.apply(rho, y).trace(), y, &tol))
            .collect()
    }
}

/// Liouville-form HQMM acting on vectorized density matrices:
/// `p = vec(I)ᵀ L_y ρ⃗`.
#[derive(Debug, Clone, PartialEq)]
pub struct LHqmm {
    superoperators: Vec<ComplexMatrix>,
    rho0: ComplexVector,
    trace_functional: ComplexVector,
}

impl LHqmm {
    pub fn new(superoperators: Vec<ComplexMatrix>, rho0: ComplexVector) -> Result<Self> {
        Self::with_tolerances(superoperators, rho0, &Tolerances::DEFAULT)
    }

    /// Validates trace preservation of `Σ_y L_y`, Hermiticity and positivity
    /// of every `Choi(L_y)`, and that `ρ⃗₀` is a vectorized density matrix.
    pub fn with_tolerances(superoperators: Vec<ComplexMatrix>, rho0: ComplexVector, tol: &Tolerances) -> Result<Self> {
        let m = Self::new_unchecked(superoperators, rho0)?;
        crate::quantum::validate_density(&devectorize(&m.rho0)?, tol)?;
        let total: ComplexMatrix = m.superoperators.iter().sum();
        let tp = (m.trace_functional.transpose() * total - m.trace_functional.transpose()).norm();
        if tp > tol.channel {
            return Err(Error::Validity(format!(
                "superoperators are not trace preserving (residual {tp:e})"
            )));
        }
        for (y, l) in m.superoperators.iter().enumerate() {
            let choi = reshuffle(l)?;
            let hp = (&choi - choi.adjoint()).norm();
            if hp > tol.channel {
                return Err(Error::Validity(format!(
                    "Choi matrix of output {y} is not Hermitian ({hp:e})"
                )));
            }
            let min_eig = choi_min_eigenvalue(&choi);
            if min_eig < -tol.channel {
                return Err(Error::Validity(format!(
                    "Choi matrix of output {y} is not PSD (min eigenvalue {min_eig:e})"
                )));
            }
        }
        Ok(m)
    }

    /// Shape checks only.
    pub fn new_unchecked(superoperators: Vec<ComplexMatrix>, rho0: ComplexVector) -> Result<Self> {
        let d = rho0.len();
        let n = perfect_square_root(d)
            .ok_or_else(|| Error::Dimension(format!("state length {d} is not a perfect square")))?;
        if superoperators.is_empty() || superoperators.iter().any(|l| l.shape() != (d, d)) {
            return Err(Error::Dimension(format!("superoperators must all be {d}x{d}")));
        }
        Ok(Self {
            superoperators,
            rho0,
            trace_functional: vectorize(&identity(n)),
        })
    }

    /// Latent dimension `n` (the superoperators are `n²×n²`).
    pub fn dim(&self) -> usize {
        perfect_square_root(self.rho0.len()).unwrap_or(0)
    }

    pub fn superoperators(&self) -> &[ComplexMatrix] {
        &self.superoperators
    }

    pub fn rho0(&self) -> &ComplexVector {
        &self.rho0
    }
}

impl SequenceModel for LHqmm {
    type State = ComplexVector;

    fn alphabet_size(&self) -> usize {
        self.superoperators.len()
    }

    fn initial_state(&self) -> ComplexVector {
        self.rho0.clone()
    }

    fn step(&self, rho: &ComplexVector, y: usize) -> Result<(ComplexVector, f64)> {
        let l = self.superoperators.get(y).ok_or(Error::SymbolOutOfRange {
            symbol: y,
            alphabet: self.superoperators.len(),
        })?;
        let tol = Tolerances::DEFAULT;
        let next = l * rho;
        let p = real_probability(self.trace_functional.dot(&next), y, &tol)?;
        check_normalizer(p, y, &tol)?;
        Ok((next.unscale(p), p))
    }

    fn symbol_probabilities(&self, rho: &ComplexVector) -> Result<Vec<f64>> {
        let tol = Tolerances::DEFAULT;
        self.superoperators
            .iter()
            .enumerate()
            .map(|(y, l)| real_probability(self.trace_functional.dot(&(l * rho)), y, &tol))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{enumerate_sequences, sequence_log_prob, sequence_probability, Hmm};
    use crate::quantum::{c64, random_stiefel, validate_density};
    use crate::representations::{hmm_to_khqmm, khqmm_to_lhqmm};
    use alloc::vec;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    #[test]
    fn unitary_single_output() {
        let u = random_stiefel(3, 3, 4).unwrap();
        let kraus = StiefelPoint::from_blocks(core::slice::from_ref(&u), 1, 1, &Tolerances::DEFAULT).unwrap();
        let rho = random_density(3, 5).unwrap();
        let m = KHqmm::new(kraus, rho.clone()).unwrap();
        let (next, p) = m.step(rho.matrix(), 0).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        assert!((next - &u * rho.matrix() * u.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn embedded_hmm_probabilities() {
        let h = Hmm::random(2, 2, 12).unwrap();
        let q = hmm_to_khqmm(&h).unwrap();
        let hp = h.symbol_probabilities(h.initial()).unwrap();
        let qp = q.symbol_probabilities(&q.initial_state()).unwrap();
        for y in 0..2 {
            assert!((hp[y] - qp[y]).abs() < 1e-10);
        }
    }

    #[test]
    fn one_state_hmm_log_likelihood() {
        let c = [0.1, 0.6, 0.3];
        let h = Hmm::new(
            DMatrix::identity(1, 1),
            DMatrix::from_column_slice(3, 1, &c),
            DVector::from_element(1, 1.0),
        )
        .unwrap();
        let q = hmm_to_khqmm(&h).unwrap();
        let seq = [0, 1, 1, 2, 0, 1];
        let expected: f64 = seq.iter().map(|&y| c[y].ln()).sum();
        assert!((sequence_log_prob(&q, &seq, 0).unwrap() - expected).abs() < 1e-12);
        let p = q.step(&q.initial_state(), 2).unwrap().1;
        assert!((sequence_log_prob(&q, &[2], 0).unwrap() - p.ln()).abs() < 1e-15);
    }

    #[test]
    fn completeness_and_state_validity() {
        let m = KHqmm::random(3, 3, 2, 31).unwrap();
        let mut rho = m.initial_state();
        let tol = Tolerances {
            hermitian: 1e-8,
            psd: 1e-8,
            trace: 1e-8,
            ..Tolerances::DEFAULT
        };
        for y in [0, 2, 1, 1, 0, 2] {
            let total: f64 = m.symbol_probabilities(&rho).unwrap().iter().sum();
            assert!((total - 1.0).abs() < 1e-10);
            rho = m.step(&rho, y).unwrap().0;
            validate_density(&rho, &tol).unwrap();
        }
    }

    #[test]
    fn brute_force_normalization() {
        let m = KHqmm::random(2, 2, 2, 8).unwrap();
        let total: f64 = enumerate_sequences(2, 4)
            .map(|s| sequence_probability(&m, &s).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    /// The nested-trace expression evaluated without rescaling.
    fn unscaled_probability(m: &KHqmm, seq: &[usize]) -> f64 {
        let mut rho = m.initial_state();
        for &y in seq {
            rho = m.apply(&rho, y);
        }
        rho.trace().re
    }

    #[test]
    fn scaled_matches_unscaled() {
        let m = KHqmm::random(3, 2, 2, 77).unwrap();
        let seq: Vec<usize> = (0..20).map(|t| (t * 5 + 3) % 7 % 2).collect();
        let lp = sequence_log_prob(&m, &seq, 0).unwrap();
        assert!((lp - unscaled_probability(&m, &seq).ln()).abs() < 1e-8);
    }

    #[test]
    fn identity_liouville_channel() {
        let n = 2;
        let rho = random_density(n, 3).unwrap();
        let l = LHqmm::new(vec![identity(n * n)], vectorize(rho.matrix())).unwrap();
        let (next, p) = l.step(l.rho0(), 0).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
        assert!((&next - l.rho0()).norm() < 1e-14);
    }

    #[test]
    fn liouville_rejects_non_tp_and_non_cp() {
        let rho0 = vectorize(&identity(2).scale(0.5));
        assert!(LHqmm::new(vec![identity(4).scale(0.5)], rho0.clone()).is_err());
        assert!(LHqmm::new(vec![identity(4).scale(2.0), -identity(4)], rho0).is_err());
        assert!(LHqmm::new_unchecked(vec![identity(3)], ComplexVector::from_element(3, c64(1., 0.))).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn liouville_lift_is_coherent(seed in 0u64..1000, n in 1usize..4, s in 1usize..4, w in 1usize..3) {
            let k = KHqmm::random(n, s, w, seed).unwrap();
            let l = khqmm_to_lhqmm(&k).unwrap();
            let mut rk = k.initial_state();
            let mut rl = l.initial_state();
            for t in 0..6 {
                let y = ((seed as usize) + 7 * t) % s;
                let pk = k.symbol_probabilities(&rk).unwrap();
                let pl = l.symbol_probabilities(&rl).unwrap();
                let total: f64 = pl.iter().sum();
                prop_assert!((total - 1.0).abs() < 1e-10);
                for (a, b) in pk.iter().zip(&pl) {
                    prop_assert!((a - b).abs() < 1e-10);
                }
                if pk[y] < 1e-6 {
                    break;
                }
                rk = k.step(&rk, y).unwrap().0;
                rl = l.step(&rl, y).unwrap().0;
                prop_assert!((devectorize(&rl).unwrap() - &rk).norm() < 1e-10);
            }
        }
    }
}
