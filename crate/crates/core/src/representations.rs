//! Conversions between model families and channel validity checks.
//!
//! The Liouville/Choi reshuffle uses 0-based indices with column-major
//! composite index `a·n + b`:
//! `Choi[d·n + b, c·n + a] = L[a·n + b, c·n + d]`, which sends
//! `K̄ ⊗ K` to `vec(K) vec(K)†`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::models::{GeneralOom, Hmm, KHqmm, LHqmm, Noom, StandardOom};
use crate::quantum::{
    c64, devectorize, hermitize, identity, kron, min_hermitian_eigenvalue, perfect_square_root, real_to_complex,
    vectorize, ComplexMatrix, ComplexVector, DensityMatrix, StiefelPoint, C64,
};
use crate::tol::Tolerances;

/// `T_y = diag(C_{y,:}) A`, `x0` unchanged.
pub fn hmm_to_oom(h: &Hmm) -> StandardOom {
    let operators = (0..h.outputs())
        .map(|y| {
            let mut t = h.transition().clone();
            for (i, mut row) in t.row_iter_mut().enumerate() {
                row *= h.emission()[(y, i)];
            }
            t
        })
        .collect();
    StandardOom::new(operators, h.initial().clone()).expect("HMM lift satisfies the OOM invariants")
}

/// `τ_y = φ_y ⊗ φ_y`, `x0 = v0 ⊗ v0`, `σ = vec(I)`.
pub fn noom_to_oom(m: &Noom) -> GeneralOom {
    let operators = m
        .operators()
        .iter()
        .map(|phi| {
            let c = real_to_complex(phi);
            kron(&c, &c)
        })
        .collect();
    let v = real_to_complex(&DMatrix::from_column_slice(m.dim(), 1, m.initial().as_slice()));
    let x0 = kron(&v, &v);
    GeneralOom::new_unchecked(
        operators,
        ComplexVector::from_column_slice(x0.as_slice()),
        vectorize(&identity(m.dim())),
    )
}

/// `L = Σ_u K̄_u ⊗ K_u`.
pub fn kraus_to_liouville(kraus: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let first = kraus
        .first()
        .ok_or_else(|| Error::Dimension("empty Kraus set".into()))?;
    let n = first.nrows();
    if kraus.iter().any(|k| k.shape() != (n, n)) {
        return Err(Error::Dimension(
            "Kraus operators must be square and equal-sized".into(),
        ));
    }
    let mut l = ComplexMatrix::zeros(n * n, n * n);
    for k in kraus {
        l += kron(&k.conjugate(), k);
    }
    Ok(l)
}

/// Liouville ↔ Choi index permutation; an involution.
pub fn reshuffle(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = if m.is_square() {
        perfect_square_root(m.nrows())
    } else {
        None
    }
    .ok_or_else(|| {
        Error::Dimension(format!(
            "reshuffle needs a square matrix of perfect-square size, got {}x{}",
            m.nrows(),
            m.ncols()
        ))
    })?;
    let mut out = ComplexMatrix::zeros(n * n, n * n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    out[(d * n + b, c * n + a)] = m[(a * n + b, c * n + d)];
                }
            }
        }
    }
    Ok(out)
}

/// Smallest eigenvalue of the Hermitian part of a Choi matrix.
pub fn choi_min_eigenvalue(choi: &ComplexMatrix) -> f64 {
    min_hermitian_eigenvalue(choi)
}

/// `L = Σ_i γ_i K̄_i ⊗ K_i` with unit-norm `K_i`, `γ` descending.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalKrausDecomposition {
    pub singular_values: Vec<f64>,
    pub operators: Vec<ComplexMatrix>,
    pub kraus_rank: usize,
}

impl CanonicalKrausDecomposition {
    /// Kraus operators `√γ_i K_i` of the same channel.
    pub fn scaled_operators(&self) -> Vec<ComplexMatrix> {
        self.operators
            .iter()
            .zip(&self.singular_values)
            .map(|(k, &g)| k.scale(libm::sqrt(g)))
            .collect()
    }

    pub fn liouville(&self) -> Result<ComplexMatrix> {
        let n = self.operators.first().map_or(0, |k| k.nrows());
        if self.operators.is_empty() {
            return Ok(ComplexMatrix::zeros(0, 0));
        }
        let mut l = ComplexMatrix::zeros(n * n, n * n);
        for (k, &g) in self.operators.iter().zip(&self.singular_values) {
            l += kron(&k.conjugate(), k).scale(g);
        }
        Ok(l)
    }
}

/// Singular decomposition of a Hermitian Choi matrix; singular pairs below `1e-10·γ_max` are
/// dropped and each operator's largest-magnitude entry made real-positive.
pub fn choi_to_canonical_kraus(choi: &ComplexMatrix) -> Result<CanonicalKrausDecomposition> {
    choi_to_canonical_kraus_with(choi, &Tolerances::DEFAULT)
}

pub fn choi_to_canonical_kraus_with(choi: &ComplexMatrix, tol: &Tolerances) -> Result<CanonicalKrausDecomposition> {
    let n = if choi.is_square() {
        perfect_square_root(choi.nrows())
    } else {
        None
    }
    .ok_or_else(|| Error::Dimension(format!("Choi matrix of size {}x{}", choi.nrows(), choi.ncols())))?;
    let hp = (choi - choi.adjoint()).norm();
    if hp > tol.channel {
        return Err(Error::Validity(format!(
            "Choi matrix is not Hermitian (residual {hp:e})"
        )));
    }
    // For a Hermitian matrix the singular pairs are the eigenpairs with
    // γ = |λ|; the eigensolver is used because nalgebra's complex SVD is
    // unreliable on rank-deficient Hermitian input.
    let eig = SymmetricEigen::new(hermitize(choi));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].abs().total_cmp(&eig.eigenvalues[i].abs()));
    let gamma_max = order.first().map_or(0.0, |&i| eig.eigenvalues[i].abs());
    let cutoff = tol.kraus_rank * gamma_max;
    let mut singular_values = Vec::new();
    let mut operators = Vec::new();
    for &i in &order {
        let g = eig.eigenvalues[i].abs();
        if !(g > cutoff) || g == 0.0 {
            break;
        }
        let mut v: ComplexVector = eig.eigenvectors.column(i).into_owned();
        let pivot = v
            .iter()
            .copied()
            .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
            .unwrap_or(c64(1.0, 0.0));
        let phase: C64 = pivot.conj() / pivot.norm();
        v *= phase;
        let mut k = ComplexMatrix::from_column_slice(n, n, v.as_slice());
        k.unscale_mut(k.norm());
        singular_values.push(g);
        operators.push(k);
    }
    Ok(CanonicalKrausDecomposition {
        kraus_rank: operators.len(),
        singular_values,
        operators,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelMode {
    /// Each `L_y` is checked as a channel on its own.
    PerOutput,
    /// Trace preservation is checked on `Σ_y L_y`.
    FullModel,
}

/// Channel diagnostics; never an error for invalid channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelReport {
    pub mode: ChannelMode,
    /// Minimum over outputs of the smallest Choi eigenvalue.
    pub cp_min_eig: f64,
    /// `‖vec(I)ᵀ Σ_y L_y − vec(I)ᵀ‖` (full model) or the largest
    /// per-output residual.
    pub tp_residual: f64,
    /// Largest `‖Choi − Choi†‖_F` over outputs.
    pub hp_residual: f64,
    /// Kraus-rank of every output.
    pub kraus_rank: Vec<usize>,
}

impl ChannelReport {
    pub fn is_valid(&self, tolerance: f64) -> bool {
        self.cp_min_eig >= -tolerance && self.tp_residual <= tolerance && self.hp_residual <= tolerance
    }
}

pub fn validate_channel(superoperators: &[ComplexMatrix], mode: ChannelMode) -> Result<ChannelReport> {
    let first = superoperators
        .first()
        .ok_or_else(|| Error::Dimension("no superoperators supplied".into()))?;
    let d = first.nrows();
    let n = perfect_square_root(d).ok_or_else(|| Error::Dimension(format!("superoperator size {d}")))?;
    if superoperators.iter().any(|l| l.shape() != (d, d)) {
        return Err(Error::Dimension(format!("superoperators must all be {d}x{d}")));
    }
    let trace_row = vectorize(&identity(n)).transpose();
    let tp_of = |l: &ComplexMatrix| (&trace_row * l - &trace_row).norm();
    let mut report = ChannelReport {
        mode,
        cp_min_eig: f64::INFINITY,
        tp_residual: 0.0,
        hp_residual: 0.0,
        kraus_rank: Vec::with_capacity(superoperators.len()),
    };
    let lenient = Tolerances {
        channel: f64::INFINITY,
        ..Tolerances::DEFAULT
    };
    for l in superoperators {
        let choi = reshuffle(l)?;
        report.cp_min_eig = report.cp_min_eig.min(choi_min_eigenvalue(&choi));
        report.hp_residual = report.hp_residual.max((&choi - choi.adjoint()).norm());
        report
            .kraus_rank
            .push(choi_to_canonical_kraus_with(&choi, &lenient)?.kraus_rank);
        if mode == ChannelMode::PerOutput {
            report.tp_residual = report.tp_residual.max(tp_of(l));
        }
    }
    if mode == ChannelMode::FullModel {
        let total: ComplexMatrix = superoperators.iter().sum();
        report.tp_residual = tp_of(&total);
    }
    Ok(report)
}

/// Similarity transform `S = I + (1/d)·1·(σ̄ − 1)ᵀ` moving the functional
/// to `1ᵀ`: returns `(S τ_y S⁻¹, S x0, 1)`.
pub fn general_to_standard_oom(g: &GeneralOom) -> Result<GeneralOom> {
    let d = g.dim();
    let sigma = g.functional();
    let ones = ComplexVector::from_element(d, c64(1.0, 0.0));
    let scale = c64(1.0 / d as f64, 0.0);
    let s = identity(d) + (&ones * (sigma.conjugate() - &ones).transpose()) * scale;
    // det S = Σσ̄ / d.
    let det = sigma.iter().map(|z| z.conj()).sum::<C64>() * scale;
    let s_inv = if det.norm() < 1e-12 {
        None
    } else {
        s.clone().try_inverse()
    }
    .ok_or_else(|| {
        Error::Transform(format!(
            "similarity transform is singular: 1ᵀσ = {} (functional entries sum to zero)",
            det * c64(d as f64, 0.0)
        ))
    })?;
    let operators = g.operators().iter().map(|t| &s * t * &s_inv).collect();
    Ok(GeneralOom::new_unchecked(operators, &s * g.initial(), ones))
}

/// Diagonal embedding with `w = n`:
/// `K_{y,j} = Σ_i √(C_{y,i} A_{i,j}) e_i e_jᵀ`, `ρ0 = diag(x0)`.
pub fn hmm_to_khqmm(h: &Hmm) -> Result<KHqmm> {
    let n = h.states();
    let s = h.outputs();
    let mut blocks = Vec::with_capacity(s * n);
    for y in 0..s {
        for j in 0..n {
            let mut k = ComplexMatrix::zeros(n, n);
            for i in 0..n {
                k[(i, j)] = c64(libm::sqrt(h.emission()[(y, i)] * h.transition()[(i, j)]), 0.0);
            }
            blocks.push(k);
        }
    }
    let kraus = StiefelPoint::from_blocks(&blocks, s, n, &Tolerances::DEFAULT)?;
    let rho0 = DensityMatrix::from_probabilities(h.initial().as_slice())?;
    KHqmm::new(kraus, rho0)
}

/// `L_y = Σ_u K̄_{y,u} ⊗ K_{y,u}`, `ρ⃗0 = vec(ρ0)`.
pub fn khqmm_to_lhqmm(m: &KHqmm) -> Result<LHqmm> {
    let superoperators = (0..m.outputs())
        .map(|y| kraus_to_liouville(m.kraus_for(y)))
        .collect::<Result<Vec<_>>>()?;
    LHqmm::new(superoperators, vectorize(m.rho0().matrix()))
}

/// Canonical Kraus form of every output of a Liouville model. Outputs may
/// carry different numbers of operators.
pub fn lhqmm_to_kraus(m: &LHqmm) -> Result<Vec<CanonicalKrausDecomposition>> {
    m.superoperators()
        .iter()
        .map(|l| choi_to_canonical_kraus(&reshuffle(l)?))
        .collect()
}

/// `τ_y = L_y`, `x0 = ρ⃗0`, `σ = vec(I)`.
pub fn lhqmm_to_general_oom(m: &LHqmm) -> GeneralOom {
    GeneralOom::new_unchecked(
        m.superoperators().to_vec(),
        m.rho0().clone(),
        vectorize(&identity(m.dim())),
    )
}

/// Devectorized state of a Liouville model, for inspection.
pub fn liouville_state(v: &ComplexVector) -> Result<ComplexMatrix> {
    devectorize(v)
}
