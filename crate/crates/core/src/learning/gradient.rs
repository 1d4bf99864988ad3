use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::models::check_symbols;
use crate::quantum::{c64, ComplexMatrix, DensityMatrix, StiefelPoint};
use crate::tol::Tolerances;

/// Vertical stack of `G_i = ∂𝓛/∂K̄_i`, partitioned like the κ it
/// differentiates.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientStack {
    pub matrix: ComplexMatrix,
    pub outputs: usize,
    pub kraus_per_output: usize,
}

impl GradientStack {
    pub fn zeros_like(kappa: &StiefelPoint) -> Self {
        Self {
            matrix: ComplexMatrix::zeros(kappa.matrix().nrows(), kappa.dim()),
            outputs: kappa.outputs(),
            kraus_per_output: kappa.kraus_per_output(),
        }
    }

    pub fn block(&self, index: usize) -> ComplexMatrix {
        let n = self.matrix.ncols();
        self.matrix.view((index * n, 0), (n, n)).into_owned()
    }

    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }
}

struct Forward {
    /// `ρ_0 .. ρ_T`, each normalized.
    states: Vec<ComplexMatrix>,
    /// Step normalizers `c_1 .. c_T`.
    normalizers: Vec<f64>,
}

fn forward(
    blocks: &[ComplexMatrix],
    adjoints: &[ComplexMatrix],
    w: usize,
    rho0: &ComplexMatrix,
    seq: &[usize],
) -> Result<Forward> {
    let tol = Tolerances::DEFAULT;
    let n = rho0.nrows();
    let mut states = Vec::with_capacity(seq.len() + 1);
    let mut normalizers = Vec::with_capacity(seq.len());
    states.push(rho0.clone());
    for (t, &y) in seq.iter().enumerate() {
        let rho = &states[t];
        let mut sigma = ComplexMatrix::zeros(n, n);
        for i in y * w..(y + 1) * w {
            sigma += &blocks[i] * rho * &adjoints[i];
        }
        let tr = sigma.trace();
        if tr.im.abs() > tol.imaginary {
            return Err(Error::Validity(alloc::format!(
                "trace at position {t} has imaginary part {:e}",
                tr.im
            )));
        }
        if !(tr.re >= tol.underflow) {
            return Err(Error::ZeroProbability { position: t, symbol: y });
        }
        normalizers.push(tr.re);
        states.push(sigma.unscale(tr.re));
    }
    Ok(Forward { states, normalizers })
}

/// `−Σ_{t ≥ burn_in} log c_t` for one sequence; zero when every symbol is
/// burn-in.
fn sequence_nll(
    blocks: &[ComplexMatrix],
    adjoints: &[ComplexMatrix],
    w: usize,
    rho0: &ComplexMatrix,
    seq: &[usize],
    burn_in: usize,
) -> Result<f64> {
    let f = forward(blocks, adjoints, w, rho0, seq)?;
    Ok(-f.normalizers.iter().skip(burn_in).map(|&c| libm::log(c)).sum::<f64>())
}

/// Reverse sweep through the scaled filter. With `df = Re tr(D† dX)` for
/// every intermediate `X`:
///
/// * `ρ_t = σ_t / c_t` gives `D_σ = (D_ρ − Re tr(D_ρ† ρ_t) I) / c_t`,
/// * the loss term `−weight·log c_t` adds `−weight / c_t · I`,
/// * `σ_t = Σ_u K ρ K†` gives `D_K += D_σ K ρ + D_σ† K ρ` and
///   `D_ρ_{t−1} = Σ_u K† D_σ K`.
///
/// Returns the sequence NLL and accumulates `weight·D_K` into `acc`.
#[allow(clippy::too_many_arguments)]
fn sequence_adjoint(
    blocks: &[ComplexMatrix],
    adjoints: &[ComplexMatrix],
    w: usize,
    rho0: &ComplexMatrix,
    seq: &[usize],
    burn_in: usize,
    weight: f64,
    acc: &mut [ComplexMatrix],
) -> Result<f64> {
    let f = forward(blocks, adjoints, w, rho0, seq)?;
    let n = rho0.nrows();
    let nll = -f.normalizers.iter().skip(burn_in).map(|&c| libm::log(c)).sum::<f64>();
    let eye = ComplexMatrix::identity(n, n);
    let mut d_rho = ComplexMatrix::zeros(n, n);
    for t in (0..seq.len()).rev() {
        let y = seq[t];
        let c = f.normalizers[t];
        let rho_t = &f.states[t + 1];
        let rho_prev = &f.states[t];
        let proj = crate::quantum::inner(&d_rho, rho_t).re;
        let mut d_sigma = (&d_rho - &eye * c64(proj, 0.0)).unscale(c);
        if t >= burn_in {
            d_sigma -= &eye * c64(weight / c, 0.0);
        }
        let d_sigma_adj = d_sigma.adjoint();
        let mut next = ComplexMatrix::zeros(n, n);
        for i in y * w..(y + 1) * w {
            let k_rho = &blocks[i] * rho_prev;
            acc[i] += &d_sigma * &k_rho + &d_sigma_adj * &k_rho;
            next += &adjoints[i] * &d_sigma * &blocks[i];
        }
        d_rho = next;
    }
    Ok(nll)
}

fn prepare(
    kappa: &StiefelPoint,
    rho0: &DensityMatrix,
    batch: &[Vec<usize>],
) -> Result<(Vec<ComplexMatrix>, Vec<ComplexMatrix>)> {
    if rho0.dim() != kappa.dim() {
        return Err(Error::Dimension(alloc::format!(
            "initial state dimension {} does not match Kraus dimension {}",
            rho0.dim(),
            kappa.dim()
        )));
    }
    if batch.is_empty() {
        return Err(Error::Input("empty batch".into()));
    }
    for (i, seq) in batch.iter().enumerate() {
        check_symbols(seq, kappa.outputs()).map_err(|e| e.in_sequence(i))?;
    }
    let blocks = kappa.blocks();
    let adjoints = blocks.iter().map(|k| k.adjoint()).collect();
    Ok((blocks, adjoints))
}

/// Mean negative log-likelihood over the batch.
pub fn batch_loss(kappa: &StiefelPoint, rho0: &DensityMatrix, batch: &[Vec<usize>], burn_in: usize) -> Result<f64> {
    let (blocks, adjoints) = prepare(kappa, rho0, batch)?;
    let w = kappa.kraus_per_output();
    let mut total = 0.0;
    for (i, seq) in batch.iter().enumerate() {
        total += sequence_nll(&blocks, &adjoints, w, rho0.matrix(), seq, burn_in).map_err(|e| e.in_sequence(i))?;
    }
    Ok(total / batch.len() as f64)
}

/// Conjugate gradient `∂𝓛/∂κ̄` of [`batch_loss`], by reverse accumulation.
pub fn conjugate_gradient(
    kappa: &StiefelPoint,
    rho0: &DensityMatrix,
    batch: &[Vec<usize>],
    burn_in: usize,
) -> Result<GradientStack> {
    Ok(loss_and_gradient(kappa, rho0, batch, burn_in)?.1)
}

/// Batch loss and its conjugate gradient from one forward/backward pass.
pub fn loss_and_gradient(
    kappa: &StiefelPoint,
    rho0: &DensityMatrix,
    batch: &[Vec<usize>],
    burn_in: usize,
) -> Result<(f64, GradientStack)> {
    let (blocks, adjoints) = prepare(kappa, rho0, batch)?;
    let w = kappa.kraus_per_output();
    let n = kappa.dim();
    let weight = 1.0 / batch.len() as f64;
    let per_sequence = |(i, seq): (usize, &Vec<usize>)| -> Result<(f64, Vec<ComplexMatrix>)> {
        let mut acc = alloc::vec![ComplexMatrix::zeros(n, n); blocks.len()];
        let nll = sequence_adjoint(&blocks, &adjoints, w, rho0.matrix(), seq, burn_in, weight, &mut acc)
            .map_err(|e| e.in_sequence(i))?;
        Ok((nll, acc))
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<Result<(f64, Vec<ComplexMatrix>)>> = {
        use rayon::prelude::*;
        batch.par_iter().enumerate().map(per_sequence).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Result<(f64, Vec<ComplexMatrix>)>> = batch.iter().enumerate().map(per_sequence).collect();

    // Fixed-order reduction keeps results independent of thread count.
    let mut grad = GradientStack::zeros_like(kappa);
    let mut total = 0.0;
    for part in parts {
        let (nll, acc) = part?;
        total += nll;
        for (i, d) in acc.iter().enumerate() {
            let mut view = grad.matrix.view_mut((i * n, 0), (n, n));
            view += d.scale(0.5);
        }
    }
    Ok((total * weight, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{sequence_log_prob, Hmm, KHqmm};
    use crate::quantum::random_density;
    use crate::representations::hmm_to_khqmm;
    use alloc::vec;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn one_state_loss() {
        let c = [0.2, 0.8];
        let h = Hmm::new(
            DMatrix::identity(1, 1),
            DMatrix::from_column_slice(2, 1, &c),
            DVector::from_element(1, 1.),
        )
        .unwrap();
        let q = hmm_to_khqmm(&h).unwrap();
        let seq = vec![0, 1, 1, 1, 0];
        let expected: f64 = -seq.iter().map(|&y| c[y].ln()).sum::<f64>();
        let loss = batch_loss(q.kraus(), q.rho0(), &[seq], 0).unwrap();
        assert!((loss - expected).abs() < 1e-12);
    }

    #[test]
    fn uniform_model_loss() {
        let q = hmm_to_khqmm(&Hmm::uniform(2, 3)).unwrap();
        let batch = vec![vec![0, 1, 2, 2], vec![2, 2, 2, 0]];
        let loss = batch_loss(q.kraus(), q.rho0(), &batch, 0).unwrap();
        assert!((loss - 4.0 * 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn loss_is_mean_of_model_log_likelihoods() {
        let q = KHqmm::random(3, 3, 2, 14).unwrap();
        let batch = vec![vec![0, 2, 1, 1, 0, 2], vec![1, 1, 1, 0, 2, 2], vec![2, 0, 1, 2, 2, 1]];
        let expected: f64 = -batch.iter().map(|s| sequence_log_prob(&q, s, 2).unwrap()).sum::<f64>() / 3.0;
        let loss = batch_loss(q.kraus(), q.rho0(), &batch, 2).unwrap();
        assert!((loss - expected).abs() < 1e-12);
        let (l2, _) = loss_and_gradient(q.kraus(), q.rho0(), &batch, 2).unwrap();
        assert!((l2 - expected).abs() < 1e-12);
    }

    #[test]
    fn all_burn_in_gives_zero_gradient() {
        let q = KHqmm::random(2, 2, 1, 3).unwrap();
        let (loss, g) = loss_and_gradient(q.kraus(), q.rho0(), &[vec![0, 1, 1]], 3).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(g.norm(), 0.0);
    }

    #[test]
    fn zero_probability_is_annotated() {
        let a = DMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.]);
        let h = Hmm::new(a, DMatrix::identity(2, 2), DVector::from_vec(vec![1., 0.])).unwrap();
        let q = hmm_to_khqmm(&h).unwrap();
        let err = batch_loss(q.kraus(), q.rho0(), &[vec![1, 0], vec![1, 1]], 0).unwrap_err();
        assert!(matches!(err, Error::InSequence { sequence: 1, .. }));
        let rho = random_density(2, 1).unwrap();
        assert!(batch_loss(q.kraus(), &rho, &[vec![3]], 0).is_err());
    }
}
