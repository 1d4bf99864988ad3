//! Complex-matrix domain types, random ensembles, vectorization and
//! Kronecker products.
//!
//! Vectorization is column-major, so `vec(A X B) = (Bᵀ ⊗ A) vec(X)` and
//! `vec(K ρ K†) = (K̄ ⊗ K) vec(ρ)`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tol::Tolerances;

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Deterministic generator used for every seeded operation in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Frobenius norm.
pub fn frobenius(m: &ComplexMatrix) -> f64 {
    libm::sqrt(m.iter().map(|z| z.norm_sqr()).sum::<f64>())
}

/// Frobenius inner product `tr(A† B)`.
pub fn inner(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn real_to_complex(m: &DMatrix<f64>) -> ComplexMatrix {
    m.map(|x| c64(x, 0.0))
}

/// Column-major vectorization: entry `(i, j)` lands at `j·rows + i`.
pub fn vectorize(m: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vectorize`] for square matrices.
pub fn devectorize(v: &ComplexVector) -> Result<ComplexMatrix> {
    let n = perfect_square_root(v.len())
        .ok_or_else(|| Error::Dimension(format!("vector length {} is not a perfect square", v.len())))?;
    Ok(ComplexMatrix::from_column_slice(n, n, v.as_slice()))
}

pub(crate) fn perfect_square_root(len: usize) -> Option<usize> {
    let r = libm::round(libm::sqrt(len as f64)) as usize;
    (r * r == len).then_some(r)
}

/// Kronecker product; entry `(a·r + b, c·s + d)` equals `A[a,c]·B[b,d]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// ‖M − M†‖_F.
pub fn hermitian_residual(m: &ComplexMatrix) -> f64 {
    frobenius(&(m - m.adjoint()))
}

/// Smallest eigenvalue of the Hermitian part `(M + M†)/2`.
pub fn min_hermitian_eigenvalue(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let h = (m + m.adjoint()).scale(0.5);
    SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// ‖M†M − I‖_F.
pub fn orthonormality_residual(m: &ComplexMatrix) -> f64 {
    frobenius(&(m.adjoint() * m - identity(m.ncols())))
}

/// Nearest matrix with orthonormal columns, `M (M†M)^{-1/2}`, which equals
/// `U V†` for `M = U Σ V†`.
///
/// Built on the Hermitian eigendecomposition of `M†M`: nalgebra's complex
/// SVD can return an inaccurate factorization for some inputs.
pub fn polar_factor(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if m.nrows() < m.ncols() {
        return Err(Error::Dimension(format!(
            "polar factor needs rows >= cols, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let eig = SymmetricEigen::new(hermitize(&(m.adjoint() * m)));
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    if !(lmax > 0.0) || lmin <= 1e-14 * lmax {
        return Err(Error::Projection(format!(
            "matrix is rank deficient (squared singular values {lmin:e}..{lmax:e})"
        )));
    }
    let inv_sqrt = eig.eigenvalues.map(|l| c64(1.0 / libm::sqrt(l), 0.0));
    let v = &eig.eigenvectors;
    Ok(m * (v * ComplexMatrix::from_diagonal(&inv_sqrt) * v.adjoint()))
}

/// Matrix of independent complex standard Gaussians.
pub fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    // Column-major fill keeps the draw order independent of nalgebra internals.
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        data.push(c64(re, im));
    }
    ComplexMatrix::from_column_slice(rows, cols, &data)
}

/// Haar-like random matrix with orthonormal columns.
///
/// Thin QR of a complex Gaussian matrix, with each column of `Q` multiplied
/// by the phase of the matching diagonal entry of `R`.
pub fn random_stiefel(rows: usize, cols: usize, seed: u64) -> Result<ComplexMatrix> {
    random_stiefel_with(rows, cols, &mut seeded_rng(seed))
}

pub fn random_stiefel_with<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<ComplexMatrix> {
    if rows < cols {
        return Err(Error::Dimension(format!(
            "Stiefel matrix needs rows >= cols, got {rows}x{cols}"
        )));
    }
    let g = complex_gaussian(rows, cols, rng);
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..cols {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { c64(1.0, 0.0) };
        q.column_mut(j).scale_mut_complex(phase);
    }
    Ok(q)
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, z: C64);
}

impl<S> ScaleComplex for nalgebra::Matrix<C64, nalgebra::Dyn, nalgebra::U1, S>
where
    S: nalgebra::StorageMut<C64, nalgebra::Dyn, nalgebra::U1>,
{
    fn scale_mut_complex(&mut self, z: C64) {
        for x in self.iter_mut() {
            *x *= z;
        }
    }
}

/// Random full-rank density matrix `G G† / tr(G G†)` with Ginibre `G`.
pub fn random_density(n: usize, seed: u64) -> Result<DensityMatrix> {
    random_density_with(n, &mut seeded_rng(seed))
}

pub fn random_density_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<DensityMatrix> {
    if n == 0 {
        return Err(Error::Dimension("density matrix dimension must be >= 1".into()));
    }
    let g = complex_gaussian(n, n, rng);
    let gg = &g * g.adjoint();
    let tr = gg.trace().re;
    let rho = hermitize(&gg.unscale(tr));
    DensityMatrix::new(rho, &Tolerances::DEFAULT)
}

/// `(M + M†)/2`.
pub fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        validate_density(&matrix, tol)?;
        Ok(Self { matrix })
    }

    /// Diagonal density matrix from a probability vector.
    pub fn from_probabilities(p: &[f64]) -> Result<Self> {
        let m = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(p.len(), p.iter().map(|&x| c64(x, 0.0))));
        Self::new(m, &Tolerances::DEFAULT)
    }

    /// Pure state `v v† / ‖v‖²`.
    pub fn pure(v: &ComplexVector) -> Result<Self> {
        let nrm = v.norm_squared();
        if !(nrm > 0.0) {
            return Err(Error::Input("pure state from a zero vector".into()));
        }
        Self::new((v * v.adjoint()).unscale(nrm), &Tolerances::DEFAULT)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }
}

/// Checks the Hermitian, PSD and unit-trace invariants.
pub fn validate_density(m: &ComplexMatrix, tol: &Tolerances) -> Result<()> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "density matrix must be square and nonempty, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Validity("density matrix has non-finite entries".into()));
    }
    let herm = hermitian_residual(m);
    if herm > tol.hermitian {
        return Err(Error::Validity(format!(
            "density matrix not Hermitian (residual {herm:e})"
        )));
    }
    let tr = m.trace();
    if (tr - c64(1.0, 0.0)).norm() > tol.trace {
        return Err(Error::Validity(format!("density matrix trace {tr} != 1")));
    }
    let min_eig = min_hermitian_eigenvalue(m);
    if min_eig < -tol.psd {
        return Err(Error::Validity(format!(
            "density matrix not PSD (min eigenvalue {min_eig:e})"
        )));
    }
    Ok(())
}

/// Vertical stack κ of `outputs × kraus_per_output` square blocks with
/// orthonormal columns; block `(y, u)` is rows `(y·w + u)·n .. +n`.
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelPoint {
    matrix: ComplexMatrix,
    outputs: usize,
    kraus_per_output: usize,
}

impl StiefelPoint {
    pub fn new(matrix: ComplexMatrix, outputs: usize, kraus_per_output: usize, tol: &Tolerances) -> Result<Self> {
        let point = Self::from_matrix_unchecked(matrix, outputs, kraus_per_output)?;
        let residual = point.feasibility_residual();
        if !(residual <= tol.stiefel) {
            return Err(Error::Validity(format!(
                "stacked Kraus operators are not orthonormal (‖κ†κ − I‖_F = {residual:e})"
            )));
        }
        Ok(point)
    }

    /// Checks only the block partition, not orthonormality.
    pub fn from_matrix_unchecked(matrix: ComplexMatrix, outputs: usize, kraus_per_output: usize) -> Result<Self> {
        let n = matrix.ncols();
        let blocks = outputs * kraus_per_output;
        if n == 0 || blocks == 0 || matrix.nrows() != blocks * n {
            return Err(Error::Dimension(format!(
                "a {}x{} matrix does not tile into {outputs}x{kraus_per_output} blocks of size {n}",
                matrix.nrows(),
                n
            )));
        }
        Ok(Self {
            matrix,
            outputs,
            kraus_per_output,
        })
    }

    /// Haar-like random point for an `(n, s, w)` architecture.
    pub fn random(n: usize, outputs: usize, kraus_per_output: usize, seed: u64) -> Result<Self> {
        let m = random_stiefel(n * outputs * kraus_per_output, n, seed)?;
        Self::from_matrix_unchecked(m, outputs, kraus_per_output)
    }

    /// Stacks Kraus operators ordered `(y, u)` with `u` fastest.
    pub fn from_blocks(
        blocks: &[ComplexMatrix],
        outputs: usize,
        kraus_per_output: usize,
        tol: &Tolerances,
    ) -> Result<Self> {
        if blocks.len() != outputs * kraus_per_output || blocks.is_empty() {
            return Err(Error::Dimension(format!(
                "expected {} Kraus operators, got {}",
                outputs * kraus_per_output,
                blocks.len()
            )));
        }
        let n = blocks[0].ncols();
        if blocks.iter().any(|b| b.nrows() != n || b.ncols() != n) {
            return Err(Error::Dimension(
                "Kraus operators must be square and equal-sized".into(),
            ));
        }
        let mut m = ComplexMatrix::zeros(n * blocks.len(), n);
        for (i, b) in blocks.iter().enumerate() {
            m.view_mut((i * n, 0), (n, n)).copy_from(b);
        }
        Self::new(m, outputs, kraus_per_output, tol)
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn kraus_per_output(&self) -> usize {
        self.kraus_per_output
    }

    pub fn num_blocks(&self) -> usize {
        self.outputs * self.kraus_per_output
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Block `index = y·w + u` as an owned matrix.
    pub fn block(&self, index: usize) -> ComplexMatrix {
        let n = self.dim();
        self.matrix.view((index * n, 0), (n, n)).into_owned()
    }

    /// Kraus operators of one output symbol.
    pub fn kraus_for(&self, symbol: usize) -> Vec<ComplexMatrix> {
        let w = self.kraus_per_output;
        (symbol * w..(symbol + 1) * w).map(|i| self.block(i)).collect()
    }

    pub fn blocks(&self) -> Vec<ComplexMatrix> {
        (0..self.num_blocks()).map(|i| self.block(i)).collect()
    }

    pub fn feasibility_residual(&self) -> f64 {
        orthonormality_residual(&self.matrix)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
        complex_gaussian(rows, cols, &mut seeded_rng(seed))
    }

    #[test]
    fn vectorize_is_column_major() {
        let v = vectorize(&identity(2));
        assert_eq!(v.as_slice(), &[c64(1., 0.), c64(0., 0.), c64(0., 0.), c64(1., 0.)]);

        let (a, b, c, d) = (c64(1., 0.), c64(2., 0.), c64(3., 0.), c64(4., 0.));
        // [[a, c], [b, d]]
        let m = ComplexMatrix::from_row_slice(2, 2, &[a, c, b, d]);
        assert_eq!(vectorize(&m).as_slice(), &[a, b, c, d]);
    }

    #[test]
    fn vectorize_sandwich_identity() {
        let (a, x, b) = (random_matrix(3, 3, 1), random_matrix(3, 3, 2), random_matrix(3, 3, 3));
        // Oracle: multiply out A X B directly.
        let lhs = vectorize(&(&a * &x * &b));
        let rhs = kron(&b.transpose(), &a) * vectorize(&x);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn devectorize_rejects_non_square_length() {
        let v = ComplexVector::zeros(5);
        assert!(matches!(devectorize(&v), Err(Error::Dimension(_))));
    }

    #[test]
    fn kron_basics() {
        assert_eq!(kron(&identity(2), &identity(2)), identity(4));
        let mut e1 = ComplexMatrix::zeros(2, 2);
        e1[(0, 0)] = c64(1., 0.);
        let mut e2 = ComplexMatrix::zeros(2, 2);
        e2[(1, 1)] = c64(1., 0.);
        let k = kron(&e1, &e2);
        for i in 0..4 {
            for j in 0..4 {
                let expected = if (i, j) == (1, 1) { 1.0 } else { 0.0 };
                assert_eq!(k[(i, j)], c64(expected, 0.));
            }
        }
    }

    #[test]
    fn kron_element_rule() {
        let (a, b) = (random_matrix(2, 3, 10), random_matrix(3, 2, 11));
        let k = kron(&a, &b);
        assert_eq!(k.shape(), (6, 6));
        for ar in 0..2 {
            for ac in 0..3 {
                for br in 0..3 {
                    for bc in 0..2 {
                        assert_eq!(k[(ar * 3 + br, ac * 2 + bc)], a[(ar, ac)] * b[(br, bc)]);
                    }
                }
            }
        }
    }

    #[test]
    fn kron_mixed_product_100_trials() {
        for t in 0..100 {
            let m: Vec<_> = (0..4).map(|i| random_matrix(2, 2, 1000 + 4 * t + i)).collect();
            let lhs = kron(&m[0], &m[1]) * kron(&m[2], &m[3]);
            let rhs = kron(&(&m[0] * &m[2]), &(&m[1] * &m[3]));
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn random_stiefel_scalar_is_unit_modulus() {
        let m = random_stiefel(1, 1, 5).unwrap();
        assert!((m[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_stiefel_is_orthonormal_and_deterministic() {
        let a = random_stiefel(12, 2, 42).unwrap();
        assert!(orthonormality_residual(&a) < 1e-10);
        let b = random_stiefel(12, 2, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_stiefel(12, 2, 43).unwrap());
    }

    #[test]
    fn random_stiefel_rejects_wide() {
        assert!(matches!(random_stiefel(2, 3, 0), Err(Error::Dimension(_))));
    }

    #[test]
    fn random_stiefel_r_diagonal_is_positive() {
        // The phase fix makes Q†G upper triangular with a positive real diagonal.
        let mut rng = seeded_rng(9);
        let g = complex_gaussian(6, 3, &mut rng);
        let q = random_stiefel(6, 3, 9).unwrap();
        let r = q.adjoint() * g;
        for j in 0..3 {
            assert!(r[(j, j)].re > 0.0 && r[(j, j)].im.abs() < 1e-12);
        }
    }

    #[test]
    fn random_density_basics() {
        let one = random_density(1, 3).unwrap();
        assert!((one.matrix()[(0, 0)] - c64(1., 0.)).norm() < 1e-15);
        for seed in 0..100 {
            let rho = random_density(4, seed).unwrap();
            validate_density(rho.matrix(), &Tolerances::DEFAULT).unwrap();
        }
        assert!(matches!(random_density(0, 1), Err(Error::Dimension(_))));
    }

    #[test]
    fn random_density_spectrum_is_nondegenerate() {
        // Monte-Carlo: at n = 2 the smaller eigenvalue spreads over (0, 1/2].
        let mut rng = seeded_rng(77);
        let mut bins = vec![0usize; 5];
        for _ in 0..10_000 {
            let rho = random_density_with(2, &mut rng).unwrap();
            let lo = min_hermitian_eigenvalue(rho.matrix());
            assert!(lo > -1e-12);
            let bin = ((lo / 0.5) * 5.0).floor().clamp(0.0, 4.0) as usize;
            bins[bin] += 1;
        }
        // Not all rank one: every bin of the lower eigenvalue is populated.
        assert!(bins.iter().all(|&c| c > 20), "bins {bins:?}");
    }

    #[test]
    fn density_validation_rejects_bad_matrices() {
        let tol = Tolerances::DEFAULT;
        let not_herm = ComplexMatrix::from_row_slice(2, 2, &[c64(0.5, 0.), c64(0.1, 0.), c64(0., 0.), c64(0.5, 0.)]);
        assert!(validate_density(&not_herm, &tol).is_err());
        let not_psd = ComplexMatrix::from_row_slice(2, 2, &[c64(1.5, 0.), c64(0., 0.), c64(0., 0.), c64(-0.5, 0.)]);
        assert!(validate_density(&not_psd, &tol).is_err());
        let bad_trace = identity(2);
        assert!(validate_density(&bad_trace, &tol).is_err());
    }

    #[test]
    fn stiefel_point_partition() {
        let p = StiefelPoint::random(2, 3, 2, 8).unwrap();
        assert_eq!(p.matrix().shape(), (12, 2));
        let blocks = p.blocks();
        assert_eq!(blocks.len(), 6);
        let sum: ComplexMatrix = blocks.iter().map(|k| k.adjoint() * k).sum();
        assert!((sum - identity(2)).norm() < 1e-10);
        let rebuilt = StiefelPoint::from_blocks(&blocks, 3, 2, &Tolerances::DEFAULT).unwrap();
        assert_eq!(rebuilt, p);
        assert!(StiefelPoint::from_matrix_unchecked(ComplexMatrix::zeros(5, 2), 2, 1).is_err());
    }

    #[test]
    fn polar_factor_fixes_stiefel_points() {
        let k = random_stiefel(8, 2, 1).unwrap();
        assert!((polar_factor(&k).unwrap() - &k).norm() < 1e-12);
        assert!(polar_factor(&ComplexMatrix::zeros(4, 2)).is_err());
    }

    proptest! {
        #[test]
        fn devectorize_inverts_vectorize(n in 1usize..=8, seed in any::<u64>()) {
            let m = random_matrix(n, n, seed);
            prop_assert_eq!(devectorize(&vectorize(&m)).unwrap(), m);
        }

        #[test]
        fn random_stiefel_always_orthonormal(cols in 1usize..5, extra in 0usize..12, seed in any::<u64>()) {
            let m = random_stiefel(cols + extra, cols, seed).unwrap();
            prop_assert!(orthonormality_residual(&m) < 1e-10);
        }
    }
}
