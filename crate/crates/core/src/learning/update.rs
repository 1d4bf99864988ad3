use alloc::format;

use nalgebra::LU;

use crate::error::{Error, Result};
use crate::quantum::{c64, hermitize, polar_factor, ComplexMatrix, StiefelPoint};

/// Largest condition number of the retraction system that is still solved.
pub const MAX_RETRACTION_CONDITION: f64 = 1e12;

/// Component of `G` tangent to the Stiefel manifold at κ:
/// `G − κ·herm(κ†G)`.
pub fn tangent_component(kappa: &StiefelPoint, g: &ComplexMatrix) -> ComplexMatrix {
    let k = kappa.matrix();
    g - k * hermitize(&(k.adjoint() * g))
}

/// Heavy-ball momentum on unit-normalized gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Momentum {
    pub beta: f64,
    pub buffer: ComplexMatrix,
}

impl Momentum {
    pub fn new(beta: f64, rows: usize, cols: usize) -> Self {
        Self {
            beta,
            buffer: ComplexMatrix::zeros(rows, cols),
        }
    }

    /// `G ← G/‖G‖`, `M ← βM + G`, returns `M/‖M‖` (or zero if `M` vanishes).
    pub fn step(&mut self, g: &ComplexMatrix) -> ComplexMatrix {
        momentum_renorm(g, &mut self.buffer, self.beta)
    }
}

pub fn momentum_renorm(g: &ComplexMatrix, buffer: &mut ComplexMatrix, beta: f64) -> ComplexMatrix {
    let gn = g.norm();
    let g = if gn < 1e-15 { g.clone() } else { g.unscale(gn) };
    *buffer = &*buffer * c64(beta, 0.0) + g;
    let mn = buffer.norm();
    if mn < 1e-15 {
        ComplexMatrix::zeros(buffer.nrows(), buffer.ncols())
    } else {
        buffer.unscale(mn)
    }
}

/// Curvilinear step `γ(τ) = κ − τ U (I + τ/2 V†U)⁻¹ V†κ` with
/// `U = [G | κ]`, `V = [κ | −G]`, solved through a `2n×2n` system.
///
/// The condition number is estimated as `‖A‖_F ‖A⁻¹‖_F`, an upper bound on
/// the 2-norm condition number.
pub fn wen_yin_retraction(kappa: &StiefelPoint, g: &ComplexMatrix, tau: f64) -> Result<StiefelPoint> {
    let k = kappa.matrix();
    if g.shape() != k.shape() {
        return Err(Error::Dimension(format!(
            "direction is {}x{} but κ is {}x{}",
            g.nrows(),
            g.ncols(),
            k.nrows(),
            k.ncols()
        )));
    }
    if tau == 0.0 {
        return Ok(kappa.clone());
    }
    let n = k.ncols();
    let rows = k.nrows();
    let mut u = ComplexMatrix::zeros(rows, 2 * n);
    u.view_mut((0, 0), (rows, n)).copy_from(g);
    u.view_mut((0, n), (rows, n)).copy_from(k);
    let mut v = ComplexMatrix::zeros(rows, 2 * n);
    v.view_mut((0, 0), (rows, n)).copy_from(k);
    v.view_mut((0, n), (rows, n)).copy_from(&(-g));
    let v_adj = v.adjoint();
    let system = ComplexMatrix::identity(2 * n, 2 * n) + (&v_adj * &u) * c64(tau / 2.0, 0.0);
    let inverse = LU::new(system.clone()).try_inverse();
    let condition = inverse.as_ref().map_or(f64::INFINITY, |inv| system.norm() * inv.norm());
    let inverse = match inverse {
        Some(inv) if condition.is_finite() && condition <= MAX_RETRACTION_CONDITION => inv,
        _ => return Err(Error::Step { condition }),
    };
    let gamma = k - (u * (inverse * (v_adj * k))) * c64(tau, 0.0);
    StiefelPoint::from_matrix_unchecked(gamma, kappa.outputs(), kappa.kraus_per_output())
}

/// Euclidean step `κ − τG` followed by the polar projection.
pub fn projection_update(kappa: &StiefelPoint, g: &ComplexMatrix, tau: f64) -> Result<StiefelPoint> {
    if g.shape() != kappa.matrix().shape() {
        return Err(Error::Dimension("direction and κ differ in shape".into()));
    }
    let stepped = kappa.matrix() - g * c64(tau, 0.0);
    StiefelPoint::from_matrix_unchecked(polar_factor(&stepped)?, kappa.outputs(), kappa.kraus_per_output())
}

/// Re-projects κ onto the manifold with the polar factor.
pub fn reorthonormalize(kappa: &StiefelPoint) -> Result<StiefelPoint> {
    StiefelPoint::from_matrix_unchecked(polar_factor(kappa.matrix())?, kappa.outputs(), kappa.kraus_per_output())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{complex_gaussian, seeded_rng};
    use proptest::prelude::*;

    fn setup(seed: u64) -> (StiefelPoint, ComplexMatrix) {
        let k = StiefelPoint::random(3, 2, 2, seed).unwrap();
        let g = complex_gaussian(12, 3, &mut seeded_rng(seed + 1));
        (k, g)
    }

    #[test]
    fn zero_step_and_zero_direction() {
        let (k, g) = setup(1);
        assert_eq!(wen_yin_retraction(&k, &g, 0.0).unwrap(), k);
        let z = ComplexMatrix::zeros(12, 3);
        let out = wen_yin_retraction(&k, &z, 0.75).unwrap();
        assert!((out.matrix() - k.matrix()).norm() < 1e-15);
        let p = projection_update(&k, &g, 0.0).unwrap();
        assert!((p.matrix() - k.matrix()).norm() < 1e-12);
    }

    #[test]
    fn retraction_stays_on_manifold() {
        for seed in 0..20 {
            let (k, g) = setup(seed);
            for tau in [1e-3, 0.1, 0.75, 10.0] {
                let out = wen_yin_retraction(&k, &g, tau).unwrap();
                assert!(out.feasibility_residual() < 1e-10, "seed {seed} tau {tau}");
            }
            let p = projection_update(&k, &g, 0.75).unwrap();
            assert!(p.feasibility_residual() < 1e-10);
        }
    }

    #[test]
    fn momentum_examples() {
        let (_, g) = setup(4);
        let mut buf = ComplexMatrix::zeros(12, 3);
        let d = momentum_renorm(&g, &mut buf, 0.0);
        assert!((d - g.unscale(g.norm())).norm() < 1e-15);
        let mut m = Momentum::new(0.9, 12, 3);
        m.step(&g);
        let d = m.step(&g);
        assert!((d - g.unscale(g.norm())).norm() < 1e-12);
        let zero = ComplexMatrix::zeros(12, 3);
        let mut buf = ComplexMatrix::zeros(12, 3);
        assert_eq!(momentum_renorm(&zero, &mut buf, 0.9).norm(), 0.0);
    }

    #[test]
    fn tangent_component_of_normal_vector_vanishes() {
        let (k, _) = setup(2);
        let h = complex_gaussian(3, 3, &mut seeded_rng(9));
        let normal = k.matrix() * hermitize(&h);
        assert!(tangent_component(&k, &normal).norm() < 1e-12);
    }

    #[test]
    fn rank_deficient_projection_fails() {
        let k = StiefelPoint::random(2, 1, 1, 0).unwrap();
        assert!(matches!(
            projection_update(&k, k.matrix(), 1.0),
            Err(Error::Projection(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn outputs_are_orthonormal(seed in 0u64..10_000, tau in 1e-4f64..20.0) {
            let (k, g) = setup(seed);
            let d = momentum_renorm(&g, &mut ComplexMatrix::zeros(12, 3), 0.9);
            prop_assert!((d.norm() - 1.0).abs() < 1e-12);
            prop_assert!(wen_yin_retraction(&k, &d, tau).unwrap().feasibility_residual() < 1e-10);
            prop_assert!(projection_update(&k, &d, tau).unwrap().feasibility_residual() < 1e-10);
        }
    }
}
