use hqmm_core::models::{GeneralOom, KHqmm, ModelSpec, StandardOom};
use hqmm_core::quantum::{ComplexMatrix, DensityMatrix, StiefelPoint};
use hqmm_core::representations::{
    general_to_standard_oom, hmm_to_khqmm, hmm_to_oom, khqmm_to_lhqmm, lhqmm_to_general_oom, lhqmm_to_kraus,
    liouville_state, noom_to_oom,
};
use hqmm_core::Tolerances;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    StandardOom,
    GeneralOom,
    Khqmm,
    Lhqmm,
}

impl Target {
    pub fn parse(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "standard-oom" => Ok(Target::StandardOom),
            "general-oom" => Ok(Target::GeneralOom),
            "khqmm" => Ok(Target::Khqmm),
            "lhqmm" => Ok(Target::Lhqmm),
            other => Err(Error::Usage(format!(
                "unknown target `{other}` (standard-oom, general-oom, khqmm, lhqmm)"
            ))),
        }
    }
}

/// Imaginary parts at or below this are dropped when a standard-form OOM
/// is returned as a real model.
const REAL_TOLERANCE: f64 = 1e-12;

fn real_part(m: &ComplexMatrix) -> Option<DMatrix<f64>> {
    m.iter().all(|z| z.im.abs() <= REAL_TOLERANCE).then(|| m.map(|z| z.re))
}

/// A general OOM whose functional is all ones is returned as a real
/// [`StandardOom`] when its entries are real, else kept complex.
fn standardize(g: &GeneralOom) -> Result<ModelSpec> {
    let s = general_to_standard_oom(g)?;
    let ops: Option<Vec<DMatrix<f64>>> = s.operators().iter().map(real_part).collect();
    let x0 = real_part(&ComplexMatrix::from_column_slice(s.dim(), 1, s.initial().as_slice()));
    match (ops, x0) {
        (Some(ops), Some(x0)) => Ok(ModelSpec::StandardOom(StandardOom::with_tolerances(
            ops,
            DVector::from_column_slice(x0.as_slice()),
            &Tolerances {
                stochastic: Tolerances::DEFAULT.channel,
                ..Tolerances::DEFAULT
            },
        )?)),
        _ => Ok(ModelSpec::GeneralOom(s)),
    }
}

/// Kraus form of a Liouville model: canonical operators per output,
/// zero-padded to the largest Kraus-rank.
fn lhqmm_to_khqmm(m: &hqmm_core::models::LHqmm) -> Result<KHqmm> {
    let decomps = lhqmm_to_kraus(m)?;
    let n = m.dim();
    let w = decomps.iter().map(|d| d.kraus_rank).max().unwrap_or(1).max(1);
    let mut blocks = Vec::with_capacity(decomps.len() * w);
    for d in &decomps {
        let ops = d.scaled_operators();
        for u in 0..w {
            blocks.push(ops.get(u).cloned().unwrap_or_else(|| ComplexMatrix::zeros(n, n)));
        }
    }
    let kappa = StiefelPoint::from_blocks(&blocks, decomps.len(), w, &Tolerances::DEFAULT)?;
    let rho = liouville_state(m.rho0())?;
    let rho0 = DensityMatrix::new((&rho + rho.adjoint()).unscale(2.0), &Tolerances::DEFAULT)?;
    Ok(KHqmm::new(kappa, rho0)?)
}

pub fn convert(model: &ModelSpec, target: Target) -> Result<ModelSpec> {
    let unsupported = || {
        Error::Usage(format!(
            "no conversion from {} to {}",
            model.family(),
            match target {
                Target::StandardOom => "standard_oom",
                Target::GeneralOom => "general_oom",
                Target::Khqmm => "khqmm",
                Target::Lhqmm => "lhqmm",
            }
        ))
    };
    Ok(match (model, target) {
        (ModelSpec::Hmm(h), Target::StandardOom) => ModelSpec::StandardOom(hmm_to_oom(h)),
        (ModelSpec::Hmm(h), Target::GeneralOom) => ModelSpec::GeneralOom(hmm_to_oom(h).to_general()),
        (ModelSpec::Hmm(h), Target::Khqmm) => ModelSpec::KHqmm(hmm_to_khqmm(h)?),
        (ModelSpec::Hmm(h), Target::Lhqmm) => ModelSpec::LHqmm(khqmm_to_lhqmm(&hmm_to_khqmm(h)?)?),
        (ModelSpec::StandardOom(o), Target::StandardOom) => ModelSpec::StandardOom(o.clone()),
        (ModelSpec::StandardOom(o), Target::GeneralOom) => ModelSpec::GeneralOom(o.to_general()),
        (ModelSpec::GeneralOom(g), Target::StandardOom) => standardize(g)?,
        (ModelSpec::GeneralOom(g), Target::GeneralOom) => ModelSpec::GeneralOom(g.clone()),
        (ModelSpec::Noom(n), Target::GeneralOom) => ModelSpec::GeneralOom(noom_to_oom(n)),
        (ModelSpec::Noom(n), Target::StandardOom) => standardize(&noom_to_oom(n))?,
        (ModelSpec::KHqmm(q), Target::Khqmm) => ModelSpec::KHqmm(q.clone()),
        (ModelSpec::KHqmm(q), Target::Lhqmm) => ModelSpec::LHqmm(khqmm_to_lhqmm(q)?),
        (ModelSpec::KHqmm(q), Target::GeneralOom) => ModelSpec::GeneralOom(lhqmm_to_general_oom(&khqmm_to_lhqmm(q)?)),
        (ModelSpec::KHqmm(q), Target::StandardOom) => standardize(&lhqmm_to_general_oom(&khqmm_to_lhqmm(q)?))?,
        (ModelSpec::LHqmm(l), Target::Lhqmm) => ModelSpec::LHqmm(l.clone()),
        (ModelSpec::LHqmm(l), Target::Khqmm) => ModelSpec::KHqmm(lhqmm_to_khqmm(l)?),
        (ModelSpec::LHqmm(l), Target::GeneralOom) => ModelSpec::GeneralOom(lhqmm_to_general_oom(l)),
        (ModelSpec::LHqmm(l), Target::StandardOom) => standardize(&lhqmm_to_general_oom(l))?,
        _ => return Err(unsupported()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use hqmm_core::models::{enumerate_sequences, Hmm, LikelihoodModel, Noom};

    fn same_distribution(a: &ModelSpec, b: &ModelSpec) {
        for len in 1..=4 {
            for seq in enumerate_sequences(a.alphabet_size(), len) {
                let pa = a.log_likelihood(&seq, 0).map(f64::exp).unwrap_or(0.0);
                let pb = b.log_likelihood(&seq, 0).map(f64::exp).unwrap_or(0.0);
                assert!(
                    (pa - pb).abs() < 1e-9,
                    "{} -> {}: {seq:?} {pa} {pb}",
                    a.family(),
                    b.family()
                );
            }
        }
    }

    #[test]
    fn every_supported_path_preserves_the_distribution() {
        let models = [
            ModelSpec::Hmm(Hmm::random(3, 2, 1).unwrap()),
            ModelSpec::KHqmm(KHqmm::random(2, 2, 2, 3).unwrap()),
            ModelSpec::Noom(Noom::random(3, 2, 5).unwrap()),
        ];
        for m in &models {
            for t in [Target::StandardOom, Target::GeneralOom, Target::Khqmm, Target::Lhqmm] {
                if let Ok(c) = convert(m, t) {
                    same_distribution(m, &c);
                }
            }
        }
        let l = convert(&models[1], Target::Lhqmm).unwrap();
        same_distribution(&l, &convert(&l, Target::Khqmm).unwrap());
        assert!(matches!(convert(&models[2], Target::Khqmm), Err(Error::Usage(_))));
    }

    #[test]
    fn hmm_standard_form_is_real() {
        let h = ModelSpec::Hmm(Hmm::random(3, 3, 2).unwrap());
        let g = convert(&h, Target::GeneralOom).unwrap();
        assert!(matches!(
            convert(&g, Target::StandardOom).unwrap(),
            ModelSpec::StandardOom(_)
        ));
    }
}
