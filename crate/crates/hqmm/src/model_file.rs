//! JSON encoding of every model family. Matrices are stored column-major;
//! complex entries as separate real and imaginary arrays.

use std::path::Path;

use hqmm_core::models::{GeneralOom, Hmm, KHqmm, LHqmm, ModelSpec, Noom, StandardOom};
use hqmm_core::quantum::{ComplexMatrix, ComplexVector, DensityMatrix, StiefelPoint, C64};
use hqmm_core::Tolerances;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_json, write_json};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&DMatrix<f64>> for RealMatrix {
    fn from(m: &DMatrix<f64>) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.as_slice().to_vec(),
        }
    }
}

impl From<&DVector<f64>> for RealMatrix {
    fn from(v: &DVector<f64>) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.as_slice().to_vec(),
        }
    }
}

impl From<&ComplexMatrix> for CMatrix {
    fn from(m: &ComplexMatrix) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            re: m.iter().map(|z| z.re).collect(),
            im: m.iter().map(|z| z.im).collect(),
        }
    }
}

impl From<&ComplexVector> for CMatrix {
    fn from(v: &ComplexVector) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }
}

fn shape_error(what: &str, rows: usize, cols: usize, len: usize) -> hqmm_core::Error {
    hqmm_core::Error::Dimension(format!("{what}: {rows}x{cols} matrix with {len} entries"))
}

impl RealMatrix {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.rows * self.cols != self.data.len() {
            return Err(shape_error("real matrix", self.rows, self.cols, self.data.len()).into());
        }
        Ok(DMatrix::from_column_slice(self.rows, self.cols, &self.data))
    }

    pub fn to_vector(&self) -> Result<DVector<f64>> {
        if self.cols != 1 || self.rows != self.data.len() {
            return Err(shape_error("real vector", self.rows, self.cols, self.data.len()).into());
        }
        Ok(DVector::from_column_slice(&self.data))
    }
}

impl CMatrix {
    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.rows * self.cols != self.re.len() || self.re.len() != self.im.len() {
            return Err(shape_error("complex matrix", self.rows, self.cols, self.re.len()).into());
        }
        Ok(ComplexMatrix::from_iterator(
            self.rows,
            self.cols,
            self.re.iter().zip(&self.im).map(|(&re, &im)| C64::new(re, im)),
        ))
    }

    pub fn to_vector(&self) -> Result<ComplexVector> {
        if self.cols != 1 {
            return Err(shape_error("complex vector", self.rows, self.cols, self.re.len()).into());
        }
        Ok(self.to_matrix()?.column(0).into_owned())
    }
}

/// Serialized model, tagged by `family`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelFile {
    Hmm {
        transition: RealMatrix,
        emission: RealMatrix,
        initial: RealMatrix,
    },
    StandardOom {
        operators: Vec<RealMatrix>,
        initial: RealMatrix,
    },
    GeneralOom {
        operators: Vec<CMatrix>,
        initial: CMatrix,
        functional: CMatrix,
    },
    Noom {
        operators: Vec<RealMatrix>,
        initial: RealMatrix,
    },
    Khqmm {
        outputs: usize,
        kraus_per_output: usize,
        /// Stacked Kraus operators, `(y, u)` blocks with `u` fastest.
        kappa: CMatrix,
        rho0: CMatrix,
    },
    Lhqmm {
        superoperators: Vec<CMatrix>,
        rho0: CMatrix,
    },
}

impl From<&ModelSpec> for ModelFile {
    fn from(m: &ModelSpec) -> Self {
        match m {
            ModelSpec::Hmm(h) => ModelFile::Hmm {
                transition: h.transition().into(),
                emission: h.emission().into(),
                initial: h.initial().into(),
            },
            ModelSpec::StandardOom(o) => ModelFile::StandardOom {
                operators: o.operators().iter().map(Into::into).collect(),
                initial: o.initial().into(),
            },
            ModelSpec::GeneralOom(o) => ModelFile::GeneralOom {
                operators: o.operators().iter().map(Into::into).collect(),
                initial: o.initial().into(),
                functional: o.functional().into(),
            },
            ModelSpec::Noom(o) => ModelFile::Noom {
                operators: o.operators().iter().map(Into::into).collect(),
                initial: o.initial().into(),
            },
            ModelSpec::KHqmm(q) => ModelFile::Khqmm {
                outputs: q.outputs(),
                kraus_per_output: q.kraus_per_output(),
                kappa: q.kraus().matrix().into(),
                rho0: q.rho0().matrix().into(),
            },
            ModelSpec::LHqmm(q) => ModelFile::Lhqmm {
                superoperators: q.superoperators().iter().map(Into::into).collect(),
                rho0: q.rho0().into(),
            },
        }
    }
}

/// Tolerances for reloading: OOM lifts of channels are only normalized to
/// the channel tolerance.
fn load_tolerances() -> Tolerances {
    Tolerances {
        stochastic: Tolerances::DEFAULT.channel,
        ..Tolerances::DEFAULT
    }
}

impl ModelFile {
    pub fn to_spec(&self) -> Result<ModelSpec> {
        let tol = load_tolerances();
        let reals = |v: &[RealMatrix]| v.iter().map(RealMatrix::to_matrix).collect::<Result<Vec<_>>>();
        let complexes = |v: &[CMatrix]| v.iter().map(CMatrix::to_matrix).collect::<Result<Vec<_>>>();
        Ok(match self {
            ModelFile::Hmm {
                transition,
                emission,
                initial,
            } => ModelSpec::Hmm(Hmm::new(
                transition.to_matrix()?,
                emission.to_matrix()?,
                initial.to_vector()?,
            )?),
            ModelFile::StandardOom { operators, initial } => ModelSpec::StandardOom(StandardOom::with_tolerances(
                reals(operators)?,
                initial.to_vector()?,
                &tol,
            )?),
            ModelFile::GeneralOom {
                operators,
                initial,
                functional,
            } => ModelSpec::GeneralOom(GeneralOom::with_tolerances(
                complexes(operators)?,
                initial.to_vector()?,
                functional.to_vector()?,
                &tol,
            )?),
            ModelFile::Noom { operators, initial } => {
                ModelSpec::Noom(Noom::new(reals(operators)?, initial.to_vector()?)?)
            }
            ModelFile::Khqmm {
                outputs,
                kraus_per_output,
                kappa,
                rho0,
            } => {
                let kappa = StiefelPoint::new(kappa.to_matrix()?, *outputs, *kraus_per_output, &tol)?;
                let rho0 = DensityMatrix::new(rho0.to_matrix()?, &tol)?;
                ModelSpec::KHqmm(KHqmm::new(kappa, rho0)?)
            }
            ModelFile::Lhqmm { superoperators, rho0 } => {
                ModelSpec::LHqmm(LHqmm::new(complexes(superoperators)?, rho0.to_vector()?)?)
            }
        })
    }
}

pub fn save_model(path: &Path, model: &ModelSpec) -> Result<()> {
    write_json(path, &ModelFile::from(model))
}

pub fn load_model(path: &Path) -> Result<ModelSpec> {
    let file: ModelFile = read_json(path)?;
    file.to_spec().map_err(|e| match e {
        Error::Core(c) => Error::format(path, c),
        other => other,
    })
}
