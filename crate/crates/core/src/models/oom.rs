use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};

use super::{check_normalizer, nonnegative_probability, real_probability, SequenceModel};
use crate::error::{Error, Result};
use crate::quantum::{c64, real_to_complex, ComplexMatrix, ComplexVector, C64};
use crate::tol::Tolerances;

/// Real observable operator model with the functional fixed to `1ᵀ`.
///
/// Only `1ᵀx0 = 1` and `1ᵀ Σ_y T_y = 1ᵀ` are enforced; non-negativity of
/// sequence probabilities cannot be decided in general, see
/// [`validate_oom_depth`].
#[derive(Debug, Clone, PartialEq)]
pub struct StandardOom {
    operators: Vec<DMatrix<f64>>,
    initial: DVector<f64>,
}

impl StandardOom {
    pub fn new(operators: Vec<DMatrix<f64>>, initial: DVector<f64>) -> Result<Self> {
        Self::with_tolerances(operators, initial, &Tolerances::DEFAULT)
    }

    pub fn with_tolerances(operators: Vec<DMatrix<f64>>, initial: DVector<f64>, tol: &Tolerances) -> Result<Self> {
        let n = initial.len();
        if n == 0 || operators.is_empty() || operators.iter().any(|t| t.shape() != (n, n)) {
            return Err(Error::Dimension(format!("OOM operators must all be {n}x{n}")));
        }
        if (initial.sum() - 1.0).abs() > tol.stochastic {
            return Err(Error::Validity(format!("1ᵀx0 = {} != 1", initial.sum())));
        }
        let total: DMatrix<f64> = operators.iter().sum();
        let residual = total.row_sum().add_scalar(-1.0).norm();
        if residual > tol.stochastic {
            return Err(Error::Validity(format!("1ᵀ Σ_y T_y differs from 1ᵀ by {residual:e}")));
        }
        Ok(Self { operators, initial })
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

    /// The same model viewed as a general OOM with `σ = 1`.
    pub fn to_general(&self) -> GeneralOom {
        GeneralOom {
            operators: self.operators.iter().map(real_to_complex).collect(),
            initial: self.initial.map(|x| c64(x, 0.0)),
            functional: ComplexVector::from_element(self.dim(), c64(1.0, 0.0)),
        }
    }
}

impl SequenceModel for StandardOom {
    type State = DVector<f64>;

    fn alphabet_size(&self) -> usize {
        self.operators.len()
    }

    fn initial_state(&self) -> DVector<f64> {
        self.initial.clone()
    }

    fn step(&self, x: &DVector<f64>, y: usize) -> Result<(DVector<f64>, f64)> {
        let op = self.operators.get(y).ok_or(Error::SymbolOutOfRange {
            symbol: y,
            alphabet: self.operators.len(),
        })?;
        let tol = Tolerances::DEFAULT;
        let mut next = op * x;
        let p = nonnegative_probability(next.sum(), y, &tol)?;
        check_normalizer(p, y, &tol)?;
        next.unscale_mut(p);
        Ok((next, p))
    }

    fn symbol_probabilities(&self, x: &DVector<f64>) -> Result<Vec<f64>> {
        let tol = Tolerances::DEFAULT;
        self.operators
            .iter()
            .enumerate()
            .map(|(y, op)| nonnegative_probability((op * x).sum(), y, &tol))
            .collect()
    }
}

/// Complex observable operator model with evaluation functional σ:
/// `P(y | x) = σ† τ_y x`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralOom {
    operators: Vec<ComplexMatrix>,
    initial: ComplexVector,
    functional: ComplexVector,
}

impl GeneralOom {
    pub fn new(operators: Vec<ComplexMatrix>, initial: ComplexVector, functional: ComplexVector) -> Result<Self> {
        Self::with_tolerances(operators, initial, functional, &Tolerances::DEFAULT)
    }

    /// Checks `σ†x0 = 1` and `σ† Σ_y τ_y = σ†` at `tol.stochastic`.
    pub fn with_tolerances(
        operators: Vec<ComplexMatrix>,
        initial: ComplexVector,
        functional: ComplexVector,
        tol: &Tolerances,
    ) -> Result<Self> {
        let n = initial.len();
        if n == 0 || functional.len() != n || operators.is_empty() || operators.iter().any(|t| t.shape() != (n, n)) {
            return Err(Error::Dimension(format!("general OOM parts must share dimension {n}")));
        }
        let norm0 = functional.dotc(&initial);
        if (norm0 - c64(1.0, 0.0)).norm() > tol.stochastic {
            return Err(Error::Validity(format!("σ†x0 = {norm0} != 1")));
        }
        let total: ComplexMatrix = operators.iter().sum();
        let residual = (functional.adjoint() * total - functional.adjoint()).norm();
        if residual > tol.stochastic {
            return Err(Error::Validity(format!("σ† Σ_y τ_y differs from σ† by {residual:e}")));
        }
        Ok(Self {
            operators,
            initial,
            functional,
        })
    }

    pub(crate) fn new_unchecked(
        operators: Vec<ComplexMatrix>,
        initial: ComplexVector,
        functional: ComplexVector,
    ) -> Self {
        Self {
            operators,
            initial,
            functional,
        }
    }

    pub fn dim(&self) -> usize {
        self.initial.len()
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn initial(&self) -> &ComplexVector {
        &self.initial
    }

    pub fn functional(&self) -> &ComplexVector {
        &self.functional
    }

    fn evaluate(&self, x: &ComplexVector) -> C64 {
        self.functional.dotc(x)
    }
}

impl SequenceModel for GeneralOom {
    type State = ComplexVector;

    fn alphabet_size(&self) -> usize {
        self.operators.len()
    }

    fn initial_state(&self) -> ComplexVector {
        self.initial.clone()
    }

    fn step(&self, x: &ComplexVector, y: usize) -> Result<(ComplexVector, f64)> {
        let op = self.operators.get(y).ok_or(Error::SymbolOutOfRange {
            symbol: y,
            alphabet: self.operators.len(),
        })?;
        let tol = Tolerances::DEFAULT;
        let next = op * x;
        let z = self.evaluate(&next);
        let p = real_probability(z, y, &tol)?;
        check_normalizer(p, y, &tol)?;
        Ok((next.unscale(p), p))
    }

    fn symbol_probabilities(&self, x: &ComplexVector) -> Result<Vec<f64>> {
        let tol = Tolerances::DEFAULT;
        self.operators
            .iter()
            .enumerate()
            .map(|(y, op)| real_probability(self.evaluate(&(op * x)), y, &tol))
            .collect()
    }
}

/// Outcome of [`validate_oom_depth`]. A clean report is evidence only up to
/// the enumerated depth; it never proves the model valid.
#[derive(Debug, Clone, PartialEq)]
pub struct OomDepthReport {
    pub depth: usize,
    pub sequences_checked: usize,
    pub min_probability: f64,
    pub min_sequence: Vec<usize>,
    /// Number of sequences with probability below `-tol`.
    pub violation_count: usize,
    /// The first violations found (at most 32), shortest sequences first.
    pub violations: Vec<(Vec<usize>, f64)>,
    /// Largest `|Σ_y P(h y) − P(h)|` over enumerated histories `h`.
    pub max_marginal_residual: f64,
    /// Largest imaginary part of an evaluated probability.
    pub max_imaginary: f64,
}

impl OomDepthReport {
    pub fn has_violations(&self) -> bool {
        self.violation_count > 0
    }
}

impl fmt::Display for OomDepthReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "bounded check to depth {} (not a proof of validity): {} sequences, min probability {:e}, {} violations",
            self.depth, self.sequences_checked, self.min_probability, self.violation_count
        )
    }
}

const ENUMERATION_LIMIT: u128 = 1_000_000;
const MAX_LISTED_VIOLATIONS: usize = 32;

/// Enumerates every sequence of length `1..=depth` and reports negative
/// probabilities (below `-1e-9`) and per-history normalization residuals.
pub fn validate_oom_depth(model: &GeneralOom, depth: usize) -> Result<OomDepthReport> {
    let s = model.alphabet_size() as u128;
    let requested = s.checked_pow(depth as u32).unwrap_or(u128::MAX);
    if requested > ENUMERATION_LIMIT {
        return Err(Error::Resource {
            requested,
            limit: ENUMERATION_LIMIT,
        });
    }
    let tol = Tolerances::DEFAULT;
    let mut report = OomDepthReport {
        depth,
        sequences_checked: 0,
        min_probability: f64::INFINITY,
        min_sequence: Vec::new(),
        violation_count: 0,
        violations: Vec::new(),
        max_marginal_residual: 0.0,
        max_imaginary: 0.0,
    };
    // Breadth-first so violations are listed shortest-first.
    let mut frontier: Vec<(Vec<usize>, ComplexVector, C64)> =
        alloc::vec![(Vec::new(), model.initial.clone(), model.evaluate(&model.initial))];
    for _ in 0..depth {
        let mut next_frontier = Vec::with_capacity(frontier.len() * model.alphabet_size());
        for (history, x, p_hist) in &frontier {
            let mut marginal = c64(0.0, 0.0);
            for (y, op) in model.operators.iter().enumerate() {
                let nx = op * x;
                let p = model.evaluate(&nx);
                marginal += p;
                let mut seq = history.clone();
                seq.push(y);
                report.sequences_checked += 1;
                report.max_imaginary = report.max_imaginary.max(p.im.abs());
                if p.re < report.min_probability {
                    report.min_probability = p.re;
                    report.min_sequence = seq.clone();
                }
                if p.re < -tol.negative_probability {
                    report.violation_count += 1;
                    if report.violations.len() < MAX_LISTED_VIOLATIONS {
                        report.violations.push((seq.clone(), p.re));
                    }
                }
                next_frontier.push((seq, nx, p));
            }
            report.max_marginal_residual = report.max_marginal_residual.max((marginal - p_hist).norm());
        }
        frontier = next_frontier;
    }
    if report.sequences_checked == 0 {
        report.min_probability = model.evaluate(&model.initial).re;
    }
    Ok(report)
}
