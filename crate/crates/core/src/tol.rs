//! Numerical tolerances shared by validators, filters and tests.

/// One record holding every tolerance used for validity checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// ‖ρ − ρ†‖_F for density matrices.
    pub hermitian: f64,
    /// Lowest admissible eigenvalue (as `-psd`) for density matrices.
    pub psd: f64,
    /// |tr ρ − 1|.
    pub trace: f64,
    /// ‖κ†κ − I‖_F for Stiefel points and Kraus completeness.
    pub stiefel: f64,
    /// Column sums of stochastic matrices and belief vectors.
    pub stochastic: f64,
    /// Channel checks (TP residual, Choi hermiticity and positivity).
    pub channel: f64,
    /// Largest imaginary part tolerated when extracting a probability.
    pub imaginary: f64,
    /// Probabilities below `-negative_probability` are reported as violations.
    pub negative_probability: f64,
    /// Normalizers below this raise a zero-probability error.
    pub underflow: f64,
    /// Relative singular-value cutoff for Kraus rank.
    pub kraus_rank: f64,
    /// ‖v‖₂ = 1 for NOOM states.
    pub unit_norm: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        hermitian: 1e-10,
        psd: 1e-10,
        trace: 1e-10,
        stiefel: 1e-8,
        stochastic: 1e-10,
        channel: 1e-8,
        imaginary: 1e-9,
        negative_probability: 1e-9,
        underflow: 1e-300,
        kraus_rank: 1e-10,
        unit_norm: 1e-10,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
