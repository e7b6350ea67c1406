//! Result type shared by every evaluator, and the measure normalizations.

use std::fmt;

use crate::special::sphere_vol;

/// Total mass `Π_{j=0}^{k−1} Vol(S^{n−1−j})` of the iterated-sphere
/// surface measure on `St(n, k)`.
pub fn total_mass(n: usize, k: usize) -> f64 {
    (0..k).map(|j| sphere_vol(n - 1 - j)).product()
}

/// Ratio of the embedded Riemannian volume of `St(n, k) ⊂ ℝ^{n×k}` to the
/// iterated-sphere measure: `2^{k(k−1)/4}`. Each `𝔰𝔬(k)` direction moves
/// two matrix entries at once, so it has Frobenius speed `√2`.
pub fn riemannian_factor(k: usize) -> f64 {
    2f64.powf((k * k.saturating_sub(1)) as f64 / 4.0)
}

/// How a transform value is scaled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Normalization {
    /// Iterated-sphere surface measure, total mass [`total_mass`].
    Surface,
    /// Haar probability, total mass 1.
    Probability,
    /// Volume measure of the embedding in `ℝ^{n×k}`.
    Riemannian,
}

impl Normalization {
    /// Multiplier taking a surface-normalized value to this normalization.
    pub fn factor(self, n: usize, k: usize) -> f64 {
        match self {
            Normalization::Surface => 1.0,
            Normalization::Probability => 1.0 / total_mass(n, k),
            Normalization::Riemannian => riemannian_factor(k),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    MonteCarlo,
    Quadrature,
    StationaryPhase,
    ClosedForm,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::MonteCarlo => "monte-carlo",
            Method::Quadrature => "quadrature",
            Method::StationaryPhase => "stationary-phase",
            Method::ClosedForm => "closed-form",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Statistical standard error or deterministic truncation estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ErrorEstimate {
    Statistical(f64),
    Truncation(f64),
}

impl ErrorEstimate {
    pub fn magnitude(self) -> f64 {
        match self {
            ErrorEstimate::Statistical(e) | ErrorEstimate::Truncation(e) => e,
        }
    }

    pub fn std_error(self) -> Option<f64> {
        match self {
            ErrorEstimate::Statistical(e) => Some(e),
            ErrorEstimate::Truncation(_) => None,
        }
    }

    pub fn trunc_error(self) -> Option<f64> {
        match self {
            ErrorEstimate::Truncation(e) => Some(e),
            ErrorEstimate::Statistical(_) => None,
        }
    }
}

/// A value of the surface-measure transform together with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierEstimate {
    pub value: f64,
    pub error: ErrorEstimate,
    pub method: Method,
    pub samples_or_nodes: u64,
    pub total_mass: f64,
    /// Dispatch and reduction steps that produced the value, in order.
    pub trail: Vec<String>,
}

impl FourierEstimate {
    pub fn new(value: f64, error: ErrorEstimate, method: Method, samples_or_nodes: u64, total_mass: f64) -> Self {
        Self {
            value,
            error,
            method,
            samples_or_nodes,
            total_mass,
            trail: Vec::new(),
        }
    }

    pub fn exact(value: f64, total_mass: f64) -> Self {
        Self::new(value, ErrorEstimate::Truncation(0.0), Method::ClosedForm, 0, total_mass)
    }

    /// Multiplies value, error and total mass by `factor > 0`.
    pub fn scaled(mut self, factor: f64) -> Self {
        self.value *= factor;
        self.total_mass *= factor;
        self.error = match self.error {
            ErrorEstimate::Statistical(e) => ErrorEstimate::Statistical(e * factor.abs()),
            ErrorEstimate::Truncation(e) => ErrorEstimate::Truncation(e * factor.abs()),
        };
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.trail.push(note.into());
        self
    }
}
