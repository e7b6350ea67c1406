//! Leading-order stationary phase and degeneracy diagnostics.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::estimate::{riemannian_factor, total_mass, ErrorEstimate, FourierEstimate, Method};
use crate::geometry::{critical_points, sff_abs_det, signature_formula, SignVector};
use crate::linalg::SingularSpectrum;
use crate::special::sphere_vol;

/// Classification of a spectrum against the two failure modes of the
/// leading-order formula: vanishing and coalescing singular values.
///
/// Indices are 1-based, matching the usual `λ₁ ≥ … ≥ λₖ` labelling.
#[derive(Clone, Debug, PartialEq)]
pub struct DegeneracyReport {
    pub zero_indices: Vec<usize>,
    pub near_pairs: Vec<(usize, usize)>,
    pub usable: bool,
}

impl fmt::Display for DegeneracyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.usable {
            return write!(f, "spectrum is non-degenerate");
        }
        let mut parts = Vec::new();
        if !self.zero_indices.is_empty() {
            let idx: Vec<String> = self.zero_indices.iter().map(|j| j.to_string()).collect();
            parts.push(format!("vanishing singular values at index {}", idx.join(", ")));
        }
        if !self.near_pairs.is_empty() {
            let pairs: Vec<String> = self.near_pairs.iter().map(|(i, j)| format!("({i},{j})")).collect();
            parts.push(format!("coalescing singular values at pair {}", pairs.join(", ")));
        }
        write!(f, "{}", parts.join("; "))
    }
}

/// Flags `λⱼ ≤ tol_zero·λ₁` and `|λᵢ − λⱼ| ≤ tol_gap·λ₁`.
pub fn degeneracy_report(spectrum: &SingularSpectrum, tol_zero: f64, tol_gap: f64) -> DegeneracyReport {
    let l = spectrum.values();
    let top = spectrum.max();
    let zero_indices: Vec<usize> = (0..l.len()).filter(|&j| l[j] <= tol_zero * top).map(|j| j + 1).collect();
    let mut near_pairs = Vec::new();
    for i in 0..l.len() {
        for j in (i + 1)..l.len() {
            if (l[i] - l[j]).abs() <= tol_gap * top {
                near_pairs.push((i + 1, j + 1));
            }
        }
    }
    let usable = zero_indices.is_empty() && near_pairs.is_empty();
    DegeneracyReport {
        zero_indices,
        near_pairs,
        usable,
    }
}

pub const DEFAULT_TOL_ZERO: f64 = 1e-3;
pub const DEFAULT_TOL_GAP: f64 = 1e-3;

/// Constant of the heuristic remainder `C·λ₁^{−(n−k+2)/2}` attached to
/// leading-order values. Fitted as the largest `|exact − leading|·λ₁²` over
/// the `St(4, 2)` sweep `λ = τ·(2, 1)`, `τ = 8, 16, …, 128`, rounded up.
pub const TRUNC_CONSTANT: f64 = 2.5e-3;

/// Which pair factor the amplitude uses: `|sᵢλᵢ + sⱼλⱼ|` (the determinant of
/// the second fundamental form) or `|sᵢλᵢ − sⱼλⱼ|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AmplitudeForm {
    Plus,
    Minus,
}

/// One critical frame's term in the leading-order sum.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalContribution {
    pub sign_vector: SignVector,
    /// `Σⱼ sⱼλⱼ`, the phase value `Tr(X_sᵀΞ)` at the critical frame.
    pub critical_value: f64,
    /// `Σⱼ sⱼ(λⱼ − (n−j)/8)`, in cycles.
    pub phase_cycles: f64,
    /// `abs_det^{−1/2}`.
    pub amplitude: f64,
    pub signature: i64,
    pub abs_det: f64,
}

fn minus_abs_det(s: &SignVector, spectrum: &SingularSpectrum) -> Result<f64> {
    let n = spectrum.ambient_n();
    let k = spectrum.frame_k();
    let l = spectrum.values();
    let mut det = 2f64.powi(-((k * k.saturating_sub(1) / 2) as i32));
    det *= l.iter().product::<f64>().powi((n - k) as i32);
    for i in 0..k {
        for j in (i + 1)..k {
            let pair = (s.get(i) * l[i] - s.get(j) * l[j]).abs();
            if pair <= 1e-14 * spectrum.max() {
                return Err(Error::DegeneratePair(format!(
                    "minus-form pair ({}, {}) vanishes",
                    i + 1,
                    j + 1
                )));
            }
            det *= pair;
        }
    }
    Ok(det)
}

/// The `2ᵏ` critical contributions, in [`SignVector::all`] order.
pub fn critical_contributions(spectrum: &SingularSpectrum, form: AmplitudeForm) -> Result<Vec<CriticalContribution>> {
    let n = spectrum.ambient_n();
    let l = spectrum.values();
    critical_points(spectrum)?
        .into_iter()
        .map(|(s, _)| {
            let abs_det = match form {
                AmplitudeForm::Plus => sff_abs_det(&s, spectrum)?,
                AmplitudeForm::Minus => minus_abs_det(&s, spectrum)?,
            };
            let critical_value = (0..l.len()).map(|j| s.get(j) * l[j]).sum();
            let phase_cycles = (0..l.len())
                .map(|j| s.get(j) * (l[j] - (n - j - 1) as f64 / 8.0))
                .sum();
            Ok(CriticalContribution {
                signature: signature_formula(&s, n),
                sign_vector: s,
                critical_value,
                phase_cycles,
                amplitude: abs_det.powf(-0.5),
                abs_det,
            })
        })
        .collect()
}

/// Leading stationary-phase term of `∫ e^{2πiτφ} dμ` over an
/// `m`-dimensional manifold with nondegenerate critical points, real part:
/// `τ^{−m/2} Σ cos(2π(τ·phase + sig/8)) |det|^{−1/2}`.
///
/// Each contribution is `(phase, signature, abs_det)`.
pub fn stationary_phase_kernel(m: usize, contributions: &[(f64, i64, f64)], tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    let mut sum = 0.0;
    for (idx, &(phase, sig, abs_det)) in contributions.iter().enumerate() {
        if !(abs_det > 0.0) {
            return Err(Error::DegeneratePair(format!(
                "contribution {idx} has |det| = {abs_det}"
            )));
        }
        sum += (2.0 * PI * (tau * phase + sig as f64 / 8.0)).cos() / abs_det.sqrt();
    }
    Ok(tau.powf(-(m as f64) / 2.0) * sum)
}

/// Leading-order value of the surface-measure transform at a
/// non-degenerate spectrum, using the plus-form amplitude.
pub fn stationary_phase_leading(spectrum: &SingularSpectrum) -> Result<FourierEstimate> {
    stationary_phase_with_form(spectrum, AmplitudeForm::Plus)
}

/// [`stationary_phase_leading`] with a chosen amplitude form.
///
/// The value is `2^{−k(k−1)/4} Σ_s cos(2π Σⱼ sⱼ(λⱼ − (n−j)/8)) |det|^{−1/2}`;
/// the power of two converts from the embedded volume to the iterated-sphere
/// measure.
pub fn stationary_phase_with_form(spectrum: &SingularSpectrum, form: AmplitudeForm) -> Result<FourierEstimate> {
    let report = degeneracy_report(spectrum, DEFAULT_TOL_ZERO, DEFAULT_TOL_GAP);
    if spectrum.frame_k() == 0 {
        return Err(Error::Domain("stationary phase needs k >= 1".into()));
    }
    if !report.usable {
        return Err(Error::Degenerate(report));
    }
    let n = spectrum.ambient_n();
    let k = spectrum.frame_k();
    let terms = critical_contributions(spectrum, form)?;
    let sum: f64 = terms
        .iter()
        .map(|c| (2.0 * PI * c.phase_cycles).cos() * c.amplitude)
        .sum();
    let value = sum / riemannian_factor(k);
    let trunc = TRUNC_CONSTANT * spectrum.max().powf(-((n - k + 2) as f64) / 2.0);
    let mut est = FourierEstimate::new(
        value,
        ErrorEstimate::Truncation(trunc),
        Method::StationaryPhase,
        terms.len() as u64,
        total_mass(n, k),
    );
    if form == AmplitudeForm::Minus {
        est.trail.push("minus-form amplitude".into());
    }
    Ok(est)
}

/// Outcome of integrating out the columns paired with vanishing singular
/// values.
#[derive(Clone, Debug, PartialEq)]
pub struct Reduction {
    /// Number of retained singular values.
    pub k0: usize,
    /// `Π_{j=k0+1}^{k} Vol(S^{n−j})`.
    pub prefactor: f64,
    /// `(λ₁, …, λ_{k0})`, same ambient dimension.
    pub reduced: SingularSpectrum,
}

/// Drops singular values `≤ tol_zero·max(λ₁, 1)`; the transform at the full
/// spectrum equals `prefactor` times the `St(n, k0)` transform at `reduced`.
pub fn reduce_zero_singulars(spectrum: &SingularSpectrum, tol_zero: f64) -> Reduction {
    let n = spectrum.ambient_n();
    let k = spectrum.frame_k();
    let cut = tol_zero * spectrum.max().max(1.0);
    let k0 = spectrum.values().iter().take_while(|&&l| l > cut).count();
    let prefactor = ((k0 + 1)..=k).map(|j| sphere_vol(n - j)).product();
    let reduced = SingularSpectrum::new(n, spectrum.values()[..k0].to_vec())
        .expect("prefix of a valid spectrum is valid");
    Reduction { k0, prefactor, reduced }
}
