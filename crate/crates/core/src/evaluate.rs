//! Method selection: SVD, removal of vanishing singular values, then the
//! cheapest evaluator whose preconditions hold.

use std::fmt;
use std::str::FromStr;

use crate::asymptotics::{
    degeneracy_report, reduce_zero_singulars, stationary_phase_leading, DEFAULT_TOL_GAP, DEFAULT_TOL_ZERO,
};
use crate::error::{Error, Result};
use crate::estimate::{total_mass, FourierEstimate};
use crate::exact::{k2_closed_form_n4, k2_quadrature, recursive_quadrature, QuadratureSpec};
use crate::haar::mc_fourier;
use crate::linalg::{svd, Matrix, SingularSpectrum};
use crate::special::sphere_hat;

/// Evaluator requested by the caller.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MethodChoice {
    Auto,
    MonteCarlo,
    Quadrature,
    Recursive,
    Asymptotic,
    ClosedForm,
}

impl MethodChoice {
    pub const ALL_CONCRETE: [MethodChoice; 5] = [
        MethodChoice::ClosedForm,
        MethodChoice::Quadrature,
        MethodChoice::Recursive,
        MethodChoice::MonteCarlo,
        MethodChoice::Asymptotic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodChoice::Auto => "auto",
            MethodChoice::MonteCarlo => "mc",
            MethodChoice::Quadrature => "quadrature",
            MethodChoice::Recursive => "recursive",
            MethodChoice::Asymptotic => "asymptotic",
            MethodChoice::ClosedForm => "closed-form",
        }
    }
}

impl fmt::Display for MethodChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => MethodChoice::Auto,
            "mc" | "monte-carlo" => MethodChoice::MonteCarlo,
            "quadrature" => MethodChoice::Quadrature,
            "recursive" => MethodChoice::Recursive,
            "asymptotic" | "stationary-phase" => MethodChoice::Asymptotic,
            "closed-form" => MethodChoice::ClosedForm,
            other => return Err(Error::Domain(format!("unknown method {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub tol_zero: f64,
    pub tol_gap: f64,
    /// Smallest `min(λᵢ − λᵢ₊₁, λ_k)` for which stationary phase is trusted.
    pub asymptotic_threshold: f64,
    /// Recursive `k = 3` quadrature is attempted only for `n` up to this.
    pub recursive_max_n: usize,
    /// ... and only while `λ₁` stays below this.
    pub recursive_max_lambda: f64,
    pub samples: u64,
    pub seed: u64,
    pub quadrature: QuadratureSpec,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            tol_zero: DEFAULT_TOL_ZERO,
            tol_gap: DEFAULT_TOL_GAP,
            asymptotic_threshold: 4.0,
            recursive_max_n: 8,
            recursive_max_lambda: 40.0,
            samples: 1_000_000,
            seed: 0,
            quadrature: QuadratureSpec::default(),
        }
    }
}

fn format_values(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("({})", parts.join(", "))
}

/// Transform at an arbitrary `n × k` frequency matrix.
pub fn evaluate_auto(n: usize, k: usize, xi: &Matrix, config: &EvalConfig) -> Result<FourierEstimate> {
    evaluate_matrix(n, k, xi, MethodChoice::Auto, config)
}

/// Transform at `Ξ` with a chosen evaluator.
pub fn evaluate_matrix(n: usize, k: usize, xi: &Matrix, method: MethodChoice, config: &EvalConfig) -> Result<FourierEstimate> {
    if xi.shape() != (n, k) {
        return Err(Error::Dimension {
            expected: (n, k),
            got: xi.shape(),
        });
    }
    let spectrum = svd(xi)?.spectrum;
    let mut est = evaluate_spectrum(&spectrum, method, config)?;
    est.trail.insert(0, format!("svd: singular values {}", format_values(spectrum.values())));
    Ok(est)
}

fn reduced_label(k0: usize, k: usize, prefactor: f64) -> String {
    if k0 == k {
        "reduction: no vanishing singular values".into()
    } else {
        format!("reduction: {} vanishing singular value(s) integrated out, prefactor {prefactor}", k - k0)
    }
}

/// Transform at the rectangular-diagonal matrix carrying `spectrum`.
pub fn evaluate_spectrum(spectrum: &SingularSpectrum, method: MethodChoice, config: &EvalConfig) -> Result<FourierEstimate> {
    let n = spectrum.ambient_n();
    let k = spectrum.frame_k();
    if k == 0 {
        return Err(Error::Domain("frame size k must be at least 1".into()));
    }
    let mass = total_mass(n, k);
    let red = reduce_zero_singulars(spectrum, config.tol_zero);
    let k0 = red.k0;
    let l = red.reduced.values().to_vec();
    let mut trail = vec![reduced_label(k0, k, red.prefactor)];

    let closed_form = || -> Option<Result<f64>> {
        match k0 {
            0 => Some(Ok(1.0)),
            1 => Some(sphere_hat(n, l[0])),
            2 if n == 4 => Some(k2_closed_form_n4(l[0], l[1])),
            _ => None,
        }
    };
    let lift = |est: FourierEstimate| -> FourierEstimate {
        let mut est = est.scaled(red.prefactor);
        est.total_mass = mass;
        est
    };

    let chosen = match method {
        MethodChoice::Auto => auto_choice(spectrum, k0, &red.reduced, config, &mut trail),
        other => other,
    };
    let est = match chosen {
        MethodChoice::ClosedForm => {
            let value = closed_form().ok_or_else(|| {
                Error::Unsupported(format!(
                    "no closed form for St({n}, {k0}); closed forms cover k <= 1 and St(4, 2)"
                ))
            })??;
            trail.push(format!("closed form on St({n}, {k0})"));
            lift(FourierEstimate::exact(value, 1.0))
        }
        MethodChoice::Quadrature => {
            if k0 != 2 {
                return Err(Error::Unsupported(format!(
                    "Bessel quadrature needs exactly two nonzero singular values, got {k0}"
                )));
            }
            trail.push(format!("Bessel quadrature on St({n}, 2)"));
            lift(k2_quadrature(n, l[0], l[1], &config.quadrature)?)
        }
        MethodChoice::Recursive => {
            trail.push(format!("recursive sphere quadrature on St({n}, {k0})"));
            lift(recursive_quadrature(&red.reduced, &config.quadrature)?)
        }
        MethodChoice::Asymptotic => {
            trail.push("leading-order stationary phase".into());
            stationary_phase_leading(spectrum)?
        }
        MethodChoice::MonteCarlo => {
            trail.push(format!("Monte Carlo, {} samples, seed {}", config.samples, config.seed));
            mc_fourier(n, k, &spectrum.to_matrix(), config.samples, config.seed)?
        }
        MethodChoice::Auto => unreachable!("auto resolves to a concrete method"),
    };
    let mut est = est;
    trail.append(&mut est.trail);
    est.trail = trail;
    Ok(est)
}

fn auto_choice(
    full: &SingularSpectrum,
    k0: usize,
    reduced: &SingularSpectrum,
    config: &EvalConfig,
    trail: &mut Vec<String>,
) -> MethodChoice {
    let n = full.ambient_n();
    if k0 <= 1 || (n == 4 && k0 == 2) {
        trail.push("dispatch: closed form available".into());
        return MethodChoice::ClosedForm;
    }
    if k0 == 2 {
        trail.push("dispatch: two nonzero singular values, Bessel quadrature".into());
        return MethodChoice::Quadrature;
    }
    if k0 == 3 {
        if n <= config.recursive_max_n && reduced.max() <= config.recursive_max_lambda {
            trail.push("dispatch: three nonzero singular values within the recursive quadrature caps".into());
            return MethodChoice::Recursive;
        }
        trail.push(format!(
            "dispatch: recursive quadrature skipped (n = {n} vs cap {}, λ₁ = {} vs cap {})",
            config.recursive_max_n,
            reduced.max(),
            config.recursive_max_lambda
        ));
    }
    let report = degeneracy_report(full, config.tol_zero, config.tol_gap);
    if report.usable {
        let l = full.values();
        let min_gap = l
            .windows(2)
            .map(|w| w[0] - w[1])
            .chain(l.last().copied())
            .fold(f64::INFINITY, f64::min);
        if min_gap >= config.asymptotic_threshold {
            trail.push(format!("dispatch: non-degenerate, smallest separation {min_gap} >= {}", config.asymptotic_threshold));
            return MethodChoice::Asymptotic;
        }
        trail.push(format!(
            "dispatch: smallest separation {min_gap} below the asymptotic threshold {}",
            config.asymptotic_threshold
        ));
    } else {
        trail.push(format!("dispatch: stationary phase refused: {report}"));
    }
    trail.push("dispatch: falling back to Monte Carlo".into());
    MethodChoice::MonteCarlo
}

/// Which evaluators accept this spectrum, without running them.
pub fn applicable_methods(spectrum: &SingularSpectrum, config: &EvalConfig) -> Vec<MethodChoice> {
    let n = spectrum.ambient_n();
    let k0 = reduce_zero_singulars(spectrum, config.tol_zero).k0;
    let mut out = Vec::new();
    if k0 <= 1 || (n == 4 && k0 == 2) {
        out.push(MethodChoice::ClosedForm);
    }
    if k0 == 2 {
        out.push(MethodChoice::Quadrature);
    }
    if k0 <= 3 && n > k0 {
        out.push(MethodChoice::Recursive);
    }
    out.push(MethodChoice::MonteCarlo);
    if degeneracy_report(spectrum, config.tol_zero, config.tol_gap).usable {
        out.push(MethodChoice::Asymptotic);
    }
    out
}
