//! Self-check suite: each check recomputes a quantity two independent ways
//! and reports the discrepancy against a fixed tolerance.

use std::f64::consts::PI;

use crate::asymptotics::{critical_contributions, stationary_phase_kernel, stationary_phase_with_form, AmplitudeForm};
use crate::error::Result;
use crate::estimate::riemannian_factor;
use crate::exact::{k2_closed_form_n4, k2_quadrature, random_walk_form, recursive_quadrature, QuadratureSpec};
use crate::geometry::{
    assemble_sff_pairing, normal_project, second_fundamental_form, sff_abs_det,
    sff_by_projector_derivative, sff_by_retraction_polarized, signature_formula, stiefel_dim, tangent_project,
    SignVector,
};
use crate::haar::{mc_fourier, sample_stiefel, StreamRng};
use crate::linalg::{frobenius_pairing, sym_eigen, Matrix, SingularSpectrum};
use crate::special::sphere_hat;

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Observed discrepancy (or statistic) and the bound it was held to.
    pub observed: f64,
    pub bound: f64,
}

impl CheckResult {
    fn new(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            passed: observed <= bound,
            observed,
            bound,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn failed(&self) -> usize {
        self.checks.len() - self.passed()
    }

    fn push(&mut self, c: CheckResult) {
        self.checks.push(c);
    }
}

/// Worst discrepancies of the second-fundamental-form oracles over random
/// tangent pairs at random Haar points.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GeometryCheck {
    /// `max |(∂_A P)(B) − II(A, B)|`, entrywise.
    pub projector_oracle: f64,
    /// `max |retraction oracle − II(A, B)|`, entrywise.
    pub retraction_oracle: f64,
    /// `max |projector oracle − retraction oracle|`, entrywise.
    pub mutual: f64,
    /// Worst of `‖P²A − PA‖`, `‖PA + P⊥A − A‖`, `|⟨PA, P⊥B⟩|`.
    pub projector_algebra: f64,
}

pub fn geometry_check(n: usize, k: usize, points: usize, pairs: usize, seed: u64) -> Result<GeometryCheck> {
    let mut rng = StreamRng::new(seed, 0);
    let mut out = GeometryCheck::default();
    for _ in 0..points {
        let x = sample_stiefel(n, k, &mut rng)?;
        for _ in 0..pairs {
            let ra = Matrix::from_fn(n, k, |_, _| rng.normal());
            let rb = Matrix::from_fn(n, k, |_, _| rng.normal());
            let a = tangent_project(&x, &ra)?;
            let b = tangent_project(&x, &rb)?;
            let exact = second_fundamental_form(&x, &a, &b)?;
            let proj = sff_by_projector_derivative(&x, &a, &b, 1e-3)?;
            let retr = sff_by_retraction_polarized(&x, &a, &b, 1e-4)?;
            out.projector_oracle = out.projector_oracle.max((&proj - &exact).max_abs());
            out.retraction_oracle = out.retraction_oracle.max((&retr - &exact).max_abs());
            out.mutual = out.mutual.max((&proj - &retr).max_abs());

            let pa = a.clone();
            let ppa = tangent_project(&x, &pa)?;
            let npa = normal_project(&x, &ra)?;
            let nb = normal_project(&x, &rb)?;
            let algebra = (&ppa - &pa)
                .frobenius_norm()
                .max((&(&pa + &npa) - &ra).frobenius_norm())
                .max(frobenius_pairing(&pa, &nb)?.abs());
            out.projector_algebra = out.projector_algebra.max(algebra);
        }
    }
    Ok(out)
}

/// Signature and `|det|` formulas against the eigen-decomposition of the
/// entrywise-assembled pairing. Returns (signature mismatches, worst
/// relative determinant error).
pub fn formula_check(spectrum: &SingularSpectrum) -> Result<(usize, f64)> {
    let n = spectrum.ambient_n();
    let mut mismatches = 0;
    let mut worst = 0.0f64;
    for s in SignVector::all(spectrum.frame_k()) {
        let m = assemble_sff_pairing(&s, spectrum)?.matrix;
        let eig = sym_eigen(&m)?.values;
        let pos = eig.iter().filter(|&&v| v > 0.0).count() as i64;
        let neg = eig.iter().filter(|&&v| v < 0.0).count() as i64;
        if pos - neg != signature_formula(&s, n) || (pos + neg) as usize != m.rows() {
            mismatches += 1;
        }
        let det: f64 = eig.iter().product::<f64>().abs();
        let formula = sff_abs_det(&s, spectrum)?;
        worst = worst.max((det - formula).abs() / formula);
    }
    Ok((mismatches, worst))
}

/// One row of the amplitude-sign experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct SignRow {
    pub n: usize,
    pub tau: f64,
    pub exact: f64,
    pub plus: f64,
    pub minus: f64,
}

impl SignRow {
    pub fn rel_plus(&self) -> f64 {
        ((self.exact - self.plus) / self.exact).abs()
    }

    pub fn rel_minus(&self) -> f64 {
        ((self.exact - self.minus) / self.exact).abs()
    }
}

/// Leading-order values with both amplitude forms against the exact
/// `St(n, 2)` transform along `λ = τ·(2, 1)`.
///
/// With integer `τ` on `St(5, 2)` the two critical phases have equal
/// cosines and the forms coincide, so callers pick `offset` (e.g. `1/8`)
/// to separate them there.
pub fn sign_check(n: usize, taus: &[f64], offset: f64) -> Result<Vec<SignRow>> {
    let q = QuadratureSpec::default();
    taus.iter()
        .map(|&t| {
            let tau = t + offset;
            let spec = SingularSpectrum::new(n, vec![2.0 * tau, tau])?;
            let exact = if n == 4 {
                k2_closed_form_n4(2.0 * tau, tau)?
            } else {
                k2_quadrature(n, 2.0 * tau, tau, &q)?.value
            };
            Ok(SignRow {
                n,
                tau,
                exact,
                plus: stationary_phase_with_form(&spec, AmplitudeForm::Plus)?.value,
                minus: stationary_phase_with_form(&spec, AmplitudeForm::Minus)?.value,
            })
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Runs the check suite. `quick` keeps to deterministic checks that finish
/// in well under a second; the full suite adds Monte Carlo and `k = 3`
/// quadrature.
pub fn run_suite(quick: bool) -> Result<VerifyReport> {
    let mut r = VerifyReport::default();
    let q = QuadratureSpec::default();

    for (n, k) in [(3, 2), (4, 2), (5, 3)] {
        let g = geometry_check(n, k, if quick { 2 } else { 5 }, if quick { 5 } else { 20 }, 1)?;
        r.push(CheckResult::new(format!("projector-derivative oracle St({n},{k})"), g.projector_oracle, 1e-5));
        r.push(CheckResult::new(format!("retraction oracle St({n},{k})"), g.retraction_oracle, 1e-5));
        r.push(CheckResult::new(format!("oracle agreement St({n},{k})"), g.mutual, 1e-5));
        r.push(CheckResult::new(format!("projector algebra St({n},{k})"), g.projector_algebra, 1e-12));
    }

    for (n, vals) in [(4, vec![2.0, 1.0]), (5, vec![2.3, 0.9]), (5, vec![3.1, 1.7, 0.6]), (6, vec![2.9, 1.4, 0.8])] {
        let spec = SingularSpectrum::new(n, vals)?;
        let (mism, det) = formula_check(&spec)?;
        let k = spec.frame_k();
        r.push(CheckResult::new(format!("signature formula St({n},{k})"), mism as f64, 0.0));
        r.push(CheckResult::new(format!("determinant formula St({n},{k})"), det, 1e-10));
    }

    for (n, base) in [(4, vec![2.0, 1.0]), (5, vec![3.0, 2.0, 1.0])] {
        let spec = SingularSpectrum::new(n, base)?;
        let k = spec.frame_k();
        let terms: Vec<(f64, i64, f64)> = critical_contributions(&spec, AmplitudeForm::Plus)?
            .iter()
            .map(|c| (c.critical_value, c.signature, c.abs_det))
            .collect();
        let mut worst = 0.0f64;
        for tau in [2.0, 10.0, 50.0] {
            let lead = stationary_phase_with_form(&spec.scaled(tau), AmplitudeForm::Plus)?.value;
            let kern = stationary_phase_kernel(stiefel_dim(n, k), &terms, tau)? / riemannian_factor(k);
            worst = worst.max((lead - kern).abs() / kern.abs());
        }
        r.push(CheckResult::new(format!("kernel consistency St({n},{k})"), worst, 1e-12));
    }

    let mut worst = 0.0f64;
    for &a in &[0.5, 1.0, 2.0, 5.0] {
        for &b in &[0.5, 1.0, 2.0, 5.0] {
            worst = worst.max((k2_quadrature(4, a, b, &q)?.value - k2_closed_form_n4(a, b)?).abs());
        }
    }
    r.push(CheckResult::new("closed form vs quadrature St(4,2)", worst, 1e-8));

    let sphere = (sphere_hat(3, 1.0)?).abs().max((sphere_hat(3, 0.25)? - 8.0).abs());
    r.push(CheckResult::new("sphere transform closed forms", sphere, 1e-12));

    let rows = sign_check(4, &[64.0], 0.0)?;
    let sep = rows[0].rel_minus() / rows[0].rel_plus();
    r.push(CheckResult::new("amplitude sign separation at tau=64 (inverse ratio)", 1.0 / sep, 0.1));

    if !quick {
        let mut worst = 0.0f64;
        for (n, a, b) in [(3, 1.0, 1.0), (5, 2.0, 0.5), (4, 5.0, 2.0)] {
            worst = worst.max((random_walk_form(n, a, b, &q)? - k2_quadrature(n, a, b, &q)?.value).abs());
        }
        r.push(CheckResult::new("random-walk rewriting", worst, 1e-8));

        let spec = SingularSpectrum::new(5, vec![2.0, 1.0, 0.0])?;
        let full = recursive_quadrature(&spec, &q.with_tol(1e-10))?.value;
        let red = recursive_quadrature(&SingularSpectrum::new(5, vec![2.0, 1.0])?, &q.with_tol(1e-10))?.value;
        r.push(CheckResult::new("zero-column reduction (quadrature)", (full - 4.0 * PI * red).abs(), 1e-6));

        for (n, rad) in [(3, 0.5), (4, 1.0), (5, 2.0)] {
            let xi = Matrix::rect_diag(n, &[rad]);
            let est = mc_fourier(n, 1, &xi, 200_000, 7)?;
            let z = (est.value - sphere_hat(n, rad)?).abs() / est.error.magnitude();
            r.push(CheckResult::new(format!("Monte Carlo sphere n={n} r={rad} (std errors)"), z, 3.0));
        }
        let spec = SingularSpectrum::new(5, vec![1.0, 1.0, 1.0])?;
        let exact = recursive_quadrature(&spec, &q.with_tol(1e-10))?.value;
        let est = mc_fourier(5, 3, &spec.to_matrix(), 200_000, 8)?;
        let z = (est.value - exact).abs() / est.error.magnitude();
        r.push(CheckResult::new("Monte Carlo vs recursive St(5,3) (std errors)", z, 3.0));
    }
    Ok(r)
}
