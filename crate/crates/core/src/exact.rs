//! Deterministic evaluators of the surface-measure transform for `k ≤ 3`:
//! Bessel quadrature for `k = 2`, the closed form on `St(4, 2)`, the
//! two-step random-walk rewriting, and recursive sphere quadrature.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::{total_mass, ErrorEstimate, FourierEstimate, Method};
use crate::haar::pool;
use crate::linalg::SingularSpectrum;
use crate::quadrature::{composite_nodes, GaussLegendre};
use crate::special::{bessel_j, bessel_j_over_arg, sphere_hat, sphere_vol, BesselOrder};

/// Discretization settings for the quadrature evaluators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    /// Gauss–Legendre nodes per panel, at least 8.
    pub node_count: usize,
    /// Starting panel count; `None` scales it with the frequencies.
    pub panel_count: Option<usize>,
    /// Relative tolerance on successive refinements.
    pub target_tol: f64,
    /// Refinement stops with an accuracy error beyond this many panels.
    pub max_panels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            node_count: 16,
            panel_count: None,
            target_tol: 1e-12,
            max_panels: 1 << 14,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.target_tol = tol;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.node_count < 8 {
            return Err(Error::Domain(format!("node_count must be >= 8, got {}", self.node_count)));
        }
        if self.panel_count == Some(0) {
            return Err(Error::Domain("panel_count must be >= 1".into()));
        }
        if !(self.target_tol > 0.0) {
            return Err(Error::Domain(format!("target_tol must be positive, got {}", self.target_tol)));
        }
        Ok(())
    }

    fn start_panels(&self, auto: usize) -> usize {
        self.panel_count.unwrap_or(auto).max(1)
    }
}

/// Result of a refinement loop: value, last difference, nodes used.
struct Refined {
    value: f64,
    diff: f64,
    nodes: u64,
}

/// Doubles the resolution `level` until two successive values agree to
/// `tol·max(1, |value|)`.
fn refine(spec: &QuadratureSpec, start: usize, mut eval: impl FnMut(usize) -> Result<(f64, u64)>) -> Result<Refined> {
    let mut panels = start;
    let (mut prev, _) = eval(panels)?;
    loop {
        let next_panels = panels * 2;
        let (value, nodes) = eval(next_panels)?;
        let diff = (value - prev).abs();
        if diff <= spec.target_tol * value.abs().max(1.0) {
            return Ok(Refined { value, diff, nodes });
        }
        if next_panels * 2 > spec.max_panels {
            return Err(Error::Accuracy {
                message: format!("refinement stalled at {next_panels} panels (difference {diff:e})"),
                best: value,
            });
        }
        panels = next_panels;
        prev = value;
    }
}

fn check_freq(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::Domain(format!("{name} must be finite and >= 0, got {v}")));
    }
    Ok(())
}

/// Sum of `f` over nodes, evaluated in parallel and added in node order.
fn ordered_sum(nodes: &[(f64, f64)], f: impl Fn(f64) -> Result<f64> + Sync) -> Result<f64> {
    let terms: Vec<Result<f64>> = pool().install(|| nodes.par_iter().map(|&(x, w)| Ok(w * f(x)?)).collect());
    let mut sum = 0.0;
    for t in terms {
        sum += t?;
    }
    Ok(sum)
}

fn k2_integral(n: usize, kappa: f64, lambda: f64, rule: &GaussLegendre, panels: usize) -> Result<f64> {
    let nodes = composite_nodes(rule, 0.0, FRAC_PI_2, panels);
    let half = ordered_sum(&nodes, |theta| {
        let s = theta.sin();
        Ok(s.powi(n as i32 - 2) * sphere_hat(n - 1, kappa * s)? * sphere_hat(n - 1, lambda * s)?)
    })?;
    Ok(2.0 * half)
}

/// `St(n, 2)` transform at singular values `(κ, λ)`:
/// `∫₋₁¹ σ̂(κ√(1−t²)) σ̂(λ√(1−t²)) (1−t²)^{(n−3)/2} dt`, with `σ̂` the
/// transform of `S^{n−2}`.
///
/// Integrated in `t = cos θ` over `θ ∈ [0, π/2]` (the integrand is even in
/// `t`), where the oscillation is spread evenly instead of crowding the
/// endpoints.
pub fn k2_quadrature(n: usize, kappa: f64, lambda: f64, spec: &QuadratureSpec) -> Result<FourierEstimate> {
    if n < 3 {
        return Err(Error::Domain(format!("St(n, 2) needs n >= 3, got {n}")));
    }
    check_freq("kappa", kappa)?;
    check_freq("lambda", lambda)?;
    spec.validate()?;
    let rule = GaussLegendre::new(spec.node_count);
    let auto = 8usize.max((4.0 * (kappa + lambda)).ceil() as usize);
    let r = refine(spec, spec.start_panels(auto), |panels| {
        Ok((k2_integral(n, kappa, lambda, &rule, panels)?, (panels * spec.node_count) as u64))
    })?;
    Ok(FourierEstimate::new(
        r.value,
        ErrorEstimate::Truncation(r.diff),
        Method::Quadrature,
        r.nodes,
        total_mass(n, 2),
    ))
}

const ADDITION_CUTOFF: f64 = 0.25;
const ADDITION_TERMS: u32 = 25;

/// Closed form on `St(4, 2)`:
/// `(2π/(κλ)) [J₀(2π(κ−λ)) − J₀(2π(κ+λ))]`.
///
/// When `min(κ, λ) < 1/4` the bracket is expanded with Neumann's addition
/// theorem, `J₀(x−δ) − J₀(x+δ) = 4 Σ_{m odd} J_m(x) J_m(δ)`, whose terms
/// divide by `κλ` without cancellation; this also covers `κ = 0` or `λ = 0`.
pub fn k2_closed_form_n4(kappa: f64, lambda: f64) -> Result<f64> {
    check_freq("kappa", kappa)?;
    check_freq("lambda", lambda)?;
    let (big, small) = if kappa >= lambda { (kappa, lambda) } else { (lambda, kappa) };
    if small < ADDITION_CUTOFF {
        let mut sum = 0.0;
        for m in (1..=ADDITION_TERMS).step_by(2) {
            let jb = if big < ADDITION_CUTOFF {
                bessel_j_over_arg(m, big)
            } else {
                bessel_j(BesselOrder::integer(m), 2.0 * PI * big)? / big
            };
            sum += jb * bessel_j_over_arg(m, small);
        }
        return Ok(8.0 * PI * sum);
    }
    let j0 = |t: f64| bessel_j(BesselOrder::integer(0), t);
    let bracket = j0(2.0 * PI * (kappa - lambda).abs())? - j0(2.0 * PI * (kappa + lambda))?;
    Ok(2.0 * PI / (kappa * lambda) * bracket)
}

/// The `St(n, 2)` transform rewritten through a two-step random walk in
/// `ℝ^{n−1}`: the product `σ̃(κs)σ̃(λs)` of normalized sphere transforms is
/// the transform of the law of `κu + λv` for independent uniform unit
/// vectors, i.e. the average of `σ̃(sR)` over the step angle `ψ`, with
/// `R² = κ² + λ² + 2κλ cos ψ` and angle density `∝ sin^{n−3} ψ`.
pub fn random_walk_form(n: usize, kappa: f64, lambda: f64, spec: &QuadratureSpec) -> Result<f64> {
    if n < 3 {
        return Err(Error::Domain(format!("St(n, 2) needs n >= 3, got {n}")));
    }
    check_freq("kappa", kappa)?;
    check_freq("lambda", lambda)?;
    spec.validate()?;
    let d = n - 1;
    let vol = sphere_vol(d - 1);
    // ∫₀^π sin^{d−2}ψ dψ
    let angle_mass = sphere_vol(d - 1) / sphere_vol(d - 2);
    let rule = GaussLegendre::new(spec.node_count);
    let auto = 8usize.max((4.0 * (kappa + lambda)).ceil() as usize);
    let diff2 = (kappa - lambda).powi(2);
    let r = refine(spec, spec.start_panels(auto), |panels| {
        let psi_nodes = composite_nodes(&rule, 0.0, PI, panels);
        let theta_nodes = composite_nodes(&rule, 0.0, FRAC_PI_2, panels);
        let half = ordered_sum(&theta_nodes, |theta| {
            let s = theta.sin();
            let mut walk = 0.0;
            for &(psi, w) in &psi_nodes {
                let c = (0.5 * psi).cos();
                let radius = (diff2 + 4.0 * kappa * lambda * c * c).sqrt();
                walk += w * psi.sin().powi(d as i32 - 2) * sphere_hat(d, s * radius)?;
            }
            Ok(s.powi(n as i32 - 2) * walk / (angle_mass * vol))
        })?;
        Ok((2.0 * vol * vol * half, (panels * panels * spec.node_count * spec.node_count) as u64))
    })?;
    Ok(r.value)
}

/// Exact evaluation for `k ≤ 3` by integrating the first column over
/// `S^{n−1}` and recursing on the frames orthogonal to it.
///
/// * `k = 1`: the sphere transform.
/// * `k = 2`: product rule on `S^{n−1}` in the two polar angles that fix
///   `x₁₁` and `x₁₂`; the inner factor is the `S^{n−2}` transform at
///   `λ₂√(1 − x₁₂²)`.
/// * `k = 3`: `(x₁₂, x₁₃) = sin θ (cos φ, sin φ)` and the fiber over it is a
///   sphere of radius `cos θ` carrying `x₁₁`, integrated in closed form; the
///   inner factor is the `St(n−1, 2)` transform at the singular values of
///   the remaining two columns projected onto `x₁^⊥`.
pub fn recursive_quadrature(spectrum: &SingularSpectrum, spec: &QuadratureSpec) -> Result<FourierEstimate> {
    spec.validate()?;
    let n = spectrum.ambient_n();
    let k = spectrum.frame_k();
    let l = spectrum.values();
    let mass = total_mass(n, k);
    match k {
        0 => Ok(FourierEstimate::exact(1.0, 1.0)),
        1 => {
            let mut est = FourierEstimate::exact(sphere_hat(n, l[0])?, mass);
            est.method = Method::Quadrature;
            Ok(est)
        }
        2 if n >= 3 => recursive_k2(n, l[0], l[1], spec),
        3 if n >= 4 => recursive_k3(n, l[0], l[1], l[2], spec),
        2 | 3 => Err(Error::Domain(format!("recursive quadrature needs n >= k + 1, got n = {n}, k = {k}"))),
        _ => Err(Error::Unsupported(format!("recursive quadrature is limited to k <= 3, got k = {k}"))),
    }
}

fn recursive_k2(n: usize, l1: f64, l2: f64, spec: &QuadratureSpec) -> Result<FourierEstimate> {
    let rule = GaussLegendre::new(spec.node_count);
    let fiber = sphere_vol(n - 3);
    let auto = 4usize.max((2.0 * (l1 + l2)).ceil() as usize);
    let r = refine(spec, spec.start_panels(auto), |panels| {
        let t1 = composite_nodes(&rule, 0.0, FRAC_PI_2, panels);
        let t2 = composite_nodes(&rule, 0.0, FRAC_PI_2, panels);
        let quarter = ordered_sum(&t1, |a| {
            let (sa, ca) = a.sin_cos();
            let outer = (2.0 * PI * l1 * ca).cos() * sa.powi(n as i32 - 2);
            let mut inner = 0.0;
            for &(b, w) in &t2 {
                let (sb, cb) = b.sin_cos();
                let x12 = sa * cb;
                inner += w * sb.powi(n as i32 - 3) * sphere_hat(n - 1, l2 * (1.0 - x12 * x12).max(0.0).sqrt())?;
            }
            Ok(outer * inner)
        })?;
        Ok((4.0 * fiber * quarter, (t1.len() * t2.len()) as u64))
    })?;
    Ok(FourierEstimate::new(
        r.value,
        ErrorEstimate::Truncation(r.diff),
        Method::Quadrature,
        r.nodes,
        total_mass(n, 2),
    ))
}

/// `St(m, 2)` transform for the `k = 3` inner factor, from `σ₁σ₂` and
/// `σ₁² + σ₂²`.
fn inner_k2(m: usize, prod: f64, sum_sq: f64, spec: &QuadratureSpec) -> Result<f64> {
    let plus = (sum_sq + 2.0 * prod).max(0.0).sqrt();
    let minus = (sum_sq - 2.0 * prod).max(0.0).sqrt();
    let s1 = 0.5 * (plus + minus);
    let s2 = 0.5 * (plus - minus).max(0.0);
    if m == 4 {
        k2_closed_form_n4(s1, s2)
    } else {
        Ok(k2_quadrature(m, s1, s2, spec)?.value)
    }
}

fn recursive_k3(n: usize, l1: f64, l2: f64, l3: f64, spec: &QuadratureSpec) -> Result<FourierEstimate> {
    let rule = GaussLegendre::new(spec.node_count);
    let inner_spec = spec.with_tol(spec.target_tol.max(1e-13));
    let theta_auto = 4usize.max((l1 + l2 + l3).ceil() as usize);
    let phi_auto = 8usize.max((2.0 * PI * (l2 + l3) / 4.0).ceil() as usize + 4);
    let r = refine(spec, spec.start_panels(theta_auto), |panels| {
        let scale = panels / spec.start_panels(theta_auto);
        // Trapezoid on the full circle with 4q points, folded onto the
        // quarter by the symmetries φ ↦ −φ and φ ↦ π − φ.
        let q = phi_auto * scale;
        let phis: Vec<(f64, f64)> = (0..=q)
            .map(|j| {
                let mult = if j == 0 || j == q { 2.0 } else { 4.0 };
                (FRAC_PI_2 * j as f64 / q as f64, mult * 2.0 * PI / (4 * q) as f64)
            })
            .collect();
        let thetas = composite_nodes(&rule, 0.0, FRAC_PI_2, panels);
        let total = ordered_sum(&thetas, |theta| {
            let (st, ct) = theta.sin_cos();
            let outer = sphere_hat(n - 2, l1 * ct)? * ct.powi(n as i32 - 3) * st;
            if outer == 0.0 {
                return Ok(0.0);
            }
            let prod = l2 * l3 * ct;
            let mut ring = 0.0;
            for &(phi, w) in &phis {
                let (sp, cp) = phi.sin_cos();
                let y1 = st * cp;
                let y2 = st * sp;
                let sum_sq = l2 * l2 * (1.0 - y1 * y1) + l3 * l3 * (1.0 - y2 * y2);
                ring += w * inner_k2(n - 1, prod, sum_sq, &inner_spec)?;
            }
            Ok(outer * ring)
        })?;
        Ok((total, (thetas.len() * phis.len()) as u64))
    })?;
    Ok(FourierEstimate::new(
        r.value,
        ErrorEstimate::Truncation(r.diff),
        Method::Quadrature,
        r.nodes,
        total_mass(n, 3),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::mc_fourier;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn spectrum(n: usize, v: &[f64]) -> SingularSpectrum {
        SingularSpectrum::new(n, v.to_vec()).unwrap()
    }

    #[test]
    fn k2_at_zero_is_total_mass() {
        for n in 3..7 {
            let est = k2_quadrature(n, 0.0, 0.0, &spec()).unwrap();
            assert!((est.value - total_mass(n, 2)).abs() < 1e-10 * total_mass(n, 2), "n = {n}");
            assert_eq!(est.method, Method::Quadrature);
            assert!(est.error.trunc_error().is_some());
        }
    }

    #[test]
    fn k2_with_zero_lambda_reduces_to_sphere() {
        for n in [3, 4, 5, 6] {
            for kappa in [0.3, 1.0, 2.5, 7.0] {
                let est = k2_quadrature(n, kappa, 0.0, &spec()).unwrap();
                let expect = sphere_vol(n - 2) * sphere_hat(n, kappa).unwrap();
                assert!((est.value - expect).abs() < 1e-8, "n = {n}, κ = {kappa}");
            }
        }
    }

    #[test]
    fn k2_is_symmetric() {
        for (n, a, b) in [(3, 1.0, 0.4), (5, 2.5, 0.7), (6, 3.3, 1.9)] {
            let x = k2_quadrature(n, a, b, &spec()).unwrap().value;
            let y = k2_quadrature(n, b, a, &spec()).unwrap().value;
            assert!((x - y).abs() < 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn closed_form_examples() {
        let l: f64 = 0.8;
        let diag = 2.0 * PI / (l * l) * (1.0 - bessel_j(BesselOrder::integer(0), 4.0 * PI * l).unwrap());
        assert!((k2_closed_form_n4(l, l).unwrap() - diag).abs() < 1e-12);
        let vol = 8.0 * PI.powi(3);
        assert!((k2_closed_form_n4(0.0, 0.0).unwrap() - vol).abs() < 1e-12 * vol);
        assert!((k2_closed_form_n4(1e-7, 1e-7).unwrap() - vol).abs() < 1e-9 * vol);
        assert!(k2_closed_form_n4(-1.0, 1.0).is_err());
    }

    #[test]
    fn closed_form_branches_meet() {
        for big in [0.3, 1.0, 4.0] {
            let below = k2_closed_form_n4(big, ADDITION_CUTOFF * (1.0 - 1e-12)).unwrap();
            let above = k2_closed_form_n4(big, ADDITION_CUTOFF * (1.0 + 1e-12)).unwrap();
            assert!((below - above).abs() < 1e-9, "{below} vs {above}");
        }
    }

    #[test]
    fn closed_form_small_lambda_limit() {
        // λ → 0: Vol(S²)·σ̂_{S³}(κ)
        for kappa in [0.1, 1.3, 6.0] {
            let expect = 4.0 * PI * sphere_hat(4, kappa).unwrap();
            assert!((k2_closed_form_n4(kappa, 0.0).unwrap() - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let grid = [0.5, 1.0, 2.0, 5.0];
        for &a in &grid {
            for &b in &grid {
                let q = k2_quadrature(4, a, b, &spec()).unwrap().value;
                let c = k2_closed_form_n4(a, b).unwrap();
                assert!((q - c).abs() < 1e-8, "({a}, {b}): {q} vs {c}");
            }
        }
    }

    #[test]
    fn random_walk_matches_quadrature() {
        for (n, a, b) in [(3, 1.0, 1.0), (5, 2.0, 0.5), (4, 0.0, 0.0), (4, 5.0, 2.0)] {
            let walk = random_walk_form(n, a, b, &spec()).unwrap();
            let quad = k2_quadrature(n, a, b, &spec()).unwrap().value;
            assert!((walk - quad).abs() < 1e-8, "n = {n} ({a}, {b}): {walk} vs {quad}");
        }
        let mass = random_walk_form(5, 0.0, 0.0, &spec()).unwrap();
        assert!((mass - total_mass(5, 2)).abs() < 1e-9 * total_mass(5, 2));
    }

    #[test]
    fn recursive_k1_is_sphere_transform() {
        for (n, l) in [(3, 0.7), (5, 2.2), (2, 1.1)] {
            let est = recursive_quadrature(&spectrum(n, &[l]), &spec()).unwrap();
            assert!((est.value - sphere_hat(n, l).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn recursive_k2_matches_bessel_quadrature() {
        for (n, a, b) in [(3, 1.0, 1.0), (4, 2.0, 1.0), (5, 1.5, 1.5)] {
            let r = recursive_quadrature(&spectrum(n, &[a, b]), &spec().with_tol(1e-10)).unwrap().value;
            let q = k2_quadrature(n, a, b, &spec()).unwrap().value;
            assert!((r - q).abs() < 1e-6, "n = {n}: {r} vs {q}");
        }
    }

    #[test]
    fn recursive_k3_zero_column_reduction() {
        for (n, a, b) in [(5, 2.0, 1.0), (4, 1.2, 0.5)] {
            let s = spec().with_tol(1e-10);
            let full = recursive_quadrature(&spectrum(n, &[a, b, 0.0]), &s).unwrap().value;
            let reduced = recursive_quadrature(&spectrum(n, &[a, b]), &s).unwrap().value;
            let expect = sphere_vol(n - 3) * reduced;
            assert!((full - expect).abs() < 1e-6, "n = {n}: {full} vs {expect}");
        }
    }

    #[test]
    fn recursive_k3_at_zero_is_total_mass() {
        let est = recursive_quadrature(&spectrum(5, &[0.0, 0.0, 0.0]), &spec().with_tol(1e-10)).unwrap();
        assert!((est.value - total_mass(5, 3)).abs() < 1e-8 * total_mass(5, 3));
    }

    #[test]
    fn recursive_k3_matches_monte_carlo() {
        let spec = spectrum(5, &[1.0, 1.0, 1.0]);
        let exact = recursive_quadrature(&spec, &QuadratureSpec::default().with_tol(1e-10)).unwrap().value;
        let mc = mc_fourier(5, 3, &spec.to_matrix(), 400_000, 17).unwrap();
        let se = mc.error.magnitude();
        assert!((mc.value - exact).abs() < 3.0 * se, "{} vs {exact} ± {se}", mc.value);
    }

    #[test]
    fn recursive_rejects_large_k() {
        assert!(matches!(
            recursive_quadrature(&spectrum(6, &[1.0; 4]), &spec()),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            recursive_quadrature(&spectrum(3, &[1.0; 3]), &spec()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn spec_validation() {
        let bad = QuadratureSpec {
            node_count: 4,
            ..QuadratureSpec::default()
        };
        assert!(k2_quadrature(4, 1.0, 1.0, &bad).is_err());
        assert!(k2_quadrature(2, 1.0, 1.0, &spec()).is_err());
    }

    #[test]
    fn stalled_refinement_reports_best_value() {
        let tight = QuadratureSpec {
            target_tol: 1e-30,
            max_panels: 64,
            ..QuadratureSpec::default()
        };
        match k2_quadrature(4, 3.0, 1.0, &tight) {
            Err(Error::Accuracy { best, .. }) => {
                assert!((best - k2_closed_form_n4(3.0, 1.0).unwrap()).abs() < 1e-8)
            }
            other => panic!("{other:?}"),
        }
    }
}
