//! Extrinsic geometry of `St(n, k) ⊂ ℝ^{n×k}`: tangent and normal
//! projectors, the second fundamental form, the critical points of the
//! phase `X ↦ Tr(XᵀΞ)` for rectangular-diagonal `Ξ`, and two independent
//! finite-difference oracles for the second fundamental form.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::asymptotics::DegeneracyReport;
use crate::error::{Error, Result};
use crate::linalg::{frobenius_pairing, qr_positive, Matrix, SingularSpectrum};

const ORTHONORMAL_TOL: f64 = 1e-10;
const TANGENCY_TOL: f64 = 1e-8;

/// A point `X` of `St(n, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StiefelPoint {
    frame: Matrix,
}

impl StiefelPoint {
    /// Validates `‖XᵀX − I‖_F ≤ 1e-10`.
    pub fn new(frame: Matrix) -> Result<Self> {
        let (n, k) = frame.shape();
        if k == 0 || k > n {
            return Err(Error::Domain(format!("a k-frame in R^n needs 1 <= k <= n, got {n}x{k}")));
        }
        let defect = (&frame.t_dot(&frame) - &Matrix::identity(k)).frobenius_norm();
        if !(defect <= ORTHONORMAL_TOL) {
            return Err(Error::Domain(format!("columns are not orthonormal (defect {defect:e})")));
        }
        Ok(Self { frame })
    }

    pub(crate) fn new_unchecked(frame: Matrix) -> Self {
        Self { frame }
    }

    /// The rectangular-diagonal frame `Y` whose diagonal entries are 1.
    pub fn identity_frame(n: usize, k: usize) -> Self {
        Self::new_unchecked(Matrix::rect_diag(n, &vec![1.0; k]))
    }

    /// The rectangular-diagonal frame with diagonal `s`.
    pub fn signed_frame(n: usize, s: &SignVector) -> Self {
        Self::new_unchecked(Matrix::rect_diag(n, &s.to_f64()))
    }

    pub fn frame(&self) -> &Matrix {
        &self.frame
    }

    pub fn into_frame(self) -> Matrix {
        self.frame
    }

    pub fn n(&self) -> usize {
        self.frame.rows()
    }

    pub fn k(&self) -> usize {
        self.frame.cols()
    }
}

/// `s ∈ {−1, +1}ᵏ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignVector {
    signs: Vec<i8>,
}

impl SignVector {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Domain(format!("sign vector entries must be ±1, got {signs:?}")));
        }
        Ok(Self { signs })
    }

    pub fn all_plus(k: usize) -> Self {
        Self { signs: vec![1; k] }
    }

    /// All `2ᵏ` sign vectors. Entry `j` of the `m`-th vector is `−1` iff bit
    /// `k−1−j` of `m` is set, so the all-plus vector comes first and `s` and
    /// `−s` sit at `m` and `2ᵏ−1−m`.
    pub fn all(k: usize) -> Vec<Self> {
        (0..1usize << k)
            .map(|m| Self {
                signs: (0..k).map(|j| if m >> (k - 1 - j) & 1 == 1 { -1 } else { 1 }).collect(),
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn get(&self, j: usize) -> f64 {
        f64::from(self.signs[j])
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.signs.iter().map(|&s| f64::from(s)).collect()
    }

    pub fn negated(&self) -> Self {
        Self {
            signs: self.signs.iter().map(|s| -s).collect(),
        }
    }
}

impl std::fmt::Display for SignVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: String = self.signs.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect();
        write!(f, "({s})")
    }
}

/// Frobenius-orthonormal basis of the tangent space at a critical frame.
///
/// `so_part` holds `(EᵢⱼY − EⱼᵢY)/√2`-type elements for `i < j ≤ k` in
/// lexicographic order; `grassmann_part` holds `Eᵢⱼ` for `k < i ≤ n`,
/// `1 ≤ j ≤ k`, with `i` outer and `j` inner.
#[derive(Clone, Debug)]
pub struct TangentBasis {
    pub so_part: Vec<Matrix>,
    pub grassmann_part: Vec<Matrix>,
    pub base_point: StiefelPoint,
}

impl TangentBasis {
    /// Basis at `Y`.
    pub fn canonical(n: usize, k: usize) -> Self {
        Self::at_signed_frame(n, &SignVector::all_plus(k))
    }

    /// Basis at the critical frame `X_s = diag(s, I)·Y`, transported from
    /// the canonical one: `X_s`'s `𝔰𝔬` elements become
    /// `(sᵢEᵢⱼ − sⱼEⱼᵢ)/√2` and the `Eᵢⱼ`, `i > k`, are unchanged.
    pub fn at_signed_frame(n: usize, s: &SignVector) -> Self {
        let k = s.len();
        let mut so_part = Vec::with_capacity(k * k.saturating_sub(1) / 2);
        for i in 0..k {
            for j in (i + 1)..k {
                let mut a = Matrix::zeros(n, k);
                a[(i, j)] = s.get(i) * FRAC_1_SQRT_2;
                a[(j, i)] = -s.get(j) * FRAC_1_SQRT_2;
                so_part.push(a);
            }
        }
        let mut grassmann_part = Vec::with_capacity((n - k) * k);
        for i in k..n {
            for j in 0..k {
                let mut e = Matrix::zeros(n, k);
                e[(i, j)] = 1.0;
                grassmann_part.push(e);
            }
        }
        Self {
            so_part,
            grassmann_part,
            base_point: StiefelPoint::signed_frame(n, s),
        }
    }

    pub fn len(&self) -> usize {
        self.so_part.len() + self.grassmann_part.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Elements in basis order: `so_part` then `grassmann_part`.
    pub fn elements(&self) -> impl Iterator<Item = &Matrix> {
        self.so_part.iter().chain(&self.grassmann_part)
    }
}

/// `dim St(n, k) = k(k−1)/2 + (n−k)k`.
pub fn stiefel_dim(n: usize, k: usize) -> usize {
    k * k.saturating_sub(1) / 2 + (n - k) * k
}

fn check_shape(x: &StiefelPoint, a: &Matrix) -> Result<()> {
    if x.frame.shape() != a.shape() {
        return Err(Error::Dimension {
            expected: x.frame.shape(),
            got: a.shape(),
        });
    }
    Ok(())
}

/// Tangent projector as an ambient field: `(I − YYᵀ)A + ½Y(YᵀA − AᵀY)`.
/// On the manifold this is the orthogonal projection onto `T_Y St(n, k)`.
fn tangent_field(y: &Matrix, a: &Matrix) -> Matrix {
    let yta = y.t_dot(a);
    let normal_free = a - &y.dot(&yta);
    &normal_free + &y.dot(&yta.skew())
}

/// Orthogonal projection of `A` onto the tangent space at `X`.
pub fn tangent_project(x: &StiefelPoint, a: &Matrix) -> Result<Matrix> {
    check_shape(x, a)?;
    Ok(tangent_field(&x.frame, a))
}

/// Orthogonal projection of `A` onto the normal space `{XN : N = Nᵀ}`:
/// `½X(XᵀA + AᵀX)`.
pub fn normal_project(x: &StiefelPoint, a: &Matrix) -> Result<Matrix> {
    check_shape(x, a)?;
    Ok(x.frame.dot(&x.frame.t_dot(a).sym()))
}

fn check_tangent(x: &StiefelPoint, a: &Matrix, name: &str) -> Result<()> {
    let off = normal_project(x, a)?.frobenius_norm();
    if off > TANGENCY_TOL * a.frobenius_norm().max(1.0) {
        return Err(Error::Precondition(format!(
            "{name} is not tangent at X (normal component {off:e})"
        )));
    }
    Ok(())
}

/// Second fundamental form `II_X(A, B) = −½X(AᵀB + BᵀA)`.
pub fn second_fundamental_form(x: &StiefelPoint, a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_tangent(x, a, "A")?;
    check_tangent(x, b, "B")?;
    let atb = a.t_dot(b);
    Ok(x.frame.dot(&atb.sym()).scale(-1.0))
}

/// `II_X(A, B)` as the directional derivative `(∂_A P)(B)` of the tangent
/// projector field, by central differences along the straight line
/// `X + tA`. The field is quadratic in `X`, so the central difference is
/// exact up to rounding for any `h`.
pub fn sff_by_projector_derivative(x: &StiefelPoint, a: &Matrix, b: &Matrix, h: f64) -> Result<Matrix> {
    check_shape(x, a)?;
    check_shape(x, b)?;
    let plus = tangent_field(&(&x.frame + &(a * h)), b);
    let minus = tangent_field(&(&x.frame - &(a * h)), b);
    Ok((&plus - &minus).scale(0.5 / h))
}

fn qr_retract(x: &Matrix, v: &Matrix) -> Result<Matrix> {
    Ok(qr_positive(&(x + v))?.q)
}

/// `II_X(A, A)` as the normal part of the second derivative of the QR
/// retraction curve `t ↦ qf(X + tA)`.
pub fn sff_by_retraction(x: &StiefelPoint, a: &Matrix, h: f64) -> Result<Matrix> {
    check_shape(x, a)?;
    let plus = qr_retract(&x.frame, &(a * h))?;
    let minus = qr_retract(&x.frame, &(a * -h))?;
    let second = (&(&plus + &minus) - &x.frame.scale(2.0)).scale(1.0 / (h * h));
    normal_project(x, &second)
}

/// `II_X(A, B)` from the retraction oracle by polarization:
/// `(II(A+B, A+B) − II(A−B, A−B))/4`.
pub fn sff_by_retraction_polarized(x: &StiefelPoint, a: &Matrix, b: &Matrix, h: f64) -> Result<Matrix> {
    let sum = sff_by_retraction(x, &(a + b), h)?;
    let diff = sff_by_retraction(x, &(a - b), h)?;
    Ok((&sum - &diff).scale(0.25))
}

fn zero_report(spectrum: &SingularSpectrum) -> Option<DegeneracyReport> {
    let zero_indices: Vec<usize> = spectrum
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &l)| !(l > 0.0))
        .map(|(j, _)| j + 1)
        .collect();
    (!zero_indices.is_empty()).then_some(DegeneracyReport {
        zero_indices,
        near_pairs: Vec::new(),
        usable: false,
    })
}

fn require_positive(spectrum: &SingularSpectrum) -> Result<()> {
    match zero_report(spectrum) {
        Some(report) => Err(Error::Degenerate(report)),
        None => Ok(()),
    }
}

/// The `2ᵏ` critical frames of `X ↦ Tr(XᵀΞ)` for rectangular-diagonal `Ξ`
/// with positive diagonal, in [`SignVector::all`] order.
pub fn critical_points(spectrum: &SingularSpectrum) -> Result<Vec<(SignVector, StiefelPoint)>> {
    require_positive(spectrum)?;
    let n = spectrum.ambient_n();
    Ok(SignVector::all(spectrum.frame_k())
        .into_iter()
        .map(|s| {
            let x = StiefelPoint::signed_frame(n, &s);
            (s, x)
        })
        .collect())
}

/// Matrix of `⟨II(e_a, e_b), Ξ⟩` at a critical frame in the basis of
/// [`TangentBasis::at_signed_frame`].
#[derive(Clone, Debug)]
pub struct SffPairing {
    pub matrix: Matrix,
    pub base_sign: SignVector,
    pub spectrum: SingularSpectrum,
}

impl SffPairing {
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.matrix.rows()).map(|i| self.matrix[(i, i)]).collect()
    }
}

fn check_sign_len(s: &SignVector, spectrum: &SingularSpectrum) -> Result<()> {
    if s.len() != spectrum.frame_k() {
        return Err(Error::Dimension {
            expected: (spectrum.frame_k(), 1),
            got: (s.len(), 1),
        });
    }
    Ok(())
}

/// The pairing matrix from the closed-form eigenvalues: `−½(sᵢλᵢ + sⱼλⱼ)`
/// on `𝔰𝔬` directions and `−sⱼλⱼ` on each `Eᵢⱼ`.
pub fn sff_pairing(s: &SignVector, spectrum: &SingularSpectrum) -> Result<SffPairing> {
    require_positive(spectrum)?;
    check_sign_len(s, spectrum)?;
    let n = spectrum.ambient_n();
    let k = spectrum.frame_k();
    let sl: Vec<f64> = (0..k).map(|j| s.get(j) * spectrum.values()[j]).collect();
    let mut diag = Vec::with_capacity(stiefel_dim(n, k));
    for i in 0..k {
        for j in (i + 1)..k {
            diag.push(-0.5 * (sl[i] + sl[j]));
        }
    }
    for _ in k..n {
        diag.extend(sl.iter().map(|v| -v));
    }
    let d = diag.len();
    Ok(SffPairing {
        matrix: Matrix::from_fn(d, d, |a, b| if a == b { diag[a] } else { 0.0 }),
        base_sign: s.clone(),
        spectrum: spectrum.clone(),
    })
}

/// The pairing matrix assembled entrywise from [`second_fundamental_form`]
/// over the full tangent basis.
pub fn assemble_sff_pairing(s: &SignVector, spectrum: &SingularSpectrum) -> Result<SffPairing> {
    require_positive(spectrum)?;
    check_sign_len(s, spectrum)?;
    let basis = TangentBasis::at_signed_frame(spectrum.ambient_n(), s);
    let xi = spectrum.to_matrix();
    let elems: Vec<&Matrix> = basis.elements().collect();
    let d = elems.len();
    let mut m = Matrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let ii = second_fundamental_form(&basis.base_point, elems[a], elems[b])?;
            let v = frobenius_pairing(&ii, &xi)?;
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    Ok(SffPairing {
        matrix: m,
        base_sign: s.clone(),
        spectrum: spectrum.clone(),
    })
}

/// Signature of the pairing at `X_s`: `Σⱼ sⱼ(j − n)`.
pub fn signature_formula(s: &SignVector, n: usize) -> i64 {
    (0..s.len())
        .map(|j| i64::from(s.signs[j]) * (j as i64 + 1 - n as i64))
        .sum()
}

/// `|det|` of the pairing at `X_s`:
/// `2^{−k(k−1)/2} |λ₁⋯λₖ|^{n−k} Π_{i<j} |sᵢλᵢ + sⱼλⱼ|`.
pub fn sff_abs_det(s: &SignVector, spectrum: &SingularSpectrum) -> Result<f64> {
    require_positive(spectrum)?;
    check_sign_len(s, spectrum)?;
    let n = spectrum.ambient_n();
    let k = spectrum.frame_k();
    let l = spectrum.values();
    let mut det = 2f64.powi(-((k * k.saturating_sub(1) / 2) as i32));
    det *= l.iter().product::<f64>().powi((n - k) as i32);
    for i in 0..k {
        for j in (i + 1)..k {
            let pair = s.get(i) * l[i] + s.get(j) * l[j];
            if pair.abs() <= 1e-14 * spectrum.max() {
                return Err(Error::DegeneratePair(format!(
                    "s{a}·λ{a} + s{b}·λ{b} vanishes for pair ({a}, {b})",
                    a = i + 1,
                    b = j + 1
                )));
            }
            det *= pair.abs();
        }
    }
    Ok(det)
}
