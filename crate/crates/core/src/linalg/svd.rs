use super::Matrix;
use crate::error::{Error, Result};

/// Singular values `λ₁ ≥ … ≥ λₖ ≥ 0` of an `n × k` frequency matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularSpectrum {
    values: Vec<f64>,
    ambient_n: usize,
}

impl SingularSpectrum {
    /// Validates ordering, signs and `k ≤ n`.
    pub fn new(ambient_n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() > ambient_n {
            return Err(Error::Domain(format!(
                "{} singular values for ambient dimension {ambient_n}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain(format!(
                "singular values must be finite and nonnegative: {values:?}"
            )));
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Domain(format!(
                "singular values must be nonincreasing: {values:?}"
            )));
        }
        Ok(Self { values, ambient_n })
    }

    /// Sorts arbitrary nonnegative magnitudes into a spectrum.
    pub fn from_unsorted(ambient_n: usize, mut values: Vec<f64>) -> Result<Self> {
        values.iter_mut().for_each(|v| *v = v.abs());
        values.sort_by(|a, b| b.total_cmp(a));
        Self::new(ambient_n, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ambient_n(&self) -> usize {
        self.ambient_n
    }

    pub fn frame_k(&self) -> usize {
        self.values.len()
    }

    /// Largest singular value (0 for an empty spectrum).
    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// The spectrum scaled by `tau ≥ 0`.
    pub fn scaled(&self, tau: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * tau).collect(),
            ambient_n: self.ambient_n,
        }
    }

    /// The rectangular-diagonal `n × k` matrix carrying this spectrum.
    pub fn to_matrix(&self) -> Matrix {
        Matrix::rect_diag(self.ambient_n, &self.values)
    }
}

/// `Ξ = left · diag(λ) · right` with `left` (n×n) and `right` (k×k) orthogonal.
#[derive(Clone, Debug)]
pub struct Svd {
    pub left: Matrix,
    pub spectrum: SingularSpectrum,
    pub right: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        self.left.dot(&self.spectrum.to_matrix()).dot(&self.right)
    }
}

const MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD of an `n × k` matrix, `n ≥ k`.
///
/// Values come out nonincreasing with ties kept in column order. Each right
/// singular vector (row of `right`) has its first nonzero entry positive; the
/// matching left vector is flipped with it. Left vectors for zero singular
/// values, and the remaining `n − k` columns of `left`, are completed from
/// the standard basis by Gram–Schmidt in index order.
pub fn svd(xi: &Matrix) -> Result<Svd> {
    let (n, k) = xi.shape();
    if !xi.is_finite() {
        return Err(Error::Domain("svd of a non-finite matrix".into()));
    }
    if k > n {
        return Err(Error::Dimension {
            expected: (n, n),
            got: (n, k),
        });
    }
    let mut a = xi.clone();
    let mut v = Matrix::identity(k);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..n {
                    let (ap, aq) = (a[(i, p)], a[(i, q)]);
                    alpha += ap * ap;
                    beta += aq * aq;
                    gamma += ap * aq;
                }
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let (ap, aq) = (a[(i, p)], a[(i, q)]);
                    a[(i, p)] = c * ap - s * aq;
                    a[(i, q)] = s * ap + c * aq;
                }
                for i in 0..k {
                    let (vp, vq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Accuracy {
            message: format!("one-sided Jacobi did not converge in {MAX_SWEEPS} sweeps"),
            best: f64::NAN,
        });
    }

    let norms: Vec<f64> = (0..k)
        .map(|j| (0..n).map(|i| a[(i, j)].powi(2)).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let values: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let top = values.first().copied().unwrap_or(0.0);
    let zero_cut = top * 1e-14 * (n as f64);

    let mut right = Matrix::zeros(k, k);
    let mut left_cols: Vec<Option<Vec<f64>>> = Vec::with_capacity(k);
    for (row, &j) in order.iter().enumerate() {
        let mut vj: Vec<f64> = (0..k).map(|i| v[(i, j)]).collect();
        let mut uj = (values[row] > zero_cut && values[row] > 0.0)
            .then(|| (0..n).map(|i| a[(i, j)] / values[row]).collect::<Vec<f64>>());
        let vmax = vj.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if let Some(first) = vj.iter().find(|x| x.abs() > 1e-12 * vmax) {
            if *first < 0.0 {
                vj.iter_mut().for_each(|x| *x = -*x);
                if let Some(u) = uj.as_mut() {
                    u.iter_mut().for_each(|x| *x = -*x);
                }
            }
        }
        for (c, x) in vj.iter().enumerate() {
            right[(row, c)] = *x;
        }
        left_cols.push(uj);
    }

    let left = complete_orthonormal(n, &left_cols);
    let spectrum = SingularSpectrum::new(n, values)?;
    Ok(Svd {
        left,
        spectrum,
        right,
    })
}

/// Builds an `n × n` orthogonal matrix whose first columns are the given
/// vectors where present; gaps and the tail are filled from `e₁, e₂, …`.
fn complete_orthonormal(n: usize, cols: &[Option<Vec<f64>>]) -> Matrix {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut slots: Vec<Option<Vec<f64>>> = cols.to_vec();
    slots.resize(n, None);
    let fixed: Vec<Vec<f64>> = slots.iter().flatten().cloned().collect();
    let mut candidates = 0..n;
    let mut out = Matrix::zeros(n, n);
    for (c, slot) in slots.iter().enumerate() {
        let col = match slot {
            Some(u) => u.clone(),
            None => loop {
                let e = candidates.next().expect("standard basis exhausted");
                let mut r: Vec<f64> = (0..n).map(|i| if i == e { 1.0 } else { 0.0 }).collect();
                for _ in 0..2 {
                    for b in fixed.iter().chain(basis.iter()) {
                        let d: f64 = b.iter().zip(&r).map(|(x, y)| x * y).sum();
                        r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= d * bi);
                    }
                }
                let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-6 {
                    r.iter_mut().for_each(|x| *x /= norm);
                    break r;
                }
            },
        };
        if slot.is_none() {
            basis.push(col.clone());
        }
        out.set_column(c, &col);
    }
    out
}
