use super::Matrix;
use crate::error::{Error, Result};

/// Eigen-decomposition of a real symmetric matrix; eigenvalues ascending,
/// eigenvectors stored as the matching columns of `vectors`.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

/// Cyclic Jacobi eigenvalue iteration for a symmetric matrix.
pub fn sym_eigen(a: &Matrix) -> Result<SymEigen> {
    let (n, m) = a.shape();
    if n != m {
        return Err(Error::Dimension {
            expected: (n, n),
            got: (n, m),
        });
    }
    if !a.is_finite() {
        return Err(Error::Domain("non-finite matrix".into()));
    }
    let mut w = a.sym();
    let mut v = Matrix::identity(n);
    let scale = w.frobenius_norm();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| w[(i, j)] * w[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (w[(q, q)] - w[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for r in 0..n {
                    let wrp = w[(r, p)];
                    let wrq = w[(r, q)];
                    w[(r, p)] = c * wrp - s * wrq;
                    w[(r, q)] = s * wrp + c * wrq;
                }
                for r in 0..n {
                    let wpr = w[(p, r)];
                    let wqr = w[(q, r)];
                    w[(p, r)] = c * wpr - s * wqr;
                    w[(q, r)] = s * wpr + c * wqr;
                }
                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = c * vrp - s * vrq;
                    v[(r, q)] = s * vrp + c * vrq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(i, i)].total_cmp(&w[(j, j)]));
    let values = order.iter().map(|&i| w[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymEigen { values, vectors })
}

/// Closed-form eigenvalues `[smaller, larger]` of `[[a, b], [b, d]]`.
pub fn sym_eigenvalues_2x2(a: f64, b: f64, d: f64) -> [f64; 2] {
    let mean = 0.5 * (a + d);
    let rad = (0.5 * (a - d)).hypot(b);
    [mean - rad, mean + rad]
}

/// Trigonometric closed form for the eigenvalues of a symmetric 3×3 matrix,
/// returned ascending.
pub fn sym_eigenvalues_3x3(m: &Matrix) -> [f64; 3] {
    debug_assert_eq!(m.shape(), (3, 3));
    let a = m.sym();
    let p1 = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
    let q = (a[(0, 0)] + a[(1, 1)] + a[(2, 2)]) / 3.0;
    let p2 = (a[(0, 0)] - q).powi(2) + (a[(1, 1)] - q).powi(2) + (a[(2, 2)] - q).powi(2) + 2.0 * p1;
    if p2 == 0.0 {
        return [q; 3];
    }
    let p = (p2 / 6.0).sqrt();
    let b = Matrix::from_fn(3, 3, |i, j| {
        (a[(i, j)] - if i == j { q } else { 0.0 }) / p
    });
    let det = b[(0, 0)] * (b[(1, 1)] * b[(2, 2)] - b[(1, 2)] * b[(2, 1)])
        - b[(0, 1)] * (b[(1, 0)] * b[(2, 2)] - b[(1, 2)] * b[(2, 0)])
        + b[(0, 2)] * (b[(1, 0)] * b[(2, 1)] - b[(1, 1)] * b[(2, 0)]);
    let r = (0.5 * det).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let largest = q + 2.0 * p * phi.cos();
    let smallest = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let middle = 3.0 * q - largest - smallest;
    [smallest, middle, largest]
}
