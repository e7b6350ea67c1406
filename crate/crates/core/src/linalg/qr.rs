use super::Matrix;
use crate::error::{Error, Result};

/// Thin QR factors with `R` upper triangular and `diag(R) > 0`.
#[derive(Clone, Debug)]
pub struct QrFactors {
    pub q: Matrix,
    pub r: Matrix,
}

/// Thin QR factorization of an `n × k` matrix (`n ≥ k`) with strictly
/// positive diagonal in `R`, which makes the factorization unique.
///
/// Modified Gram–Schmidt with one reorthogonalization pass.
pub fn qr_positive(a: &Matrix) -> Result<QrFactors> {
    let (n, k) = a.shape();
    if k > n {
        return Err(Error::Dimension {
            expected: (n, n),
            got: (n, k),
        });
    }
    let scale = a.frobenius_norm();
    let mut q = Matrix::zeros(n, k);
    let mut r = Matrix::zeros(k, k);
    let mut v = vec![0.0; n];
    for j in 0..k {
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = a[(i, j)];
        }
        for _pass in 0..2 {
            for p in 0..j {
                let proj: f64 = (0..n).map(|i| q[(i, p)] * v[i]).sum();
                r[(p, j)] += proj;
                for (i, vi) in v.iter_mut().enumerate() {
                    *vi -= proj * q[(i, p)];
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm >= 1e-12 * scale) || norm == 0.0 {
            return Err(Error::RankDeficient {
                column: j,
                pivot: norm,
            });
        }
        r[(j, j)] = norm;
        for (i, vi) in v.iter().enumerate() {
            q[(i, j)] = vi / norm;
        }
    }
    Ok(QrFactors { q, r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn orthonormality_defect(q: &Matrix) -> f64 {
        (&q.t_dot(q) - &Matrix::identity(q.cols())).frobenius_norm()
    }

    #[test]
    fn orthonormal_input_is_fixed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = Matrix::new(3, 2, vec![s, 0.0, s, 0.0, 0.0, 1.0]).unwrap();
        let f = qr_positive(&a).unwrap();
        assert!((&f.q - &a).frobenius_norm() < 1e-15);
        assert!((&f.r - &Matrix::identity(2)).frobenius_norm() < 1e-15);
    }

    #[test]
    fn scaled_column() {
        let a = Matrix::new(3, 1, vec![2.0, 0.0, 0.0]).unwrap();
        let f = qr_positive(&a).unwrap();
        assert_eq!(f.q.as_slice(), &[1.0, 0.0, 0.0]);
        assert_eq!(f.r[(0, 0)], 2.0);
    }

    #[test]
    fn negative_column_gets_positive_r() {
        let a = Matrix::new(2, 1, vec![-3.0, 4.0]).unwrap();
        let f = qr_positive(&a).unwrap();
        assert_eq!(f.r[(0, 0)], 5.0);
        assert!((f.q[(0, 0)] + 0.6).abs() < 1e-16);
    }

    #[test]
    fn rank_deficient_is_reported() {
        let a = Matrix::new(3, 2, vec![1.0, 2.0, 2.0, 4.0, -1.0, -2.0]).unwrap();
        assert!(matches!(
            qr_positive(&a),
            Err(Error::RankDeficient { column: 1, .. })
        ));
        assert!(qr_positive(&Matrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn reconstruction_5x3() {
        let a = Matrix::new(
            5,
            3,
            vec![
                0.8, -1.1, 0.3, 2.0, 0.4, -0.7, -0.5, 1.6, 1.2, 0.9, 0.1, -2.2, -1.3, 0.6, 0.5,
            ],
        )
        .unwrap();
        let f = qr_positive(&a).unwrap();
        assert!((&f.q.dot(&f.r) - &a).frobenius_norm() <= 1e-10 * a.frobenius_norm());
        assert!(orthonormality_defect(&f.q) <= 1e-10);
        for i in 0..3 {
            assert!(f.r[(i, i)] > 0.0);
            for j in 0..i {
                assert_eq!(f.r[(i, j)], 0.0);
            }
        }
    }

    proptest! {
        #[test]
        fn recovers_q_and_r_from_their_product(
            raw in prop::collection::vec(-2.0f64..2.0, 12),
            diag in prop::collection::vec(0.2f64..3.0, 3),
            upper in prop::collection::vec(-2.0f64..2.0, 3),
        ) {
            let g = Matrix::new(4, 3, raw).unwrap();
            prop_assume!(qr_positive(&g).is_ok());
            let q0 = qr_positive(&g).unwrap().q;
            prop_assume!(orthonormality_defect(&q0) < 1e-12);
            let r0 = Matrix::new(3, 3, vec![
                diag[0], upper[0], upper[1],
                0.0, diag[1], upper[2],
                0.0, 0.0, diag[2],
            ]).unwrap();
            let f = qr_positive(&q0.dot(&r0)).unwrap();
            prop_assert!((&f.q - &q0).frobenius_norm() < 1e-10);
            prop_assert!((&f.r - &r0).frobenius_norm() < 1e-10);
        }
    }
}
