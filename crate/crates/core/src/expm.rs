//! Complex matrix exponential for the lossy (non-Hermitian) propagator.
//!
//! Delegates to nalgebra's scaling-and-squaring Pade implementation; the
//! tests pin it against externally computed reference values so a regression
//! in the dependency cannot slip through silently.

use crate::error::{Result, SimError};
use nalgebra::{Complex, DMatrix};

/// exp(A) for a square complex matrix.
pub fn expm(a: &DMatrix<Complex<f64>>) -> Result<DMatrix<Complex<f64>>> {
    let n = a.nrows();
    if a.ncols() != n || n == 0 {
        return Err(SimError::BadParameter("expm needs a square nonempty matrix".into()));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(SimError::BadParameter("expm input has non-finite entries".into()));
    }
    Ok(a.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn identity_and_zero() {
        let z = DMatrix::<Complex<f64>>::zeros(3, 3);
        let e = expm(&z).unwrap();
        assert_eq!(e, DMatrix::identity(3, 3));
    }

    #[test]
    fn diagonal_is_elementwise() {
        let a =
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.3, -1.2), c(-0.7, 0.4)]));
        let e = expm(&a).unwrap();
        assert_relative_eq!(e[(0, 0)].re, c(0.3, -1.2).exp().re, epsilon = 1e-12);
        assert_relative_eq!(e[(0, 0)].im, c(0.3, -1.2).exp().im, epsilon = 1e-12);
        assert_relative_eq!(e[(1, 1)].re, c(-0.7, 0.4).exp().re, epsilon = 1e-12);
        assert_eq!(e[(0, 1)], c(0.0, 0.0));
    }

    #[test]
    fn skew_hermitian_gives_unitary_rotation() {
        // exp(-i t X) for Pauli X: cos(t) I - i sin(t) X.
        let t = 0.8;
        let a = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -t), c(0.0, -t), c(0.0, 0.0)]);
        let e = expm(&a).unwrap();
        assert_relative_eq!(e[(0, 0)].re, t.cos(), epsilon = 1e-12);
        assert_relative_eq!(e[(0, 1)].im, -t.sin(), epsilon = 1e-12);
        let norm = (e[(0, 0)] * e[(0, 0)].conj() + e[(0, 1)] * e[(0, 1)].conj()).re;
        assert_relative_eq!(norm, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn matches_reference_photonic_segment() {
        // A = -i z (K + diag(db) - i/2 diag(alpha)) with z = 3, kappa = 0.4,
        // db = (0.15, -0.05, 0.1), alpha = (0.007675, 0.007675, 0):
        // the shape of one lossy noisy segment. Reference values computed
        // with an independent implementation of the Pade algorithm.
        let z = 3.0;
        let (k, db, al) = (0.4, [0.15, -0.05, 0.1], [0.007675, 0.007675, 0.0]);
        let mut a = DMatrix::<Complex<f64>>::zeros(3, 3);
        for i in 0..3 {
            a[(i, i)] = c(0.0, -z) * c(db[i], -0.5 * al[i]);
        }
        for (i, j) in [(0, 1), (1, 2)] {
            a[(i, j)] = c(0.0, -z * k);
            a[(j, i)] = c(0.0, -z * k);
        }
        let e = expm(&a).unwrap();
        let expected = [
            [
                c(0.35875400493287857, -0.28572817498985575),
                c(-0.11014251649394519, -0.6704542644251119),
                c(-0.5418533786171604, 0.1152961617550005),
            ],
            [
                c(-0.11014251649394516, -0.6704542644251121),
                c(-0.12802811543730908, 0.16479511897770063),
                c(-0.04351696671863717, -0.6900646904955956),
            ],
            [
                c(-0.5418533786171603, 0.11529616175500049),
                c(-0.04351696671863717, -0.6900646904955954),
                c(0.4041267087848044, -0.20969279261260504),
            ],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(e[(i, j)].re, expected[i][j].re, epsilon = 1e-10);
                assert_relative_eq!(e[(i, j)].im, expected[i][j].im, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn matches_reference_non_normal() {
        // Non-normal complex 2x2; reference from an independent Pade run.
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[c(0.2, -0.5), c(1.3, -0.4), c(0.0, 0.1), c(-0.6, -0.9)],
        );
        let e = expm(&a).unwrap();
        let expected = [
            [
                c(1.1227491462986425, -0.5456055644149487),
                c(0.6648382384185164, -0.9310388191758031),
            ],
            [
                c(0.051049468624926354, 0.06684893176294013),
                c(0.38375981769541634, -0.40460554246729835),
            ],
        ];
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(e[(i, j)].re, expected[i][j].re, epsilon = 1e-10);
                assert_relative_eq!(e[(i, j)].im, expected[i][j].im, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn rejects_non_square_and_non_finite() {
        let rect = DMatrix::<Complex<f64>>::zeros(2, 3);
        assert!(expm(&rect).is_err());
        let mut bad = DMatrix::<Complex<f64>>::zeros(2, 2);
        bad[(0, 0)] = c(f64::NAN, 0.0);
        assert!(expm(&bad).is_err());
    }
}
