//! Small dense symmetric helpers on top of nalgebra: Cholesky-based
//! log-determinants, inverses, and Schur complements for partial
//! correlations.

use nalgebra::{Cholesky, DMatrix, Dyn};

/// Cholesky factorization of a symmetric positive-definite matrix, or `None`
/// when the factorization breaks down (singular/indefinite input).
pub fn cholesky(m: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    Cholesky::new(m)
}

/// `ln det(M)` via the Cholesky factor.
pub fn logdet(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol
        .l_dirty()
        .diagonal()
        .iter()
        .map(|d| d.ln())
        .sum::<f64>()
}

/// Inverse via Cholesky.
pub fn spd_inverse(m: DMatrix<f64>) -> Option<DMatrix<f64>> {
    cholesky(m).map(|c| c.inverse())
}

/// Sample partial correlation of the first two variables of `ssd` given the
/// rest, computed from the Schur complement of the trailing block. `ssd` is
/// the centered cross-product matrix over `[x, y, S...]`. Returns `None`
/// when the conditioning block or the conditional variances are singular.
pub fn partial_correlation(ssd: &DMatrix<f64>) -> Option<f64> {
    let m = ssd.nrows();
    debug_assert!(m >= 2 && ssd.ncols() == m);
    let (c00, c01, c11);
    if m == 2 {
        c00 = ssd[(0, 0)];
        c01 = ssd[(0, 1)];
        c11 = ssd[(1, 1)];
    } else {
        let s_block = ssd.view((2, 2), (m - 2, m - 2)).into_owned();
        let chol = cholesky(s_block)?;
        // B = ssd[0..2, 2..m], conditional block = A − B S⁻¹ Bᵗ.
        let b = ssd.view((0, 2), (2, m - 2)).into_owned();
        let solved = chol.solve(&b.transpose());
        let cond = ssd.view((0, 0), (2, 2)).into_owned() - &b * solved;
        c00 = cond[(0, 0)];
        c01 = cond[(0, 1)];
        c11 = cond[(1, 1)];
    }
    if c00 <= 0.0 || c11 <= 0.0 || c00.is_nan() || c11.is_nan() {
        return None;
    }
    Some(c01 / (c00 * c11).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logdet_matches_direct_determinant() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let chol = cholesky(m.clone()).unwrap();
        assert!((logdet(&chol) - m.determinant().ln()).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_has_no_factor() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(cholesky(m).is_none());
    }

    #[test]
    fn partial_correlation_of_plain_pair() {
        // ssd of two variables with correlation 0.5.
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        assert!((partial_correlation(&m).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn partial_correlation_removes_mediator() {
        // x → s → y with no direct link: cov = [[1, .8, .64], [.8, 1, .8], [.64, .8, 1]]
        // ordered [x, y, s]: r_xy·s = 0.
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.64, 0.8, 0.64, 1.0, 0.8, 0.8, 0.8, 1.0]);
        assert!(partial_correlation(&m).unwrap().abs() < 1e-12);
    }
}
