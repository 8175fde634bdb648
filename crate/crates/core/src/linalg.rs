//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value threshold below which a design is treated as
/// rank deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Least-squares solution of `x b = y` through the SVD.
///
/// Returns `None` when `x` has fewer rows than columns or its smallest
/// singular value is below `RANK_TOL` times the largest.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    if x.nrows() < x.ncols() || x.ncols() == 0 {
        return None;
    }
    let svd = x.clone().svd(true, true);
    let sv = &svd.singular_values;
    let max = sv.max();
    let min = sv.min();
    if max.is_nan() || max <= 0.0 || min < RANK_TOL * max {
        return None;
    }
    svd.solve(y, 0.0).ok()
}

/// Column means of the listed rows.
pub fn mean_of_rows(x: &DMatrix<f64>, rows: &[usize]) -> DVector<f64> {
    let mut m = DVector::zeros(x.ncols());
    for &i in rows {
        m += x.row(i).transpose();
    }
    if !rows.is_empty() {
        m /= rows.len() as f64;
    }
    m
}

/// Scatter matrix `sum (x_i - c)(x_i - c)^T` over the listed rows.
pub fn scatter(x: &DMatrix<f64>, rows: &[usize], center: &DVector<f64>) -> DMatrix<f64> {
    let p = x.ncols();
    let mut s = DMatrix::zeros(p, p);
    for &i in rows {
        let d = x.row(i).transpose() - center;
        s.ger(1.0, &d, &d, 1.0);
    }
    s
}

/// Sample covariance with divisor `m - 1`; the zero matrix when `m < 2`.
pub fn sample_covariance(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    let p = x.ncols();
    if rows.len() < 2 {
        return DMatrix::zeros(p, p);
    }
    let c = mean_of_rows(x, rows);
    scatter(x, rows, &c) / (rows.len() - 1) as f64
}

/// `v^T m v`.
pub fn quadratic_form(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(m * v))
}
