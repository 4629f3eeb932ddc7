//! Matrix exponentials.
//!
//! The floating-point path scales `A` by `2^-s` until `‖A‖₁ 2^-s <= 1/2`,
//! sums the Taylor series until the next term is below machine precision
//! relative to the partial sum, and squares `s` times. The exact path is a
//! plain truncated Taylor series over rationals, used for verification.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;

use crate::linalg::RatMatrix;

fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(a.is_square(), "expm needs a square matrix");
    let n = a.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let norm = norm1(a);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a * 2f64.powi(-squarings);
    let mut result = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..64 {
        term = &term * &scaled / k as f64;
        result += &term;
        if norm1(&term) <= f64::EPSILON * 1e-2 * norm1(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// `Σ_{k<=terms} (tA)^k / k!` in exact arithmetic.
pub fn expm_taylor_exact(a: &RatMatrix, t: &BigRational, terms: usize) -> RatMatrix {
    assert!(a.is_square());
    let ta = a.scale(t);
    let mut result = RatMatrix::identity(a.rows());
    let mut term = RatMatrix::identity(a.rows());
    for k in 1..=terms {
        term = term.mul(&ta).scale(&BigRational::new(BigInt::from(1), BigInt::from(k)));
        result = result.add(&term);
    }
    result
}

/// `(I + tA/m)^m`, the product-limit approximant of `e^{tA}`.
pub fn product_limit(a: &DMatrix<f64>, t: f64, m: u32) -> DMatrix<f64> {
    let n = a.nrows();
    let step = DMatrix::<f64>::identity(n, n) + a * (t / m as f64);
    let mut out = DMatrix::<f64>::identity(n, n);
    for _ in 0..m {
        out = &out * &step;
    }
    out
}
