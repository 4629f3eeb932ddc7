//! Zonal polynomials on `S^{n-1}`: Gegenbauer polynomials normalized to 1 at `s = 1`.
//!
//! Built from `(l+n-2) P_{l+1} = (2l+n-2) s P_l - l P_{l-1}` with
//! `P_0 = 1`, `P_1 = s`. For `n = 2` these are Chebyshev polynomials, for
//! `n = 3` Legendre polynomials.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::algebra::{DotMonomial, ExactPoly, Mode, ModelDims, Polynomial, SitePair};
use crate::error::{Error, Result};
use crate::rational::to_f64;

fn rat(v: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Exact coefficients of `P_l(s)` in ascending powers of `s`.
pub fn gegenbauer_coefficients(n: usize, l: usize) -> Vec<BigRational> {
    assert!(n >= 2, "zonal polynomials need n >= 2");
    let mut prev = vec![BigRational::one()];
    if l == 0 {
        return prev;
    }
    let mut cur = vec![BigRational::zero(), BigRational::one()];
    for k in 1..l {
        let lead = rat(k + n - 2);
        let a = rat(2 * k + n - 2) / &lead;
        let b = rat(k) / &lead;
        let mut next = vec![BigRational::zero(); k + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += &a * c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= &b * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Exact coefficients of `P_l(1 + x)` in ascending powers of `x`.
///
/// Evaluating `P_l(s) - 1` through `x = s - 1` avoids the cancellation of
/// the direct form near `s = 1`.
pub fn gegenbauer_shifted_coefficients(n: usize, l: usize) -> Vec<BigRational> {
    let a = gegenbauer_coefficients(n, l);
    let mut out = vec![BigRational::zero(); a.len()];
    for (k, ak) in a.iter().enumerate() {
        let mut binom = BigInt::one();
        for j in 0..=k {
            out[j] += ak * BigRational::from_integer(binom.clone());
            binom = binom * (k - j) / (j + 1);
        }
    }
    out
}

/// `P_l(s)` by the three-term recurrence.
pub fn gegenbauer(n: usize, l: usize, s: f64) -> f64 {
    assert!(n >= 2, "zonal polynomials need n >= 2");
    if l == 0 {
        return 1.0;
    }
    let (mut prev, mut cur) = (1.0, s);
    for k in 1..l {
        let next = ((2 * k + n - 2) as f64 * s * cur - k as f64 * prev) / (k + n - 2) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

/// `P_l(1 + x) - 1`: Horner in `x` near `s = 1`, the recurrence elsewhere.
#[derive(Debug, Clone)]
pub struct ZonalDefect {
    n: usize,
    l: usize,
    coeffs: Vec<f64>,
}

impl ZonalDefect {
    pub fn new(n: usize, l: usize) -> Self {
        let mut coeffs: Vec<f64> = gegenbauer_shifted_coefficients(n, l).iter().map(to_f64).collect();
        coeffs[0] = 0.0;
        ZonalDefect { n, l, coeffs }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x.abs() < 0.5 {
            self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
        } else {
            gegenbauer(self.n, self.l, 1.0 + x) - 1.0
        }
    }
}

/// `P_l(u_12)` as an exact sphere polynomial.
pub fn zonal_poly(dims: ModelDims, l: usize) -> Result<ExactPoly> {
    if dims.sites < 2 {
        return Err(Error::input("a zonal polynomial in u12 needs at least two sites"));
    }
    let u = DotMonomial::var(SitePair::new(0, 1));
    let terms = gegenbauer_coefficients(dims.n, l).into_iter().enumerate().map(|(k, c)| (u.pow(k as u32), c));
    Polynomial::from_terms(Mode::Sphere, dims, terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    #[test]
    fn low_degree_values() {
        for n in 2..8 {
            assert_eq!(gegenbauer(n, 0, 0.3), 1.0);
            assert_eq!(gegenbauer(n, 1, 0.3), 0.3);
            for l in 0..9 {
                assert!((gegenbauer(n, l, 1.0) - 1.0).abs() < 1e-14);
            }
        }
        assert_eq!(gegenbauer_coefficients(3, 2), vec![frac(-1, 2), frac(0, 1), frac(3, 2)]);
        assert_eq!(gegenbauer_coefficients(4, 2), vec![frac(-1, 3), frac(0, 1), frac(4, 3)]);
    }

    #[test]
    fn circle_and_legendre_cases() {
        for l in 0..10 {
            for &s in &[-1.0, -0.6, 0.1, 0.77, 1.0] {
                let cheb = (l as f64 * f64::acos(s)).cos();
                assert!((gegenbauer(2, l, s) - cheb).abs() < 1e-12);
            }
        }
        let s = 0.4f64;
        assert!((gegenbauer(3, 3, s) - 0.5 * (5.0 * s.powi(3) - 3.0 * s)).abs() < 1e-15);
    }

    #[test]
    fn exact_and_float_forms_agree() {
        for n in 2..6 {
            for l in 0..8 {
                let c = gegenbauer_coefficients(n, l);
                let defect = ZonalDefect::new(n, l);
                for &s in &[-0.9, -0.2, 0.35, 0.6, 0.999] {
                    let horner = c.iter().rev().fold(0.0, |acc, v| acc * s + to_f64(v));
                    assert!((horner - gegenbauer(n, l, s)).abs() < 1e-12);
                    assert!((defect.eval(s - 1.0) - (horner - 1.0)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zonal_poly_shape() {
        let p = zonal_poly(ModelDims { n: 3, sites: 2 }, 2).unwrap();
        assert_eq!(p.len(), 2);
        assert!(zonal_poly(ModelDims { n: 3, sites: 1 }, 2).is_err());
    }
}
