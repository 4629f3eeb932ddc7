//! Helpers around [`BigRational`]: parsing, float conversion and a fixed
//! significant-digit decimal rendering.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

pub fn frac(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"p"` or `"p/q"` (base 10, optional sign on `p`).
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::input(format!("malformed rational {s:?}"));
    let (num, den) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(Error::input(format!("zero denominator in {s:?}")));
    }
    Ok(BigRational::new(num, den))
}

/// Canonical `p` or `p/q` text form.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // Huge numerators/denominators: shift both down to a representable range.
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift = |x: &BigInt, bits: i64| -> (f64, i64) {
        let excess = (bits - 60).max(0);
        ((x >> excess as usize).to_f64().unwrap_or(0.0), excess)
    };
    let (n, ne) = shift(r.numer(), nb);
    let (d, de) = shift(r.denom(), db);
    (n / d) * 2f64.powi((ne - de) as i32)
}

/// Renders `r` with `digits` significant decimal digits, rounding half away
/// from zero. Plain positional notation is used for magnitudes in
/// `[1e-5, 1e15)`, scientific notation otherwise.
pub fn to_decimal(r: &BigRational, digits: usize) -> String {
    assert!(digits >= 1);
    if r.is_zero() {
        return format!("0.{}", "0".repeat(digits - 1));
    }
    let neg = r.is_negative();
    let a = r.abs();
    // Exponent e with 10^e <= a < 10^(e+1).
    let mut e = estimate_exponent(&a);
    while pow10(e) > a {
        e -= 1;
    }
    while pow10(e + 1) <= a {
        e += 1;
    }
    let scale = digits as i64 - 1 - e;
    let scaled = &a * pow10(scale);
    let (q, rem) = scaled.numer().div_rem(scaled.denom());
    let mut mantissa = q;
    if BigRational::new(rem * 2, scaled.denom().clone()) >= BigRational::one() {
        mantissa += 1;
    }
    if mantissa.to_string().len() > digits {
        // Rounded up to the next power of ten.
        mantissa /= 10;
        e += 1;
    }
    let text = mantissa.to_string();
    let body = if (-5..15).contains(&e) {
        if e >= 0 {
            let int_len = (e + 1) as usize;
            let (ip, fp) = text.split_at(int_len);
            if fp.is_empty() {
                ip.to_string()
            } else {
                format!("{ip}.{fp}")
            }
        } else {
            format!("0.{}{}", "0".repeat((-e - 1) as usize), text)
        }
    } else {
        let (h, t) = text.split_at(1);
        if t.is_empty() {
            format!("{h}e{e}")
        } else {
            format!("{h}.{t}e{e}")
        }
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

fn pow10(e: i64) -> BigRational {
    let p = num_traits::pow(BigInt::from(10), e.unsigned_abs() as usize);
    if e >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

fn estimate_exponent(a: &BigRational) -> i64 {
    let bits = a.numer().bits() as i64 - a.denom().bits() as i64;
    (bits as f64 * std::f64::consts::LOG10_2).floor() as i64
}

pub fn is_nonnegative(r: &BigRational) -> bool {
    r.numer().sign() != Sign::Minus
}
