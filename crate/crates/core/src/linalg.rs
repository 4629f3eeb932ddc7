//! Dense matrices over exact rationals.

use std::fmt;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_rational, to_f64};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix { rows, cols, data: vec![BigRational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigRational::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::input("ragged matrix rows"));
        }
        Ok(RatMatrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigRational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigRational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> impl Iterator<Item = &BigRational> {
        self.data.iter()
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn mul(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = RatMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        let v = out.get(i, j) + a * b;
                        out.set(i, j, v);
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigRational]) -> Vec<BigRational> {
        (0..self.rows).map(|i| self.row(i).iter().zip(v).fold(BigRational::zero(), |acc, (a, b)| acc + a * b)).collect()
    }

    pub fn add(&self, other: &RatMatrix) -> RatMatrix {
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, c: &BigRational) -> RatMatrix {
        RatMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * c).collect() }
    }

    /// Leading principal minors `det(A[..k, ..k])`, computed from the pivots
    /// of elimination without row exchanges. Stops after the first zero
    /// minor, since later pivots are then undefined.
    pub fn leading_minors(&self) -> Vec<BigRational> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut minors = Vec::with_capacity(n);
        let mut det = BigRational::one();
        for k in 0..n {
            let pivot = a.get(k, k).clone();
            det *= &pivot;
            minors.push(det.clone());
            if pivot.is_zero() {
                break;
            }
            for i in k + 1..n {
                let factor = a.get(i, k) / &pivot;
                if factor.is_zero() {
                    continue;
                }
                for j in k..n {
                    let v = a.get(i, j) - &factor * a.get(k, j);
                    a.set(i, j, v);
                }
            }
        }
        minors
    }

    /// Exact positive definiteness of a symmetric matrix (Sylvester's criterion).
    pub fn is_positive_definite(&self) -> bool {
        if !self.is_symmetric() {
            return false;
        }
        let minors = self.leading_minors();
        minors.len() == self.rows && minors.iter().all(|m| m.is_positive())
    }

    /// Gauss–Jordan inverse.
    pub fn inverse(&self) -> Result<RatMatrix> {
        if !self.is_square() {
            return Err(Error::input("inverse of a non-square matrix"));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = RatMatrix::identity(n);
        for col in 0..n {
            let pivot_row =
                (col..n).find(|&r| !a.get(r, col).is_zero()).ok_or_else(|| Error::input("singular matrix"))?;
            if pivot_row != col {
                for j in 0..n {
                    a.data.swap(pivot_row * n + j, col * n + j);
                    inv.data.swap(pivot_row * n + j, col * n + j);
                }
            }
            let p = a.get(col, col).clone();
            for j in 0..n {
                a.set(col, j, a.get(col, j) / &p);
                inv.set(col, j, inv.get(col, j) / &p);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a.get(r, col).clone();
                if factor.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let va = a.get(r, j) - &factor * a.get(col, j);
                    a.set(r, j, va);
                    let vi = inv.get(r, j) - &factor * inv.get(col, j);
                    inv.set(r, j, vi);
                }
            }
        }
        Ok(inv)
    }

    /// Exact `A = L D Lᵀ` for a symmetric positive definite matrix, with `L`
    /// unit lower triangular.
    pub fn ldl(&self) -> Result<(RatMatrix, Vec<BigRational>)> {
        if !self.is_positive_definite() {
            return Err(Error::input("LDLᵀ needs a symmetric positive definite matrix"));
        }
        let n = self.rows;
        let mut l = RatMatrix::identity(n);
        let mut d = vec![BigRational::zero(); n];
        for j in 0..n {
            let mut dj = self.get(j, j).clone();
            for k in 0..j {
                dj -= l.get(j, k) * l.get(j, k) * &d[k];
            }
            d[j] = dj;
            for i in j + 1..n {
                let mut v = self.get(i, j).clone();
                for k in 0..j {
                    v -= l.get(i, k) * l.get(j, k) * &d[k];
                }
                l.set(i, j, v / &d[j]);
            }
        }
        Ok((l, d))
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| to_f64(self.get(i, j)))
    }
}

impl fmt::Display for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(format_rational).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    fn m(rows: &[&[i64]]) -> RatMatrix {
        RatMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect()).unwrap()
    }

    #[test]
    fn inverse_of_path_matrix() {
        let a = m(&[&[2, -1], &[-1, 2]]);
        let inv = a.inverse().unwrap();
        let want = RatMatrix::from_rows(vec![vec![frac(2, 3), frac(1, 3)], vec![frac(1, 3), frac(2, 3)]]).unwrap();
        assert_eq!(inv, want);
        assert_eq!(a.mul(&inv), RatMatrix::identity(2));
    }

    #[test]
    fn inverse_needs_pivoting() {
        let a = m(&[&[0, 1], &[1, 0]]);
        assert_eq!(a.inverse().unwrap(), a);
        assert!(m(&[&[1, 2], &[2, 4]]).inverse().is_err());
    }

    #[test]
    fn minors_and_definiteness() {
        assert_eq!(m(&[&[2, -1], &[-1, 2]]).leading_minors(), vec![int(2), int(3)]);
        assert!(m(&[&[2, -1], &[-1, 2]]).is_positive_definite());
        assert!(!m(&[&[1, 2], &[2, 1]]).is_positive_definite());
        assert!(!m(&[&[0, 0], &[0, 1]]).is_positive_definite());
        assert!(!m(&[&[2, 1], &[0, 2]]).is_positive_definite());
    }

    #[test]
    fn ldl_reconstructs() {
        let a = m(&[&[4, -1, -2], &[-1, 3, 0], &[-2, 0, 5]]);
        let (l, d) = a.ldl().unwrap();
        let mut dm = RatMatrix::zeros(3, 3);
        for (i, v) in d.into_iter().enumerate() {
            dm.set(i, i, v);
        }
        let mut lt = RatMatrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                lt.set(i, j, l.get(j, i).clone());
            }
        }
        assert_eq!(l.mul(&dm).mul(&lt), a);
    }
}
