//! Finite monomial bases closed under linear operators, and the exact
//! operator matrices on them.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;

use crate::algebra::{DotMonomial, ExactPoly, FloatPoly, Mode, ModelDims, Polynomial};
use crate::error::{Error, Result};
use crate::linalg::RatMatrix;
use crate::rational::to_f64;

/// Operator acting monomial by monomial.
pub type MonomialOp<'a> = &'a (dyn Fn(&DotMonomial) -> ExactPoly + Sync);

#[derive(Debug, Clone)]
pub struct InvariantBasis {
    mode: Mode,
    dims: ModelDims,
    monomials: Vec<DotMonomial>,
    index: HashMap<DotMonomial, usize>,
}

impl InvariantBasis {
    /// Smallest monomial set containing `seeds` and closed under every
    /// operator in `ops`. Seeds keep their order; new monomials follow in
    /// breadth-first discovery order.
    pub fn closure<I>(mode: Mode, dims: ModelDims, seeds: I, cap: usize, ops: &[MonomialOp<'_>]) -> Result<Self>
    where
        I: IntoIterator<Item = DotMonomial>,
    {
        let mut basis = InvariantBasis { mode, dims, monomials: Vec::new(), index: HashMap::new() };
        let mut frontier = Vec::new();
        for m in seeds {
            if basis.insert(m.clone(), cap)? {
                frontier.push(m);
            }
        }
        while !frontier.is_empty() {
            let images: Vec<Vec<ExactPoly>> =
                frontier.par_iter().map(|m| ops.iter().map(|op| op(m)).collect()).collect();
            let mut next = Vec::new();
            for image in images.iter().flatten() {
                for (m, _) in image.terms() {
                    if basis.insert(m.clone(), cap)? {
                        next.push(m.clone());
                    }
                }
            }
            frontier = next;
        }
        Ok(basis)
    }

    fn insert(&mut self, m: DotMonomial, cap: usize) -> Result<bool> {
        if self.index.contains_key(&m) {
            return Ok(false);
        }
        if self.monomials.len() >= cap {
            return Err(Error::Resource(format!("invariant basis exceeds the cap of {cap} monomials")));
        }
        self.index.insert(m.clone(), self.monomials.len());
        self.monomials.push(m);
        Ok(true)
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[DotMonomial] {
        &self.monomials
    }

    pub fn index_of(&self, m: &DotMonomial) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    fn slot(&self, m: &DotMonomial) -> Result<usize> {
        self.index_of(m).ok_or_else(|| Error::input(format!("monomial {m} lies outside the invariant basis")))
    }

    pub fn coefficients(&self, p: &ExactPoly) -> Result<Vec<BigRational>> {
        let mut v = vec![BigRational::zero(); self.len()];
        for (m, c) in p.terms() {
            v[self.slot(m)?] = c.clone();
        }
        Ok(v)
    }

    pub fn coefficients_f64(&self, p: &FloatPoly) -> Result<DVector<f64>> {
        let mut v = DVector::zeros(self.len());
        for (m, c) in p.terms() {
            v[self.slot(m)?] = *c;
        }
        Ok(v)
    }

    pub fn float_poly(&self, v: &DVector<f64>) -> FloatPoly {
        Polynomial::from_terms_unchecked(self.mode, self.dims, self.monomials.iter().cloned().zip(v.iter().copied()))
    }

    pub fn exact_poly(&self, v: &[BigRational]) -> ExactPoly {
        Polynomial::from_terms_unchecked(self.mode, self.dims, self.monomials.iter().cloned().zip(v.iter().cloned()))
    }

    /// Matrix of `op` on this basis; column `j` holds the image of basis element `j`.
    pub fn operator_matrix(&self, op: MonomialOp<'_>) -> Result<SemigroupMatrix> {
        let images: Vec<ExactPoly> = self.monomials.par_iter().map(op).collect();
        let mut columns = Vec::with_capacity(self.len());
        for image in &images {
            let mut col = Vec::with_capacity(image.len());
            for (m, c) in image.terms() {
                let row =
                    self.index_of(m).ok_or_else(|| Error::input(format!("basis is not closed: image contains {m}")))?;
                col.push((row, c.clone()));
            }
            col.sort_by_key(|&(r, _)| r);
            columns.push(col);
        }
        Ok(SemigroupMatrix { basis: self.clone(), columns })
    }
}

/// A linear operator restricted to an invariant monomial basis, stored as
/// exact sparse columns.
#[derive(Debug, Clone)]
pub struct SemigroupMatrix {
    basis: InvariantBasis,
    columns: Vec<Vec<(usize, BigRational)>>,
}

impl SemigroupMatrix {
    pub fn basis(&self) -> &InvariantBasis {
        &self.basis
    }

    pub fn size(&self) -> usize {
        self.columns.len()
    }

    pub fn entry(&self, row: usize, col: usize) -> BigRational {
        self.columns[col].iter().find(|&&(r, _)| r == row).map(|(_, v)| v.clone()).unwrap_or_else(BigRational::zero)
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        let n = self.size();
        let mut out = DMatrix::zeros(n, n);
        for (j, col) in self.columns.iter().enumerate() {
            for (i, v) in col {
                out[(*i, j)] = to_f64(v);
            }
        }
        out
    }

    pub fn to_rat(&self) -> RatMatrix {
        let n = self.size();
        let mut out = RatMatrix::zeros(n, n);
        for (j, col) in self.columns.iter().enumerate() {
            for (i, v) in col {
                out.set(*i, j, v.clone());
            }
        }
        out
    }

    /// Applies the operator to an exact coefficient vector.
    pub fn apply(&self, v: &[BigRational]) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); self.size()];
        for (j, col) in self.columns.iter().enumerate() {
            if v[j].is_zero() {
                continue;
            }
            for (i, c) in col {
                out[*i] += c * &v[j];
            }
        }
        out
    }
}
