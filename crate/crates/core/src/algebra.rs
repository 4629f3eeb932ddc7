//! Sparse commutative polynomials in formal dot-product variables.
//!
//! A [`DotMonomial`] is a product of powers of `u_ij = σ_i·σ_j` (sphere mode,
//! `i < j`) or `v_ij = x_i·x_j` (Gaussian mode, `i <= j`). The variables are
//! treated as free commuting symbols: Gram relations that hold between actual
//! dot products when `N > n` are not quotiented out.
//!
//! Site indices are 0-based in the API and 1-based in every textual form.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{FromPrimitive, Num};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether the polynomial lives on products of spheres or on Gaussian spins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sphere,
    Gaussian,
}

impl Mode {
    fn symbol(self) -> char {
        match self {
            Mode::Sphere => 'u',
            Mode::Gaussian => 'v',
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Sphere => f.write_str("sphere"),
            Mode::Gaussian => f.write_str("gaussian"),
        }
    }
}

/// Ambient dimension `n` of each spin and number of sites `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelDims {
    pub n: usize,
    pub sites: usize,
}

impl ModelDims {
    /// Sphere models need `n >= 2`; Gaussian spins may be one-dimensional.
    pub fn new(mode: Mode, n: usize, sites: usize) -> Result<Self> {
        let min_n = match mode {
            Mode::Sphere => 2,
            Mode::Gaussian => 1,
        };
        if n < min_n {
            return Err(Error::input(format!("{mode} mode requires n >= {min_n}, got n = {n}")));
        }
        if sites == 0 {
            return Err(Error::input("a model needs at least one site"));
        }
        Ok(ModelDims { n, sites })
    }
}

/// An unordered pair of sites, stored with `i <= j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SitePair {
    pub i: usize,
    pub j: usize,
}

impl SitePair {
    pub fn new(a: usize, b: usize) -> Self {
        SitePair { i: a.min(b), j: a.max(b) }
    }

    pub fn is_diagonal(&self) -> bool {
        self.i == self.j
    }

    /// The other endpoint, if `site` is one of the two.
    pub fn partner(&self, site: usize) -> Option<usize> {
        if self.i == site {
            Some(self.j)
        } else if self.j == site {
            Some(self.i)
        } else {
            None
        }
    }

    fn check(&self, mode: Mode, sites: usize) -> Result<()> {
        if self.j >= sites {
            return Err(Error::input(format!(
                "site pair ({}, {}) out of range for N = {sites}",
                self.i + 1,
                self.j + 1
            )));
        }
        if mode == Mode::Sphere && self.is_diagonal() {
            return Err(Error::input(format!(
                "diagonal pair ({0}, {0}) is not a sphere variable (σ·σ = 1)",
                self.i + 1
            )));
        }
        Ok(())
    }
}

/// `∏ (s_i·s_j)^{n_ij}` as a sorted list of pairs with positive exponents.
///
/// The derived ordering is lexicographic on the sorted pair list, which is the
/// canonical monomial order for serialization.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DotMonomial {
    powers: Vec<(SitePair, u32)>,
}

impl DotMonomial {
    pub fn one() -> Self {
        DotMonomial { powers: Vec::new() }
    }

    pub fn var(pair: SitePair) -> Self {
        DotMonomial { powers: vec![(pair, 1)] }
    }

    /// Merges repeated pairs and drops zero exponents.
    pub fn from_powers<I: IntoIterator<Item = (SitePair, u32)>>(powers: I) -> Self {
        let mut map: BTreeMap<SitePair, u32> = BTreeMap::new();
        for (pair, p) in powers {
            *map.entry(pair).or_insert(0) += p;
        }
        DotMonomial { powers: map.into_iter().filter(|&(_, p)| p > 0).collect() }
    }

    pub fn powers(&self) -> &[(SitePair, u32)] {
        &self.powers
    }

    pub fn is_one(&self) -> bool {
        self.powers.is_empty()
    }

    pub fn exponent(&self, pair: SitePair) -> u32 {
        self.powers.binary_search_by(|(p, _)| p.cmp(&pair)).map(|k| self.powers[k].1).unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.powers.iter().map(|&(_, p)| p).sum()
    }

    /// Per-site degree `d_i`; diagonal pairs count twice.
    pub fn site_degrees(&self, sites: usize) -> Vec<u32> {
        let mut d = vec![0u32; sites];
        for &(pair, p) in &self.powers {
            d[pair.i] += p;
            d[pair.j] += p;
        }
        d
    }

    pub fn max_site(&self) -> Option<usize> {
        self.powers.iter().map(|(pair, _)| pair.j).max()
    }

    /// Factors touching `site`, as `(partner, exponent)`. A diagonal pair
    /// reports `site` itself as the partner.
    pub fn partners(&self, site: usize) -> Vec<(usize, u32)> {
        self.powers.iter().filter_map(|&(pair, p)| pair.partner(site).map(|q| (q, p))).collect()
    }

    /// Splits into (factors touching `site`, the rest).
    pub fn split_site(&self, site: usize) -> (DotMonomial, DotMonomial) {
        let (with, without): (Vec<_>, Vec<_>) = self.powers.iter().partition(|(pair, _)| pair.partner(site).is_some());
        (DotMonomial { powers: with }, DotMonomial { powers: without })
    }

    /// Applies exponent changes. Returns `None` if an exponent would go negative.
    pub fn shifted(&self, changes: &[(SitePair, i32)]) -> Option<DotMonomial> {
        let mut map: BTreeMap<SitePair, i64> = self.powers.iter().map(|&(k, p)| (k, p as i64)).collect();
        for &(pair, delta) in changes {
            *map.entry(pair).or_insert(0) += delta as i64;
        }
        if map.values().any(|&p| p < 0) {
            return None;
        }
        Some(DotMonomial { powers: map.into_iter().filter(|&(_, p)| p > 0).map(|(k, p)| (k, p as u32)).collect() })
    }

    pub fn mul(&self, other: &DotMonomial) -> DotMonomial {
        DotMonomial::from_powers(self.powers.iter().chain(other.powers.iter()).copied())
    }

    pub fn pow(&self, k: u32) -> DotMonomial {
        if k == 0 {
            return DotMonomial::one();
        }
        DotMonomial { powers: self.powers.iter().map(|&(pair, p)| (pair, p * k)).collect() }
    }

    /// Moves the exponent of `(i, j)` to `(perm[i], perm[j])`.
    pub fn relabel(&self, perm: &[usize]) -> DotMonomial {
        DotMonomial::from_powers(self.powers.iter().map(|&(pair, p)| (SitePair::new(perm[pair.i], perm[pair.j]), p)))
    }

    /// Value at the given Gram matrix `gram[i][j] = s_i·s_j`.
    pub fn evaluate(&self, gram: &[Vec<f64>]) -> f64 {
        self.powers.iter().map(|&(pair, p)| gram[pair.i][pair.j].powi(p as i32)).product()
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, symbol: char) -> fmt::Result {
        if self.powers.is_empty() {
            return f.write_str("1");
        }
        for (k, &(pair, p)) in self.powers.iter().enumerate() {
            if k > 0 {
                f.write_str("·")?;
            }
            if pair.j < 9 {
                write!(f, "{symbol}{}{}", pair.i + 1, pair.j + 1)?;
            } else {
                write!(f, "{symbol}({},{})", pair.i + 1, pair.j + 1)?;
            }
            if p > 1 {
                write!(f, "^{p}")?;
            }
        }
        Ok(())
    }
}

/// Coefficient field of a polynomial: exact rationals or `f64`.
pub trait Coeff:
    Clone + fmt::Debug + fmt::Display + PartialOrd + Num + Neg<Output = Self> + FromPrimitive + Send + Sync
{
}

impl<T> Coeff for T where
    T: Clone + fmt::Debug + fmt::Display + PartialOrd + Num + Neg<Output = T> + FromPrimitive + Send + Sync
{
}

/// A finite sum of dot monomials, canonical by construction: no duplicate
/// monomials and no zero coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial<C = BigRational> {
    mode: Mode,
    dims: ModelDims,
    terms: BTreeMap<DotMonomial, C>,
}

pub type ExactPoly = Polynomial<BigRational>;
pub type FloatPoly = Polynomial<f64>;

impl<C: Coeff> Polynomial<C> {
    pub fn zero(mode: Mode, dims: ModelDims) -> Self {
        Polynomial { mode, dims, terms: BTreeMap::new() }
    }

    pub fn constant(mode: Mode, dims: ModelDims, c: C) -> Self {
        let mut p = Self::zero(mode, dims);
        p.add_term(DotMonomial::one(), c);
        p
    }

    pub fn one(mode: Mode, dims: ModelDims) -> Self {
        Self::constant(mode, dims, C::one())
    }

    /// Single variable `s_i·s_j` (0-based sites).
    pub fn var(mode: Mode, dims: ModelDims, i: usize, j: usize) -> Result<Self> {
        Self::from_terms(mode, dims, [(DotMonomial::var(SitePair::new(i, j)), C::one())])
    }

    /// Builds the canonical form of an arbitrary term list: duplicate
    /// monomials merge, zero coefficients and zero exponents disappear.
    pub fn from_terms<I>(mode: Mode, dims: ModelDims, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (DotMonomial, C)>,
    {
        ModelDims::new(mode, dims.n, dims.sites)?;
        let mut p = Self::zero(mode, dims);
        for (m, c) in terms {
            for (pair, _) in m.powers() {
                pair.check(mode, dims.sites)?;
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub(crate) fn from_terms_unchecked<I>(mode: Mode, dims: ModelDims, terms: I) -> Self
    where
        I: IntoIterator<Item = (DotMonomial, C)>,
    {
        let mut p = Self::zero(mode, dims);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn terms(&self) -> impl ExactSizeIterator<Item = (&DotMonomial, &C)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &DotMonomial) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    pub fn constant_term(&self) -> C {
        self.coeff(&DotMonomial::one())
    }

    /// Adds `c·m` in place, keeping the canonical form.
    pub fn add_term(&mut self, m: DotMonomial, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().clone() + c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.mode != other.mode || self.dims != other.dims {
            return Err(Error::input(format!(
                "model mismatch: {} n={} N={} vs {} n={} N={}",
                self.mode, self.dims.n, self.dims.sites, other.mode, other.dims.n, other.dims.sites
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&-other.clone())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let mut out = Self::zero(self.mode, self.dims);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a.mul(b), ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &C) -> Self {
        Self::from_terms_unchecked(
            self.mode,
            self.dims,
            self.terms.iter().map(|(m, v)| (m.clone(), v.clone() * c.clone())),
        )
    }

    /// Multiplies every term by the monomial `m`.
    pub fn mul_monomial(&self, m: &DotMonomial) -> Self {
        Self::from_terms_unchecked(self.mode, self.dims, self.terms.iter().map(|(k, v)| (k.mul(m), v.clone())))
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one(self.mode, self.dims);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Cone membership at the representation level: every coefficient `>= 0`.
    pub fn is_cone(&self) -> bool {
        self.terms.values().all(|c| *c >= C::zero())
    }

    pub fn negative_terms(&self) -> Vec<(DotMonomial, C)> {
        self.terms.iter().filter(|(_, c)| **c < C::zero()).map(|(m, c)| (m.clone(), c.clone())).collect()
    }

    /// Sum of absolute coefficient values; bounds `|p|` on spheres since `|u_ij| <= 1`.
    pub fn abs_coeff_sum(&self) -> C {
        self.terms.values().fold(C::zero(), |acc, c| if *c < C::zero() { acc - c.clone() } else { acc + c.clone() })
    }

    pub fn max_total_degree(&self) -> u32 {
        self.terms.keys().map(DotMonomial::total_degree).max().unwrap_or(0)
    }

    /// Applies the site permutation `perm` (0-based, `perm[i]` is the new
    /// label of site `i`).
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let sites = self.dims.sites;
        let mut seen = vec![false; sites];
        if perm.len() != sites {
            return Err(Error::input(format!("permutation has length {}, expected {sites}", perm.len())));
        }
        for &p in perm {
            if p >= sites || seen[p] {
                return Err(Error::input(format!("{perm:?} is not a permutation of the sites")));
            }
            seen[p] = true;
        }
        Ok(Self::from_terms_unchecked(
            self.mode,
            self.dims,
            self.terms.iter().map(|(m, c)| (m.relabel(perm), c.clone())),
        ))
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Polynomial<D> {
        Polynomial::from_terms_unchecked(self.mode, self.dims, self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }
}

impl ExactPoly {
    pub fn to_f64(&self) -> FloatPoly {
        self.map_coeffs(crate::rational::to_f64)
    }
}

impl FloatPoly {
    /// Value at the Gram matrix of concrete vectors.
    pub fn evaluate(&self, gram: &[Vec<f64>]) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.evaluate(gram)).sum()
    }

    /// Largest coefficient-wise absolute difference.
    pub fn max_abs_diff(&self, other: &FloatPoly) -> f64 {
        let mut worst: f64 = 0.0;
        for (m, c) in &self.terms {
            worst = worst.max((c - other.coeff(m)).abs());
        }
        for (m, c) in &other.terms {
            if !self.terms.contains_key(m) {
                worst = worst.max(c.abs());
            }
        }
        worst
    }
}

impl<C: Coeff> Neg for Polynomial<C> {
    type Output = Self;
    fn neg(self) -> Self {
        let mode = self.mode;
        let dims = self.dims;
        Polynomial { mode, dims, terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect() }
    }
}

// Operator forms panic on a model mismatch; use `try_*` for unchecked inputs.
impl<C: Coeff> Add for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn add(self, rhs: Self) -> Polynomial<C> {
        self.try_add(rhs).expect("polynomial model mismatch")
    }
}

impl<C: Coeff> Sub for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn sub(self, rhs: Self) -> Polynomial<C> {
        self.try_sub(rhs).expect("polynomial model mismatch")
    }
}

impl<C: Coeff> Mul for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn mul(self, rhs: Self) -> Polynomial<C> {
        self.try_mul(rhs).expect("polynomial model mismatch")
    }
}

impl<C: Coeff> Add for Polynomial<C> {
    type Output = Polynomial<C>;
    fn add(self, rhs: Self) -> Polynomial<C> {
        &self + &rhs
    }
}

impl<C: Coeff> Mul for Polynomial<C> {
    type Output = Polynomial<C>;
    fn mul(self, rhs: Self) -> Polynomial<C> {
        &self * &rhs
    }
}

impl<C: Coeff> fmt::Display for Polynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            if m.is_one() {
                write!(f, "{c}")?;
            } else {
                if !c.is_one() {
                    write!(f, "{c}·")?;
                }
                m.write(f, self.mode.symbol())?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for DotMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 'u')
    }
}
