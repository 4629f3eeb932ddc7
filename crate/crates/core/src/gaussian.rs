//! Ferromagnetic Gaussian spins: density `∝ exp(-Σ f_ij x_i·x_j / 2)` on
//! `(R^n)^N` with `F` symmetric positive definite and `f_ij ≤ 0` off the
//! diagonal.
//!
//! Polynomials live in the gaussian mode, in the variables `v_ij = x_i·x_j`
//! with `i ≤ j`. Every component of the spins is an independent centered
//! Gaussian vector with covariance `C = F⁻¹`, so moments are exact
//! rationals and the partition function never appears.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Coeff, DotMonomial, ExactPoly, FloatPoly, Mode, Polynomial, SitePair};
use crate::basis::{InvariantBasis, SemigroupMatrix};
use crate::error::{Error, Result};
use crate::expm::{expm, product_limit};
use crate::griffiths::{check_second, Expectation, GriffithsReport};
use crate::heat::DEFAULT_BASIS_CAP;
use crate::linalg::RatMatrix;
use crate::rational::{format_rational, to_f64};

/// Entries of `e^{-tF}` may dip this far below zero from rounding alone.
pub const SEMIGROUP_SLACK: f64 = 1e-12;

/// Outcome of checking the three defining properties separately.
#[derive(Debug, Clone, PartialEq)]
pub struct FerroDiagnosis {
    pub symmetric: bool,
    pub positive_definite: bool,
    pub off_diagonal_nonpositive: bool,
    pub leading_minors: Vec<BigRational>,
}

impl FerroDiagnosis {
    pub fn is_valid(&self) -> bool {
        self.symmetric && self.positive_definite && self.off_diagonal_nonpositive
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.symmetric {
            out.push("matrix is not symmetric".to_string());
        }
        if !self.positive_definite {
            let minors: Vec<String> = self.leading_minors.iter().map(format_rational).collect();
            out.push(format!("matrix is not positive definite (leading minors: {})", minors.join(", ")));
        }
        if !self.off_diagonal_nonpositive {
            out.push("an off-diagonal entry is positive".to_string());
        }
        out
    }
}

pub fn validate_ferro(m: &RatMatrix) -> Result<FerroDiagnosis> {
    if !m.is_square() || m.rows() == 0 {
        return Err(Error::input(format!("expected a non-empty square matrix, got {}×{}", m.rows(), m.cols())));
    }
    let n = m.rows();
    let symmetric = m.is_symmetric();
    let leading_minors = m.leading_minors();
    let positive_definite = symmetric && leading_minors.len() == n && leading_minors.iter().all(|v| v.is_positive());
    let off_diagonal_nonpositive = (0..n).all(|i| (0..n).all(|j| i == j || !m.get(i, j).is_positive()));
    Ok(FerroDiagnosis { symmetric, positive_definite, off_diagonal_nonpositive, leading_minors })
}

/// A validated ferromagnetic interaction matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FerroMatrix {
    matrix: RatMatrix,
}

impl FerroMatrix {
    pub fn new(matrix: RatMatrix) -> Result<Self> {
        let diagnosis = validate_ferro(&matrix)?;
        if !diagnosis.is_valid() {
            return Err(Error::input(format!("not a ferromagnetic matrix: {}", diagnosis.problems().join("; "))));
        }
        Ok(FerroMatrix { matrix })
    }

    pub fn matrix(&self) -> &RatMatrix {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn entry(&self, i: usize, j: usize) -> &BigRational {
        self.matrix.get(i, j)
    }

    /// Exact `C = F⁻¹`, checked entrywise non-negative.
    pub fn covariance(&self) -> Result<RatMatrix> {
        let c = self.matrix.inverse()?;
        if c.entries().any(|v| v.is_negative()) {
            return Err(Error::numeric("inverse of a ferromagnetic matrix has a negative entry"));
        }
        Ok(c)
    }

    /// `e^{-tF}`, checked entrywise `>= -SEMIGROUP_SLACK`.
    pub fn semigroup(&self, t: f64) -> Result<DMatrix<f64>> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::input(format!("semigroup time must be finite and >= 0, got {t}")));
        }
        let s = expm(&(self.matrix.to_f64() * -t));
        let min = s.min();
        if min < -SEMIGROUP_SLACK {
            return Err(Error::numeric(format!("e^(-tF) has entry {min:e} at t = {t}")));
        }
        Ok(s)
    }

    /// `(I - tF/m)^m`.
    pub fn semigroup_product_limit(&self, t: f64, m: u32) -> DMatrix<f64> {
        product_limit(&-self.matrix.to_f64(), t, m)
    }

    /// Smallest eigenvalue, the slowest decay rate of `e^{-tF}`.
    pub fn spectral_gap(&self) -> f64 {
        SymmetricEigen::new(self.matrix.to_f64()).eigenvalues.min()
    }
}

/// Symmetric, off-diagonal entries `-k/16` with `k` uniform in `0..=16`,
/// diagonal `1 + Σ_j |f_ij|` (strictly diagonally dominant, hence positive definite).
pub fn random_ferro_matrix(size: usize, seed: u64) -> FerroMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = RatMatrix::zeros(size, size);
    for i in 0..size {
        for j in i + 1..size {
            let v = BigRational::new(BigInt::from(-rng.random_range(0..=16i64)), BigInt::from(16));
            m.set(i, j, v.clone());
            m.set(j, i, v);
        }
    }
    for i in 0..size {
        let off: BigRational = (0..size).filter(|&j| j != i).map(|j| m.get(i, j).abs()).sum();
        m.set(i, i, BigRational::one() + off);
    }
    FerroMatrix::new(m).expect("diagonally dominant by construction")
}

/// Exact Gaussian moments by contracting one factor at a time.
///
/// Writing `v_xa = Σ_c x_x^c x_a^c` and pairing the slot `x_x^c` by Wick:
/// with its own partner slot (`n C_xa E[rest]`), or with a slot `x_b` of
/// another factor `v_by`, which fuses the two factors into `v_ay`
/// (`C_xb E[v_ay · rest']`).
#[derive(Debug, Clone)]
pub struct GaussianMoments {
    n: usize,
    cov: RatMatrix,
    cache: HashMap<DotMonomial, BigRational>,
}

impl GaussianMoments {
    pub fn new(ferro: &FerroMatrix, n: usize) -> Result<Self> {
        Self::from_covariance(ferro.covariance()?, n)
    }

    pub fn from_covariance(cov: RatMatrix, n: usize) -> Result<Self> {
        if n == 0 || !cov.is_square() {
            return Err(Error::input("gaussian moments need n >= 1 and a square covariance"));
        }
        Ok(GaussianMoments { n, cov, cache: HashMap::new() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn covariance(&self) -> &RatMatrix {
        &self.cov
    }

    pub fn monomial_moment(&mut self, m: &DotMonomial) -> BigRational {
        if m.is_one() {
            return BigRational::one();
        }
        if let Some(v) = self.cache.get(m) {
            return v.clone();
        }
        let (pair, _) = m.powers()[0];
        let (x, a) = (pair.i, pair.j);
        let rest = m.shifted(&[(pair, -1)]).unwrap();
        let mut acc =
            BigRational::from_integer(BigInt::from(self.n)) * self.cov.get(x, a) * self.monomial_moment(&rest);
        for &(q, e) in rest.powers() {
            let reduced = rest.shifted(&[(q, -1)]).unwrap();
            for (b, y) in [(q.i, q.j), (q.j, q.i)] {
                let c = self.cov.get(x, b).clone();
                if c.is_zero() {
                    continue;
                }
                let fused = reduced.mul(&DotMonomial::var(SitePair::new(a, y)));
                acc += c * BigRational::from_integer(BigInt::from(e)) * self.monomial_moment(&fused);
            }
        }
        self.cache.insert(m.clone(), acc.clone());
        acc
    }

    pub fn moment(&mut self, p: &ExactPoly) -> Result<BigRational> {
        if p.mode() != Mode::Gaussian {
            return Err(Error::input("gaussian moments need a gaussian-mode polynomial"));
        }
        if p.dims().n != self.n || p.dims().sites != self.cov.rows() {
            return Err(Error::input(format!(
                "polynomial is over n = {}, N = {} but the model has n = {}, N = {}",
                p.dims().n,
                p.dims().sites,
                self.n,
                self.cov.rows()
            )));
        }
        let mut acc = BigRational::zero();
        for (m, c) in p.terms() {
            acc += c * self.monomial_moment(m);
        }
        Ok(acc)
    }
}

impl Expectation for GaussianMoments {
    fn expect(&mut self, p: &ExactPoly) -> Result<BigRational> {
        self.moment(p)
    }
}

pub fn gaussian_moment(p: &ExactPoly, ferro: &FerroMatrix) -> Result<BigRational> {
    GaussianMoments::new(ferro, p.dims().n)?.moment(p)
}

pub fn check_gaussian_griffiths(f: &ExactPoly, g: &ExactPoly, ferro: &FerroMatrix) -> Result<GriffithsReport> {
    let mut engine = GaussianMoments::new(ferro, f.dims().n)?;
    check_second(&mut engine, f, g)
}

fn require_gaussian<C: Coeff>(p: &Polynomial<C>) -> Result<()> {
    if p.mode() != Mode::Gaussian {
        return Err(Error::input("expected a gaussian-mode polynomial"));
    }
    Ok(())
}

fn int<C: Coeff>(v: i64) -> C {
    C::from_i64(v).expect("small integer coefficient")
}

/// Flat Laplacian of one monomial. At a site with `L` loops `v_ii` and
/// non-loop partner multiplicities `c_j` (`d = Σ c_j`):
/// `Δ_i m = (2L(2L+n-2) + 4Ld) m/v_ii + Σ_j c_j(c_j-1) v_jj m/v_ij²
///        + 2 Σ_{j<k} c_j c_k v_jk m/(v_ij v_ik)`.
pub(crate) fn laplacian_monomial(m: &DotMonomial, n: usize, sites: usize) -> Vec<(DotMonomial, i64)> {
    let mut out = Vec::new();
    for i in 0..sites {
        let partners = m.partners(i);
        let loops = partners.iter().find(|&&(j, _)| j == i).map_or(0, |&(_, e)| e as i64);
        let others: Vec<(usize, i64)> =
            partners.iter().filter(|&&(j, _)| j != i).map(|&(j, e)| (j, e as i64)).collect();
        let d: i64 = others.iter().map(|&(_, c)| c).sum();
        let ii = SitePair::new(i, i);
        if loops > 0 {
            let w = 2 * loops * (2 * loops + n as i64 - 2) + 4 * loops * d;
            out.push((m.shifted(&[(ii, -1)]).unwrap(), w));
        }
        for (a, &(j, cj)) in others.iter().enumerate() {
            if cj >= 2 {
                out.push((m.shifted(&[(SitePair::new(i, j), -2), (SitePair::new(j, j), 1)]).unwrap(), cj * (cj - 1)));
            }
            for &(k, ck) in &others[a + 1..] {
                let shifted = m
                    .shifted(&[(SitePair::new(i, j), -1), (SitePair::new(i, k), -1), (SitePair::new(j, k), 1)])
                    .unwrap();
                out.push((shifted, 2 * cj * ck));
            }
        }
    }
    out
}

pub fn gaussian_laplacian<C: Coeff>(p: &Polynomial<C>) -> Result<Polynomial<C>> {
    require_gaussian(p)?;
    let dims = p.dims();
    let mut out = Polynomial::zero(Mode::Gaussian, dims);
    for (m, c) in p.terms() {
        for (k, w) in laplacian_monomial(m, dims.n, dims.sites) {
            out.add_term(k, c.clone() * int::<C>(w));
        }
    }
    Ok(out)
}

/// `(∇Q·∇) m`, extended from `v_kl ↦ Σ_j f_kj v_jl + Σ_j f_lj v_jk` as a derivation.
fn drift_monomial(m: &DotMonomial, ferro: &FerroMatrix) -> Vec<(DotMonomial, BigRational)> {
    let size = ferro.size();
    let mut out = Vec::new();
    for &(pair, e) in m.powers() {
        let base = m.shifted(&[(pair, -1)]).unwrap();
        let weight = BigRational::from_integer(BigInt::from(e));
        for (k, l) in [(pair.i, pair.j), (pair.j, pair.i)] {
            for j in 0..size {
                let f = ferro.entry(k, j);
                if !f.is_zero() {
                    out.push((base.mul(&DotMonomial::var(SitePair::new(j, l))), f * &weight));
                }
            }
        }
    }
    out
}

fn check_model(p: &ExactPoly, ferro: &FerroMatrix) -> Result<()> {
    require_gaussian(p)?;
    if p.dims().sites != ferro.size() {
        return Err(Error::input(format!(
            "polynomial has N = {} but the matrix is {}×{}",
            p.dims().sites,
            ferro.size(),
            ferro.size()
        )));
    }
    Ok(())
}

pub fn drift(p: &ExactPoly, ferro: &FerroMatrix) -> Result<ExactPoly> {
    check_model(p, ferro)?;
    let mut out = Polynomial::zero(Mode::Gaussian, p.dims());
    for (m, c) in p.terms() {
        for (k, w) in drift_monomial(m, ferro) {
            out.add_term(k, c * w);
        }
    }
    Ok(out)
}

/// `A = Δ - ∇Q·∇`.
pub fn ou_generator(p: &ExactPoly, ferro: &FerroMatrix) -> Result<ExactPoly> {
    gaussian_laplacian(p)?.try_sub(&drift(p, ferro)?)
}

/// `∇_i m = Σ_b x_b · (coefficient, monomial)`.
fn site_gradient(m: &DotMonomial, i: usize) -> Vec<(usize, i64, DotMonomial)> {
    m.partners(i)
        .into_iter()
        .map(|(b, e)| {
            let reduced = m.shifted(&[(SitePair::new(i, b), -1)]).unwrap();
            let w = if b == i { 2 * e as i64 } else { e as i64 };
            (b, w, reduced)
        })
        .collect()
}

/// `∇f·∇h = Σ_i ∇_{x_i} f · ∇_{x_i} h`.
pub fn gaussian_grad_dot<C: Coeff>(f: &Polynomial<C>, h: &Polynomial<C>) -> Result<Polynomial<C>> {
    require_gaussian(f)?;
    require_gaussian(h)?;
    if f.dims() != h.dims() {
        return Err(Error::input("grad_dot on polynomials of different models"));
    }
    let mut out = Polynomial::zero(Mode::Gaussian, f.dims());
    for i in 0..f.dims().sites {
        for (a, ca) in f.terms() {
            let ga = site_gradient(a, i);
            if ga.is_empty() {
                continue;
            }
            for (b, cb) in h.terms() {
                for (j, wa, ma) in &ga {
                    for (k, wb, mb) in site_gradient(b, i) {
                        let m = ma.mul(&mb).mul(&DotMonomial::var(SitePair::new(*j, k)));
                        out.add_term(m, ca.clone() * cb.clone() * int::<C>(wa * wb));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `x_i ↦ Σ_j S_ij x_j`, lifted to `v_kl ↦ Σ_ab S_ka S_lb v_ab`.
pub fn substitute(p: &FloatPoly, s: &DMatrix<f64>) -> Result<FloatPoly> {
    require_gaussian(p)?;
    let dims = p.dims();
    if s.nrows() != dims.sites || s.ncols() != dims.sites {
        return Err(Error::input("substitution matrix does not match the site count"));
    }
    let mut linear: HashMap<SitePair, FloatPoly> = HashMap::new();
    let mut image = |pair: SitePair| -> FloatPoly {
        linear
            .entry(pair)
            .or_insert_with(|| {
                let mut out = Polynomial::zero(Mode::Gaussian, dims);
                for a in 0..dims.sites {
                    for b in 0..dims.sites {
                        let w = s[(pair.i, a)] * s[(pair.j, b)];
                        if w != 0.0 {
                            out.add_term(DotMonomial::var(SitePair::new(a, b)), w);
                        }
                    }
                }
                out
            })
            .clone()
    };
    let mut out = Polynomial::zero(Mode::Gaussian, dims);
    for (m, c) in p.terms() {
        let mut term = Polynomial::constant(Mode::Gaussian, dims, *c);
        for &(pair, e) in m.powers() {
            term = &term * &image(pair).pow(e);
        }
        out = &out + &term;
    }
    Ok(out)
}

/// `f(e^{-tF} x)`, the flow of `-∇Q·∇` for time `t`.
pub fn flow_map(p: &ExactPoly, ferro: &FerroMatrix, t: f64) -> Result<FloatPoly> {
    check_model(p, ferro)?;
    substitute(&p.to_f64(), &ferro.semigroup(t)?)
}

/// `Δ` and `∇Q·∇` on a monomial basis closed under both.
#[derive(Debug, Clone)]
pub struct OuSystem {
    ferro: FerroMatrix,
    laplacian: SemigroupMatrix,
    drift: SemigroupMatrix,
}

impl OuSystem {
    pub fn new(seeds: &ExactPoly, ferro: &FerroMatrix, cap: usize) -> Result<Self> {
        check_model(seeds, ferro)?;
        let dims = seeds.dims();
        let lap = move |m: &DotMonomial| -> ExactPoly {
            let terms = laplacian_monomial(m, dims.n, dims.sites)
                .into_iter()
                .map(|(k, w)| (k, BigRational::from_integer(w.into())));
            Polynomial::from_terms_unchecked(Mode::Gaussian, dims, terms)
        };
        let fm = ferro.clone();
        let dr = move |m: &DotMonomial| -> ExactPoly {
            Polynomial::from_terms_unchecked(Mode::Gaussian, dims, drift_monomial(m, &fm))
        };
        let seeds_iter = seeds.terms().map(|(m, _)| m.clone()).chain(std::iter::once(DotMonomial::one()));
        let basis = InvariantBasis::closure(Mode::Gaussian, dims, seeds_iter, cap, &[&lap, &dr])?;
        Ok(OuSystem {
            ferro: ferro.clone(),
            laplacian: basis.operator_matrix(&lap)?,
            drift: basis.operator_matrix(&dr)?,
        })
    }

    pub fn basis(&self) -> &InvariantBasis {
        self.laplacian.basis()
    }

    pub fn laplacian_matrix(&self) -> &SemigroupMatrix {
        &self.laplacian
    }

    pub fn drift_matrix(&self) -> &SemigroupMatrix {
        &self.drift
    }

    /// Exact matrix of `A` on the basis.
    pub fn generator_matrix(&self) -> RatMatrix {
        self.laplacian.to_rat().add(&self.drift.to_rat().scale(&-BigRational::one()))
    }

    /// `e^{tA}` on the basis.
    pub fn propagator(&self, t: f64) -> DMatrix<f64> {
        expm(&((self.laplacian.to_f64() - self.drift.to_f64()) * t))
    }

    /// `e^{τΔ}`; `Δ` is nilpotent on the basis.
    pub fn heat_step(&self, tau: f64) -> DMatrix<f64> {
        expm(&(self.laplacian.to_f64() * tau))
    }

    /// The substitution `x ↦ e^{-τF} x` as a matrix on the basis.
    pub fn flow_step(&self, tau: f64) -> Result<DMatrix<f64>> {
        let s = self.ferro.semigroup(tau)?;
        let basis = self.basis();
        let mut out = DMatrix::zeros(basis.len(), basis.len());
        for (j, m) in basis.monomials().iter().enumerate() {
            let single = Polynomial::from_terms_unchecked(Mode::Gaussian, basis.dims(), [(m.clone(), 1.0)]);
            let col = basis.coefficients_f64(&substitute(&single, &s)?)?;
            out.set_column(j, &col);
        }
        Ok(out)
    }

    pub fn evolve(&self, f: &ExactPoly, t: f64) -> Result<FloatPoly> {
        let v = self.basis().coefficients_f64(&f.to_f64())?;
        Ok(self.basis().float_poly(&(self.propagator(t) * v)))
    }
}

/// `e^{tA} f` with the basis built from `f`.
pub fn ou_evolve(f: &ExactPoly, ferro: &FerroMatrix, t: f64) -> Result<FloatPoly> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::input(format!("evolution time must be finite and >= 0, got {t}")));
    }
    OuSystem::new(f, ferro, DEFAULT_BASIS_CAP)?.evolve(f, t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrotterRow {
    pub m: u32,
    /// Max coefficient difference from `e^{tA} f`.
    pub error: f64,
    /// Smallest entry of either factor matrix; cone preserving iff `>= -SEMIGROUP_SLACK`.
    pub min_factor_entry: f64,
    /// Smallest coefficient met along the iteration (meaningful for cone inputs).
    pub min_iterate_coeff: f64,
}

impl TrotterRow {
    pub fn cone_preserved(&self) -> bool {
        self.min_factor_entry >= -SEMIGROUP_SLACK && self.min_iterate_coeff >= -SEMIGROUP_SLACK
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub t: f64,
    /// Exact `E f` under the Gaussian measure.
    pub expected: BigRational,
    /// Max distance of `e^{tA} f` from the constant `E f`, over all coefficients.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrotterReport {
    pub t: f64,
    pub basis_size: usize,
    pub exact: FloatPoly,
    pub rows: Vec<TrotterRow>,
    pub equilibrium: Equilibrium,
}

impl TrotterReport {
    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }
}

/// `(e^{τΔ} ∘ flow_τ)^m f` with `τ = t/m` against `e^{tA} f`.
pub fn trotter_compare(f: &ExactPoly, ferro: &FerroMatrix, t: f64, ms: &[u32]) -> Result<TrotterReport> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::input(format!("evolution time must be finite and >= 0, got {t}")));
    }
    if ms.contains(&0) {
        return Err(Error::input("Trotter step counts must be >= 1"));
    }
    let system = OuSystem::new(f, ferro, DEFAULT_BASIS_CAP)?;
    let basis = system.basis();
    let start = basis.coefficients_f64(&f.to_f64())?;
    let exact = system.propagator(t) * &start;
    let track_cone = f.is_cone();
    let mut rows = Vec::with_capacity(ms.len());
    for &m in ms {
        let tau = t / m as f64;
        let heat = system.heat_step(tau);
        let flow = system.flow_step(tau)?;
        let mut v = start.clone();
        let mut min_iterate = if track_cone { v.min() } else { 0.0 };
        for _ in 0..m {
            let flowed = &flow * &v;
            v = &heat * &flowed;
            if track_cone {
                min_iterate = min_iterate.min(flowed.min()).min(v.min());
            }
        }
        rows.push(TrotterRow {
            m,
            error: (&v - &exact).abs().max(),
            min_factor_entry: heat.min().min(flow.min()),
            min_iterate_coeff: min_iterate,
        });
    }
    let t_eq = 20.0 / ferro.spectral_gap();
    let expected = GaussianMoments::new(ferro, f.dims().n)?.moment(f)?;
    let mut target = DVector::zeros(basis.len());
    if let Some(k) = basis.index_of(&DotMonomial::one()) {
        target[k] = to_f64(&expected);
    }
    let deviation = (system.propagator(t_eq) * &start - target).abs().max();
    Ok(TrotterReport {
        t,
        basis_size: basis.len(),
        exact: basis.float_poly(&exact),
        rows,
        equilibrium: Equilibrium { t: t_eq, expected, deviation },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ModelDims;
    use crate::rational::{frac, int};

    fn path2() -> FerroMatrix {
        FerroMatrix::new(RatMatrix::from_rows(vec![vec![int(2), int(-1)], vec![int(-1), int(2)]]).unwrap()).unwrap()
    }

    fn v(i: usize, j: usize) -> DotMonomial {
        DotMonomial::var(SitePair::new(i - 1, j - 1))
    }

    fn gpoly(n: usize, sites: usize, terms: Vec<(DotMonomial, BigRational)>) -> ExactPoly {
        Polynomial::from_terms(Mode::Gaussian, ModelDims { n, sites }, terms).unwrap()
    }

    #[test]
    fn validation_reports_each_property() {
        let bad = RatMatrix::from_rows(vec![vec![int(1), int(2)], vec![int(2), int(1)]]).unwrap();
        let d = validate_ferro(&bad).unwrap();
        assert!(d.symmetric && !d.positive_definite && !d.off_diagonal_nonpositive);
        assert_eq!(d.problems().len(), 2);
        let asym = RatMatrix::from_rows(vec![vec![int(2), int(-1)], vec![int(0), int(2)]]).unwrap();
        let d = validate_ferro(&asym).unwrap();
        assert!(!d.symmetric && d.off_diagonal_nonpositive);
        assert!(FerroMatrix::new(RatMatrix::identity(3)).is_ok());
        assert_eq!(
            validate_ferro(&RatMatrix::from_rows(vec![vec![int(2), int(-1)], vec![int(-1), int(2)]]).unwrap())
                .unwrap()
                .leading_minors,
            vec![int(2), int(3)]
        );
    }

    #[test]
    fn covariance_examples() {
        let c = path2().covariance().unwrap();
        assert_eq!(c, RatMatrix::from_rows(vec![vec![frac(2, 3), frac(1, 3)], vec![frac(1, 3), frac(2, 3)]]).unwrap());
        let diag = RatMatrix::from_rows(vec![vec![int(3), int(0)], vec![int(0), frac(1, 2)]]).unwrap();
        let c = FerroMatrix::new(diag).unwrap().covariance().unwrap();
        assert_eq!((c.get(0, 0).clone(), c.get(1, 1).clone()), (frac(1, 3), int(2)));
    }

    #[test]
    fn moment_examples() {
        let f = path2();
        assert_eq!(gaussian_moment(&gpoly(1, 2, vec![(v(1, 2), int(1))]), &f).unwrap(), frac(1, 3));
        assert_eq!(gaussian_moment(&gpoly(1, 2, vec![(v(1, 2).pow(2), int(1))]), &f).unwrap(), frac(2, 3));
        for n in 1..5 {
            assert_eq!(gaussian_moment(&gpoly(n, 2, vec![(v(1, 1), int(1))]), &f).unwrap(), frac(2 * n as i64, 3));
        }
        // E|x|^4 = n(n+2) for a standard vector
        let id = FerroMatrix::new(RatMatrix::identity(1)).unwrap();
        for n in 1..6i64 {
            assert_eq!(
                gaussian_moment(&gpoly(n as usize, 1, vec![(v(1, 1).pow(2), int(1))]), &id).unwrap(),
                int(n * (n + 2))
            );
        }
    }

    #[test]
    fn griffiths_examples() {
        let f = gpoly(1, 2, vec![(v(1, 2), int(1))]);
        let r = check_gaussian_griffiths(&f, &f, &path2()).unwrap();
        assert_eq!(r.gap, frac(5, 9));
        let one = gpoly(1, 2, vec![(DotMonomial::one(), int(1))]);
        let loop11 = gpoly(1, 2, vec![(v(1, 1), int(1))]);
        assert_eq!(check_gaussian_griffiths(&loop11, &one, &path2()).unwrap().gap, int(0));
    }

    #[test]
    fn semigroup_examples() {
        let f = path2();
        for t in [0.0, 0.3, 2.0] {
            let s = f.semigroup(t).unwrap();
            let e = (-2.0 * t).exp();
            assert!((s[(0, 0)] - e * t.cosh()).abs() < 1e-14);
            assert!((s[(0, 1)] - e * t.sinh()).abs() < 1e-14);
        }
        assert_eq!(f.semigroup(0.0).unwrap(), DMatrix::identity(2, 2));
        let err1 = (f.semigroup_product_limit(1.0, 10) - f.semigroup(1.0).unwrap()).abs().max();
        let err2 = (f.semigroup_product_limit(1.0, 100) - f.semigroup(1.0).unwrap()).abs().max();
        assert!(err2 < err1);
        assert!((f.spectral_gap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn generator_examples() {
        for n in 1..4i64 {
            let p = gpoly(n as usize, 2, vec![(v(1, 1), int(1))]);
            assert_eq!(gaussian_laplacian(&p).unwrap(), gpoly(n as usize, 2, vec![(DotMonomial::one(), int(2 * n))]));
            let sq = gpoly(n as usize, 2, vec![(v(1, 1).pow(2), int(1))]);
            assert_eq!(gaussian_laplacian(&sq).unwrap(), gpoly(n as usize, 2, vec![(v(1, 1), int(4 * n + 8))]));
            assert!(gaussian_laplacian(&gpoly(n as usize, 2, vec![(v(1, 2), int(1))])).unwrap().is_zero());
        }
        let p = gpoly(1, 2, vec![(v(1, 2), int(1))]);
        let want = gpoly(1, 2, vec![(v(1, 2), int(4)), (v(1, 1), int(-1)), (v(2, 2), int(-1))]);
        assert_eq!(drift(&p, &path2()).unwrap(), want);
        assert!(ou_generator(&gpoly(1, 2, vec![(DotMonomial::one(), int(1))]), &path2()).unwrap().is_zero());
    }

    #[test]
    fn flow_map_examples() {
        let f = path2();
        let p = gpoly(1, 2, vec![(v(1, 2), int(1))]);
        assert_eq!(flow_map(&p, &f, 0.0).unwrap(), p.to_f64());
        let mixed = flow_map(&p, &f, 0.4).unwrap();
        assert!(mixed.terms().all(|(_, c)| *c >= 0.0) && mixed.len() == 3);
        let id = FerroMatrix::new(RatMatrix::identity(2)).unwrap();
        let out = flow_map(&gpoly(2, 2, vec![(v(1, 1), int(1))]), &id, 0.7).unwrap();
        assert!((out.coeff(&v(1, 1)) - (-1.4f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn single_site_ou_closed_form() {
        for (n, f11) in [(1usize, 1i64), (3, 2)] {
            let ferro = FerroMatrix::new(RatMatrix::from_rows(vec![vec![int(f11)]]).unwrap()).unwrap();
            let p = gpoly(n, 1, vec![(v(1, 1), int(1))]);
            for t in [0.0, 0.2, 1.5] {
                let out = ou_evolve(&p, &ferro, t).unwrap();
                let decay = (-2.0 * f11 as f64 * t).exp();
                assert!((out.coeff(&v(1, 1)) - decay).abs() < 1e-12);
                assert!((out.constant_term() - n as f64 / f11 as f64 * (1.0 - decay)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trotter_reference_cases() {
        let p = gpoly(1, 2, vec![(v(1, 2), int(1))]);
        let r = trotter_compare(&p, &path2(), 0.0, &[1, 4]).unwrap();
        assert!(r.rows.iter().all(|row| row.error == 0.0));
        let r = trotter_compare(&p, &path2(), 1.0, &[4, 8, 16, 32]).unwrap();
        assert!(r.rows.windows(2).all(|w| w[1].error < w[0].error));
        assert!(r.rows.iter().all(TrotterRow::cone_preserved));
        assert_eq!(r.equilibrium.expected, frac(1, 3));
        assert!(r.equilibrium.deviation < 1e-8);
    }

    #[test]
    fn random_matrices_are_ferromagnetic() {
        for seed in 0..20 {
            let f = random_ferro_matrix(1 + seed as usize % 4, seed);
            assert!(f.covariance().unwrap().entries().all(|v| !v.is_negative()));
        }
    }
}
