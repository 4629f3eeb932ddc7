//! The spherical Laplacian `Δ = Σ_i Δ_i` on dot polynomials, the Dirichlet
//! form, and the heat semigroup `e^{tΔ}` on finite invariant subspaces.
//!
//! Everything follows from four contraction rules at a site `i`:
//!
//! ```text
//! Δ_i u_ij = -(n-1) u_ij
//! ∇_i u_ij · ∇_i u_ij = 1 - u_ij²
//! ∇_i u_ij · ∇_i u_ik = u_jk - u_ij u_ik      (j ≠ k)
//! ∇_i u_jk = 0                                 (i ∉ {j, k})
//! ```
//!
//! together with the Leibniz rule `Δ_i(ab) = aΔ_i b + bΔ_i a + 2∇_i a·∇_i b`.
//! None of them raises a per-site degree, so the span of all monomials
//! below a degree profile is invariant and `e^{tΔ}` reduces to a matrix
//! exponential.

use nalgebra::DVector;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;

use crate::algebra::{Coeff, DotMonomial, ExactPoly, FloatPoly, Mode, ModelDims, Polynomial, SitePair};
use crate::basis::{InvariantBasis, SemigroupMatrix};
use crate::error::{Error, Result};
use crate::expm::expm;
use crate::moments::SphereMoments;
use crate::rational::to_f64;

pub const DEFAULT_BASIS_CAP: usize = 5000;

fn require_sphere<C: Coeff>(p: &Polynomial<C>) -> Result<()> {
    if p.mode() != Mode::Sphere {
        return Err(Error::input("the spherical Laplacian acts on sphere-mode polynomials"));
    }
    Ok(())
}

fn c<C: Coeff>(v: i64) -> C {
    C::from_i64(v).expect("small integer coefficient")
}

/// `Δ m` for a single monomial, as `(monomial, integer coefficient)` terms.
///
/// At a site with partner multiplicities `c_j` and degree `d = Σ c_j` the
/// rules collapse to
/// `Δ_i m = -d(d+n-2) m + Σ_j c_j(c_j-1) m/u_ij² + 2 Σ_{j<k} c_j c_k u_jk m/(u_ij u_ik)`.
pub(crate) fn laplacian_monomial(m: &DotMonomial, n: usize, sites: usize) -> Vec<(DotMonomial, i64)> {
    let mut out = Vec::new();
    let mut diagonal = 0i64;
    for i in 0..sites {
        let partners = m.partners(i);
        let d: i64 = partners.iter().map(|&(_, p)| p as i64).sum();
        if d == 0 {
            continue;
        }
        diagonal -= d * (d + n as i64 - 2);
        for (a, &(j, cj)) in partners.iter().enumerate() {
            let cj = cj as i64;
            if cj >= 2 {
                let shifted = m.shifted(&[(SitePair::new(i, j), -2)]).unwrap();
                out.push((shifted, cj * (cj - 1)));
            }
            for &(k, ck) in &partners[a + 1..] {
                let shifted = m
                    .shifted(&[(SitePair::new(i, j), -1), (SitePair::new(i, k), -1), (SitePair::new(j, k), 1)])
                    .unwrap();
                out.push((shifted, 2 * cj * ck as i64));
            }
        }
    }
    if diagonal != 0 {
        out.push((m.clone(), diagonal));
    }
    out
}

/// Exact `Δp` (coefficients may turn negative).
pub fn laplacian<C: Coeff>(p: &Polynomial<C>) -> Result<Polynomial<C>> {
    require_sphere(p)?;
    let dims = p.dims();
    let mut out = Polynomial::zero(Mode::Sphere, dims);
    for (m, coeff) in p.terms() {
        for (k, v) in laplacian_monomial(m, dims.n, dims.sites) {
            out.add_term(k, coeff.clone() * c::<C>(v));
        }
    }
    Ok(out)
}

/// `∇a·∇b` for two monomials, summed over sites.
fn grad_dot_monomials(a: &DotMonomial, b: &DotMonomial, sites: usize) -> Vec<(DotMonomial, i64)> {
    let ab = a.mul(b);
    let mut out = Vec::new();
    for i in 0..sites {
        let pa = a.partners(i);
        let pb = b.partners(i);
        for &(j, cj) in &pa {
            for &(k, ck) in &pb {
                let w = cj as i64 * ck as i64;
                // (inner(j,k) - u_ij u_ik) · ab / (u_ij u_ik)
                let lifted = if j == k {
                    ab.shifted(&[(SitePair::new(i, j), -2)])
                } else {
                    ab.shifted(&[(SitePair::new(i, j), -1), (SitePair::new(i, k), -1), (SitePair::new(j, k), 1)])
                };
                out.push((lifted.unwrap(), w));
                out.push((ab.clone(), -w));
            }
        }
    }
    out
}

/// Exact `∇f·∇h = Σ_i ∇_i f · ∇_i h`.
pub fn grad_dot<C: Coeff>(f: &Polynomial<C>, h: &Polynomial<C>) -> Result<Polynomial<C>> {
    require_sphere(f)?;
    require_sphere(h)?;
    if f.dims() != h.dims() {
        return Err(Error::input("grad_dot on polynomials of different models"));
    }
    let mut out = Polynomial::zero(Mode::Sphere, f.dims());
    for (a, ca) in f.terms() {
        for (b, cb) in h.terms() {
            for (m, w) in grad_dot_monomials(a, b, f.dims().sites) {
                out.add_term(m, ca.clone() * cb.clone() * c::<C>(w));
            }
        }
    }
    Ok(out)
}

/// `E[∇f·∇h]`, the Dirichlet form; equals `-E[f Δh]`.
pub fn dirichlet(engine: &mut SphereMoments, f: &ExactPoly, h: &ExactPoly) -> Result<BigRational> {
    engine.moment(&grad_dot(f, h)?)
}

/// The Δ-closed monomial basis generated by `seeds` and the exact matrix of Δ on it.
pub fn build_invariant_basis<I>(seeds: I, dims: ModelDims, cap: usize) -> Result<SemigroupMatrix>
where
    I: IntoIterator<Item = DotMonomial>,
{
    ModelDims::new(Mode::Sphere, dims.n, dims.sites)?;
    let op = move |m: &DotMonomial| -> ExactPoly {
        Polynomial::from_terms_unchecked(
            Mode::Sphere,
            dims,
            laplacian_monomial(m, dims.n, dims.sites)
                .into_iter()
                .map(|(k, v)| (k, BigRational::from_integer(v.into()))),
        )
    };
    let basis = InvariantBasis::closure(Mode::Sphere, dims, seeds, cap, &[&op])?;
    basis.operator_matrix(&op)
}

/// `e^{tΔ}` on the invariant subspace spanned by a polynomial.
#[derive(Debug, Clone)]
pub struct HeatFlow {
    generator: SemigroupMatrix,
    coeffs: DVector<f64>,
}

impl HeatFlow {
    pub fn new(f: &ExactPoly, cap: usize) -> Result<Self> {
        require_sphere(f)?;
        let generator = build_invariant_basis(f.terms().map(|(m, _)| m.clone()), f.dims(), cap)?;
        let coeffs = generator.basis().coefficients_f64(&f.to_f64())?;
        Ok(HeatFlow { generator, coeffs })
    }

    pub fn generator(&self) -> &SemigroupMatrix {
        &self.generator
    }

    /// Coefficients of `e^{tΔ} f` in the invariant basis.
    pub fn evolve_coeffs(&self, t: f64) -> Result<DVector<f64>> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::input(format!("evolution time must be finite and >= 0, got {t}")));
        }
        let prop = expm(&(self.generator.to_f64() * t));
        Ok(prop * &self.coeffs)
    }

    pub fn evolve(&self, t: f64) -> Result<FloatPoly> {
        Ok(self.generator.basis().float_poly(&self.evolve_coeffs(t)?))
    }
}

/// `e^{tΔ} f` with floating-point coefficients.
pub fn heat_evolve(f: &ExactPoly, t: f64) -> Result<FloatPoly> {
    HeatFlow::new(f, DEFAULT_BASIS_CAP)?.evolve(t)
}

/// A coefficient below `-slack` after evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeWarning {
    pub monomial: DotMonomial,
    pub coeff: f64,
}

pub fn cone_warnings(p: &FloatPoly, slack: f64) -> Vec<ConeWarning> {
    p.terms().filter(|(_, c)| **c < -slack).map(|(m, c)| ConeWarning { monomial: m.clone(), coeff: *c }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowPoint {
    pub t: f64,
    pub h: f64,
    /// `h(t) <= h(previous t) + slack`.
    pub monotone_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowReport {
    pub points: Vec<FlowPoint>,
    pub monotone: bool,
    /// Exact `E f · E g`, the `t → ∞` limit.
    pub limit: BigRational,
    /// `|h(t_max) - E f E g|`.
    pub limit_gap: f64,
}

pub const FLOW_SLACK: f64 = 1e-12;

/// `h(t) = E[f e^{tΔ} g]` on an ascending grid.
///
/// The moments `E[f b_k]` of the basis elements are exact; only the
/// exponential is floating point.
pub fn correlation_flow(engine: &mut SphereMoments, f: &ExactPoly, g: &ExactPoly, grid: &[f64]) -> Result<FlowReport> {
    if grid.iter().any(|t| !t.is_finite() || *t < 0.0) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::input("time grid must be ascending and non-negative"));
    }
    if f.dims() != g.dims() || f.mode() != g.mode() {
        return Err(Error::input("flow needs f and g on the same model"));
    }
    let flow = HeatFlow::new(g, DEFAULT_BASIS_CAP)?;
    let basis = flow.generator().basis();
    let mut weights = DVector::zeros(basis.len());
    for (k, m) in basis.monomials().iter().enumerate() {
        let mut acc = BigRational::zero();
        for (a, ca) in f.terms() {
            acc += ca * engine.monomial_moment(&a.mul(m));
        }
        weights[k] = to_f64(&acc);
    }
    let values: Vec<f64> =
        grid.par_iter().map(|&t| flow.evolve_coeffs(t).map(|v| weights.dot(&v))).collect::<Result<Vec<_>>>()?;
    let mut points = Vec::with_capacity(grid.len());
    for (k, (&t, &h)) in grid.iter().zip(&values).enumerate() {
        let monotone_ok = k == 0 || h <= values[k - 1] + FLOW_SLACK;
        points.push(FlowPoint { t, h, monotone_ok });
    }
    let limit = engine.moment(f)? * engine.moment(g)?;
    let limit_gap = values.last().map_or(0.0, |h| (h - to_f64(&limit)).abs());
    Ok(FlowReport { monotone: points.iter().all(|p| p.monotone_ok), points, limit, limit_gap })
}

/// `t_0, t_0+dt, …` up to and including `t_1` (within rounding).
pub fn uniform_grid(start: f64, step: f64, stop: f64) -> Result<Vec<f64>> {
    if [start, step, stop].iter().any(|v| !v.is_finite()) || step <= 0.0 || stop < start || start < 0.0 {
        return Err(Error::input(format!("bad grid {start}:{step}:{stop}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| start + k as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    fn u(i: usize, j: usize) -> DotMonomial {
        DotMonomial::var(SitePair::new(i - 1, j - 1))
    }

    fn sphere(n: usize, sites: usize, terms: Vec<(DotMonomial, BigRational)>) -> ExactPoly {
        Polynomial::from_terms(Mode::Sphere, ModelDims { n, sites }, terms).unwrap()
    }

    #[test]
    fn laplacian_examples() {
        for n in 2..7i64 {
            let nn = n as usize;
            let lin = sphere(nn, 2, vec![(u(1, 2), int(1))]);
            assert_eq!(laplacian(&lin).unwrap(), sphere(nn, 2, vec![(u(1, 2), int(-2 * (n - 1)))]));
            let sq = sphere(nn, 2, vec![(u(1, 2).pow(2), int(1))]);
            assert_eq!(
                laplacian(&sq).unwrap(),
                sphere(nn, 2, vec![(DotMonomial::one(), int(4)), (u(1, 2).pow(2), int(-4 * n))])
            );
        }
        assert!(laplacian(&sphere(3, 2, vec![(DotMonomial::one(), int(5))])).unwrap().is_zero());
    }

    #[test]
    fn grad_dot_examples() {
        let n = 3;
        let a = sphere(n, 4, vec![(u(1, 2), int(1))]);
        assert_eq!(
            grad_dot(&a, &a).unwrap(),
            sphere(n, 4, vec![(DotMonomial::one(), int(2)), (u(1, 2).pow(2), int(-2))])
        );
        let b = sphere(n, 4, vec![(u(1, 3), int(1))]);
        assert_eq!(grad_dot(&a, &b).unwrap(), sphere(n, 4, vec![(u(2, 3), int(1)), (u(1, 2).mul(&u(1, 3)), int(-1))]));
        let d = sphere(n, 4, vec![(u(3, 4), int(1))]);
        assert!(grad_dot(&a, &d).unwrap().is_zero());
    }

    #[test]
    fn leibniz_rule_holds() {
        let n = 4;
        let f = sphere(n, 3, vec![(u(1, 2).mul(&u(1, 3)), int(2)), (u(2, 3).pow(2), frac(1, 3))]);
        let h = sphere(n, 3, vec![(u(1, 2).pow(3), int(1)), (u(1, 3), int(-1))]);
        let lhs = laplacian(&(&f * &h)).unwrap();
        let two = sphere(n, 3, vec![(DotMonomial::one(), int(2))]);
        let rhs =
            &(&(&f * &laplacian(&h).unwrap()) + &(&h * &laplacian(&f).unwrap())) + &(&two * &grad_dot(&f, &h).unwrap());
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn dirichlet_examples() {
        for n in 2..6i64 {
            let mut e = SphereMoments::new(n as usize);
            let a = sphere(n as usize, 3, vec![(u(1, 2), int(1))]);
            assert_eq!(dirichlet(&mut e, &a, &a).unwrap(), int(2) - frac(2, n));
            let b = sphere(n as usize, 3, vec![(u(1, 3), int(1))]);
            assert_eq!(dirichlet(&mut e, &a, &b).unwrap(), int(0));
            let one = sphere(n as usize, 3, vec![(DotMonomial::one(), int(1))]);
            assert_eq!(dirichlet(&mut e, &one, &a).unwrap(), int(0));
        }
    }

    #[test]
    fn invariant_basis_examples() {
        let n = 3;
        let dims = ModelDims { n, sites: 2 };
        let m = build_invariant_basis([u(1, 2)], dims, 10).unwrap();
        assert_eq!(m.basis().monomials(), &[u(1, 2)]);
        assert_eq!(m.entry(0, 0), int(-4));

        let m = build_invariant_basis([u(1, 2).pow(2)], dims, 10).unwrap();
        assert_eq!(m.basis().monomials(), &[u(1, 2).pow(2), DotMonomial::one()]);
        assert_eq!(m.to_rat().row(0), &[int(-12), int(0)]);
        assert_eq!(m.to_rat().row(1), &[int(4), int(0)]);

        let m = build_invariant_basis([DotMonomial::one()], dims, 10).unwrap();
        assert_eq!(m.size(), 1);
        assert_eq!(m.entry(0, 0), int(0));
    }

    #[test]
    fn basis_cap_is_a_resource_error() {
        let dims = ModelDims { n: 3, sites: 4 };
        let seed = u(1, 2).pow(3).mul(&u(3, 4).pow(3)).mul(&u(1, 3).pow(2));
        let err = build_invariant_basis([seed], dims, 5).unwrap_err();
        assert!(matches!(err, Error::Resource(msg) if msg.contains('5')));
    }

    #[test]
    fn heat_evolve_examples() {
        for n in 2..5usize {
            let t = 0.37;
            let lin = sphere(n, 2, vec![(u(1, 2), int(1))]);
            let out = heat_evolve(&lin, t).unwrap();
            assert!((out.coeff(&u(1, 2)) - (-2.0 * (n as f64 - 1.0) * t).exp()).abs() < 1e-13);

            let sq = sphere(n, 2, vec![(u(1, 2).pow(2), int(1))]);
            let out = heat_evolve(&sq, t).unwrap();
            let decay = (-4.0 * n as f64 * t).exp();
            assert!((out.coeff(&u(1, 2).pow(2)) - decay).abs() < 1e-13);
            assert!((out.coeff(&DotMonomial::one()) - (1.0 - decay) / n as f64).abs() < 1e-13);

            let back = heat_evolve(&sq, 0.0).unwrap();
            assert_eq!(back, sq.to_f64());
        }
        assert!(heat_evolve(&sphere(3, 2, vec![(u(1, 2), int(1))]), -1.0).is_err());
    }

    #[test]
    fn flow_examples() {
        let n = 3;
        let mut e = SphereMoments::new(n);
        let f = sphere(n, 2, vec![(u(1, 2), int(1))]);
        let grid = uniform_grid(0.0, 0.25, 3.0).unwrap();
        let r = correlation_flow(&mut e, &f, &f, &grid).unwrap();
        for p in &r.points {
            assert!((p.h - (-2.0 * (n as f64 - 1.0) * p.t).exp() / n as f64).abs() < 1e-13);
        }
        assert!(r.monotone);

        let mut e = SphereMoments::new(2);
        let f = sphere(2, 2, vec![(u(1, 2).pow(2), int(1))]);
        let r = correlation_flow(&mut e, &f, &f, &grid).unwrap();
        for p in &r.points {
            assert!((p.h - (0.125 * (-8.0 * p.t).exp() + 0.25)).abs() < 1e-13);
        }
        assert_eq!(r.limit, frac(1, 4));

        let one = sphere(2, 2, vec![(DotMonomial::one(), int(1))]);
        let r = correlation_flow(&mut e, &one, &f, &grid).unwrap();
        assert!(r.points.iter().all(|p| (p.h - 0.5).abs() < 1e-14));
        assert!(correlation_flow(&mut e, &one, &f, &[1.0, 0.5]).is_err());
    }

    #[test]
    fn grid_parsing_helper() {
        assert_eq!(uniform_grid(0.0, 0.5, 2.0).unwrap(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(uniform_grid(0.0, 0.1, 5.0).unwrap().len(), 51);
        assert!(uniform_grid(0.0, 0.0, 1.0).is_err());
    }
}
