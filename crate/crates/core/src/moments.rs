//! Exact expectations over products of spheres.
//!
//! The engine integrates one site at a time. For a monomial whose factors
//! touching site `k` are `∏ (σ_k·σ_j)^{c_j}` (total degree `L`), writing a
//! standard Gaussian vector as `x = r σ` with `r` independent of `σ` gives
//!
//! ```text
//! E_σ ∏ (σ·a_i) = E_x ∏ (x·a_i) / E r^L = wick(a_1..a_L) / μ_n(L)
//! ```
//!
//! where the Gaussian side is an Isserlis sum over pairings of the partner
//! vectors and `μ_n(L) = n(n+2)⋯(n+L-2)`. Since the partners are themselves
//! unit vectors, `σ_j·σ_j = 1` and the result is again a dot polynomial.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::algebra::{DotMonomial, ExactPoly, Mode, Polynomial, SitePair};
use crate::error::{Error, Result};
use crate::rational::{int, to_f64};

/// `μ_n(d) = n(n+2)⋯(n+d-2)`, the `d`-th moment of the norm of a standard
/// `n`-dimensional Gaussian vector.
pub fn radial_moment(n: usize, d: u32) -> Result<BigRational> {
    if d % 2 == 1 {
        return Err(Error::input(format!("radial moment needs an even degree, got {d}")));
    }
    Ok(BigRational::from_integer(radial_moment_int(n, d)))
}

fn radial_moment_int(n: usize, d: u32) -> BigInt {
    (0..d / 2).fold(BigInt::one(), |acc, j| acc * (n as u64 + 2 * j as u64))
}

/// Memoized `μ_n(d)` for one ambient dimension.
#[derive(Debug, Clone)]
pub struct RadialMomentTable {
    n: usize,
    values: Vec<BigInt>,
}

impl RadialMomentTable {
    pub fn new(n: usize) -> Self {
        RadialMomentTable { n, values: vec![BigInt::one()] }
    }

    /// `μ_n(d)` for even `d`.
    pub fn get(&mut self, d: u32) -> &BigInt {
        debug_assert!(d.is_multiple_of(2));
        let idx = (d / 2) as usize;
        while self.values.len() <= idx {
            let k = self.values.len() as u64 - 1;
            let next = self.values.last().unwrap() * (self.n as u64 + 2 * k);
            self.values.push(next);
        }
        &self.values[idx]
    }
}

type WickTable = Arc<Vec<(DotMonomial, BigInt)>>;

/// Exact sphere expectations with memoized partner Wick sums and monomial
/// moments. One engine serves one ambient dimension `n`.
#[derive(Debug)]
pub struct SphereMoments {
    n: usize,
    radial: RadialMomentTable,
    wick_cache: HashMap<Vec<(usize, u32)>, WickTable>,
    moment_cache: HashMap<DotMonomial, BigRational>,
}

impl SphereMoments {
    pub fn new(n: usize) -> Self {
        SphereMoments { n, radial: RadialMomentTable::new(n), wick_cache: HashMap::new(), moment_cache: HashMap::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check(&self, p: &ExactPoly) -> Result<()> {
        if p.mode() != Mode::Sphere {
            return Err(Error::input("sphere moments need a sphere-mode polynomial"));
        }
        if p.dims().n != self.n {
            return Err(Error::input(format!("engine built for n = {}, polynomial has n = {}", self.n, p.dims().n)));
        }
        Ok(())
    }

    /// Wick sum over a multiset of partner sites, with `inner(a, a) = 1` and
    /// `inner(a, b) = u_ab`. Integer counts per resulting monomial.
    fn partner_wick(&mut self, partners: &[(usize, u32)]) -> WickTable {
        if let Some(hit) = self.wick_cache.get(partners) {
            return hit.clone();
        }
        let total: u32 = partners.iter().map(|&(_, c)| c).sum();
        let result: WickTable = if total == 0 {
            Arc::new(vec![(DotMonomial::one(), BigInt::one())])
        } else if total % 2 == 1 {
            Arc::new(Vec::new())
        } else {
            let mut acc: BTreeMap<DotMonomial, BigInt> = BTreeMap::new();
            // Pair one copy of the first label with every other copy.
            let (a, ca) = partners[0];
            let mut push = |state: Vec<(usize, u32)>, factor: Option<SitePair>, ways: u32, this: &mut Self| {
                let state: Vec<(usize, u32)> = state.into_iter().filter(|&(_, c)| c > 0).collect();
                let sub = this.partner_wick(&state);
                for (m, cnt) in sub.iter() {
                    let m = match factor {
                        Some(pair) => m.mul(&DotMonomial::var(pair)),
                        None => m.clone(),
                    };
                    *acc.entry(m).or_insert_with(BigInt::zero) += cnt * ways;
                }
            };
            if ca >= 2 {
                let mut state = partners.to_vec();
                state[0].1 -= 2;
                push(state, None, ca - 1, self);
            }
            for idx in 1..partners.len() {
                let (b, cb) = partners[idx];
                let mut state = partners.to_vec();
                state[0].1 -= 1;
                state[idx].1 -= 1;
                push(state, Some(SitePair::new(a, b)), cb, self);
            }
            Arc::new(acc.into_iter().collect())
        };
        self.wick_cache.insert(partners.to_vec(), result.clone());
        result
    }

    /// Integrates site `k` out of one monomial.
    fn eliminate_monomial(&mut self, m: &DotMonomial, k: usize) -> Vec<(DotMonomial, BigRational)> {
        let (touching, rest) = m.split_site(k);
        let partners = touching.partners(k);
        let total: u32 = partners.iter().map(|&(_, c)| c).sum();
        if total == 0 {
            return vec![(m.clone(), BigRational::one())];
        }
        if total % 2 == 1 {
            return Vec::new();
        }
        let table = self.partner_wick(&partners);
        let mu = self.radial.get(total).clone();
        table.iter().map(|(w, cnt)| (w.mul(&rest), BigRational::new(cnt.clone(), mu.clone()))).collect()
    }

    /// Exact partial integral of `p` over site `k` (0-based).
    pub fn eliminate_site(&mut self, p: &ExactPoly, k: usize) -> Result<ExactPoly> {
        self.check(p)?;
        if k >= p.dims().sites {
            return Err(Error::input(format!("site {} out of range for N = {}", k + 1, p.dims().sites)));
        }
        let mut out = Polynomial::zero(p.mode(), p.dims());
        for (m, c) in p.terms() {
            for (w, v) in self.eliminate_monomial(m, k) {
                out.add_term(w, v * c);
            }
        }
        Ok(out)
    }

    /// Moment of one monomial, eliminating the lowest-degree site first.
    pub fn monomial_moment(&mut self, m: &DotMonomial) -> BigRational {
        if m.is_one() {
            return BigRational::one();
        }
        let sites = m.max_site().unwrap() + 1;
        let degrees = m.site_degrees(sites);
        if degrees.iter().any(|d| d % 2 == 1) {
            return BigRational::zero();
        }
        if let Some(v) = self.moment_cache.get(m) {
            return v.clone();
        }
        let k = (0..sites).filter(|&s| degrees[s] > 0).min_by_key(|&s| (degrees[s], s)).unwrap();
        let mut value = BigRational::zero();
        for (child, c) in self.eliminate_monomial(m, k) {
            value += c * self.monomial_moment(&child);
        }
        self.moment_cache.insert(m.clone(), value.clone());
        value
    }

    /// `E p` under the product of normalized sphere measures.
    pub fn moment(&mut self, p: &ExactPoly) -> Result<BigRational> {
        self.check(p)?;
        let mut acc = BigRational::zero();
        for (m, c) in p.terms() {
            acc += c * self.monomial_moment(m);
        }
        Ok(acc)
    }

    /// `E p` by eliminating whole-polynomial sites in the given order. The
    /// order must be a permutation of all sites.
    pub fn moment_with_order(&mut self, p: &ExactPoly, order: &[usize]) -> Result<BigRational> {
        self.check(p)?;
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != (0..p.dims().sites).collect::<Vec<_>>() {
            return Err(Error::input(format!("elimination order {order:?} is not a permutation of the sites")));
        }
        let mut cur = p.clone();
        for &k in order {
            cur = self.eliminate_site(&cur, k)?;
        }
        debug_assert!(cur.terms().all(|(m, _)| m.is_one()));
        Ok(cur.constant_term())
    }
}

/// Exact `E p` over normalized sphere measure.
pub fn sphere_moment(p: &ExactPoly) -> Result<BigRational> {
    SphereMoments::new(p.dims().n).moment(p)
}

/// Independent one-shot evaluation of a monomial moment.
///
/// The monomial is homogeneous of degree `d_i` in each `σ_i`, so replacing
/// every sphere by a standard Gaussian at once gives
/// `E_sphere = E_gauss / ∏ μ_n(d_i)`. The Gaussian side is expanded over
/// vector components: each factor `x_i·x_j` picks a component `a`, and
/// independent components contribute `(c-1)!!` for an even count `c`.
pub fn sphere_moment_oracle(m: &DotMonomial, n: usize) -> BigRational {
    let Some(max) = m.max_site() else {
        return BigRational::one();
    };
    let sites = max + 1;
    let degrees = m.site_degrees(sites);
    if degrees.iter().any(|d| d % 2 == 1) {
        return BigRational::zero();
    }
    let mut states: HashMap<Vec<u8>, BigInt> = HashMap::new();
    states.insert(vec![0u8; sites * n], BigInt::one());
    for &(pair, p) in m.powers() {
        for _ in 0..p {
            let mut next: HashMap<Vec<u8>, BigInt> = HashMap::with_capacity(states.len() * n);
            for (state, mult) in &states {
                for a in 0..n {
                    let mut s = state.clone();
                    s[pair.i * n + a] += 1;
                    s[pair.j * n + a] += 1;
                    *next.entry(s).or_insert_with(BigInt::zero) += mult;
                }
            }
            states = next;
        }
    }
    let mut gauss = BigInt::zero();
    'outer: for (state, mult) in states {
        let mut w = mult;
        for &c in &state {
            if c % 2 == 1 {
                continue 'outer;
            }
            for k in (1..c).step_by(2) {
                w *= k;
            }
        }
        gauss += w;
    }
    let denom = degrees.iter().fold(BigInt::one(), |acc, &d| acc * radial_moment_int(n, d));
    BigRational::new(gauss, denom)
}

/// Ferromagnetic couplings `J_ij >= 0` on site pairs `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Couplings {
    entries: BTreeMap<SitePair, BigRational>,
}

impl Couplings {
    /// Rejects negative entries and diagonal pairs. Entries with the same
    /// pair accumulate.
    pub fn new<I: IntoIterator<Item = (SitePair, BigRational)>>(entries: I) -> Result<Self> {
        let mut map: BTreeMap<SitePair, BigRational> = BTreeMap::new();
        for (pair, j) in entries {
            if pair.is_diagonal() {
                return Err(Error::input(format!("coupling on diagonal pair ({0}, {0})", pair.i + 1)));
            }
            if j.is_negative() {
                return Err(Error::input(format!(
                    "coupling J_{},{} = {} is negative (not ferromagnetic)",
                    pair.i + 1,
                    pair.j + 1,
                    j
                )));
            }
            *map.entry(pair).or_insert_with(BigRational::zero) += j;
        }
        Ok(Couplings { entries: map })
    }

    pub fn entries(&self) -> impl Iterator<Item = (&SitePair, &BigRational)> {
        self.entries.iter()
    }

    pub fn total(&self) -> BigRational {
        self.entries.values().fold(BigRational::zero(), |a, b| a + b)
    }
}

/// Truncated expectation under the interacting weight `exp(Σ J_ij u_ij)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractingMoment {
    /// `Σ_{k<=K} E[p H^k] / k!`.
    pub numerator: BigRational,
    /// `Σ_{k<=K} E[H^k] / k!`, a lower bound of the partition function.
    pub partition: BigRational,
    /// `numerator / partition`.
    pub ratio: BigRational,
    /// `e^S S^{K+1} / (K+1)!` with `S = Σ J_ij`, bounding each series tail.
    pub tail: f64,
    /// Bound on `|E_J p - ratio|`.
    pub gap: f64,
    pub order: u32,
}

impl InteractingMoment {
    /// Certified lower bound `ratio - gap`.
    pub fn lower_bound(&self) -> f64 {
        to_f64(&self.ratio) - self.gap
    }
}

pub const DEFAULT_ORDER: u32 = 8;

/// Order-`K` Taylor truncation of `E_J p = E[p e^H] / E[e^H]`, `H = Σ J_ij u_ij`.
///
/// Every truncated term of a cone `p` is itself a cone moment, so the
/// truncated numerator and partition are monotone lower bounds. Using
/// `|u_ij| <= 1`, the neglected tails are at most `P·T` and `T` with
/// `P = Σ|coeff(p)|`, which gives `gap = T (P + |ratio|) / partition`.
pub fn interacting_moment(
    engine: &mut SphereMoments,
    p: &ExactPoly,
    couplings: &Couplings,
    order: u32,
) -> Result<InteractingMoment> {
    engine.check(p)?;
    let dims = p.dims();
    for (pair, _) in couplings.entries() {
        if pair.j >= dims.sites {
            return Err(Error::input(format!(
                "coupling ({}, {}) out of range for N = {}",
                pair.i + 1,
                pair.j + 1,
                dims.sites
            )));
        }
    }
    let field = Polynomial::from_terms(
        Mode::Sphere,
        dims,
        couplings.entries().map(|(pair, j)| (DotMonomial::var(*pair), j.clone())),
    )?;
    let mut term = Polynomial::one(Mode::Sphere, dims);
    let mut numerator = BigRational::zero();
    let mut partition = BigRational::zero();
    for k in 0..=order {
        if k > 0 {
            term = (&term * &field).scale(&BigRational::new(BigInt::one(), BigInt::from(k)));
        }
        partition += engine.moment(&term)?;
        numerator += engine.moment(&(&term * p))?;
    }
    let ratio = &numerator / &partition;
    let s = to_f64(&couplings.total());
    let tail = if s == 0.0 {
        0.0
    } else {
        let log_fact: f64 = (1..=order + 1).map(|k| (k as f64).ln()).sum();
        (s + (order + 1) as f64 * s.ln() - log_fact).exp()
    };
    let p_bound = to_f64(&p.abs_coeff_sum());
    let gap = tail * (p_bound + to_f64(&ratio).abs()) / to_f64(&partition);
    Ok(InteractingMoment { numerator, partition, ratio, tail, gap, order })
}

/// Convenience: `E[u_ij^k]`-style checks in tests and reports.
pub fn moment_of_pair_power(n: usize, sites: usize, i: usize, j: usize, k: u32) -> Result<BigRational> {
    let dims = crate::algebra::ModelDims::new(Mode::Sphere, n, sites)?;
    let p = Polynomial::from_terms(Mode::Sphere, dims, [(DotMonomial::var(SitePair::new(i, j)).pow(k), int(1))])?;
    sphere_moment(&p)
}

/// Floating-point view used by reports.
pub fn moment_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| to_f64(r))
}
