//! First and second Griffiths inequalities, checked in exact arithmetic.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::{DotMonomial, ExactPoly, Mode, ModelDims, Polynomial, SitePair};
use crate::error::{Error, Result};
use crate::io;
use crate::moments::SphereMoments;
use crate::rational::{format_rational, to_decimal};

/// Anything that can take exact expectations of dot polynomials.
pub trait Expectation {
    fn expect(&mut self, p: &ExactPoly) -> Result<BigRational>;
}

impl Expectation for SphereMoments {
    fn expect(&mut self, p: &ExactPoly) -> Result<BigRational> {
        self.moment(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Violated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelDescriptor {
    pub mode: Mode,
    pub n: usize,
    #[serde(rename = "N")]
    pub sites: usize,
}

impl ModelDescriptor {
    pub fn of(p: &ExactPoly) -> Self {
        ModelDescriptor { mode: p.mode(), n: p.dims().n, sites: p.dims().sites }
    }

    /// Distinct formal polynomials can denote the same function once the
    /// spins span fewer dimensions than there are sites.
    pub fn representation_ambiguous(&self) -> bool {
        self.mode == Mode::Sphere && self.sites > self.n
    }
}

impl fmt::Display for ModelDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} n={} N={}", self.mode, self.n, self.sites)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstReport {
    pub ef: BigRational,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GriffithsReport {
    pub ef: BigRational,
    pub eg: BigRational,
    pub efg: BigRational,
    /// `E[fg] - E[f] E[g]`.
    pub gap: BigRational,
    pub verdict: Verdict,
    pub model: ModelDescriptor,
}

impl GriffithsReport {
    pub fn to_json(&self) -> Value {
        json!({
            "model": self.model,
            "Ef": format_rational(&self.ef),
            "Eg": format_rational(&self.eg),
            "Efg": format_rational(&self.efg),
            "gap": format_rational(&self.gap),
            "gap_decimal": to_decimal(&self.gap, 15),
            "verdict": self.verdict,
            "representation_ambiguous": self.model.representation_ambiguous(),
        })
    }
}

impl fmt::Display for GriffithsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model: {}", self.model)?;
        writeln!(f, "E f     = {} ({})", format_rational(&self.ef), to_decimal(&self.ef, 15))?;
        writeln!(f, "E g     = {} ({})", format_rational(&self.eg), to_decimal(&self.eg, 15))?;
        writeln!(f, "E fg    = {} ({})", format_rational(&self.efg), to_decimal(&self.efg, 15))?;
        writeln!(f, "gap     = {} ({})", format_rational(&self.gap), to_decimal(&self.gap, 15))?;
        let verdict = match self.verdict {
            Verdict::Holds => "holds",
            Verdict::Violated => "VIOLATED",
        };
        write!(f, "verdict: {verdict}")?;
        if self.model.representation_ambiguous() {
            write!(f, "\nnote: N > n, cone membership is checked on the formal representation")?;
        }
        Ok(())
    }
}

fn require_cone(p: &ExactPoly, name: &str) -> Result<()> {
    if p.is_cone() {
        return Ok(());
    }
    let listing: Vec<String> =
        p.negative_terms().iter().map(|(m, c)| format!("{} on {}", format_rational(c), render(m, p.mode()))).collect();
    Err(Error::input(format!("{name} is not in the cone; negative coefficients: {}", listing.join(", "))))
}

fn render(m: &DotMonomial, mode: Mode) -> String {
    let dims = ModelDims { n: 2, sites: m.max_site().map_or(1, |s| s + 1) };
    Polynomial::<BigRational>::from_terms_unchecked(mode, dims, [(m.clone(), BigRational::from_integer(1.into()))])
        .to_string()
}

/// `E f` for a cone polynomial. A negative value is reported as a violation.
pub fn check_first(engine: &mut impl Expectation, f: &ExactPoly) -> Result<FirstReport> {
    require_cone(f, "f")?;
    let ef = engine.expect(f)?;
    let verdict = if ef >= BigRational::zero() { Verdict::Holds } else { Verdict::Violated };
    Ok(FirstReport { ef, verdict })
}

/// Exact `E f`, `E g`, `E fg` and the second-inequality gap.
pub fn check_second(engine: &mut impl Expectation, f: &ExactPoly, g: &ExactPoly) -> Result<GriffithsReport> {
    require_cone(f, "f")?;
    require_cone(g, "g")?;
    let fg = f.try_mul(g)?;
    let ef = engine.expect(f)?;
    let eg = engine.expect(g)?;
    let efg = engine.expect(&fg)?;
    let gap = &efg - &ef * &eg;
    let zero = BigRational::zero();
    let verdict = if gap >= zero && ef >= zero && eg >= zero { Verdict::Holds } else { Verdict::Violated };
    Ok(GriffithsReport { ef, eg, efg, gap, verdict, model: ModelDescriptor::of(f) })
}

/// Writes a reproducible counterexample (both inputs plus the report).
pub fn write_counterexample(
    path: &Path,
    f: &ExactPoly,
    g: &ExactPoly,
    report: &GriffithsReport,
) -> std::io::Result<()> {
    let doc = json!({
        "f": io::poly_to_value(f),
        "g": io::poly_to_value(g),
        "report": report.to_json(),
    });
    std::fs::write(path, serde_json::to_string_pretty(&doc).expect("json"))
}

/// Deterministic random cone element.
///
/// Each monomial is grown by random factor insertions that respect the
/// per-site degree budget (a diagonal Gaussian pair counts twice at its
/// site). Coefficients are positive rationals `p/q` with `1 <= p <= 9`,
/// `1 <= q <= 6`. Up to `terms` distinct monomials are produced; fewer only
/// when the budget does not admit that many.
pub fn random_cone_poly(mode: Mode, dims: ModelDims, budget: u32, terms: usize, seed: u64) -> Result<ExactPoly> {
    ModelDims::new(mode, dims.n, dims.sites)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<SitePair> = (0..dims.sites)
        .flat_map(|i| (i..dims.sites).map(move |j| SitePair::new(i, j)))
        .filter(|p| mode == Mode::Gaussian || !p.is_diagonal())
        .collect();
    let mut monomials: BTreeSet<DotMonomial> = BTreeSet::new();
    let mut order: Vec<DotMonomial> = Vec::new();
    let attempts = terms.max(1) * 32;
    for _ in 0..attempts {
        if order.len() >= terms.max(1) {
            break;
        }
        let m = random_monomial(&mut rng, &pairs, dims.sites, budget);
        if monomials.insert(m.clone()) {
            order.push(m);
        }
    }
    let out = order.into_iter().map(|m| {
        let p: i64 = rng.random_range(1..=9);
        let q: i64 = rng.random_range(1..=6);
        (m, BigRational::new(BigInt::from(p), BigInt::from(q)))
    });
    Polynomial::from_terms(mode, dims, out.collect::<Vec<_>>())
}

fn random_monomial(rng: &mut ChaCha8Rng, pairs: &[SitePair], sites: usize, budget: u32) -> DotMonomial {
    if pairs.is_empty() || budget == 0 {
        return DotMonomial::one();
    }
    let max_insertions = (budget as usize * sites) / 2;
    let target = rng.random_range(0..=max_insertions);
    let mut degrees = vec![0u32; sites];
    let mut factors = Vec::new();
    for _ in 0..target {
        let pair = pairs[rng.random_range(0..pairs.len())];
        let fits = if pair.is_diagonal() {
            degrees[pair.i] + 2 <= budget
        } else {
            degrees[pair.i] < budget && degrees[pair.j] < budget
        };
        if fits {
            degrees[pair.i] += 1;
            degrees[pair.j] += 1;
            factors.push((pair, 1));
        }
    }
    DotMonomial::from_powers(factors)
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
    fn first_inequality_examples() {
        let mut e = SphereMoments::new(3);
        let r = check_first(&mut e, &sphere(3, 2, vec![(u(1, 2), int(1))])).unwrap();
        assert_eq!((r.ef, r.verdict), (int(0), Verdict::Holds));
        let mut e2 = SphereMoments::new(2);
        let r = check_first(&mut e2, &sphere(2, 2, vec![(u(1, 2).pow(2), int(1))])).unwrap();
        assert_eq!(r.ef, frac(1, 2));
        let tri = u(1, 2).mul(&u(2, 3)).mul(&u(1, 3));
        let r = check_first(&mut e, &sphere(3, 3, vec![(tri, int(1))])).unwrap();
        assert_eq!(r.ef, frac(1, 9));
    }

    #[test]
    fn non_cone_refused_with_listing() {
        let mut e = SphereMoments::new(3);
        let err = check_first(&mut e, &sphere(3, 2, vec![(u(1, 2), int(-2))])).unwrap_err();
        match err {
            Error::Input(msg) => assert!(msg.contains("-2 on u12"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn second_inequality_examples() {
        let mut e = SphereMoments::new(2);
        let f = sphere(2, 2, vec![(u(1, 2).pow(2), int(1))]);
        let r = check_second(&mut e, &f, &f).unwrap();
        assert_eq!(r.gap, frac(1, 8));
        assert_eq!(r.verdict, Verdict::Holds);

        for n in 2..6i64 {
            let mut e = SphereMoments::new(n as usize);
            let f = sphere(n as usize, 3, vec![(u(1, 2).pow(2), int(1))]);
            let g = sphere(n as usize, 3, vec![(u(1, 3).pow(2), int(1))]);
            let r = check_second(&mut e, &f, &g).unwrap();
            assert_eq!(r.efg, frac(1, n * n));
            assert_eq!(r.gap, int(0));
        }

        let mut e = SphereMoments::new(3);
        let r = check_second(&mut e, &sphere(3, 3, vec![(u(1, 2), int(1))]), &sphere(3, 3, vec![(u(2, 3), int(1))]))
            .unwrap();
        assert_eq!((r.ef, r.eg, r.efg, r.gap), (int(0), int(0), int(0), int(0)));
    }

    #[test]
    fn dims_mismatch_is_input_error() {
        let mut e = SphereMoments::new(3);
        let f = sphere(3, 2, vec![(u(1, 2), int(1))]);
        let g = sphere(3, 3, vec![(u(1, 2), int(1))]);
        assert!(matches!(check_second(&mut e, &f, &g), Err(Error::Input(_))));
    }

    #[test]
    fn random_generator_properties() {
        let dims = ModelDims { n: 3, sites: 4 };
        let c = random_cone_poly(Mode::Sphere, dims, 0, 5, 1).unwrap();
        assert_eq!(c.len(), 1);
        assert!(c.constant_term() > int(0));

        let a = random_cone_poly(Mode::Sphere, dims, 4, 5, 7).unwrap();
        let b = random_cone_poly(Mode::Sphere, dims, 4, 5, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert!(a.terms().all(|(_, c)| *c > int(0)));
        for (m, _) in a.terms() {
            assert!(m.site_degrees(4).iter().all(|&d| d <= 4));
        }

        let g = random_cone_poly(Mode::Gaussian, ModelDims { n: 1, sites: 3 }, 3, 6, 11).unwrap();
        for (m, _) in g.terms() {
            assert!(m.site_degrees(3).iter().all(|&d| d <= 3));
        }
    }

    #[test]
    fn report_json_shape() {
        let mut e = SphereMoments::new(2);
        let f = sphere(2, 2, vec![(u(1, 2).pow(2), int(1))]);
        let r = check_second(&mut e, &f, &f).unwrap();
        let v = r.to_json();
        assert_eq!(v["gap"], "1/8");
        assert_eq!(v["verdict"], "holds");
        assert_eq!(v["model"]["N"], 2);
    }

    #[test]
    fn counterexample_round_trips() {
        let f = sphere(2, 2, vec![(u(1, 2).pow(2), int(1))]);
        let g = sphere(2, 2, vec![(u(1, 2).pow(2), frac(1, 2))]);
        let report = check_second(&mut SphereMoments::new(2), &f, &g).unwrap();
        let path = std::env::temp_dir().join(format!("griffiths-cx-{}.json", std::process::id()));
        write_counterexample(&path, &f, &g, &report).unwrap();
        let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        std::fs::remove_file(&path).unwrap();
        assert_eq!(io::poly_from_json(&doc["f"].to_string()).unwrap(), f);
        assert_eq!(io::poly_from_json(&doc["g"].to_string()).unwrap(), g);
        assert_eq!(doc["report"]["gap"], "1/16");
    }
}
