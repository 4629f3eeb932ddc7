//! JSON file formats.
//!
//! Polynomial:
//! `{"mode":"sphere","n":3,"N":3,"terms":[{"coeff":"3/2","powers":[{"i":1,"j":2,"p":2}]}]}`
//!
//! Matrix: `{"N":2,"entries":[["2","-1"],["-1","2"]]}`
//!
//! Couplings: `{"N":2,"couplings":[{"i":1,"j":2,"value":"1/10"}]}`
//!
//! Sites are 1-based, coefficients are `"p"` or `"p/q"` strings, and output
//! terms follow the canonical monomial order.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::algebra::{DotMonomial, ExactPoly, FloatPoly, Mode, ModelDims, Polynomial, SitePair};
use crate::error::{Error, Result};
use crate::linalg::RatMatrix;
use crate::moments::Couplings;
use crate::rational::{format_rational, parse_rational};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PowerEntry {
    i: usize,
    j: usize,
    p: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermEntry<C> {
    coeff: C,
    powers: Vec<PowerEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyFile<C> {
    mode: Mode,
    n: usize,
    #[serde(rename = "N")]
    sites: usize,
    terms: Vec<TermEntry<C>>,
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Input(format!("malformed JSON: {e}"))
}

fn pair_from(entry: &PowerEntry, sites: usize) -> Result<SitePair> {
    if entry.i == 0 || entry.j == 0 {
        return Err(Error::input("site indices are 1-based"));
    }
    if entry.i > sites || entry.j > sites {
        return Err(Error::input(format!("site pair ({}, {}) out of range for N = {sites}", entry.i, entry.j)));
    }
    Ok(SitePair::new(entry.i - 1, entry.j - 1))
}

fn powers_of(m: &DotMonomial) -> Vec<PowerEntry> {
    m.powers().iter().map(|&(pair, p)| PowerEntry { i: pair.i + 1, j: pair.j + 1, p }).collect()
}

pub fn poly_from_json(text: &str) -> Result<ExactPoly> {
    let file: PolyFile<String> = serde_json::from_str(text).map_err(json_err)?;
    let dims = ModelDims::new(file.mode, file.n, file.sites)?;
    let mut terms = Vec::with_capacity(file.terms.len());
    for t in &file.terms {
        let coeff = parse_rational(&t.coeff)?;
        let mut powers = Vec::with_capacity(t.powers.len());
        for entry in &t.powers {
            powers.push((pair_from(entry, file.sites)?, entry.p));
        }
        terms.push((DotMonomial::from_powers(powers), coeff));
    }
    Polynomial::from_terms(file.mode, dims, terms)
}

pub fn poly_to_value(p: &ExactPoly) -> Value {
    let file = PolyFile {
        mode: p.mode(),
        n: p.dims().n,
        sites: p.dims().sites,
        terms: p.terms().map(|(m, c)| TermEntry { coeff: format_rational(c), powers: powers_of(m) }).collect(),
    };
    serde_json::to_value(file).expect("serializable")
}

pub fn poly_to_json(p: &ExactPoly) -> String {
    serde_json::to_string(&poly_to_value(p)).expect("serializable")
}

/// Same layout with numeric (`f64`) coefficients.
pub fn float_poly_to_value(p: &FloatPoly) -> Value {
    let file = PolyFile {
        mode: p.mode(),
        n: p.dims().n,
        sites: p.dims().sites,
        terms: p.terms().map(|(m, c)| TermEntry { coeff: *c, powers: powers_of(m) }).collect(),
    };
    serde_json::to_value(file).expect("serializable")
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    #[serde(rename = "N")]
    size: usize,
    entries: Vec<Vec<String>>,
}

pub fn matrix_from_json(text: &str) -> Result<RatMatrix> {
    let file: MatrixFile = serde_json::from_str(text).map_err(json_err)?;
    if file.entries.len() != file.size || file.entries.iter().any(|r| r.len() != file.size) {
        return Err(Error::input(format!("matrix entries do not form an {0}×{0} array", file.size)));
    }
    let rows = file
        .entries
        .iter()
        .map(|r| r.iter().map(|s| parse_rational(s)).collect::<Result<Vec<BigRational>>>())
        .collect::<Result<Vec<_>>>()?;
    RatMatrix::from_rows(rows)
}

pub fn matrix_to_json(m: &RatMatrix) -> String {
    let file = MatrixFile {
        size: m.rows(),
        entries: (0..m.rows()).map(|i| m.row(i).iter().map(format_rational).collect()).collect(),
    };
    serde_json::to_string(&file).expect("serializable")
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingEntry {
    i: usize,
    j: usize,
    value: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingFile {
    #[serde(rename = "N")]
    sites: usize,
    couplings: Vec<CouplingEntry>,
}

/// Returns the declared site count and the couplings.
pub fn couplings_from_json(text: &str) -> Result<(usize, Couplings)> {
    let file: CouplingFile = serde_json::from_str(text).map_err(json_err)?;
    let mut entries = Vec::with_capacity(file.couplings.len());
    for c in &file.couplings {
        let pair = pair_from(&PowerEntry { i: c.i, j: c.j, p: 1 }, file.sites)?;
        entries.push((pair, parse_rational(&c.value)?));
    }
    Ok((file.sites, Couplings::new(entries)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    const SAMPLE: &str =
        r#"{"mode":"sphere","n":3,"N":3,"terms":[{"coeff":"3/2","powers":[{"i":1,"j":2,"p":2},{"i":2,"j":3,"p":1}]}]}"#;

    #[test]
    fn reads_reference_layout() {
        let p = poly_from_json(SAMPLE).unwrap();
        assert_eq!(p.dims(), ModelDims { n: 3, sites: 3 });
        let m = DotMonomial::from_powers([(SitePair::new(0, 1), 2), (SitePair::new(1, 2), 1)]);
        assert_eq!(p.coeff(&m), frac(3, 2));
        assert_eq!(poly_to_json(&p), SAMPLE);
    }

    #[test]
    fn output_is_canonical() {
        let text = r#"{"mode":"sphere","n":2,"N":3,"terms":[
            {"coeff":"1","powers":[{"i":2,"j":3,"p":1}]},
            {"coeff":"2/4","powers":[{"i":2,"j":1,"p":1}]},
            {"coeff":"1/2","powers":[{"i":1,"j":2,"p":1}]},
            {"coeff":"5","powers":[{"i":1,"j":3,"p":0}]}]}"#;
        let p = poly_from_json(text).unwrap();
        assert_eq!(
            poly_to_json(&p),
            r#"{"mode":"sphere","n":2,"N":3,"terms":[{"coeff":"5","powers":[]},{"coeff":"1","powers":[{"i":1,"j":2,"p":1}]},{"coeff":"1","powers":[{"i":2,"j":3,"p":1}]}]}"#
        );
    }

    #[test]
    fn rejects_diagonal_sphere_pair() {
        let text = r#"{"mode":"sphere","n":3,"N":2,"terms":[{"coeff":"1","powers":[{"i":1,"j":1,"p":1}]}]}"#;
        assert!(matches!(poly_from_json(text), Err(Error::Input(_))));
        let text = text.replace("sphere", "gaussian");
        assert!(poly_from_json(&text).is_ok());
    }

    #[test]
    fn rejects_malformed_inputs() {
        assert!(poly_from_json("{").is_err());
        assert!(poly_from_json(
            r#"{"mode":"sphere","n":3,"N":2,"terms":[{"coeff":"1","powers":[{"i":0,"j":1,"p":1}]}]}"#
        )
        .is_err());
        assert!(poly_from_json(r#"{"mode":"sphere","n":1,"N":2,"terms":[]}"#).is_err());
        assert!(poly_from_json(r#"{"mode":"torus","n":3,"N":2,"terms":[]}"#).is_err());
    }

    #[test]
    fn matrix_round_trip() {
        let text = r#"{"N":2,"entries":[["2","-1"],["-1","2"]]}"#;
        let m = matrix_from_json(text).unwrap();
        assert_eq!(matrix_to_json(&m), text);
        assert!(matrix_from_json(r#"{"N":2,"entries":[["1"]]}"#).is_err());
    }

    #[test]
    fn couplings_file() {
        let (sites, c) = couplings_from_json(r#"{"N":2,"couplings":[{"i":1,"j":2,"value":"1/10"}]}"#).unwrap();
        assert_eq!(sites, 2);
        assert_eq!(c.total(), frac(1, 10));
        assert!(couplings_from_json(r#"{"N":2,"couplings":[{"i":1,"j":2,"value":"-1"}]}"#).is_err());
    }
}
