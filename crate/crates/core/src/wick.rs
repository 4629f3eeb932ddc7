//! Isserlis (Wick) pairing expansions.

use std::ops::{Add, Mul};

use num_bigint::BigInt;
use num_traits::One;

/// A perfect matching of the labels `0..len`, pairs stored as `(a, b)` with `a < b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pairing {
    pairs: Vec<(usize, usize)>,
}

impl Pairing {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
}

/// `(len - 1)!!` for even `len`, 0 for odd `len`.
pub fn pairing_count(len: usize) -> BigInt {
    if len % 2 == 1 {
        return BigInt::from(0);
    }
    (1..len).step_by(2).fold(BigInt::one(), |acc, k| acc * k)
}

/// Every perfect matching of `0..len` (one empty matching for `len = 0`,
/// none for odd `len`).
pub fn pairings(len: usize) -> Vec<Pairing> {
    fn rec(rest: &mut Vec<usize>, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Pairing>) {
        if rest.is_empty() {
            out.push(Pairing { pairs: cur.clone() });
            return;
        }
        let first = rest.remove(0);
        for k in 0..rest.len() {
            let partner = rest.remove(k);
            cur.push((first, partner));
            rec(rest, cur, out);
            cur.pop();
            rest.insert(k, partner);
        }
        rest.insert(0, first);
    }
    let mut out = Vec::new();
    if len.is_multiple_of(2) {
        rec(&mut (0..len).collect(), &mut Vec::new(), &mut out);
    }
    out
}

/// `Σ_{pairings p} ∏_{(a,b) ∈ p} inner(labels[a], labels[b])`.
///
/// The first remaining label is paired with each later label in turn and the
/// rest is expanded recursively, so every matching is visited exactly once.
/// Odd-length inputs give `zero`.
pub fn wick_sum<L, T, F>(labels: &[L], one: T, zero: T, inner: F) -> T
where
    T: Clone + Add<Output = T> + Mul<Output = T>,
    F: Fn(&L, &L) -> T,
{
    fn rec<L, T, F>(labels: &[&L], one: &T, zero: &T, inner: &F) -> T
    where
        T: Clone + Add<Output = T> + Mul<Output = T>,
        F: Fn(&L, &L) -> T,
    {
        if labels.is_empty() {
            return one.clone();
        }
        let first = labels[0];
        let mut acc = zero.clone();
        for k in 1..labels.len() {
            let rest: Vec<&L> =
                labels[1..].iter().enumerate().filter(|&(idx, _)| idx + 1 != k).map(|(_, l)| *l).collect();
            acc = acc + inner(first, labels[k]) * rec(&rest, one, zero, inner);
        }
        acc
    }
    if labels.len() % 2 == 1 {
        return zero;
    }
    let refs: Vec<&L> = labels.iter().collect();
    rec(&refs, &one, &zero, &inner)
}
