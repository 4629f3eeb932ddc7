//! The Gaussian-kernel contraction
//! `U(t)f(σ) = c(t) ∫ exp(-|σ-σ'|²/4t) f(σ') dσ'` on `S^{n-1}` (normalized
//! surface measure) and its Chernoff limit `U(t/m)^m → e^{tΔ}`.
//!
//! `U(t)` commutes with rotations, so it multiplies the degree-`l` zonal
//! harmonic by the scalar
//!
//! ```text
//! λ_l(t) = ∫ e^{(s-1)/2t} P_l(s) (1-s²)^{(n-3)/2} ds / ∫ e^{(s-1)/2t} (1-s²)^{(n-3)/2} ds
//! ```
//!
//! All integrals are taken in `θ` with `s = cos θ`, where the integrand
//! `exp(-sin²(θ/2)/t) sin^{n-2}θ` is smooth. For `n = 2` it is also even and
//! periodic, so the trapezoid rule converges spectrally; otherwise composite
//! Gauss–Legendre on panels graded toward `θ = 0` at scale `√t` is used.
//! `λ_l - 1` is integrated directly with `P_l(1+x) - 1` in shifted form.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::convergence::loglog_slope;
use crate::error::{Error, Result};
use crate::quadrature::{composite_gauss, trapezoid};
use crate::zonal::ZonalDefect;

pub const DEFAULT_NODES: usize = 32;
pub const QUADRATURE_TOL: f64 = 1e-12;
const MAX_TRAPEZOID_INTERVALS: usize = 1 << 22;
const MAX_PANEL_NODES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub n: usize,
    pub t: f64,
    /// Starting node count; doubled until successive estimates agree.
    pub nodes: usize,
}

impl KernelSpec {
    pub fn new(n: usize, t: f64, nodes: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::input(format!("kernel needs n >= 2, got {n}")));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::input(format!("kernel needs t > 0, got {t}")));
        }
        if nodes < 16 {
            return Err(Error::input(format!("quadrature needs at least 16 nodes, got {nodes}")));
        }
        Ok(KernelSpec { n, t, nodes })
    }

    pub fn with_t(&self, t: f64) -> Result<Self> {
        KernelSpec::new(self.n, t, self.nodes)
    }
}

/// `Γ(k/2)`.
pub fn gamma_half(k: u32) -> f64 {
    assert!(k > 0);
    let mut g = if k.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut x = if k.is_multiple_of(2) { 1.0 } else { 0.5 };
    while x < k as f64 / 2.0 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Surface area of the unit sphere `S^{n-1} ⊂ R^n`.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n as u32)
}

/// `∫_0^π sin^{n-2}θ dθ`.
fn angular_mass(n: usize) -> f64 {
    PI.sqrt() * gamma_half(n as u32 - 1) / gamma_half(n as u32)
}

/// `(∫ kernel·w, ∫ kernel·w·(P_l - 1))` over `θ ∈ [0, π]`.
fn kernel_integrals(spec: &KernelSpec, l: usize) -> Result<(f64, f64)> {
    let KernelSpec { n, t, nodes } = *spec;
    let zonal = ZonalDefect::new(n, l);
    let integrand = |theta: f64| {
        let h = (0.5 * theta).sin();
        let h2 = h * h;
        let base = (-h2 / t).exp() * theta.sin().powi(n as i32 - 2);
        (base, base * zonal.eval(-2.0 * h2))
    };
    let agree = |a: (f64, f64), b: (f64, f64)| {
        let close = |x: f64, y: f64| (x - y).abs() <= QUADRATURE_TOL * y.abs().max(f64::MIN_POSITIVE);
        close(a.0, b.0) && (l == 0 || close(a.1, b.1))
    };
    let mut prev: Option<(f64, f64)> = None;
    if n == 2 {
        let mut intervals = nodes;
        while intervals <= MAX_TRAPEZOID_INTERVALS {
            let est =
                (trapezoid(0.0, PI, intervals, |x| integrand(x).0), trapezoid(0.0, PI, intervals, |x| integrand(x).1));
            if prev.is_some_and(|p| agree(p, est)) {
                return Ok(est);
            }
            prev = Some(est);
            intervals *= 2;
        }
    } else {
        let scale = t.sqrt().min(PI / 4.0);
        let mut breaks = vec![0.0];
        let mut b = scale;
        while b < PI {
            breaks.push(b);
            b *= 2.0;
        }
        breaks.push(PI);
        let mut q = nodes;
        while q <= MAX_PANEL_NODES {
            let est =
                (composite_gauss(&breaks, q, |x| integrand(x).0), composite_gauss(&breaks, q, |x| integrand(x).1));
            if prev.is_some_and(|p| agree(p, est)) {
                return Ok(est);
            }
            prev = Some(est);
            q *= 2;
        }
    }
    Err(Error::numeric(format!("kernel quadrature did not converge for n = {n}, t = {t}, l = {l}")))
}

/// `λ_l(t) - 1`, computed without cancellation.
pub fn eigenvalue_defect(spec: &KernelSpec, l: usize) -> Result<f64> {
    if l == 0 {
        return Ok(0.0);
    }
    let (mass, defect) = kernel_integrals(spec, l)?;
    Ok(defect / mass)
}

pub fn funk_hecke_eigenvalue(spec: &KernelSpec, l: usize) -> Result<f64> {
    Ok(1.0 + eigenvalue_defect(spec, l)?)
}

/// `λ_0 ..= λ_{l_max}`.
pub fn eigen_table(spec: &KernelSpec, l_max: usize) -> Result<Vec<f64>> {
    (0..=l_max).into_par_iter().map(|l| funk_hecke_eigenvalue(spec, l)).collect()
}

/// `l(l+n-2)`, the eigenvalue of `-Δ` on degree-`l` harmonics of `S^{n-1}`.
pub fn harmonic_eigenvalue(n: usize, l: usize) -> f64 {
    (l * (l + n - 2)) as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernoffPoint {
    pub m: u32,
    pub approx: f64,
    pub reference: f64,
    pub error: f64,
}

/// `λ_l(t/m)^m` against `e^{-l(l+n-2)t}`.
pub fn chernoff_iterate(spec: &KernelSpec, l: usize, m: u32) -> Result<ChernoffPoint> {
    if m == 0 {
        return Err(Error::input("Chernoff iteration needs m >= 1"));
    }
    let step = spec.with_t(spec.t / m as f64)?;
    let approx = (m as f64 * eigenvalue_defect(&step, l)?.ln_1p()).exp();
    let reference = (-harmonic_eigenvalue(spec.n, l) * spec.t).exp();
    Ok(ChernoffPoint { m, approx, reference, error: (approx - reference).abs() })
}

pub fn chernoff_table(spec: &KernelSpec, l: usize, ms: &[u32]) -> Result<Vec<ChernoffPoint>> {
    ms.par_iter().map(|&m| chernoff_iterate(spec, l, m)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub t: f64,
    pub c: f64,
    /// `c(t) (4πt)^{(n-1)/2} / A_{n-1}`.
    pub ratio: f64,
}

impl Normalization {
    pub fn ratio_minus_one(&self) -> f64 {
        self.ratio - 1.0
    }
}

/// `c(t)` from `U(t)1 = 1`, and its ratio to the flat-space prediction.
pub fn normalization_constant(spec: &KernelSpec) -> Result<Normalization> {
    let (mass, _) = kernel_integrals(spec, 0)?;
    let c = angular_mass(spec.n) / mass;
    let ratio = c * (4.0 * PI * spec.t).powf((spec.n as f64 - 1.0) / 2.0) / sphere_area(spec.n);
    Ok(Normalization { t: spec.t, c, ratio })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorPoint {
    pub t: f64,
    /// `(λ_l(t) - 1)/t`.
    pub value: f64,
    /// `-l(l+n-2)`.
    pub target: f64,
    pub deviation: f64,
}

pub fn generator_limit(spec: &KernelSpec, l: usize) -> Result<GeneratorPoint> {
    let value = eigenvalue_defect(spec, l)? / spec.t;
    let target = -harmonic_eigenvalue(spec.n, l);
    Ok(GeneratorPoint { t: spec.t, value, target, deviation: (value - target).abs() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorEnvelope {
    pub points: Vec<GeneratorPoint>,
    /// `C = deviation/√t` at the largest `t` of the grid.
    pub constant: f64,
    /// Every point satisfies `deviation ≤ C√t`.
    pub holds: bool,
    /// Fitted exponent of `deviation ~ t^p`, when all deviations are positive.
    pub observed_rate: Option<f64>,
}

/// Checks `|(λ_l(t)-1)/t + l(l+n-2)| ≤ C√t` across `grid`.
pub fn generator_envelope(n: usize, l: usize, grid: &[f64], nodes: usize) -> Result<GeneratorEnvelope> {
    if grid.is_empty() {
        return Err(Error::input("empty t grid"));
    }
    let points =
        grid.par_iter().map(|&t| generator_limit(&KernelSpec::new(n, t, nodes)?, l)).collect::<Result<Vec<_>>>()?;
    let anchor = points.iter().max_by(|a, b| a.t.total_cmp(&b.t)).unwrap();
    let constant = anchor.deviation / anchor.t.sqrt();
    let holds = points.iter().all(|p| p.deviation / p.t.sqrt() <= constant);
    let ts: Vec<f64> = points.iter().map(|p| p.t).collect();
    let devs: Vec<f64> = points.iter().map(|p| p.deviation).collect();
    Ok(GeneratorEnvelope { observed_rate: loglog_slope(&ts, &devs), points, constant, holds })
}

/// `count` points spaced evenly in `log t` on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && count >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp()).collect()
}
