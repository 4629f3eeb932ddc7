//! Monte Carlo estimates of sphere and Gaussian expectations.
//!
//! Sampling is split into a fixed number of shards. Shard `k` draws from
//! the ChaCha8 stream `k` of the seed, so results do not depend on the
//! number of worker threads, and partial sums are merged in shard order.

use nalgebra::DMatrix;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{ExactPoly, FloatPoly, Mode};
use crate::error::{Error, Result};
use crate::gaussian::FerroMatrix;
use crate::moments::Couplings;
use crate::rational::to_f64;

pub const SHARDS: u64 = 64;
pub const MIN_SAMPLES: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

impl MCEstimate {
    /// `|mean - exact| / stderr`.
    pub fn sigmas(&self, exact: f64) -> f64 {
        (self.mean - exact).abs() / self.stderr
    }

    pub fn agrees_with(&self, exact: f64, sigmas: f64) -> bool {
        (self.mean - exact).abs() <= sigmas * self.stderr
    }
}

/// Uniform point on `S^{n-1}`: a normalized standard Gaussian vector.
pub fn sample_sphere<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    assert!(n >= 2, "sphere sampling needs n >= 2");
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-150 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

#[derive(Debug, Clone)]
enum Sampler {
    Sphere {
        n: usize,
        sites: usize,
    },
    /// Rows of `factor` map standard normals to one component of the spins.
    Gaussian {
        n: usize,
        factor: DMatrix<f64>,
    },
}

impl Sampler {
    fn sites(&self) -> usize {
        match self {
            Sampler::Sphere { sites, .. } => *sites,
            Sampler::Gaussian { factor, .. } => factor.nrows(),
        }
    }

    fn fill_gram(&self, rng: &mut ChaCha8Rng, spins: &mut [Vec<f64>], gram: &mut [Vec<f64>]) {
        match self {
            Sampler::Sphere { n, .. } => {
                for s in spins.iter_mut() {
                    *s = sample_sphere(*n, rng);
                }
            }
            Sampler::Gaussian { n, factor } => {
                let sites = factor.nrows();
                for s in spins.iter_mut() {
                    s.iter_mut().for_each(|v| *v = 0.0);
                }
                for c in 0..*n {
                    let z: Vec<f64> = (0..sites).map(|_| rng.sample(StandardNormal)).collect();
                    for i in 0..sites {
                        spins[i][c] = (0..=i).map(|j| factor[(i, j)] * z[j]).sum();
                    }
                }
            }
        }
        for i in 0..spins.len() {
            for j in i..spins.len() {
                let d: f64 = spins[i].iter().zip(&spins[j]).map(|(a, b)| a * b).sum();
                gram[i][j] = d;
                gram[j][i] = d;
            }
        }
    }

    fn dim(&self) -> usize {
        match self {
            Sampler::Sphere { n, .. } | Sampler::Gaussian { n, .. } => *n,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Partial {
    w: f64,
    wp: f64,
    wp2: f64,
    w2: f64,
    w2p: f64,
    w2p2: f64,
    count: u64,
}

impl Partial {
    fn merge(mut self, o: &Partial) -> Partial {
        self.w += o.w;
        self.wp += o.wp;
        self.wp2 += o.wp2;
        self.w2 += o.w2;
        self.w2p += o.w2p;
        self.w2p2 += o.w2p2;
        self.count += o.count;
        self
    }
}

fn run(sampler: &Sampler, p: &FloatPoly, weight: Option<&FloatPoly>, samples: u64, seed: u64) -> Result<MCEstimate> {
    if samples < MIN_SAMPLES {
        return Err(Error::input(format!("at least {MIN_SAMPLES} samples are needed, got {samples}")));
    }
    let sites = sampler.sites();
    let partials: Vec<Partial> = (0..SHARDS)
        .into_par_iter()
        .map(|shard| {
            let count = samples / SHARDS + u64::from(shard < samples % SHARDS);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard);
            let mut spins = vec![vec![0.0; sampler.dim()]; sites];
            let mut gram = vec![vec![0.0; sites]; sites];
            let mut acc = Partial { count, ..Partial::default() };
            for _ in 0..count {
                sampler.fill_gram(&mut rng, &mut spins, &mut gram);
                let v = p.evaluate(&gram);
                let w = weight.map_or(1.0, |h| h.evaluate(&gram).exp());
                acc.w += w;
                acc.wp += w * v;
                acc.wp2 += w * v * v;
                acc.w2 += w * w;
                acc.w2p += w * w * v;
                acc.w2p2 += w * w * v * v;
            }
            acc
        })
        .collect();
    let total = partials.iter().fold(Partial::default(), |a, b| a.merge(b));
    let n = total.count as f64;
    let (mean, stderr) = if weight.is_none() {
        let mean = total.wp / n;
        let var = (total.wp2 - n * mean * mean) / (n - 1.0);
        (mean, (var.max(0.0) / n).sqrt())
    } else {
        // Self-normalized ratio; delta-method variance Σ w²(p - r)² / (Σ w)².
        let r = total.wp / total.w;
        let spread = total.w2p2 - 2.0 * r * total.w2p + r * r * total.w2;
        (r, spread.max(0.0).sqrt() / total.w)
    };
    if !mean.is_finite() || !stderr.is_finite() {
        return Err(Error::numeric("Monte Carlo estimate is not finite"));
    }
    Ok(MCEstimate { mean, stderr, samples, seed })
}

/// Plain average of a sphere-mode polynomial, or with couplings the
/// self-normalized average under the weight `exp(Σ_{i<j} J_ij u_ij)`.
pub fn estimate_sphere(p: &ExactPoly, samples: u64, seed: u64, couplings: Option<&Couplings>) -> Result<MCEstimate> {
    if p.mode() != Mode::Sphere {
        return Err(Error::input("sphere estimate needs a sphere-mode polynomial"));
    }
    let dims = p.dims();
    let weight = match couplings {
        Some(c) => {
            if c.entries().any(|(pair, _)| pair.j >= dims.sites) {
                return Err(Error::input("coupling refers to a site outside the model"));
            }
            let mut h = FloatPoly::zero(Mode::Sphere, dims);
            for (pair, j) in c.entries() {
                h.add_term(crate::algebra::DotMonomial::var(*pair), to_f64(j));
            }
            Some(h)
        }
        None => None,
    };
    run(&Sampler::Sphere { n: dims.n, sites: dims.sites }, &p.to_f64(), weight.as_ref(), samples, seed)
}

/// Average of a gaussian-mode polynomial, sampling through the exact `LDLᵀ` of `F⁻¹`.
pub fn estimate_gaussian(p: &ExactPoly, ferro: &FerroMatrix, samples: u64, seed: u64) -> Result<MCEstimate> {
    if p.mode() != Mode::Gaussian {
        return Err(Error::input("gaussian estimate needs a gaussian-mode polynomial"));
    }
    if p.dims().sites != ferro.size() {
        return Err(Error::input("polynomial and matrix disagree on N"));
    }
    let (l, d) = ferro.covariance()?.ldl()?;
    let size = ferro.size();
    let mut factor = DMatrix::zeros(size, size);
    for j in 0..size {
        if d[j].is_negative() {
            return Err(Error::numeric("covariance pivot is negative"));
        }
        let scale = to_f64(&d[j]).sqrt();
        for i in j..size {
            factor[(i, j)] = to_f64(l.get(i, j)) * scale;
        }
    }
    run(&Sampler::Gaussian { n: p.dims().n, factor }, &p.to_f64(), None, samples, seed)
}
