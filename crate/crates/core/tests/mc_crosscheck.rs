//! Monte Carlo against the exact engines.

use griffiths_core::algebra::{DotMonomial, ExactPoly, Mode, ModelDims, Polynomial, SitePair};
use griffiths_core::gaussian::{FerroMatrix, GaussianMoments};
use griffiths_core::linalg::RatMatrix;
use griffiths_core::mc::{estimate_gaussian, estimate_sphere, sample_sphere};
use griffiths_core::moments::{interacting_moment, Couplings, SphereMoments};
use griffiths_core::rational::{frac, int, to_f64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SAMPLES: u64 = 1_000_000;

fn u(i: usize, j: usize) -> DotMonomial {
    DotMonomial::var(SitePair::new(i - 1, j - 1))
}

fn mono(mode: Mode, n: usize, sites: usize, m: DotMonomial) -> ExactPoly {
    Polynomial::from_terms(mode, ModelDims { n, sites }, [(m, int(1))]).unwrap()
}

fn path() -> FerroMatrix {
    FerroMatrix::new(RatMatrix::from_rows(vec![vec![int(2), int(-1)], vec![int(-1), int(2)]]).unwrap()).unwrap()
}

#[test]
fn sphere_examples() {
    let cases = [
        (mono(Mode::Sphere, 3, 2, u(1, 2).pow(2)), 1.0 / 3.0),
        (mono(Mode::Sphere, 2, 3, u(1, 2).mul(&u(2, 3)).mul(&u(1, 3))), 0.25),
    ];
    for (k, (p, exact)) in cases.iter().enumerate() {
        assert_eq!(to_f64(&SphereMoments::new(p.dims().n).moment(p).unwrap()), *exact);
        let est = estimate_sphere(p, SAMPLES, 40 + k as u64, None).unwrap();
        assert!(est.agrees_with(*exact, 4.0), "{p}: {est:?}");
    }
}

#[test]
fn gaussian_example() {
    // C = F^{-1} = [[2/3,1/3],[1/3,2/3]] and (x1 x2)^2 at n = 1.
    let f = path();
    let p = mono(Mode::Gaussian, 1, 2, u(1, 2).pow(2));
    let exact = GaussianMoments::new(&f, 1).unwrap().moment(&p).unwrap();
    assert_eq!(exact, frac(2, 3));
    let est = estimate_gaussian(&p, &f, SAMPLES, 9).unwrap();
    assert!(est.agrees_with(2.0 / 3.0, 4.0), "{est:?}");
}

#[test]
fn sphere_symmetry_moments() {
    for n in [2usize, 3, 5] {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let draws = 200_000;
        let mut sum = vec![0.0; n];
        let mut sq = vec![0.0; n];
        let mut sq2 = vec![0.0; n];
        for _ in 0..draws {
            let v = sample_sphere(n, &mut rng);
            for c in 0..n {
                sum[c] += v[c];
                sq[c] += v[c] * v[c];
                sq2[c] += v[c].powi(4);
            }
        }
        let k = draws as f64;
        for c in 0..n {
            // Var(sigma_c) = 1/n and Var(sigma_c^2) = 3/(n(n+2)) - 1/n^2.
            let nf = n as f64;
            let mean_err = 1.0 / (nf * k).sqrt();
            assert!((sum[c] / k).abs() <= 4.0 * mean_err, "n={n} c={c}");
            let var2 = (sq2[c] / k) - (sq[c] / k).powi(2);
            assert!((sq[c] / k - 1.0 / nf).abs() <= 4.0 * (var2 / k).sqrt(), "n={n} c={c}");
        }
    }
}

#[test]
fn elimination_against_sampling() {
    // Integrating out site 3 turns u13 u23 into u12/n, so
    // E[u12^3 u13 u23] = E[u12^4]/n = 3/(n^2 (n+2)).
    for n in [2usize, 3] {
        let p = mono(Mode::Sphere, n, 3, u(1, 2).pow(3).mul(&u(1, 3)).mul(&u(2, 3)));
        let exact = SphereMoments::new(n).moment(&p).unwrap();
        let ni = n as i64;
        assert_eq!(exact, frac(3, ni * ni * (ni + 2)));
        let est = estimate_sphere(&p, SAMPLES, 70 + n as u64, None).unwrap();
        assert!(est.agrees_with(to_f64(&exact), 4.0), "n={n}: {est:?}");
    }
}

#[test]
fn interacting_bound_against_weighted_sampling() {
    let couplings = Couplings::new([(SitePair::new(0, 1), frac(1, 10))]).unwrap();
    for n in [2usize, 3] {
        let p = mono(Mode::Sphere, n, 2, u(1, 2));
        let r = interacting_moment(&mut SphereMoments::new(n), &p, &couplings, 6).unwrap();
        assert!(r.lower_bound() > 0.0);
        let est = estimate_sphere(&p, SAMPLES, 5, Some(&couplings)).unwrap();
        assert!((est.mean - to_f64(&r.ratio)).abs() <= 4.0 * est.stderr + r.gap, "n={n}: {est:?} vs {r:?}");
    }
}

#[test]
fn replay_is_bit_identical() {
    let p = mono(Mode::Sphere, 3, 3, u(1, 2).mul(&u(2, 3)).mul(&u(1, 3)));
    let a = estimate_sphere(&p, 50_000, 123, None).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| estimate_sphere(&p, 50_000, 123, None).unwrap());
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    let c = estimate_sphere(&p, 50_000, 124, None).unwrap();
    assert_ne!(a.mean.to_bits(), c.mean.to_bits());
}

#[test]
fn too_few_samples_is_an_input_error() {
    let p = mono(Mode::Sphere, 2, 2, u(1, 2));
    assert!(estimate_sphere(&p, 999, 0, None).is_err());
}
