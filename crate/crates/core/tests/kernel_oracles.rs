//! Independent closed forms for the kernel eigenvalues.
//!
//! Circle: `λ_l = I_l(x)/I_0(x)` with `x = 1/2t`, summed as a power series.
//! Two-sphere: `λ_1 = L(a)`, `λ_2 = 1 - 3L(a)/a` with `a = 1/2t` and the
//! Langevin function `L(a) = coth a - 1/a`.

use griffiths_core::chernoff::{
    chernoff_table, eigenvalue_defect, funk_hecke_eigenvalue, generator_envelope, log_grid, normalization_constant,
    KernelSpec, DEFAULT_NODES,
};
use griffiths_core::convergence::{convergence_order, strictly_decreasing};

fn spec(n: usize, t: f64) -> KernelSpec {
    KernelSpec::new(n, t, DEFAULT_NODES).unwrap()
}

/// `e^{-x} I_l(x)` by its power series, fine for moderate `x`.
fn scaled_bessel_i(l: u32, x: f64) -> f64 {
    let mut term = (0.5 * x).powi(l as i32) / (1..=l).map(f64::from).product::<f64>();
    let mut sum = 0.0;
    for k in 0..2000 {
        sum += term;
        term *= 0.25 * x * x / ((k + 1) as f64 * (k as f64 + 1.0 + l as f64));
        if term < 1e-18 * sum {
            break;
        }
    }
    sum * (-x).exp()
}

fn langevin(a: f64) -> f64 {
    1.0 / a.tanh() - 1.0 / a
}

#[test]
fn circle_matches_bessel_ratio() {
    for t in [2.0, 0.5, 0.1, 0.05, 0.02] {
        let x = 1.0 / (2.0 * t);
        for l in 1..5 {
            let want = scaled_bessel_i(l, x) / scaled_bessel_i(0, x);
            let got = funk_hecke_eigenvalue(&spec(2, t), l as usize).unwrap();
            assert!((got - want).abs() < 1e-12, "t={t} l={l}: {got} vs {want}");
        }
    }
}

#[test]
fn circle_small_t_asymptotics() {
    // I_1/I_0 = 1 - 1/(2x) - 1/(8x²) - 1/(8x³) + O(x^{-4})
    for t in [1e-3f64, 1e-4] {
        let x = 1.0 / (2.0 * t);
        let want = -1.0 / (2.0 * x) - 1.0 / (8.0 * x * x) - 1.0 / (8.0 * x.powi(3));
        let got = eigenvalue_defect(&spec(2, t), 1).unwrap();
        assert!((got - want).abs() < 2.0 / x.powi(4), "t={t}");
    }
}

#[test]
fn two_sphere_matches_langevin() {
    for t in [2.0, 0.5, 0.1, 1e-2, 1e-3, 1e-4] {
        let a = 1.0 / (2.0 * t);
        let l1 = funk_hecke_eigenvalue(&spec(3, t), 1).unwrap();
        assert!((l1 - langevin(a)).abs() < 1e-12, "t={t}");
        let d2 = eigenvalue_defect(&spec(3, t), 2).unwrap();
        assert!((d2 + 3.0 * langevin(a) / a).abs() < 1e-12 * (1.0 + d2.abs()), "t={t}");
    }
    let mid = funk_hecke_eigenvalue(&spec(3, 0.5), 1).unwrap();
    assert!(mid > 0.0 && mid < 1.0);
}

#[test]
fn two_sphere_normalization_closed_form() {
    // ratio - 1 = e^{-1/t}/(1 - e^{-1/t}), exponentially small
    for t in [0.5, 0.2, 0.1] {
        let r = normalization_constant(&spec(3, t)).unwrap();
        let q = (-1.0 / t).exp();
        assert!((r.ratio_minus_one() - q / (1.0 - q)).abs() < 1e-12, "t={t}");
        assert!((r.c - 1.0 / (t * (1.0 - q))).abs() < 1e-12 * r.c);
    }
}

#[test]
fn circle_normalization_is_first_order() {
    // c(t) = e^{x}/I_0(x) with x = 1/2t, so ratio - 1 ≈ -t/4
    for t in [1e-1, 1e-2, 1e-3] {
        let r = normalization_constant(&spec(2, t)).unwrap();
        let rel = r.ratio_minus_one() / (-t / 4.0);
        assert!((rel - 1.0).abs() < 2.0 * t, "t={t} rel={rel}");
    }
}

#[test]
fn chernoff_circle_first_order() {
    let ms: Vec<u32> = (3..=8).map(|k| 1 << k).collect();
    let table = chernoff_table(&spec(2, 1.0), 1, &ms).unwrap();
    let errs: Vec<f64> = table.iter().map(|p| p.error).collect();
    assert!(strictly_decreasing(&errs));
    let order = convergence_order(&ms.iter().map(|&m| m as f64).collect::<Vec<_>>(), &errs).unwrap();
    assert!((order - 1.0).abs() < 0.1, "order {order}");
    assert!((table.last().unwrap().reference - (-1.0f64).exp()).abs() < 1e-15);
}

#[test]
fn generator_limit_near_eigenvalue() {
    let env = generator_envelope(3, 1, &[1e-3], DEFAULT_NODES).unwrap();
    assert!((env.points[0].value + 2.0).abs() < 0.01);
    let env = generator_envelope(2, 1, &log_grid(1e-4, 1e-1, 7), DEFAULT_NODES).unwrap();
    assert!(env.holds);
    // per-harmonic rate is first order
    assert!((env.observed_rate.unwrap() - 1.0).abs() < 0.1);
}
