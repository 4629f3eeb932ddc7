//! Log-log fits for empirical rates.

/// Least-squares slope of `ln y` against `ln x`. `None` if fewer than two
/// points or any value is not a positive finite number.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let ok = |v: &f64| v.is_finite() && *v > 0.0;
    if !xs.iter().all(ok) || !ys.iter().all(ok) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Order `p` in `error ≈ C m^{-p}`.
pub fn convergence_order(steps: &[f64], errors: &[f64]) -> Option<f64> {
    loglog_slope(steps, errors).map(|s| -s)
}

/// Order fitted on the finer half of a refinement sequence (at least three
/// points), where pre-asymptotic sign changes in the error have died out.
pub fn asymptotic_order(steps: &[f64], errors: &[f64]) -> Option<f64> {
    if steps.len() != errors.len() {
        return None;
    }
    let keep = (steps.len() / 2 + 1).max(3).min(steps.len());
    let from = steps.len() - keep;
    convergence_order(&steps[from..], &errors[from..])
}

pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}
