//! Small numerical helpers shared across modules.

/// Least-squares slope of `log(error)` against `log(step)`.
pub fn fitted_order(steps: &[f64], errors: &[f64]) -> f64 {
    assert_eq!(steps.len(), errors.len());
    let n = steps.len() as f64;
    let xs: Vec<f64> = steps.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
