//! Small signal-analysis helpers for reports and trend checks.

/// Root-mean-square distance between two equally long series.
pub fn rms_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (sum / a.len() as f64).sqrt()
}

/// Least-squares slope and intercept.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    (slope, ybar - slope * xbar)
}

/// Frequency and decay-rate estimate of a damped oscillation
/// `y(t) ≈ A e^{-κt} cos(Ωt + φ)`.
///
/// The frequency comes from the mean spacing of sign changes (linear
/// interpolation between samples), the decay rate from a linear fit of
/// log |y| at the local extrema. Both are deterministic and robust enough
/// for monotone trend comparisons.
pub fn fit_damped_oscillation(times: &[f64], values: &[f64]) -> (f64, f64) {
    assert_eq!(times.len(), values.len());
    // zero crossings
    let mut crossings = Vec::new();
    for k in 1..values.len() {
        let (y0, y1) = (values[k - 1], values[k]);
        if y0 == 0.0 {
            crossings.push(times[k - 1]);
        } else if y0.signum() != y1.signum() && y1 != 0.0 {
            let f = y0 / (y0 - y1);
            crossings.push(times[k - 1] + f * (times[k] - times[k - 1]));
        }
    }
    let omega = if crossings.len() >= 2 {
        let span = crossings.last().unwrap() - crossings.first().unwrap();
        std::f64::consts::PI * (crossings.len() - 1) as f64 / span
    } else {
        0.0
    };
    // local extrema of |y|
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for k in 1..values.len().saturating_sub(1) {
        let a = values[k].abs();
        if a > values[k - 1].abs() && a >= values[k + 1].abs() && a > 1e-14 {
            ts.push(times[k]);
            ys.push(a.ln());
        }
    }
    let kappa = if ts.len() >= 2 {
        -linear_fit(&ts, &ys).0
    } else {
        0.0
    };
    (omega, kappa)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rms_of_identical_series_is_zero() {
        let a = [1.0, -0.5, 0.25];
        assert_eq!(rms_distance(&a, &a), 0.0);
    }

    #[test]
    fn recovers_frequency_and_decay() {
        let omega = 1.37;
        let kappa = 0.21;
        let times: Vec<f64> = (0..400).map(|k| 0.05 * k as f64).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|t| (-kappa * t).exp() * (omega * t).cos())
            .collect();
        let (w, k) = fit_damped_oscillation(&times, &values);
        assert!((w - omega).abs() < 0.02 * omega, "w = {w}");
        assert!((k - kappa).abs() < 0.05 * kappa, "k = {k}");
    }

    #[test]
    fn linear_fit_recovers_line() {
        let xs: Vec<f64> = (0..50).map(|k| k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.7 * x).collect();
        let (slope, icept) = linear_fit(&xs, &ys);
        assert!((slope + 0.7).abs() < 1e-12);
        assert!((icept - 3.0).abs() < 1e-10);
    }
}
