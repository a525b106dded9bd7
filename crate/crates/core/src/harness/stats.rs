//! Small summary statistics.

use crate::error::{domain, Result};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean from the unbiased sample variance.
pub fn std_error(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Ordinary least squares of `ln τ` on `ln ε`; returns `(slope, intercept)`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(domain(format!("need at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0) || !x.is_finite() || !y.is_finite()) {
        return Err(domain("log-log fit needs finite positive coordinates"));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(domain("log-log fit needs at least two distinct x values"));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: [f64; 5] = [0.05, 0.1, 0.2, 0.3, 0.5];

    #[test]
    fn synthetic_power_laws() {
        let fit = |f: fn(f64) -> f64| {
            let pts: Vec<_> = EPS.iter().map(|&e| (e, f(e))).collect();
            fit_loglog_slope(&pts).unwrap()
        };
        let (s, c) = fit(|e| 3.0 / (e * e));
        assert!((s + 2.0).abs() < 1e-9);
        assert!((c - 3f64.ln()).abs() < 1e-9);
        assert!(fit(|_| 42.0).0.abs() < 1e-12);
        assert!((fit(|e| 0.5 / e).0 + 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_points() {
        assert!(fit_loglog_slope(&[(0.1, 1.0), (0.2, 2.0)]).is_err());
        assert!(fit_loglog_slope(&[(0.1, 1.0), (0.2, 0.0), (0.3, 1.0)]).is_err());
        assert!(fit_loglog_slope(&[(-0.1, 1.0), (0.2, 1.0), (0.3, 1.0)]).is_err());
        assert!(fit_loglog_slope(&[(0.1, 1.0), (0.1, 2.0), (0.1, 3.0)]).is_err());
    }

    #[test]
    fn mean_and_error() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert!((std_error(&[1.0, 2.0, 3.0]) - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(mean(&[]).is_nan());
    }
}
