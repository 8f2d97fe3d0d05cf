use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Minimum number of points for which a fitted slope is reported as a rate.
pub const MIN_POINTS_FOR_RATE: usize = 4;

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Half-width of the 95% confidence interval on the slope.
    pub half_width_95: f64,
    pub points: usize,
    /// Whether enough points were used to quote the slope as a rate.
    pub rate_claim: bool,
}

/// Fits `ln y = intercept + slope * ln x`. Needs at least three positive
/// pairs; returns `None` otherwise.
pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> Option<SlopeFit> {
    let pairs: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pairs.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = pairs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let se = (ssr / (nf - 2.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, nf - 2.0)
        .map(|d| d.inverse_cdf(0.975))
        .unwrap_or(f64::INFINITY);
    Some(SlopeFit {
        slope,
        intercept,
        half_width_95: t * se,
        points: n,
        rate_claim: n >= MIN_POINTS_FOR_RATE,
    })
}
