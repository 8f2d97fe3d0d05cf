use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifold::ManifoldModel;
use crate::specfun::unit_ball_volume;
use crate::spectrum::count;

use super::fit::{fit_log_log, SlopeFit};

#[derive(Debug, Clone, Serialize)]
pub struct WeylRow {
    pub lambda: f64,
    pub count: usize,
    /// `lambda^m |B_1| vol(M) / (2 pi)^m`.
    pub leading: f64,
    pub ratio: f64,
    /// `N(lambda) - leading`.
    pub residual: f64,
    /// `E_lambda(x, x) - |B_1| lambda^m / (2 pi)^m`; constant in `x` on the
    /// model manifolds, where the diagonal equals `N / vol(M)`.
    pub pointwise_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeylReport {
    pub manifold: String,
    pub dimension: usize,
    pub rows: Vec<WeylRow>,
    /// Fit of `ln |residual|` against `ln lambda`.
    pub slope: Option<SlopeFit>,
    /// Exponent bounding the remainder, `m - 1`.
    pub remainder_exponent: f64,
    pub notices: Vec<String>,
}

pub fn weyl_leading_term(model: &ManifoldModel, lambda: f64) -> Result<f64> {
    let m = model.dimension();
    let coefficient = unit_ball_volume(m)? * model.total_volume() / (2.0 * PI).powi(m as i32);
    Ok(lambda.powi(m as i32) * coefficient)
}

/// Eigenvalue counts against the Weyl asymptotic for each cutoff.
pub fn weyl_check(model: &ManifoldModel, lambdas: &[f64]) -> Result<WeylReport> {
    if lambdas.is_empty() {
        return Err(Error::Domain("weyl check needs at least one cutoff".into()));
    }
    if lambdas.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::Domain("cutoffs must be positive".into()));
    }
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("cutoffs must be strictly increasing".into()));
    }
    let vol = model.total_volume();
    let rows = lambdas
        .iter()
        .map(|&lambda| {
            let n = count(model, lambda)?;
            let leading = weyl_leading_term(model, lambda)?;
            let residual = n as f64 - leading;
            Ok(WeylRow {
                lambda,
                count: n,
                leading,
                ratio: n as f64 / leading,
                residual,
                pointwise_residual: residual / vol,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut notices = Vec::new();
    let xs: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.residual.abs()).collect();
    let zero = ys.iter().filter(|&&y| y == 0.0).count();
    if zero > 0 {
        notices.push(format!(
            "{zero} cutoff(s) with zero residual excluded from the slope fit"
        ));
    }
    let slope = fit_log_log(&xs, &ys);
    if slope.is_none() {
        notices.push("fewer than 3 usable cutoffs: slope omitted".into());
    }
    Ok(WeylReport {
        manifold: model.id(),
        dimension: model.dimension(),
        rows,
        slope,
        remainder_exponent: model.dimension() as f64 - 1.0,
        notices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples_at_fifty() {
        let r = weyl_check(&ManifoldModel::sphere2(), &[50.0]).unwrap();
        assert_eq!(r.rows[0].count, 2500);
        assert_eq!(r.rows[0].leading, 2500.0);
        assert_eq!(r.rows[0].ratio, 1.0);
        assert!(r.slope.is_none());

        let r = weyl_check(&ManifoldModel::circle(), &[50.0]).unwrap();
        assert_eq!(r.rows[0].count, 101);
        assert!((r.rows[0].leading - 100.0).abs() < 1e-12);
        assert!((r.rows[0].ratio - 1.01).abs() < 1e-12);

        let r = weyl_check(&ManifoldModel::flat_torus(2).unwrap(), &[10.0]).unwrap();
        assert_eq!(r.rows[0].count, 317);
        assert!((r.rows[0].leading - 100.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn ratios_near_one_at_fifty() {
        for model in [
            ManifoldModel::circle(),
            ManifoldModel::flat_torus(2).unwrap(),
            ManifoldModel::sphere2(),
        ] {
            let r = weyl_check(&model, &[50.0]).unwrap();
            assert!((0.98..=1.02).contains(&r.rows[0].ratio));
        }
    }

    #[test]
    fn torus_remainder_slope() {
        let t = ManifoldModel::flat_torus(2).unwrap();
        let lambdas: Vec<f64> = (0..12).map(|i| 10.3 * 1.3f64.powi(i)).collect();
        let r = weyl_check(&t, &lambdas).unwrap();
        let fit = r.slope.unwrap();
        assert!(fit.slope <= r.remainder_exponent + fit.half_width_95, "{fit:?}");
    }

    #[test]
    fn input_validation() {
        let c = ManifoldModel::circle();
        assert!(weyl_check(&c, &[]).is_err());
        assert!(weyl_check(&c, &[2.0, 1.0]).is_err());
        assert!(weyl_check(&c, &[0.0, 1.0]).is_err());
        let r = weyl_check(&c, &[1.5, 2.5]).unwrap();
        assert!(r.slope.is_none());
        assert!(!r.notices.is_empty());
    }
}
