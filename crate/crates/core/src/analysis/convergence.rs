use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{universal_kernel, ScaledKernel};
use crate::manifold::{norm, ManifoldModel, ManifoldPoint, TangentChart};
use crate::spectrum::build_basis;

use super::fit::{fit_log_log, SlopeFit};

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub lambda: f64,
    pub basis_size: usize,
    /// `max |scaled - universal|` over all grid pairs.
    pub sup_difference: f64,
    pub argmax_u: Vec<f64>,
    pub argmax_v: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub manifold: String,
    pub base_point: Vec<f64>,
    pub epsilon: f64,
    pub grid_points: usize,
    pub rows: Vec<ConvergenceRow>,
    pub slope: Option<SlopeFit>,
    pub notices: Vec<String>,
}

impl ConvergenceReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].sup_difference < w[0].sup_difference)
    }
}

/// Regular grid `[-radius, radius]^m` with `per_axis` nodes per axis.
pub fn chart_grid(m: usize, radius: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = if per_axis <= 1 {
        vec![0.0]
    } else {
        (0..per_axis)
            .map(|i| -radius + 2.0 * radius * i as f64 / (per_axis - 1) as f64)
            .collect()
    };
    let mut grid = vec![Vec::new()];
    for _ in 0..m {
        grid = grid
            .into_iter()
            .flat_map(|g| {
                axis.iter().map(move |&a| {
                    let mut next = g.clone();
                    next.push(a);
                    next
                })
            })
            .collect();
    }
    grid
}

/// Sup distance between the scaled chart kernel and the universal kernel on
/// `grid x grid`, for each cutoff.
pub fn kernel_convergence(
    model: &ManifoldModel,
    base: &ManifoldPoint,
    epsilon: f64,
    lambdas: &[f64],
    grid: &[Vec<f64>],
) -> Result<ConvergenceReport> {
    let m = model.dimension();
    model.check_point(base)?;
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if lambdas.is_empty() || lambdas.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::Domain("cutoffs must be positive".into()));
    }
    if let Some(u) = grid.iter().find(|u| u.len() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: u.len(),
        });
    }
    let reach = grid.iter().map(|u| norm(u)).fold(0.0, f64::max);
    let smallest = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
    if reach / smallest >= epsilon {
        return Err(Error::Domain(format!(
            "grid radius {reach} leaves the chart window at lambda = {smallest} (epsilon = {epsilon})"
        )));
    }

    let n = grid.len();
    let universal: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| universal_kernel(m, &grid[k / n], &grid[k % n]))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let basis = build_basis(model, lambda)?;
        let chart = TangentChart::new(*model, base.clone(), epsilon, lambda)?;
        let kernel = ScaledKernel::new(&basis, &chart)?;
        let features: Vec<Vec<f64>> = grid
            .par_iter()
            .map(|u| kernel.features(u).map(|f| f.expect("grid checked inside the window")))
            .collect::<Result<_>>()?;
        let (sup, arg) = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut best = (0.0f64, (i, i));
                for j in i..n {
                    let e: f64 = features[i].iter().zip(&features[j]).map(|(a, b)| a * b).sum();
                    let d = (e - universal[i * n + j]).abs();
                    if d > best.0 {
                        best = (d, (i, j));
                    }
                }
                best
            })
            .reduce(
                || (0.0, (0, 0)),
                |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
            );
        rows.push(ConvergenceRow {
            lambda,
            basis_size: basis.size(),
            sup_difference: sup,
            argmax_u: grid[arg.0].clone(),
            argmax_v: grid[arg.1].clone(),
        });
    }

    let mut notices = Vec::new();
    let xs: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.sup_difference).collect();
    let slope = fit_log_log(&xs, &ys);
    match &slope {
        None => notices.push("fewer than 3 usable cutoffs: slope omitted".into()),
        Some(f) if !f.rate_claim => notices.push("fewer than 4 cutoffs: slope is descriptive only".into()),
        _ => {}
    }
    Ok(ConvergenceReport {
        manifold: model.id(),
        base_point: base.coords().to_vec(),
        epsilon,
        grid_points: n,
        rows,
        slope,
        notices,
    })
}

/// Largest difference between the sup distances of two runs over the same
/// cutoffs. The scaled kernel only depends on the window through the
/// indicator, so this is zero whenever both windows contain the grid.
pub fn epsilon_agreement(a: &ConvergenceReport, b: &ConvergenceReport) -> Result<f64> {
    if a.rows.len() != b.rows.len() || a.rows.iter().zip(&b.rows).any(|(x, y)| x.lambda != y.lambda) {
        return Err(Error::Domain("reports cover different cutoffs".into()));
    }
    Ok(a.rows
        .iter()
        .zip(&b.rows)
        .map(|(x, y)| (x.sup_difference - y.sup_difference).abs())
        .fold(0.0, f64::max))
}
