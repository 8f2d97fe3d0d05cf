//! Correlation functions and Fredholm determinants `det(1 + (h - 1) K 1_A)`
//! by the Nystrom method.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::manifold::ManifoldModel;
use crate::spectrum::SpectralBasis;

use super::quadrature::QuadratureRule;
use super::region::Region;

/// `rho_n(x_1, ..., x_n) = det(K(x_i, x_j))`.
pub fn correlation_fn<P, K>(kernel: K, points: &[P]) -> Result<f64>
where
    K: Fn(&P, &P) -> f64,
{
    let n = points.len();
    if n == 0 {
        return Err(Error::Domain("correlation function needs at least one point".into()));
    }
    let m = DMatrix::from_fn(n, n, |i, j| kernel(&points[i], &points[j]));
    Ok(m.determinant())
}

/// Nystrom determinant `det(I + diag(h - 1) W^{1/2} K W^{1/2})` for a kernel
/// matrix already evaluated on the nodes.
pub fn nystrom_det(kernel_matrix: &DMatrix<f64>, h_minus_one: &[f64], weights: &[f64]) -> f64 {
    let n = weights.len();
    if n == 0 {
        return 1.0;
    }
    let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta + h_minus_one[i] * sw[i] * kernel_matrix[(i, j)] * sw[j]
    });
    m.determinant()
}

fn check_order(order: usize) -> Result<()> {
    if order < 2 {
        return Err(Error::Domain(format!(
            "quadrature order must be at least 2, got {order}"
        )));
    }
    Ok(())
}

/// `det(1 + (h - 1) K 1_A)` with `A` the domain of `quad`; `h - 1` must vanish
/// outside it.
pub fn fredholm_det<K, H>(kernel: K, h: H, quad: &QuadratureRule) -> Result<f64>
where
    K: Fn(&[f64], &[f64]) -> f64 + Sync,
    H: Fn(&[f64]) -> f64,
{
    check_order(quad.order())?;
    let nodes = quad.nodes();
    let n = nodes.len();
    let rows: Vec<Vec<f64>> = nodes
        .par_iter()
        .map(|x| nodes.iter().map(|y| kernel(x, y)).collect())
        .collect();
    let k = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let hm1: Vec<f64> = nodes.iter().map(|x| h(x) - 1.0).collect();
    Ok(nystrom_det(&k, &hm1, quad.weights()))
}

/// Probability of no points in the domain of `quad`: the case `h = 0`.
pub fn gap_probability<K>(kernel: K, quad: &QuadratureRule) -> Result<f64>
where
    K: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    fredholm_det(kernel, |_| 0.0, quad)
}

/// Fredholm determinant of the projection kernel `E_lambda` on a manifold
/// region, with the kernel matrix assembled from basis features.
pub fn manifold_fredholm_det<H>(basis: &SpectralBasis, region: &Region, h: H, order: usize) -> Result<f64>
where
    H: Fn(&[f64]) -> f64,
{
    check_order(order)?;
    let model: &ManifoldModel = basis.model();
    let (nodes, weights) = region.quadrature(model, order)?;
    let features = nodes
        .par_iter()
        .map(|x| basis.eval_basis(x))
        .collect::<Result<Vec<_>>>()?;
    let n = nodes.len();
    let f = DMatrix::from_fn(n, basis.size(), |i, j| features[i][j]);
    let k = &f * f.transpose();
    let hm1: Vec<f64> = nodes.iter().map(|x| h(x.coords()) - 1.0).collect();
    Ok(nystrom_det(&k, &hm1, &weights))
}
