//! Correlation kernels: the spectral projection kernel `E_lambda` on the
//! manifold, its rescaled pull-back to a tangent chart, the universal Bessel
//! kernel on `R^m`, and the Fourier transforms of the metric unit ball and
//! unit sphere.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifold::{norm, ManifoldPoint};
use crate::specfun::{f_alpha, BesselOrder};
use crate::spectrum::SpectralBasis;

pub use crate::manifold::TangentChart;

/// `E_lambda(x, y) = sum_i phi_i(x) phi_i(y)`.
pub fn projection_kernel(basis: &SpectralBasis, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64> {
    let fx = basis.eval_basis(x)?;
    let fy = basis.eval_basis(y)?;
    Ok(dot(&fx, &fy))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_scale(basis: &SpectralBasis, chart: &TangentChart) -> Result<()> {
    if basis.cutoff_lambda() != chart.lambda() {
        return Err(Error::Domain(format!(
            "basis cutoff {} differs from chart scale {}",
            basis.cutoff_lambda(),
            chart.lambda()
        )));
    }
    if basis.model() != &chart.model() {
        return Err(Error::Domain("basis and chart live on different manifolds".into()));
    }
    Ok(())
}

/// `lambda^-m E_lambda(exp_p(u / lambda), exp_p(v / lambda))`, zero when either
/// point leaves the open window `|u| / lambda < epsilon`.
///
/// The value is a kernel with respect to `lambda^m phi_lambda^* vol_g`; see
/// [`TangentChart::volume_density`] for its density against Lebesgue measure.
pub fn scaled_kernel(basis: &SpectralBasis, chart: &TangentChart, u: &[f64], v: &[f64]) -> Result<f64> {
    ScaledKernel::new(basis, chart)?.value(u, v)
}

/// Scaled kernel with the basis and chart bound once; features of chart
/// points can be cached by callers that evaluate many pairs.
#[derive(Debug, Clone, Copy)]
pub struct ScaledKernel<'a> {
    basis: &'a SpectralBasis,
    chart: &'a TangentChart,
}

impl<'a> ScaledKernel<'a> {
    pub fn new(basis: &'a SpectralBasis, chart: &'a TangentChart) -> Result<Self> {
        check_scale(basis, chart)?;
        Ok(Self { basis, chart })
    }

    pub fn chart(&self) -> &TangentChart {
        self.chart
    }

    /// `lambda^{-m/2} phi(exp_p(u / lambda))`, or `None` outside the window.
    pub fn features(&self, u: &[f64]) -> Result<Option<Vec<f64>>> {
        let x = self.chart.to_manifold(u)?;
        if !self.chart.contains(u) {
            return Ok(None);
        }
        let scale = self.chart.lambda().powf(-(self.chart.dimension() as f64) / 2.0);
        let mut f = vec![0.0; self.basis.size()];
        self.basis.eval_into(&x, &mut f);
        f.iter_mut().for_each(|c| *c *= scale);
        Ok(Some(f))
    }

    pub fn value(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        match (self.features(u)?, self.features(v)?) {
            (Some(a), Some(b)) => Ok(dot(&a, &b)),
            _ => Ok(0.0),
        }
    }
}

/// `K^(m)(u, v) = (2 pi)^{-m/2} F_{m/2}(|u - v|)`.
pub fn universal_kernel(m: usize, u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != m || v.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: if u.len() != m { u.len() } else { v.len() },
        });
    }
    let order = BesselOrder::for_dimension(m)?;
    let r = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Ok((2.0 * PI).powf(-(m as f64) / 2.0) * f_alpha(order, r)?)
}

/// Universal kernel as a function of the separation `r = |u - v|`.
pub fn universal_profile(m: usize, r: f64) -> Result<f64> {
    let order = BesselOrder::for_dimension(m)?;
    Ok((2.0 * PI).powf(-(m as f64) / 2.0) * f_alpha(order, r)?)
}

/// A symmetric positive-definite matrix, used for the inverse metric
/// `(g^{ij})` at a point in a general coordinate system.
#[derive(Debug, Clone)]
pub struct SpdMatrix {
    matrix: DMatrix<f64>,
}

impl SpdMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotSpd);
        }
        let matrix = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::from_matrix(matrix)
    }

    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::NotSpd);
        }
        let n = matrix.nrows();
        let scale = matrix.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::NotSpd);
                }
            }
        }
        let eig = SymmetricEigen::new(matrix.clone());
        if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::NotSpd);
        }
        Ok(Self { matrix })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            matrix: DMatrix::identity(m, m),
        }
    }

    pub fn order(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Positive-definite square root by eigendecomposition.
    pub fn sqrt(&self) -> DMatrix<f64> {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
        &eig.eigenvectors * d * eig.eigenvectors.transpose()
    }

    /// `|eta|_g = |g_inverse^{1/2} eta|`.
    pub fn dual_norm(&self, eta: &[f64]) -> Result<f64> {
        if eta.len() != self.order() {
            return Err(Error::DimensionMismatch {
                expected: self.order(),
                got: eta.len(),
            });
        }
        let v = self.sqrt() * DVector::from_column_slice(eta);
        Ok(norm(v.as_slice()))
    }
}

/// `(2 pi)^{-m/2} int_{|xi|_g < 1} exp(i <eta, xi>_g) dxi / sqrt(det g)`,
/// evaluated in closed form as `F_{m/2}(|eta|_g)`.
pub fn fourier_ball(g_inverse: &SpdMatrix, eta: &[f64]) -> Result<f64> {
    let m = g_inverse.order();
    let r = g_inverse.dual_norm(eta)?;
    f_alpha(BesselOrder::for_dimension(m)?, r)
}

/// The unit-sphere analogue of [`fourier_ball`]: `F_{(m-2)/2}(|eta|_g)`.
pub fn fourier_sphere(g_inverse: &SpdMatrix, eta: &[f64]) -> Result<f64> {
    let m = g_inverse.order();
    if m < 2 {
        return Err(Error::Domain("sphere transform needs dimension >= 2".into()));
    }
    let r = g_inverse.dual_norm(eta)?;
    f_alpha(BesselOrder::half(m as u32 - 2)?, r)
}

#[derive(Debug, Clone, Copy)]
pub enum KernelSelector<'a> {
    Universal {
        m: usize,
    },
    Scaled {
        basis: &'a SpectralBasis,
        chart: &'a TangentChart,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Scaled,
    Universal,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelTableMeta {
    pub kind: KernelKind,
    pub dimension: usize,
    pub lambda: Option<f64>,
    pub manifold: Option<String>,
    pub base_point: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelTable {
    pub u_list: Vec<Vec<f64>>,
    pub v_list: Vec<Vec<f64>>,
    /// `values[i][j] = K(u_i, v_j)`.
    pub values: Vec<Vec<f64>>,
    pub meta: KernelTableMeta,
}

/// Dense table of kernel values on `u_list x v_list`, assembled row by row.
pub fn tabulate(selector: KernelSelector<'_>, u_list: &[Vec<f64>], v_list: &[Vec<f64>]) -> Result<KernelTable> {
    if u_list.is_empty() || v_list.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let (values, meta) = match selector {
        KernelSelector::Universal { m } => {
            let values = u_list
                .par_iter()
                .map(|u| {
                    v_list
                        .iter()
                        .map(|v| universal_kernel(m, u, v))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let meta = KernelTableMeta {
                kind: KernelKind::Universal,
                dimension: m,
                lambda: None,
                manifold: None,
                base_point: None,
            };
            (values, meta)
        }
        KernelSelector::Scaled { basis, chart } => {
            let kernel = ScaledKernel::new(basis, chart)?;
            let fu = u_list
                .par_iter()
                .map(|u| kernel.features(u))
                .collect::<Result<Vec<_>>>()?;
            let fv = v_list
                .par_iter()
                .map(|v| kernel.features(v))
                .collect::<Result<Vec<_>>>()?;
            let values = fu
                .par_iter()
                .map(|a| {
                    fv.iter()
                        .map(|b| match (a, b) {
                            (Some(a), Some(b)) => dot(a, b),
                            _ => 0.0,
                        })
                        .collect()
                })
                .collect();
            let meta = KernelTableMeta {
                kind: KernelKind::Scaled,
                dimension: chart.dimension(),
                lambda: Some(chart.lambda()),
                manifold: Some(chart.model().id()),
                base_point: Some(chart.base().coords().to_vec()),
            };
            (values, meta)
        }
    };
    Ok(KernelTable {
        u_list: u_list.to_vec(),
        v_list: v_list.to_vec(),
        values,
        meta,
    })
}
