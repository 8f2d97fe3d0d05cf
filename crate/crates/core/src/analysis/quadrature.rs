use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QuadratureKind {
    GaussLegendre,
    /// Periodic trapezoid: `n` equispaced nodes, left endpoint included.
    Trapezoid,
}

/// A tensor-product rule on an axis-aligned box.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    kind: QuadratureKind,
    order: usize,
    domain: Vec<(f64, f64)>,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre_reference(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        // Recompute the derivative at the converged node.
        let (mut p0, mut p1) = (1.0, z);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        if n > 1 {
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

impl QuadratureRule {
    pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<Self> {
        Self::gauss_legendre_box(n, &[(a, b)])
    }

    pub fn gauss_legendre_box(n: usize, domain: &[(f64, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("quadrature order must be positive".into()));
        }
        let (x, w) = gauss_legendre_reference(n);
        let axes: Vec<(Vec<f64>, Vec<f64>)> = domain
            .iter()
            .map(|&(a, b)| {
                let half = 0.5 * (b - a);
                let mid = 0.5 * (a + b);
                (
                    x.iter().map(|t| mid + half * t).collect(),
                    w.iter().map(|wi| wi * half).collect(),
                )
            })
            .collect();
        Self::tensor(QuadratureKind::GaussLegendre, n, domain, axes)
    }

    pub fn trapezoid(n: usize, a: f64, b: f64) -> Result<Self> {
        Self::trapezoid_box(n, &[(a, b)])
    }

    pub fn trapezoid_box(n: usize, domain: &[(f64, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("quadrature order must be positive".into()));
        }
        let axes = domain
            .iter()
            .map(|&(a, b)| {
                let h = (b - a) / n as f64;
                ((0..n).map(|i| a + h * i as f64).collect(), vec![h; n])
            })
            .collect();
        Self::tensor(QuadratureKind::Trapezoid, n, domain, axes)
    }

    fn tensor(
        kind: QuadratureKind,
        order: usize,
        domain: &[(f64, f64)],
        axes: Vec<(Vec<f64>, Vec<f64>)>,
    ) -> Result<Self> {
        if domain.is_empty() {
            return Err(Error::Domain("quadrature domain has no axes".into()));
        }
        if domain
            .iter()
            .any(|&(a, b)| !(a < b) || !a.is_finite() || !b.is_finite())
        {
            return Err(Error::Domain("quadrature domain must be a nonempty finite box".into()));
        }
        let mut nodes = vec![Vec::new()];
        let mut weights = vec![1.0];
        for (xs, ws) in &axes {
            let mut next_nodes = Vec::with_capacity(nodes.len() * xs.len());
            let mut next_weights = Vec::with_capacity(nodes.len() * xs.len());
            for (node, w) in nodes.iter().zip(&weights) {
                for (x, wx) in xs.iter().zip(ws) {
                    let mut n = node.clone();
                    n.push(*x);
                    next_nodes.push(n);
                    next_weights.push(w * wx);
                }
            }
            nodes = next_nodes;
            weights = next_weights;
        }
        Ok(Self {
            kind,
            order,
            domain: domain.to_vec(),
            nodes,
            weights,
        })
    }

    pub fn kind(&self) -> QuadratureKind {
        self.kind
    }

    /// Nodes per axis.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn domain_volume(&self) -> f64 {
        self.domain.iter().map(|(a, b)| b - a).product()
    }

    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }
}
