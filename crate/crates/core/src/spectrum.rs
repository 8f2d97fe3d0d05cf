//! Real orthonormal eigenbases of the Laplacian on the model manifolds,
//! truncated at an inclusive cutoff on the square-root eigenvalue.
//!
//! * circle and flat tori: `1 / sqrt(V)` and `sqrt(2 / V) cos(k . theta)`,
//!   `sqrt(2 / V) sin(k . theta)` for one representative `k` of each `+-k`
//!   pair (first nonzero component positive), eigenvalue `|k|^2`;
//! * sphere: real spherical harmonics of degree `l`, eigenvalue `l (l + 1)`.
//!
//! Entries are ordered by eigenvalue, then by label.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifold::{ManifoldKind, ManifoldModel, ManifoldPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Trig {
    Cos,
    Sin,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum BasisLabel {
    /// Lattice wave `k` (circle and tori). The constant mode is `k = 0`, `Cos`.
    Lattice { k: Vec<i32>, trig: Trig },
    /// Real spherical harmonic of degree `l`; negative orders are the sine
    /// branch, positive the cosine branch.
    Harmonic { degree: u32, order: i32 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisEntry {
    pub sqrt_eigenvalue: f64,
    pub label: BasisLabel,
    /// Exact integer eigenvalue of `-Laplacian`.
    pub eigenvalue: u64,
}

#[derive(Debug, Clone)]
pub struct SpectralBasis {
    model: ManifoldModel,
    cutoff_lambda: f64,
    entries: Vec<BasisEntry>,
    max_degree: u32,
}

/// `floor(lambda^2)` with a relative slack of 1e-12 so that a cutoff computed
/// as `sqrt(n)` in floating point still admits eigenvalue `n`.
fn eigenvalue_bound(lambda: f64) -> Result<u64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("cutoff must be finite and >= 0, got {lambda}")));
    }
    let sq = lambda * lambda;
    Ok((sq * (1.0 + 1e-12)).floor() as u64)
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

fn sphere_max_degree(bound: u64) -> u64 {
    let mut l = isqrt(bound);
    while l * (l + 1) > bound {
        l -= 1;
    }
    l
}

fn count_lattice(m: usize, bound: u64) -> usize {
    if m == 1 {
        return 2 * isqrt(bound) as usize + 1;
    }
    let r = isqrt(bound) as i64;
    (-r..=r).map(|k| count_lattice(m - 1, bound - (k * k) as u64)).sum()
}

/// `N(lambda)`, the number of eigenvalues of `sqrt(-Laplacian)` at most
/// `lambda`, counted with multiplicity.
pub fn count(model: &ManifoldModel, lambda: f64) -> Result<usize> {
    let bound = eigenvalue_bound(lambda)?;
    Ok(match model.kind() {
        ManifoldKind::Circle => count_lattice(1, bound),
        ManifoldKind::FlatTorus(m) => count_lattice(m, bound),
        ManifoldKind::Sphere2 => {
            let l = sphere_max_degree(bound) as usize;
            (l + 1) * (l + 1)
        }
    })
}

fn lattice_vectors(m: usize, bound: u64) -> Vec<Vec<i32>> {
    let r = isqrt(bound) as i32;
    let mut out = vec![vec![]];
    for _ in 0..m {
        let mut next = Vec::new();
        for prefix in &out {
            for k in -r..=r {
                let mut v = prefix.clone();
                v.push(k);
                next.push(v);
            }
        }
        out = next;
    }
    out.retain(|k| {
        let sq: i64 = k.iter().map(|&c| (c as i64) * (c as i64)).sum();
        sq as u64 <= bound && k.iter().find(|&&c| c != 0).is_none_or(|&c| c > 0)
    });
    out
}

pub fn build_basis(model: &ManifoldModel, lambda: f64) -> Result<SpectralBasis> {
    let bound = eigenvalue_bound(lambda)?;
    let mut entries = Vec::new();
    let mut max_degree = 0;
    match model.kind() {
        ManifoldKind::Circle | ManifoldKind::FlatTorus(_) => {
            for k in lattice_vectors(model.dimension(), bound) {
                let eig: u64 = k.iter().map(|&c| (c as i64 * c as i64) as u64).sum();
                let sqrt_eigenvalue = (eig as f64).sqrt();
                let constant = k.iter().all(|&c| c == 0);
                entries.push(BasisEntry {
                    sqrt_eigenvalue,
                    label: BasisLabel::Lattice {
                        k: k.clone(),
                        trig: Trig::Cos,
                    },
                    eigenvalue: eig,
                });
                if !constant {
                    entries.push(BasisEntry {
                        sqrt_eigenvalue,
                        label: BasisLabel::Lattice { k, trig: Trig::Sin },
                        eigenvalue: eig,
                    });
                }
            }
        }
        ManifoldKind::Sphere2 => {
            max_degree = sphere_max_degree(bound) as u32;
            for l in 0..=max_degree {
                let eig = l as u64 * (l as u64 + 1);
                for order in -(l as i32)..=(l as i32) {
                    entries.push(BasisEntry {
                        sqrt_eigenvalue: (eig as f64).sqrt(),
                        label: BasisLabel::Harmonic { degree: l, order },
                        eigenvalue: eig,
                    });
                }
            }
        }
    }
    entries.sort_by(|a, b| a.eigenvalue.cmp(&b.eigenvalue).then_with(|| a.label.cmp(&b.label)));
    Ok(SpectralBasis {
        model: *model,
        cutoff_lambda: lambda,
        entries,
        max_degree,
    })
}

impl SpectralBasis {
    pub fn model(&self) -> &ManifoldModel {
        &self.model
    }

    pub fn cutoff_lambda(&self) -> f64 {
        self.cutoff_lambda
    }

    pub fn entries(&self) -> &[BasisEntry] {
        &self.entries
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    /// `(phi_0(x), ..., phi_{N-1}(x))`.
    pub fn eval_basis(&self, x: &ManifoldPoint) -> Result<Vec<f64>> {
        self.model.check_point(x)?;
        let mut out = vec![0.0; self.size()];
        self.eval_into(x, &mut out);
        Ok(out)
    }

    /// Unchecked evaluation into a caller-provided buffer of length `N`.
    pub(crate) fn eval_into(&self, x: &ManifoldPoint, out: &mut [f64]) {
        let c = x.coords();
        let vol = self.model.total_volume();
        match self.model.kind() {
            ManifoldKind::Sphere2 => self.eval_sphere(c, out),
            _ => {
                let constant = 1.0 / vol.sqrt();
                let wave = (2.0 / vol).sqrt();
                for (slot, e) in out.iter_mut().zip(&self.entries) {
                    let BasisLabel::Lattice { k, trig } = &e.label else {
                        unreachable!()
                    };
                    if e.eigenvalue == 0 {
                        *slot = constant;
                        continue;
                    }
                    let phase: f64 = k.iter().zip(c).map(|(&ki, &t)| ki as f64 * t).sum();
                    *slot = match trig {
                        Trig::Cos => wave * phase.cos(),
                        Trig::Sin => wave * phase.sin(),
                    };
                }
            }
        }
    }

    fn eval_sphere(&self, c: &[f64], out: &mut [f64]) {
        let lmax = self.max_degree as usize;
        let legendre = normalized_legendre(lmax, c[2], c[0].hypot(c[1]));
        let phi = c[1].atan2(c[0]);
        let trig: Vec<(f64, f64)> = (0..=lmax).map(|m| (m as f64 * phi).sin_cos()).collect();
        for (slot, e) in out.iter_mut().zip(&self.entries) {
            let BasisLabel::Harmonic { degree, order } = e.label else {
                unreachable!()
            };
            let l = degree as usize;
            let m = order.unsigned_abs() as usize;
            let p = legendre[l * (l + 1) / 2 + m];
            *slot = match order.signum() {
                0 => p,
                1 => std::f64::consts::SQRT_2 * p * trig[m].1,
                _ => std::f64::consts::SQRT_2 * p * trig[m].0,
            };
        }
    }
}

/// Orthonormalized associated Legendre functions `P̄_l^m(cos theta)`, including
/// the `1 / sqrt(4 pi)` factor, so that `Y_l0 = P̄_l^0` and
/// `Y_l,+-m = sqrt(2) P̄_l^m {cos, sin}(m phi)`. Packed as `l (l + 1) / 2 + m`.
/// No Condon-Shortley phase.
pub fn normalized_legendre(lmax: usize, cos_theta: f64, sin_theta: f64) -> Vec<f64> {
    let mut p = vec![0.0; (lmax + 1) * (lmax + 2) / 2];
    let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;
    p[0] = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            let mf = m as f64;
            p[idx(m, m)] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_theta * p[idx(m - 1, m - 1)];
        }
        if m < lmax {
            p[idx(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * cos_theta * p[idx(m, m)];
        }
        for l in (m + 2)..=lmax {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let lm1 = lf - 1.0;
            let b = ((lm1 * lm1 - mf * mf) / (4.0 * lm1 * lm1 - 1.0)).sqrt();
            p[idx(l, m)] = a * (cos_theta * p[idx(l - 1, m)] - b * p[idx(l - 2, m)]);
        }
    }
    p
}
