//! Geometry of the model manifolds: the circle, flat tori `(R / 2 pi Z)^m`
//! and the round unit 2-sphere.
//!
//! Tangent vectors are always expressed in an orthonormal frame at their base
//! point, so the metric at the base point is the identity matrix and tangent
//! norms are Euclidean norms of the component vector.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|x| = 1` for points of the sphere.
pub const SPHERE_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ManifoldKind {
    Circle,
    FlatTorus(usize),
    Sphere2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ManifoldModel {
    kind: ManifoldKind,
}

/// A point on a model manifold: angles for the circle and tori, an embedded
/// unit vector for the sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldPoint(Vec<f64>);

impl ManifoldPoint {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Wraps already-canonical coordinates without validation.
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        Self(coords)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: ManifoldPoint,
    pub components: Vec<f64>,
}

impl TangentVector {
    pub fn norm(&self) -> f64 {
        norm(&self.components)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Wraps an angle into `[0, 2 pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed nearest-representative difference `b - a` in `(-pi, pi]`.
fn angle_delta(a: f64, b: f64) -> f64 {
    let t = (b - a).rem_euclid(TAU);
    if t > PI {
        t - TAU
    } else {
        t
    }
}

/// Unsigned periodic distance, symmetric in its arguments bit for bit.
fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % TAU;
    d.min(TAU - d)
}

impl std::str::FromStr for ManifoldModel {
    type Err = Error;

    /// Parses the identifiers produced by [`ManifoldModel::id`].
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(Self::circle()),
            "sphere2" => Ok(Self::sphere2()),
            _ => match s.strip_prefix("torus:").map(str::parse::<usize>) {
                Some(Ok(m)) => Self::flat_torus(m),
                _ => Err(Error::Domain(format!(
                    "unknown manifold '{s}' (expected circle, torus:m or sphere2)"
                ))),
            },
        }
    }
}

impl ManifoldModel {
    pub fn circle() -> Self {
        Self {
            kind: ManifoldKind::Circle,
        }
    }

    pub fn flat_torus(m: usize) -> Result<Self> {
        if !(1..=3).contains(&m) {
            return Err(Error::Domain(format!("flat torus dimension must be 1..=3, got {m}")));
        }
        Ok(Self {
            kind: ManifoldKind::FlatTorus(m),
        })
    }

    pub fn sphere2() -> Self {
        Self {
            kind: ManifoldKind::Sphere2,
        }
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        match self.kind {
            ManifoldKind::Circle => 1,
            ManifoldKind::FlatTorus(m) => m,
            ManifoldKind::Sphere2 => 2,
        }
    }

    /// Number of stored coordinates per point.
    pub fn coordinate_len(&self) -> usize {
        match self.kind {
            ManifoldKind::Sphere2 => 3,
            _ => self.dimension(),
        }
    }

    pub fn total_volume(&self) -> f64 {
        match self.kind {
            ManifoldKind::Circle => TAU,
            ManifoldKind::FlatTorus(m) => TAU.powi(m as i32),
            ManifoldKind::Sphere2 => 4.0 * PI,
        }
    }

    pub fn injectivity_radius(&self) -> f64 {
        PI
    }

    fn is_sphere(&self) -> bool {
        self.kind == ManifoldKind::Sphere2
    }

    /// Short identifier used in file outputs: `circle`, `torus:m`, `sphere2`.
    pub fn id(&self) -> String {
        match self.kind {
            ManifoldKind::Circle => "circle".into(),
            ManifoldKind::FlatTorus(m) => format!("torus:{m}"),
            ManifoldKind::Sphere2 => "sphere2".into(),
        }
    }

    /// Validates coordinates and returns a canonical point: angles are
    /// wrapped into `[0, 2 pi)`, sphere vectors are renormalized after the
    /// norm check.
    pub fn point(&self, coords: &[f64]) -> Result<ManifoldPoint> {
        if coords.len() != self.coordinate_len() {
            return Err(Error::DimensionMismatch {
                expected: self.coordinate_len(),
                got: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite coordinate".into()));
        }
        if self.is_sphere() {
            let n = norm(coords);
            if (n - 1.0).abs() > SPHERE_NORM_TOL {
                return Err(Error::Domain(format!("sphere point has norm {n}")));
            }
            Ok(ManifoldPoint(coords.iter().map(|c| c / n).collect()))
        } else {
            Ok(ManifoldPoint(coords.iter().map(|&c| wrap_angle(c)).collect()))
        }
    }

    /// Checks that `x` is a valid point of this model without rewriting it.
    pub fn check_point(&self, x: &ManifoldPoint) -> Result<()> {
        let c = x.coords();
        if c.len() != self.coordinate_len() {
            return Err(Error::DimensionMismatch {
                expected: self.coordinate_len(),
                got: c.len(),
            });
        }
        if self.is_sphere() {
            let n = norm(c);
            if (n - 1.0).abs() > SPHERE_NORM_TOL {
                return Err(Error::Domain(format!("sphere point has norm {n}")));
            }
        } else if c.iter().any(|a| !(0.0..TAU).contains(a)) {
            return Err(Error::Domain("angle outside [0, 2pi)".into()));
        }
        Ok(())
    }

    /// A conventional base point: the zero angle(s) or the north pole.
    pub fn default_point(&self) -> ManifoldPoint {
        if self.is_sphere() {
            ManifoldPoint(vec![0.0, 0.0, 1.0])
        } else {
            ManifoldPoint(vec![0.0; self.dimension()])
        }
    }

    /// The orthonormal frame used for tangent components at `p`, expressed in
    /// ambient (sphere) or coordinate (circle, torus) form.
    ///
    /// On the sphere, `e1` comes from Gram-Schmidt of the least aligned
    /// coordinate axis against `p` (lowest index wins ties) and `e2 = p x e1`.
    pub fn frame(&self, p: &ManifoldPoint) -> Vec<Vec<f64>> {
        if !self.is_sphere() {
            let m = self.dimension();
            return (0..m)
                .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect();
        }
        let c = p.coords();
        let mut axis = 0;
        for i in 1..3 {
            if c[i].abs() < c[axis].abs() {
                axis = i;
            }
        }
        let mut e1 = [0.0; 3];
        e1[axis] = 1.0;
        let proj = c[axis];
        for i in 0..3 {
            e1[i] -= proj * c[i];
        }
        let n = norm(&e1);
        for v in &mut e1 {
            *v /= n;
        }
        let e2 = cross(c, &e1);
        vec![e1.to_vec(), e2.to_vec()]
    }

    pub fn exp_map(&self, v: &TangentVector) -> ManifoldPoint {
        let p = v.base.coords();
        if !self.is_sphere() {
            return ManifoldPoint(p.iter().zip(&v.components).map(|(a, d)| wrap_angle(a + d)).collect());
        }
        let r = v.norm();
        if r == 0.0 {
            return v.base.clone();
        }
        let frame = self.frame(&v.base);
        let (s, c) = r.sin_cos();
        let mut x = [0.0; 3];
        for i in 0..3 {
            let w = v.components[0] * frame[0][i] + v.components[1] * frame[1][i];
            x[i] = c * p[i] + s * w / r;
        }
        let n = norm(&x);
        ManifoldPoint(x.iter().map(|a| a / n).collect())
    }

    /// Inverse of [`exp_map`](Self::exp_map) inside the injectivity radius.
    pub fn log_map(&self, p: &ManifoldPoint, x: &ManifoldPoint) -> Result<TangentVector> {
        let d = self.distance(p, x);
        let inj = self.injectivity_radius();
        if d >= inj {
            return Err(Error::CutLocus {
                distance: d,
                radius: inj,
            });
        }
        let pc = p.coords();
        let xc = x.coords();
        let components = if self.is_sphere() {
            let cos_d = dot(pc, xc);
            let w: Vec<f64> = (0..3).map(|i| xc[i] - cos_d * pc[i]).collect();
            let s = norm(&w);
            if s == 0.0 {
                vec![0.0, 0.0]
            } else {
                let frame = self.frame(p);
                frame.iter().map(|e| dot(&w, e) * d / s).collect()
            }
        } else {
            pc.iter().zip(xc).map(|(&a, &b)| angle_delta(a, b)).collect()
        };
        Ok(TangentVector {
            base: p.clone(),
            components,
        })
    }

    /// Geodesic distance. On the sphere this is `atan2(|x cross y|, x . y)`,
    /// which equals the clamped arccos of the inner product but keeps full
    /// relative accuracy for nearly coincident points.
    pub fn distance(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> f64 {
        let (a, b) = (x.coords(), y.coords());
        if self.is_sphere() {
            let c = cross(a, b);
            norm(&c).atan2(dot(a, b))
        } else {
            a.iter()
                .zip(b)
                .map(|(&s, &t)| {
                    let g = angle_gap(s, t);
                    g * g
                })
                .sum::<f64>()
                .sqrt()
        }
    }

    /// A point distributed according to the normalized Riemannian volume.
    pub fn uniform_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ManifoldPoint {
        if self.is_sphere() {
            loop {
                let v: [f64; 3] = [
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                ];
                let n = norm(&v);
                if n > 1e-12 {
                    return ManifoldPoint(v.iter().map(|c| c / n).collect());
                }
            }
        }
        ManifoldPoint(
            (0..self.dimension())
                .map(|_| wrap_angle(rng.random::<f64>() * TAU))
                .collect(),
        )
    }
}

/// A normal-coordinate chart at `p`, scaled by `lambda` and restricted to
/// the geodesic ball of radius `epsilon`.
///
/// Chart coordinates `u` correspond to the manifold point
/// `exp_p(u / lambda)`. Because the frame is orthonormal, the constant metric
/// on the chart is the identity and its volume is Lebesgue measure.
#[derive(Debug, Clone)]
pub struct TangentChart {
    model: ManifoldModel,
    base: ManifoldPoint,
    frame: Vec<Vec<f64>>,
    epsilon: f64,
    lambda: f64,
}

impl TangentChart {
    pub fn new(model: ManifoldModel, base: ManifoldPoint, epsilon: f64, lambda: f64) -> Result<Self> {
        model.check_point(&base)?;
        if !(epsilon > 0.0 && epsilon < model.injectivity_radius()) {
            return Err(Error::Domain(format!(
                "epsilon must lie in (0, {}), got {epsilon}",
                model.injectivity_radius()
            )));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("chart scale must be positive, got {lambda}")));
        }
        let frame = model.frame(&base);
        Ok(Self {
            model,
            base,
            frame,
            epsilon,
            lambda,
        })
    }

    /// Chart with `epsilon` at half the injectivity radius.
    pub fn with_default_epsilon(model: ManifoldModel, base: ManifoldPoint, lambda: f64) -> Result<Self> {
        Self::new(model, base, model.injectivity_radius() / 2.0, lambda)
    }

    pub fn model(&self) -> ManifoldModel {
        self.model
    }

    pub fn base(&self) -> &ManifoldPoint {
        &self.base
    }

    pub fn frame(&self) -> &[Vec<f64>] {
        &self.frame
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dimension(&self) -> usize {
        self.model.dimension()
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Whether `u / lambda` lies in the open ball of radius `epsilon`.
    pub fn contains(&self, u: &[f64]) -> bool {
        norm(u) / self.lambda < self.epsilon
    }

    /// `exp_p(u / lambda)`.
    pub fn to_manifold(&self, u: &[f64]) -> Result<ManifoldPoint> {
        self.check_len(u)?;
        let v = TangentVector {
            base: self.base.clone(),
            components: u.iter().map(|c| c / self.lambda).collect(),
        };
        Ok(self.model.exp_map(&v))
    }

    /// `lambda * exp_p^{-1}(x)` when `d(p, x) < epsilon`, otherwise `None`.
    pub fn from_manifold(&self, x: &ManifoldPoint) -> Option<Vec<f64>> {
        if self.model.distance(&self.base, x) >= self.epsilon {
            return None;
        }
        let v = self.model.log_map(&self.base, x).ok()?;
        Some(v.components.iter().map(|c| c * self.lambda).collect())
    }

    /// Density of the pulled-back, rescaled volume `lambda^m phi_lambda^* vol_g`
    /// with respect to Lebesgue measure on the chart.
    pub fn volume_density(&self, u: &[f64]) -> f64 {
        match self.model.kind() {
            ManifoldKind::Sphere2 => {
                let r = norm(u) / self.lambda;
                if r == 0.0 {
                    1.0
                } else {
                    r.sin() / r
                }
            }
            _ => 1.0,
        }
    }
}

/// `lambda * d(exp_p(u / lambda), exp_p(v / lambda))`, which tends to `|u - v|`
/// as `lambda` grows.
pub fn scaled_distance(model: &ManifoldModel, chart: &TangentChart, u: &[f64], v: &[f64]) -> Result<f64> {
    let inj = model.injectivity_radius();
    let lambda = chart.lambda();
    if norm(u) / lambda >= inj || norm(v) / lambda >= inj {
        return Err(Error::CutLocus {
            distance: norm(u).max(norm(v)) / lambda,
            radius: inj,
        });
    }
    let x = chart.to_manifold(u)?;
    let y = chart.to_manifold(v)?;
    Ok(lambda * model.distance(&x, &y))
}
