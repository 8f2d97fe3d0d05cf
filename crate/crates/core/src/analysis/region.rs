use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifold::{ManifoldKind, ManifoldModel, ManifoldPoint, TangentVector};

use super::quadrature::QuadratureRule;

/// A bounded region of a model manifold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Region {
    Empty,
    Whole,
    /// `[start, start + length)` on the circle (or a 1-torus), wrapping.
    Arc {
        start: f64,
        length: f64,
    },
    /// Product of arcs `[lo_k, hi_k)` on a torus, each side shorter than `2 pi`.
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// Open geodesic ball on the sphere.
    Cap {
        center: Vec<f64>,
        radius: f64,
    },
}

fn in_arc(x: f64, start: f64, length: f64) -> bool {
    (x - start).rem_euclid(TAU) < length
}

impl Region {
    /// Arc of the given length centred on `center`.
    pub fn centred_arc(center: f64, length: f64) -> Self {
        Region::Arc {
            start: center - length / 2.0,
            length,
        }
    }

    pub fn validate(&self, model: &ManifoldModel) -> Result<()> {
        let bad = |msg: &str| Err(Error::Domain(format!("{msg} for {}", model.id())));
        match (self, model.kind()) {
            (Region::Empty | Region::Whole, _) => Ok(()),
            (Region::Arc { length, .. }, ManifoldKind::Circle | ManifoldKind::FlatTorus(1)) => {
                if *length > 0.0 && *length <= TAU {
                    Ok(())
                } else {
                    bad("arc length must lie in (0, 2pi]")
                }
            }
            (Region::Box { lo, hi }, ManifoldKind::Circle | ManifoldKind::FlatTorus(_)) => {
                if lo.len() != model.dimension() || hi.len() != model.dimension() {
                    return Err(Error::DimensionMismatch {
                        expected: model.dimension(),
                        got: lo.len(),
                    });
                }
                if lo.iter().zip(hi).all(|(a, b)| b > a && b - a <= TAU) {
                    Ok(())
                } else {
                    bad("box sides must lie in (0, 2pi]")
                }
            }
            (Region::Cap { center, radius }, ManifoldKind::Sphere2) => {
                model.point(center)?;
                if *radius > 0.0 && *radius < model.injectivity_radius() {
                    Ok(())
                } else {
                    bad("cap radius must lie in (0, pi)")
                }
            }
            _ => bad("region kind not available"),
        }
    }

    pub fn contains(&self, model: &ManifoldModel, x: &[f64]) -> bool {
        match self {
            Region::Empty => false,
            Region::Whole => true,
            Region::Arc { start, length } => in_arc(x[0], *start, *length),
            Region::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&c, (&a, &b))| in_arc(c, a, b - a)),
            Region::Cap { center, radius } => {
                model.distance(
                    &ManifoldPoint::from_raw(center.clone()),
                    &ManifoldPoint::from_raw(x.to_vec()),
                ) < *radius
            }
        }
    }

    /// Riemannian volume of the region.
    pub fn measure(&self, model: &ManifoldModel) -> f64 {
        match self {
            Region::Empty => 0.0,
            Region::Whole => model.total_volume(),
            Region::Arc { length, .. } => *length,
            Region::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| b - a).product(),
            Region::Cap { radius, .. } => TAU * (1.0 - radius.cos()),
        }
    }

    /// Quadrature nodes on the manifold and weights against `vol_g`.
    /// `order` is the number of nodes per axis.
    pub fn quadrature(&self, model: &ManifoldModel, order: usize) -> Result<(Vec<ManifoldPoint>, Vec<f64>)> {
        self.validate(model)?;
        let from_angles = |rule: QuadratureRule| -> Result<(Vec<ManifoldPoint>, Vec<f64>)> {
            let pts = rule
                .nodes()
                .iter()
                .map(|n| model.point(n))
                .collect::<Result<Vec<_>>>()?;
            Ok((pts, rule.weights().to_vec()))
        };
        match self {
            Region::Empty => Ok((Vec::new(), Vec::new())),
            Region::Arc { start, length } => {
                from_angles(QuadratureRule::gauss_legendre(order, *start, start + length)?)
            }
            Region::Box { lo, hi } => {
                let domain: Vec<(f64, f64)> = lo.iter().copied().zip(hi.iter().copied()).collect();
                from_angles(QuadratureRule::gauss_legendre_box(order, &domain)?)
            }
            Region::Whole => match model.kind() {
                ManifoldKind::Sphere2 => spherical_rule(model, &model.default_point(), std::f64::consts::PI, order),
                _ => from_angles(QuadratureRule::trapezoid_box(
                    order,
                    &vec![(0.0, TAU); model.dimension()],
                )?),
            },
            Region::Cap { center, radius } => spherical_rule(model, &model.point(center)?, *radius, order),
        }
    }
}

/// Geodesic polar rule on a cap: Gauss-Legendre in the radius, periodic
/// trapezoid in the angle, weight `sin r`.
fn spherical_rule(
    model: &ManifoldModel,
    center: &ManifoldPoint,
    radius: f64,
    order: usize,
) -> Result<(Vec<ManifoldPoint>, Vec<f64>)> {
    let radial = QuadratureRule::gauss_legendre(order, 0.0, radius)?;
    let angular = QuadratureRule::trapezoid(order, 0.0, TAU)?;
    let mut pts = Vec::with_capacity(order * order);
    let mut weights = Vec::with_capacity(order * order);
    for (r, wr) in radial.nodes().iter().zip(radial.weights()) {
        for (t, wt) in angular.nodes().iter().zip(angular.weights()) {
            let v = TangentVector {
                base: center.clone(),
                components: vec![r[0] * t[0].cos(), r[0] * t[0].sin()],
            };
            pts.push(model.exp_map(&v));
            weights.push(wr * wt * r[0].sin());
        }
    }
    Ok((pts, weights))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arc_membership_wraps() {
        let c = ManifoldModel::circle();
        let a = Region::centred_arc(0.0, 0.5);
        assert!(a.contains(&c, &[0.1]));
        assert!(a.contains(&c, &[TAU - 0.2]));
        assert!(!a.contains(&c, &[0.3]));
        assert_eq!(a.measure(&c), 0.5);
    }

    #[test]
    fn quadrature_weights_match_measure() {
        let s = ManifoldModel::sphere2();
        let cap = Region::Cap {
            center: vec![0.0, 0.0, 1.0],
            radius: 1.0,
        };
        let (_, w) = cap.quadrature(&s, 16).unwrap();
        assert!((w.iter().sum::<f64>() - cap.measure(&s)).abs() < 1e-13);
        let (_, w) = Region::Whole.quadrature(&s, 16).unwrap();
        assert!((w.iter().sum::<f64>() - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        let t = ManifoldModel::flat_torus(2).unwrap();
        let b = Region::Box {
            lo: vec![0.0, 1.0],
            hi: vec![0.5, 2.0],
        };
        let (_, w) = b.quadrature(&t, 8).unwrap();
        assert!((w.iter().sum::<f64>() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_mismatched_regions() {
        let s = ManifoldModel::sphere2();
        assert!(Region::centred_arc(0.0, 1.0).validate(&s).is_err());
        let c = ManifoldModel::circle();
        assert!(Region::Cap {
            center: vec![0.0, 0.0, 1.0],
            radius: 1.0
        }
        .validate(&c)
        .is_err());
        assert!(Region::centred_arc(0.0, 7.0).validate(&c).is_err());
    }
}
