//! Exact sampling of the rank-`N` projection DPP with kernel `E_lambda`, and
//! its rescaled pull-back to a tangent chart.
//!
//! The sampler is the sequential chain-rule algorithm for projection kernels:
//! with `Phi(x)` the feature vector of basis values and `e_1, ..., e_i` an
//! orthonormal basis of the features of the points accepted so far, the next
//! point has density `(|Phi(x)|^2 - sum_j <Phi(x), e_j>^2) / (N - i)` with
//! respect to `vol_g`. Each step draws from that density by rejection from
//! the uniform distribution with envelope `sup_x |Phi(x)|^2`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifold::{ManifoldModel, ManifoldPoint, TangentChart};
use crate::spectrum::SpectralBasis;

const ENVELOPE_SLACK: f64 = 1e-9;
const DEGENERATE_RESIDUAL: f64 = 1e-10;
const ENVELOPE_PROBES: usize = 10_000;
const ENVELOPE_PROBE_SEED: u64 = 0x0005_eede_17e0_fd99;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-replica random stream. The same `(seed, replica)` pair always yields
/// the same sequence, independently of how replicas are scheduled.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    replica: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, replica: u64) -> Self {
        let mixed = splitmix64(seed ^ splitmix64(replica.wrapping_add(0x632b_e59b_d9b4_e019)));
        Self {
            seed,
            replica,
            rng: ChaCha8Rng::seed_from_u64(mixed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replica(&self) -> u64 {
        self.replica
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Manifold,
    Chart,
}

/// One realization of a point process: manifold coordinates (angles or unit
/// 3-vectors) or chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointConfiguration {
    pub space: Space,
    pub points: Vec<Vec<f64>>,
    pub replica: u64,
    pub seed: u64,
    pub lambda: f64,
    pub model: ManifoldModel,
}

impl PointConfiguration {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn manifold_points(&self) -> impl Iterator<Item = ManifoldPoint> + '_ {
        debug_assert_eq!(self.space, Space::Manifold);
        self.points.iter().map(|c| ManifoldPoint::from_raw(c.clone()))
    }
}

/// `sup_x sum_i phi_i(x)^2`. On the model manifolds the diagonal is constant,
/// equal to `N / vol(M)`; this is confirmed on a fixed random probe set.
pub fn sup_feature_norm(basis: &SpectralBasis) -> Result<f64> {
    let model = basis.model();
    let sup = basis.size() as f64 / model.total_volume();
    let mut rng = ChaCha8Rng::seed_from_u64(ENVELOPE_PROBE_SEED);
    let mut features = vec![0.0; basis.size()];
    for _ in 0..ENVELOPE_PROBES {
        let x = model.uniform_sample(&mut rng);
        basis.eval_into(&x, &mut features);
        let diag: f64 = features.iter().map(|f| f * f).sum();
        if diag > sup * (1.0 + ENVELOPE_SLACK) {
            return Err(Error::EnvelopeViolation {
                density: diag,
                envelope: sup,
            });
        }
    }
    Ok(sup)
}

/// Exact sampler for the projection DPP of one spectral basis.
#[derive(Debug, Clone)]
pub struct DppSampler<'a> {
    basis: &'a SpectralBasis,
    envelope: f64,
}

impl<'a> DppSampler<'a> {
    pub fn new(basis: &'a SpectralBasis) -> Result<Self> {
        if basis.size() == 0 {
            return Err(Error::Domain("empty spectral basis".into()));
        }
        Ok(Self {
            basis,
            envelope: sup_feature_norm(basis)?,
        })
    }

    pub fn envelope(&self) -> f64 {
        self.envelope
    }

    pub fn sample(&self, rng: &mut RandomStream) -> Result<PointConfiguration> {
        let model = *self.basis.model();
        let n = self.basis.size();
        let mut ortho: Vec<f64> = Vec::with_capacity(n * n);
        let mut points = Vec::with_capacity(n);
        let mut phi = vec![0.0; n];
        let mut coeffs = vec![0.0; n];
        let ceiling = self.envelope * (1.0 + ENVELOPE_SLACK);

        for i in 0..n {
            let x = loop {
                let x = model.uniform_sample(rng);
                self.basis.eval_into(&x, &mut phi);
                let total: f64 = phi.iter().map(|f| f * f).sum();
                if total > ceiling {
                    return Err(Error::EnvelopeViolation {
                        density: total,
                        envelope: self.envelope,
                    });
                }
                let mut projected = 0.0;
                for (j, c) in coeffs.iter_mut().take(i).enumerate() {
                    *c = dot(&phi, &ortho[j * n..(j + 1) * n]);
                    projected += *c * *c;
                }
                let residual = total - projected;
                if rng.random::<f64>() * self.envelope < residual {
                    break x;
                }
            };

            // Modified Gram-Schmidt with one re-orthogonalization pass.
            for _ in 0..2 {
                for j in 0..i {
                    let e = &ortho[j * n..(j + 1) * n];
                    let c = dot(&phi, e);
                    phi.iter_mut().zip(e).for_each(|(p, ej)| *p -= c * ej);
                }
            }
            let r = dot(&phi, &phi).sqrt();
            if !(r >= DEGENERATE_RESIDUAL) {
                return Err(Error::DegenerateFeature(r));
            }
            ortho.extend(phi.iter().map(|p| p / r));
            points.push(x.coords().to_vec());
        }

        Ok(PointConfiguration {
            space: Space::Manifold,
            points,
            replica: rng.replica(),
            seed: rng.seed(),
            lambda: self.basis.cutoff_lambda(),
            model,
        })
    }

    /// Replicas `0..count` on streams derived from `seed`, returned in replica
    /// order regardless of scheduling.
    pub fn sample_replicas(&self, seed: u64, count: usize) -> Result<Vec<PointConfiguration>> {
        (0..count as u64)
            .into_par_iter()
            .map(|r| self.sample(&mut RandomStream::new(seed, r)))
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One exact draw from the DPP with kernel `E_lambda` and reference `vol_g`.
pub fn sample_dpp(basis: &SpectralBasis, model: &ManifoldModel, rng: &mut RandomStream) -> Result<PointConfiguration> {
    if basis.model() != model {
        return Err(Error::Domain("basis was built for a different manifold".into()));
    }
    DppSampler::new(basis)?.sample(rng)
}

/// Keeps the points within geodesic distance `epsilon` of the chart's base
/// point and maps them to `lambda * exp_p^{-1}(x)`.
pub fn pull_back(config: &PointConfiguration, chart: &TangentChart) -> Result<PointConfiguration> {
    if config.space != Space::Manifold {
        return Err(Error::Domain("pull_back expects a manifold configuration".into()));
    }
    if config.lambda != chart.lambda() || config.model != chart.model() {
        return Err(Error::Domain(format!(
            "configuration at lambda {} on {} does not match chart at lambda {} on {}",
            config.lambda,
            config.model.id(),
            chart.lambda(),
            chart.model().id()
        )));
    }
    let points = config
        .manifold_points()
        .filter_map(|x| chart.from_manifold(&x))
        .collect();
    Ok(PointConfiguration {
        space: Space::Chart,
        points,
        ..config.clone()
    })
}
