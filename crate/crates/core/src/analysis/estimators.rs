use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{universal_profile, ScaledKernel};
use crate::manifold::{norm, ManifoldKind, ManifoldModel, TangentChart};
use crate::sampler::{PointConfiguration, Space};
use crate::specfun::unit_ball_volume;

use super::quadrature::QuadratureRule;
use super::region::Region;

pub const MIN_INTENSITY_REPLICAS: usize = 100;
pub const MIN_PCF_REPLICAS: usize = 1000;
pub const MIN_LAPLACE_REPLICAS: usize = 1000;

/// A Monte Carlo mean with its standard error `sd / sqrt(replicas)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub replicas: usize,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let nf = n as f64;
        let mean = samples.iter().sum::<f64>() / nf;
        let var = if n > 1 {
            samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (nf - 1.0)
        } else {
            0.0
        };
        Estimate {
            value: mean,
            std_error: (var / nf).sqrt(),
            replicas: n,
        }
    }

    /// Whether `target` lies within `k` standard errors of the estimate.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }

    fn scaled(self, c: f64) -> Self {
        Estimate {
            value: self.value * c,
            std_error: self.std_error * c.abs(),
            ..self
        }
    }
}

fn check_replicas(configs: &[PointConfiguration], minimum: usize, what: &str) -> Result<()> {
    if configs.len() < minimum {
        return Err(Error::Domain(format!(
            "{what} needs at least {minimum} replicas, got {}",
            configs.len()
        )));
    }
    let first = &configs[0];
    if configs
        .iter()
        .any(|c| c.model != first.model || c.lambda != first.lambda || c.space != first.space)
    {
        return Err(Error::Domain(
            "replicas mix manifolds, cutoffs or coordinate spaces".into(),
        ));
    }
    Ok(())
}

/// Partition used by the intensity estimator.
#[derive(Debug, Clone)]
pub enum IntensityBins {
    /// Equal-area cells on the sphere: bands of equal height in `z` times
    /// equal sectors in azimuth.
    Sphere { z_bands: usize, sectors: usize },
    /// Equal boxes in angle coordinates on a circle or torus.
    Angles { per_axis: usize },
    /// Boxes tiling `[-half_width, half_width]^m` in chart coordinates. Cell
    /// volumes are measured with the chart density, so the estimate is a
    /// density against `lambda^m phi_lambda^* vol_g`.
    Chart {
        chart: TangentChart,
        half_width: f64,
        per_axis: usize,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct IntensityBin {
    pub index: usize,
    pub center: Vec<f64>,
    pub volume: f64,
    pub estimate: Estimate,
    /// No replica put a point in this cell.
    pub empty: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntensityReport {
    pub replicas: usize,
    pub bins: Vec<IntensityBin>,
}

struct Cells {
    centers: Vec<Vec<f64>>,
    volumes: Vec<f64>,
}

/// Cell centre and per-axis bounds.
type BoxCell = (Vec<f64>, Vec<(f64, f64)>);

fn box_cells(m: usize, lo: f64, hi: f64, k: usize) -> Vec<BoxCell> {
    let w = (hi - lo) / k as f64;
    let mut cells = vec![(Vec::new(), Vec::new())];
    for _ in 0..m {
        cells = cells
            .into_iter()
            .flat_map(|(c, d): BoxCell| {
                (0..k).map(move |i| {
                    let a = lo + w * i as f64;
                    let mut c = c.clone();
                    let mut d = d.clone();
                    c.push(a + w / 2.0);
                    d.push((a, a + w));
                    (c, d)
                })
            })
            .collect();
    }
    cells
}

fn box_index(x: &[f64], lo: f64, hi: f64, k: usize) -> Option<usize> {
    let mut idx = 0;
    for &c in x {
        if !(c >= lo && c < hi) {
            return None;
        }
        let i = (((c - lo) / (hi - lo) * k as f64) as usize).min(k - 1);
        idx = idx * k + i;
    }
    Some(idx)
}

impl IntensityBins {
    fn validate(&self, model: &ManifoldModel, space: Space) -> Result<()> {
        let ok = match self {
            IntensityBins::Sphere { z_bands, sectors } => {
                *z_bands > 0 && *sectors > 0 && model.kind() == ManifoldKind::Sphere2 && space == Space::Manifold
            }
            IntensityBins::Angles { per_axis } => {
                *per_axis > 0 && model.kind() != ManifoldKind::Sphere2 && space == Space::Manifold
            }
            IntensityBins::Chart {
                chart,
                half_width,
                per_axis,
            } => {
                if chart.model() != *model || space != Space::Chart || *per_axis == 0 || !(*half_width > 0.0) {
                    false
                } else {
                    let corner = half_width * (chart.dimension() as f64).sqrt();
                    if corner / chart.lambda() >= chart.epsilon() {
                        return Err(Error::Domain(format!(
                            "chart bins reach {corner}, beyond the window radius {}",
                            chart.epsilon() * chart.lambda()
                        )));
                    }
                    true
                }
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "bins do not fit {} configurations on {}",
                space_name(space),
                model.id()
            )))
        }
    }

    fn cells(&self, model: &ManifoldModel) -> Result<Cells> {
        Ok(match self {
            IntensityBins::Sphere { z_bands, sectors } => {
                let vol = 4.0 * PI / (*z_bands * *sectors) as f64;
                let mut centers = Vec::new();
                for b in 0..*z_bands {
                    let z = -1.0 + 2.0 * (b as f64 + 0.5) / *z_bands as f64;
                    let s = (1.0 - z * z).sqrt();
                    for k in 0..*sectors {
                        let phi = TAU * (k as f64 + 0.5) / *sectors as f64;
                        centers.push(vec![s * phi.cos(), s * phi.sin(), z]);
                    }
                }
                Cells {
                    volumes: vec![vol; centers.len()],
                    centers,
                }
            }
            IntensityBins::Angles { per_axis } => {
                let m = model.dimension();
                let cells = box_cells(m, 0.0, TAU, *per_axis);
                let vol = (TAU / *per_axis as f64).powi(m as i32);
                Cells {
                    volumes: vec![vol; cells.len()],
                    centers: cells.into_iter().map(|c| c.0).collect(),
                }
            }
            IntensityBins::Chart {
                chart,
                half_width,
                per_axis,
            } => {
                let cells = box_cells(chart.dimension(), -half_width, *half_width, *per_axis);
                let volumes = cells
                    .iter()
                    .map(|(_, d)| Ok(QuadratureRule::gauss_legendre_box(8, d)?.integrate(|u| chart.volume_density(u))))
                    .collect::<Result<Vec<_>>>()?;
                Cells {
                    volumes,
                    centers: cells.into_iter().map(|c| c.0).collect(),
                }
            }
        })
    }

    fn index(&self, x: &[f64]) -> Option<usize> {
        match self {
            IntensityBins::Sphere { z_bands, sectors } => {
                let b = (((x[2] + 1.0) / 2.0 * *z_bands as f64) as usize).min(z_bands - 1);
                let phi = x[1].atan2(x[0]).rem_euclid(TAU);
                let k = ((phi / TAU * *sectors as f64) as usize).min(sectors - 1);
                Some(b * sectors + k)
            }
            IntensityBins::Angles { per_axis } => box_index(x, 0.0, TAU, *per_axis),
            IntensityBins::Chart {
                half_width, per_axis, ..
            } => box_index(x, -half_width, *half_width, *per_axis),
        }
    }
}

fn space_name(space: Space) -> &'static str {
    match space {
        Space::Manifold => "manifold",
        Space::Chart => "chart",
    }
}

/// Per-cell intensity: mean count over replicas divided by the cell volume.
pub fn estimate_intensity(configs: &[PointConfiguration], bins: &IntensityBins) -> Result<IntensityReport> {
    check_replicas(configs, MIN_INTENSITY_REPLICAS, "intensity estimation")?;
    let model = configs[0].model;
    bins.validate(&model, configs[0].space)?;
    let cells = bins.cells(&model)?;
    let nb = cells.volumes.len();
    let mut counts = vec![vec![0.0; configs.len()]; nb];
    for (r, c) in configs.iter().enumerate() {
        for x in &c.points {
            if let Some(b) = bins.index(x) {
                counts[b][r] += 1.0;
            }
        }
    }
    let bins = counts
        .iter()
        .zip(cells.centers)
        .zip(&cells.volumes)
        .enumerate()
        .map(|(index, ((samples, center), &volume))| IntensityBin {
            index,
            center,
            volume,
            estimate: Estimate::from_samples(samples).scaled(1.0 / volume),
            empty: samples.iter().all(|&c| c == 0.0),
        })
        .collect();
    Ok(IntensityReport {
        replicas: configs.len(),
        bins,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PcfBin {
    pub r_lo: f64,
    pub r_hi: f64,
    pub estimate: Estimate,
    /// Bin average of `1 - E(0, r e_1)^2 / (E(0,0) E(r e_1, r e_1))` for the
    /// scaled kernel, when a kernel is supplied.
    pub finite_truth: Option<f64>,
    /// Bin average of `1 - (F(r) / F(0))^2` for the universal kernel.
    pub limit_truth: f64,
    /// Set when the bin extends past half the window side, where the edge
    /// correction is unreliable.
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PcfReport {
    pub replicas: usize,
    pub dimension: usize,
    pub half_width: f64,
    pub intensity: Estimate,
    pub bins: Vec<PcfBin>,
}

const TRUTH_NODES: usize = 16;

fn bin_average<F: Fn(f64) -> Result<f64>>(m: usize, lo: f64, hi: f64, f: F) -> Result<f64> {
    let rule = QuadratureRule::gauss_legendre(TRUTH_NODES, lo, hi)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, w) in rule.nodes().iter().zip(rule.weights()) {
        let r = x[0];
        let weight = w * r.powi(m as i32 - 1);
        num += weight * f(r)?;
        den += weight;
    }
    Ok(num / den)
}

/// Radial pair correlation from chart configurations restricted to the box
/// window `[-half_width, half_width]^m`, with translation edge correction.
pub fn estimate_pcf(
    configs: &[PointConfiguration],
    half_width: f64,
    edges: &[f64],
    truth: Option<&ScaledKernel<'_>>,
) -> Result<PcfReport> {
    check_replicas(configs, MIN_PCF_REPLICAS, "pair correlation")?;
    if configs[0].space != Space::Chart {
        return Err(Error::Domain("pair correlation expects chart configurations".into()));
    }
    if edges.len() < 2 || edges[0] < 0.0 || edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "radial bin edges must be non-negative and increasing".into(),
        ));
    }
    if !(half_width > 0.0) {
        return Err(Error::Domain("window half-width must be positive".into()));
    }
    let model = configs[0].model;
    let m = model.dimension();
    if let Some(k) = truth {
        let chart = k.chart();
        if chart.model() != model || chart.lambda() != configs[0].lambda {
            return Err(Error::Domain("truth kernel does not match the configurations".into()));
        }
        let corner = half_width * (m as f64).sqrt();
        if corner / chart.lambda() >= chart.epsilon() {
            return Err(Error::Domain(format!("window corner {corner} leaves the chart window")));
        }
    }

    let a = half_width;
    let nb = edges.len() - 1;
    let r_max = edges[nb];
    let side = 2.0 * a;
    let window = side.powi(m as i32);
    let mut sums = vec![vec![0.0; configs.len()]; nb];
    let mut counts = vec![0.0; configs.len()];
    for (rep, c) in configs.iter().enumerate() {
        let inside: Vec<&Vec<f64>> = c.points.iter().filter(|u| u.iter().all(|x| x.abs() <= a)).collect();
        counts[rep] = inside.len() as f64;
        for (i, u) in inside.iter().enumerate() {
            for v in &inside[i + 1..] {
                let h: Vec<f64> = u.iter().zip(v.iter()).map(|(x, y)| x - y).collect();
                let r = norm(&h);
                if r < edges[0] || r >= r_max {
                    continue;
                }
                let overlap: f64 = h.iter().map(|hk| side - hk.abs()).product();
                let b = edges.partition_point(|&e| e <= r) - 1;
                // Each unordered pair counts twice.
                sums[b][rep] += 2.0 / overlap;
            }
        }
    }
    let intensity = Estimate::from_samples(&counts).scaled(1.0 / window);
    let rho2 = intensity.value * intensity.value;
    let ball = unit_ball_volume(m)?;
    let f0 = universal_profile(m, 0.0)?;
    let origin = vec![0.0; m];
    let bins = (0..nb)
        .map(|b| {
            let (lo, hi) = (edges[b], edges[b + 1]);
            let shell = ball * (hi.powi(m as i32) - lo.powi(m as i32));
            let estimate = Estimate::from_samples(&sums[b]).scaled(1.0 / (rho2 * shell));
            let limit_truth = bin_average(m, lo, hi, |r| Ok(1.0 - (universal_profile(m, r)? / f0).powi(2)))?;
            let finite_truth = truth
                .map(|k| {
                    let k00 = k.value(&origin, &origin)?;
                    bin_average(m, lo, hi, |r| {
                        let mut e = origin.clone();
                        e[0] = r;
                        let kr = k.value(&origin, &e)?;
                        Ok(1.0 - kr * kr / (k00 * k.value(&e, &e)?))
                    })
                })
                .transpose()?;
            Ok(PcfBin {
                r_lo: lo,
                r_hi: hi,
                estimate,
                finite_truth,
                limit_truth,
                flagged: hi > a,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PcfReport {
        replicas: configs.len(),
        dimension: m,
        half_width: a,
        intensity,
        bins,
    })
}

/// Monte Carlo estimate of `E[prod_x h(x)]`.
pub fn laplace_functional_mc<H: Fn(&[f64]) -> f64>(configs: &[PointConfiguration], h: H) -> Result<Estimate> {
    check_replicas(configs, MIN_LAPLACE_REPLICAS, "Laplace functional")?;
    let samples: Vec<f64> = configs
        .iter()
        .map(|c| c.points.iter().map(|x| h(x)).product())
        .collect();
    Ok(Estimate::from_samples(&samples))
}

/// Monte Carlo estimate of the probability that `region` holds no point.
pub fn empty_prob_mc(configs: &[PointConfiguration], region: &Region) -> Result<Estimate> {
    check_replicas(configs, 1, "gap probability")?;
    if configs[0].space != Space::Manifold {
        return Err(Error::Domain("gap probability expects manifold configurations".into()));
    }
    let model = configs[0].model;
    region.validate(&model)?;
    let samples: Vec<f64> = configs
        .iter()
        .map(|c| {
            if c.points.iter().any(|x| region.contains(&model, x)) {
                0.0
            } else {
                1.0
            }
        })
        .collect();
    Ok(Estimate::from_samples(&samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{pull_back, DppSampler};
    use crate::spectrum::build_basis;

    fn fake(model: ManifoldModel, space: Space, points: Vec<Vec<Vec<f64>>>) -> Vec<PointConfiguration> {
        points
            .into_iter()
            .enumerate()
            .map(|(r, p)| PointConfiguration {
                space,
                points: p,
                replica: r as u64,
                seed: 0,
                lambda: 1.0,
                model,
            })
            .collect()
    }

    #[test]
    fn estimate_statistics() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.value, 2.5);
        assert!((e.std_error - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert!(e.agrees_with(2.0, 1.0));
    }

    #[test]
    fn replica_minimums() {
        let c = ManifoldModel::circle();
        let few = fake(c, Space::Manifold, vec![vec![]; 10]);
        assert!(estimate_intensity(&few, &IntensityBins::Angles { per_axis: 4 }).is_err());
        assert!(laplace_functional_mc(&few, |_| 1.0).is_err());
        assert!(estimate_pcf(&few, 1.0, &[0.0, 1.0], None).is_err());
    }

    #[test]
    fn intensity_counts_cells() {
        let c = ManifoldModel::circle();
        let configs = fake(c, Space::Manifold, vec![vec![vec![0.1], vec![3.5]]; 100]);
        let r = estimate_intensity(&configs, &IntensityBins::Angles { per_axis: 2 }).unwrap();
        assert_eq!(r.bins.len(), 2);
        for b in &r.bins {
            assert!((b.estimate.value - 1.0 / PI).abs() < 1e-15);
            assert_eq!(b.estimate.std_error, 0.0);
        }
        assert!(estimate_intensity(&configs, &IntensityBins::Sphere { z_bands: 2, sectors: 2 }).is_err());
    }

    #[test]
    fn sphere_cells_are_equal_area() {
        let s = ManifoldModel::sphere2();
        let bins = IntensityBins::Sphere { z_bands: 4, sectors: 3 };
        let cells = bins.cells(&s).unwrap();
        assert_eq!(cells.volumes.len(), 12);
        assert!((cells.volumes.iter().sum::<f64>() - 4.0 * PI).abs() < 1e-12);
        for (i, c) in cells.centers.iter().enumerate() {
            assert_eq!(bins.index(c), Some(i));
        }
    }

    #[test]
    fn chart_cell_volumes_use_density() {
        let s = ManifoldModel::sphere2();
        let chart = TangentChart::with_default_epsilon(s, s.default_point(), 5.0).unwrap();
        let bins = IntensityBins::Chart {
            chart: chart.clone(),
            half_width: 2.0,
            per_axis: 2,
        };
        let cells = bins.cells(&s).unwrap();
        let total: f64 = cells.volumes.iter().sum();
        let reference = QuadratureRule::gauss_legendre_box(40, &[(-2.0, 2.0), (-2.0, 2.0)])
            .unwrap()
            .integrate(|u| chart.volume_density(u));
        assert!((total - reference).abs() < 1e-10);
        assert!(total < 16.0);
    }

    #[test]
    fn empty_probability_counts_misses() {
        let c = ManifoldModel::circle();
        let configs = fake(c, Space::Manifold, vec![vec![vec![0.0]], vec![vec![3.0]]]);
        let e = empty_prob_mc(&configs, &Region::centred_arc(0.0, 0.5)).unwrap();
        assert_eq!(e.value, 0.5);
    }

    #[test]
    fn pcf_of_circle_dpp_matches_sinc_truth() {
        let c = ManifoldModel::circle();
        let lambda = 20.0;
        let basis = build_basis(&c, lambda).unwrap();
        let chart = TangentChart::with_default_epsilon(c, c.default_point(), lambda).unwrap();
        let sampler = DppSampler::new(&basis).unwrap();
        let configs: Vec<PointConfiguration> = sampler
            .sample_replicas(3, 2000)
            .unwrap()
            .iter()
            .map(|x| pull_back(x, &chart).unwrap())
            .collect();
        let kernel = ScaledKernel::new(&basis, &chart).unwrap();
        let edges: Vec<f64> = (0..=8).map(|i| 0.5 + 0.5 * i as f64).collect();
        let r = estimate_pcf(&configs, 5.0, &edges, Some(&kernel)).unwrap();
        assert!(
            r.intensity.agrees_with(41.0 / (2.0 * PI * lambda), 4.0),
            "{:?}",
            r.intensity
        );
        for b in &r.bins {
            let truth = b.finite_truth.unwrap();
            assert!(b.estimate.agrees_with(truth, 4.0), "{b:?}");
            assert!(!b.flagged);
        }
    }
}
