use std::f64::consts::{PI, TAU};

use spectral_dpp::analysis::{
    chart_grid, estimate_intensity, kernel_convergence, laplace_functional_mc, manifold_fredholm_det, IntensityBins,
    Region,
};
use spectral_dpp::kernel::{projection_kernel, universal_profile};
use spectral_dpp::manifold::{ManifoldModel, ManifoldPoint, TangentChart};
use spectral_dpp::sampler::{pull_back, DppSampler, PointConfiguration};
use spectral_dpp::spectrum::build_basis;

fn replicas(model: &ManifoldModel, lambda: f64, seed: u64, count: usize) -> Vec<PointConfiguration> {
    let b = build_basis(model, lambda).unwrap();
    DppSampler::new(&b).unwrap().sample_replicas(seed, count).unwrap()
}

#[test]
fn intensity_matches_diagonal() {
    let cases = [
        (ManifoldModel::circle(), 5.5, IntensityBins::Angles { per_axis: 8 }),
        (
            ManifoldModel::flat_torus(2).unwrap(),
            2.3,
            IntensityBins::Angles { per_axis: 3 },
        ),
        (
            ManifoldModel::sphere2(),
            3.0,
            IntensityBins::Sphere { z_bands: 2, sectors: 4 },
        ),
    ];
    for (model, lambda, bins) in cases {
        let configs = replicas(&model, lambda, 11, 10_000);
        let b = build_basis(&model, lambda).unwrap();
        let p = model.default_point();
        let diagonal = projection_kernel(&b, &p, &p).unwrap();
        assert!((diagonal - b.size() as f64 / model.total_volume()).abs() < 1e-12);
        for bin in estimate_intensity(&configs, &bins).unwrap().bins {
            assert!(!bin.empty);
            assert!(
                bin.estimate.agrees_with(diagonal, 3.0),
                "{}: {bin:?} vs {diagonal}",
                model.id()
            );
        }
    }
}

#[test]
fn chart_intensity_near_origin_approaches_universal_diagonal() {
    let s = ManifoldModel::sphere2();
    let lambda = 12.0;
    let chart = TangentChart::with_default_epsilon(s, s.default_point(), lambda).unwrap();
    let configs: Vec<PointConfiguration> = replicas(&s, lambda, 12, 400)
        .iter()
        .map(|c| pull_back(c, &chart).unwrap())
        .collect();
    let bins = IntensityBins::Chart {
        chart,
        half_width: 3.0,
        per_axis: 2,
    };
    let report = estimate_intensity(&configs, &bins).unwrap();
    // (4 pi)^{-1} / Gamma(2) for m = 2.
    let target = 1.0 / (4.0 * PI);
    assert!((universal_profile(2, 0.0).unwrap() - target).abs() < 1e-15);
    for bin in report.bins {
        assert!(bin.estimate.agrees_with(target, 3.0), "{bin:?}");
    }
}

#[test]
fn close_pairs_are_suppressed() {
    let c = ManifoldModel::circle();
    let lambda = 10.5;
    let configs = replicas(&c, lambda, 13, 5000);
    let delta = 0.05 / lambda;
    let n = configs[0].len() as f64;
    let mut close = 0usize;
    for cfg in &configs {
        let pts: Vec<ManifoldPoint> = cfg.manifold_points().collect();
        for i in 0..pts.len() {
            for j in 0..i {
                if c.distance(&pts[i], &pts[j]) < delta {
                    close += 1;
                }
            }
        }
    }
    let poisson = configs.len() as f64 * n * (n - 1.0) / 2.0 * (2.0 * delta / TAU);
    assert!(
        (close as f64) < poisson / 10.0,
        "{close} close pairs vs Poisson {poisson}"
    );
}

#[test]
fn estimators_ignore_replica_order() {
    let c = ManifoldModel::circle();
    let mut configs = replicas(&c, 3.5, 14, 500);
    let bins = IntensityBins::Angles { per_axis: 5 };
    let forward = estimate_intensity(&configs, &bins).unwrap();
    configs.reverse();
    let backward = estimate_intensity(&configs, &bins).unwrap();
    for (a, b) in forward.bins.iter().zip(&backward.bins) {
        assert!((a.estimate.value - b.estimate.value).abs() < 1e-12);
        assert!((a.estimate.std_error - b.estimate.std_error).abs() < 1e-12);
    }
}

#[test]
fn convergence_decreases_on_every_model() {
    let lambdas = [10.0, 20.0, 40.0, 80.0];
    for model in [
        ManifoldModel::circle(),
        ManifoldModel::flat_torus(2).unwrap(),
        ManifoldModel::sphere2(),
    ] {
        let grid = chart_grid(model.dimension(), 3.0, 7);
        let r = kernel_convergence(&model, &model.default_point(), PI / 2.0, &lambdas, &grid).unwrap();
        assert!(r.strictly_decreasing(), "{}: {:?}", model.id(), r.rows);
    }
}

#[test]
fn sphere_diagonal_entry_is_exact_at_integer_cutoffs() {
    let s = ManifoldModel::sphere2();
    let r = kernel_convergence(&s, &s.default_point(), PI / 2.0, &[10.0, 50.0], &[vec![0.0, 0.0]]).unwrap();
    for row in r.rows {
        assert!(row.sup_difference < 1e-15, "{row:?}");
    }
}

fn bump(center: f64, radius: f64, amplitude: f64) -> impl Fn(&[f64]) -> f64 {
    move |x: &[f64]| {
        let d = (x[0] - center + PI).rem_euclid(TAU) - PI;
        let t = d / radius;
        if t.abs() < 1.0 {
            1.0 - amplitude * (1.0 - t * t).powi(2)
        } else {
            1.0
        }
    }
}

/// `E[prod h(x)]` over samples against `det(1 + (h - 1) E_lambda)` for five
/// test functions.
#[test]
fn multiplicative_functionals_match_fredholm_determinants() {
    let c = ManifoldModel::circle();
    let lambda = 3.5;
    let b = build_basis(&c, lambda).unwrap();
    let configs = replicas(&c, lambda, 15, 100_000);
    let arc = Region::centred_arc(0.0, 0.5);
    type TestFn<'a> = Box<dyn Fn(&[f64]) -> f64 + 'a>;
    let cases: Vec<(&str, Region, TestFn)> = vec![
        (
            "indicator",
            arc.clone(),
            Box::new(|x: &[f64]| if arc.contains(&c, x) { 0.0 } else { 1.0 }),
        ),
        (
            "narrow bump",
            Region::centred_arc(1.0, 0.8),
            Box::new(bump(1.0, 0.4, 0.9)),
        ),
        (
            "wide bump",
            Region::centred_arc(-2.0, 2.4),
            Box::new(bump(-2.0, 1.2, 0.6)),
        ),
        (
            "mixed sign",
            Region::centred_arc(0.5, 2.0),
            Box::new(|x: &[f64]| {
                let t = ((x[0] - 0.5 + PI).rem_euclid(TAU) - PI) / 1.0;
                if t.abs() < 1.0 {
                    1.0 + 0.5 * (3.0 * t).sin() * (1.0 - t * t).powi(2)
                } else {
                    1.0
                }
            }),
        ),
        ("global", Region::Whole, Box::new(|x: &[f64]| 0.9 + 0.1 * x[0].cos())),
    ];
    for (name, region, h) in cases {
        let mc = laplace_functional_mc(&configs, &h).unwrap();
        let det = manifold_fredholm_det(&b, &region, &h, 64).unwrap();
        let refined = manifold_fredholm_det(&b, &region, &h, 128).unwrap();
        assert!((det - refined).abs() < 1e-6, "{name}: {det} vs {refined}");
        assert!(mc.agrees_with(det, 3.0), "{name}: MC {mc:?} vs det {det}");
    }
}

#[test]
fn trivial_functionals() {
    let c = ManifoldModel::circle();
    let configs = replicas(&c, 2.0, 16, 1000);
    let one = laplace_functional_mc(&configs, |_| 1.0).unwrap();
    assert_eq!((one.value, one.std_error), (1.0, 0.0));

    let single = replicas(&c, 0.0, 17, 20_000);
    let a = 1.0;
    let e = spectral_dpp::analysis::empty_prob_mc(&single, &Region::centred_arc(0.0, a)).unwrap();
    assert!(e.agrees_with(1.0 - a / TAU, 3.0), "{e:?}");
    let whole = spectral_dpp::analysis::empty_prob_mc(&single, &Region::Whole).unwrap();
    assert_eq!(whole.value, 0.0);
    let empty = spectral_dpp::analysis::empty_prob_mc(&single, &Region::Empty).unwrap();
    assert_eq!(empty.value, 1.0);
}
