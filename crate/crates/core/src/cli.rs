//! Command-line front end. Each subcommand resolves its flags (and an
//! optional `key=value` config file) into an [`ExperimentConfig`], validates
//! it, runs one pipeline and writes CSV or JSON artifacts.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::analysis::{
    chart_grid, empty_prob_mc, epsilon_agreement, estimate_pcf, kernel_convergence, laplace_functional_mc,
    manifold_fredholm_det, weyl_check, Region,
};
use crate::error::{Error, Result};
use crate::kernel::{tabulate, KernelSelector, ScaledKernel};
use crate::manifold::{ManifoldModel, ManifoldPoint, TangentChart};
use crate::sampler::{pull_back, DppSampler, PointConfiguration, Space};
use crate::spectrum::build_basis;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "spectral-dpp",
    version,
    about = "Spectral-projection DPPs on model manifolds and their Bessel-kernel limits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalue counts against the Weyl asymptotic.
    Weyl(WeylArgs),
    /// Tabulate the scaled chart kernel or the universal kernel on a grid.
    Kernel(KernelArgs),
    /// Draw exact samples of the projection DPP.
    Sample(SampleArgs),
    /// Sup distance between scaled and universal kernels over a cutoff sequence.
    Converge(ConvergeArgs),
    /// Gap probability of a region by Fredholm determinant (and optionally Monte Carlo).
    Gap(GapArgs),
    /// Pair correlation of pulled-back samples against finite and limiting truths.
    Pcf(PcfArgs),
    /// Monte Carlo multiplicative functional against its Fredholm determinant.
    Laplace(LaplaceArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// circle, torus:m (m = 1, 2, 3) or sphere2.
    #[arg(long)]
    pub manifold: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Comma-separated cutoffs.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// Base point: angles on a circle or torus, a unit 3-vector on the sphere.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub point: Option<Vec<f64>>,
    /// Chart window radius; defaults to half the injectivity radius.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Primary output; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON report for commands whose primary output is CSV.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value_t = 64)]
    pub quad_order: usize,
    /// Plain-text `key=value` file; flags on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Half-width of the square chart grid.
    #[arg(long, default_value_t = 4.0)]
    pub grid_radius: f64,
    #[arg(long, default_value_t = 9)]
    pub grid_points: usize,
}

#[derive(Debug, Clone, Args)]
pub struct RegionArgs {
    /// Arc of this length centred at the base point (circle, torus:1).
    #[arg(long)]
    pub arc: Option<f64>,
    /// Geodesic cap of this radius centred at the base point (sphere2).
    #[arg(long)]
    pub cap: Option<f64>,
    /// Cube of this side centred at the base point (torus).
    #[arg(long)]
    pub box_side: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct WeylArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelChoice {
    Scaled,
    Universal,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_enum, default_value_t = KernelChoice::Scaled)]
    pub kind: KernelChoice,
    /// Dimension of the universal kernel when no manifold is given.
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub common: Common,
    /// Pull samples back to the scaled chart at the base point.
    #[arg(long)]
    pub chart: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Second window radius to compare against.
    #[arg(long)]
    pub eps_compare: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct GapArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub region: RegionArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PcfArgs {
    #[command(flatten)]
    pub common: Common,
    /// Half-width of the box window in chart coordinates.
    #[arg(long, default_value_t = 6.0)]
    pub window: f64,
    #[arg(long, default_value_t = 0.5)]
    pub bin_width: f64,
    /// Largest radius binned; defaults to the window half-width.
    #[arg(long)]
    pub r_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFunction {
    /// `h = 1 - 1_A`.
    Indicator,
    /// `h = 1 - amplitude * (1 - (d / R)^2)^2` inside the region.
    Bump,
}

#[derive(Debug, Clone, Args)]
pub struct LaplaceArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub region: RegionArgs,
    #[arg(long, value_enum, default_value_t = TestFunction::Indicator)]
    pub h: TestFunction,
    #[arg(long, default_value_t = 0.5)]
    pub amplitude: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSpec {
    pub radius: f64,
    pub points_per_axis: usize,
}

/// Fully resolved inputs of one run, echoed into every JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub manifold: Option<String>,
    pub lambdas: Vec<f64>,
    pub point: Option<Vec<f64>>,
    pub epsilon: Option<f64>,
    pub replicas: usize,
    pub seed: u64,
    pub quad_order: usize,
    pub grid: Option<GridSpec>,
    pub region: Option<Region>,
    pub options: Map<String, Value>,
    pub out: Option<String>,
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'a str,
    config: &'a ExperimentConfig,
    results: Value,
    errors_se: Value,
    slopes: Value,
    runtime_seconds: f64,
}

struct Resolved {
    config: ExperimentConfig,
    model: Option<ManifoldModel>,
    base: Option<ManifoldPoint>,
}

fn config_error<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

impl Common {
    fn model(&self) -> Result<Option<ManifoldModel>> {
        self.manifold
            .as_deref()
            .map(str::parse::<ManifoldModel>)
            .transpose()
            .or_else(|e| config_error(e.to_string()))
    }

    fn single_lambda(&self, allow_zero: bool) -> Result<f64> {
        let lambda = match (&self.lambda, &self.lambdas) {
            (Some(l), None) => *l,
            (None, Some(ls)) if ls.len() == 1 => ls[0],
            (None, None) => return config_error("--lambda is required"),
            _ => return config_error("this command takes a single --lambda"),
        };
        if !lambda.is_finite() || lambda < 0.0 || (!allow_zero && lambda == 0.0) {
            return config_error(format!("invalid cutoff {lambda}"));
        }
        Ok(lambda)
    }

    fn lambda_list(&self) -> Result<Vec<f64>> {
        let ls = match (&self.lambda, &self.lambdas) {
            (Some(l), None) => vec![*l],
            (None, Some(ls)) => ls.clone(),
            (None, None) => return config_error("--lambdas is required"),
            _ => return config_error("give either --lambda or --lambdas"),
        };
        if ls.iter().any(|l| !l.is_finite() || *l <= 0.0) {
            return config_error("cutoffs must be positive");
        }
        if ls.windows(2).any(|w| w[1] <= w[0]) {
            return config_error("cutoffs must be strictly increasing");
        }
        Ok(ls)
    }

    fn base(&self, model: &ManifoldModel) -> Result<ManifoldPoint> {
        match &self.point {
            Some(c) => model.point(c).or_else(|e| config_error(format!("--point: {e}"))),
            None => Ok(model.default_point()),
        }
    }

    fn epsilon(&self, model: &ManifoldModel) -> Result<f64> {
        let eps = self.eps.unwrap_or(model.injectivity_radius() / 2.0);
        if !(eps > 0.0 && eps <= model.injectivity_radius()) {
            return config_error(format!("--eps must lie in (0, {}]", model.injectivity_radius()));
        }
        Ok(eps)
    }

    fn resolve(&self, command: &str, needs_manifold: bool) -> Result<Resolved> {
        if self.quad_order < 2 {
            return config_error("--quad-order must be at least 2");
        }
        if self.threads == Some(0) {
            return config_error("--threads must be positive");
        }
        let model = self.model()?;
        if needs_manifold && model.is_none() {
            return config_error("--manifold is required");
        }
        let base = model.as_ref().map(|m| self.base(m)).transpose()?;
        let config = ExperimentConfig {
            command: command.into(),
            manifold: model.as_ref().map(ManifoldModel::id),
            lambdas: Vec::new(),
            point: base.as_ref().map(|p| p.coords().to_vec()),
            epsilon: None,
            replicas: 0,
            seed: self.seed,
            quad_order: self.quad_order,
            grid: None,
            region: None,
            options: Map::new(),
            out: self.out.as_ref().map(|p| p.display().to_string()),
        };
        Ok(Resolved { config, model, base })
    }
}

impl GridArgs {
    fn spec(&self) -> Result<GridSpec> {
        if !(self.grid_radius >= 0.0) || self.grid_points == 0 {
            return config_error("grid needs a non-negative radius and at least one point per axis");
        }
        Ok(GridSpec {
            radius: self.grid_radius,
            points_per_axis: self.grid_points,
        })
    }
}

impl RegionArgs {
    fn region(&self, model: &ManifoldModel, base: &ManifoldPoint) -> Result<(Region, f64)> {
        let p = base.coords();
        let (region, radius) = match (self.arc, self.cap, self.box_side) {
            (Some(len), None, None) => (Region::centred_arc(p[0], len), len / 2.0),
            (None, Some(r), None) => (
                Region::Cap {
                    center: p.to_vec(),
                    radius: r,
                },
                r,
            ),
            (None, None, Some(s)) => (
                Region::Box {
                    lo: p.iter().map(|c| c - s / 2.0).collect(),
                    hi: p.iter().map(|c| c + s / 2.0).collect(),
                },
                s / 2.0,
            ),
            (None, None, None) => return config_error("a region is required: --arc, --cap or --box-side"),
            _ => return config_error("give only one of --arc, --cap, --box-side"),
        };
        region.validate(model).or_else(|e| config_error(e.to_string()))?;
        Ok((region, radius))
    }
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Weyl(a) => &a.common,
            Command::Kernel(a) => &a.common,
            Command::Sample(a) => &a.common,
            Command::Converge(a) => &a.common,
            Command::Gap(a) => &a.common,
            Command::Pcf(a) => &a.common,
            Command::Laplace(a) => &a.common,
        }
    }
}

fn write_output(path: Option<&PathBuf>, content: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, content)?,
        None => std::io::stdout().lock().write_all(content.as_bytes())?,
    }
    Ok(())
}

fn report_json(
    config: &ExperimentConfig,
    results: Value,
    errors_se: Value,
    slopes: Value,
    start: Instant,
) -> Result<String> {
    let report = Report {
        command: &config.command,
        config,
        results,
        errors_se,
        slopes,
        runtime_seconds: start.elapsed().as_secs_f64(),
    };
    let mut s = serde_json::to_string_pretty(&report)?;
    s.push('\n');
    Ok(s)
}

fn run_weyl(args: &WeylArgs, start: Instant) -> Result<()> {
    let c = &args.common;
    let mut r = c.resolve("weyl", true)?;
    r.config.lambdas = c.lambda_list()?;
    let model = r.model.unwrap();
    let report = weyl_check(&model, &r.config.lambdas)?;
    let mut csv = String::from("lambda,count,leading,ratio,residual,pointwise_residual\n");
    for row in &report.rows {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            num(row.lambda),
            row.count,
            num(row.leading),
            num(row.ratio),
            num(row.residual),
            num(row.pointwise_residual)
        )
        .unwrap();
    }
    write_output(c.out.as_ref(), &csv)?;
    if let Some(path) = &c.report {
        let json = report_json(
            &r.config,
            json!({ "rows": report.rows, "remainder_exponent": report.remainder_exponent, "notices": report.notices }),
            json!({}),
            json!(report.slope.into_iter().collect::<Vec<_>>()),
            start,
        )?;
        fs::write(path, json)?;
    }
    Ok(())
}

fn run_kernel(args: &KernelArgs, start: Instant) -> Result<()> {
    let c = &args.common;
    let mut r = c.resolve("kernel", args.kind == KernelChoice::Scaled)?;
    let grid = args.grid.spec()?;
    r.config.options.insert("kind".into(), json!(args.kind));
    let (m, table) = match args.kind {
        KernelChoice::Universal => {
            let m = match (args.dim, &r.model) {
                (Some(m), _) => m,
                (None, Some(model)) => model.dimension(),
                (None, None) => return config_error("--dim or --manifold is required"),
            };
            if !(1..=8).contains(&m) {
                return config_error("--dim must lie in 1..=8");
            }
            r.config.options.insert("dim".into(), json!(m));
            let pts = chart_grid(m, grid.radius, grid.points_per_axis);
            (m, tabulate(KernelSelector::Universal { m }, &pts, &pts)?)
        }
        KernelChoice::Scaled => {
            let model = r.model.unwrap();
            let lambda = c.single_lambda(false)?;
            let eps = c.epsilon(&model)?;
            r.config.lambdas = vec![lambda];
            r.config.epsilon = Some(eps);
            let m = model.dimension();
            let basis = build_basis(&model, lambda)?;
            let chart = TangentChart::new(model, r.base.clone().unwrap(), eps, lambda)?;
            let pts = chart_grid(m, grid.radius, grid.points_per_axis);
            (
                m,
                tabulate(
                    KernelSelector::Scaled {
                        basis: &basis,
                        chart: &chart,
                    },
                    &pts,
                    &pts,
                )?,
            )
        }
    };
    r.config.grid = Some(grid);
    let mut csv = String::new();
    let header: Vec<String> = (1..=m)
        .map(|i| format!("u{i}"))
        .chain((1..=m).map(|i| format!("v{i}")))
        .collect();
    writeln!(csv, "{},value", header.join(",")).unwrap();
    for (u, row) in table.u_list.iter().zip(&table.values) {
        for (v, value) in table.v_list.iter().zip(row) {
            let fields: Vec<String> = u.iter().chain(v).map(|x| num(*x)).collect();
            writeln!(csv, "{},{}", fields.join(","), num(*value)).unwrap();
        }
    }
    write_output(c.out.as_ref(), &csv)?;
    if let Some(path) = &c.report {
        fs::write(
            path,
            report_json(&r.config, json!({ "meta": table.meta }), json!({}), json!([]), start)?,
        )?;
    }
    Ok(())
}

/// Points CSV with header `replica,index,space,c1,...,ck`.
pub fn points_csv(configs: &[PointConfiguration]) -> String {
    let k = configs
        .iter()
        .flat_map(|c| c.points.iter().map(Vec::len))
        .max()
        .unwrap_or(0);
    let mut csv = String::from("replica,index,space");
    for i in 1..=k {
        write!(csv, ",c{i}").unwrap();
    }
    csv.push('\n');
    for c in configs {
        let space = match c.space {
            Space::Manifold => "manifold",
            Space::Chart => "chart",
        };
        for (i, x) in c.points.iter().enumerate() {
            write!(csv, "{},{},{}", c.replica, i, space).unwrap();
            for j in 0..k {
                csv.push(',');
                if let Some(v) = x.get(j) {
                    csv.push_str(&num(*v));
                }
            }
            csv.push('\n');
        }
    }
    csv
}

fn run_sample(args: &SampleArgs, start: Instant) -> Result<()> {
    let c = &args.common;
    let mut r = c.resolve("sample", true)?;
    let model = r.model.unwrap();
    let lambda = c.single_lambda(!args.chart)?;
    r.config.lambdas = vec![lambda];
    r.config.replicas = c.replicas.unwrap_or(1);
    r.config.options.insert("chart".into(), json!(args.chart));
    let chart = if args.chart {
        let eps = c.epsilon(&model)?;
        r.config.epsilon = Some(eps);
        Some(TangentChart::new(model, r.base.clone().unwrap(), eps, lambda)?)
    } else {
        None
    };
    let basis = build_basis(&model, lambda)?;
    let sampler = DppSampler::new(&basis)?;
    let mut configs = sampler.sample_replicas(c.seed, r.config.replicas)?;
    if let Some(chart) = &chart {
        configs = configs.iter().map(|x| pull_back(x, chart)).collect::<Result<_>>()?;
    }
    write_output(c.out.as_ref(), &points_csv(&configs))?;
    if let Some(path) = &c.report {
        let results = json!({
            "basis_size": basis.size(),
            "envelope": sampler.envelope(),
            "points": configs.iter().map(PointConfiguration::len).collect::<Vec<_>>(),
        });
        fs::write(path, report_json(&r.config, results, json!({}), json!([]), start)?)?;
    }
    Ok(())
}

fn run_converge(args: &ConvergeArgs, start: Instant) -> Result<()> {
    let c = &args.common;
    let mut r = c.resolve("converge", true)?;
    let model = r.model.unwrap();
    let base = r.base.clone().unwrap();
    let eps = c.epsilon(&model)?;
    r.config.lambdas = c.lambda_list()?;
    r.config.epsilon = Some(eps);
    let grid = args.grid.spec()?;
    let pts = chart_grid(model.dimension(), grid.radius, grid.points_per_axis);
    r.config.grid = Some(grid);
    if let Some(e2) = args.eps_compare {
        if !(e2 > 0.0 && e2 <= model.injectivity_radius()) {
            return config_error("--eps-compare out of range");
        }
        r.config.options.insert("eps_compare".into(), json!(e2));
    }
    let report = kernel_convergence(&model, &base, eps, &r.config.lambdas, &pts)?;
    let mut results = json!({
        "rows": report.rows,
        "strictly_decreasing": report.strictly_decreasing(),
        "notices": report.notices,
    });
    if let Some(e2) = args.eps_compare {
        let other = kernel_convergence(&model, &base, e2, &r.config.lambdas, &pts)?;
        results["epsilon_agreement"] = json!(epsilon_agreement(&report, &other)?);
        results["comparison_rows"] = json!(other.rows);
    }
    let slopes = json!(report.slope.into_iter().collect::<Vec<_>>());
    write_output(
        c.out.as_ref(),
        &report_json(&r.config, results, json!({}), slopes, start)?,
    )
}

fn run_gap(args: &GapArgs, start: Instant) -> Result<()> {
    let c = &args.common;
    let mut r = c.resolve("gap", true)?;
    let model = r.model.unwrap();
    let lambda = c.single_lambda(true)?;
    let (region, _) = args.region.region(&model, r.base.as_ref().unwrap())?;
    r.config.lambdas = vec![lambda];
    r.config.replicas = c.replicas.unwrap_or(0);
    r.config.region = Some(region.clone());
    let basis = build_basis(&model, lambda)?;
    let det = manifold_fredholm_det(&basis, &region, |_| 0.0, c.quad_order)?;
    let refined = manifold_fredholm_det(&basis, &region, |_| 0.0, 2 * c.quad_order)?;
    let mut results = json!({
        "fredholm_det": det,
        "fredholm_det_refined": refined,
        "self_convergence": (det - refined).abs(),
    });
    let mut errors = json!({});
    if r.config.replicas > 0 {
        let configs = DppSampler::new(&basis)?.sample_replicas(c.seed, r.config.replicas)?;
        let mc = empty_prob_mc(&configs, &region)?;
        results["monte_carlo"] = json!(mc.value);
        results["difference_in_se"] = json!((mc.value - det).abs() / mc.std_error);
        errors["monte_carlo"] = json!(mc.std_error);
    }
    write_output(
        c.out.as_ref(),
        &report_json(&r.config, results, errors, json!([]), start)?,
    )
}

fn run_pcf(args: &PcfArgs, start: Instant) -> Result<()> {
    let c = &args.common;
    let mut r = c.resolve("pcf", true)?;
    let model = r.model.unwrap();
    let lambda = c.single_lambda(false)?;
    let eps = c.epsilon(&model)?;
    let r_max = args.r_max.unwrap_or(args.window);
    if !(args.bin_width > 0.0) || !(r_max > 0.0) || !(args.window > 0.0) {
        return config_error("--window, --bin-width and --r-max must be positive");
    }
    let nb = (r_max / args.bin_width).round().max(1.0) as usize;
    let edges: Vec<f64> = (0..=nb).map(|i| i as f64 * r_max / nb as f64).collect();
    r.config.lambdas = vec![lambda];
    r.config.epsilon = Some(eps);
    r.config.replicas = c.replicas.unwrap_or(1000);
    r.config.options.insert("window".into(), json!(args.window));
    r.config.options.insert("edges".into(), json!(edges));
    let chart = TangentChart::new(model, r.base.clone().unwrap(), eps, lambda)?;
    let corner = args.window * (model.dimension() as f64).sqrt();
    if corner / lambda >= eps {
        return config_error(format!(
            "window corner {corner} leaves the chart window of radius {}",
            eps * lambda
        ));
    }
    let basis = build_basis(&model, lambda)?;
    let configs = DppSampler::new(&basis)?
        .sample_replicas(c.seed, r.config.replicas)?
        .iter()
        .map(|x| pull_back(x, &chart))
        .collect::<Result<Vec<_>>>()?;
    let kernel = ScaledKernel::new(&basis, &chart)?;
    let report = estimate_pcf(&configs, args.window, &edges, Some(&kernel))?;
    let errors = json!({
        "intensity": report.intensity.std_error,
        "bins": report.bins.iter().map(|b| b.estimate.std_error).collect::<Vec<_>>(),
    });
    write_output(
        c.out.as_ref(),
        &report_json(&r.config, json!(report), errors, json!([]), start)?,
    )
}

fn run_laplace(args: &LaplaceArgs, start: Instant) -> Result<()> {
    let c = &args.common;
    let mut r = c.resolve("laplace", true)?;
    let model = r.model.unwrap();
    let base = r.base.clone().unwrap();
    let lambda = c.single_lambda(true)?;
    let (region, radius) = args.region.region(&model, &base)?;
    if !(0.0..=1.0).contains(&args.amplitude) {
        return config_error("--amplitude must lie in [0, 1]");
    }
    r.config.lambdas = vec![lambda];
    r.config.replicas = c.replicas.unwrap_or(1000);
    r.config.region = Some(region.clone());
    r.config.options.insert("h".into(), json!(args.h));
    if args.h == TestFunction::Bump {
        r.config.options.insert("amplitude".into(), json!(args.amplitude));
    }
    let h = |x: &[f64]| -> f64 {
        match args.h {
            TestFunction::Indicator => {
                if region.contains(&model, x) {
                    0.0
                } else {
                    1.0
                }
            }
            TestFunction::Bump => {
                let d = model.distance(&base, &ManifoldPoint::from_raw(x.to_vec())) / radius;
                if d < 1.0 {
                    1.0 - args.amplitude * (1.0 - d * d).powi(2)
                } else {
                    1.0
                }
            }
        }
    };
    let basis = build_basis(&model, lambda)?;
    let configs = DppSampler::new(&basis)?.sample_replicas(c.seed, r.config.replicas)?;
    let mc = laplace_functional_mc(&configs, h)?;
    let det = manifold_fredholm_det(&basis, &region, h, c.quad_order)?;
    let refined = manifold_fredholm_det(&basis, &region, h, 2 * c.quad_order)?;
    let results = json!({
        "monte_carlo": mc.value,
        "fredholm_det": det,
        "fredholm_det_refined": refined,
        "self_convergence": (det - refined).abs(),
        "difference_in_se": (mc.value - det).abs() / mc.std_error,
    });
    let errors = json!({ "monte_carlo": mc.std_error });
    write_output(
        c.out.as_ref(),
        &report_json(&r.config, results, errors, json!([]), start)?,
    )
}

/// Runs a parsed command on a worker pool sized by `--threads`.
pub fn run(cli: &Cli) -> Result<()> {
    let start = Instant::now();
    let go = || match &cli.command {
        Command::Weyl(a) => run_weyl(a, start),
        Command::Kernel(a) => run_kernel(a, start),
        Command::Sample(a) => run_sample(a, start),
        Command::Converge(a) => run_converge(a, start),
        Command::Gap(a) => run_gap(a, start),
        Command::Pcf(a) => run_pcf(a, start),
        Command::Laplace(a) => run_laplace(a, start),
    };
    match cli.command.common().threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(go),
        None => go(),
    }
}

/// Reads `key=value` lines (blank lines and `#` comments ignored).
pub fn parse_config_file(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .map(str::trim)
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| match l.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().replace('_', "-"), v.trim().to_string())),
            _ => config_error(format!("config line {}: expected key=value", i + 1)),
        })
        .collect()
}

fn find_config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

/// Inserts config-file entries after the subcommand name for every key not
/// already given on the command line.
fn merge_config(argv: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = find_config_path(&argv) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path).or_else(|e| config_error(format!("reading {path}: {e}")))?;
    let given: HashSet<String> = argv
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap().to_string())
        .collect();
    let mut extra = Vec::new();
    for (key, value) in parse_config_file(&text)? {
        if key == "config" || given.contains(&key) {
            continue;
        }
        match value.as_str() {
            "true" => extra.push(format!("--{key}")),
            "false" => {}
            _ => extra.push(format!("--{key}={value}")),
        }
    }
    let at = argv.len().min(2);
    let mut merged = argv[..at].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&argv[at..]);
    Ok(merged)
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 on success, 2 on configuration errors, 3 on failed
/// numerical consistency checks.
pub fn run_command<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let argv = match merge_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_CONFIG
            }
        }
    }
}
