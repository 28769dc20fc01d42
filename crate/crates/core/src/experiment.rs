//! JSON-configured campaigns that write a result bundle: `manifest.json`,
//! `results.csv` and, where relevant, field files. Output depends only on the
//! configuration and seed.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fbm::{fbm_covariance, CholeskySampler, FbmPath, TimeGrid, VolterraSampler};
use crate::hardy::verify_hardy_estimate;
use crate::spectral::kernel::{decay_bound_certificate, eval_ktheta, kappa_m, smoothing_constant};
use crate::spectral::smoothing::verify_smoothing;
use crate::spectral::SpatialGrid;
use crate::solver::{picard_solve, InitialCondition, SolverConfig};
use crate::wellposedness::{
    check_admissible, check_admissible_exact, format_ratio, r_inverse_bounds, Admissibility, ExactParams, ModelParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Campaign {
    CheckParams,
    SampleFbm,
    Simulate,
    VerifyKernel,
    VerifySmoothing,
    VerifyHardy,
    McCovariance,
    Sweep,
}

impl Campaign {
    pub const ALL: [Campaign; 8] = [
        Campaign::CheckParams,
        Campaign::SampleFbm,
        Campaign::Simulate,
        Campaign::VerifyKernel,
        Campaign::VerifySmoothing,
        Campaign::VerifyHardy,
        Campaign::McCovariance,
        Campaign::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Campaign::CheckParams => "check-params",
            Campaign::SampleFbm => "sample-fbm",
            Campaign::Simulate => "simulate",
            Campaign::VerifyKernel => "verify-kernel",
            Campaign::VerifySmoothing => "verify-smoothing",
            Campaign::VerifyHardy => "verify-hardy",
            Campaign::McCovariance => "mc-covariance",
            Campaign::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Campaign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Campaign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Campaign::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| invalid(format!("unknown campaign '{s}'")))
    }
}

/// A Lebesgue exponent: a number, or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExponentRepr", into = "ExponentRepr")]
pub struct Exponent(pub f64);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExponentRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<ExponentRepr> for Exponent {
    type Error = String;
    fn try_from(r: ExponentRepr) -> std::result::Result<Self, String> {
        match r {
            ExponentRepr::Number(v) => Ok(Exponent(v)),
            ExponentRepr::Text(s) if s == "inf" || s == "infinity" => Ok(Exponent(f64::INFINITY)),
            ExponentRepr::Text(s) => Err(format!("exponent must be a number or \"inf\", got \"{s}\"")),
        }
    }
}

impl From<Exponent> for ExponentRepr {
    fn from(e: Exponent) -> Self {
        if e.0.is_infinite() {
            ExponentRepr::Text("inf".into())
        } else {
            ExponentRepr::Number(e.0)
        }
    }
}

fn example_params() -> ModelParams {
    ModelParams { dim: 1, theta: 2.0, gamma: 0.5, p: 2.0, q: 6.0, hurst: 0.75, mu: 1.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub half_period: f64,
    pub points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { half_period: 16.0, points: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    pub horizon: f64,
    pub steps: usize,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { horizon: 1.0, steps: 128 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    /// Defaults to `n / 4`.
    pub mode_cutoff: Option<usize>,
    pub seed: u64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { mode_cutoff: None, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub picard_tol: f64,
    pub max_picard_iters: usize,
    pub initial: InitialCondition,
    pub hardy_constant: Option<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            picard_tol: 1e-10,
            max_picard_iters: 50,
            initial: InitialCondition::Gaussian { amplitude: 0.1, width: 1.0 },
            hardy_constant: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Cholesky,
    Volterra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepLattice {
    pub gamma: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub hurst: Vec<f64>,
}

impl Default for SweepLattice {
    fn default() -> Self {
        Self {
            gamma: vec![0.25, 0.5, 0.75],
            p: vec![1.5, 2.0, 3.0],
            q: vec![3.0, 6.0, 12.0],
            hurst: vec![0.6, 0.75, 0.9],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignSection {
    pub trials: usize,
    pub t_list: Vec<f64>,
    pub exponent_pairs: Vec<[Exponent; 2]>,
    pub replicas: usize,
    pub sampler: SamplerKind,
    /// Largest `|x|` for kernel tables and the decay certificate.
    pub kernel_radius: f64,
    pub kernel_points: usize,
    pub sweep: SweepLattice,
}

impl Default for CampaignSection {
    fn default() -> Self {
        Self {
            trials: 100,
            t_list: vec![0.25, 0.5, 1.0],
            exponent_pairs: vec![
                [Exponent(1.0), Exponent(2.0)],
                [Exponent(2.0), Exponent(4.0)],
                [Exponent(2.0), Exponent(f64::INFINITY)],
            ],
            replicas: 1000,
            sampler: SamplerKind::Cholesky,
            kernel_radius: 10.0,
            kernel_points: 101,
            sweep: SweepLattice::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub grid: GridSection,
    pub time: TimeSection,
    pub noise: NoiseSection,
    pub solver: SolverSection,
    pub campaign: CampaignSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            params: example_params(),
            grid: GridSection::default(),
            time: TimeSection::default(),
            noise: NoiseSection::default(),
            solver: SolverSection::default(),
            campaign: CampaignSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Self::from_json(&text)
    }

    pub fn spatial_grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.params.dim, self.grid.half_period, self.grid.points)
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.time.horizon, self.time.steps)
    }

    pub fn solver_config(&self, override_admissibility: bool) -> Result<SolverConfig> {
        let grid = self.spatial_grid()?;
        Ok(SolverConfig {
            params: self.params,
            grid,
            tgrid: self.time_grid()?,
            mode_cutoff: self.noise.mode_cutoff.unwrap_or(grid.points() / 4),
            seed: self.noise.seed,
            picard_tol: self.solver.picard_tol,
            max_picard_iters: self.solver.max_picard_iters,
            initial: self.solver.initial.clone(),
            hardy_constant: self.solver.hardy_constant,
            override_admissibility,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub campaign: Campaign,
    pub package: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub override_admissibility: bool,
    pub config: ExperimentConfig,
    pub files: Vec<String>,
    pub summary: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub override_admissibility: bool,
}

/// Result of a campaign: the CSV table, a JSON summary, and extra files
/// written into the bundle.
struct Output {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    summary: serde_json::Value,
    files: Vec<String>,
}

impl Output {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            summary: serde_json::Value::Null,
            files: Vec::new(),
        }
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }
}

fn num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

/// Runs `campaign` and writes its bundle into `out`. Returns the manifest.
pub fn run_experiment(campaign: Campaign, config: &ExperimentConfig, out: &Path, opts: &RunOptions) -> Result<Manifest> {
    let mut config = config.clone();
    if let Some(seed) = opts.seed {
        config.noise.seed = seed;
    }
    std::fs::create_dir_all(out)?;
    let result = match campaign {
        Campaign::CheckParams => check_params(&config)?,
        Campaign::SampleFbm => sample_fbm(&config)?,
        Campaign::Simulate => simulate(&config, out, opts.override_admissibility)?,
        Campaign::VerifyKernel => verify_kernel(&config)?,
        Campaign::VerifySmoothing => smoothing(&config)?,
        Campaign::VerifyHardy => hardy(&config)?,
        Campaign::McCovariance => mc_covariance(&config)?,
        Campaign::Sweep => sweep(&config)?,
    };
    let results = out.join("results.csv");
    let mut w = csv::Writer::from_path(&results).map_err(csv_err)?;
    w.write_record(&result.header).map_err(csv_err)?;
    for r in &result.rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    let mut files = vec!["results.csv".to_string()];
    files.extend(result.files);
    let manifest = Manifest {
        campaign,
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        seed: config.noise.seed,
        override_admissibility: opts.override_admissibility,
        config,
        files,
        summary: result.summary,
    };
    std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}

fn check_params(cfg: &ExperimentConfig) -> Result<Output> {
    let params = &cfg.params;
    let mut out = Output::new(&["quantity", "value", "exact"]);
    let verdict = check_admissible(params);
    let exact = ExactParams::from_params(params).ok().map(|x| check_admissible_exact(&x));
    out.row(vec!["status".into(), if verdict.is_accepted() { "accepted" } else { "rejected" }.into(), String::new()]);
    for reason in verdict.reasons() {
        out.row(vec!["violated".into(), reason.clone(), String::new()]);
    }
    if let Admissibility::Accepted { exponents: e } = &verdict {
        let ex = exact.as_ref().and_then(|v| v.exponents());
        let rows: [(&str, f64, Option<&num_rational::BigRational>); 9] = [
            ("r", e.r, ex.map(|x| &x.r)),
            ("sigma", e.sigma, ex.map(|x| &x.sigma)),
            ("a", e.a, ex.map(|x| &x.a)),
            ("b", e.b, ex.map(|x| &x.b)),
            ("a+b-1", e.a_plus_b_minus_1, ex.map(|x| &x.a_plus_b_minus_1)),
            ("a-p*sigma", e.a_minus_p_sigma, ex.map(|x| &x.a_minus_p_sigma)),
            ("a-sigma", e.a_minus_sigma, ex.map(|x| &x.a_minus_sigma)),
            ("a+sigma", e.a_plus_sigma, ex.map(|x| &x.a_plus_sigma)),
            ("third_condition", e.third_condition, ex.map(|x| &x.third_condition)),
        ];
        for (name, v, x) in rows {
            out.row(vec![name.into(), num(v), x.map(format_ratio).unwrap_or_default()]);
        }
        let (lo, hi) = r_inverse_bounds(params);
        let inside = lo < 1.0 / e.r && 1.0 / e.r < hi;
        out.row(vec!["r_bounds_hold".into(), inside.to_string(), String::new()]);
    }
    out.summary = serde_json::to_value(&verdict)?;
    Ok(out)
}

fn fbm_sampler(cfg: &ExperimentConfig) -> Result<Box<dyn Fn(u64, u64) -> FbmPath + Sync>> {
    let tg = cfg.time_grid()?;
    let h = cfg.params.hurst()?;
    Ok(match cfg.campaign.sampler {
        SamplerKind::Cholesky => {
            let s = CholeskySampler::new(tg, h)?;
            Box::new(move |seed, rep| s.sample_replica(seed, rep))
        }
        SamplerKind::Volterra => {
            let s = VolterraSampler::new(tg, h)?;
            Box::new(move |seed, rep| s.sample_replica(seed, rep))
        }
    })
}

fn sample_fbm(cfg: &ExperimentConfig) -> Result<Output> {
    let path = fbm_sampler(cfg)?(cfg.noise.seed, 0);
    let mut out = Output::new(&["t", "value"]);
    for (t, v) in path.grid.nodes().iter().zip(&path.values) {
        out.row(vec![num(*t), num(*v)]);
    }
    Ok(out)
}

fn simulate(cfg: &ExperimentConfig, dir: &Path, override_admissibility: bool) -> Result<Output> {
    let sol = picard_solve(&cfg.solver_config(override_admissibility)?)?;
    let mut out = Output::new(&["node", "t", "norm_q", "weighted_norm_r"]);
    for (i, t) in sol.nodes().iter().enumerate() {
        out.row(vec![i.to_string(), num(*t), num(sol.norms_q[i]), num(sol.weighted_norms_r[i])]);
    }
    let fields_dir: PathBuf = dir.join("solution");
    sol.write_dir(&fields_dir)?;
    out.files.push("solution/manifest.json".into());
    out.files.extend((0..sol.fields.len()).map(|i| format!("solution/u_{i:04}.bin")));
    out.summary = serde_json::to_value(&sol)?;
    Ok(out)
}

fn verify_kernel(cfg: &ExperimentConfig) -> Result<Output> {
    let theta = cfg.params.theta;
    let dim = cfg.params.dim;
    let c = &cfg.campaign;
    if c.kernel_points < 2 || !(c.kernel_radius > 0.0) {
        return Err(invalid("kernel table needs at least two points and a positive radius"));
    }
    let xs: Vec<f64> =
        (0..c.kernel_points).map(|i| c.kernel_radius * i as f64 / (c.kernel_points - 1) as f64).collect();
    let values = xs
        .par_iter()
        .map(|&x| {
            let mut p = vec![0.0; dim];
            p[0] = x;
            eval_ktheta(&p, theta)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Output::new(&["x", "kernel"]);
    for (x, v) in xs.iter().zip(&values) {
        out.row(vec![num(*x), num(*v)]);
    }
    let cert = decay_bound_certificate(theta, dim, c.kernel_radius)?;
    let cert2 = decay_bound_certificate(theta, dim, 2.0 * c.kernel_radius)?;
    let kappas = (1..=4).map(kappa_m).collect::<Result<Vec<_>>>()?;
    out.summary = serde_json::json!({
        "theta": theta,
        "dim": dim,
        "decay_certificate": cert,
        "decay_certificate_doubled_radius": cert2,
        "kappa_m": kappas,
        "smoothing_constant": smoothing_constant(theta, dim)?,
    });
    Ok(out)
}

fn smoothing(cfg: &ExperimentConfig) -> Result<Output> {
    let grid = cfg.spatial_grid()?;
    let theta = cfg.params.theta;
    let kappa = smoothing_constant(theta, grid.dim())?;
    let c = &cfg.campaign;
    let mut out = Output::new(&["p", "q", "max_ratio", "smallest_trial_max", "smoothing_constant"]);
    for [p, q] in &c.exponent_pairs {
        let r = verify_smoothing(grid, theta, p.0, q.0, &c.t_list, c.trials, cfg.noise.seed)?;
        let (lo, hi) = r.spread();
        out.row(vec![num(p.0), num(q.0), num(hi), num(lo), num(kappa)]);
    }
    Ok(out)
}

fn hardy(cfg: &ExperimentConfig) -> Result<Output> {
    let grid = cfg.spatial_grid()?;
    let (theta, gamma) = (cfg.params.theta, cfg.params.gamma);
    let c = &cfg.campaign;
    let mut out = Output::new(&["p", "q", "max_ratio", "smallest_trial_max"]);
    for [p, q] in &c.exponent_pairs {
        let r = verify_hardy_estimate(grid, theta, gamma, p.0, q.0, &c.t_list, c.trials, cfg.noise.seed)?;
        let (lo, hi) = r.spread();
        out.row(vec![num(p.0), num(q.0), num(hi), num(lo)]);
    }
    Ok(out)
}

/// Empirical covariance matrix of sampled paths with standard errors,
/// against the exact covariance.
pub struct CovarianceComparison {
    pub nodes: Vec<f64>,
    /// `(i, j, empirical, exact, standard_error)` for `1 <= j <= i`.
    pub entries: Vec<(usize, usize, f64, f64, f64)>,
}

impl CovarianceComparison {
    /// Largest `|empirical - exact| / se`.
    pub fn max_z(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |m, e| m.max((e.2 - e.3).abs() / e.4))
    }
}

/// Paths from `sample(replica)` for `replica in 0..replicas`; the covariance
/// uses the known zero mean.
pub fn covariance_comparison(
    tgrid: &TimeGrid,
    hurst: crate::fbm::HurstParameter,
    replicas: usize,
    sample: impl Fn(u64) -> Vec<f64> + Sync,
) -> Result<CovarianceComparison> {
    if replicas < 2 {
        return Err(invalid("need at least two replicas"));
    }
    let m = tgrid.steps();
    let nodes = tgrid.nodes();
    let paths: Vec<Vec<f64>> = (0..replicas as u64).into_par_iter().map(&sample).collect();
    let n = replicas as f64;
    let entries = (1..=m)
        .into_par_iter()
        .flat_map_iter(|i| {
            let paths = &paths;
            let nodes = &nodes;
            (1..=i).map(move |j| {
                let prods = paths.iter().map(|p| p[i] * p[j]);
                let (s, s2) = prods.fold((0.0, 0.0), |(a, b), x| (a + x, b + x * x));
                let mean = s / n;
                let var = (s2 - n * mean * mean) / (n - 1.0);
                let exact = fbm_covariance(nodes[i], nodes[j], hurst).unwrap_or(f64::NAN);
                (i, j, mean, exact, (var / n).sqrt())
            })
        })
        .collect();
    Ok(CovarianceComparison { nodes, entries })
}

fn mc_covariance(cfg: &ExperimentConfig) -> Result<Output> {
    let tg = cfg.time_grid()?;
    let sampler = fbm_sampler(cfg)?;
    let seed = cfg.noise.seed;
    let cmp = covariance_comparison(&tg, cfg.params.hurst()?, cfg.campaign.replicas, |r| sampler(seed, r).values)?;
    let mut out = Output::new(&["i", "j", "t_i", "t_j", "empirical", "exact", "standard_error"]);
    for &(i, j, emp, exact, se) in &cmp.entries {
        out.row(vec![i.to_string(), j.to_string(), num(cmp.nodes[i]), num(cmp.nodes[j]), num(emp), num(exact), num(se)]);
    }
    out.summary = serde_json::json!({ "max_standard_score": cmp.max_z(), "replicas": cfg.campaign.replicas });
    Ok(out)
}

fn sweep(cfg: &ExperimentConfig) -> Result<Output> {
    let l = &cfg.campaign.sweep;
    let mut out = Output::new(&[
        "dim", "theta", "gamma", "p", "q", "hurst", "status", "violated", "r", "sigma", "a", "b", "a+b-1",
        "a-p*sigma", "a-sigma", "third_condition",
    ]);
    let mut accepted = 0usize;
    for &gamma in &l.gamma {
        for &p in &l.p {
            for &q in &l.q {
                for &hurst in &l.hurst {
                    let params = ModelParams { gamma, p, q, hurst, ..cfg.params };
                    let v = check_admissible(&params);
                    let mut row = vec![
                        params.dim.to_string(),
                        num(params.theta),
                        num(gamma),
                        num(p),
                        num(q),
                        num(hurst),
                        if v.is_accepted() { "accepted" } else { "rejected" }.into(),
                        v.reasons().join("; "),
                    ];
                    match v.exponents() {
                        Some(e) => {
                            accepted += 1;
                            row.extend(
                                [e.r, e.sigma, e.a, e.b, e.a_plus_b_minus_1, e.a_minus_p_sigma, e.a_minus_sigma, e.third_condition]
                                    .map(num),
                            );
                        }
                        None => row.extend(std::iter::repeat_n(String::new(), 8)),
                    }
                    out.row(row);
                }
            }
        }
    }
    out.summary = serde_json::json!({ "tuples": out.rows.len(), "accepted": accepted });
    Ok(out)
}
