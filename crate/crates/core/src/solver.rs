//! Picard iteration for the mild formulation
//! `u(t) = e^{-tA} u0 + int_0^t S(t - s) |u|^{p-1} u ds + Z(t)` on a time grid.
//!
//! The Duhamel integral freezes the source at the left node of each step and
//! integrates the semigroup factor exactly per Fourier mode, so the discrete
//! map is triangular in time. The nonlinear term is dealiased with the 2/3
//! rule before it enters the integral.

use std::path::Path;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fbm::TimeGrid;
use crate::hardy::{build_hardy_weight, power, verify_hardy_estimate, HardyWeight};
use crate::noise::{weighted_sup, write_fields, ConvolutionSampler, NoiseSpec};
use crate::spectral::kernel::smoothing_constant;
use crate::spectral::{lebesgue_norm, Field, SemigroupMultiplier, SpatialGrid};
use crate::wellposedness::{
    check_admissible, default_r, existence_budget, exponents_unchecked, Admissibility, ContractionBudget,
    DerivedExponents, ModelParams,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    Zero,
    Constant { amplitude: f64 },
    /// `amplitude * sin(pi x_1 / L)`.
    Sine { amplitude: f64 },
    /// `amplitude * exp(-|x|^2 / (2 width^2))`.
    Gaussian { amplitude: f64, width: f64 },
    /// A binary field file.
    File { path: String },
}

impl InitialCondition {
    pub fn build(&self, grid: SpatialGrid) -> Result<Field> {
        let l = grid.half_period();
        let field = match self {
            InitialCondition::Zero => Field::zeros(grid),
            InitialCondition::Constant { amplitude } => Field::constant(grid, *amplitude),
            InitialCondition::Sine { amplitude } => {
                Field::from_fn(grid, |x| amplitude * (std::f64::consts::PI * x[0] / l).sin())
            }
            InitialCondition::Gaussian { amplitude, width } => {
                if !(*width > 0.0) {
                    return Err(invalid(format!("Gaussian width must be positive, got {width}")));
                }
                Field::from_fn(grid, |x| {
                    let r2: f64 = x.iter().map(|v| v * v).sum();
                    amplitude * (-0.5 * r2 / (width * width)).exp()
                })
            }
            InitialCondition::File { path } => {
                let f = Field::load_binary(path)?;
                if f.grid() != &grid {
                    return Err(Error::GridMismatch(format!("initial condition {path} is on a different grid")));
                }
                f
            }
        };
        Field::new(grid, field.into_values())
    }
}

fn default_tol() -> f64 {
    1e-10
}

fn default_iters() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub params: ModelParams,
    pub grid: SpatialGrid,
    pub tgrid: TimeGrid,
    pub mode_cutoff: usize,
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub picard_tol: f64,
    #[serde(default = "default_iters")]
    pub max_picard_iters: usize,
    pub initial: InitialCondition,
    /// Constant of the weighted smoothing estimate; measured when absent.
    #[serde(default)]
    pub hardy_constant: Option<f64>,
    /// Run even when the parameters or the horizon fall outside the theorem.
    #[serde(default)]
    pub override_admissibility: bool,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.picard_tol > 0.0) {
            return Err(invalid(format!("picard_tol must be positive, got {}", self.picard_tol)));
        }
        if self.max_picard_iters == 0 {
            return Err(invalid("max_picard_iters must be at least 1"));
        }
        if self.params.dim != self.grid.dim() {
            return Err(invalid(format!(
                "model dimension {} does not match grid dimension {}",
                self.params.dim,
                self.grid.dim()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionTrajectory {
    pub tgrid: TimeGrid,
    #[serde(skip)]
    pub fields: Vec<Field>,
    /// `||u(t_i)||_q` per node.
    pub norms_q: Vec<f64>,
    /// `t_i^sigma ||u(t_i)||_r` per node (0 at `t = 0`).
    pub weighted_norms_r: Vec<f64>,
    /// `d(u^{k+1}, u^k)` per iteration.
    pub picard_history: Vec<f64>,
    pub converged: bool,
    /// Whether both suprema stayed within the ball radius.
    pub within_ball: bool,
    pub budget: ContractionBudget,
    pub exponents: DerivedExponents,
    pub hardy_constant: f64,
    /// Violated hypotheses (empty inside the theorem's regime).
    pub admissibility_violations: Vec<String>,
    /// The admitted horizon was exceeded.
    pub horizon_exceeds_budget: bool,
    pub overridden: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SolutionManifest {
    nodes: Vec<f64>,
    files: Vec<String>,
}

impl SolutionTrajectory {
    pub fn nodes(&self) -> Vec<f64> {
        self.tgrid.nodes()
    }

    pub fn final_field(&self) -> &Field {
        self.fields.last().expect("trajectory has at least the initial node")
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let nodes = self.nodes();
        write_fields(dir.as_ref(), "u", &self.fields, |files| SolutionManifest { nodes, files })
    }
}

/// `sup_i ||u_i - v_i||_q + sup_{i >= 1} t_i^sigma ||u_i - v_i||_r`.
pub fn metric_d(u: &[Field], v: &[Field], nodes: &[f64], sigma: f64, q: f64, r: f64) -> Result<f64> {
    if u.len() != v.len() || u.len() != nodes.len() {
        return Err(Error::GridMismatch(format!(
            "trajectories have {} and {} nodes, time grid has {}",
            u.len(),
            v.len(),
            nodes.len()
        )));
    }
    let diff = u.iter().zip(v).map(|(a, b)| a.sub(b)).collect::<Result<Vec<_>>>()?;
    weighted_sup(&diff, nodes, sigma, q, r)
}

/// Spectral Duhamel operator on a fixed grid pair: per-step factors
/// `E = e^{-dt lambda}` and `W = (1 - E) / lambda` (`dt` at `lambda = 0`).
struct Duhamel {
    grid: SpatialGrid,
    decay: Vec<f64>,
    weight: Vec<f64>,
    keep: Option<Vec<bool>>,
}

impl Duhamel {
    fn new(grid: SpatialGrid, dt: f64, theta: f64, dealias: bool) -> Result<Self> {
        let step = SemigroupMultiplier::new(&grid, theta, dt)?;
        let symbol = grid.symbol(theta);
        let decay = step.factors().to_vec();
        let weight = symbol
            .iter()
            .map(|&l| if l == 0.0 { dt } else { -(-dt * l).exp_m1() / l })
            .collect();
        let keep = dealias.then(|| dealias_mask(&grid));
        Ok(Self { grid, decay, weight, keep })
    }

    fn source_spectrum(&self, source: &Field) -> Vec<Complex64> {
        let mut g = source.spectrum();
        if let Some(keep) = &self.keep {
            for (c, k) in g.iter_mut().zip(keep) {
                if !k {
                    *c = Complex64::new(0.0, 0.0);
                }
            }
        }
        g
    }

    /// Spectra of the integral at every node for sources frozen at the
    /// left node of each step: `D_i = E D_{i-1} + W g_{i-1}`.
    fn integrate(&self, sources: &[Field]) -> Vec<Vec<Complex64>> {
        let total = self.grid.len();
        let mut out = Vec::with_capacity(sources.len() + 1);
        let mut d = vec![Complex64::new(0.0, 0.0); total];
        out.push(d.clone());
        for s in sources {
            let g = self.source_spectrum(s);
            for k in 0..total {
                d[k] = d[k] * self.decay[k] + g[k] * self.weight[k];
            }
            out.push(d.clone());
        }
        out
    }
}

/// `true` where every axis wavenumber satisfies `3 |k| <= n`.
pub fn dealias_mask(grid: &SpatialGrid) -> Vec<bool> {
    let n = grid.points() as i64;
    (0..grid.len())
        .map(|j| grid.signed_wavenumbers(j)[..grid.dim()].iter().all(|k| 3 * k.abs() <= n))
        .collect()
}

/// `int_0^{t_i} e^{-(t_i - s) A} (w source(s)) ds` with the source frozen at
/// the left node of each step. `source` holds at least `t_0 .. t_{i-1}`.
pub fn duhamel_quadrature(
    source: &[Field],
    tgrid: &TimeGrid,
    node: usize,
    theta: f64,
    weight: &HardyWeight,
) -> Result<Field> {
    if node > tgrid.steps() || source.len() < node {
        return Err(invalid(format!("need sources at nodes 0..{node}, got {}", source.len())));
    }
    let grid = *weight.grid();
    if node == 0 {
        return Ok(Field::zeros(grid));
    }
    let weighted = source[..node]
        .iter()
        .map(|f| {
            f.ensure_same_grid(&weight.as_field())?;
            Ok(Field::new(grid, f.values().iter().zip(weight.values()).map(|(a, b)| a * b).collect())?)
        })
        .collect::<Result<Vec<_>>>()?;
    let d = Duhamel::new(grid, tgrid.dt(), theta, false)?;
    let spectra = d.integrate(&weighted);
    Ok(Field::from_spectrum(grid, spectra[node].clone()).0)
}

fn nonlinear_sources(u: &[Field], p: f64, w: &HardyWeight) -> Vec<Field> {
    u.iter()
        .map(|f| {
            let v = f.values().iter().zip(w.values()).map(|(&x, &wj)| wj * power(x, p)).collect();
            Field::new(*f.grid(), v).unwrap_or_else(|_| Field::constant(*f.grid(), f64::NAN))
        })
        .collect()
}

/// Explicit exponential Euler `u_{n+1} = E u_n + W (w |u_n|^{p-1} u_n)`.
/// Returns the solution at every node.
pub fn exponential_euler(
    u0: &Field,
    tgrid: &TimeGrid,
    theta: f64,
    p: f64,
    weight: &HardyWeight,
    dealias: bool,
) -> Result<Vec<Field>> {
    let grid = *u0.grid();
    let d = Duhamel::new(grid, tgrid.dt(), theta, dealias)?;
    let mut out = Vec::with_capacity(tgrid.steps() + 1);
    let mut u = u0.clone();
    out.push(u.clone());
    for node in 1..=tgrid.steps() {
        let src = &nonlinear_sources(std::slice::from_ref(&u), p, weight)[0];
        let g = d.source_spectrum(src);
        let mut spec = u.spectrum();
        for k in 0..grid.len() {
            spec[k] = spec[k] * d.decay[k] + g[k] * d.weight[k];
        }
        u = Field::from_spectrum(grid, spec).0;
        if !u.is_finite() {
            return Err(Error::NonFinite { node });
        }
        out.push(u.clone());
    }
    Ok(out)
}

/// Empirical constant of the weighted smoothing estimate for the exponent
/// pairs the fixed-point argument uses (`r/p -> q` and `r/p -> r`).
pub fn measure_hardy_constant(params: &ModelParams, grid: SpatialGrid, r: f64) -> Result<f64> {
    let source = r / params.p;
    let mut best: Option<f64> = None;
    for target in [params.q, r] {
        match verify_hardy_estimate(grid, params.theta, params.gamma, source, target, &[0.25, 0.5, 1.0], 32, 0) {
            Ok(report) => best = Some(best.unwrap_or(0.0).max(report.max_ratio)),
            Err(Error::InvalidArgument(_)) => {}
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| invalid("no exponent pair satisfies the weighted estimate's hypotheses"))
}

/// Exponents, Hardy constant and budget for a configuration, together with
/// the hypotheses it violates.
pub struct Plan {
    pub exponents: DerivedExponents,
    pub violations: Vec<String>,
    pub hardy_constant: f64,
    pub kappa: f64,
    pub u0: Field,
}

pub fn plan(cfg: &SolverConfig) -> Result<Plan> {
    cfg.validate()?;
    let params = &cfg.params;
    let (exponents, violations) = match check_admissible(params) {
        Admissibility::Accepted { exponents } => (exponents, Vec::new()),
        Admissibility::Rejected { reasons } => {
            if !cfg.override_admissibility {
                return Err(invalid(format!("parameters are not admissible: {}", reasons.join("; "))));
            }
            (exponents_unchecked(params, default_r(params.p, params.q)), reasons)
        }
    };
    let hardy_constant = match cfg.hardy_constant {
        Some(c) => c,
        None if cfg.override_admissibility && !violations.is_empty() => {
            measure_hardy_constant(params, cfg.grid, exponents.r).unwrap_or(1.0)
        }
        None => measure_hardy_constant(params, cfg.grid, exponents.r)?,
    };
    let kappa = smoothing_constant(params.theta, params.dim)?;
    let u0 = cfg.initial.build(cfg.grid)?;
    Ok(Plan { exponents, violations, hardy_constant, kappa, u0 })
}

/// Budget from the noise trajectory: `K(T)` is evaluated on the nodes up to
/// `T`, and on the whole simulated horizon for larger `T`.
fn budget_for(
    cfg: &SolverConfig,
    plan: &Plan,
    noise: &[Field],
    nodes: &[f64],
) -> Result<ContractionBudget> {
    let e = &plan.exponents;
    let q = cfg.params.q;
    let u0_norm = lebesgue_norm(&plan.u0, q)?;
    let k_of_t = |t: f64| {
        let upto = nodes.iter().take_while(|&&s| s <= t * (1.0 + 1e-12)).count().max(1);
        weighted_sup(&noise[..upto], &nodes[..upto], e.sigma, q, e.r).unwrap_or(f64::INFINITY)
    };
    if e.all_positive() {
        existence_budget(&cfg.params, e, plan.kappa, plan.hardy_constant, u0_norm, k_of_t)
    } else {
        Ok(ContractionBudget {
            kappa: plan.kappa,
            ball_radius: 2.0 * plan.kappa * u0_norm + 1.0,
            c_hardy: plan.hardy_constant,
            contraction: f64::NAN,
            horizon: 0.0,
            self_map_bound: f64::NAN,
            diagnostics: vec!["exponents not admissible; no budget".into()],
        })
    }
}

/// Noise realization for the configuration (identically zero when `mu = 0`).
pub fn noise_for(cfg: &SolverConfig) -> Result<Vec<Field>> {
    let steps = cfg.tgrid.steps();
    if cfg.params.mu == 0.0 {
        return Ok(vec![Field::zeros(cfg.grid); steps + 1]);
    }
    let spec = NoiseSpec::new(cfg.grid, cfg.params.hurst()?, cfg.params.mu, cfg.mode_cutoff, cfg.seed)?;
    Ok(ConvolutionSampler::new(spec, cfg.tgrid, cfg.params.theta)?.sample(cfg.seed).fields)
}

pub fn picard_solve(cfg: &SolverConfig) -> Result<SolutionTrajectory> {
    let plan = plan(cfg)?;
    let noise = noise_for(cfg)?;
    picard_solve_with(cfg, &plan, &noise)
}

/// Picard iteration with a precomputed plan and noise realization.
pub fn picard_solve_with(cfg: &SolverConfig, plan: &Plan, noise: &[Field]) -> Result<SolutionTrajectory> {
    let params = &cfg.params;
    let grid = cfg.grid;
    let nodes = cfg.tgrid.nodes();
    if noise.len() != nodes.len() {
        return Err(invalid("noise realization does not match the time grid"));
    }
    let e = plan.exponents.clone();
    let budget = budget_for(cfg, plan, noise, &nodes)?;
    let horizon_exceeds_budget = cfg.tgrid.horizon() > budget.horizon;
    if horizon_exceeds_budget && !cfg.override_admissibility {
        return Err(invalid(format!(
            "horizon {} exceeds the admitted existence time {}",
            cfg.tgrid.horizon(),
            budget.horizon
        )));
    }

    let weight = build_hardy_weight(grid, params.gamma)?;
    let duhamel = Duhamel::new(grid, cfg.tgrid.dt(), params.theta, true)?;
    let linear: Vec<Field> = nodes
        .iter()
        .zip(noise)
        .map(|(&t, z)| Ok(SemigroupMultiplier::new(&grid, params.theta, t)?.apply(&plan.u0).add(z)?))
        .collect::<Result<_>>()?;

    let mut u = linear.clone();
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_picard_iters {
        let next = apply_phi(&u, &linear, &duhamel, params.p, &weight)?;
        let gap = metric_d(&next, &u, &nodes, e.sigma, params.q, e.r)?;
        u = next;
        history.push(gap);
        if gap < cfg.picard_tol {
            converged = true;
            break;
        }
    }

    let norms_q = u.iter().map(|f| lebesgue_norm(f, params.q)).collect::<Result<Vec<_>>>()?;
    let weighted_norms_r = u
        .iter()
        .zip(&nodes)
        .enumerate()
        .map(|(i, (f, t))| if i == 0 { Ok(0.0) } else { Ok(t.powf(e.sigma) * lebesgue_norm(f, e.r)?) })
        .collect::<Result<Vec<_>>>()?;
    let radius = budget.ball_radius;
    let within_ball = norms_q.iter().all(|&v| v <= radius) && weighted_norms_r.iter().all(|&v| v <= radius);
    Ok(SolutionTrajectory {
        tgrid: cfg.tgrid,
        fields: u,
        norms_q,
        weighted_norms_r,
        picard_history: history,
        converged,
        within_ball,
        budget,
        exponents: e,
        hardy_constant: plan.hardy_constant,
        admissibility_violations: plan.violations.clone(),
        horizon_exceeds_budget,
        overridden: cfg.override_admissibility,
    })
}

/// `Phi(u)_i = linear_i + D_i(u)`. Aborts at the first node that is not finite.
fn apply_phi(u: &[Field], linear: &[Field], duhamel: &Duhamel, p: f64, w: &HardyWeight) -> Result<Vec<Field>> {
    let sources = nonlinear_sources(&u[..u.len() - 1], p, w);
    let spectra = duhamel.integrate(&sources);
    let mut out = Vec::with_capacity(u.len());
    for (node, (spec, lin)) in spectra.into_iter().zip(linear).enumerate() {
        let d = Field::from_spectrum(duhamel.grid, spec).0;
        let next = lin.add(&d)?;
        if !next.is_finite() {
            return Err(Error::NonFinite { node });
        }
        out.push(next);
    }
    Ok(out)
}

/// `Phi(u)` for a solved configuration, for residual checks.
pub fn apply_map(cfg: &SolverConfig, plan: &Plan, noise: &[Field], u: &[Field]) -> Result<Vec<Field>> {
    let grid = cfg.grid;
    let nodes = cfg.tgrid.nodes();
    let weight = build_hardy_weight(grid, cfg.params.gamma)?;
    let duhamel = Duhamel::new(grid, cfg.tgrid.dt(), cfg.params.theta, true)?;
    let linear: Vec<Field> = nodes
        .iter()
        .zip(noise)
        .map(|(&t, z)| Ok(SemigroupMultiplier::new(&grid, cfg.params.theta, t)?.apply(&plan.u0).add(z)?))
        .collect::<Result<_>>()?;
    apply_phi(u, &linear, &duhamel, cfg.params.p, &weight)
}
