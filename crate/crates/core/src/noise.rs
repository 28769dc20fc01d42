//! Spectrally truncated cylindrical fBm and the stochastic convolution
//! `Z(t) = mu int_0^t exp(-(t - s) A) dB^H(s)`, `A = (-Delta)^{theta/2}`.
//!
//! Each retained Fourier mode is an independent scalar Gaussian process
//! `Z_k(t) = int_0^t exp(-(t - s) lambda_k) dB_k(s)` sampled exactly on the
//! time grid from its covariance. Real fields use the orthonormal basis
//! `(2L)^{-N/2}` (self-conjugate modes) and `sqrt(2) (2L)^{-N/2} cos, sin`
//! (conjugate pairs), each with its own driver.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fbm::{HurstParameter, TimeGrid};
use crate::gauss::CovarianceFactor;
use crate::quad::{self, Tolerance};
use crate::rng;
use crate::spectral::{check_theta, norm_unchecked, Field, SpatialGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub grid: SpatialGrid,
    pub hurst: HurstParameter,
    pub amplitude: f64,
    /// Retain wavenumbers with `max_a |k_a| <= mode_cutoff`.
    pub mode_cutoff: usize,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(grid: SpatialGrid, hurst: HurstParameter, amplitude: f64, mode_cutoff: usize, seed: u64) -> Result<Self> {
        let spec = Self { grid, hurst, amplitude, mode_cutoff, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode_cutoff > self.grid.points() / 2 {
            return Err(invalid(format!(
                "mode cutoff {} exceeds n/2 = {}",
                self.mode_cutoff,
                self.grid.points() / 2
            )));
        }
        if !self.amplitude.is_finite() {
            return Err(invalid("noise amplitude must be finite"));
        }
        Ok(())
    }
}

/// `H(2H-1) int_0^t int_0^{t'} e^{-(t-s) lambda} e^{-(t'-r) lambda} |s-r|^{2H-2} ds dr`.
///
/// With `u = s - r` the inner integral is elementary; the remaining integral
/// against `|u|^{2H-2}` is taken in `v = |u|^{2H-1}`, which removes the
/// singularity, split at `u = 0` and at the kink `u = t - t'`.
pub fn mode_convolution_covariance(lambda: f64, t: f64, t_prime: f64, hurst: HurstParameter) -> Result<f64> {
    let h = hurst.value();
    if h <= 0.5 {
        return Err(Error::Unsupported(format!("stochastic convolution requires H > 1/2, got {h}")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("eigenvalue must be non-negative, got {lambda}")));
    }
    if !(t >= 0.0 && t_prime >= 0.0 && t.is_finite() && t_prime.is_finite()) {
        return Err(invalid(format!("times must be non-negative, got ({t}, {t_prime})")));
    }
    if t == 0.0 || t_prime == 0.0 {
        return Ok(0.0);
    }
    let beta = 2.0 * h - 1.0;
    let inv_beta = 1.0 / beta;
    let inner = |u: f64| {
        let lo = u.max(0.0);
        let hi = t.min(t_prime + u);
        if hi <= lo {
            return 0.0;
        }
        if lambda == 0.0 {
            return hi - lo;
        }
        let decay = (-lambda * (t + t_prime + u - 2.0 * hi)).exp();
        decay * -(-2.0 * lambda * (hi - lo)).exp_m1() / (2.0 * lambda)
    };
    let tol = Tolerance { abs: 1e-16, rel: 1e-12, max_intervals: 2000 };
    let kink = (t - t_prime).abs().powf(beta);
    let breaks = [kink];
    let positive = quad::integrate_with_breaks(|v| inner(v.powf(inv_beta)), 0.0, t.powf(beta), &breaks, tol)?;
    let negative =
        quad::integrate_with_breaks(|v| inner(-v.powf(inv_beta)), 0.0, t_prime.powf(beta), &breaks, tol)?;
    Ok(h * (positive.value + negative.value))
}

/// One real driver slot: flat spectral index, its conjugate partner, and `|k|^2`.
#[derive(Debug, Clone, Copy)]
struct Mode {
    index: usize,
    partner: usize,
    k_squared: u64,
}

impl Mode {
    fn self_conjugate(&self) -> bool {
        self.index == self.partner
    }
}

/// Retained modes with `index <= partner`, i.e. one representative per pair.
fn retained_modes(grid: &SpatialGrid, cutoff: usize) -> Vec<Mode> {
    let cutoff = cutoff as i64;
    (0..grid.len())
        .filter_map(|index| {
            let k = grid.signed_wavenumbers(index);
            if k.iter().any(|c| c.abs() > cutoff) {
                return None;
            }
            let partner = grid.spectral_index([-k[0], -k[1], -k[2]]);
            if partner < index {
                return None;
            }
            let k_squared = k.iter().map(|c| (c * c) as u64).sum();
            Some(Mode { index, partner, k_squared })
        })
        .collect()
}

/// Per-mode covariance factors for a fixed spatial grid, time grid and `theta`.
/// Factors are shared between modes with equal `|k|`.
#[derive(Debug, Clone)]
pub struct ConvolutionSampler {
    spec: NoiseSpec,
    tgrid: TimeGrid,
    theta: f64,
    modes: Vec<Mode>,
    factors: BTreeMap<u64, (f64, CovarianceFactor)>,
}

impl ConvolutionSampler {
    pub fn new(spec: NoiseSpec, tgrid: TimeGrid, theta: f64) -> Result<Self> {
        spec.validate()?;
        check_theta(theta)?;
        let h = spec.hurst.value();
        if h <= 0.5 {
            return Err(Error::Unsupported(format!("stochastic convolution requires H > 1/2, got {h}")));
        }
        let modes = retained_modes(&spec.grid, spec.mode_cutoff);
        let mut distinct: Vec<u64> = modes.iter().map(|m| m.k_squared).collect();
        distinct.sort_unstable();
        distinct.dedup();
        let scale = std::f64::consts::PI / spec.grid.half_period();
        let nodes = tgrid.nodes();
        let factors = distinct
            .into_par_iter()
            .map(|k2| {
                let lambda = (scale * (k2 as f64).sqrt()).powf(theta);
                let m = tgrid.steps();
                let mut cov = DMatrix::zeros(m, m);
                for i in 0..m {
                    for j in 0..=i {
                        let c = mode_convolution_covariance(lambda, nodes[i + 1], nodes[j + 1], spec.hurst)?;
                        cov[(i, j)] = c;
                        cov[(j, i)] = c;
                    }
                }
                let factor = CovarianceFactor::new(cov).map_err(|e| {
                    Error::Factorization(format!("mode with eigenvalue lambda = {lambda:e}: {e}"))
                })?;
                Ok((k2, (lambda, factor)))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(Self { spec, tgrid, theta, modes, factors })
    }

    pub fn spec(&self) -> &NoiseSpec {
        &self.spec
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.tgrid
    }

    /// Number of real scalar drivers (two per conjugate pair, one per self-conjugate mode).
    pub fn driver_count(&self) -> usize {
        self.modes.iter().map(|m| if m.self_conjugate() { 1 } else { 2 }).sum()
    }

    /// `E ||Z(t_i)||_2^2` on the grid, i.e. `mu^2` times the sum of the
    /// per-driver variances.
    pub fn expected_l2_squared(&self, node: usize) -> Result<f64> {
        let t = self.tgrid.node(node);
        let mut total = 0.0;
        for m in &self.modes {
            let lambda = self.factors[&m.k_squared].0;
            let var = mode_convolution_covariance(lambda, t, t, self.spec.hurst)?;
            total += if m.self_conjugate() { var } else { 2.0 * var };
        }
        Ok(self.spec.amplitude * self.spec.amplitude * total)
    }

    /// One realization. Driver `part` (0 or 1) of the mode at flat index `j`
    /// draws from stream `2 j + part` of `seed`.
    pub fn sample(&self, seed: u64) -> ConvolutionTrajectory {
        let grid = self.spec.grid;
        let steps = self.tgrid.steps();
        let total = grid.len();
        let basis = (2.0 * grid.half_period()).powf(-(grid.dim() as f64) / 2.0);
        let norm = self.spec.amplitude * basis * total as f64;
        let series: Vec<(Mode, Vec<f64>, Option<Vec<f64>>)> = self
            .modes
            .par_iter()
            .map(|m| {
                let factor = &self.factors[&m.k_squared].1;
                let draw = |part: u64| {
                    let mut r = rng::stream(seed, 2 * m.index as u64 + part);
                    factor.correlate(&rng::normals(&mut r, steps))
                };
                let a = draw(0);
                let b = if m.self_conjugate() { None } else { Some(draw(1)) };
                (*m, a, b)
            })
            .collect();

        let fields_and_residues: Vec<(Field, f64)> = (1..=steps)
            .into_par_iter()
            .map(|i| {
                let mut spec = vec![Complex64::new(0.0, 0.0); total];
                for (m, a, b) in &series {
                    match b {
                        None => spec[m.index] = Complex64::new(norm * a[i - 1], 0.0),
                        Some(b) => {
                            let c = Complex64::new(a[i - 1], -b[i - 1]) * (norm / std::f64::consts::SQRT_2);
                            spec[m.index] = c;
                            spec[m.partner] = c.conj();
                        }
                    }
                }
                Field::from_spectrum(grid, spec)
            })
            .collect();
        let mut fields = Vec::with_capacity(steps + 1);
        fields.push(Field::zeros(grid));
        let mut max_imag_residue = 0.0f64;
        for (f, res) in fields_and_residues {
            max_imag_residue = max_imag_residue.max(res);
            fields.push(f);
        }
        ConvolutionTrajectory {
            tgrid: self.tgrid,
            theta: self.theta,
            spec: NoiseSpec { seed, ..self.spec },
            fields,
            max_imag_residue,
        }
    }
}

pub fn sample_stochastic_convolution(spec: NoiseSpec, tgrid: TimeGrid, theta: f64) -> Result<ConvolutionTrajectory> {
    Ok(ConvolutionSampler::new(spec, tgrid, theta)?.sample(spec.seed))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvolutionTrajectory {
    pub tgrid: TimeGrid,
    pub theta: f64,
    pub spec: NoiseSpec,
    pub fields: Vec<Field>,
    /// Largest imaginary part discarded by the inverse transforms.
    pub max_imag_residue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub time_grid: TimeGrid,
    pub nodes: Vec<f64>,
    pub theta: f64,
    pub spec: NoiseSpec,
    pub files: Vec<String>,
}

impl ConvolutionTrajectory {
    pub fn nodes(&self) -> Vec<f64> {
        self.tgrid.nodes()
    }

    /// Writes `z_XXXX.bin` per node and `manifest.json` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        write_fields(dir.as_ref(), "z", &self.fields, |files| TrajectoryManifest {
            time_grid: self.tgrid,
            nodes: self.nodes(),
            theta: self.theta,
            spec: self.spec,
            files,
        })
    }
}

pub(crate) fn write_fields<M: Serialize>(
    dir: &Path,
    prefix: &str,
    fields: &[Field],
    manifest: impl FnOnce(Vec<String>) -> M,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(fields.len());
    for (i, f) in fields.iter().enumerate() {
        let name = format!("{prefix}_{i:04}.bin");
        f.save_binary(dir.join(&name))?;
        files.push(name);
    }
    let text = serde_json::to_string_pretty(&manifest(files))?;
    std::fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(())
}

/// Coefficient of `Z` against the constant basis function `(2L)^{-N/2}`.
pub fn zero_mode_coefficient(field: &Field) -> f64 {
    let g = field.grid();
    field.mean() * (2.0 * g.half_period()).powf(g.dim() as f64 / 2.0)
}

/// `sup_i ||u_i||_q + sup_{i >= 1} t_i^sigma ||u_i||_r` over the nodes.
pub fn weighted_sup(fields: &[Field], nodes: &[f64], sigma: f64, q: f64, r: f64) -> Result<f64> {
    if fields.is_empty() || fields.len() != nodes.len() {
        return Err(invalid("need one field per time node"));
    }
    if !(q >= 1.0 && r >= 1.0) {
        return Err(invalid(format!("exponents must be >= 1, got q = {q}, r = {r}")));
    }
    let first = fields.iter().fold(0.0f64, |m, f| m.max(norm_unchecked(f.grid(), f.values(), q)));
    let second = fields
        .iter()
        .zip(nodes)
        .skip(1)
        .fold(0.0f64, |m, (f, t)| m.max(t.powf(sigma) * norm_unchecked(f.grid(), f.values(), r)));
    Ok(first + second)
}

/// `K(T)` evaluated on the trajectory's time nodes.
pub fn k_statistic(z: &ConvolutionTrajectory, sigma: f64, q: f64, r: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(invalid(format!("sigma must be positive, got {sigma}")));
    }
    weighted_sup(&z.fields, &z.nodes(), sigma, q, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::{fbm_covariance, CholeskySampler};
    use crate::spectral::lebesgue_norm;
    use approx::assert_relative_eq;

    fn h(v: f64) -> HurstParameter {
        HurstParameter::new(v).unwrap()
    }

    #[test]
    fn zero_eigenvalue_reduces_to_fbm() {
        for hv in [0.55, 0.75, 0.9] {
            for (t, s) in [(1.0, 1.0), (1.0, 2.0), (0.3, 0.7), (2.0, 0.5)] {
                let c = mode_convolution_covariance(0.0, t, s, h(hv)).unwrap();
                assert_relative_eq!(c, fbm_covariance(t, s, h(hv)).unwrap(), max_relative = 1e-10);
            }
        }
        let c = mode_convolution_covariance(0.0, 1.0, 2.0, h(0.75)).unwrap();
        assert_relative_eq!(c, 2f64.sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn covariance_domain() {
        assert!(matches!(mode_convolution_covariance(1.0, 1.0, 1.0, h(0.5)), Err(Error::Unsupported(_))));
        assert!(mode_convolution_covariance(-1.0, 1.0, 1.0, h(0.7)).is_err());
        assert!(mode_convolution_covariance(1.0, -1.0, 1.0, h(0.7)).is_err());
        assert_eq!(mode_convolution_covariance(3.0, 0.0, 1.0, h(0.7)).unwrap(), 0.0);
    }

    #[test]
    fn covariance_symmetric_and_decreasing_in_lambda() {
        for (t, s) in [(0.4, 1.0), (1.0, 0.25)] {
            let a = mode_convolution_covariance(5.0, t, s, h(0.7)).unwrap();
            let b = mode_convolution_covariance(5.0, s, t, h(0.7)).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-11);
        }
        let vals: Vec<f64> = [0.0, 1.0, 10.0, 100.0]
            .iter()
            .map(|&l| mode_convolution_covariance(l, 1.0, 1.0, h(0.75)).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
    }

    /// Cell sum with exact increment covariances and trapezoid cell averages
    /// of the exponentials, Richardson-extrapolated from `n` and `2n` cells.
    pub(crate) fn cell_sum_oracle(lambda: f64, t: f64, s: f64, hv: f64, n: usize) -> (f64, f64) {
        let level = |n: usize| {
            let (ht, hs) = (t / n as f64, s / n as f64);
            let avg = |end: f64, a: f64, b: f64| 0.5 * ((-(end - a) * lambda).exp() + (-(end - b) * lambda).exp());
            let fa: Vec<f64> = (0..n).map(|i| avg(t, i as f64 * ht, (i + 1) as f64 * ht)).collect();
            let gb: Vec<f64> = (0..n).map(|j| avg(s, j as f64 * hs, (j + 1) as f64 * hs)).collect();
            (0..n)
                .into_par_iter()
                .map(|i| {
                    let (a0, a1) = (i as f64 * ht, (i + 1) as f64 * ht);
                    (0..n)
                        .map(|j| {
                            let (b0, b1) = (j as f64 * hs, (j + 1) as f64 * hs);
                            fa[i] * gb[j] * crate::fbm::increment_covariance(a0, a1, b0, b1, 2.0 * hv)
                        })
                        .sum::<f64>()
                })
                .sum::<f64>()
        };
        let (coarse, fine) = (level(n), level(2 * n));
        ((4.0 * fine - coarse) / 3.0, (fine - coarse).abs())
    }

    #[test]
    fn covariance_matches_cell_sum_oracle() {
        for (lambda, t, s) in [(1.0, 1.0, 1.0), (5.0, 1.0, 1.0), (20.0, 1.0, 1.0), (5.0, 1.0, 0.6)] {
            let (oracle, _) = cell_sum_oracle(lambda, t, s, 0.75, 800);
            let c = mode_convolution_covariance(lambda, t, s, h(0.75)).unwrap();
            assert_relative_eq!(c, oracle, max_relative = 1e-4);
        }
    }

    fn grid() -> SpatialGrid {
        SpatialGrid::new(1, 4.0, 32).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(NoiseSpec::new(grid(), h(0.7), 1.0, 17, 0).is_err());
        assert!(NoiseSpec::new(grid(), h(0.7), 1.0, 16, 0).is_ok());
        let spec = NoiseSpec::new(grid(), h(0.4), 1.0, 4, 0).unwrap();
        assert!(ConvolutionSampler::new(spec, TimeGrid::new(1.0, 8).unwrap(), 2.0).is_err());
    }

    #[test]
    fn zero_amplitude_gives_zero_field() {
        let spec = NoiseSpec::new(grid(), h(0.7), 0.0, 8, 3).unwrap();
        let z = sample_stochastic_convolution(spec, TimeGrid::new(1.0, 8).unwrap(), 2.0).unwrap();
        assert!(z.fields.iter().all(|f| f.values().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn single_mode_is_a_scaled_fbm_path() {
        let tg = TimeGrid::new(1.0, 16).unwrap();
        let spec = NoiseSpec::new(grid(), h(0.7), 2.5, 0, 11).unwrap();
        let z = sample_stochastic_convolution(spec, tg, 2.0).unwrap();
        let path = CholeskySampler::new(tg, h(0.7)).unwrap().sample(11);
        let scale = 2.5 / 8f64.sqrt();
        for (f, b) in z.fields.iter().zip(&path.values) {
            let v0 = f.values()[0];
            assert!(f.values().iter().all(|v| (v - v0).abs() <= 1e-12 * v0.abs().max(1.0)));
            assert!((v0 - scale * b).abs() < 1e-8, "{v0} vs {}", scale * b);
            assert_relative_eq!(zero_mode_coefficient(f), 2.5 * b, epsilon = 1e-8);
        }
    }

    #[test]
    fn realizations_are_real_and_deterministic() {
        let tg = TimeGrid::new(1.0, 8).unwrap();
        let spec = NoiseSpec::new(SpatialGrid::new(2, 2.0, 16).unwrap(), h(0.8), 1.0, 8, 4).unwrap();
        let a = sample_stochastic_convolution(spec, tg, 2.0).unwrap();
        let b = sample_stochastic_convolution(spec, tg, 2.0).unwrap();
        assert_eq!(a, b);
        assert!(a.max_imag_residue < 1e-12, "{}", a.max_imag_residue);
        assert!(a.fields[0].values().iter().all(|&v| v == 0.0));
        let c = sample_stochastic_convolution(NoiseSpec { seed: 5, ..spec }, tg, 2.0).unwrap();
        assert_ne!(a.fields[8], c.fields[8]);
    }

    #[test]
    fn expected_norm_converges_under_cutoff_doubling() {
        let tg = TimeGrid::new(1.0, 4).unwrap();
        let g = SpatialGrid::new(1, 8.0, 128).unwrap();
        let at = |cutoff| {
            let spec = NoiseSpec::new(g, h(0.75), 1.0, cutoff, 0).unwrap();
            ConvolutionSampler::new(spec, tg, 2.0).unwrap().expected_l2_squared(4).unwrap().sqrt()
        };
        let (a, b) = (at(16), at(32));
        assert!((b / a - 1.0).abs() < 0.01, "{a} {b}");
    }

    #[test]
    fn empirical_norm_matches_expected() {
        let tg = TimeGrid::new(1.0, 4).unwrap();
        let spec = NoiseSpec::new(SpatialGrid::new(1, 4.0, 32).unwrap(), h(0.75), 1.5, 8, 0).unwrap();
        let sampler = ConvolutionSampler::new(spec, tg, 2.0).unwrap();
        let expected = sampler.expected_l2_squared(4).unwrap();
        let reps = 400;
        let xs: Vec<f64> = (0..reps)
            .map(|s| lebesgue_norm(&sampler.sample(s).fields[4], 2.0).unwrap().powi(2))
            .collect();
        let mean = xs.iter().sum::<f64>() / reps as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        assert!((mean - expected).abs() < 5.0 * se, "{mean} vs {expected} (se {se})");
    }

    #[test]
    fn k_statistic_examples() {
        let tg = TimeGrid::new(2.0, 4).unwrap();
        let g = SpatialGrid::new(1, 1.0, 8).unwrap();
        let spec = NoiseSpec::new(g, h(0.7), 1.0, 0, 0).unwrap();
        let mut z = ConvolutionTrajectory {
            tgrid: tg,
            theta: 2.0,
            spec,
            fields: vec![Field::zeros(g); 5],
            max_imag_residue: 0.0,
        };
        assert_eq!(k_statistic(&z, 0.1, 2.0, 3.0).unwrap(), 0.0);
        z.fields = vec![Field::constant(g, 1.5); 5];
        let (q, r, sigma) = (2.0, 3.0, 0.1);
        let expect = 1.5 * 2f64.powf(1.0 / q) + 2f64.powf(sigma) * 1.5 * 2f64.powf(1.0 / r);
        assert_relative_eq!(k_statistic(&z, sigma, q, r).unwrap(), expect, max_relative = 1e-14);
        let short = weighted_sup(&z.fields[..3], &z.nodes()[..3], sigma, q, r).unwrap();
        assert!(short <= k_statistic(&z, sigma, q, r).unwrap());
        assert!(k_statistic(&z, 0.0, q, r).is_err());
    }

    #[test]
    fn trajectory_export() {
        let dir = tempfile::tempdir().unwrap();
        let tg = TimeGrid::new(1.0, 3).unwrap();
        let spec = NoiseSpec::new(grid(), h(0.7), 1.0, 4, 2).unwrap();
        let z = sample_stochastic_convolution(spec, tg, 2.0).unwrap();
        z.write_dir(dir.path()).unwrap();
        let manifest: TrajectoryManifest =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest.files.len(), 4);
        assert_eq!(manifest.spec.seed, 2);
        let back = Field::load_binary(dir.path().join(&manifest.files[2])).unwrap();
        assert_eq!(back, z.fields[2]);
    }

    #[test]
    fn scipy_reference_values() {
        // scipy.integrate.quad with algebraic weight on the same reduction
        for (lambda, t, s, want) in [
            (1.0, 1.0, 1.0, 0.41165680837766444),
            (5.0, 1.0, 1.0, 0.05923990422805661),
            (20.0, 1.0, 1.0, 0.007431238679139191),
            (5.0, 1.0, 0.6, 0.028279428352845096),
        ] {
            let got = mode_convolution_covariance(lambda, t, s, h(0.75)).unwrap();
            assert!((got / want - 1.0).abs() < 1e-9, "{lambda} {t} {s}: {got} vs {want}");
        }
    }
}
