//! Empirical check of the `L^p -> L^q` smoothing estimate
//! `||e^{-tA} phi||_q <= C t^{-(N/theta)(1/p - 1/q)} ||phi||_p` on random fields.

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use super::{check_theta, lebesgue_norm, reciprocal, Field, SemigroupMultiplier, SpatialGrid};
use crate::error::{invalid, Result};
use crate::rng;

/// Random sums of Gaussian bumps. Widths are log-uniform in
/// `[min_width, max_width]`, centers uniform in `[-center_spread, center_spread]^N`,
/// amplitudes standard normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BumpFamily {
    pub min_width: f64,
    pub max_width: f64,
    pub center_spread: f64,
    pub max_bumps: usize,
}

impl BumpFamily {
    /// Default family: widths from `8 dx` to `L / 8`, centers within `L / 4`,
    /// up to three bumps.
    pub fn for_grid(grid: &SpatialGrid) -> Self {
        let l = grid.half_period();
        let min_width = 8.0 * grid.dx();
        Self {
            min_width,
            max_width: (l / 8.0).max(min_width),
            center_spread: l / 4.0,
            max_bumps: 3,
        }
    }

    pub fn sample(&self, grid: SpatialGrid, rng: &mut rng::Rng) -> Field {
        let dim = grid.dim();
        let count = rng.random_range(1..=self.max_bumps.max(1));
        let (lo, hi) = (self.min_width.ln(), self.max_width.ln());
        let bumps: Vec<(f64, [f64; 3], f64)> = (0..count)
            .map(|_| {
                let amp: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
                let mut c = [0.0; 3];
                for slot in c.iter_mut().take(dim) {
                    *slot = rng.random_range(-self.center_spread..=self.center_spread);
                }
                let w = if hi > lo { rng.random_range(lo..hi).exp() } else { self.min_width };
                (amp, c, w)
            })
            .collect();
        Field::from_fn(grid, |x| {
            bumps
                .iter()
                .map(|(a, c, w)| {
                    let r2: f64 = x.iter().zip(c).map(|(xi, ci)| (xi - ci) * (xi - ci)).sum();
                    a * (-0.5 * r2 / (w * w)).exp()
                })
                .sum()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioReport {
    /// Largest ratio over all trials and times.
    pub max_ratio: f64,
    /// Largest ratio over times, per trial.
    pub per_trial: Vec<f64>,
}

impl RatioReport {
    pub(crate) fn from_trials(per_trial: Vec<f64>) -> Self {
        let max_ratio = per_trial.iter().copied().fold(0.0, f64::max);
        Self { max_ratio, per_trial }
    }

    /// Smallest and largest per-trial maxima.
    pub fn spread(&self) -> (f64, f64) {
        let lo = self.per_trial.iter().copied().fold(f64::INFINITY, f64::min);
        (lo, self.max_ratio)
    }
}

/// Runs `trials` random fields through `ratio(field, t)` for each `t`, in
/// parallel. Trial `i` draws from stream `i` of `seed`.
pub(crate) fn ratio_campaign<F>(
    grid: SpatialGrid,
    family: BumpFamily,
    t_list: &[f64],
    trials: usize,
    seed: u64,
    ratio: F,
) -> Result<RatioReport>
where
    F: Fn(&Field, f64) -> Result<f64> + Sync,
{
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    if t_list.is_empty() || t_list.iter().any(|t| !(*t > 0.0)) {
        return Err(invalid("time list must be non-empty with positive entries"));
    }
    let per_trial = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, i);
            let phi = family.sample(grid, &mut rng);
            t_list.iter().try_fold(0.0f64, |m, &t| Ok(m.max(ratio(&phi, t)?)))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RatioReport::from_trials(per_trial))
}

pub(crate) fn check_exponents(p: f64, q: f64) -> Result<()> {
    if !(p >= 1.0) {
        return Err(invalid(format!("p must be >= 1, got {p}")));
    }
    if !(q >= p) {
        return Err(invalid(format!("need p <= q, got p = {p}, q = {q}")));
    }
    Ok(())
}

/// Maximum over random fields and `t_list` of
/// `||e^{-tA} phi||_q t^{(N/theta)(1/p - 1/q)} / ||phi||_p`.
#[allow(clippy::too_many_arguments)]
pub fn verify_smoothing(
    grid: SpatialGrid,
    theta: f64,
    p: f64,
    q: f64,
    t_list: &[f64],
    trials: usize,
    seed: u64,
) -> Result<RatioReport> {
    verify_smoothing_with(grid, BumpFamily::for_grid(&grid), theta, p, q, t_list, trials, seed)
}

#[allow(clippy::too_many_arguments)]
pub fn verify_smoothing_with(
    grid: SpatialGrid,
    family: BumpFamily,
    theta: f64,
    p: f64,
    q: f64,
    t_list: &[f64],
    trials: usize,
    seed: u64,
) -> Result<RatioReport> {
    check_theta(theta)?;
    check_exponents(p, q)?;
    let exponent = grid.dim() as f64 / theta * (reciprocal(p) - reciprocal(q));
    let multipliers = t_list
        .iter()
        .map(|&t| SemigroupMultiplier::new(&grid, theta, t).map(|m| (t, m)))
        .collect::<Result<Vec<_>>>()?;
    ratio_campaign(grid, family, t_list, trials, seed, |phi, t| {
        let m = &multipliers.iter().find(|(tt, _)| *tt == t).expect("multiplier for t").1;
        let out = m.apply(phi);
        Ok(lebesgue_norm(&out, q)? * t.powf(exponent) / lebesgue_norm(phi, p)?)
    })
}
