//! The singular weight `|x|^{-gamma}`, the power nonlinearity
//! `|x|^{-gamma} |u|^{p-1} u`, and the weighted semigroup
//! `S(t) = e^{-t (-Delta)^{theta/2}} |x|^{-gamma}`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::quad::{self, Tolerance};
use crate::spectral::smoothing::{ratio_campaign, BumpFamily, RatioReport};
use crate::spectral::{check_theta, lebesgue_norm, reciprocal, Field, SemigroupMultiplier, SpatialGrid};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardyWeight {
    grid: SpatialGrid,
    gamma: f64,
    values: Vec<f64>,
}

impl HardyWeight {
    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn as_field(&self) -> Field {
        Field::from_raw(self.grid, self.values.clone())
    }
}

/// Mean of `|y|^{-gamma}` over the unit cube `[0, 1]^N`:
/// `N / (N - gamma) * int_{[0,1]^{N-1}} (1 + |a|^2)^{-gamma/2} da`.
fn unit_cube_mean(dim: usize, gamma: f64) -> Result<f64> {
    let d = dim as f64;
    let prefactor = d / (d - gamma);
    let tol = Tolerance::new(1e-14, 1e-13);
    let face = match dim {
        1 => 1.0,
        2 => quad::integrate(|a| (1.0 + a * a).powf(-gamma / 2.0), 0.0, 1.0, tol)?.value,
        _ => {
            let mut failure: Option<Error> = None;
            let outer = quad::integrate(
                |a| match quad::integrate(|b| (1.0 + a * a + b * b).powf(-gamma / 2.0), 0.0, 1.0, tol) {
                    Ok(e) => e.value,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                },
                0.0,
                1.0,
                tol,
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            outer.value
        }
    };
    Ok(prefactor * face)
}

/// Pointwise `|x_j|^{-gamma}`; the origin cell carries the exact cell average
/// `(1/dx^N) int_cell |x|^{-gamma} dx`.
pub fn build_hardy_weight(grid: SpatialGrid, gamma: f64) -> Result<HardyWeight> {
    let dim = grid.dim() as f64;
    if !(gamma >= 0.0 && gamma < dim) {
        return Err(invalid(format!("weight exponent must satisfy 0 <= gamma < N = {dim}, got {gamma}")));
    }
    if gamma == 0.0 {
        return Ok(HardyWeight { grid, gamma, values: vec![1.0; grid.len()] });
    }
    let origin = grid.origin_index();
    let half_cell = 0.5 * grid.dx();
    let mut values: Vec<f64> = (0..grid.len())
        .map(|j| {
            let x = grid.point(j);
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            r.powf(-gamma)
        })
        .collect();
    values[origin] = half_cell.powf(-gamma) * unit_cube_mean(grid.dim(), gamma)?;
    Ok(HardyWeight { grid, gamma, values })
}

fn check_weight_grid(u: &Field, w: &HardyWeight) -> Result<()> {
    if u.grid() != w.grid() {
        return Err(Error::GridMismatch("field and Hardy weight live on different grids".into()));
    }
    Ok(())
}

/// `w_j |u_j|^{p-1} u_j`, computed as `w_j sign(u_j) |u_j|^p`.
pub fn nonlinearity(u: &Field, p: f64, w: &HardyWeight) -> Result<Field> {
    check_weight_grid(u, w)?;
    if !(p > 1.0) {
        return Err(invalid(format!("power must exceed 1, got {p}")));
    }
    let values = u
        .values()
        .iter()
        .zip(w.values())
        .map(|(&v, &wj)| wj * power(v, p))
        .collect();
    Ok(Field::from_raw(*u.grid(), values))
}

#[inline]
pub(crate) fn power(v: f64, p: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else if p == 2.0 {
        v * v.abs()
    } else {
        v.signum() * v.abs().powf(p)
    }
}

/// `S(t) u = e^{-t (-Delta)^{theta/2}} (w u)`.
pub fn apply_s(u: &Field, t: f64, theta: f64, w: &HardyWeight) -> Result<Field> {
    check_weight_grid(u, w)?;
    if !(t > 0.0) {
        return Err(invalid(format!("weighted semigroup needs t > 0, got {t}")));
    }
    let weighted: Vec<f64> = u.values().iter().zip(w.values()).map(|(a, b)| a * b).collect();
    let m = SemigroupMultiplier::new(u.grid(), theta, t)?;
    Ok(m.apply(&Field::from_raw(*u.grid(), weighted)))
}

/// Checks `1 < p`, `1 < q <= inf` and `1/q < gamma/N + 1/p < 1`. With
/// `gamma = 0` the left inequality may hold with equality (`p = q`), where the
/// estimate reduces to contraction of the semigroup.
pub fn check_hardy_exponents(dim: usize, gamma: f64, p: f64, q: f64) -> Result<()> {
    if !(p > 1.0 && q > 1.0) {
        return Err(invalid(format!("weighted estimate needs p, q > 1, got p = {p}, q = {q}")));
    }
    let mid = gamma / dim as f64 + 1.0 / p;
    let lower_ok = reciprocal(q) < mid || (gamma == 0.0 && reciprocal(q) <= mid);
    if !(lower_ok && mid < 1.0) {
        return Err(invalid(format!(
            "need 1/q < gamma/N + 1/p < 1, got 1/q = {}, gamma/N + 1/p = {mid}",
            reciprocal(q)
        )));
    }
    Ok(())
}

/// Default trial fields for the weighted estimate: one bump with width in
/// `[L/16, L/4]` centered within `L/8`. The family is fixed in physical units
/// so results are comparable across grid resolutions.
pub fn hardy_family(half_period: f64) -> BumpFamily {
    BumpFamily {
        min_width: half_period / 16.0,
        max_width: half_period / 4.0,
        center_spread: half_period / 8.0,
        max_bumps: 1,
    }
}

/// Maximum over random fields and `t_list` of
/// `||S(t) phi||_q t^{(N/theta)(1/p - 1/q) + gamma/theta} / ||phi||_p`.
#[allow(clippy::too_many_arguments)]
pub fn verify_hardy_estimate(
    grid: SpatialGrid,
    theta: f64,
    gamma: f64,
    p: f64,
    q: f64,
    t_list: &[f64],
    trials: usize,
    seed: u64,
) -> Result<RatioReport> {
    let family = hardy_family(grid.half_period());
    verify_hardy_estimate_with(grid, family, theta, gamma, p, q, t_list, trials, seed)
}

#[allow(clippy::too_many_arguments)]
pub fn verify_hardy_estimate_with(
    grid: SpatialGrid,
    family: BumpFamily,
    theta: f64,
    gamma: f64,
    p: f64,
    q: f64,
    t_list: &[f64],
    trials: usize,
    seed: u64,
) -> Result<RatioReport> {
    check_theta(theta)?;
    check_hardy_exponents(grid.dim(), gamma, p, q)?;
    let weight = build_hardy_weight(grid, gamma)?;
    let exponent = grid.dim() as f64 / theta * (reciprocal(p) - reciprocal(q)) + gamma / theta;
    ratio_campaign(grid, family, t_list, trials, seed, |phi, t| {
        let out = apply_s(phi, t, theta, &weight)?;
        Ok(lebesgue_norm(&out, q)? * t.powf(exponent) / lebesgue_norm(phi, p)?)
    })
}
