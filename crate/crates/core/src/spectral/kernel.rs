//! The fractional heat kernel profile
//! `K_theta(x) = (2 pi)^{-N/2} int_{R^N} exp(i x.xi) exp(-|xi|^theta) dxi`
//! and quantities derived from it.

use std::f64::consts::PI;

use statrs::function::gamma::{gamma, gamma_ur};

use crate::error::{invalid, Result};
use crate::quad::{self, Tolerance};

/// Bound on the discarded spectral mass `int_{|xi| > R} exp(-|xi|^theta) dxi`.
pub const TAIL_BOUND: f64 = 1e-10;

fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(invalid(format!("kernel is implemented for N in {{1, 2, 3}}, got {dim}")))
    }
}

/// Surface area of the unit sphere in `R^N`.
pub(crate) fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

/// `int_{|xi| > R} exp(-|xi|^theta) dxi = |S^{N-1}| Gamma(N/theta, R^theta) / theta`.
pub fn spectral_tail(theta: f64, dim: usize, radius: f64) -> f64 {
    let a = dim as f64 / theta;
    sphere_area(dim) * gamma(a) * gamma_ur(a, radius.powf(theta)) / theta
}

/// Smallest truncation radius (to bisection precision) with tail below [`TAIL_BOUND`].
pub fn truncation_radius(theta: f64, dim: usize) -> f64 {
    let mut hi = 1.0;
    while spectral_tail(theta, dim, hi) >= TAIL_BOUND {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if spectral_tail(theta, dim, mid) >= TAIL_BOUND {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `J_0(z)` from `(1/pi) int_0^pi cos(z sin phi) dphi` by the periodic
/// trapezoid rule, which is exact up to `2 J_m(z)` with `m` nodes on the full
/// period.
pub(crate) fn bessel_j0(z: f64) -> f64 {
    let z = z.abs();
    let m = (z + 8.0 * z.cbrt() + 32.0).ceil() as usize * 2;
    let step = 2.0 * PI / m as f64;
    (0..m).map(|k| (z * (k as f64 * step).sin()).cos()).sum::<f64>() / m as f64
}

fn kernel_tolerance() -> Tolerance {
    Tolerance { abs: 1e-14, rel: 1e-12, max_intervals: 50_000 }
}

/// Radial profile `K_theta(r)`, `r = |x|`, in dimension `dim`.
pub fn eval_ktheta_radial(r: f64, theta: f64, dim: usize) -> Result<f64> {
    radial_transform(r, 1.0, theta, dim)
}

/// `E_theta(x, t) = (2 pi)^{-N/2} int exp(i x.xi) exp(-t |xi|^theta) dxi`,
/// evaluated directly rather than through the scaling law.
pub fn eval_heat_profile(x: &[f64], t: f64, theta: f64) -> Result<f64> {
    check_dim(x.len())?;
    if !(t > 0.0) {
        return Err(invalid(format!("heat profile needs t > 0, got {t}")));
    }
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    radial_transform(r, t, theta, x.len())
}

fn radial_transform(r: f64, t: f64, theta: f64, dim: usize) -> Result<f64> {
    super::check_theta(theta)?;
    check_dim(dim)?;
    let r = r.abs();
    let cutoff = truncation_radius(theta, dim) * t.powf(-1.0 / theta);
    let decay = move |rho: f64| (-t * rho.powf(theta)).exp();
    // Break at every half-period of the oscillation.
    let breaks: Vec<f64> = if r > 0.0 {
        let step = PI / r;
        let count = ((cutoff / step) as usize).min(20_000);
        (1..=count).map(|k| k as f64 * step).collect()
    } else {
        Vec::new()
    };
    let tol = kernel_tolerance();
    let est = match dim {
        1 => {
            let f = |rho: f64| (r * rho).cos() * decay(rho);
            let e = quad::integrate_with_breaks(f, 0.0, cutoff, &breaks, tol)?;
            2.0 * e.value / (2.0 * PI).sqrt()
        }
        2 => {
            let f = |rho: f64| rho * bessel_j0(r * rho) * decay(rho);
            quad::integrate_with_breaks(f, 0.0, cutoff, &breaks, tol)?.value
        }
        _ => {
            let f = |rho: f64| {
                let z = r * rho;
                let sinc = if z == 0.0 { 1.0 } else { z.sin() / z };
                rho * rho * sinc * decay(rho)
            };
            let e = quad::integrate_with_breaks(f, 0.0, cutoff, &breaks, tol)?;
            4.0 * PI * e.value / (2.0 * PI).powf(1.5)
        }
    };
    Ok(est)
}

/// `K_theta(x)`; the dimension is `x.len()`.
pub fn eval_ktheta(x: &[f64], theta: f64) -> Result<f64> {
    check_dim(x.len())?;
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    eval_ktheta_radial(r, theta, x.len())
}

/// `K_theta(0) = (2 pi)^{-N/2} |S^{N-1}| Gamma(N/theta) / theta`, which is also
/// `sup |K_theta|`.
pub fn ktheta_at_origin(theta: f64, dim: usize) -> f64 {
    (2.0 * PI).powf(-(dim as f64) / 2.0) * sphere_area(dim) * gamma(dim as f64 / theta) / theta
}

/// Logarithmic sample of `[0, radius]`: the origin, then `1e-3 * 10^{k/100}`,
/// then `radius`. Samples for nested radii are nested.
fn decay_sample(radius: f64) -> Vec<f64> {
    let mut xs = vec![0.0];
    let mut k = 0;
    loop {
        let x = 1e-3 * 10f64.powf(k as f64 / 100.0);
        if x >= radius {
            break;
        }
        xs.push(x);
        k += 1;
    }
    xs.push(radius);
    xs
}

/// `sup |K_theta(x)| (1 + |x|)^{N + theta}` over a logarithmic sample of
/// `|x| in [0, sample_radius]`.
pub fn decay_bound_certificate(theta: f64, dim: usize, sample_radius: f64) -> Result<f64> {
    if !(sample_radius > 0.0) {
        return Err(invalid(format!("sample radius must be positive, got {sample_radius}")));
    }
    let exponent = dim as f64 + theta;
    decay_sample(sample_radius).into_iter().try_fold(0.0f64, |sup, r| {
        let k = eval_ktheta_radial(r, theta, dim)?;
        Ok(sup.max(k.abs() * (1.0 + r).powf(exponent)))
    })
}

/// Gaussian-type decay rate for `theta = 2m`:
/// `kappa_m = (2m - 1) (2m)^{-2m/(2m-1)} sin(pi / (4m - 2))`.
pub fn kappa_m(m: u32) -> Result<f64> {
    if m == 0 {
        return Err(invalid("kappa_m needs m >= 1"));
    }
    let m = m as f64;
    let p = 2.0 * m - 1.0;
    Ok(p * (2.0 * m).powf(-2.0 * m / p) * (PI / (4.0 * m - 2.0)).sin())
}

fn l1_radius(dim: usize) -> f64 {
    if dim == 1 {
        64.0
    } else {
        16.0
    }
}

/// `||K_theta||_inf + ||K_theta||_1`.
///
/// The L1 norm is a radial quadrature of `|K_theta|` out to a fixed radius,
/// plus the tail of the fitted decay `A |x|^{-N-theta}`.
pub fn smoothing_constant(theta: f64, dim: usize) -> Result<f64> {
    super::check_theta(theta)?;
    check_dim(dim)?;
    let sup = eval_ktheta_radial(0.0, theta, dim)?;
    let r1 = l1_radius(dim);
    let breaks: Vec<f64> = (0..6).map(|k| 2f64.powi(k) * r1 / 64.0).collect();
    let mut failure = None;
    let integrand = |rho: f64| match eval_ktheta_radial(rho, theta, dim) {
        Ok(k) => k.abs() * rho.powi(dim as i32 - 1),
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let body = quad::integrate_with_breaks(integrand, 0.0, r1, &breaks, Tolerance::new(1e-12, 1e-10))?;
    if let Some(e) = failure {
        return Err(e);
    }
    let exponent = dim as f64 + theta;
    let amplitude = eval_ktheta_radial(r1, theta, dim)?.abs() * r1.powf(exponent);
    let tail = amplitude * r1.powf(-theta) / theta;
    Ok(sup + sphere_area(dim) * (body.value + tail))
}
