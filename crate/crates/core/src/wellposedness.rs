//! Admissibility of `(N, theta, gamma, p, q, H)`, the derived exponents
//! `r, sigma, a, b`, and the existence-time budget of the fixed-point argument.
//!
//! The inequalities are implemented once, generically over [`Scalar`]: `f64`
//! compares with a `1e-12` relative margin, [`BigRational`] compares exactly.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fbm::HurstParameter;

/// Relative margin for strict inequalities between floats.
pub const FLOAT_MARGIN: f64 = 1e-12;

pub trait Scalar: Num + Clone + PartialOrd + fmt::Display {
    fn int(v: i64) -> Self;
    /// Strict `a < b`.
    fn strictly_less(a: &Self, b: &Self) -> bool;
}

impl Scalar for f64 {
    fn int(v: i64) -> Self {
        v as f64
    }

    fn strictly_less(a: &Self, b: &Self) -> bool {
        b - a > FLOAT_MARGIN * a.abs().max(b.abs())
    }
}

impl Scalar for BigRational {
    fn int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn strictly_less(a: &Self, b: &Self) -> bool {
        a < b
    }
}

fn lt<T: Scalar>(a: &T, b: &T) -> bool {
    T::strictly_less(a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub dim: usize,
    pub theta: f64,
    pub gamma: f64,
    pub p: f64,
    pub q: f64,
    pub hurst: f64,
    #[serde(default = "one")]
    pub mu: f64,
}

fn one() -> f64 {
    1.0
}

impl ModelParams {
    pub fn hurst(&self) -> Result<HurstParameter> {
        HurstParameter::new(self.hurst)
    }
}

/// Rational counterpart of [`ModelParams`] (the amplitude plays no role in
/// admissibility).
#[derive(Debug, Clone, PartialEq)]
pub struct ExactParams {
    pub dim: u32,
    pub theta: BigRational,
    pub gamma: BigRational,
    pub p: BigRational,
    pub q: BigRational,
    pub hurst: BigRational,
}

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

impl ExactParams {
    /// Exact binary values of the floats. Fails for non-finite entries.
    pub fn from_params(params: &ModelParams) -> Result<Self> {
        let conv = |name: &str, v: f64| {
            BigRational::from_f64(v).ok_or_else(|| invalid(format!("{name} = {v} has no rational value")))
        };
        Ok(Self {
            dim: params.dim as u32,
            theta: conv("theta", params.theta)?,
            gamma: conv("gamma", params.gamma)?,
            p: conv("p", params.p)?,
            q: conv("q", params.q)?,
            hurst: conv("hurst", params.hurst)?,
        })
    }
}

/// `r, sigma, a, b` and the slack quantities of the fixed-point estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exponents<T> {
    pub r: T,
    pub sigma: T,
    pub a: T,
    pub b: T,
    pub a_plus_b_minus_1: T,
    pub a_minus_p_sigma: T,
    pub a_minus_sigma: T,
    pub a_plus_sigma: T,
    /// `1 + (1 - p) sigma - N (p - 1) / (r theta) - gamma / theta`.
    pub third_condition: T,
}

pub type DerivedExponents = Exponents<f64>;
pub type ExactExponents = Exponents<BigRational>;

impl<T: Scalar> Exponents<T> {
    /// The six quantities that must be positive: `sigma, a, b, a+b-1, a-p sigma, a-sigma`.
    pub fn positivity_slacks(&self) -> [(&'static str, T); 6] {
        [
            ("sigma", self.sigma.clone()),
            ("a", self.a.clone()),
            ("b", self.b.clone()),
            ("a+b-1", self.a_plus_b_minus_1.clone()),
            ("a-p*sigma", self.a_minus_p_sigma.clone()),
            ("a-sigma", self.a_minus_sigma.clone()),
        ]
    }

    pub fn all_positive(&self) -> bool {
        self.positivity_slacks().iter().all(|(_, v)| lt(&T::zero(), v))
    }
}

impl ExactExponents {
    pub fn to_f64(&self) -> DerivedExponents {
        let f = |v: &BigRational| num_traits::ToPrimitive::to_f64(v).unwrap_or(f64::NAN);
        Exponents {
            r: f(&self.r),
            sigma: f(&self.sigma),
            a: f(&self.a),
            b: f(&self.b),
            a_plus_b_minus_1: f(&self.a_plus_b_minus_1),
            a_minus_p_sigma: f(&self.a_minus_p_sigma),
            a_minus_sigma: f(&self.a_minus_sigma),
            a_plus_sigma: f(&self.a_plus_sigma),
            third_condition: f(&self.third_condition),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Admissibility<T> {
    Accepted { exponents: Exponents<T> },
    Rejected { reasons: Vec<String> },
}

impl<T> Admissibility<T> {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Admissibility::Accepted { .. })
    }

    pub fn reasons(&self) -> &[String] {
        match self {
            Admissibility::Accepted { .. } => &[],
            Admissibility::Rejected { reasons } => reasons,
        }
    }

    pub fn exponents(&self) -> Option<&Exponents<T>> {
        match self {
            Admissibility::Accepted { exponents } => Some(exponents),
            Admissibility::Rejected { .. } => None,
        }
    }
}

pub const P_GT_1: &str = "p > 1";
pub const TWO_THETA_GT_1: &str = "2θ > 1";
pub const GAMMA_POSITIVE: &str = "γ > 0";
pub const GAMMA_BELOW: &str = "γ < min(θ,N)";
pub const H_ABOVE_INV_Q: &str = "H > 1/q";
pub const H_ABOVE_N_2THETA: &str = "H > N/(2θ)";
pub const H_ABOVE_HALF: &str = "H > 1/2";
pub const H_BELOW_ONE: &str = "H < 1";
pub const Q_ABOVE_HARDY: &str = "q > Np/(N−γ)";
pub const Q_ABOVE_SMOOTHING: &str = "q > N(p−1)/(θ−γ)";
pub const Q_FINITE: &str = "q < ∞";
pub const R_WINDOW_LOWER: &str = "1/r > (1/p)(1/q − γ/N)";
pub const R_WINDOW_UPPER: &str = "1/r < 1/q";
pub const B_POSITIVE: &str = "1 − pσ > 0";
pub const SECOND_CONDITION: &str = "a − pσ > 0";
pub const THIRD_CONDITION: &str = "1 + (1−p)σ − N(p−1)/(rθ) − γ/θ > 0";

/// Parameters with `q` carried as `1/q` so that `q = inf` is representable.
struct Inputs<T> {
    n: T,
    theta: T,
    gamma: T,
    p: T,
    q_inv: T,
    h: T,
}

fn hypotheses<T: Scalar>(x: &Inputs<T>) -> Vec<(&'static str, bool)> {
    let zero = T::zero();
    let one = T::one();
    let two = T::int(2);
    vec![
        (P_GT_1, lt(&one, &x.p)),
        (TWO_THETA_GT_1, lt(&one, &(two.clone() * x.theta.clone()))),
        (GAMMA_POSITIVE, lt(&zero, &x.gamma)),
        (GAMMA_BELOW, lt(&x.gamma, &x.theta) && lt(&x.gamma, &x.n)),
        (H_ABOVE_INV_Q, lt(&x.q_inv, &x.h)),
        (H_ABOVE_N_2THETA, lt(&x.n, &(two.clone() * x.theta.clone() * x.h.clone()))),
        (H_ABOVE_HALF, lt(&one, &(two * x.h.clone()))),
        (H_BELOW_ONE, lt(&x.h, &one)),
        // The q thresholds are only meaningful once gamma < N and gamma < theta;
        // otherwise the violation is reported under GAMMA_BELOW alone.
        (
            Q_ABOVE_HARDY,
            !lt(&x.gamma, &x.n)
                || lt(&(x.q_inv.clone() * x.n.clone() * x.p.clone()), &(x.n.clone() - x.gamma.clone())),
        ),
        (
            Q_ABOVE_SMOOTHING,
            !lt(&x.gamma, &x.theta)
                || lt(&(x.q_inv.clone() * x.n.clone() * (x.p.clone() - one)), &(x.theta.clone() - x.gamma.clone())),
        ),
        (Q_FINITE, lt(&zero, &x.q_inv)),
    ]
}

fn derive<T: Scalar>(x: &Inputs<T>, r_inv: T) -> Exponents<T> {
    let one = T::one();
    let n_theta = x.n.clone() / x.theta.clone();
    let gamma_theta = x.gamma.clone() / x.theta.clone();
    let sigma = n_theta.clone() * (x.q_inv.clone() - r_inv.clone());
    let a = one.clone() - n_theta * (x.p.clone() * r_inv.clone() - x.q_inv.clone()) - gamma_theta.clone();
    let p_sigma = x.p.clone() * sigma.clone();
    let b = one.clone() - p_sigma.clone();
    let third = one.clone() + (one.clone() - x.p.clone()) * sigma.clone()
        - x.n.clone() * (x.p.clone() - one.clone()) * r_inv.clone() / x.theta.clone()
        - gamma_theta;
    Exponents {
        r: one.clone() / r_inv,
        a_plus_b_minus_1: a.clone() + b.clone() - one,
        a_minus_p_sigma: a.clone() - p_sigma,
        a_minus_sigma: a.clone() - sigma.clone(),
        a_plus_sigma: a.clone() + sigma.clone(),
        third_condition: third,
        sigma,
        a,
        b,
    }
}

fn r_window<T: Scalar>(x: &Inputs<T>, r_inv: &T) -> Vec<(&'static str, bool)> {
    let lower = (x.q_inv.clone() - x.gamma.clone() / x.n.clone()) / x.p.clone();
    vec![(R_WINDOW_LOWER, lt(&lower, r_inv)), (R_WINDOW_UPPER, lt(r_inv, &x.q_inv))]
}

fn lemma_conditions<T: Scalar>(e: &Exponents<T>) -> Vec<(&'static str, bool)> {
    let zero = T::zero();
    vec![
        (B_POSITIVE, lt(&zero, &e.b)),
        (SECOND_CONDITION, lt(&zero, &e.a_minus_p_sigma)),
        (THIRD_CONDITION, lt(&zero, &e.third_condition)),
    ]
}

fn violated(list: Vec<(&'static str, bool)>) -> Vec<String> {
    list.into_iter().filter(|(_, ok)| !ok).map(|(name, _)| name.to_string()).collect()
}

/// `1/r` for the default `r = 2pq/(p+1)`.
fn default_r_inv<T: Scalar>(x: &Inputs<T>) -> T {
    x.q_inv.clone() * (x.p.clone() + T::one()) / (T::int(2) * x.p.clone())
}

fn check_generic<T: Scalar>(x: &Inputs<T>) -> Admissibility<T> {
    let reasons = violated(hypotheses(x));
    if !reasons.is_empty() {
        return Admissibility::Rejected { reasons };
    }
    let r_inv = default_r_inv(x);
    let e = derive(x, r_inv.clone());
    let mut reasons = violated(r_window(x, &r_inv));
    reasons.extend(violated(lemma_conditions(&e)));
    if reasons.is_empty() {
        Admissibility::Accepted { exponents: e }
    } else {
        Admissibility::Rejected { reasons }
    }
}

fn float_inputs(params: &ModelParams) -> Inputs<f64> {
    Inputs {
        n: params.dim as f64,
        theta: params.theta,
        gamma: params.gamma,
        p: params.p,
        q_inv: 1.0 / params.q,
        h: params.hurst,
    }
}

/// Accepts iff the hypotheses of the local existence theorem hold and the
/// default `r` satisfies the window and the three positivity conditions.
/// Rejection lists every violated inequality by name. Conditions on `r` are
/// only examined once the hypotheses hold.
pub fn check_admissible(params: &ModelParams) -> Admissibility<f64> {
    let finite = [params.theta, params.gamma, params.p, params.hurst].iter().all(|v| v.is_finite())
        && !params.q.is_nan();
    if !finite || params.dim == 0 {
        return Admissibility::Rejected { reasons: vec!["parameters must be finite with N >= 1".into()] };
    }
    check_generic(&float_inputs(params))
}

pub fn check_admissible_exact(params: &ExactParams) -> Admissibility<BigRational> {
    if params.dim == 0 {
        return Admissibility::Rejected { reasons: vec!["parameters must be finite with N >= 1".into()] };
    }
    if params.q.is_zero() || params.p.is_zero() || params.theta.is_zero() {
        return Admissibility::Rejected { reasons: vec!["p, q and θ must be non-zero".into()] };
    }
    let x = Inputs {
        n: BigRational::int(params.dim as i64),
        theta: params.theta.clone(),
        gamma: params.gamma.clone(),
        p: params.p.clone(),
        q_inv: params.q.recip(),
        h: params.hurst.clone(),
    };
    check_generic(&x)
}

/// `r = 2pq/(p+1)`.
pub fn default_r(p: f64, q: f64) -> f64 {
    2.0 * p * q / (p + 1.0)
}

/// Exponents for an arbitrary `r` in the window `(1/p)(1/q - gamma/N) < 1/r < 1/q`.
pub fn exponents(params: &ModelParams, r: f64) -> Result<DerivedExponents> {
    if !(r > 1.0 && r.is_finite()) {
        return Err(invalid(format!("r must lie in (1, inf), got {r}")));
    }
    let x = float_inputs(params);
    let r_inv = 1.0 / r;
    let bad = violated(r_window(&x, &r_inv));
    if !bad.is_empty() {
        return Err(invalid(format!("r = {r} violates {}", bad.join(", "))));
    }
    Ok(derive(&x, r_inv))
}

/// Exponents for `r` without any admissibility check, for runs outside the
/// theorem's hypotheses.
pub fn exponents_unchecked(params: &ModelParams, r: f64) -> DerivedExponents {
    derive(&float_inputs(params), 1.0 / r)
}

/// The wider bounds on `1/r` implied by the window, as `(lower, upper)`.
pub fn r_inverse_bounds(params: &ModelParams) -> (f64, f64) {
    let n = params.dim as f64;
    let (p, q, g, th) = (params.p, params.q, params.gamma, params.theta);
    let lower = (1.0 / q - g / n).max(p / q - th / n) / p;
    let upper = (1.0 - g / n).min(1.0 / q - g / n + th / n).min(p / q) / p;
    (lower, upper)
}

pub fn beta_function(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(invalid(format!("Beta function needs positive arguments, got ({a}, {b})")));
    }
    Ok(statrs::function::beta::beta(a, b))
}

/// `lambda(T) = C p M^{p-1} (T^{a - p sigma} + T^{a + sigma})`.
pub fn contraction_factor(exps: &DerivedExponents, p: f64, c_hardy: f64, radius: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    c_hardy * p * radius.powf(p - 1.0) * (t.powf(exps.a_minus_p_sigma) + t.powf(exps.a_plus_sigma))
}

/// Number of halvings searched: `T in {2^-j : j = 0..=SEARCH_DEPTH}`.
pub const SEARCH_DEPTH: i32 = 40;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionBudget {
    pub kappa: f64,
    pub ball_radius: f64,
    pub c_hardy: f64,
    pub contraction: f64,
    pub horizon: f64,
    /// Left side of the self-map inequality at the admitted horizon.
    pub self_map_bound: f64,
    pub diagnostics: Vec<String>,
}

impl ContractionBudget {
    pub fn is_degenerate(&self) -> bool {
        self.horizon == 0.0
    }
}

/// Largest `T = 2^-j` with
/// `K ||u0|| + K(T) + C M^p T^{a+b-1} max(B(a,b), B(a-sigma,b)) <= M` and
/// `lambda(T) < 1`, where `M = 2 K ||u0|| + 1`.
pub fn existence_budget(
    params: &ModelParams,
    exps: &DerivedExponents,
    kappa: f64,
    c_hardy: f64,
    u0_norm: f64,
    k_of_t: impl Fn(f64) -> f64,
) -> Result<ContractionBudget> {
    if !(kappa >= 0.0 && c_hardy >= 0.0 && u0_norm >= 0.0) {
        return Err(invalid("smoothing constant, Hardy constant and data norm must be non-negative"));
    }
    if !exps.all_positive() {
        return Err(invalid("exponents are not admissible"));
    }
    let p = params.p;
    let radius = 2.0 * kappa * u0_norm + 1.0;
    let beta = beta_function(exps.a, exps.b)?.max(beta_function(exps.a_minus_sigma, exps.b)?);
    let self_map = |t: f64| {
        kappa * u0_norm + k_of_t(t) + c_hardy * radius.powf(p) * t.powf(exps.a_plus_b_minus_1) * beta
    };
    let mut diagnostics = Vec::new();
    for j in 0..=SEARCH_DEPTH {
        let t = 2f64.powi(-j);
        let bound = self_map(t);
        let lambda = contraction_factor(exps, p, c_hardy, radius, t);
        if bound <= radius && lambda < 1.0 {
            return Ok(ContractionBudget {
                kappa,
                ball_radius: radius,
                c_hardy,
                contraction: lambda,
                horizon: t,
                self_map_bound: bound,
                diagnostics,
            });
        }
        if j == SEARCH_DEPTH {
            diagnostics.push(format!(
                "no admissible horizon down to T = 2^-{SEARCH_DEPTH}: self-map bound {bound:.6e} vs M = {radius:.6e}, lambda = {lambda:.6e}"
            ));
        }
    }
    Ok(ContractionBudget {
        kappa,
        ball_radius: radius,
        c_hardy,
        contraction: 0.0,
        horizon: 0.0,
        self_map_bound: self_map(0.0),
        diagnostics,
    })
}

/// Shortest decimal-free rendering of a rational, e.g. `17/24` or `8`.
pub fn format_ratio(v: &BigRational) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else if v.is_negative() {
        format!("-{}/{}", v.numer().abs(), v.denom())
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{self, Tolerance};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    pub(crate) fn example() -> ModelParams {
        ModelParams { dim: 1, theta: 2.0, gamma: 0.5, p: 2.0, q: 6.0, hurst: 0.75, mu: 1.0 }
    }

    fn exact_example() -> ExactParams {
        ExactParams {
            dim: 1,
            theta: ratio(2, 1),
            gamma: ratio(1, 2),
            p: ratio(2, 1),
            q: ratio(6, 1),
            hurst: ratio(3, 4),
        }
    }

    #[test]
    fn example_tuple_exact() {
        let verdict = check_admissible_exact(&exact_example());
        let e = verdict.exponents().expect("accepted");
        assert_eq!(e.r, ratio(8, 1));
        assert_eq!(e.sigma, ratio(1, 48));
        assert_eq!(e.a, ratio(17, 24));
        assert_eq!(e.b, ratio(23, 24));
        assert_eq!(e.a_plus_b_minus_1, ratio(2, 3));
        assert_eq!(e.a_minus_p_sigma, ratio(2, 3));
        assert_eq!(e.third_condition, ratio(2, 3));
        assert!(e.all_positive());
        assert_eq!(format_ratio(&e.sigma), "1/48");
        assert_eq!(format_ratio(&e.r), "8");
    }

    #[test]
    fn example_tuple_float_matches_exact() {
        let e = check_admissible(&example()).exponents().cloned().expect("accepted");
        let x = check_admissible_exact(&ExactParams::from_params(&example()).unwrap());
        let exact = x.exponents().unwrap().to_f64();
        assert_relative_eq!(e.sigma, exact.sigma, max_relative = 1e-15);
        assert_relative_eq!(e.a, 17.0 / 24.0, max_relative = 1e-15);
        assert_relative_eq!(e.b, 23.0 / 24.0, max_relative = 1e-15);
        assert_eq!(e.r, 8.0);
    }

    #[test]
    fn rejections_from_spec_examples() {
        let mut p = example();
        p.gamma = 1.2;
        assert_eq!(check_admissible(&p).reasons(), [GAMMA_BELOW]);
        let mut p = example();
        p.hurst = 0.3;
        assert_eq!(check_admissible(&p).reasons(), [H_ABOVE_HALF]);
    }

    #[test]
    fn single_violations_are_named_exactly() {
        let base = example();
        let cases: Vec<(ModelParams, &str)> = vec![
            (ModelParams { p: 0.9, q: 100.0, ..base }, P_GT_1),
            (ModelParams { gamma: 0.0, ..base }, GAMMA_POSITIVE),
            (ModelParams { dim: 3, theta: 3.0, gamma: 0.1, p: 1.2, q: 1.7, hurst: 0.55, ..base }, H_ABOVE_INV_Q),
            (ModelParams { theta: 0.8, gamma: 0.1, hurst: 0.6, ..base }, H_ABOVE_N_2THETA),
            (ModelParams { hurst: 0.5, ..base }, H_ABOVE_HALF),
            (ModelParams { hurst: 1.0, ..base }, H_BELOW_ONE),
            (ModelParams { q: 3.5, ..base }, Q_ABOVE_HARDY),
            (ModelParams { theta: 0.55, gamma: 0.3, q: 3.5, hurst: 0.95, ..base }, Q_ABOVE_SMOOTHING),
            (ModelParams { q: f64::INFINITY, ..base }, Q_FINITE),
        ];
        for (params, name) in cases {
            assert_eq!(check_admissible(&params).reasons(), [name], "{params:?}");
        }
    }

    #[test]
    fn default_r_examples() {
        assert_eq!(default_r(2.0, 6.0), 8.0);
        assert_eq!(default_r(3.0, 4.0), 6.0);
    }

    #[test]
    fn exponents_window() {
        let p = example();
        assert!(exponents(&p, 8.0).is_ok());
        assert!(exponents(&p, 6.0).is_err());
        assert!(exponents(&p, 5.0).is_err());
        // lower bound on 1/r is (1/2)(1/6 - 1/2) < 0, so any r > 6 is inside
        assert!(exponents(&p, 1e6).is_ok());
        let e = exponents(&ModelParams { gamma: 1e-9, ..p }, 6.0 * (1.0 + 1e-6)).unwrap();
        assert!(e.sigma.abs() < 1e-7);
        assert!((e.b - 1.0).abs() < 1e-6);
    }

    #[test]
    fn r_inverse_bounds_contain_default() {
        let p = example();
        let (lo, hi) = r_inverse_bounds(&p);
        assert!(lo < 1.0 / 8.0 && 1.0 / 8.0 < hi);
    }

    #[test]
    fn beta_examples() {
        assert_relative_eq!(beta_function(1.0, 1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(beta_function(0.5, 0.5).unwrap(), std::f64::consts::PI, max_relative = 1e-13);
        let oracle = |a: f64, b: f64| {
            let f = |x: f64| x.powf(a - 1.0) * (1.0 - x).powf(b - 1.0);
            quad::integrate(f, 0.0, 1.0, Tolerance::new(1e-13, 1e-12)).unwrap().value
        };
        let (a, b) = (17.0 / 24.0, 23.0 / 24.0);
        assert_relative_eq!(beta_function(a, b).unwrap(), oracle(a, b), max_relative = 1e-8);
        assert_relative_eq!(beta_function(a, b).unwrap(), 1.4602700431548217, max_relative = 1e-12);
        assert!(beta_function(0.0, 1.0).is_err());
    }

    #[test]
    fn budget_with_zero_data() {
        let p = example();
        let e = check_admissible(&p).exponents().cloned().unwrap();
        let b = existence_budget(&p, &e, 3.2, 0.0, 0.0, |_| 0.0).unwrap();
        assert_eq!(b.horizon, 1.0);
        assert_eq!(b.contraction, 0.0);
        let lambdas: Vec<f64> = (0..10).map(|j| contraction_factor(&e, 2.0, 1.0, 1.0, 2f64.powi(-j))).collect();
        assert!(lambdas.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn budget_for_example_tuple() {
        let p = example();
        let e = check_admissible(&p).exponents().cloned().unwrap();
        let kappa = 3.2137350558175477;
        let b = existence_budget(&p, &e, kappa, 1.0, 1.0, |_| 0.0).unwrap();
        assert!(b.horizon > 0.0 && b.contraction < 1.0);
        assert_relative_eq!(b.ball_radius, 2.0 * kappa + 1.0);
        assert!(contraction_factor(&e, 2.0, 1.0, b.ball_radius, b.horizon / 2.0) < b.contraction);
        // Shrinking T by (target/lambda)^{1/(a - p sigma)} scales the leading
        // term exactly and the other one by less.
        let target = 0.5 * b.contraction;
        let t = b.horizon * (target / b.contraction).powf(1.0 / e.a_minus_p_sigma);
        assert!(contraction_factor(&e, 2.0, 1.0, b.ball_radius, t) < target + 1e-6);
    }

    #[test]
    fn degenerate_budget() {
        let p = example();
        let e = check_admissible(&p).exponents().cloned().unwrap();
        let b = existence_budget(&p, &e, 1.0, 1.0, 1.0, |_| 1e9).unwrap();
        assert!(b.is_degenerate());
        assert_eq!(b.diagnostics.len(), 1);
    }

    #[test]
    fn monotone_in_q() {
        let p = ModelParams { q: 3.5, ..example() };
        assert!(check_admissible(&p).reasons().contains(&Q_ABOVE_HARDY.to_string()));
        let p = ModelParams { q: 4.0 + 1e-6, ..example() };
        assert!(!check_admissible(&p).reasons().contains(&Q_ABOVE_HARDY.to_string()));
    }

    /// Maps unit-interval coordinates to a tuple strictly inside the hypotheses.
    pub(crate) fn admissible_tuple(u: [f64; 6]) -> ModelParams {
        let dim = 1 + (u[0] * 3.0).floor().min(2.0) as usize;
        let n = dim as f64;
        let theta = n / 2.0 * (1.0 + 0.02 + 3.0 * u[1]);
        let gamma = theta.min(n) * (0.01 + 0.98 * u[2]);
        let p = 1.0 + 0.01 + 5.0 * u[3];
        let q_lo = (n * p / (n - gamma)).max(n * (p - 1.0) / (theta - gamma));
        let q = q_lo * (1.0 + 0.001 + 3.0 * u[4]);
        let h_lo = (1.0 / q).max(n / (2.0 * theta)).max(0.5);
        let hurst = h_lo + (1.0 - h_lo) * (0.01 + 0.98 * u[5]);
        ModelParams { dim, theta, gamma, p, q, hurst, mu: 1.0 }
    }

    proptest! {
        #[test]
        fn admissible_tuples_have_positive_slacks(u in proptest::array::uniform6(0.0f64..1.0)) {
            let params = admissible_tuple(u);
            let verdict = check_admissible(&params);
            let e = verdict.exponents().expect("accepted");
            prop_assert!(e.all_positive());
            let (lo, hi) = r_inverse_bounds(&params);
            prop_assert!(lo < 1.0 / e.r && 1.0 / e.r < hi);
        }

        #[test]
        fn beta_is_symmetric(a in 0.05f64..5.0, b in 0.05f64..5.0) {
            let x = beta_function(a, b).unwrap();
            let y = beta_function(b, a).unwrap();
            prop_assert!((x - y).abs() <= 1e-14 * x.abs());
        }
    }
}
