//! Closed-form recovery factors, error-bound constants and coherence
//! conditions.
//!
//! For sparsity `k ≥ 2` and effective coherence `μ_eff` (μ for the ℓ1
//! models, `d·μ_B` for the block model) the cone factors are
//!
//! ```text
//! α₁ = √(1 + (k−1)μ_eff) / (1 − (k−1)μ_eff)
//! α₂ = √k·μ_eff / (1 − (k−1)μ_eff)
//! ```
//!
//! and under `μ_eff < 1/(2k−1)` the recovery error obeys
//! `meas ≤ C₁·tail + C₂`, `‖x♯ − x‖₂ ≤ C₃·tail + C₄`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `f_a(x) = a·x² + 3√a·x + 3`.
pub fn f_func(a: f64, x: f64) -> f64 {
    a * x * x + 3.0 * a.sqrt() * x + 3.0
}

/// `g_a(x) = 2a·x² + 4√a·x + 1`.
pub fn g_func(a: f64, x: f64) -> f64 {
    2.0 * a * x * x + 4.0 * a.sqrt() * x + 1.0
}

fn two_k_minus_one(k: usize) -> f64 {
    (2 * k) as f64 - 1.0
}

/// `μ < 1/(2k−1)`.
pub fn sharp_condition(k: usize, mu: f64) -> bool {
    k >= 1 && mu < 1.0 / two_k_minus_one(k)
}

/// `μ ≤ 1/(2k−1)`.
pub fn sharp_condition_nonstrict(k: usize, mu: f64) -> bool {
    k >= 1 && mu <= 1.0 / two_k_minus_one(k)
}

/// `μ_B < 1/((2k−1)d)`.
pub fn block_condition(k: usize, d: usize, mu_b: f64) -> bool {
    k >= 1 && d >= 1 && mu_b < 1.0 / (two_k_minus_one(k) * d as f64)
}

/// `μ_B ≤ 1/((2k−1)d)`.
pub fn block_condition_nonstrict(k: usize, d: usize, mu_b: f64) -> bool {
    k >= 1 && d >= 1 && mu_b <= 1.0 / (two_k_minus_one(k) * d as f64)
}

fn eldar_threshold(k: usize, d: usize, nu: f64) -> f64 {
    (1.0 - (d as f64 - 1.0) * nu) / (two_k_minus_one(k) * d as f64)
}

/// `μ_B ≤ (1 − (d−1)ν)/((2k−1)d)` (non-strict, as originally stated).
pub fn eldar_condition(k: usize, d: usize, mu_b: f64, nu: f64) -> bool {
    k >= 1 && d >= 1 && mu_b <= eldar_threshold(k, d, nu)
}

/// Strict form of [`eldar_condition`].
pub fn eldar_condition_strict(k: usize, d: usize, mu_b: f64, nu: f64) -> bool {
    k >= 1 && d >= 1 && mu_b < eldar_threshold(k, d, nu)
}

/// `μ < 2/(√3(5k−2))`.
///
/// The stricter form `μ ≤ 1/(√3(5k−2))` is [`li_chen_condition_prose`].
pub fn li_chen_condition(k: usize, mu: f64) -> bool {
    k >= 1 && mu < 2.0 / (3f64.sqrt() * ((5 * k) as f64 - 2.0))
}

/// `μ ≤ 1/(√3(5k−2))`.
pub fn li_chen_condition_prose(k: usize, mu: f64) -> bool {
    k >= 1 && mu <= 1.0 / (3f64.sqrt() * ((5 * k) as f64 - 2.0))
}

/// Cone factors for a given sparsity and effective coherence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarFactors {
    pub k: usize,
    pub mu_eff: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

/// Requires `k ≥ 2` and `0 ≤ μ_eff < 1/(k−1)`.
pub fn factors(k: usize, mu_eff: f64) -> Result<ScalarFactors> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be >= 2, got {k}")));
    }
    if !(mu_eff >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "coherence must be nonnegative, got {mu_eff}"
        )));
    }
    let spread = (k - 1) as f64 * mu_eff;
    if spread >= 1.0 {
        return Err(Error::ConditionViolated(format!(
            "mu >= 1/(k-1) (mu = {mu_eff}, k = {k})"
        )));
    }
    let denom = 1.0 - spread;
    Ok(ScalarFactors {
        k,
        mu_eff,
        alpha1: (1.0 + spread).sqrt() / denom,
        alpha2: (k as f64).sqrt() * mu_eff / denom,
    })
}

/// Coefficient in front of `g_k(α₂)ε` inside C₄.
///
/// `Statement` uses 1 and `Proof` uses 2; the default is the larger one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum C4Variant {
    Statement,
    #[default]
    Proof,
}

impl C4Variant {
    pub fn coefficient(self) -> f64 {
        match self {
            C4Variant::Statement => 1.0,
            C4Variant::Proof => 2.0,
        }
    }
}

impl fmt::Display for C4Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            C4Variant::Statement => "statement",
            C4Variant::Proof => "proof",
        })
    }
}

impl FromStr for C4Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "statement" => Ok(C4Variant::Statement),
            "proof" => Ok(C4Variant::Proof),
            other => Err(Error::InvalidArgument(format!(
                "variant must be \"statement\" or \"proof\", got {other:?}"
            ))),
        }
    }
}

/// Error-bound constants for one `(k, μ_eff, λ, ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "C3")]
    pub c3: f64,
    #[serde(rename = "C4")]
    pub c4: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub k: usize,
    pub mu_eff: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub variant: C4Variant,
}

impl BoundSet {
    /// `C₁·tail + C₂`.
    pub fn measurement_bound(&self, tail: f64) -> f64 {
        self.c1 * tail + self.c2
    }

    /// `C₃·tail + C₄`.
    pub fn signal_bound(&self, tail: f64) -> f64 {
        self.c3 * tail + self.c4
    }
}

fn check_lambda_epsilon(lambda: f64, epsilon: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be nonnegative, got {epsilon}"
        )));
    }
    Ok(())
}

fn constants(f: ScalarFactors, lambda: f64, epsilon: f64, variant: C4Variant) -> BoundSet {
    let k = f.k as f64;
    let sk = k.sqrt();
    let (a1, a2) = (f.alpha1, f.alpha2);
    let fk = f_func(k, a2);
    let gk = g_func(k, a2);
    let gap = 1.0 - sk * a2;
    let s = sk * a1 * lambda + epsilon;
    BoundSet {
        c1: 2.0 * lambda / s,
        c2: 2.0 * s,
        c3: (2.0 * sk * a1 * fk * lambda + 2.0 * gk * epsilon) / (sk * gap * s),
        c4: (sk * a1 * (5.0 + 2.0 * sk * a2) * lambda + variant.coefficient() * gk * epsilon) * s
            / (sk * gap * lambda),
        alpha1: a1,
        alpha2: a2,
        k: f.k,
        mu_eff: f.mu_eff,
        lambda,
        epsilon,
        variant,
    }
}

fn require_k(k: usize) -> Result<()> {
    if k < 2 {
        Err(Error::InvalidArgument(format!("k must be >= 2, got {k}")))
    } else {
        Ok(())
    }
}

/// Constants for the ℓ2-noise Lasso guarantee; also used for the
/// DS-regularized model, whose guarantee has the same constants.
pub fn theorem1_bounds(
    k: usize,
    mu: f64,
    lambda: f64,
    epsilon: f64,
    variant: C4Variant,
) -> Result<BoundSet> {
    require_k(k)?;
    check_lambda_epsilon(lambda, epsilon)?;
    if !sharp_condition(k, mu) {
        return Err(Error::ConditionViolated("mu >= 1/(2k-1)".into()));
    }
    Ok(constants(factors(k, mu)?, lambda, epsilon, variant))
}

/// Constants for the group Lasso guarantee: the same formulas with
/// `μ_eff = d·μ_B`.
pub fn theorem3_bounds(
    k: usize,
    d: usize,
    mu_b: f64,
    lambda: f64,
    epsilon: f64,
    variant: C4Variant,
) -> Result<BoundSet> {
    require_k(k)?;
    if d == 0 {
        return Err(Error::InvalidArgument("block size must be >= 1".into()));
    }
    check_lambda_epsilon(lambda, epsilon)?;
    if !block_condition(k, d, mu_b) {
        return Err(Error::ConditionViolated("mu_b >= 1/((2k-1)d)".into()));
    }
    Ok(constants(factors(k, d as f64 * mu_b)?, lambda, epsilon, variant))
}

/// The ε = λ specialization `Ĉ₁..Ĉ₄`, evaluated from its own closed forms.
///
/// The returned set has `lambda = epsilon = 1`; measurement and signal
/// bounds at noise level λ read `Ĉ₁·tail + Ĉ₂·λ` and `Ĉ₃·tail + Ĉ₄·λ`.
pub fn corollary1_bounds(k: usize, mu: f64, variant: C4Variant) -> Result<BoundSet> {
    require_k(k)?;
    if !sharp_condition(k, mu) {
        return Err(Error::ConditionViolated("mu >= 1/(2k-1)".into()));
    }
    let f = factors(k, mu)?;
    let kf = k as f64;
    let sk = kf.sqrt();
    let (a1, a2) = (f.alpha1, f.alpha2);
    let p = sk * a1 + 1.0;
    let gap = 1.0 - sk * a2;
    let gk = g_func(kf, a2);
    Ok(BoundSet {
        c1: 2.0 / p,
        c2: 2.0 * p,
        c3: (2.0 * sk * a1 * f_func(kf, a2) + 2.0 * gk) / (sk * gap * p),
        c4: (sk * a1 * (5.0 + 2.0 * sk * a2) + variant.coefficient() * gk) / (sk * gap / p),
        alpha1: a1,
        alpha2: a2,
        k,
        mu_eff: mu,
        lambda: 1.0,
        epsilon: 1.0,
        variant,
    })
}

/// Simple upper envelopes of `Ĉ₁..Ĉ₄`:
/// `2/√k`, `2(√6+1)√k`, `14√6/(√k(1−(2k−1)μ))`, `7(√6+1)²√k/(1−(2k−1)μ)`.
pub fn remark2_envelopes(k: usize, mu: f64) -> Result<[f64; 4]> {
    require_k(k)?;
    if !sharp_condition(k, mu) {
        return Err(Error::ConditionViolated("mu >= 1/(2k-1)".into()));
    }
    let sk = (k as f64).sqrt();
    let s6 = 6f64.sqrt();
    let gap = 1.0 - two_k_minus_one(k) * mu;
    Ok([
        2.0 / sk,
        2.0 * (s6 + 1.0) * sk,
        14.0 * s6 / (sk * gap),
        7.0 * (s6 + 1.0).powi(2) * sk / gap,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn f_and_g_values() {
        assert_eq!(f_func(1.0, 0.0), 3.0);
        assert_eq!(g_func(1.0, 0.0), 1.0);
        assert_eq!(f_func(4.0, 1.0), 13.0);
        assert_abs_diff_eq!(f_func(2.0, 0.5), 5.621320343559642, epsilon = 1e-14);
        assert_abs_diff_eq!(g_func(2.0, 0.5), 1.0 + 2.0 * 2f64.sqrt() + 1.0, epsilon = 1e-14);
    }

    #[test]
    fn condition_boundaries() {
        assert!(sharp_condition(2, 0.33));
        assert!(!sharp_condition(2, 1.0 / 3.0));
        assert!(sharp_condition_nonstrict(2, 1.0 / 3.0));
        assert!(li_chen_condition(2, 0.14));
        assert!(!li_chen_condition(2, 0.15));
        assert!(!li_chen_condition(2, 0.2));
        assert!(sharp_condition(2, 0.2));
        assert!(!block_condition(2, 2, 1.0 / 6.0));
        assert!(block_condition_nonstrict(2, 2, 1.0 / 6.0));
        assert!(block_condition(2, 2, 0.16));
        assert!(eldar_condition(2, 1, 1.0 / 3.0, 0.0));
        assert!(!eldar_condition_strict(2, 1, 1.0 / 3.0, 0.0));
        // prose threshold 1/(√3·8) ≈ 0.0722 is half of the displayed one
        assert!(!li_chen_condition_prose(2, 0.1));
    }

    #[test]
    fn factor_examples() {
        let f = factors(2, 0.0).unwrap();
        assert_eq!((f.alpha1, f.alpha2), (1.0, 0.0));
        let f = factors(2, 0.2).unwrap();
        assert_abs_diff_eq!(f.alpha1, 1.3693063937629153, epsilon = 1e-14);
        assert_abs_diff_eq!(f.alpha2, 0.35355339059327373, epsilon = 1e-14);
        assert!(matches!(factors(3, 0.5), Err(Error::ConditionViolated(_))));
        assert!(matches!(factors(1, 0.1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn scalar_constants_at_zero_coherence() {
        let b = theorem1_bounds(2, 0.0, 1.0, 1.0, C4Variant::Proof).unwrap();
        assert_abs_diff_eq!(b.c1, 0.8284271247461901, epsilon = 1e-14);
        assert_abs_diff_eq!(b.c2, 4.82842712474619, epsilon = 1e-14);
        assert!(matches!(
            theorem1_bounds(2, 0.4, 1.0, 1.0, C4Variant::Proof),
            Err(Error::ConditionViolated(_))
        ));
        assert!(theorem1_bounds(2, 0.1, 0.0, 1.0, C4Variant::Proof).is_err());
    }

    #[test]
    fn variant_ordering() {
        for &eps in &[0.0, 0.01, 0.5, 3.0] {
            let p = theorem1_bounds(3, 0.1, 0.7, eps, C4Variant::Proof).unwrap();
            let s = theorem1_bounds(3, 0.1, 0.7, eps, C4Variant::Statement).unwrap();
            if eps == 0.0 {
                assert_eq!(p.c4, s.c4);
            } else {
                assert!(p.c4 > s.c4);
            }
            assert_eq!((p.c1, p.c2, p.c3), (s.c1, s.c2, s.c3));
        }
    }

    #[test]
    fn equal_noise_form_matches_general_form() {
        for variant in [C4Variant::Statement, C4Variant::Proof] {
            let t = theorem1_bounds(4, 0.1, 1.0, 1.0, variant).unwrap();
            let c = corollary1_bounds(4, 0.1, variant).unwrap();
            assert_relative_eq!(t.c1, c.c1, max_relative = 1e-12);
            assert_relative_eq!(t.c2, c.c2, max_relative = 1e-12);
            assert_relative_eq!(t.c3, c.c3, max_relative = 1e-12);
            assert_relative_eq!(t.c4, c.c4, max_relative = 1e-12);
        }
    }

    #[test]
    fn block_factors_example() {
        let b = theorem3_bounds(2, 2, 0.05, 1.0, 1.0, C4Variant::Proof).unwrap();
        assert_abs_diff_eq!(b.alpha1, 1.1_f64.sqrt() / 0.9, epsilon = 1e-14);
        assert_abs_diff_eq!(b.alpha1, 1.1653431646335017, epsilon = 1e-14);
        assert_abs_diff_eq!(b.alpha2, 2f64.sqrt() * 0.1 / 0.9, epsilon = 1e-14);
        assert_abs_diff_eq!(b.alpha2, 0.15713484026367724, epsilon = 1e-14);
        assert!(theorem3_bounds(2, 2, 1.0 / 6.0, 1.0, 1.0, C4Variant::Proof).is_err());
    }

    #[test]
    fn block_reduces_to_scalar_form() {
        let a = theorem3_bounds(3, 1, 0.12, 0.3, 0.2, C4Variant::Statement).unwrap();
        let b = theorem1_bounds(3, 0.12, 0.3, 0.2, C4Variant::Statement).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn envelope_examples() {
        let e = remark2_envelopes(4, 0.1).unwrap();
        assert_eq!(e[0], 1.0);
        let e = remark2_envelopes(2, 0.2).unwrap();
        assert_abs_diff_eq!(e[2], 14.0 * 6f64.sqrt() / (2f64.sqrt() * 0.4), epsilon = 1e-12);
        assert_abs_diff_eq!(e[2], 60.6217782649107, epsilon = 1e-10);
        assert!(remark2_envelopes(2, 0.34).is_err());
    }

    #[test]
    fn variant_parses() {
        assert_eq!("proof".parse::<C4Variant>().unwrap(), C4Variant::Proof);
        assert_eq!("statement".parse::<C4Variant>().unwrap(), C4Variant::Statement);
        assert!("other".parse::<C4Variant>().is_err());
        assert_eq!(C4Variant::default(), C4Variant::Proof);
    }
}
