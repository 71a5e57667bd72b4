//! Proximal maps.

use crate::{Error, Result, Vector};

/// Blocks with norm at or below this map to zero.
pub const ZERO_BLOCK_TOL: f64 = 1e-14;

#[inline]
fn soft(v: f64, tau: f64) -> f64 {
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}

/// `sign(vᵢ)·max(|vᵢ| − τ, 0)`, the proximal map of `τ‖·‖₁`.
pub fn soft_threshold(v: &Vector, tau: f64) -> Vector {
    v.map(|x| soft(x, tau))
}

/// Scalar soft threshold.
pub fn soft_threshold_scalar(v: f64, tau: f64) -> f64 {
    soft(v, tau)
}

/// Proximal map of `τ‖·‖₂,₁`: each length-`d` block is scaled by
/// `max(1 − τ/‖v[i]‖₂, 0)`. With `d = 1` this is [`soft_threshold`].
pub fn block_soft_threshold(v: &Vector, tau: f64, d: usize) -> Vector {
    assert!(d >= 1 && v.len() % d == 0, "block size must divide the length");
    if d == 1 {
        return soft_threshold(v, tau);
    }
    let mut out = v.clone();
    for chunk in out.as_mut_slice().chunks_mut(d) {
        let norm = chunk.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = if norm <= ZERO_BLOCK_TOL { 0.0 } else { (1.0 - tau / norm).max(0.0) };
        for x in chunk.iter_mut() {
            *x *= scale;
        }
    }
    out
}

/// Proximal map of `(γ/2)‖·‖₁²`.
///
/// The minimizer is `soft(v, τ)` with `τ = γ‖soft(v, τ)‖₁`; sorting `|v|`
/// locates the active count `j` and `τ = γ·S_j/(1 + jγ)` where `S_j` is the
/// sum of the `j` largest magnitudes.
pub fn prox_l1_squared(v: &Vector, gamma: f64) -> Result<Vector> {
    if gamma == 0.0 {
        return Ok(v.clone());
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut tau = 0.0;
    let mut sum = 0.0;
    for (j, &a) in mags.iter().enumerate() {
        let cand_sum = sum + a;
        let cand_tau = gamma * cand_sum / (1.0 + (j + 1) as f64 * gamma);
        if a > cand_tau {
            sum = cand_sum;
            tau = cand_tau;
        } else {
            break;
        }
    }
    let q = soft_threshold(v, tau);
    let implied = gamma * q.lp_norm(1);
    if (implied - tau).abs() > 1e-10 * tau.max(1.0) {
        return Err(Error::ProxFailure(format!(
            "squared-l1 threshold {tau} but gamma*|q|_1 = {implied}"
        )));
    }
    Ok(q)
}

/// Proximal map of `(t/2λ)‖·‖∞²`, through the Moreau decomposition
/// `prox_{tφ}(v) = v − t·prox_{φ*/t}(v/t)` with `φ* = (λ/2)‖·‖₁²`.
pub fn prox_linf_squared(v: &Vector, t: f64, lambda: f64) -> Result<Vector> {
    if t == 0.0 {
        return Ok(v.clone());
    }
    let dual = prox_l1_squared(&(v / t), lambda / t)?;
    Ok(v - dual * t)
}
