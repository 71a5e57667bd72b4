//! Ground-truth signals, bounded noise, and best k-term / k-block
//! approximations.

use std::path::Path;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::matrixlab::MeasurementMatrix;
use crate::rng::substream;
use crate::textio::{fmt_f64, parse_f64, parse_usize};
use crate::{Error, Result, Vector};

/// Sparsity pattern of a generated signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Structure {
    /// Exactly `k` nonzeros on a uniformly drawn support.
    Sparse { k: usize },
    /// Every entry nonzero; the `i`-th largest magnitude is `i^(−p)`.
    Compressible { decay_exponent: f64 },
    /// `k` of the `n/d` blocks nonzero.
    BlockSparse { k: usize, d: usize },
}

/// Magnitude model for nonzero entries. `Unit` and `Uniform` get a random sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Magnitude {
    Unit,
    Uniform { lo: f64, hi: f64 },
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub n: usize,
    pub structure: Structure,
    pub magnitude: Magnitude,
    pub seed: u64,
}

impl SignalSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        match self.structure {
            Structure::Sparse { k } if k > n => {
                return Err(Error::InvalidArgument(format!("sparsity {k} exceeds n = {n}")))
            }
            Structure::Compressible { decay_exponent } if !(decay_exponent > 0.0) => {
                return Err(Error::InvalidArgument(format!(
                    "decay exponent must be positive, got {decay_exponent}"
                )))
            }
            Structure::BlockSparse { k, d } => {
                if d == 0 || n % d != 0 {
                    return Err(Error::InvalidDimensions(format!(
                        "block size {d} does not divide n = {n}"
                    )));
                }
                if k > n / d {
                    return Err(Error::InvalidArgument(format!(
                        "block sparsity {k} exceeds {} blocks",
                        n / d
                    )));
                }
            }
            _ => {}
        }
        if let Magnitude::Uniform { lo, hi } = self.magnitude {
            if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "uniform magnitude needs 0 <= lo <= hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

fn random_sign(rng: &mut impl Rng) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

fn draw_value(magnitude: Magnitude, rng: &mut impl Rng) -> f64 {
    match magnitude {
        Magnitude::Unit => random_sign(rng),
        Magnitude::Uniform { lo, hi } => {
            let mag = if hi > lo { rng.random_range(lo..=hi) } else { lo };
            random_sign(rng) * mag
        }
        Magnitude::Gaussian => rng.sample(StandardNormal),
    }
}

/// Signal from substream `(spec.seed, 0)`.
pub fn generate_signal(spec: &SignalSpec) -> Result<Vector> {
    generate_signal_with(spec, &mut substream(spec.seed, 0))
}

/// Signal drawn from an explicit generator; `spec.seed` is ignored.
pub fn generate_signal_with(spec: &SignalSpec, rng: &mut impl Rng) -> Result<Vector> {
    spec.validate()?;
    let n = spec.n;
    let mut x = Vector::zeros(n);
    match spec.structure {
        Structure::Sparse { k } => {
            let mut support = sample(rng, n, k).into_vec();
            support.sort_unstable();
            for i in support {
                x[i] = draw_value(spec.magnitude, rng);
            }
        }
        Structure::Compressible { decay_exponent } => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            for (rank, &i) in order.iter().enumerate() {
                x[i] = random_sign(rng) * ((rank + 1) as f64).powf(-decay_exponent);
            }
        }
        Structure::BlockSparse { k, d } => {
            let mut blocks = sample(rng, n / d, k).into_vec();
            blocks.sort_unstable();
            for b in blocks {
                for i in b * d..(b + 1) * d {
                    x[i] = draw_value(spec.magnitude, rng);
                }
            }
        }
    }
    Ok(x)
}

/// Indices of the `k` largest-magnitude entries, ties to the lower index,
/// returned in ascending order.
pub fn top_k_indices(x: &Vector, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    // Stable sort keeps lower indices first among equal magnitudes.
    order.sort_by(|&i, &j| x[j].abs().total_cmp(&x[i].abs()));
    order.truncate(k.min(x.len()));
    order.sort_unstable();
    order
}

/// Euclidean norm of every length-`d` block.
pub fn block_norms(x: &Vector, d: usize) -> Vec<f64> {
    x.as_slice().chunks(d).map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect()
}

/// Block indices of the `k` blocks with largest norm, ties to the lower
/// index, ascending.
pub fn top_k_blocks(x: &Vector, k: usize, d: usize) -> Vec<usize> {
    let norms = block_norms(x, d);
    let mut order: Vec<usize> = (0..norms.len()).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    order.truncate(k.min(norms.len()));
    order.sort_unstable();
    order
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k > n {
        Err(Error::InvalidArgument(format!("k = {k} exceeds {n}")))
    } else {
        Ok(())
    }
}

fn check_block(n: usize, d: usize) -> Result<()> {
    if d == 0 || n % d != 0 {
        Err(Error::InvalidDimensions(format!("block size {d} does not divide n = {n}")))
    } else {
        Ok(())
    }
}

/// Best k-term approximation `x_[k]`.
pub fn best_k_term(x: &Vector, k: usize) -> Result<Vector> {
    check_k(x.len(), k)?;
    let mut y = Vector::zeros(x.len());
    for i in top_k_indices(x, k) {
        y[i] = x[i];
    }
    Ok(y)
}

/// Best k-block approximation `x_{k}`.
pub fn best_k_block(x: &Vector, k: usize, d: usize) -> Result<Vector> {
    check_block(x.len(), d)?;
    check_k(x.len() / d, k)?;
    let mut y = Vector::zeros(x.len());
    for b in top_k_blocks(x, k, d) {
        for i in b * d..(b + 1) * d {
            y[i] = x[i];
        }
    }
    Ok(y)
}

/// `‖x‖₂,₁ = Σᵢ ‖x[i]‖₂`.
pub fn mixed_norm_21(x: &Vector, d: usize) -> f64 {
    block_norms(x, d).iter().sum()
}

/// Number of nonzero blocks `‖x‖₂,₀`.
pub fn block_support_size(x: &Vector, d: usize) -> usize {
    block_norms(x, d).iter().filter(|&&v| v != 0.0).count()
}

/// Tail norms entering the error bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailNorms {
    /// `‖x − x_[k]‖₁`.
    pub l1_tail: f64,
    /// `‖x − x_{k}‖₂,₁` for block size `d`.
    pub block_tail: f64,
}

pub fn tail_norms(x: &Vector, k: usize, d: usize) -> Result<TailNorms> {
    check_block(x.len(), d)?;
    let l1_tail = (x - best_k_term(x, k)?).lp_norm(1);
    let block_tail = if k <= x.len() / d {
        mixed_norm_21(&(x - best_k_block(x, k, d)?), d)
    } else {
        0.0
    };
    Ok(TailNorms { l1_tail, block_tail })
}

/// Noise families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// `‖z‖₂ = ε`.
    L2Ball,
    /// `‖Aᵀz‖∞ = ε`.
    DsType,
    None,
}

/// Norm applied to `Aᵀz` for DS-type noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DsNorm {
    #[default]
    Inf,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub epsilon: f64,
    pub seed: u64,
    #[serde(default)]
    pub ds_norm: DsNorm,
}

const DEGENERATE_TOL: f64 = 1e-14;
const MAX_REDRAWS: usize = 10;

/// Noise from substream `(model.seed, 0)`.
pub fn generate_noise(model: &NoiseModel, a: &MeasurementMatrix) -> Result<Vector> {
    generate_noise_with(model, a, &mut substream(model.seed, 0))
}

/// Draws `z₀ ~ N(0, I_m)` and rescales it onto the boundary of the noise set.
pub fn generate_noise_with(
    model: &NoiseModel,
    a: &MeasurementMatrix,
    rng: &mut impl Rng,
) -> Result<Vector> {
    let m = a.rows();
    let eps = model.epsilon;
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("epsilon must be nonnegative, got {eps}")));
    }
    if model.kind == NoiseKind::None || eps == 0.0 {
        return Ok(Vector::zeros(m));
    }
    if model.kind == NoiseKind::DsType && !a.is_normalized() {
        return Err(Error::NotNormalized);
    }
    for _ in 0..MAX_REDRAWS {
        let z0 = Vector::from_fn(m, |_, _| rng.sample(StandardNormal));
        let scale = match model.kind {
            NoiseKind::L2Ball => z0.norm(),
            NoiseKind::DsType => {
                let c = a.entries().tr_mul(&z0);
                match model.ds_norm {
                    DsNorm::Inf => c.amax(),
                    DsNorm::L2 => c.norm(),
                }
            }
            NoiseKind::None => unreachable!(),
        };
        if scale >= DEGENERATE_TOL {
            return Ok(z0 * (eps / scale));
        }
    }
    Err(Error::DegenerateProjection(MAX_REDRAWS))
}

/// Vector text format: `n` on the first line, then one value per line.
pub fn vector_to_text(x: &Vector) -> String {
    let mut out = format!("{}\n", x.len());
    for v in x.iter() {
        out.push_str(&fmt_f64(*v));
        out.push('\n');
    }
    out
}

pub fn vector_from_text(text: &str) -> Result<Vector> {
    let mut toks = text.split_whitespace();
    let n = parse_usize(
        toks.next().ok_or_else(|| Error::Parse("vector file is empty".into()))?,
        "n",
    )?;
    let vals = toks.map(|t| parse_f64(t, "vector entry")).collect::<Result<Vec<f64>>>()?;
    if vals.len() != n {
        return Err(Error::Parse(format!("expected {n} values, found {}", vals.len())));
    }
    Ok(Vector::from_vec(vals))
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vector> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    vector_from_text(&text)
}

pub fn write_vector(x: &Vector, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, vector_to_text(x)).map_err(|e| Error::io(path, e))
}
