//! Measurement matrices and their coherence quantities.
//!
//! A [`MeasurementMatrix`] is a dense `m × n` matrix with an optional block
//! partition into `l = n/d` consecutive groups of `d` columns. Coherence
//! quantities are only defined on column-normalized matrices:
//!
//! - mutual coherence `μ = max_{i<j} |⟨aᵢ, aⱼ⟩|`
//! - block coherence `μ_B = max_{i<j} ‖A[i]ᵀA[j]‖₂` (spectral norm)
//! - sub-coherence `ν = max_i μ(A[i])`
//!
//! [`verify_quasi_rip`] enumerates every k-column support and checks that the
//! Gram submatrix eigenvalues sit inside `[1 − (k−1)μ, 1 + (k−1)μ]`.

use std::fmt;
use std::path::Path;

use nalgebra::SymmetricEigen;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::rng::{substream, MATRIX_STREAM_BASE};
use crate::textio::{parse_f64, parse_usize, write_rows};
use crate::{Error, Matrix, Result};

/// Tolerance on column norms for the normalized flag.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Columns with norm below this are treated as zero.
pub const ZERO_COLUMN_TOL: f64 = 1e-14;
/// Largest number of supports [`verify_quasi_rip`] will enumerate.
pub const MAX_SUPPORTS: u128 = 2_000_000;

/// Dense measurement matrix with a block partition and normalization state.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    entries: Matrix,
    block_size: usize,
    normalized: bool,
}

impl MeasurementMatrix {
    /// Wraps `entries` with block size `d`. The normalized flag is set when
    /// every column norm is within [`NORMALIZATION_TOL`] of one.
    pub fn new(entries: Matrix, block_size: usize) -> Result<Self> {
        let (m, n) = entries.shape();
        if m == 0 || n == 0 {
            return Err(Error::InvalidDimensions(format!(
                "matrix must be at least 1x1, got {m}x{n}"
            )));
        }
        if block_size == 0 || n % block_size != 0 {
            return Err(Error::InvalidDimensions(format!(
                "block size {block_size} does not divide n = {n}"
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        let normalized = columns_are_unit(&entries);
        Ok(Self {
            entries,
            block_size,
            normalized,
        })
    }

    /// Same matrix, different block partition.
    pub fn with_block_size(&self, block_size: usize) -> Result<Self> {
        let n = self.cols();
        if block_size == 0 || n % block_size != 0 {
            return Err(Error::InvalidDimensions(format!(
                "block size {block_size} does not divide n = {n}"
            )));
        }
        Ok(Self {
            block_size,
            ..self.clone()
        })
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    /// Number of blocks `l = n/d`.
    pub fn num_blocks(&self) -> usize {
        self.cols() / self.block_size
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Columns `[i·d, (i+1)·d)` as an owned `m × d` matrix.
    pub fn block(&self, i: usize) -> Matrix {
        let d = self.block_size;
        self.entries.columns(i * d, d).into_owned()
    }

    pub fn column_norms(&self) -> Vec<f64> {
        self.entries.column_iter().map(|c| c.norm()).collect()
    }

    /// Parses the text format: a header line `m n d` followed by `m` rows of
    /// `n` whitespace-separated decimals.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("matrix file is empty".into()))?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 3 {
            return Err(Error::Parse(format!(
                "matrix header must be \"m n d\", got {header:?}"
            )));
        }
        let m = parse_usize(dims[0], "m")?;
        let n = parse_usize(dims[1], "n")?;
        let d = parse_usize(dims[2], "d")?;
        let mut data = Vec::with_capacity(m * n);
        for r in 0..m {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("expected {m} rows, found {r}")))?;
            let before = data.len();
            for tok in line.split_whitespace() {
                data.push(parse_f64(tok, "matrix entry")?);
            }
            if data.len() - before != n {
                return Err(Error::Parse(format!(
                    "row {r} has {} values, expected {n}",
                    data.len() - before
                )));
            }
        }
        if lines.next().is_some() {
            return Err(Error::Parse(format!("more than {m} rows in matrix file")));
        }
        Self::new(Matrix::from_row_slice(m, n, &data), d)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.rows(), self.cols(), self.block_size);
        write_rows(
            &mut out,
            self.entries
                .row_iter()
                .map(|r| r.iter().copied().collect::<Vec<_>>()),
        );
        out
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn columns_are_unit(entries: &Matrix) -> bool {
    entries
        .column_iter()
        .all(|c| (c.norm() - 1.0).abs() <= NORMALIZATION_TOL)
}

fn require_normalized(a: &MeasurementMatrix) -> Result<()> {
    if a.is_normalized() {
        Ok(())
    } else {
        Err(Error::NotNormalized)
    }
}

/// Scales every column to unit Euclidean norm.
pub fn normalize_columns(a: &MeasurementMatrix) -> Result<MeasurementMatrix> {
    let mut entries = a.entries.clone();
    for (index, mut col) in entries.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm < ZERO_COLUMN_TOL {
            return Err(Error::ZeroColumn { index });
        }
        // Leave unit columns bit-for-bit alone.
        if norm != 1.0 {
            col /= norm;
        }
    }
    let normalized = columns_are_unit(&entries);
    Ok(MeasurementMatrix {
        entries,
        block_size: a.block_size,
        normalized,
    })
}

/// `max_{i<j} |⟨aᵢ, aⱼ⟩|` over the columns of a normalized matrix.
pub fn mutual_coherence(a: &MeasurementMatrix) -> Result<f64> {
    require_normalized(a)?;
    let n = a.cols();
    if n < 2 {
        return Err(Error::TooFewColumns(n));
    }
    let e = &a.entries;
    let mut mu = 0.0_f64;
    for i in 0..n {
        let ci = e.column(i);
        for j in (i + 1)..n {
            mu = mu.max(ci.dot(&e.column(j)).abs());
        }
    }
    Ok(mu)
}

/// Largest singular value of a small square matrix.
///
/// Closed form for sizes 1 and 2, power iteration on `MᵀM` otherwise.
pub fn spectral_norm(m: &Matrix) -> f64 {
    match m.shape() {
        (1, 1) => m[(0, 0)].abs(),
        (2, 2) => {
            let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
            let s = (a + d).hypot(c - b);
            let t = (a - d).hypot(b + c);
            0.5 * (s + t)
        }
        _ => power_spectral_norm(m, 1e-12, 100_000),
    }
}

fn power_spectral_norm(m: &Matrix, rel_tol: f64, max_iters: usize) -> f64 {
    let gram = m.tr_mul(m);
    // The heaviest column of MᵀM has a nonzero component along the top
    // eigenvector unless MᵀM = 0.
    let start = gram
        .column_iter()
        .max_by(|x, y| x.norm().total_cmp(&y.norm()))
        .map(|c| c.into_owned());
    let Some(mut v) = start else { return 0.0 };
    let norm = v.norm();
    if norm == 0.0 {
        return 0.0;
    }
    v /= norm;
    let mut estimate = v.dot(&(&gram * &v));
    for _ in 0..max_iters {
        let w = &gram * &v;
        let wn = w.norm();
        if wn == 0.0 {
            return 0.0;
        }
        v = w / wn;
        let next = v.dot(&(&gram * &v));
        let done = (next - estimate).abs() <= rel_tol * next.abs();
        estimate = next;
        if done {
            break;
        }
    }
    estimate.max(0.0).sqrt()
}

/// `max_{i<j} ‖A[i]ᵀA[j]‖₂` over block pairs. With `d = 1` this is exactly
/// [`mutual_coherence`].
pub fn block_coherence(a: &MeasurementMatrix) -> Result<f64> {
    require_normalized(a)?;
    let l = a.num_blocks();
    if l < 2 {
        return Err(Error::TooFewBlocks(l));
    }
    if a.block_size == 1 {
        return mutual_coherence(a);
    }
    let blocks: Vec<Matrix> = (0..l).map(|i| a.block(i)).collect();
    let mut mu_b = 0.0_f64;
    for i in 0..l {
        for j in (i + 1)..l {
            mu_b = mu_b.max(spectral_norm(&blocks[i].tr_mul(&blocks[j])));
        }
    }
    Ok(mu_b)
}

/// `max_i μ(A[i])`. Single-column blocks have no pairs, so `d = 1` gives 0.
pub fn sub_coherence(a: &MeasurementMatrix) -> Result<f64> {
    require_normalized(a)?;
    let d = a.block_size;
    if d == 1 {
        return Ok(0.0);
    }
    let e = &a.entries;
    let mut nu = 0.0_f64;
    for blk in 0..a.num_blocks() {
        let base = blk * d;
        for i in 0..d {
            for j in (i + 1)..d {
                nu = nu.max(e.column(base + i).dot(&e.column(base + j)).abs());
            }
        }
    }
    Ok(nu)
}

/// Coherence summary of a normalized matrix.
///
/// `k_*` fields hold the largest k satisfying the matching condition, capped
/// at n (or l); 0 means no k ≥ 1 qualifies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub mu: f64,
    /// `None` when there are fewer than two blocks.
    pub mu_block: Option<f64>,
    pub nu: f64,
    /// Largest k with `μ < 1/(2k−1)`.
    pub k_sharp: usize,
    /// Largest k with `μ_B < 1/((2k−1)d)`.
    pub k_block: Option<usize>,
    /// Largest k with `μ_B ≤ (1−(d−1)ν)/((2k−1)d)`.
    pub k_eldar: Option<usize>,
    /// Same as `k_eldar` with the inequality made strict.
    pub k_eldar_strict: Option<usize>,
}

fn largest_k(limit: usize, pred: impl Fn(usize) -> bool) -> usize {
    // Every condition here tightens as k grows, so scan until the first miss.
    let mut best = 0;
    for k in 1..=limit {
        if pred(k) {
            best = k;
        } else {
            break;
        }
    }
    best
}

pub fn coherence_report(a: &MeasurementMatrix) -> Result<CoherenceReport> {
    let mu = mutual_coherence(a)?;
    let d = a.block_size;
    let l = a.num_blocks();
    let nu = sub_coherence(a)?;
    let mu_block = if l >= 2 { Some(block_coherence(a)?) } else { None };
    let k_sharp = largest_k(a.cols(), |k| bounds::sharp_condition(k, mu));
    let k_block = mu_block.map(|mb| largest_k(l, |k| bounds::block_condition(k, d, mb)));
    let k_eldar = mu_block.map(|mb| largest_k(l, |k| bounds::eldar_condition(k, d, mb, nu)));
    let k_eldar_strict =
        mu_block.map(|mb| largest_k(l, |k| bounds::eldar_condition_strict(k, d, mb, nu)));
    Ok(CoherenceReport {
        m: a.rows(),
        n: a.cols(),
        d,
        mu,
        mu_block,
        nu,
        k_sharp,
        k_block,
        k_eldar,
        k_eldar_strict,
    })
}

/// Result of the brute-force eigenvalue sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiRipReport {
    pub k: usize,
    pub mu: f64,
    pub supports_checked: u64,
    /// `min_S λ_min(G_S) − (1 − (k−1)μ)`.
    pub worst_lower_margin: f64,
    /// `min_S (1 + (k−1)μ) − λ_max(G_S)`.
    pub worst_upper_margin: f64,
    pub lower_support: Vec<usize>,
    pub upper_support: Vec<usize>,
}

/// `C(n, k)`, or `None` once it passes `limit`.
fn binomial_capped(n: usize, k: usize, limit: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > limit {
            return None;
        }
    }
    Some(acc)
}

/// Advances `idx` to the next k-subset of `0..n` in lexicographic order.
pub(crate) fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in (i + 1)..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Checks `(1−(k−1)μ) ≤ λ(G_S) ≤ (1+(k−1)μ)` on every size-k support `S`.
pub fn verify_quasi_rip(a: &MeasurementMatrix, k: usize) -> Result<QuasiRipReport> {
    require_normalized(a)?;
    let n = a.cols();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k must be in 1..={n}, got {k}")));
    }
    let count = binomial_capped(n, k, MAX_SUPPORTS).ok_or(Error::EnumerationTooLarge {
        n,
        k,
        limit: MAX_SUPPORTS,
    })?;
    let mu = if n >= 2 { mutual_coherence(a)? } else { 0.0 };
    let spread = (k - 1) as f64 * mu;
    let gram = a.entries.tr_mul(&a.entries);

    let mut idx: Vec<usize> = (0..k).collect();
    let mut report = QuasiRipReport {
        k,
        mu,
        supports_checked: 0,
        worst_lower_margin: f64::INFINITY,
        worst_upper_margin: f64::INFINITY,
        lower_support: idx.clone(),
        upper_support: idx.clone(),
    };
    let mut sub = Matrix::zeros(k, k);
    loop {
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                sub[(r, c)] = gram[(i, j)];
            }
        }
        let (lo, hi) = if k == 1 {
            (sub[(0, 0)], sub[(0, 0)])
        } else {
            let ev = SymmetricEigen::new(sub.clone()).eigenvalues;
            (ev.min(), ev.max())
        };
        let lower = lo - (1.0 - spread);
        let upper = (1.0 + spread) - hi;
        if lower < report.worst_lower_margin {
            report.worst_lower_margin = lower;
            report.lower_support.clone_from(&idx);
        }
        if upper < report.worst_upper_margin {
            report.worst_upper_margin = upper;
            report.upper_support.clone_from(&idx);
        }
        report.supports_checked += 1;
        if !next_combination(&mut idx, n) {
            break;
        }
    }
    debug_assert_eq!(report.supports_checked as u128, count);
    Ok(report)
}

/// Random matrix families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    /// i.i.d. standard normal entries, then column normalization.
    Gaussian,
    /// Each block is the thin-QR factor of an `m × d` Gaussian draw.
    BlockOrthonormal,
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixKind::Gaussian => f.write_str("gaussian"),
            MatrixKind::BlockOrthonormal => f.write_str("block_orthonormal"),
        }
    }
}

/// Output of [`generate_matrix`].
#[derive(Debug, Clone)]
pub struct GeneratedMatrix {
    pub matrix: MeasurementMatrix,
    /// Number of draws taken, including the accepted one.
    pub attempts: usize,
    /// μ for the gaussian kind, μ_B for block_orthonormal.
    pub coherence: f64,
}

fn standard_normal_matrix(rng: &mut impl Rng, m: usize, n: usize) -> Matrix {
    // Column-major fill order.
    let data: Vec<f64> = (0..m * n).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_vec(m, n, data)
}

fn draw_matrix(kind: MatrixKind, m: usize, n: usize, d: usize, seed: u64, attempt: usize) -> Result<MeasurementMatrix> {
    let mut rng = substream(seed, MATRIX_STREAM_BASE + attempt as u64);
    let entries = match kind {
        MatrixKind::Gaussian => standard_normal_matrix(&mut rng, m, n),
        MatrixKind::BlockOrthonormal => {
            let mut out = Matrix::zeros(m, n);
            for blk in 0..n / d {
                let q = standard_normal_matrix(&mut rng, m, d).qr().q();
                out.columns_mut(blk * d, d).copy_from(&q);
            }
            out
        }
    };
    normalize_columns(&MeasurementMatrix::new(entries, d)?)
}

/// Draws a normalized random matrix. With `coherence_cap`, redraws from fresh
/// substreams until the coherence (μ, or μ_B for block kind) is below the cap.
pub fn generate_matrix(
    kind: MatrixKind,
    m: usize,
    n: usize,
    d: usize,
    seed: u64,
    coherence_cap: Option<f64>,
    max_attempts: usize,
) -> Result<GeneratedMatrix> {
    if m == 0 || n == 0 || d == 0 || n % d != 0 {
        return Err(Error::InvalidDimensions(format!(
            "need m, n, d >= 1 with d | n, got m={m} n={n} d={d}"
        )));
    }
    if kind == MatrixKind::BlockOrthonormal && m < d {
        return Err(Error::InvalidDimensions(format!(
            "block_orthonormal needs m >= d, got m={m} d={d}"
        )));
    }
    let attempts_allowed = if coherence_cap.is_some() { max_attempts.max(1) } else { 1 };
    let mut best = f64::INFINITY;
    for attempt in 0..attempts_allowed {
        let matrix = draw_matrix(kind, m, n, d, seed, attempt)?;
        let coherence = match (kind, n) {
            (_, 1) => 0.0,
            (MatrixKind::Gaussian, _) => mutual_coherence(&matrix)?,
            (MatrixKind::BlockOrthonormal, _) if n / d >= 2 => block_coherence(&matrix)?,
            (MatrixKind::BlockOrthonormal, _) => 0.0,
        };
        match coherence_cap {
            Some(cap) if coherence >= cap => best = best.min(coherence),
            _ => {
                return Ok(GeneratedMatrix {
                    matrix,
                    attempts: attempt + 1,
                    coherence,
                })
            }
        }
    }
    Err(Error::CapUnreachable {
        attempts: attempts_allowed,
        best,
    })
}
