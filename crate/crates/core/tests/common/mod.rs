//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the solvers; objectives and subgradients are
//! written out directly from the model definitions.

#![allow(dead_code)]

use coherence_cs::matrixlab::{generate_matrix, MatrixKind, MeasurementMatrix};
use coherence_cs::rng::substream;
use coherence_cs::{Matrix, Vector};
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RefModel {
    Lasso,
    Group(usize),
    DsReg,
}

fn l1(x: &Vector) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

fn l21(x: &Vector, d: usize) -> f64 {
    x.as_slice().chunks(d).map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).sum()
}

pub fn objective(a: &Matrix, b: &Vector, lam: f64, model: RefModel, x: &Vector) -> f64 {
    let r = b - a * x;
    match model {
        RefModel::Lasso => l1(x) + r.dot(&r) / (2.0 * lam),
        RefModel::Group(d) => l21(x, d) + r.dot(&r) / (2.0 * lam),
        RefModel::DsReg => {
            let c = a.transpose() * r;
            let t = c.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            l1(x) + t * t / (2.0 * lam)
        }
    }
}

fn subgradient(a: &Matrix, gram: &Matrix, b: &Vector, lam: f64, model: RefModel, x: &Vector) -> Vector {
    let r = b - a * x;
    match model {
        RefModel::Lasso => x.map(|v| if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 }) - a.transpose() * r / lam,
        RefModel::Group(d) => {
            let mut g = -(a.transpose() * r) / lam;
            for (i, chunk) in x.as_slice().chunks(d).enumerate() {
                let nrm = chunk.iter().map(|v| v * v).sum::<f64>().sqrt();
                if nrm > 0.0 {
                    for j in 0..d {
                        g[i * d + j] += chunk[j] / nrm;
                    }
                }
            }
            g
        }
        RefModel::DsReg => {
            let c = a.transpose() * r;
            let (j, t) = c.iter().enumerate().fold((0, 0.0_f64), |(bj, bt), (i, &v)| {
                if v.abs() > bt.abs() { (i, v) } else { (bj, bt) }
            });
            let sign = x.map(|v| if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 });
            sign - gram.column(j) * (t / lam)
        }
    }
}

/// Best objective found by normalized subgradient descent from zero with
/// steps `s/√(j+1)`; the run is split into `stages` legs, each restarting
/// from the best point with `s` halved.
pub fn subgradient_oracle(
    a: &Matrix,
    b: &Vector,
    lam: f64,
    model: RefModel,
    steps: usize,
    stages: usize,
) -> (f64, Vector) {
    let gram = a.transpose() * a;
    let n = a.ncols();
    let mut best = Vector::zeros(n);
    let mut f_best = objective(a, b, lam, model, &best);
    let mut scale = 1.0;
    let per = steps / stages;
    for _ in 0..stages {
        let mut x = best.clone();
        for j in 0..per {
            let g = subgradient(a, &gram, b, lam, model, &x);
            let gn = g.norm();
            if gn == 0.0 {
                return (f_best, best);
            }
            x -= g * (scale / ((j + 1) as f64).sqrt() / gn);
            let f = objective(a, b, lam, model, &x);
            if f < f_best {
                f_best = f;
                best.copy_from(&x);
            }
        }
        scale *= 0.5;
    }
    (f_best, best)
}

pub fn gaussian_vector(n: usize, seed: u64, stream: u64) -> Vector {
    let mut rng = substream(seed, stream);
    Vector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_matrix(m: usize, n: usize, d: usize, seed: u64) -> MeasurementMatrix {
    generate_matrix(MatrixKind::Gaussian, m, n, d, seed, None, 1).unwrap().matrix
}

/// Max absolute entry, computed with a plain loop.
pub fn max_abs(v: &Vector) -> f64 {
    v.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

/// All k-subsets of 0..n in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Lasso duality gap at `x`, in the units of `‖x‖₁ + ‖b − Ax‖²/(2λ)`.
///
/// The dual point is the residual scaled into `‖Aᵀθ‖∞ ≤ λ`.
pub fn lasso_duality_gap(a: &Matrix, b: &Vector, lam: f64, x: &Vector) -> f64 {
    let r = b - a * x;
    let corr = max_abs(&(a.transpose() * &r));
    let theta = if corr > lam { &r * (lam / corr) } else { r.clone() };
    let primal = 0.5 * r.dot(&r) + lam * l1(x);
    let diff = b - &theta;
    let dual = 0.5 * b.dot(b) - 0.5 * diff.dot(&diff);
    (primal - dual) / lam
}
