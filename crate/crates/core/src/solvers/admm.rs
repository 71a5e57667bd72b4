//! Alternating direction method of multipliers for the DS-regularized model.
//!
//! The model is rewritten as
//! `min ‖w‖₁ + (1/2λ)‖y‖∞²  s.t.  AᵀAx + y = Aᵀb,  x = w`,
//! with `x` in the first block and `(y, w)` in the second. Every few
//! iterations the current support of `w` and the peak set of `y` are used
//! to solve the optimality conditions directly; a candidate is accepted once
//! its duality gap is within tolerance.

use nalgebra::SymmetricEigen;

use super::prox::{prox_linf_squared, soft_threshold};
use super::{Model, Problem, SolveResult, SolverConfig};
use crate::matrixlab::MeasurementMatrix;
use crate::{Error, Matrix, Result, Vector};

/// Iterations between attempts to solve the optimality system directly.
const POLISH_EVERY: usize = 10;
/// Relative closeness to `‖y‖∞` that puts a coordinate in the peak set.
const PEAK_TOL: f64 = 1e-9;

/// Precomputed Gram matrix and its eigendecomposition, reusable across
/// right-hand sides for a fixed matrix.
#[derive(Debug, Clone)]
pub struct DsRegOperator {
    rows: usize,
    gram: Matrix,
    basis: Matrix,
    eigenvalues: Vector,
}

impl DsRegOperator {
    pub fn new(a: &MeasurementMatrix) -> Self {
        let entries = a.entries();
        let gram = entries.tr_mul(entries);
        let eig = SymmetricEigen::new(gram.clone());
        DsRegOperator {
            rows: a.rows(),
            gram,
            basis: eig.eigenvectors,
            eigenvalues: eig.eigenvalues,
        }
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }
}

/// Solves `min ‖x‖₁ + (1/2λ)‖Aᵀ(b − Ax)‖∞²`.
pub fn solve_ds_reg(p: &Problem, cfg: &SolverConfig) -> Result<SolveResult> {
    p.expect(Model::DsReg)?;
    let op = DsRegOperator::new(p.a);
    solve_ds_reg_with(p, &op, cfg)
}

/// [`solve_ds_reg`] with a precomputed operator for `p.a`.
pub fn solve_ds_reg_with(p: &Problem, op: &DsRegOperator, cfg: &SolverConfig) -> Result<SolveResult> {
    p.expect(Model::DsReg)?;
    cfg.validate()?;
    let n = p.a.cols();
    if op.gram.nrows() != n || op.rows != p.a.rows() {
        return Err(Error::InvalidDimensions("operator was built for another matrix".into()));
    }
    let lam = p.lambda;
    let g = &op.gram;
    let c = p.a.entries().tr_mul(&p.b);
    let gc = g * &c;

    let sigma = &op.eigenvalues;
    let f0 = sigma.map(|s| 1.0 / (s * s + 1.0));
    let f1 = sigma.zip_map(&f0, |s, f| s * f);
    let f2 = sigma.zip_map(&f1, |s, f| s * f);

    let mut rho = cfg.rho;
    let mut x = Vector::zeros(n);
    let mut w = Vector::zeros(n);
    let mut y = c.clone();
    let mut gy = gc.clone();
    let mut u = Vector::zeros(n);
    let mut v = Vector::zeros(n);
    let mut gu = Vector::zeros(n);
    let mut coeffs = Matrix::zeros(n, 3);

    let mut history = Vec::new();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut certificate = f64::INFINITY;
    let c_scale = c.amax();

    while iterations < cfg.max_iters {
        iterations += 1;

        // (G² + I)x = G(c − y − u) + (w − v), solved in the eigenbasis of G.
        let rhs = &gc - &gy - &gu + &w - &v;
        let t = op.basis.tr_mul(&rhs);
        for i in 0..n {
            coeffs[(i, 0)] = t[i] * f0[i];
            coeffs[(i, 1)] = t[i] * f1[i];
            coeffs[(i, 2)] = t[i] * f2[i];
        }
        let images = &op.basis * &coeffs;
        x.copy_from(&images.column(0));
        let gx = images.column(1).into_owned();
        let ggx = images.column(2).into_owned();

        y = prox_linf_squared(&(&c - &gx - &u), 1.0 / rho, lam)?;
        let w_prev = std::mem::replace(&mut w, soft_threshold(&(&x + &v), 1.0 / rho));
        let gy_prev = std::mem::replace(&mut gy, g * &y);

        let r1 = &gx + &y - &c;
        let r2 = &x - &w;
        u += &r1;
        v += &r2;
        gu += &ggx + &gy - &gc;

        let primal = r1.amax().max(r2.amax());
        let dual = rho * (&gy - &gy_prev - (&w - &w_prev)).amax();
        let primal_scale = c_scale.max(gx.amax()).max(y.amax()).max(x.amax()).max(w.amax());
        let dual_scale = rho * u.amax().max(v.amax());
        let rel_p = relative(primal, primal_scale);
        let rel_d = relative(dual, dual_scale);
        residual = rel_p.max(rel_d);

        if history.len() < cfg.history_cap {
            let ym = y.amax();
            history.push(w.lp_norm(1) + ym * ym / (2.0 * lam));
        }
        if !residual.is_finite() {
            return Err(Error::InvalidArgument("solver produced non-finite iterates".into()));
        }
        if iterations % POLISH_EVERY == 0 {
            if let Some((xp, pp)) = polish(op, &c, lam, &w, &y) {
                let gap = duality_gap(op, &c, lam, &xp, &pp);
                if gap <= cfg.tolerance {
                    certificate = gap;
                    w = xp;
                    y = &c - g * &w;
                    break;
                }
            }
        }
        if residual <= cfg.tolerance {
            let p = &u * (-rho);
            let gap = duality_gap(op, &c, lam, &w, &p);
            if gap <= cfg.tolerance {
                certificate = gap;
                break;
            }
        }

        if cfg.rho_update_every > 0 && iterations % cfg.rho_update_every == 0 {
            let scale = if rel_p > cfg.rho_balance * rel_d {
                cfg.rho_factor
            } else if rel_d > cfg.rho_balance * rel_p {
                1.0 / cfg.rho_factor
            } else {
                1.0
            };
            if scale != 1.0 {
                rho *= scale;
                u /= scale;
                v /= scale;
                gu /= scale;
            }
        }
    }

    if !certificate.is_finite() {
        certificate = duality_gap(op, &c, lam, &w, &(&u * (-rho)));
    }
    let corr = &c - g * &w;
    SolveResult {
        objective: p.objective(&w),
        iterations,
        kkt_residual: certificate,
        converged: certificate <= cfg.tolerance,
        splitting_residual: Some(residual),
        history,
        constraint_residual: Some((&y - &corr).amax()),
        rho: Some(rho),
        correlation_inf: corr.amax(),
        x_sharp: w,
    }
    .finish()
}

/// Relative duality gap of a primal point `x` and a multiplier `p` for the
/// residual `Aᵀ(b − Ax)`.
///
/// The dual problem is `max cᵀp − (λ/2)‖p‖₁²` subject to `‖AᵀAp‖∞ ≤ 1`;
/// `p` is scaled into that set before evaluation.
fn duality_gap(op: &DsRegOperator, c: &Vector, lam: f64, x: &Vector, p: &Vector) -> f64 {
    let r = c - &op.gram * x;
    let t = r.amax();
    let primal = x.lp_norm(1) + t * t / (2.0 * lam);
    let scale = (&op.gram * p).amax().max(1.0);
    let ps = p / scale;
    let l1 = ps.lp_norm(1);
    let dual = c.dot(&ps) - 0.5 * lam * l1 * l1;
    (primal - dual).max(0.0) / primal.abs().max(1.0)
}

/// Solves the optimality conditions with the support of `w` and the peak
/// set of `y` held fixed.
///
/// Unknowns are `x_S`, the peak value `t` and the multiplier `p_T`:
/// `(c − Gx)_T = σ_T t`, `(Gp)_S = sign(w_S)` and `σ_Tᵀp_T = t/λ`.
fn polish(op: &DsRegOperator, c: &Vector, lam: f64, w: &Vector, y: &Vector) -> Option<(Vector, Vector)> {
    let peak = y.amax();
    if peak == 0.0 {
        return None;
    }
    let support: Vec<usize> = (0..w.len()).filter(|&i| w[i] != 0.0).collect();
    let active: Vec<usize> = (0..y.len()).filter(|&i| y[i].abs() >= peak * (1.0 - PEAK_TOL)).collect();
    let (ns, nt) = (support.len(), active.len());
    let size = ns + nt + 1;
    let g = &op.gram;
    let mut m = Matrix::zeros(size, size);
    let mut rhs = Vector::zeros(size);
    for (r, &i) in active.iter().enumerate() {
        for (col, &j) in support.iter().enumerate() {
            m[(r, col)] = g[(i, j)];
        }
        m[(r, ns)] = y[i].signum();
        rhs[r] = c[i];
    }
    for (r, &j) in support.iter().enumerate() {
        for (col, &i) in active.iter().enumerate() {
            m[(nt + r, ns + 1 + col)] = g[(j, i)];
        }
        rhs[nt + r] = w[j].signum();
    }
    m[(size - 1, ns)] = -1.0 / lam;
    for (col, &i) in active.iter().enumerate() {
        m[(size - 1, ns + 1 + col)] = y[i].signum();
    }
    let sol = m.lu().solve(&rhs)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut x = Vector::zeros(w.len());
    for (col, &j) in support.iter().enumerate() {
        x[j] = sol[col];
    }
    let mut p = Vector::zeros(y.len());
    for (col, &i) in active.iter().enumerate() {
        p[i] = sol[ns + 1 + col];
    }
    Some((x, p))
}

fn relative(value: f64, scale: f64) -> f64 {
    if value == 0.0 {
        0.0
    } else {
        value / scale.max(f64::MIN_POSITIVE)
    }
}
