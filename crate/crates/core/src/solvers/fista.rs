//! Accelerated proximal gradient with function-value restart.

use super::prox::block_soft_threshold;
use super::{kkt_from_correlation, Model, Problem, SolveResult, SolverConfig};
use crate::matrixlab::spectral_norm;
use crate::signals::mixed_norm_21;
use crate::{Error, Result, Vector};

/// Safety factor on the power-method estimate of the Lipschitz constant.
const LIPSCHITZ_MARGIN: f64 = 1.01;
/// Backtracking gives up once the step constant has grown this much.
const MAX_LIPSCHITZ_GROWTH: f64 = 1e6;
/// Relative objective increase attributed to rounding.
const ROUNDING_SLACK: f64 = 1e-12;

/// Solves `min ‖x‖₁ + (1/2λ)‖b − Ax‖₂²`.
pub fn solve_lasso(p: &Problem, cfg: &SolverConfig) -> Result<SolveResult> {
    p.expect(Model::Lasso)?;
    run(p, cfg, 1)
}

/// Solves `min ‖x‖₂,₁ + (1/2λ)‖b − Ax‖₂²`.
pub fn solve_group_lasso(p: &Problem, cfg: &SolverConfig) -> Result<SolveResult> {
    let d = match p.model {
        Model::GroupLasso(d) => d,
        other => {
            return Err(Error::InvalidArgument(format!(
                "problem poses {other:?}, solver expects GroupLasso"
            )))
        }
    };
    run(p, cfg, d)
}

fn penalty(x: &Vector, d: usize) -> f64 {
    if d == 1 {
        x.lp_norm(1)
    } else {
        mixed_norm_21(x, d)
    }
}

fn run(p: &Problem, cfg: &SolverConfig, d: usize) -> Result<SolveResult> {
    cfg.validate()?;
    let a = p.a.entries();
    let b = &p.b;
    let lam = p.lambda;
    let n = a.ncols();

    let smooth = |ax: &Vector| (b - ax).norm_squared() / (2.0 * lam);
    let corr = |ax: &Vector| a.tr_mul(&(b - ax)) / lam;

    let norm = spectral_norm(a);
    let l0 = (norm * norm / lam * LIPSCHITZ_MARGIN).max(f64::MIN_POSITIVE);
    let mut lip = l0;

    let mut x = Vector::zeros(n);
    let mut ax = Vector::zeros(a.nrows());
    let mut fx = smooth(&ax);
    let mut gx = corr(&ax);
    let mut kkt = kkt_from_correlation(&x, &gx, d);

    let mut y = x.clone();
    let mut ay = ax.clone();
    let mut gy = gx.clone();
    let mut at_x = true;
    let mut theta = 1.0_f64;

    let mut history = Vec::new();
    let mut iterations = 0;
    while kkt > cfg.tolerance && iterations < cfg.max_iters {
        iterations += 1;
        let z = block_soft_threshold(&(&y + &gy / lip), 1.0 / lip, d);
        let az = a * &z;
        let fz = smooth(&az) + penalty(&z, d);

        let mut accept = !(cfg.monotone_restart && fz > fx);
        if !accept {
            if at_x && fz - fx <= ROUNDING_SLACK * fx.abs().max(1.0) {
                // A plain step from x that fails only by rounding is kept.
                accept = true;
            } else if at_x {
                // A plain step from x failed to descend: the step is too long.
                lip *= 2.0;
                if lip > l0 * MAX_LIPSCHITZ_GROWTH {
                    break;
                }
            } else {
                y.copy_from(&x);
                ay.copy_from(&ax);
                gy.copy_from(&gx);
                at_x = true;
                theta = 1.0;
            }
        }
        if accept {
            let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
            let beta = (theta - 1.0) / theta_next;
            y = &z + (&z - &x) * beta;
            ay = &az + (&az - &ax) * beta;
            theta = theta_next;
            x = z;
            ax = az;
            fx = fz;
            gx = corr(&ax);
            kkt = kkt_from_correlation(&x, &gx, d);
            at_x = beta == 0.0;
            gy = if at_x { gx.clone() } else { corr(&ay) };
        }
        if history.len() < cfg.history_cap {
            history.push(fx);
        }
    }

    if !kkt.is_finite() {
        return Err(Error::InvalidArgument("solver produced non-finite iterates".into()));
    }
    if d == 1 {
        if let Some((xp, gp, kp)) = polish_support(p, &x, kkt) {
            if p.objective(&xp) <= p.objective(&x) * (1.0 + ROUNDING_SLACK) {
                x = xp;
                gx = gp;
                kkt = kp;
            }
        }
    }
    let correlation_inf = gx.amax() * lam;
    SolveResult {
        objective: p.objective(&x),
        x_sharp: x,
        iterations,
        kkt_residual: kkt,
        converged: kkt <= cfg.tolerance,
        history,
        constraint_residual: None,
        splitting_residual: None,
        rho: None,
        correlation_inf,
    }
    .finish()
}

/// Re-solves the stationarity equations `A_Sᵀ(b − A_S x_S) = λ·sign(x_S)`
/// on the current support. The candidate is returned only if it keeps the
/// signs and lowers the KKT residual.
fn polish_support(p: &Problem, x: &Vector, kkt: f64) -> Option<(Vector, Vector, f64)> {
    let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
    let a = p.a.entries();
    if support.is_empty() || support.len() > a.nrows() {
        return None;
    }
    let cols = a.select_columns(&support);
    let gram = cols.tr_mul(&cols);
    let signs = Vector::from_iterator(support.len(), support.iter().map(|&i| x[i].signum()));
    let rhs = cols.tr_mul(&p.b) - &signs * p.lambda;
    let xs = gram.cholesky()?.solve(&rhs);
    if xs.iter().zip(signs.iter()).any(|(v, s)| !(v * s > 0.0)) {
        return None;
    }
    let mut cand = Vector::zeros(x.len());
    for (k, &i) in support.iter().enumerate() {
        cand[i] = xs[k];
    }
    let g = p.scaled_correlation(&cand);
    let r = kkt_from_correlation(&cand, &g, 1);
    (r < kkt).then_some((cand, g, r))
}
