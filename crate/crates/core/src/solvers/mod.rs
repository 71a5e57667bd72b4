//! Solvers for the lasso, DS-regularized and group-lasso models, with
//! first-order optimality certificates.

mod admm;
mod fista;
pub mod prox;
mod residual;

use serde::{Deserialize, Serialize};

use crate::matrixlab::MeasurementMatrix;
use crate::{Error, Result, Vector};

pub use admm::{solve_ds_reg, solve_ds_reg_with, DsRegOperator};
pub use fista::{solve_group_lasso, solve_lasso};
pub use prox::{block_soft_threshold, prox_l1_squared, prox_linf_squared, soft_threshold};
pub use residual::{analyze_residual, ResidualAnalysis};

/// Which regularized model a [`Problem`] poses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    /// `‖x‖₁ + (1/2λ)‖b − Ax‖₂²`
    Lasso,
    /// `‖x‖₁ + (1/2λ)‖Aᵀ(b − Ax)‖∞²`
    DsReg,
    /// `‖x‖₂,₁ + (1/2λ)‖b − Ax‖₂²` over blocks of length `d`.
    GroupLasso(usize),
}

/// A model instance.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    pub a: &'a MeasurementMatrix,
    pub b: Vector,
    pub lambda: f64,
    pub model: Model,
}

impl<'a> Problem<'a> {
    pub fn new(a: &'a MeasurementMatrix, b: Vector, lambda: f64, model: Model) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::InvalidDimensions(format!(
                "b has length {} but A has {} rows",
                b.len(),
                a.rows()
            )));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("b has non-finite entries".into()));
        }
        if let Model::GroupLasso(d) = model {
            if d != a.block_size() {
                return Err(Error::InvalidDimensions(format!(
                    "group size {d} does not match the matrix block size {}",
                    a.block_size()
                )));
            }
        }
        Ok(Problem { a, b, lambda, model })
    }

    fn expect(&self, model: Model) -> Result<()> {
        if self.model == model {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "problem poses {:?}, solver expects {:?}",
                self.model, model
            )))
        }
    }

    /// `g = (1/λ)Aᵀ(b − Ax)`.
    pub fn scaled_correlation(&self, x: &Vector) -> Vector {
        let a = self.a.entries();
        let r = &self.b - a * x;
        a.tr_mul(&r) / self.lambda
    }

    /// Objective value of the posed model at `x`.
    pub fn objective(&self, x: &Vector) -> f64 {
        let a = self.a.entries();
        match self.model {
            Model::Lasso => x.lp_norm(1) + (&self.b - a * x).norm_squared() / (2.0 * self.lambda),
            Model::GroupLasso(d) => {
                crate::signals::mixed_norm_21(x, d)
                    + (&self.b - a * x).norm_squared() / (2.0 * self.lambda)
            }
            Model::DsReg => {
                let c = a.tr_mul(&(&self.b - a * x)).amax();
                x.lp_norm(1) + c * c / (2.0 * self.lambda)
            }
        }
    }

    /// Dispatches to the solver matching the posed model.
    pub fn solve(&self, cfg: &SolverConfig) -> Result<SolveResult> {
        match self.model {
            Model::Lasso => solve_lasso(self, cfg),
            Model::GroupLasso(_) => solve_group_lasso(self, cfg),
            Model::DsReg => solve_ds_reg(self, cfg),
        }
    }
}

/// Iteration controls shared by all solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Certificate tolerance: KKT residual for proximal gradient, relative
    /// primal/dual gap for the splitting method.
    pub tolerance: f64,
    pub max_iters: usize,
    /// Number of objective values kept in [`SolveResult::history`].
    pub history_cap: usize,
    /// Reject momentum steps that increase the objective.
    pub monotone_restart: bool,
    /// Initial penalty parameter of the splitting method.
    pub rho: f64,
    /// Iterations between penalty updates; 0 keeps it fixed.
    pub rho_update_every: usize,
    pub rho_factor: f64,
    /// Residual ratio that triggers a penalty update.
    pub rho_balance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-8,
            max_iters: 100_000,
            history_cap: 1000,
            monotone_restart: true,
            rho: 1.0,
            rho_update_every: 50,
            rho_factor: 2.0,
            rho_balance: 10.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return bad("solver tolerance must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad("rho must be positive");
        }
        if !(self.rho_factor > 1.0) || !(self.rho_balance > 1.0) {
            return bad("rho_factor and rho_balance must exceed 1");
        }
        Ok(())
    }
}

/// Output of a solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    #[serde(skip)]
    pub x_sharp: Vector,
    pub objective: f64,
    pub iterations: usize,
    /// Optimality certificate: KKT residual for the least-squares models,
    /// relative duality gap for the DS-regularized model.
    pub kkt_residual: f64,
    pub converged: bool,
    pub history: Vec<f64>,
    /// Splitting method only: `‖y − Aᵀ(b − Ax♯)‖∞`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constraint_residual: Option<f64>,
    /// Splitting method only: final combined primal/dual residual.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub splitting_residual: Option<f64>,
    /// Splitting method only: final penalty parameter.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// `‖Aᵀ(b − Ax♯)‖∞`.
    pub correlation_inf: f64,
}

impl SolveResult {
    fn finish(self) -> Result<SolveResult> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged(Box::new(self)))
        }
    }
}

/// KKT residual of the lasso at `x`.
pub fn kkt_lasso(p: &Problem, x: &Vector) -> f64 {
    let g = p.scaled_correlation(x);
    kkt_from_correlation(x, &g, 1)
}

/// KKT residual of the group lasso at `x`.
pub fn kkt_group_lasso(p: &Problem, x: &Vector) -> f64 {
    let d = match p.model {
        Model::GroupLasso(d) => d,
        _ => p.a.block_size(),
    };
    let g = p.scaled_correlation(x);
    kkt_from_correlation(x, &g, d)
}

/// Distance of `g` from the subdifferential of `‖·‖₂,₁` (blocks of length
/// `d`) at `x`.
pub(crate) fn kkt_from_correlation(x: &Vector, g: &Vector, d: usize) -> f64 {
    let mut worst: f64 = 0.0;
    if d == 1 {
        for (&xi, &gi) in x.iter().zip(g.iter()) {
            let r = if xi != 0.0 { (gi - xi.signum()).abs() } else { (gi.abs() - 1.0).max(0.0) };
            worst = worst.max(r);
        }
        return worst;
    }
    for (xb, gb) in x.as_slice().chunks(d).zip(g.as_slice().chunks(d)) {
        let xn = xb.iter().map(|v| v * v).sum::<f64>().sqrt();
        let r = if xn > 0.0 {
            xb.iter()
                .zip(gb)
                .map(|(xv, gv)| (gv - xv / xn).powi(2))
                .sum::<f64>()
                .sqrt()
        } else {
            (gb.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).max(0.0)
        };
        worst = worst.max(r);
    }
    worst
}
