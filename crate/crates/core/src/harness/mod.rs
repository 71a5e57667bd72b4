//! Seeded certification experiments: one matrix, many signal/noise draws,
//! errors checked against the closed-form bounds.

mod config;
mod output;

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{
    block_condition, block_condition_nonstrict, sharp_condition, sharp_condition_nonstrict,
    theorem1_bounds, theorem3_bounds, BoundSet,
};
use crate::matrixlab::{block_coherence, generate_matrix, mutual_coherence, sub_coherence, MeasurementMatrix};
use crate::rng::substream;
use crate::signals::{generate_noise_with, generate_signal_with, tail_norms, NoiseModel, SignalSpec};
use crate::solvers::{analyze_residual, solve_ds_reg_with, DsRegOperator, Problem, SolveResult};
use crate::{Error, Result};

pub use config::{
    ExperimentConfig, LambdaChoice, LambdaRule, ModelKind, NoiseConfig, OutputPaths, SignalConfig,
};
pub use output::{emit_csv, emit_json, records_to_csv, CSV_COLUMNS};

/// Relative slack allowed when comparing an error with its bound.
pub const BOUND_SLACK: f64 = 1e-6;
/// Within-block coherence below which blocks count as orthonormal.
pub const ORTHONORMAL_TOL: f64 = 1e-12;
/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "COHERENCE_CS_THREADS";

/// Outcome of one trial. Optional fields are `None` when undefined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub trial: usize,
    pub mu: f64,
    pub mu_block: Option<f64>,
    pub nu: Option<f64>,
    pub condition_strict: bool,
    pub condition_nonstrict: bool,
    pub tail_l1: Option<f64>,
    pub tail_block: Option<f64>,
    /// `‖Ah‖₂`
    pub meas_error: Option<f64>,
    /// `‖AᵀAh‖∞`
    pub ds_error: Option<f64>,
    /// `‖h‖₂`
    pub sig_error: Option<f64>,
    pub bound_meas: Option<f64>,
    pub bound_sig: Option<f64>,
    pub pass_meas: Option<bool>,
    pub pass_sig: Option<bool>,
    pub iterations: Option<usize>,
    pub kkt_residual: Option<f64>,
    pub wall_ms: Option<f64>,
    pub converged: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub reason: String,
}

/// Aggregate view of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub model: ModelKind,
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    pub lambda: f64,
    pub epsilon: f64,
    pub matrix_attempts: usize,
    pub mu: f64,
    pub mu_block: Option<f64>,
    pub nu: Option<f64>,
    pub condition_strict: bool,
    pub condition_nonstrict: bool,
    pub bounds: Option<BoundSet>,
    pub converged: usize,
    /// Trials whose errors were compared with the bounds.
    pub gated: usize,
    pub pass_meas: usize,
    pub pass_sig: usize,
    pub pass_rate_meas: Option<f64>,
    pub pass_rate_sig: Option<f64>,
    pub max_ratio_meas: Option<f64>,
    pub max_ratio_sig: Option<f64>,
    pub mean_iterations: Option<f64>,
    /// No pass flag is false.
    pub certified: bool,
    pub failures: Vec<TrialFailure>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub matrix: MeasurementMatrix,
    pub records: Vec<ExperimentRecord>,
    pub summary: ExperimentSummary,
}

/// Worker count from [`THREADS_ENV`], else the available cores.
pub fn default_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_experiment_with_threads(cfg, default_threads())
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    matrix: &'a MeasurementMatrix,
    operator: Option<DsRegOperator>,
    lambda: f64,
    mu: f64,
    mu_block: Option<f64>,
    nu: Option<f64>,
    strict: bool,
    nonstrict: bool,
    bounds: Option<BoundSet>,
}

/// Runs the experiment on a pool of `threads` workers. Records do not
/// depend on the worker count.
pub fn run_experiment_with_threads(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let generated = generate_matrix(
        cfg.matrix_kind,
        cfg.m,
        cfg.n,
        cfg.d,
        cfg.seed,
        cfg.coherence_cap,
        cfg.max_attempts,
    )?;
    let matrix = generated.matrix;
    let lambda = cfg.lambda();
    let eps = cfg.noise.epsilon;
    let mu = mutual_coherence(&matrix)?;

    let (mu_block, nu, strict, nonstrict, bounds) = if cfg.model == ModelKind::GroupLasso {
        let (mu_b, nu) = if cfg.d == 1 {
            (mu, 0.0)
        } else {
            (block_coherence(&matrix)?, sub_coherence(&matrix)?)
        };
        let orthonormal = nu <= ORTHONORMAL_TOL;
        let strict = orthonormal && block_condition(cfg.k, cfg.d, mu_b);
        let nonstrict = orthonormal && block_condition_nonstrict(cfg.k, cfg.d, mu_b);
        let bounds = if strict {
            Some(theorem3_bounds(cfg.k, cfg.d, mu_b, lambda, eps, cfg.variant)?)
        } else {
            None
        };
        (Some(mu_b), Some(nu), strict, nonstrict, bounds)
    } else {
        let strict = sharp_condition(cfg.k, mu);
        let bounds = if strict {
            Some(theorem1_bounds(cfg.k, mu, lambda, eps, cfg.variant)?)
        } else {
            None
        };
        (None, None, strict, sharp_condition_nonstrict(cfg.k, mu), bounds)
    };

    let operator = (cfg.model == ModelKind::DsReg).then(|| DsRegOperator::new(&matrix));
    let ctx = Context {
        cfg,
        matrix: &matrix,
        operator,
        lambda,
        mu,
        mu_block,
        nu,
        strict,
        nonstrict,
        bounds,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let records: Vec<ExperimentRecord> =
        pool.install(|| (0..cfg.trials).into_par_iter().map(|t| run_trial(&ctx, t)).collect());

    let summary = summarize(&ctx, generated.attempts, &records);
    Ok(ExperimentOutput { matrix, records, summary })
}

fn run_trial(ctx: &Context, trial: usize) -> ExperimentRecord {
    let start = Instant::now();
    let mut record = ExperimentRecord {
        trial,
        mu: ctx.mu,
        mu_block: ctx.mu_block,
        nu: ctx.nu,
        condition_strict: ctx.strict,
        condition_nonstrict: ctx.nonstrict,
        tail_l1: None,
        tail_block: None,
        meas_error: None,
        ds_error: None,
        sig_error: None,
        bound_meas: None,
        bound_sig: None,
        pass_meas: None,
        pass_sig: None,
        iterations: None,
        kkt_residual: None,
        wall_ms: None,
        converged: false,
        failure: None,
    };
    if let Err(e) = fill_trial(ctx, trial, &mut record) {
        record.failure = Some(e.to_string());
    }
    if ctx.cfg.record_wall_time {
        record.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    record
}

fn fill_trial(ctx: &Context, trial: usize, record: &mut ExperimentRecord) -> Result<()> {
    let cfg = ctx.cfg;
    let a = ctx.matrix;
    let mut rng = substream(cfg.seed, trial as u64);
    let spec = SignalSpec {
        n: cfg.n,
        structure: cfg.signal.structure,
        magnitude: cfg.signal.magnitude,
        seed: cfg.seed,
    };
    let x = generate_signal_with(&spec, &mut rng)?;
    let noise = NoiseModel {
        kind: cfg.noise.kind,
        epsilon: cfg.noise.epsilon,
        seed: cfg.seed,
        ds_norm: cfg.noise.ds_norm,
    };
    let z = generate_noise_with(&noise, a, &mut rng)?;
    let b = a.entries() * &x + z;

    let tails = tail_norms(&x, cfg.k.min(cfg.n), cfg.d)?;
    record.tail_l1 = Some(tails.l1_tail);
    if cfg.d > 1 {
        record.tail_block = Some(tails.block_tail);
    }

    let problem = Problem::new(a, b, ctx.lambda, cfg.model.with_block_size(cfg.d))?;
    let outcome = match &ctx.operator {
        Some(op) => solve_ds_reg_with(&problem, op, &cfg.solver),
        None => problem.solve(&cfg.solver),
    };
    let result: SolveResult = match outcome {
        Ok(res) => res,
        Err(Error::NotConverged(res)) => {
            record.failure = Some(format!(
                "not converged after {} iterations (residual {:e})",
                res.iterations, res.kkt_residual
            ));
            *res
        }
        Err(e) => return Err(e),
    };
    record.iterations = Some(result.iterations);
    record.kkt_residual = Some(result.kkt_residual);
    record.converged = result.converged;

    let analysis = analyze_residual(&x, &result.x_sharp, a, cfg.k.min(cfg.n / cfg.d), cfg.d)?;
    record.meas_error = Some(analysis.meas_error);
    record.ds_error = Some(analysis.ds_error);
    record.sig_error = Some(analysis.sig_error);

    if let Some(bounds) = &ctx.bounds {
        let tail = if cfg.model == ModelKind::GroupLasso { tails.block_tail } else { tails.l1_tail };
        let bound_meas = bounds.measurement_bound(tail);
        let bound_sig = bounds.signal_bound(tail);
        record.bound_meas = Some(bound_meas);
        record.bound_sig = Some(bound_sig);
        if ctx.strict && result.converged {
            let meas = if cfg.model == ModelKind::DsReg { analysis.ds_error } else { analysis.meas_error };
            record.pass_meas = Some(within(meas, bound_meas));
            record.pass_sig = Some(within(analysis.sig_error, bound_sig));
        }
    }
    Ok(())
}

/// `error ≤ bound` up to [`BOUND_SLACK`].
pub fn within(error: f64, bound: f64) -> bool {
    error <= bound * (1.0 + BOUND_SLACK)
}

fn summarize(ctx: &Context, attempts: usize, records: &[ExperimentRecord]) -> ExperimentSummary {
    let cfg = ctx.cfg;
    let gated: Vec<&ExperimentRecord> = records.iter().filter(|r| r.pass_meas.is_some()).collect();
    let count = |f: fn(&ExperimentRecord) -> Option<bool>| gated.iter().filter(|r| f(r) == Some(true)).count();
    let pass_meas = count(|r| r.pass_meas);
    let pass_sig = count(|r| r.pass_sig);
    let rate = |passed: usize| (!gated.is_empty()).then(|| passed as f64 / gated.len() as f64);
    let max_ratio = |err: fn(&ExperimentRecord) -> Option<f64>, bound: fn(&ExperimentRecord) -> Option<f64>| {
        gated
            .iter()
            .filter_map(|r| Some(err(r)? / bound(r)?))
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
    };
    let meas_side: fn(&ExperimentRecord) -> Option<f64> =
        if cfg.model == ModelKind::DsReg { |r| r.ds_error } else { |r| r.meas_error };
    let iterations: Vec<usize> = records.iter().filter_map(|r| r.iterations).collect();
    let mean_iterations = (!iterations.is_empty())
        .then(|| iterations.iter().sum::<usize>() as f64 / iterations.len() as f64);
    let failures = records
        .iter()
        .filter_map(|r| r.failure.as_ref().map(|reason| TrialFailure { trial: r.trial, reason: reason.clone() }))
        .collect();

    ExperimentSummary {
        model: cfg.model,
        m: cfg.m,
        n: cfg.n,
        d: cfg.d,
        k: cfg.k,
        trials: cfg.trials,
        seed: cfg.seed,
        lambda: ctx.lambda,
        epsilon: cfg.noise.epsilon,
        matrix_attempts: attempts,
        mu: ctx.mu,
        mu_block: ctx.mu_block,
        nu: ctx.nu,
        condition_strict: ctx.strict,
        condition_nonstrict: ctx.nonstrict,
        bounds: ctx.bounds,
        converged: records.iter().filter(|r| r.converged).count(),
        gated: gated.len(),
        pass_meas,
        pass_sig,
        pass_rate_meas: rate(pass_meas),
        pass_rate_sig: rate(pass_sig),
        max_ratio_meas: max_ratio(meas_side, |r| r.bound_meas),
        max_ratio_sig: max_ratio(|r| r.sig_error, |r| r.bound_sig),
        mean_iterations,
        certified: pass_meas == gated.len() && pass_sig == gated.len(),
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(json_extra: &str) -> ExperimentConfig {
        let text = format!(
            r#"{{
            "model": "lasso", "m": 256, "n": 300, "k": 2,
            "matrix_kind": "gaussian", "coherence_cap": 0.3333333333333333,
            "signal": {{"structure": {{"kind": "sparse", "k": 2}}, "magnitude": "unit"}},
            "noise": {{"kind": "l2_ball", "epsilon": 0.1}},
            "trials": 4, "seed": 3 {json_extra}
        }}"#
        );
        ExperimentConfig::from_json(&text).unwrap()
    }

    #[test]
    fn noiseless_exactly_sparse_trials_pass() {
        let mut cfg = config(r#", "lambda": 0.05"#);
        cfg.noise.epsilon = 0.0;
        let out = run_experiment_with_threads(&cfg, 1).unwrap();
        let s = &out.summary;
        assert!(s.condition_strict, "mu = {}", s.mu);
        assert_eq!(s.gated, 4);
        assert!(s.certified);
        for r in &out.records {
            assert_eq!(r.tail_l1, Some(0.0));
            let b = s.bounds.unwrap();
            assert_eq!(r.bound_meas, Some(b.c2));
            assert_eq!(r.bound_sig, Some(b.c4));
        }
    }

    #[test]
    fn violated_condition_leaves_flags_undefined() {
        let mut cfg = config("");
        cfg.coherence_cap = None;
        cfg.m = 8;
        cfg.n = 40;
        let out = run_experiment_with_threads(&cfg, 1).unwrap();
        assert!(!out.summary.condition_strict);
        assert_eq!(out.summary.gated, 0);
        assert!(out.summary.pass_rate_meas.is_none());
        for r in &out.records {
            assert_eq!((r.pass_meas, r.pass_sig, r.bound_meas), (None, None, None));
            assert!(r.meas_error.is_some());
        }
    }

    #[test]
    fn records_do_not_depend_on_thread_count() {
        let cfg = config("");
        let one = run_experiment_with_threads(&cfg, 1).unwrap();
        let three = run_experiment_with_threads(&cfg, 3).unwrap();
        assert_eq!(one.records, three.records);
        assert_eq!(records_to_csv(&one.records).unwrap(), records_to_csv(&three.records).unwrap());
    }

    #[test]
    fn within_uses_relative_slack() {
        assert!(within(1.0 + 0.5e-6, 1.0));
        assert!(!within(1.0 + 2e-6, 1.0));
    }
}
