mod common;

use coherence_cs::matrixlab::{generate_matrix, MatrixKind, MeasurementMatrix};
use coherence_cs::signals::{generate_noise_with, generate_signal_with, Magnitude, NoiseKind, NoiseModel, SignalSpec, Structure};
use coherence_cs::rng::substream;
use coherence_cs::solvers::{
    analyze_residual, block_soft_threshold, kkt_lasso, soft_threshold, solve_ds_reg, solve_lasso, Model, Problem,
    SolverConfig,
};
use coherence_cs::{Matrix, Vector};
use common::{gaussian_matrix, gaussian_vector, max_abs, subgradient_oracle, RefModel};

fn scalar() -> MeasurementMatrix {
    MeasurementMatrix::new(Matrix::from_element(1, 1, 1.0), 1).unwrap()
}

#[test]
fn scalar_instances_match_soft_threshold_for_every_model() {
    let a = scalar();
    for (b, lam) in [(3.0, 1.0), (-0.4, 0.5), (0.0, 2.0), (-7.5, 0.25), (1.0, 1.0)] {
        let expected = soft_threshold(&Vector::from_element(1, b), lam)[0];
        for model in [Model::Lasso, Model::DsReg, Model::GroupLasso(1)] {
            let p = Problem::new(&a, Vector::from_element(1, b), lam, model).unwrap();
            let x = p.solve(&SolverConfig::default()).unwrap().x_sharp[0];
            assert!((x - expected).abs() <= 1e-10, "{model:?} b={b} lam={lam}: {x} vs {expected}");
        }
    }
}

#[test]
fn lasso_matches_long_subgradient_run() {
    let a = gaussian_matrix(20, 40, 1, 31);
    let b = gaussian_vector(20, 32, 0);
    let p = Problem::new(&a, b.clone(), 0.1, Model::Lasso).unwrap();
    let res = solve_lasso(&p, &SolverConfig::default()).unwrap();
    assert!(res.kkt_residual <= 1e-8);
    let mine = common::objective(a.entries(), &b, 0.1, RefModel::Lasso, &res.x_sharp);
    let (oracle, _) = subgradient_oracle(a.entries(), &b, 0.1, RefModel::Lasso, 1_000_000, 20);
    assert!(mine <= oracle + 1e-12, "solver {mine} above oracle {oracle}");
    assert!(oracle - mine <= 1e-8, "gap {}", oracle - mine);
}

#[test]
fn lasso_solution_has_small_duality_gap() {
    let a = gaussian_matrix(20, 40, 1, 31);
    let b = gaussian_vector(20, 32, 0);
    let p = Problem::new(&a, b.clone(), 0.1, Model::Lasso).unwrap();
    let res = solve_lasso(&p, &SolverConfig::default()).unwrap();
    let gap = common::lasso_duality_gap(a.entries(), &b, 0.1, &res.x_sharp);
    assert!((-1e-12..=1e-8).contains(&gap), "gap {gap}");
    let (oracle, _) = subgradient_oracle(a.entries(), &b, 0.1, RefModel::Lasso, 1_000_000, 20);
    let mine = common::objective(a.entries(), &b, 0.1, RefModel::Lasso, &res.x_sharp);
    assert!(mine <= oracle + 1e-12);
}

#[test]
fn ds_reg_matches_long_subgradient_run() {
    let a = gaussian_matrix(8, 12, 1, 41);
    let b = gaussian_vector(8, 42, 0);
    let p = Problem::new(&a, b.clone(), 0.1, Model::DsReg).unwrap();
    let res = solve_ds_reg(&p, &SolverConfig::default()).unwrap();
    let mine = common::objective(a.entries(), &b, 0.1, RefModel::DsReg, &res.x_sharp);
    let (oracle, _) = subgradient_oracle(a.entries(), &b, 0.1, RefModel::DsReg, 1_000_000, 20);
    assert!((mine - oracle).abs() <= 1e-5, "{mine} vs {oracle}");
    let corr = a.entries().transpose() * (&b - a.entries() * &res.x_sharp);
    assert!((res.correlation_inf - max_abs(&corr)).abs() <= 1e-12);
    assert!(res.constraint_residual.unwrap() <= 1e-8);
}

#[test]
fn group_lasso_on_orthonormal_design_is_block_shrinkage() {
    // AᵀA = I, so the minimizer is block soft thresholding of Aᵀb.
    let q = Matrix::from_row_slice(6, 4, &[
        0.5, 0.5, 0.5, 0.5, //
        0.5, -0.5, 0.5, -0.5, //
        0.5, 0.5, -0.5, -0.5, //
        0.5, -0.5, -0.5, 0.5, //
        0.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 0.0,
    ]);
    let a = MeasurementMatrix::new(q.clone(), 2).unwrap();
    for (seed, lam) in [(1, 0.3), (2, 1.0), (3, 2.5)] {
        let b = gaussian_vector(6, seed, 0) * 2.0;
        let p = Problem::new(&a, b.clone(), lam, Model::GroupLasso(2)).unwrap();
        let res = p.solve(&SolverConfig::default()).unwrap();
        let expected = block_soft_threshold(&(q.transpose() * &b), lam, 2);
        assert!((res.x_sharp - expected).amax() <= 1e-8);
    }
}

#[test]
fn zero_is_optimal_when_correlation_is_below_lambda() {
    let a = gaussian_matrix(10, 20, 1, 5);
    let b = gaussian_vector(10, 6, 0);
    let lam = max_abs(&(a.entries().transpose() * &b)) * 1.01;
    let p = Problem::new(&a, b, lam, Model::Lasso).unwrap();
    assert_eq!(kkt_lasso(&p, &Vector::zeros(20)), 0.0);
    let res = p.solve(&SolverConfig::default()).unwrap();
    assert_eq!(res.x_sharp, Vector::zeros(20));
}

#[test]
fn perturbed_solution_is_detected() {
    let a = gaussian_matrix(20, 40, 1, 8);
    let b = gaussian_vector(20, 9, 0);
    let p = Problem::new(&a, b, 0.1, Model::Lasso).unwrap();
    let x = p.solve(&SolverConfig::default()).unwrap().x_sharp;
    let support: Vec<usize> = (0..40).filter(|&i| x[i] != 0.0).collect();
    assert!(!support.is_empty());
    let mut y = x.clone();
    for &i in &support {
        y[i] += 0.1;
    }
    assert!(kkt_lasso(&p, &y) > 1e-3);
}

#[test]
fn error_norms_match_direct_recomputation() {
    let a = gaussian_matrix(30, 60, 1, 12);
    let x = gaussian_vector(60, 13, 0);
    let xs = gaussian_vector(60, 14, 0);
    let r = analyze_residual(&x, &xs, &a, 3, 1).unwrap();
    let h = &xs - &x;
    let ah = a.entries() * &h;
    let ds = max_abs(&(a.entries().transpose() * &ah));
    assert!((r.ds_error - ds).abs() <= 1e-14 * ds.max(1.0));
    assert!((r.meas_error - ah.norm()).abs() <= 1e-14 * ah.norm().max(1.0));
    assert_eq!(r.e.len(), 3);
    assert!(r.e1.iter().all(|i| !r.e.contains(i)));
}

#[test]
fn optimality_inequalities_hold_at_lasso_solutions() {
    let g = generate_matrix(MatrixKind::Gaussian, 128, 160, 1, 77, None, 1).unwrap();
    let a = &g.matrix;
    let (k, eps, lam) = (2, 0.1, 0.1);
    for trial in 0..20u64 {
        let mut rng = substream(90, trial);
        let spec = SignalSpec {
            n: 160,
            structure: if trial % 2 == 0 { Structure::Sparse { k: 4 } } else { Structure::Compressible { decay_exponent: 1.5 } },
            magnitude: Magnitude::Gaussian,
            seed: 0,
        };
        let x = generate_signal_with(&spec, &mut rng).unwrap();
        let noise = NoiseModel { kind: NoiseKind::L2Ball, epsilon: eps, seed: 0, ds_norm: Default::default() };
        let z = generate_noise_with(&noise, a, &mut rng).unwrap();
        let p = Problem::new(a, a.entries() * &x + z, lam, Model::Lasso).unwrap();
        let xs = p.solve(&SolverConfig::default()).unwrap().x_sharp;
        let r = analyze_residual(&x, &xs, a, k, 1).unwrap();
        assert_eq!(r.e.len(), k);
        let on_e = |i: usize| r.e.contains(&i);
        let h_e: f64 = (0..160).filter(|&i| on_e(i)).map(|i| r.h[i].abs()).sum();
        let h_c: f64 = (0..160).filter(|&i| !on_e(i)).map(|i| r.h[i].abs()).sum();
        let x_c: f64 = (0..160).filter(|&i| !on_e(i)).map(|i| x[i].abs()).sum();
        let ah = r.meas_error;
        let slack = 1e-8;
        assert!(ah * ah - 2.0 * eps * ah <= 2.0 * lam * (h_e - h_c + 2.0 * x_c) + slack);
        assert!(h_c <= h_e + 2.0 * x_c + eps / lam * ah + slack);
    }
}

#[test]
fn history_never_increases_with_restart() {
    let a = gaussian_matrix(40, 80, 1, 3);
    let b = gaussian_vector(40, 4, 0);
    let cfg = SolverConfig { history_cap: 100_000, ..SolverConfig::default() };
    let res = Problem::new(&a, b, 0.05, Model::Lasso).unwrap().solve(&cfg).unwrap();
    assert!(res.history.len() > 5);
    for w in res.history.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} then {}", w[0], w[1]);
    }
}
