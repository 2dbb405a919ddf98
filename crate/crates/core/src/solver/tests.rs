use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::bases::{gradient_blocks_for, o_subproblem};
use super::*;
use crate::datagen::{sample_er_cg, sample_signals};
use crate::graph::NodeBases;
use crate::linalg::{qr_retraction, random_special_orthogonal, sym_eigen};
use crate::operator::{kron_laplacian, kron_laplacian_adjoint, lipschitz_constant};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_psd(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d + 2, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() / d as f64
}

/// State at the ground truth with `S = L^+` and `U (Lambda ⊗ I) U^T = L`.
fn truth_state(v: usize, n: usize, seed: u64) -> (SolverState, crate::datagen::GroundTruth) {
    let gt = sample_er_cg(v, n, 0.6, 0.5, 2.0, seed).unwrap();
    let lap = gt.laplacian.matrix().clone();
    let s = lap.clone().pseudo_inverse(1e-10).unwrap();
    let eig = sym_eigen(&lap);
    let u = eig.vectors.columns(n, n * (v - 1)).into_owned();
    let lambda = DVector::from_iterator(v - 1, (0..v - 1).map(|b| eig.values.rows(n + b * n, n).mean()));
    let state = SolverState {
        v,
        n,
        w: gt.cg.weight_vector(),
        bases: gt.bases.clone(),
        u,
        lambda,
        s,
        iteration: 0,
        history: Vec::new(),
    };
    (state, gt)
}

fn random_state(v: usize, n: usize, seed: u64) -> SolverState {
    let mut r = rng(seed);
    let hp = Hyperparams::default();
    let s = random_psd(v * n, &mut r);
    let mut state = initial_state(s, v, n, &hp, Method::Kron);
    state.w = DVector::from_fn(state.w.len(), |_, _| r.random_range(0.0..2.0));
    let blocks = (0..v).map(|_| random_special_orthogonal(n, &mut r)).collect();
    state.bases = NodeBases::new(n, blocks).unwrap();
    state.u = update_u(&state);
    state.lambda = update_lambda(&state, &hp).unwrap();
    state
}

#[test]
fn euclidean_gradient_matches_finite_differences() {
    let h = 1e-6;
    let mut r = rng(1);
    for v in [3, 4] {
        for n in [1, 2, 3] {
            let d = v * n;
            let w = DVector::from_fn(v * (v - 1) / 2, |_, _| r.random_range(0.1..2.0));
            let k = kron_laplacian(&w, v, n).unwrap();
            let o = DMatrix::from_fn(d, d, |_, _| r.random_range(-1.0..1.0));
            let s = random_psd(d, &mut r);
            let p = random_psd(d, &mut r);
            let beta = r.random_range(0.5..5.0);
            let g = euclidean_gradient_o(&k, &o, &s, &p, beta);
            let mut fd = DMatrix::zeros(d, d);
            for a in 0..d {
                for b in 0..d {
                    let mut plus = o.clone();
                    plus[(a, b)] += h;
                    let mut minus = o.clone();
                    minus[(a, b)] -= h;
                    fd[(a, b)] = (o_subproblem_dense(&k, &plus, &s, &p, beta) - o_subproblem_dense(&k, &minus, &s, &p, beta)) / (2.0 * h);
                }
            }
            let rel = (&g - &fd).norm() / g.norm();
            assert!(rel < 1e-5, "v={v} n={n}: relative error {rel:e}");
        }
    }
}

#[test]
fn block_gradient_matches_dense_diagonal() {
    for (v, n) in [(3, 2), (4, 3)] {
        let state = random_state(v, n, 7);
        let beta = 3.0;
        let dense = euclidean_gradient_o(&state.kron(), &state.bases.dense(), &state.s, &state.spectral_model(), beta);
        let blocks = gradient_blocks_for(&state, beta);
        for (i, b) in blocks.iter().enumerate() {
            let expect = dense.view((i * n, i * n), (n, n));
            assert!((b - expect).amax() < 1e-10);
        }
        let value = o_subproblem(&state, &state.bases, beta);
        let dense_value = o_subproblem_dense(&state.kron(), &state.bases.dense(), &state.s, &state.spectral_model(), beta);
        assert!((value - dense_value).abs() < 1e-9 * dense_value.abs().max(1.0));
    }
}

#[test]
fn truth_is_stationary_for_bases() {
    for n in [1, 2, 3] {
        let (state, _) = truth_state(6, n, 11);
        let euclid = gradient_blocks_for(&state, 4.0);
        let riem = riemannian_gradient(&state.bases, &euclid);
        let norm: f64 = riem.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt();
        assert!(norm < 1e-9, "n={n}: {norm:e}");
    }
}

#[test]
fn update_o_keeps_truth() {
    let (state, _) = truth_state(6, 2, 12);
    let hp = Hyperparams::default();
    let (bases, info) = update_o(&state, &hp);
    assert!(info.end_value <= info.start_value + 1e-12);
    for i in 0..6 {
        for j in 0..i {
            assert!((bases.edge_map(i, j) - state.bases.edge_map(i, j)).amax() < 1e-8);
        }
    }
}

#[test]
fn update_o_descends_and_stays_special_orthogonal() {
    let (mut state, _) = truth_state(6, 2, 13);
    state.bases = NodeBases::identity(6, 2);
    let hp = Hyperparams::default();
    let before = o_subproblem(&state, &state.bases, hp.beta);
    let (bases, info) = update_o(&state, &hp);
    let after = o_subproblem(&state, &bases, hp.beta);
    assert!(after < before, "{after} !< {before}");
    assert!((info.end_value - after).abs() < 1e-9 * after.abs().max(1.0));
    let (defect, min_det) = bases.max_defect();
    assert!(defect < 1e-8 && (min_det - 1.0).abs() < 1e-8);
}

#[test]
fn update_o_is_identity_map_for_scalar_stalks() {
    let state = random_state(5, 1, 3);
    let (bases, info) = update_o(&state, &Hyperparams::default());
    assert_eq!(bases, state.bases);
    assert_eq!(info.inner_iters, 0);
}

#[test]
fn retraction_stays_on_group() {
    let mut r = rng(5);
    for n in [2, 3, 4] {
        let o = random_special_orthogonal(n, &mut r);
        let xi = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
        let q = qr_retraction(&(&o + &o * crate::linalg::skew(&xi) * 0.3));
        assert!(crate::linalg::orthogonality_defect(&q) < 1e-12);
        assert!((q.determinant() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn update_w_fixed_point_when_residual_vanishes() {
    let mut state = random_state(5, 2, 21);
    let hp = Hyperparams::default();
    // choose S so that L_K(w) = O [P - S / beta] O^T exactly
    state.s = (state.spectral_model() - state.laplacian()) * hp.beta;
    assert!(weight_residual(&state, hp.beta).amax() < 1e-10);
    let w = update_w(&state, &hp);
    assert!((w - &state.w).amax() < 1e-10);
}

#[test]
fn update_w_is_projected_gradient_step() {
    let state = random_state(5, 2, 22);
    let hp = Hyperparams::with_penalties(0.3, 2.0);
    let tau = lipschitz_constant(5, 2);
    let grad = kron_laplacian_adjoint(&weight_residual(&state, hp.beta), 5, 2).unwrap();
    let expect = DVector::from_fn(state.w.len(), |k, _| (state.w[k] - grad[k] / tau - hp.alpha / (hp.beta * tau)).max(0.0));
    assert!((update_w(&state, &hp) - expect).amax() < 1e-12);
}

#[test]
fn weight_step_decreases_subproblem() {
    for seed in 0..10 {
        let state = random_state(5, 2, 100 + seed);
        let hp = Hyperparams::with_penalties(0.1, 3.0);
        let before = weight_subproblem(&state, &state.w, &hp);
        let after = weight_subproblem(&state, &update_w(&state, &hp), &hp);
        assert!(after <= before + 1e-10, "seed {seed}: {after} > {before}");
        let repeated = weight_subproblem(&state, &update_w(&state, &Hyperparams { w_inner_iters: 20, ..hp }), &hp);
        assert!(repeated <= after + 1e-10);
    }
}

#[test]
fn step_size_inverse_lipschitz_is_safe_but_double_is_not_always() {
    // For a quadratic with curvature tau along the top direction, the step
    // 1/tau is exact there; 2.5/tau overshoots.
    let v = 4;
    let n = 2;
    let map = crate::index::EdgeIndexMap::new(v);
    let ones = DVector::from_element(map.len(), 1.0);
    let y = kron_laplacian(&ones, v, n).unwrap();
    let top = kron_laplacian_adjoint(&y, v, n).unwrap();
    let curvature = top.dot(&ones) / ones.dot(&ones);
    assert!((curvature - lipschitz_constant(v, n)).abs() < 1e-12);
}

#[test]
fn update_u_returns_nonkernel_eigenvectors() {
    let state = random_state(5, 2, 31);
    let u = update_u(&state);
    let lap = state.laplacian();
    assert!((u.tr_mul(&u) - DMatrix::<f64>::identity(8, 8)).amax() < 1e-10);
    let m = u.transpose() * &lap * &u;
    let off = &m - DMatrix::from_diagonal(&m.diagonal());
    assert!(off.amax() < 1e-8);
    let diag = m.diagonal();
    assert!(diag.as_slice().windows(2).all(|p| p[0] <= p[1] + 1e-10));
}

#[test]
fn update_u_maximizes_weighted_trace() {
    let mut state = random_state(5, 2, 32);
    let mut r = rng(33);
    state.u = update_u(&state);
    let lap = state.laplacian();
    let weights = DMatrix::from_diagonal(&state.expanded_lambda());
    let value = |u: &DMatrix<f64>| (u.transpose() * &lap * u * &weights).trace();
    let best = value(&state.u);
    for _ in 0..20 {
        let z = DMatrix::from_fn(10, 8, |_, _| r.random_range(-1.0..1.0));
        let perturbed = (&state.u + z * 0.05).qr().q();
        assert!(value(&perturbed) <= best + 1e-9);
    }
}

#[test]
fn objective_is_monotone_and_state_feasible() {
    for seed in 0..3 {
        let gt = sample_er_cg(8, 2, 0.5, 0.2, 3.0, seed).unwrap();
        let x = sample_signals(&gt, 200, seed + 50).unwrap();
        let s = x.covariance().unwrap();
        let hp = Hyperparams { max_outer_iters: 80, w_inner_iters: 10, ..Hyperparams::default() };
        for method in [Method::Scgl, Method::Kron] {
            let res = fit(&s, 8, 2, &hp, method).unwrap();
            for pair in res.objective_trace.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-9 * pair[0].abs(), "{method}: {} -> {}", pair[0], pair[1]);
            }
            res.state.check_invariants(&hp, 1e-8).unwrap();
        }
    }
}

#[test]
fn scalar_stalks_make_methods_identical() {
    let gt = sample_er_cg(7, 1, 0.5, 0.2, 3.0, 4).unwrap();
    let s = sample_signals(&gt, 100, 5).unwrap().covariance().unwrap();
    let hp = Hyperparams { max_outer_iters: 60, ..Hyperparams::default() };
    let a = fit(&s, 7, 1, &hp, Method::Scgl).unwrap();
    let b = fit(&s, 7, 1, &hp, Method::Kron).unwrap();
    assert_eq!(a.state.w, b.state.w);
    assert_eq!(a.objective_trace, b.objective_trace);
    assert_eq!(a.laplacian.matrix(), b.laplacian.matrix());
}

#[test]
fn right_gauge_conjugates_the_output() {
    let gt = sample_er_cg(6, 2, 0.6, 0.5, 2.0, 8).unwrap();
    let s = sample_signals(&gt, 300, 9).unwrap().covariance().unwrap();
    let r = crate::linalg::rotation2(0.7);
    let big = DMatrix::<f64>::identity(6, 6).kronecker(&r);
    let s_rot = big.transpose() * &s * &big;
    let hp = Hyperparams { max_outer_iters: 40, w_inner_iters: 10, ..Hyperparams::default() };
    let a = fit(&s, 6, 2, &hp, Method::Scgl).unwrap();
    let b = fit(&s_rot, 6, 2, &hp, Method::Scgl).unwrap();
    assert!((a.weights() - b.weights()).amax() < 1e-6);
    for i in 0..6 {
        for j in 0..i {
            let ea = a.bases().edge_map(i, j);
            let eb = b.bases().edge_map(i, j);
            assert!((r.transpose() * ea * &r - eb).amax() < 1e-6);
        }
    }
}

#[test]
fn scgl_beats_kron_on_rotated_data() {
    let gt = sample_er_cg(8, 2, 0.5, 0.2, 3.0, 14).unwrap();
    let s = sample_signals(&gt, 400, 15).unwrap().covariance().unwrap();
    let hp = Hyperparams { beta: 2.0, max_outer_iters: 300, w_inner_iters: 20, ..Hyperparams::default() };
    let a = fit(&s, 8, 2, &hp, Method::Scgl).unwrap();
    let b = fit(&s, 8, 2, &hp, Method::Kron).unwrap();
    let truth = gt.laplacian.matrix();
    let err_a = (a.laplacian.matrix() - truth).norm();
    let err_b = (b.laplacian.matrix() - truth).norm();
    assert!(err_a < 0.5 * err_b, "scgl {err_a}, kron {err_b}");
}

#[test]
fn spectral_initialization_recovers_generating_bases() {
    let gt = sample_er_cg(7, 3, 0.5, 0.2, 3.0, 16).unwrap();
    let s = sample_signals(&gt, 500, 17).unwrap().covariance().unwrap();
    let bases = spectral_bases(&s, 7, 3).unwrap();
    for e in gt.cg.edges() {
        assert!((bases.edge_map(e.i, e.j) - &e.map).amax() < 1e-8);
    }
}

#[test]
fn fit_rejects_bad_input() {
    let hp = Hyperparams::default();
    let mut s = DMatrix::<f64>::identity(4, 4);
    s[(0, 0)] = -1.0;
    assert!(matches!(fit(&s, 2, 2, &hp, Method::Scgl), Err(crate::Error::NotPsd { .. })));
    assert!(fit(&DMatrix::identity(5, 5), 2, 2, &hp, Method::Scgl).is_err());
    let mut asym = DMatrix::<f64>::identity(4, 4);
    asym[(0, 1)] = 0.5;
    assert!(fit(&asym, 2, 2, &hp, Method::Scgl).is_err());
    assert!(fit(&DMatrix::identity(4, 4), 2, 2, &Hyperparams { beta: 0.0, ..hp }, Method::Scgl).is_err());
}

#[test]
fn covariance_needs_two_samples() {
    assert!(covariance(&DMatrix::zeros(3, 1)).is_err());
    let x = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 2.0, -2.0]);
    assert_eq!(covariance(&x).unwrap(), DMatrix::from_row_slice(2, 2, &[2.0, 4.0, 4.0, 8.0]));
}

#[test]
fn observer_sees_every_iteration() {
    let gt = sample_er_cg(5, 2, 0.6, 0.5, 2.0, 18).unwrap();
    let s = sample_signals(&gt, 100, 19).unwrap().covariance().unwrap();
    let hp = Hyperparams { max_outer_iters: 15, rel_tol: 1e-300, ..Hyperparams::default() };
    let mut lines = Vec::new();
    let res = fit_with_observer(&s, 5, 2, &hp, Method::Scgl, |rec| lines.push(rec.to_string())).unwrap();
    assert_eq!(lines.len(), 15);
    assert_eq!(res.objective_trace.len(), 16);
    assert_eq!(lines[0].split(',').count(), IterationRecord::HEADER.split(',').count());
}

#[test]
fn cross_validation_edge_cases() {
    let gt = sample_er_cg(5, 2, 0.6, 0.5, 2.0, 20).unwrap();
    let x = sample_signals(&gt, 60, 21).unwrap().x;
    let base = Hyperparams { max_outer_iters: 20, ..Hyperparams::default() };
    let single = cross_validate(&x, 5, 2, &[(0.0, 7.0)], 3, &base, Method::Scgl, 1).unwrap();
    assert_eq!((single.best.alpha, single.best.beta, single.best_index), (0.0, 7.0, 0));

    let dup = cross_validate(&x, 5, 2, &[(0.0, 5.0), (0.0, 5.0)], 3, &base, Method::Scgl, 1).unwrap();
    assert_eq!(dup.best_index, 0);
    assert_eq!(dup.scores[0], dup.scores[1]);

    assert!(cross_validate(&x, 5, 2, &[], 3, &base, Method::Scgl, 1).is_err());
    assert!(cross_validate(&x, 5, 2, &[(0.0, 1.0), (0.0, 2.0)], 1, &base, Method::Scgl, 1).is_err());
    let a = fold_assignment(60, 3, 4);
    assert_eq!(a, fold_assignment(60, 3, 4));
    for f in 0..3 {
        assert_eq!(a.iter().filter(|x| **x == f).count(), 20);
    }
}
