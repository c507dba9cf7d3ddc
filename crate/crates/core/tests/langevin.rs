use nalgebra::SymmetricEigen;
use phototherm::langevin::*;
use proptest::prelude::*;
use std::f64::consts::PI;

#[test]
fn dct_diagonalises_drift() {
    for n in [2, 3, 8, 40, 128] {
        assert!(diagonalization_error(n).unwrap() < 1e-10, "n = {n}");
        // Independent oracle: a dense symmetric eigensolver.
        let eig = SymmetricEigen::new(build_drift_matrix(n).unwrap().to_dense());
        let mut got: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        got.sort_by(f64::total_cmp);
        for (k, g) in got.iter().enumerate() {
            let want = 2.0 * (PI * k as f64 / (2.0 * n as f64)).sin().powi(2);
            assert!((g - want).abs() < 1e-10, "n {n} k {k}");
        }
    }
}

#[test]
fn euler_maruyama_tracks_spectral_solution() {
    let n = 40;
    let m = build_drift_matrix(n).unwrap();
    let sys = SpectralSystem::new(n).unwrap();
    let mut init = vec![0.0; n];
    init[19] = 500.0;
    init[20] = 500.0;
    let traj = integrate_langevin(&init, &m, &NoiseSpec::silent(), 0.1, 200).unwrap();
    let exact = sys.propagate(&init, 20.0);
    let peak = exact.iter().copied().fold(0.0, f64::max);
    let err = traj.last().iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 0.01 * peak, "{err} vs peak {peak}");
}

#[test]
fn unstable_step_rejected() {
    let m = build_drift_matrix(10).unwrap();
    let dt = m.stability_bound() * 1.01;
    assert!(matches!(
        integrate_langevin(&[1.0; 10], &m, &NoiseSpec::silent(), dt, 1),
        Err(phototherm::Error::Unstable { .. })
    ));
}

fn stationary_mode_variances(mode: NoiseMode, dt: f64) -> (Vec<f64>, Vec<f64>) {
    let n = 8;
    let m = build_drift_matrix(n).unwrap();
    let sys = SpectralSystem::new(n).unwrap();
    let noise = NoiseSpec { variance: 4.0, seed: 21, mode };
    let steps = (20_000.0 / dt) as usize;
    let traj = integrate_langevin_strided(&vec![0.0; n], &m, &noise, dt, steps, 50).unwrap();
    let burn = traj.n_rows() / 10;
    let modes: Vec<Vec<f64>> = (burn..traj.n_rows()).map(|i| sys.to_modes(traj.row(i))).collect();
    let var = (0..n)
        .map(|k| {
            let mean = modes.iter().map(|v| v[k]).sum::<f64>() / modes.len() as f64;
            modes.iter().map(|v| (v[k] - mean).powi(2)).sum::<f64>() / (modes.len() - 1) as f64
        })
        .collect();
    (var, sys.gamma().to_vec())
}

#[test]
fn conservative_noise_relaxes_every_mode_to_var() {
    let (var, _) = stationary_mode_variances(NoiseMode::Conservative, 0.02);
    assert!(var[0] < 1e-18, "mode 0 carries the conserved total");
    for (k, v) in var.iter().enumerate().skip(1) {
        assert!((v - 4.0).abs() < 0.4, "mode {k}: {v}");
    }
}

#[test]
fn white_noise_mode_variance_matches_discrete_oracle() {
    let dt = 0.02;
    let (var, gamma) = stationary_mode_variances(NoiseMode::White, dt);
    for k in 1..var.len() {
        // Stationary variance of x <- (1 - g dt) x + sqrt(V dt) e.
        let g = gamma[k];
        let want = 4.0 * dt / (1.0 - (1.0 - g * dt).powi(2));
        assert!((var[k] - want).abs() < 0.1 * want, "mode {k}: {} vs {want}", var[k]);
    }
}

#[test]
fn ou_update_moments() {
    let sys = SpectralSystem::new(16).unwrap();
    let init: Vec<f64> = (0..16).map(|k| 10.0 - k as f64).collect();
    let t = 1.5;
    let draws: Vec<Vec<f64>> = (0..10_000u64)
        .map(|s| evolve_kspace(&init, t, &sys, Some(&NoiseSpec::new(2.0, s).unwrap())).unwrap())
        .collect();
    for k in [1, 3, 8, 15] {
        let g = sys.gamma()[k];
        let (want_m, want_v) = (init[k] * (-g * t).exp(), 2.0 * (1.0 - (-2.0 * g * t).exp()));
        let mean = draws.iter().map(|d| d[k]).sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|d| (d[k] - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!((mean - want_m).abs() < 0.05 * want_m.abs().max(want_v.sqrt()), "mode {k} mean {mean} vs {want_m}");
        assert!((var - want_v).abs() < 0.05 * want_v, "mode {k} var {var} vs {want_v}");
    }
}

#[test]
fn singular_values_approach_continuum_at_low_k() {
    let sv = singular_values(200).unwrap();
    for k in 1..10 {
        assert!((sv.gamma[k] - sv.continuum[k]).abs() < 0.01 * sv.continuum[k]);
    }
}

proptest! {
    #[test]
    fn parseval(v in prop::collection::vec(-100.0f64..100.0, 2..64)) {
        let sys = SpectralSystem::new(v.len()).unwrap();
        let hat = sys.to_modes(&v);
        let e1: f64 = v.iter().map(|x| x * x).sum();
        let e2: f64 = hat.iter().map(|x| x * x).sum();
        prop_assert!((e1 - e2).abs() <= 1e-9 * e1.max(1.0));
        let back = sys.to_cells(&hat);
        for (a, b) in v.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn noiseless_drift_conserves_total(v in prop::collection::vec(0.0f64..10.0, 2..30), steps in 1usize..100) {
        let m = build_drift_matrix(v.len()).unwrap();
        let traj = integrate_langevin(&v, &m, &NoiseSpec::silent(), 0.2, steps).unwrap();
        let total: f64 = v.iter().sum();
        prop_assert!((traj.last().iter().sum::<f64>() - total).abs() < 1e-9 * total.max(1.0));
    }
}
