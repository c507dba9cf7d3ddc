use nalgebra::{DMatrix, DVector};
use phototherm::virtual_wave::*;
use proptest::prelude::*;

fn reference_ls(k: &KernelMatrix, y: &[f64]) -> Vec<f64> {
    let m: &DMatrix<f64> = k.entries();
    let qr = (m.transpose() * m).cholesky().expect("well conditioned");
    qr.solve(&(m.transpose() * DVector::from_column_slice(y))).as_slice().to_vec()
}

#[test]
fn reference_rows_integrate_to_two() {
    let k = KernelMatrix::reference();
    for (i, &t) in k.t_grid().iter().enumerate() {
        if t >= 10.0 * k.dt() {
            assert!((k.row_sum(i) - 2.0).abs() < 0.02, "t {t}: {}", k.row_sum(i));
        }
    }
}

#[test]
fn kernel_integrates_to_two() {
    for t in [0.5f64, 3.0, 40.0, 400.0] {
        // Fine trapezoid over the whole line.
        let h = 1e-3 * t.sqrt();
        let n = (40.0 * t.sqrt() / h) as i64;
        let s: f64 = (-n..=n).map(|i| kernel_value(t, i as f64 * h, 1.0, 0.5).unwrap()).sum::<f64>() * h;
        assert!((s - 2.0).abs() < 1e-6, "t {t}: {s}");
    }
}

#[test]
fn spectrum_decays_three_decades_in_first_quarter() {
    let s = KernelMatrix::reference().singular_values();
    assert!(s.windows(2).all(|w| w[0] >= w[1]));
    assert!(s[0] / s[s.len() / 4] >= 1e3, "{}", s[0] / s[s.len() / 4]);
}

#[test]
fn delta_response_falls_as_inverse_root_time() {
    let k = KernelMatrix::reference();
    let mut x = vec![0.0; k.n_tp()];
    x[0] = 1.0;
    let y = k.apply(&x);
    let c0 = y[0] * k.t_grid()[0].sqrt();
    for (v, t) in y.iter().zip(k.t_grid()) {
        assert!((v * t.sqrt() - c0).abs() < 1e-12 * c0);
    }
}

fn small_kernel() -> KernelMatrix {
    KernelMatrix::build(&time_grid(40, 1.0), &retarded_grid(6, 2.0), 1.0, 0.5).unwrap()
}

#[test]
fn untruncated_tsvd_is_least_squares() {
    let k = small_kernel();
    let y: Vec<f64> = (0..40).map(|i| ((i as f64) * 0.3).sin() + 1.0).collect();
    let want = reference_ls(&k, &y);
    let got = invert_tsvd(&k, &y, 0.0).unwrap();
    assert_eq!(got.rank, 6);
    for (a, b) in got.x.iter().zip(&want) {
        assert!((a - b).abs() < 1e-6 * want.iter().fold(0.0f64, |m, v| m.max(v.abs())), "{a} vs {b}");
    }
}

#[test]
fn unregularised_admm_is_least_squares() {
    let k = small_kernel();
    let y: Vec<f64> = (0..40).map(|i| ((i as f64) * 0.3).sin() + 1.0).collect();
    let want = reference_ls(&k, &y);
    let cfg = AdmmConfig {
        lambda: Lambda::Absolute(0.0),
        rho: None,
        max_iters: 200_000,
        primal_tol: 1e-12,
        dual_tol: 1e-12,
        nonnegative: false,
    };
    let sol = AdmmSolver::new(&k, cfg.rho).unwrap().solve(&y, &cfg).unwrap();
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, b) in sol.x.iter().zip(&want) {
        assert!((a - b).abs() < 1e-4 * scale, "{a} vs {b}");
    }
}

fn spikes(n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    x[8] = 1.0;
    x[40] = 1.2;
    x
}

// High diffusivity keeps every column visible within the record.
fn sharp_kernel() -> KernelMatrix {
    KernelMatrix::build(&time_grid(400, 1.0), &retarded_grid(60, 1.0), 1.0, 5.0).unwrap()
}

#[test]
fn zero_solution_above_lambda_max() {
    let k = sharp_kernel();
    let y = k.apply(&spikes(k.n_tp()));
    let cfg = AdmmConfig { lambda: Lambda::FractionOfMax(1.01), ..AdmmConfig::default() };
    let sol = invert_admm(&k, &y, &RegularizerConfig::admm(cfg)).unwrap();
    assert!(sol.x.iter().all(|&v| v == 0.0));
}

#[test]
fn lasso_solution_is_sparse_and_optimal() {
    let k = sharp_kernel();
    let truth = spikes(k.n_tp());
    let y = k.apply(&truth);
    let cfg = AdmmConfig { max_iters: 50_000, ..AdmmConfig::default() };
    let sol = invert_admm(&k, &y, &RegularizerConfig::admm(cfg)).unwrap();
    let support = sol.x.iter().filter(|&&v| v > 1e-3).count();
    assert!(support <= 6, "support {support}");
    let dense = invert_tsvd(&k, &y, 1e-3).unwrap().x.iter().filter(|v| v.abs() > 1e-3).count();
    assert!(dense > 3 * support);
    let shallow = (0..20).max_by(|&a, &b| sol.x[a].total_cmp(&sol.x[b])).unwrap();
    assert!(shallow.abs_diff(8) <= 1);
    // The lasso minimiser is no worse than the truth, and no worse than zero.
    let solver = AdmmSolver::new(&k, None).unwrap();
    let obj_truth = solver.objective(&y, &truth, sol.lambda);
    assert!(sol.objective <= obj_truth, "{} vs {obj_truth}", sol.objective);
    assert!(sol.objective <= solver.objective(&y, &vec![0.0; k.n_tp()], sol.lambda));
}

#[test]
fn default_threshold_beats_untruncated_solve_on_noisy_data() {
    let k = KernelMatrix::reference();
    let truth: Vec<f64> = (0..k.n_tp()).map(|j| (-((j as f64 - 60.0) / 8.0).powi(2)).exp()).collect();
    let clean = k.apply(&truth);
    let peak = clean.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    let y: Vec<f64> = clean.iter().map(|v| { let z: f64 = StandardNormal.sample(&mut rng); v + peak / 1000.0 * z }).collect();
    let err = |x: &[f64]| x.iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let reg = invert_tsvd(&k, &y, 1e-3).unwrap();
    let raw = invert_tsvd(&k, &y, 0.0).unwrap();
    assert!(err(&reg.x) < 0.1 * err(&raw.x), "{} vs {}", err(&reg.x), err(&raw.x));
}

#[test]
fn tsvd_round_trip_on_smooth_signal() {
    let k = KernelMatrix::reference();
    let truth: Vec<f64> = (0..k.n_tp()).map(|j| (-((j as f64 - 40.0) / 10.0).powi(2)).exp()).collect();
    let y = k.apply(&truth);
    let sol = invert_tsvd(&k, &y, 1e-6).unwrap();
    let back = k.apply(&sol.x);
    let num: f64 = back.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = y.iter().map(|b| b * b).sum();
    assert!((num / den).sqrt() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rank_is_monotone_in_threshold(a in 0.0f64..0.5, b in 0.0f64..0.5) {
        let solver = TsvdSolver::new(&small_kernel());
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(solver.rank(lo) >= solver.rank(hi));
    }

    #[test]
    fn admm_output_respects_positivity(seed in 0u64..1000, frac in 0.001f64..0.5) {
        use rand::{Rng, SeedableRng};
        let k = small_kernel();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cfg = AdmmConfig { lambda: Lambda::FractionOfMax(frac), ..AdmmConfig::default() };
        let sol = invert_admm(&k, &y, &RegularizerConfig::admm(cfg)).unwrap();
        prop_assert!(sol.x.iter().all(|&v| v >= 0.0));
    }
}
