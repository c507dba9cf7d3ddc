use phototherm::langevin::{evolve_kspace, SpectralSystem};
use phototherm::resolution::*;
use std::f64::consts::PI;

/// `J1(u) = (1/pi) int_0^pi cos(tau - u sin tau) dtau`, Simpson's rule.
fn bessel_j1(u: f64) -> f64 {
    let n = 2000;
    let h = PI / n as f64;
    let f = |t: f64| (t - u * t.sin()).cos();
    let mut s = f(0.0) + f(PI);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0 / PI
}

/// Closed form of the hard-cut PSF: `cos(K z'/2) * 2 J1(K rho/2) / (K rho/2)`
/// with `rho = |(x, z')|`.
fn psf_oracle(big_k: f64, x: f64, zp: f64) -> f64 {
    let u = big_k * x.hypot(zp) / 2.0;
    let jinc = if u < 1e-12 { 1.0 } else { 2.0 * bessel_j1(u) / u };
    (big_k * zp / 2.0).cos() * jinc
}

#[test]
fn psf_matches_closed_form() {
    let d = 1.5;
    let img = psf_2d(300.0, d, &PsfGrid::square(64, 1.0)).unwrap();
    let big_k = 300f64.ln() / d;
    let mut worst: f64 = 0.0;
    for (iz, &z) in img.zs.iter().enumerate().step_by(7) {
        for (ix, &x) in img.xs.iter().enumerate().step_by(5) {
            worst = worst.max((img.at(ix, iz) - psf_oracle(big_k, x, z - d)).abs());
        }
    }
    assert!(worst < 1e-6, "max deviation {worst}");
}

#[test]
fn psf_is_laterally_symmetric() {
    let img = psf_2d(1000.0, 1.0, &PsfGrid::square(256, 2.0)).unwrap();
    let n = img.xs.len();
    let c = n / 2;
    for iz in 0..img.zs.len() {
        for m in 1..c {
            assert!((img.at(c + m, iz) - img.at(c - m, iz)).abs() < 1e-9);
        }
    }
}

#[test]
fn psf_widths_shrink_with_snr() {
    let grid = PsfGrid::square(256, 2.0);
    let ext: Vec<PsfExtents> = psf_batch(&[100.0, 300.0, 1000.0], 1.0, &grid)
        .unwrap()
        .iter()
        .map(|p| p.extents().unwrap())
        .collect();
    for w in ext.windows(2) {
        assert!(w[1].axial_fwhm < w[0].axial_fwhm);
        assert!(w[1].lateral_fwhm < w[0].lateral_fwhm);
    }
}

#[test]
fn tikhonov_window_tracks_hard_cut() {
    let grid = PsfGrid::square(256, 2.0);
    let hard = psf_2d(1000.0, 1.0, &grid).unwrap().extents().unwrap();
    let soft = psf_2d_windowed(1000.0, 1.0, &grid, SpectralWindow::Tikhonov)
        .unwrap()
        .extents()
        .unwrap();
    assert!((soft.axial_fwhm / hard.axial_fwhm - 1.0).abs() < 0.25, "{soft:?} {hard:?}");
    assert!((soft.lateral_fwhm / hard.lateral_fwhm - 1.0).abs() < 0.25);
}

#[test]
fn sinc_matches_truncated_spectrum_sum() {
    // Inverse DFT of a flat spectrum of height n0 truncated at |k| <= kcut.
    let n = 4096;
    let h = 0.05;
    let kcut = 1.7;
    let n0 = 3.0;
    let dk = 2.0 * PI / (n as f64 * h);
    let m = (kcut / dk).floor() as i64;
    let kc_eff = (m as f64 + 0.5) * dk;
    let xs: Vec<f64> = (0..n).map(|j| (j as f64 - (n / 2) as f64) * h).collect();
    let recon: Vec<f64> = xs
        .iter()
        .map(|&x| (-m..=m).map(|q| n0 * (q as f64 * dk * x).cos()).sum::<f64>() * dk / (2.0 * PI))
        .collect();
    let sinc = sinc_reconstruction(n0, kc_eff, &xs).unwrap();
    let peak = n0 * kc_eff / PI;
    for (a, b) in recon.iter().zip(&sinc).take(n * 3 / 4).skip(n / 4) {
        assert!((a - b).abs() < 0.01 * peak);
    }
}

#[test]
fn sinc_first_zero_spacing() {
    let kcut = 0.83;
    let h = 1e-3;
    let xs: Vec<f64> = (0..20001).map(|i| -10.0 + i as f64 * h).collect();
    let v = sinc_reconstruction(1.0, kcut, &xs).unwrap();
    let lobe = measure_mainlobe(&v, &xs).unwrap();
    assert!((lobe.zero_to_zero.unwrap() - 2.0 * PI / kcut).abs() < 2.0 * h);
}

#[test]
fn thresholded_modes_give_sinc() {
    // Delta at the wall, diffused, then every mode above the noise floor is
    // restored to its initial amplitude and the rest dropped.
    let n = 2048;
    let t = 500.0;
    let n0 = 1.0e4;
    let sys = SpectralSystem::new(n).unwrap();
    let mut delta = vec![0.0; n];
    delta[0] = n0;
    let hat0 = sys.to_modes(&delta);
    let snr_k = 1000.0;
    let floor = (2.0 / n as f64).sqrt() * n0 / snr_k;
    let hat_t = evolve_kspace(&hat0, t, &sys, None).unwrap();
    let kept: Vec<f64> = hat0
        .iter()
        .zip(&hat_t)
        .map(|(&a0, &a)| if a.abs() >= floor { a0 } else { 0.0 })
        .collect();
    let recon = sys.to_cells(&kept);
    let kc = k_cut(snr_k, 0.5, t).unwrap();
    // Mirror image across the wall doubles the amplitude.
    let xs: Vec<f64> = (0..200).map(|i| i as f64 + 0.5).collect();
    let sinc = sinc_reconstruction(2.0 * n0, kc, &xs).unwrap();
    let peak = 2.0 * n0 * kc / PI;
    let worst = recon
        .iter()
        .zip(&sinc)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.02 * peak, "worst {}", worst / peak);
}

#[test]
fn depth_resolution_ignores_alpha() {
    for snr in [30.0, 1000.0] {
        let base = ResolutionReport::depth_domain(0.5, 7.0, snr).unwrap().delta_r;
        for alpha in [0.1, 0.5, 2.0] {
            let r = ResolutionReport::depth_domain(alpha, 7.0, snr).unwrap();
            assert!((r.delta_r - base).abs() < 1e-12);
        }
    }
}
