//! Resolution limits set by diffusion: cutoff wavenumbers and frequencies,
//! band-limited reconstructions, the 2D thermal point-spread function, entropy
//! and main-lobe width measurement.

use crate::error::{ensure_positive, Error, Result};
use crate::langevin::DriftMatrix;
use crate::lattice_walk::ProbabilityProfile;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Minimum samples across the predicted axial resolution length of a PSF grid.
pub const MIN_PSF_SAMPLES: usize = 16;

/// Allowed deviation of `sum(p)` from 1 for entropy evaluation.
pub const ENTROPY_NORMALIZATION_TOL: f64 = 1e-9;

fn check_snr(snr: f64) -> Result<f64> {
    if !(snr.is_finite() && snr > 1.0) {
        return Err(Error::invalid("snr", format!("must exceed 1, got {snr}")));
    }
    Ok(snr.ln())
}

/// `sqrt(ln(snr_k) / (alpha t))`, radians per cell.
pub fn k_cut(snr_k: f64, alpha: f64, t: f64) -> Result<f64> {
    let l = check_snr(snr_k)?;
    ensure_positive("alpha", alpha)?;
    ensure_positive("t", t)?;
    Ok((l / (alpha * t)).sqrt())
}

/// `(n0 / pi) sin(kcut x) / x`, equal to `n0 kcut / pi` at `x = 0`.
pub fn sinc_reconstruction(n0: f64, kcut: f64, xs: &[f64]) -> Result<Vec<f64>> {
    ensure_positive("kcut", kcut)?;
    Ok(xs
        .iter()
        .map(|&x| {
            let u = kcut * x;
            if u.abs() < 1e-8 {
                n0 * kcut / PI * (1.0 - u * u / 6.0)
            } else {
                n0 / PI * u.sin() / x
            }
        })
        .collect())
}

/// `pi / k_cut`, the half wavelength at the cutoff.
pub fn delta_r_time(alpha: f64, t: f64, snr_k: f64) -> Result<f64> {
    Ok(PI / k_cut(snr_k, alpha, t)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrequencyCut {
    /// `2 alpha (ln(snr) / x)^2`, radians per step.
    pub omega: f64,
    /// Diffusion length at the cutoff, `x / ln(snr)`.
    pub mu: f64,
}

pub fn omega_cut(alpha: f64, snr: f64, x: f64) -> Result<FrequencyCut> {
    let l = check_snr(snr)?;
    ensure_positive("alpha", alpha)?;
    ensure_positive("x", x)?;
    Ok(FrequencyCut {
        omega: 2.0 * alpha * (l / x).powi(2),
        mu: x / l,
    })
}

/// `pi x / ln(snr)`.
pub fn delta_r_depth(x: f64, snr: f64) -> Result<f64> {
    let l = check_snr(snr)?;
    ensure_positive("x", x)?;
    Ok(PI * x / l)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    TimeDomainKSpace,
    DepthDomainFrequency,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsfExtents {
    pub axial_fwhm: f64,
    pub lateral_fwhm: f64,
    pub axial_zero_to_zero: Option<f64>,
    pub lateral_zero_to_zero: Option<f64>,
}

/// Cutoffs and resolution lengths for one configuration. The wavenumber and
/// frequency cutoffs are linked by the thermal-wave dispersion `omega = 2 alpha k^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolutionReport {
    pub k_cut: f64,
    pub omega_cut: f64,
    pub delta_r: f64,
    pub snr_used: f64,
    pub regime: Regime,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured: Option<PsfExtents>,
}

impl ResolutionReport {
    /// Spreading for time `t` observed in k-space.
    pub fn time_domain(alpha: f64, t: f64, snr_k: f64) -> Result<Self> {
        let k = k_cut(snr_k, alpha, t)?;
        Ok(Self {
            k_cut: k,
            omega_cut: 2.0 * alpha * k * k,
            delta_r: PI / k,
            snr_used: snr_k,
            regime: Regime::TimeDomainKSpace,
            measured: None,
        })
    }

    /// A source at depth `x` observed through thermal waves at the surface.
    pub fn depth_domain(alpha: f64, x: f64, snr: f64) -> Result<Self> {
        let cut = omega_cut(alpha, snr, x)?;
        Ok(Self {
            k_cut: 1.0 / cut.mu,
            omega_cut: cut.omega,
            delta_r: delta_r_depth(x, snr)?,
            snr_used: snr,
            regime: Regime::DepthDomainFrequency,
            measured: None,
        })
    }

    pub fn with_measured(mut self, extents: PsfExtents) -> Self {
        self.measured = Some(extents);
        self
    }
}

/// Sampling of a PSF image, in units of the source depth `d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsfGrid {
    pub nx: usize,
    pub nz: usize,
    /// Lateral half extent; samples are `x_i = (i - nx/2) dx` with `dx = 2 half_x / nx`.
    pub half_x: f64,
    /// Axial half extent around the source depth.
    pub half_z: f64,
}

impl PsfGrid {
    pub fn square(n: usize, half: f64) -> Self {
        Self {
            nx: n,
            nz: n,
            half_x: half,
            half_z: half,
        }
    }

    fn axis(n: usize, half: f64, centre: f64) -> Vec<f64> {
        let step = 2.0 * half / n as f64;
        (0..n)
            .map(|i| centre + (i as f64 - (n / 2) as f64) * step)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralWindow {
    /// Keep every component whose amplitude stays above the noise floor.
    #[default]
    HardCut,
    /// Weight components by `A^2 / (A^2 + 1/snr^2)` with `A` the attenuation.
    Tikhonov,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsfImage {
    pub xs: Vec<f64>,
    pub zs: Vec<f64>,
    /// Row-major `[z][x]`, peak normalised to 1.
    pub values: Vec<f64>,
    pub snr: f64,
    pub depth: f64,
    pub peak: (f64, f64),
}

impl PsfImage {
    pub fn at(&self, ix: usize, iz: usize) -> f64 {
        self.values[iz * self.xs.len() + ix]
    }

    fn peak_indices(&self) -> (usize, usize) {
        let k = argmax(&self.values);
        (k % self.xs.len(), k / self.xs.len())
    }

    /// Profile along depth through the peak.
    pub fn axial_profile(&self) -> (Vec<f64>, Vec<f64>) {
        let (ix, _) = self.peak_indices();
        let prof = (0..self.zs.len()).map(|iz| self.at(ix, iz)).collect();
        (self.zs.clone(), prof)
    }

    /// Profile along the lateral axis through the peak.
    pub fn lateral_profile(&self) -> (Vec<f64>, Vec<f64>) {
        let (_, iz) = self.peak_indices();
        let n = self.xs.len();
        (self.xs.clone(), self.values[iz * n..(iz + 1) * n].to_vec())
    }

    pub fn extents(&self) -> Result<PsfExtents> {
        let (za, a) = self.axial_profile();
        let (xa, l) = self.lateral_profile();
        let ax = measure_mainlobe(&a, &za)?;
        let lat = measure_mainlobe(&l, &xa)?;
        Ok(PsfExtents {
            axial_fwhm: ax.fwhm,
            lateral_fwhm: lat.fwhm,
            axial_zero_to_zero: ax.zero_to_zero,
            lateral_zero_to_zero: lat.zero_to_zero,
        })
    }

    /// Axial resolution window: the peak depth plus and minus half the distance
    /// from the peak to the first zero, i.e. a window one resolution length wide.
    pub fn axial_window(&self) -> Result<(f64, f64)> {
        let (za, a) = self.axial_profile();
        let lobe = measure_mainlobe(&a, &za)?;
        let width = lobe
            .zero_to_zero
            .ok_or_else(|| Error::MainLobe("axial profile has no zero crossing".into()))?;
        Ok((lobe.peak_position - width / 4.0, lobe.peak_position + width / 4.0))
    }

    pub fn write_profiles_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let (za, a) = self.axial_profile();
        let (xa, l) = self.lateral_profile();
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["axis", "coordinate", "value"])?;
        for (c, v) in za.iter().zip(&a) {
            w.write_record(["axial".to_string(), format!("{c:e}"), format!("{v:e}")])?;
        }
        for (c, v) in xa.iter().zip(&l) {
            w.write_record(["lateral".to_string(), format!("{c:e}"), format!("{v:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Real part of the inverse Fourier transform of the spectral region that
/// survives diffusion from depth `d`: `k <= ln(snr) cos(theta) / d`, a disk of
/// radius `K/2` centred at `(0, K/2)` with `K = ln(snr)/d`, plus its mirror.
pub fn psf_2d(snr: f64, d: f64, grid: &PsfGrid) -> Result<PsfImage> {
    psf_2d_windowed(snr, d, grid, SpectralWindow::HardCut)
}

pub fn psf_2d_windowed(snr: f64, d: f64, grid: &PsfGrid, window: SpectralWindow) -> Result<PsfImage> {
    let l = check_snr(snr)?;
    ensure_positive("d", d)?;
    ensure_positive("half_x", grid.half_x)?;
    ensure_positive("half_z", grid.half_z)?;
    if grid.nx < 3 || grid.nz < 3 {
        return Err(Error::invalid("grid", "need at least 3 samples per axis"));
    }
    let dz = 2.0 * grid.half_z * d / grid.nz as f64;
    let samples = delta_r_depth(d, snr)? / dz;
    if samples < MIN_PSF_SAMPLES as f64 {
        return Err(Error::GridTooCoarse {
            samples,
            required: MIN_PSF_SAMPLES,
        });
    }
    let xs = PsfGrid::axis(grid.nx, grid.half_x * d, 0.0);
    let zs = PsfGrid::axis(grid.nz, grid.half_z * d, d);
    let big_k = l / d;
    // Both windows reduce to `sum_j cos(kx_j x) * H(kx_j, z - d)`.
    let (kx, h) = match window {
        SpectralWindow::HardCut => hard_cut_terms(big_k, &zs, d),
        SpectralWindow::Tikhonov => tikhonov_terms(big_k, snr, &zs, d),
    };
    let cx = DMatrix::from_fn(xs.len(), kx.len(), |i, j| (kx[j] * xs[i]).cos());
    let img = cx * h;
    let mut values = vec![0.0; xs.len() * zs.len()];
    for iz in 0..zs.len() {
        for ix in 0..xs.len() {
            values[iz * xs.len() + ix] = img[(ix, iz)];
        }
    }
    let k = argmax(&values);
    let peak = values[k];
    if !(peak > 0.0) {
        return Err(Error::MainLobe("PSF has no positive peak".into()));
    }
    values.iter_mut().for_each(|v| *v /= peak);
    Ok(PsfImage {
        peak: (xs[k % xs.len()], zs[k / xs.len()]),
        xs,
        zs,
        values,
        snr,
        depth: d,
    })
}

/// Quadrature over `kx = (K/2) sin(phi)`; the `kz` chord integral is analytic.
fn hard_cut_terms(big_k: f64, zs: &[f64], d: f64) -> (Vec<f64>, DMatrix<f64>) {
    let nq = 1024;
    let r = big_k / 2.0;
    let dphi = PI / nq as f64;
    let mut kx = Vec::with_capacity(nq);
    let mut w = Vec::with_capacity(nq);
    for j in 0..nq {
        let phi = -PI / 2.0 + (j as f64 + 0.5) * dphi;
        kx.push(r * phi.sin());
        w.push(r * phi.cos() * dphi);
    }
    let h = DMatrix::from_fn(nq, zs.len(), |j, iz| {
        let half = r * ((PI / 2.0) - (kx[j] / r).asin()).sin();
        let (a, b) = (r - half, r + half);
        let z = zs[iz] - d;
        let chord = if (z * (b - a)).abs() < 1e-9 {
            (b - a) * (0.5 * (a + b) * z).cos()
        } else {
            ((b * z).sin() - (a * z).sin()) / z
        };
        w[j] * chord
    });
    (kx, h)
}

/// Tensor midpoint quadrature of the smooth filter over `kx` in `[-2K, 2K]`,
/// `kz` in `(0, 4K]`.
fn tikhonov_terms(big_k: f64, snr: f64, zs: &[f64], d: f64) -> (Vec<f64>, DMatrix<f64>) {
    let (nkx, nkz) = (800, 800);
    let dkx = 4.0 * big_k / nkx as f64;
    let dkz = 4.0 * big_k / nkz as f64;
    let kx: Vec<f64> = (0..nkx).map(|j| -2.0 * big_k + (j as f64 + 0.5) * dkx).collect();
    let kz: Vec<f64> = (0..nkz).map(|j| (j as f64 + 0.5) * dkz).collect();
    let inv_snr2 = 1.0 / (snr * snr);
    let filter = DMatrix::from_fn(nkx, nkz, |i, j| {
        let exponent = 2.0 * d * (kx[i] * kx[i] + kz[j] * kz[j]) / kz[j];
        if exponent > 700.0 {
            0.0
        } else {
            dkx * dkz / (1.0 + exponent.exp() * inv_snr2)
        }
    });
    let cz = DMatrix::from_fn(nkz, zs.len(), |j, iz| (kz[j] * (zs[iz] - d)).cos());
    (kx, filter * cz)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MainLobe {
    pub peak_index: usize,
    pub peak_position: f64,
    pub fwhm: f64,
    /// Distance between the first zero crossings on either side of the peak,
    /// when both exist.
    pub zero_to_zero: Option<f64>,
}

fn crossing(axis: &[f64], v: &[f64], i: usize, j: usize, level: f64) -> f64 {
    let t = (v[i] - level) / (v[i] - v[j]);
    axis[i] + t * (axis[j] - axis[i])
}

/// Walks outward from the peak to the first sample at or below `level`.
fn find_crossing(axis: &[f64], v: &[f64], peak: usize, level: f64, step: isize) -> Option<f64> {
    let mut i = peak as isize;
    loop {
        let j = i + step;
        if j < 0 || j as usize >= v.len() {
            return None;
        }
        if v[j as usize] <= level {
            return Some(crossing(axis, v, i as usize, j as usize, level));
        }
        i = j;
    }
}

/// FWHM and first-zero spacing of the lobe around the unique global maximum.
pub fn measure_mainlobe(profile: &[f64], axis: &[f64]) -> Result<MainLobe> {
    if profile.len() != axis.len() || profile.len() < 3 {
        return Err(Error::ShapeMismatch("profile and axis must match, with at least 3 samples".into()));
    }
    let p = argmax(profile);
    let peak = profile[p];
    if profile.iter().enumerate().any(|(i, &v)| i != p && v == peak) {
        return Err(Error::MainLobe("maximum is not unique".into()));
    }
    if p == 0 || p == profile.len() - 1 {
        return Err(Error::MainLobe("maximum lies on the boundary".into()));
    }
    measure_lobe_at(profile, axis, p)
}

/// Main lobe around the local maximum at `index`.
pub fn measure_lobe_at(profile: &[f64], axis: &[f64], index: usize) -> Result<MainLobe> {
    if profile.len() != axis.len() || index >= profile.len() {
        return Err(Error::ShapeMismatch("profile and axis must match and contain the peak".into()));
    }
    let p = index;
    let peak = profile[p];
    let below = |j: Option<&f64>| j.is_none_or(|&v| v <= peak);
    if !(peak > 0.0 && below(profile.get(p + 1)) && below(p.checked_sub(1).map(|j| &profile[j]))) {
        return Err(Error::MainLobe(format!("sample {index} is not a positive local maximum")));
    }
    let half = 0.5 * peak;
    let left = find_crossing(axis, profile, p, half, -1);
    let right = find_crossing(axis, profile, p, half, 1);
    let (Some(l), Some(r)) = (left, right) else {
        return Err(Error::MainLobe("profile does not fall to half maximum on both sides".into()));
    };
    let zl = find_crossing(axis, profile, p, 0.0, -1);
    let zr = find_crossing(axis, profile, p, 0.0, 1);
    Ok(MainLobe {
        peak_index: p,
        peak_position: axis[p],
        fwhm: (r - l).abs(),
        zero_to_zero: zl.zip(zr).map(|(a, b)| (b - a).abs()),
    })
}

/// `-sum p ln p` in units of `k_B`.
pub fn shannon_entropy(p: &ProbabilityProfile) -> Result<f64> {
    entropy_of(p.values())
}

/// Entropy of a raw probability vector.
pub fn entropy_of(p: &[f64]) -> Result<f64> {
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > ENTROPY_NORMALIZATION_TOL {
        return Err(Error::NotNormalized { sum });
    }
    if p.iter().any(|&v| v < 0.0) {
        return Err(Error::invalid("p", "probabilities must be >= 0"));
    }
    Ok(-p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyTrace {
    pub times: Vec<f64>,
    pub entropy: Vec<f64>,
}

impl EntropyTrace {
    /// True when no sample drops below its predecessor by more than `tol`.
    pub fn is_nondecreasing(&self, tol: f64) -> bool {
        self.entropy.windows(2).all(|w| w[1] >= w[0] - tol)
    }
}

/// Entropy along the noiseless drift `N <- (I - dt M) N`. For `dt <= 1` the
/// update is doubly stochastic.
pub fn entropy_trace(m: &DriftMatrix, initial: &[f64], dt: f64, n_steps: usize) -> Result<EntropyTrace> {
    if initial.len() != m.n_cells() {
        return Err(Error::ShapeMismatch(format!(
            "{} probabilities for {} cells",
            initial.len(),
            m.n_cells()
        )));
    }
    if !(dt > 0.0 && dt <= 1.0) {
        return Err(Error::invalid("dt", format!("must lie in (0, 1], got {dt}")));
    }
    let mut p = initial.to_vec();
    let mut drift = vec![0.0; p.len()];
    let mut times = vec![0.0];
    let mut entropy = vec![entropy_of(&p)?];
    for step in 1..=n_steps {
        m.apply_into(&p, &mut drift);
        p.iter_mut().zip(&drift).for_each(|(v, d)| *v = (*v - dt * d).max(0.0));
        times.push(step as f64 * dt);
        entropy.push(entropy_of(&p)?);
    }
    Ok(EntropyTrace { times, entropy })
}

/// Evaluates a set of independent PSFs in parallel.
pub fn psf_batch(snrs: &[f64], d: f64, grid: &PsfGrid) -> Result<Vec<PsfImage>> {
    snrs.par_iter().map(|&s| psf_2d(s, d, grid)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_walk::gaussian_profile;

    #[test]
    fn cutoff_examples() {
        assert!((k_cut(std::f64::consts::E, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((k_cut(1000.0, 0.5, 20.0).unwrap() - 0.8311).abs() < 1e-4);
        let r = k_cut(1000.0, 0.5, 40.0).unwrap() / k_cut(1000.0, 0.5, 20.0).unwrap();
        assert!((r - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(k_cut(1.0, 0.5, 1.0).is_err());
        assert!(k_cut(0.5, 0.5, 1.0).is_err());
    }

    #[test]
    fn delta_r_examples() {
        assert!((delta_r_time(0.5, 20.0, 1000.0).unwrap() - 3.780).abs() < 1e-3);
        let a = delta_r_time(0.5, 10.0, 50.0).unwrap();
        let b = delta_r_time(0.5, 40.0, 50.0).unwrap();
        assert!((b / a - 2.0).abs() < 1e-14);
        let d = delta_r_depth(1.0, 1000.0).unwrap();
        assert!((1.0 - d / 2.0 - 0.7726).abs() < 1e-4);
        assert!((1.0 + d / 2.0 - 1.2274).abs() < 1e-4);
        let d = delta_r_depth(1.0, 100.0).unwrap();
        assert!((1.0 - d / 2.0 - 0.66).abs() < 0.005);
    }

    #[test]
    fn omega_cut_examples() {
        let c = omega_cut(0.5, std::f64::consts::E, 1.0).unwrap();
        assert!((c.omega - 1.0).abs() < 1e-15);
        let c = omega_cut(0.5, 1000.0, 10.0).unwrap();
        assert!((c.omega - 0.4772).abs() < 1e-4);
        assert!((1000.0 * (-10.0 / c.mu).exp() - 1.0).abs() < 1e-12);
        assert!(omega_cut(0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn reports_are_consistent() {
        let r = ResolutionReport::time_domain(0.5, 20.0, 1000.0).unwrap();
        assert!((r.delta_r * r.k_cut - PI).abs() < 1e-14);
        let r = ResolutionReport::depth_domain(0.5, 10.0, 1000.0).unwrap();
        assert!((r.omega_cut - omega_cut(0.5, 1000.0, 10.0).unwrap().omega).abs() < 1e-15);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("depth-domain-frequency"));
    }

    #[test]
    fn sinc_limit_and_root() {
        let v = sinc_reconstruction(2.0, 0.5, &[0.0, PI / 0.5]).unwrap();
        assert!((v[0] - 2.0 * 0.5 / PI).abs() < 1e-15);
        assert!(v[1].abs() < 1e-15);
    }

    #[test]
    fn mainlobe_contract() {
        let axis: Vec<f64> = (0..50).map(f64::from).collect();
        assert!(measure_mainlobe(&axis, &axis).is_err());
        let flat = vec![1.0; 50];
        assert!(measure_mainlobe(&flat, &axis).is_err());
        let sigma = 3.0;
        let axis: Vec<f64> = (0..2001).map(|i| -50.0 + 0.05 * i as f64).collect();
        let g: Vec<f64> = axis.iter().map(|x| (-x * x / (2.0 * sigma * sigma)).exp()).collect();
        let lobe = measure_mainlobe(&g, &axis).unwrap();
        let expect = 2.0 * (2.0 * 2f64.ln()).sqrt() * sigma;
        assert!((lobe.fwhm - expect).abs() < 0.05);
        assert!(lobe.zero_to_zero.is_none());
    }

    #[test]
    fn entropy_examples() {
        let uni = ProbabilityProfile::new(0, vec![0.125; 8], 0.0).unwrap();
        assert!((shannon_entropy(&uni).unwrap() - 8f64.ln()).abs() < 1e-15);
        let delta = ProbabilityProfile::new(0, vec![0.0, 1.0, 0.0], 0.0).unwrap();
        assert_eq!(shannon_entropy(&delta).unwrap(), 0.0);
        let half = ProbabilityProfile::new(0, vec![0.25, 0.25], 0.0).unwrap();
        assert!(matches!(shannon_entropy(&half), Err(Error::NotNormalized { .. })));
        let s: Vec<f64> = [5.0, 10.0, 20.0, 50.0]
            .iter()
            .map(|&t| shannon_entropy(&gaussian_profile(t, 0.5).unwrap()).unwrap())
            .collect();
        assert!(s.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn psf_rejects_coarse_grid() {
        let err = psf_2d(1000.0, 1.0, &PsfGrid::square(32, 2.0)).unwrap_err();
        assert!(matches!(err, Error::GridTooCoarse { .. }));
        assert!(psf_2d(1.0, 1.0, &PsfGrid::square(256, 2.0)).is_err());
    }

    #[test]
    fn psf_peak_at_source() {
        let img = psf_2d(1000.0, 2.0, &PsfGrid::square(128, 1.0)).unwrap();
        assert_eq!(img.peak, (0.0, 2.0));
        assert!((img.values.iter().cloned().fold(f64::MIN, f64::max) - 1.0).abs() < 1e-15);
    }
}
