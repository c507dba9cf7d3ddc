//! Deterministic heat diffusion with adiabatic walls, thermal waves, synthetic
//! phantoms and surface temperature records.
//!
//! Fields are stored row-major as `[z][x]`. Row `iz` is the cell whose centre
//! lies at depth `(iz + 1/2) * spacing` below the adiabatic surface; column
//! `ix` sits at lateral position `ix * spacing`. A 1D field is a single row.

use crate::dct;
use crate::error::{ensure_positive, Error, Result};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    nx: usize,
    nz: usize,
    two_d: bool,
    values: Vec<f64>,
    spacing: f64,
    alpha: f64,
}

impl Field {
    pub fn new_1d(values: Vec<f64>, spacing: f64, alpha: f64) -> Result<Self> {
        Self::build(values.len(), 1, false, values, spacing, alpha)
    }

    pub fn new_2d(nx: usize, nz: usize, values: Vec<f64>, spacing: f64, alpha: f64) -> Result<Self> {
        Self::build(nx, nz, true, values, spacing, alpha)
    }

    pub fn zeros_2d(nx: usize, nz: usize, spacing: f64, alpha: f64) -> Result<Self> {
        Self::new_2d(nx, nz, vec![0.0; nx * nz], spacing, alpha)
    }

    fn build(nx: usize, nz: usize, two_d: bool, values: Vec<f64>, spacing: f64, alpha: f64) -> Result<Self> {
        ensure_positive("spacing", spacing)?;
        ensure_positive("alpha", alpha)?;
        if nx == 0 || nz == 0 || values.len() != nx * nz {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {nx} x {nz} grid",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values", "field values must be finite"));
        }
        Ok(Self {
            nx,
            nz,
            two_d,
            values,
            spacing,
            alpha,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn is_2d(&self) -> bool {
        self.two_d
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, ix: usize, iz: usize) -> f64 {
        self.values[iz * self.nx + ix]
    }

    pub fn row(&self, iz: usize) -> &[f64] {
        &self.values[iz * self.nx..(iz + 1) * self.nx]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Shape as written to binary sidecars: `[nx]` or `[nz, nx]`.
    pub fn dims(&self) -> Vec<usize> {
        if self.two_d {
            vec![self.nz, self.nx]
        } else {
            vec![self.nx]
        }
    }

    fn with_values(&self, values: Vec<f64>) -> Self {
        Self { values, ..self.clone() }
    }

    fn as_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.nz, self.nx, &self.values)
    }
}

/// Modal representation of a field: `F_z A F_x^T` plus the per-axis rates.
struct Modes {
    fx: DMatrix<f64>,
    fz: DMatrix<f64>,
    hat: DMatrix<f64>,
    gx: Vec<f64>,
    gz: Vec<f64>,
}

impl Modes {
    fn new(field: &Field) -> Self {
        let fx = dct::dct_basis(field.nx);
        let fz = dct::dct_basis(field.nz);
        let hat = &fz * field.as_matrix() * fx.transpose();
        Self {
            gx: dct::laplacian_rates(field.nx, field.alpha, field.spacing),
            gz: dct::laplacian_rates(field.nz, field.alpha, field.spacing),
            fx,
            fz,
            hat,
        }
    }

    fn damped(&self, t: f64) -> DMatrix<f64> {
        let ex: Vec<f64> = self.gx.iter().map(|g| (-g * t).exp()).collect();
        let ez: Vec<f64> = self.gz.iter().map(|g| (-g * t).exp()).collect();
        DMatrix::from_fn(self.hat.nrows(), self.hat.ncols(), |kz, kx| {
            self.hat[(kz, kx)] * ez[kz] * ex[kx]
        })
    }
}

fn check_times(t_samples: &[f64]) -> Result<()> {
    if let Some(t) = t_samples.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::invalid("t_samples", format!("times must be >= 0, got {t}")));
    }
    if t_samples.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("t_samples", "times must be sorted"));
    }
    Ok(())
}

/// Solves the heat equation with adiabatic walls by decaying each DCT mode
/// with the discrete Laplacian rate `4 alpha sin^2(k/2) / h^2` per axis.
pub fn solve_heat(initial: &Field, t_samples: &[f64]) -> Result<Vec<Field>> {
    check_times(t_samples)?;
    let modes = Modes::new(initial);
    Ok(t_samples
        .iter()
        .map(|&t| {
            if t == 0.0 {
                return initial.clone();
            }
            let a = modes.fz.tr_mul(&modes.damped(t)) * &modes.fx;
            let mut values = Vec::with_capacity(initial.nx * initial.nz);
            for iz in 0..initial.nz {
                values.extend(a.row(iz).iter());
            }
            initial.with_values(values)
        })
        .collect())
}

/// Cells of padding so that a Gaussian spreading for `t_max` leaks at most
/// 0.1% of its heat across a wall this far away.
pub fn boundary_padding(alpha: f64, t_max: f64, spacing: f64) -> usize {
    (3.1 * (2.0 * alpha * t_max).sqrt() / spacing).ceil() as usize
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalWaveParams {
    pub omega: f64,
    pub alpha: f64,
}

impl ThermalWaveParams {
    pub fn new(omega: f64, alpha: f64) -> Result<Self> {
        ensure_positive("omega", omega)?;
        ensure_positive("alpha", alpha)?;
        Ok(Self { omega, alpha })
    }

    /// Thermal diffusion length `sqrt(2 alpha / omega)`.
    pub fn mu(&self) -> f64 {
        (2.0 * self.alpha / self.omega).sqrt()
    }

    /// Complex wavenumber `(1 + i) / mu` as `(re, im)`.
    pub fn sigma(&self) -> (f64, f64) {
        let inv = 1.0 / self.mu();
        (inv, inv)
    }
}

/// `T0 exp(-x/mu) cos(x/mu - omega t)`.
pub fn thermal_wave(x: f64, t: f64, params: &ThermalWaveParams, t0: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::invalid("x", format!("depth must be >= 0, got {x}")));
    }
    let q = x / params.mu();
    Ok(t0 * (-q).exp() * (q - params.omega * t).cos())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSource {
    /// Lateral centre, grid units.
    pub x: f64,
    /// Depth of the centre below the surface, grid units.
    pub z: f64,
    pub amplitude: f64,
    /// Standard deviation, grid units.
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub nx: usize,
    pub nz: usize,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub sources: Vec<GaussianSource>,
}

fn default_spacing() -> f64 {
    1.0
}

fn default_alpha() -> f64 {
    0.5
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.nz == 0 {
            return Err(Error::invalid("nx/nz", "grid must be nonempty"));
        }
        ensure_positive("spacing", self.spacing)?;
        ensure_positive("alpha", self.alpha)?;
        let width = (self.nx - 1) as f64 * self.spacing;
        let height = self.nz as f64 * self.spacing;
        for s in &self.sources {
            ensure_positive("width", s.width)?;
            ensure_positive("amplitude", s.amplitude)?;
            if !(s.x >= 0.0 && s.x <= width && s.z > 0.0 && s.z < height) {
                return Err(Error::invalid(
                    "sources",
                    format!("centre ({}, {}) outside the {width} x {height} grid", s.x, s.z),
                ));
            }
        }
        Ok(())
    }
}

/// Depth of the centre of row `iz`.
pub fn row_depth(iz: usize, spacing: f64) -> f64 {
    (iz as f64 + 0.5) * spacing
}

/// Sum of isotropic Gaussians `A exp(-r^2 / (2 w^2))` sampled at cell centres.
pub fn make_phantom(spec: &PhantomSpec) -> Result<Field> {
    spec.validate()?;
    let mut values = vec![0.0; spec.nx * spec.nz];
    for iz in 0..spec.nz {
        let z = row_depth(iz, spec.spacing);
        for ix in 0..spec.nx {
            let x = ix as f64 * spec.spacing;
            values[iz * spec.nx + ix] = spec
                .sources
                .iter()
                .map(|s| {
                    let r2 = (x - s.x).powi(2) + (z - s.z).powi(2);
                    s.amplitude * (-r2 / (2.0 * s.width * s.width)).exp()
                })
                .sum();
        }
    }
    Field::new_2d(spec.nx, spec.nz, values, spec.spacing, spec.alpha)
}

/// Time-resolved temperatures at surface detectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRecord {
    pub detector_xs: Vec<f64>,
    pub t0: f64,
    pub dt: f64,
    /// `[detector][time]`.
    pub values: Vec<Vec<f64>>,
    pub snr: Option<f64>,
    pub seed: Option<u64>,
}

impl SurfaceRecord {
    pub fn new(detector_xs: Vec<f64>, t0: f64, dt: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        ensure_positive("dt", dt)?;
        if values.len() != detector_xs.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} traces for {} detectors",
                values.len(),
                detector_xs.len()
            )));
        }
        let nt = values.first().map_or(0, Vec::len);
        if values.iter().any(|v| v.len() != nt) {
            return Err(Error::ShapeMismatch("traces differ in length".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values", "record values must be finite"));
        }
        Ok(Self {
            detector_xs,
            t0,
            dt,
            values,
            snr: None,
            seed: None,
        })
    }

    pub fn n_detectors(&self) -> usize {
        self.values.len()
    }

    pub fn n_times(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_times()).map(|i| self.t0 + i as f64 * self.dt).collect()
    }

    pub fn peak_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Writes rows `t,det_0,...`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((0..self.n_detectors()).map(|d| format!("det_{d}")));
        w.write_record(&header)?;
        for (i, t) in self.times().iter().enumerate() {
            let mut row = vec![format!("{t:e}")];
            row.extend(self.values.iter().map(|v| format!("{:e}", v[i])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Ok(1.0);
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::invalid("times", "must be strictly increasing"));
    }
    let uniform = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.max(w[1].abs()));
    if !uniform {
        return Err(Error::invalid("times", "sampling must be uniform"));
    }
    Ok(dt)
}

fn check_detectors(field: &Field, detector_xs: &[usize]) -> Result<()> {
    if let Some(&bad) = detector_xs.iter().find(|&&d| d >= field.nx) {
        return Err(Error::invalid(
            "detector_xs",
            format!("column {bad} outside a grid of {} columns", field.nx),
        ));
    }
    Ok(())
}

/// Reads the surface row of each field at the given columns.
pub fn sample_surface(fields: &[Field], times: &[f64], detector_xs: &[usize]) -> Result<SurfaceRecord> {
    if fields.len() != times.len() || fields.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "{} fields for {} times",
            fields.len(),
            times.len()
        )));
    }
    let dt = uniform_step(times)?;
    check_detectors(&fields[0], detector_xs)?;
    if fields.iter().any(|f| f.nx != fields[0].nx || f.nz != fields[0].nz) {
        return Err(Error::ShapeMismatch("fields differ in shape".into()));
    }
    let values = detector_xs
        .iter()
        .map(|&d| fields.iter().map(|f| f.at(d, 0)).collect())
        .collect();
    let xs = detector_xs.iter().map(|&d| d as f64 * fields[0].spacing).collect();
    SurfaceRecord::new(xs, times[0], dt, values)
}

/// Surface record of the diffusing `initial` field without materialising the
/// full field at every time: only the surface row is synthesised from the
/// modal amplitudes.
pub fn surface_response(initial: &Field, times: &[f64], detector_xs: &[usize]) -> Result<SurfaceRecord> {
    check_times(times)?;
    if times.is_empty() {
        return Err(Error::invalid("times", "need at least one sample"));
    }
    let dt = uniform_step(times)?;
    check_detectors(initial, detector_xs)?;
    let modes = Modes::new(initial);
    // Surface weights of the z modes.
    let wz: Vec<f64> = (0..initial.nz).map(|kz| modes.fz[(kz, 0)]).collect();
    let cols = modes.fx.select_columns(detector_xs.iter());
    let mut values = vec![Vec::with_capacity(times.len()); detector_xs.len()];
    for &t in times {
        let surface_hat: Vec<f64> = (0..initial.nx)
            .map(|kx| {
                let ex = (-modes.gx[kx] * t).exp();
                (0..initial.nz)
                    .map(|kz| wz[kz] * modes.hat[(kz, kx)] * (-modes.gz[kz] * t).exp())
                    .sum::<f64>()
                    * ex
            })
            .collect();
        for (d, col) in cols.column_iter().enumerate() {
            values[d].push(col.iter().zip(&surface_hat).map(|(a, b)| a * b).sum());
        }
    }
    let xs = detector_xs.iter().map(|&d| d as f64 * initial.spacing).collect();
    SurfaceRecord::new(xs, times[0], dt, values)
}

/// Adds white Gaussian noise of standard deviation `peak |value| / snr`.
pub fn add_noise(record: &SurfaceRecord, snr: f64, seed: u64) -> Result<SurfaceRecord> {
    ensure_positive("snr", snr)?;
    if record.snr.is_some() {
        return Err(Error::invalid("record", "noise was already added to this record"));
    }
    let sigma = record.peak_abs() / snr;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = record.clone();
    for v in out.values.iter_mut().flatten() {
        let e: f64 = StandardNormal.sample(&mut rng);
        *v += sigma * e;
    }
    out.snr = Some(snr);
    out.seed = Some(seed);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta_1d(n: usize, at: usize) -> Field {
        let mut v = vec![0.0; n];
        v[at] = 1.0;
        Field::new_1d(v, 1.0, 0.5).unwrap()
    }

    #[test]
    fn uniform_field_is_stationary() {
        let f = Field::new_2d(5, 4, vec![2.5; 20], 1.0, 0.7).unwrap();
        for g in solve_heat(&f, &[0.0, 1.0, 40.0]).unwrap() {
            assert!(g.values().iter().all(|v| (v - 2.5).abs() < 1e-12));
        }
    }

    #[test]
    fn zero_time_returns_initial_exactly() {
        let f = delta_1d(9, 3);
        assert_eq!(solve_heat(&f, &[0.0]).unwrap()[0], f);
    }

    #[test]
    fn times_are_validated() {
        let f = delta_1d(9, 3);
        assert!(solve_heat(&f, &[-1.0]).is_err());
        assert!(solve_heat(&f, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn heat_is_conserved() {
        let f = delta_1d(30, 4);
        for g in solve_heat(&f, &[0.5, 3.0, 100.0, 1e4]).unwrap() {
            assert!((g.sum() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn thermal_wave_examples() {
        let p = ThermalWaveParams::new(0.3, 0.5).unwrap();
        assert_eq!(thermal_wave(0.0, 0.0, &p, 2.0).unwrap(), 2.0);
        let mu = p.mu();
        let v = thermal_wave(mu, 0.0, &p, 1.0).unwrap();
        assert!((v - (-1.0f64).exp() * 1.0f64.cos()).abs() < 1e-15);
        assert!(thermal_wave(-1.0, 0.0, &p, 1.0).is_err());
        let (re, im) = p.sigma();
        assert_eq!(re, im);
        assert!(ThermalWaveParams::new(0.0, 0.5).is_err());
    }

    #[test]
    fn phantom_validation() {
        let mut spec = PhantomSpec {
            nx: 10,
            nz: 10,
            spacing: 1.0,
            alpha: 0.5,
            sources: vec![GaussianSource { x: 4.0, z: 4.5, amplitude: 3.0, width: 1.0 }],
        };
        let f = make_phantom(&spec).unwrap();
        assert!((f.max() - 3.0).abs() < 1e-12);
        assert!((f.at(4, 4) - 3.0).abs() < 1e-12);
        spec.sources[0].x = 20.0;
        assert!(make_phantom(&spec).is_err());
        spec.sources.clear();
        assert!(make_phantom(&spec).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn surface_shape_contract() {
        let f = Field::zeros_2d(210, 6, 1.0, 0.5).unwrap();
        let times: Vec<f64> = (0..40).map(f64::from).collect();
        let dets: Vec<usize> = (5..205).collect();
        let rec = surface_response(&f, &times, &dets).unwrap();
        assert_eq!((rec.n_detectors(), rec.n_times()), (200, 40));
        assert!(rec.values.iter().flatten().all(|&v| v == 0.0));
        assert!(surface_response(&f, &times, &[210]).is_err());
        assert!(surface_response(&f, &[0.0, 1.0, 3.0], &[1]).is_err());
    }

    #[test]
    fn fast_surface_matches_full_solve() {
        let spec = PhantomSpec {
            nx: 24,
            nz: 12,
            spacing: 1.0,
            alpha: 0.5,
            sources: vec![GaussianSource { x: 9.0, z: 5.0, amplitude: 1.0, width: 1.5 }],
        };
        let f = make_phantom(&spec).unwrap();
        let times: Vec<f64> = (0..15).map(|i| 0.5 * i as f64).collect();
        let full = sample_surface(&solve_heat(&f, &times).unwrap(), &times, &[3, 9, 20]).unwrap();
        let fast = surface_response(&f, &times, &[3, 9, 20]).unwrap();
        for (a, b) in full.values.iter().flatten().zip(fast.values.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_contract() {
        let rec = SurfaceRecord::new(vec![0.0], 0.0, 1.0, vec![vec![1.0, -4.0, 2.0]]).unwrap();
        assert!(add_noise(&rec, 0.0, 1).is_err());
        let a = add_noise(&rec, 10.0, 5).unwrap();
        assert_eq!(a, add_noise(&rec, 10.0, 5).unwrap());
        assert_ne!(a, add_noise(&rec, 10.0, 6).unwrap());
        assert_eq!(a.snr, Some(10.0));
        assert!(add_noise(&a, 10.0, 5).is_err());
        let quiet = add_noise(&rec, 1e12, 5).unwrap();
        for (x, y) in quiet.values[0].iter().zip(&rec.values[0]) {
            assert!((x - y).abs() <= 1e-9 * y.abs());
        }
    }

    #[test]
    fn record_csv_layout() {
        let rec = SurfaceRecord::new(vec![0.0, 1.0], 0.0, 0.5, vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,det_0,det_1");
        assert_eq!(lines[2], "5e-1,2e0,4e0");
    }
}
