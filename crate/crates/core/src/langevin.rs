//! Mesoscopic Langevin model of the occupation numbers: the drift matrix, its
//! DCT diagonalisation, Euler-Maruyama integration in cell space and the exact
//! Ornstein-Uhlenbeck update in mode space.

use crate::dct;
use crate::error::{Error, Result};
use crate::lattice_walk::SeriesView;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Tridiagonal drift matrix `M` of `dN = -M N dt + noise` with reflecting walls:
/// diagonal `1` (`1/2` in the two boundary rows), off-diagonals `-1/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DriftMatrix {
    n_cells: usize,
}

pub fn build_drift_matrix(n_cells: usize) -> Result<DriftMatrix> {
    if n_cells < 2 {
        return Err(Error::invalid("n_cells", format!("need at least 2 cells, got {n_cells}")));
    }
    Ok(DriftMatrix { n_cells })
}

impl DriftMatrix {
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let n = self.n_cells;
        if i == j {
            if i == 0 || i == n - 1 {
                0.5
            } else {
                1.0
            }
        } else if i.abs_diff(j) == 1 {
            -0.5
        } else {
            0.0
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_cells, self.n_cells, |i, j| self.entry(i, j))
    }

    /// `out = M v`.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n_cells;
        out[0] = 0.5 * (v[0] - v[1]);
        out[n - 1] = 0.5 * (v[n - 1] - v[n - 2]);
        for i in 1..n - 1 {
            out[i] = v[i] - 0.5 * (v[i - 1] + v[i + 1]);
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cells];
        self.apply_into(v, &mut out);
        out
    }

    /// Largest singular value `2 sin^2(pi (n-1) / (2n))`.
    pub fn max_rate(&self) -> f64 {
        let n = self.n_cells as f64;
        2.0 * (std::f64::consts::PI * (n - 1.0) / (2.0 * n)).sin().powi(2)
    }

    /// Largest Euler-Maruyama step accepted by [`integrate_langevin`].
    pub fn stability_bound(&self) -> f64 {
        1.0 / (2.0 * self.max_rate())
    }
}

/// Singular values of the drift matrix next to their continuum approximation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularValues {
    pub k: Vec<f64>,
    pub gamma: Vec<f64>,
    /// `k^2 / 2`.
    pub continuum: Vec<f64>,
}

pub fn singular_values(n_cells: usize) -> Result<SingularValues> {
    build_drift_matrix(n_cells)?;
    let k = dct::wavenumbers(n_cells);
    Ok(SingularValues {
        gamma: dct::laplacian_rates(n_cells, 0.5, 1.0),
        continuum: k.iter().map(|k| k * k / 2.0).collect(),
        k,
    })
}

/// `max |F M F^T - diag(gamma)|` for the DCT basis `F`.
pub fn diagonalization_error(n_cells: usize) -> Result<f64> {
    let m = build_drift_matrix(n_cells)?.to_dense();
    let f = dct::dct_basis(n_cells);
    let mut d = &f * m * f.transpose();
    for (k, g) in dct::laplacian_rates(n_cells, 0.5, 1.0).into_iter().enumerate() {
        d[(k, k)] -= g;
    }
    Ok(d.amax())
}

#[derive(Clone, Debug)]
pub struct SpectralSystem {
    basis: DMatrix<f64>,
    gamma: Vec<f64>,
    k: Vec<f64>,
}

impl SpectralSystem {
    pub fn new(n_cells: usize) -> Result<Self> {
        let sv = singular_values(n_cells)?;
        Ok(Self {
            basis: dct::dct_basis(n_cells),
            gamma: sv.gamma,
            k: sv.k,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.gamma.len()
    }

    /// `F`, modes along rows.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    pub fn to_modes(&self, v: &[f64]) -> Vec<f64> {
        dct::forward(&self.basis, v)
    }

    pub fn to_cells(&self, hat: &[f64]) -> Vec<f64> {
        dct::inverse(&self.basis, hat)
    }

    /// Noiseless propagation of a cell-space vector by time `t`.
    pub fn propagate(&self, v: &[f64], t: f64) -> Vec<f64> {
        let hat: Vec<f64> = self
            .to_modes(v)
            .iter()
            .zip(&self.gamma)
            .map(|(a, g)| a * (-g * t).exp())
            .collect();
        self.to_cells(&hat)
    }

    /// Writes `k,gamma` rows.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "gamma"])?;
        for (k, g) in self.k.iter().zip(&self.gamma) {
            w.write_record([format!("{k:e}"), format!("{g:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// How the white-noise forcing enters the cell equations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// Independent `sqrt(Var dt) eps_i` in every cell, as written in the cell
    /// equations. Mode `k` then receives noise variance `Var dt` and relaxes to
    /// `Var / (2 gamma_k)`; the total count is not conserved.
    #[default]
    White,
    /// Noise carried by fluxes across cell edges, `sqrt(Var dt) D xi` with
    /// `D D^T = 2M`. Mode `k` receives `2 gamma_k Var dt`, every mode relaxes to
    /// `Var`, and the total count is conserved.
    Conservative,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub variance: f64,
    pub seed: u64,
    #[serde(default)]
    pub mode: NoiseMode,
}

impl NoiseSpec {
    pub fn new(variance: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            variance,
            seed,
            mode: NoiseMode::White,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn silent() -> Self {
        Self {
            variance: 0.0,
            seed: 0,
            mode: NoiseMode::White,
        }
    }

    pub fn conservative(mut self) -> Self {
        self.mode = NoiseMode::Conservative;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance.is_finite() && self.variance >= 0.0) {
            return Err(Error::invalid("variance", format!("must be >= 0, got {}", self.variance)));
        }
        Ok(())
    }
}

/// Real-valued Langevin trajectory, row-major `[step][cell]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LangevinTrajectory {
    n_cells: usize,
    dt: f64,
    stride: usize,
    values: Vec<f64>,
}

impl LangevinTrajectory {
    pub fn from_rows(n_cells: usize, dt: f64, values: Vec<f64>) -> Result<Self> {
        if n_cells == 0 || values.is_empty() || values.len() % n_cells != 0 {
            return Err(Error::ShapeMismatch(format!(
                "{} values do not fill rows of {n_cells} cells",
                values.len()
            )));
        }
        Ok(Self {
            n_cells,
            dt,
            stride: 1,
            values,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Time between stored rows.
    pub fn sample_interval(&self) -> f64 {
        self.dt * self.stride as f64
    }

    pub fn n_rows(&self) -> usize {
        self.values.len() / self.n_cells
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.values[index * self.n_cells..(index + 1) * self.n_cells]
    }

    pub fn last(&self) -> &[f64] {
        self.row(self.n_rows() - 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl SeriesView for LangevinTrajectory {
    fn n_times(&self) -> usize {
        self.n_rows()
    }
    fn n_cells(&self) -> usize {
        self.n_cells
    }
    fn value(&self, time: usize, cell: usize) -> f64 {
        self.values[time * self.n_cells + cell]
    }
}

/// Euler-Maruyama integration of `dN = -M N dt + sqrt(Var dt) eps`, storing
/// every step.
pub fn integrate_langevin(
    initial: &[f64],
    m: &DriftMatrix,
    noise: &NoiseSpec,
    dt: f64,
    n_steps: usize,
) -> Result<LangevinTrajectory> {
    integrate_langevin_strided(initial, m, noise, dt, n_steps, 1)
}

/// As [`integrate_langevin`] but storing only every `stride`-th step (and the
/// initial state).
pub fn integrate_langevin_strided(
    initial: &[f64],
    m: &DriftMatrix,
    noise: &NoiseSpec,
    dt: f64,
    n_steps: usize,
    stride: usize,
) -> Result<LangevinTrajectory> {
    let n = m.n_cells;
    if initial.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "initial state has {} cells, drift matrix {n}",
            initial.len()
        )));
    }
    noise.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
    }
    if dt > m.stability_bound() {
        return Err(Error::Unstable {
            dt,
            bound: m.stability_bound(),
        });
    }
    if stride == 0 {
        return Err(Error::invalid("stride", "must be at least 1"));
    }
    let amp = (noise.variance * dt).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut state = initial.to_vec();
    let mut drift = vec![0.0; n];
    let mut flux = vec![0.0; n - 1];
    let mut values = Vec::with_capacity((n_steps / stride + 1) * n);
    values.extend_from_slice(&state);
    for step in 1..=n_steps {
        m.apply_into(&state, &mut drift);
        for (s, d) in state.iter_mut().zip(&drift) {
            *s -= d * dt;
        }
        if amp > 0.0 {
            match noise.mode {
                NoiseMode::White => {
                    for s in state.iter_mut() {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        *s += amp * e;
                    }
                }
                NoiseMode::Conservative => {
                    for f in flux.iter_mut() {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        *f = amp * e;
                    }
                    for (e, f) in flux.iter().enumerate() {
                        state[e] -= f;
                        state[e + 1] += f;
                    }
                }
            }
        }
        if step % stride == 0 {
            values.extend_from_slice(&state);
        }
    }
    Ok(LangevinTrajectory {
        n_cells: n,
        dt,
        stride,
        values,
    })
}

/// Advances modal amplitudes by `t`. Without noise each mode decays as
/// `exp(-gamma_k t)`; with noise the exact Ornstein-Uhlenbeck transition adds
/// a Gaussian of variance `Var (1 - exp(-2 gamma_k t))`.
pub fn evolve_kspace(
    initial_hat: &[f64],
    t: f64,
    system: &SpectralSystem,
    noise: Option<&NoiseSpec>,
) -> Result<Vec<f64>> {
    if initial_hat.len() != system.n_cells() {
        return Err(Error::ShapeMismatch(format!(
            "{} amplitudes for {} modes",
            initial_hat.len(),
            system.n_cells()
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", format!("must be >= 0, got {t}")));
    }
    let mut rng = noise.map(|n| ChaCha8Rng::seed_from_u64(n.seed));
    if let Some(n) = noise {
        n.validate()?;
    }
    Ok(initial_hat
        .iter()
        .zip(&system.gamma)
        .map(|(&a, &g)| {
            let decay = (-g * t).exp();
            match (noise, rng.as_mut()) {
                (Some(n), Some(r)) => {
                    let e: f64 = StandardNormal.sample(r);
                    a * decay + (n.variance * (1.0 - decay * decay)).sqrt() * e
                }
                _ => a * decay,
            }
        })
        .collect())
}
