//! Langevin cell equations against their spectral solution.

use super::{header, OutputDir};
use crate::error::{Error, Result};
use crate::io::{self, fmt};
use crate::langevin::{
    build_drift_matrix, diagonalization_error, integrate_langevin_strided, LangevinTrajectory, NoiseMode, NoiseSpec,
    SpectralSystem,
};
use crate::lattice_walk::{LatticeSpec, Source};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    pub variance: f64,
    #[serde(default)]
    pub mode: NoiseMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub n_cells: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Total initial count, spread over the cells as `source` prescribes.
    pub n0: f64,
    pub source: Source,
    pub noise: Option<Noise>,
    /// Keep every `stride`-th step of the trajectory.
    pub stride: usize,
    /// Step sizes for the noiseless convergence study, largest first.
    pub convergence_dts: Vec<f64>,
    pub diagonalization_sizes: Vec<usize>,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            n_cells: 40,
            dt: 0.1,
            t_end: 20.0,
            n0: 1000.0,
            source: Source::Center,
            noise: None,
            stride: 10,
            convergence_dts: vec![0.2, 0.1, 0.05, 0.025],
            diagonalization_sizes: vec![2, 8, 40, 128],
        }
    }
}

fn steps(t_end: f64, dt: f64) -> Result<usize> {
    let n = t_end / dt;
    if (n - n.round()).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::invalid("dt", format!("t_end = {t_end} is not a whole number of steps of {dt}")));
    }
    Ok(n.round() as usize)
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        let lattice = LatticeSpec::new(self.n_cells)?;
        self.source.initial_distribution(&lattice)?;
        let bound = build_drift_matrix(self.n_cells)?.stability_bound();
        for &dt in std::iter::once(&self.dt).chain(&self.convergence_dts) {
            if !(dt > 0.0 && dt <= bound) {
                return Err(Error::Unstable { dt, bound });
            }
            steps(self.t_end, dt)?;
        }
        if !(self.t_end > 0.0) {
            return Err(Error::invalid("t_end", "must be positive"));
        }
        if self.stride == 0 {
            return Err(Error::invalid("stride", "must be at least 1"));
        }
        if let Some(n) = self.noise {
            NoiseSpec::new(n.variance, 0)?;
        }
        for &n in &self.diagonalization_sizes {
            build_drift_matrix(n)?;
        }
        Ok(())
    }

    fn initial(&self) -> Result<Vec<f64>> {
        let lattice = LatticeSpec::new(self.n_cells)?;
        Ok(self
            .source
            .initial_distribution(&lattice)?
            .into_iter()
            .map(|p| p * self.n0)
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub dt: f64,
    /// Max-norm error against the spectral solution at `t_end`.
    pub error: f64,
    /// `log2` of the error ratio to the previous, twice larger step.
    pub order: Option<f64>,
}

pub struct LangevinResult {
    pub params: Params,
    pub system: SpectralSystem,
    pub trajectory: LangevinTrajectory,
    pub spectral_final: Vec<f64>,
    pub convergence: Vec<ConvergencePoint>,
    pub diagonalization: Vec<(usize, f64)>,
}

pub fn compute(p: &Params, seed: u64) -> Result<LangevinResult> {
    p.validate()?;
    let m = build_drift_matrix(p.n_cells)?;
    let system = SpectralSystem::new(p.n_cells)?;
    let initial = p.initial()?;
    let noise = match p.noise {
        Some(n) => NoiseSpec {
            variance: n.variance,
            seed,
            mode: n.mode,
        },
        None => NoiseSpec::silent(),
    };
    let trajectory = integrate_langevin_strided(&initial, &m, &noise, p.dt, steps(p.t_end, p.dt)?, p.stride)?;
    let spectral_final = system.propagate(&initial, p.t_end);

    let mut convergence: Vec<ConvergencePoint> = Vec::new();
    for &dt in &p.convergence_dts {
        let n = steps(p.t_end, dt)?;
        let traj = integrate_langevin_strided(&initial, &m, &NoiseSpec::silent(), dt, n, n)?;
        let error = traj
            .last()
            .iter()
            .zip(&spectral_final)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let order = convergence
            .last()
            .filter(|prev| (prev.dt / dt - 2.0).abs() < 1e-9)
            .map(|prev| (prev.error / error).log2());
        convergence.push(ConvergencePoint { dt, error, order });
    }
    let diagonalization = p
        .diagonalization_sizes
        .iter()
        .map(|&n| Ok((n, diagonalization_error(n)?)))
        .collect::<Result<_>>()?;
    Ok(LangevinResult {
        params: p.clone(),
        system,
        trajectory,
        spectral_final,
        convergence,
        diagonalization,
    })
}

pub fn write(r: &LangevinResult, out: &mut OutputDir) -> Result<()> {
    out.with_writer("trajectory.csv", |f| io::write_trajectory_csv(&r.trajectory, f))?;
    out.with_writer("spectrum.csv", |f| r.system.write_csv(f))?;
    out.csv(
        "final.csv",
        &header(&["cell", "langevin", "spectral"]),
        r.trajectory
            .last()
            .iter()
            .zip(&r.spectral_final)
            .enumerate()
            .map(|(c, (a, b))| vec![c.to_string(), fmt(*a), fmt(*b)]),
    )?;
    out.csv(
        "convergence.csv",
        &header(&["dt", "error", "order"]),
        r.convergence
            .iter()
            .map(|c| vec![fmt(c.dt), fmt(c.error), c.order.map(fmt).unwrap_or_default()]),
    )?;
    out.csv(
        "diagonalization.csv",
        &header(&["n_cells", "max_error"]),
        r.diagonalization.iter().map(|(n, e)| vec![n.to_string(), fmt(*e)]),
    )
}
