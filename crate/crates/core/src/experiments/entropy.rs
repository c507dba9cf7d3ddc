//! Shannon entropy along the noiseless drift for random initial profiles.

use super::{header, OutputDir};
use crate::error::{Error, Result};
use crate::io::fmt;
use crate::langevin::build_drift_matrix;
use crate::resolution::{entropy_trace, EntropyTrace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

/// Entropy may dip by this much between samples and still count as nondecreasing.
pub const MONOTONE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub n_cells: usize,
    pub n_profiles: usize,
    pub dt: f64,
    pub n_steps: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            n_cells: 40,
            n_profiles: 10,
            dt: 0.5,
            n_steps: 400,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        build_drift_matrix(self.n_cells)?;
        if self.n_profiles == 0 {
            return Err(Error::invalid("n_profiles", "must be positive"));
        }
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return Err(Error::invalid("dt", format!("must lie in (0, 1], got {}", self.dt)));
        }
        Ok(())
    }
}

/// Profiles drawn uniformly from the probability simplex.
pub fn random_profiles(n_cells: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let w: Vec<f64> = (0..n_cells).map(|_| Exp1.sample(&mut rng)).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|v| v / s).collect()
        })
        .collect()
}

pub struct EntropyResult {
    pub traces: Vec<EntropyTrace>,
}

impl EntropyResult {
    pub fn all_nondecreasing(&self) -> bool {
        self.traces.iter().all(|t| t.is_nondecreasing(MONOTONE_TOL))
    }
}

pub fn compute(p: &Params, seed: u64) -> Result<EntropyResult> {
    p.validate()?;
    let m = build_drift_matrix(p.n_cells)?;
    let traces = random_profiles(p.n_cells, p.n_profiles, seed)
        .iter()
        .map(|init| entropy_trace(&m, init, p.dt, p.n_steps))
        .collect::<Result<_>>()?;
    Ok(EntropyResult { traces })
}

pub fn write(r: &EntropyResult, out: &mut OutputDir) -> Result<()> {
    out.csv(
        "entropy.csv",
        &header(&["profile", "time", "entropy"]),
        r.traces.iter().enumerate().flat_map(|(i, tr)| {
            tr.times
                .iter()
                .zip(&tr.entropy)
                .map(move |(t, s)| vec![i.to_string(), fmt(*t), fmt(*s)])
        }),
    )?;
    out.csv(
        "summary.csv",
        &header(&["profile", "initial", "final", "nondecreasing"]),
        r.traces.iter().enumerate().map(|(i, tr)| {
            vec![
                i.to_string(),
                fmt(tr.entropy[0]),
                fmt(*tr.entropy.last().expect("trace has the initial sample")),
                tr.is_nondecreasing(MONOTONE_TOL).to_string(),
            ]
        }),
    )
}
