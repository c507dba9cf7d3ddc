//! Trajectory fan: many independent walkers released from one source.

use super::{header, OutputDir};
use crate::error::{Error, Result};
use crate::io::{self, DType, Sidecar};
use crate::lattice_walk::{LatticeSpec, Source, WalkerEnsemble};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub n_cells: usize,
    /// Each walker is one realization.
    pub n_walkers: usize,
    pub n_steps: usize,
    pub source: Source,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            n_cells: 40,
            n_walkers: 500,
            n_steps: 1000,
            source: Source::Center,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        let lattice = LatticeSpec::new(self.n_cells)?;
        self.source.initial_distribution(&lattice)?;
        if self.n_walkers == 0 || self.n_steps == 0 {
            return Err(Error::invalid("n_walkers/n_steps", "must be positive"));
        }
        Ok(())
    }
}

pub struct WalkResult {
    pub params: Params,
    pub seed: u64,
    /// `[time][walker]` cell indices.
    pub positions: Vec<u64>,
    pub origin: f64,
}

impl WalkResult {
    pub fn at(&self, time: usize) -> &[u64] {
        let w = self.params.n_walkers;
        &self.positions[time * w..(time + 1) * w]
    }

    /// Mean squared displacement from the source at each time.
    pub fn msd(&self) -> Vec<f64> {
        (0..=self.params.n_steps)
            .map(|t| {
                let row = self.at(t);
                row.iter().map(|&p| (p as f64 - self.origin).powi(2)).sum::<f64>() / row.len() as f64
            })
            .collect()
    }
}

pub fn compute(p: &Params, seed: u64) -> Result<WalkResult> {
    p.validate()?;
    let lattice = LatticeSpec::new(p.n_cells)?;
    let mut ensemble = WalkerEnsemble::new(&lattice, p.n_walkers, p.source, seed)?;
    let mut positions = Vec::with_capacity((p.n_steps + 1) * p.n_walkers);
    positions.extend(ensemble.positions().map(|c| c as u64));
    for _ in 0..p.n_steps {
        ensemble.step(&lattice);
        positions.extend(ensemble.positions().map(|c| c as u64));
    }
    Ok(WalkResult {
        params: p.clone(),
        seed,
        positions,
        origin: p.source.origin(&lattice),
    })
}

pub fn write(r: &WalkResult, out: &mut OutputDir) -> Result<()> {
    let w = r.params.n_walkers;
    out.binary("positions", |dir, stem| {
        let sidecar = Sidecar::new(DType::U64Le, vec![r.params.n_steps + 1, w])
            .with("seed", r.seed)
            .with("n_cells", r.params.n_cells)
            .with("source", r.params.source);
        io::write_u64(dir, stem, &r.positions, &sidecar)
    })?;
    let mut head = vec!["time".to_string()];
    head.extend((0..w).map(|i| format!("walker_{i}")));
    out.csv(
        "positions.csv",
        &head,
        (0..=r.params.n_steps).map(|t| {
            std::iter::once(t.to_string())
                .chain(r.at(t).iter().map(u64::to_string))
                .collect()
        }),
    )?;
    out.csv(
        "spread.csv",
        &header(&["time", "msd"]),
        r.msd().into_iter().enumerate().map(|(t, m)| vec![t.to_string(), io::fmt(m)]),
    )
}
