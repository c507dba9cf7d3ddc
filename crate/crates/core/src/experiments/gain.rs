//! Detector-averaging gain table.

use super::{header, OutputDir};
use crate::error::{Error, Result};
use crate::io::fmt;
use crate::saft::{averaging_gain, AveragingGain};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub detectors: Vec<usize>,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            detectors: vec![1, 2, 4, 16, 64, 100, 200, 256],
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        if self.detectors.is_empty() {
            return Err(Error::invalid("detectors", "list is empty"));
        }
        for &n in &self.detectors {
            averaging_gain(n)?;
        }
        Ok(())
    }
}

pub fn compute(p: &Params) -> Result<Vec<(usize, AveragingGain)>> {
    p.validate()?;
    p.detectors.iter().map(|&n| Ok((n, averaging_gain(n)?))).collect()
}

pub fn write(rows: &[(usize, AveragingGain)], out: &mut OutputDir) -> Result<()> {
    out.csv(
        "gain.csv",
        &header(&["n_detectors", "snr_factor", "resolution_factor"]),
        rows.iter()
            .map(|(n, g)| vec![n.to_string(), fmt(g.snr_factor), fmt(g.resolution_factor)]),
    )
}
