//! Row sums and singular spectrum of the virtual-wave kernel.

use super::{header, OutputDir};
use crate::error::Result;
use crate::io::fmt;
use crate::virtual_wave::{retarded_grid, time_grid, KernelMatrix};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub nt: usize,
    pub dt: f64,
    pub ntp: usize,
    pub dtp: f64,
    pub c: f64,
    pub alpha: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            nt: 200,
            dt: 2.0,
            ntp: 200,
            dtp: 1.0,
            c: 1.0,
            alpha: 0.5,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        self.kernel().map(|_| ())
    }

    pub fn kernel(&self) -> Result<KernelMatrix> {
        KernelMatrix::build(&time_grid(self.nt, self.dt), &retarded_grid(self.ntp, self.dtp), self.c, self.alpha)
    }
}

pub struct KernelResult {
    pub t_grid: Vec<f64>,
    pub row_sums: Vec<f64>,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub dt: f64,
}

impl KernelResult {
    /// Largest `|row sum - 2| / 2` over rows with `t >= 10 dt`.
    pub fn max_row_sum_error(&self) -> f64 {
        self.t_grid
            .iter()
            .zip(&self.row_sums)
            .filter(|(t, _)| **t >= 10.0 * self.dt - 1e-12)
            .map(|(_, s)| (s - 2.0).abs() / 2.0)
            .fold(0.0, f64::max)
    }

    /// `log10(sigma_max / sigma_min)`, capped at machine precision.
    pub fn decades(&self) -> f64 {
        let s = &self.singular_values;
        (s[0] / s[s.len() - 1].max(s[0] * f64::EPSILON)).log10()
    }

    /// Decades of decay within the first quarter of the spectrum.
    pub fn decades_first_quarter(&self) -> f64 {
        let s = &self.singular_values;
        (s[0] / s[s.len() / 4].max(s[0] * f64::EPSILON)).log10()
    }
}

pub fn compute(p: &Params) -> Result<KernelResult> {
    let k = p.kernel()?;
    Ok(KernelResult {
        row_sums: (0..k.n_t()).map(|i| k.row_sum(i)).collect(),
        t_grid: k.t_grid().to_vec(),
        singular_values: k.singular_values(),
        dt: k.dt(),
    })
}

pub fn write(r: &KernelResult, out: &mut OutputDir) -> Result<()> {
    out.csv(
        "row_sums.csv",
        &header(&["t", "row_sum"]),
        r.t_grid.iter().zip(&r.row_sums).map(|(t, s)| vec![fmt(*t), fmt(*s)]),
    )?;
    let smax = r.singular_values[0];
    out.csv(
        "singular_values.csv",
        &header(&["index", "sigma", "relative"]),
        r.singular_values
            .iter()
            .enumerate()
            .map(|(i, s)| vec![i.to_string(), fmt(*s), fmt(s / smax)]),
    )
}
