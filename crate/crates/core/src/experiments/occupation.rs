//! Occupation-number statistics over many independent ensembles, optionally on
//! top of an equilibrium background and compared with the deterministic heat
//! solution.

use super::{header, OutputDir};
use crate::error::{Error, Result};
use crate::heat::{solve_heat, Field};
use crate::io::{self, fmt};
use crate::lattice_walk::{
    empirical_moments, equilibrium_stats, exact_walk_profile, realization_seed, EmpiricalMoments, LatticeSpec,
    OccupationSeries, SeriesView, Source, WalkerEnsemble,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub n_cells: usize,
    /// Walkers released from `source` in each realization.
    pub n_walkers: usize,
    pub source: Source,
    /// Extra walkers per realization, each in an independent uniform cell.
    pub background: usize,
    pub realizations: usize,
    /// Strictly increasing step counts at which the histograms are kept.
    pub record_times: Vec<usize>,
    /// Also evolve the source distribution with the heat equation at `alpha = 1/2`.
    pub compare_heat: bool,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            n_cells: 40,
            n_walkers: 5000,
            source: Source::Uniform,
            background: 0,
            realizations: 100,
            record_times: vec![1000],
            compare_heat: false,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        let lattice = LatticeSpec::new(self.n_cells)?;
        self.source.initial_distribution(&lattice)?;
        if self.n_walkers == 0 {
            return Err(Error::invalid("n_walkers", "need at least one walker"));
        }
        if self.realizations < 2 {
            return Err(Error::invalid("realizations", "need at least two"));
        }
        if self.record_times.is_empty() || self.record_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("record_times", "must be a nonempty increasing list"));
        }
        Ok(())
    }

    fn n_steps(&self) -> usize {
        *self.record_times.last().expect("validated")
    }
}

/// Histograms of one realization at the recorded times.
struct Recorded {
    n_cells: usize,
    rows: Vec<Vec<u64>>,
}

impl SeriesView for Recorded {
    fn n_times(&self) -> usize {
        self.rows.len()
    }
    fn n_cells(&self) -> usize {
        self.n_cells
    }
    fn value(&self, time: usize, cell: usize) -> f64 {
        self.rows[time][cell] as f64
    }
}

pub struct OccupationResult {
    pub params: Params,
    pub seed: u64,
    pub moments: EmpiricalMoments,
    /// `[time][cell]` expected counts.
    pub theory_mean: Vec<f64>,
    pub theory_variance: Vec<f64>,
    /// `[time][cell]`: where the injected walkers are negligible next to the
    /// background. Present when there is a background.
    pub background_dominated: Option<Vec<bool>>,
    /// `[time][cell]` expected counts from the heat equation.
    pub heat_mean: Option<Vec<f64>>,
    /// Full series of realization 0.
    pub sample: OccupationSeries,
}

impl OccupationResult {
    pub fn n_cells(&self) -> usize {
        self.params.n_cells
    }

    /// Standard error of the sample mean predicted from the exact variance.
    pub fn theory_standard_error(&self, time: usize, cell: usize) -> f64 {
        (self.theory_variance[time * self.n_cells() + cell] / self.params.realizations as f64).sqrt()
    }

    /// Largest `|sample mean - expected| / standard error` at a recorded time.
    pub fn max_mean_deviation(&self, time: usize) -> f64 {
        (0..self.n_cells())
            .map(|c| {
                let k = time * self.n_cells() + c;
                (self.moments.mean[k] - self.theory_mean[k]).abs() / self.moments.standard_error(time, c)
            })
            .fold(0.0, f64::max)
    }

    /// Sum of sample variances over sum of sample means on the selected cells.
    pub fn pooled_variance_ratio(&self, time: usize, cells: impl Iterator<Item = usize>) -> f64 {
        let (v, m) = cells.fold((0.0, 0.0), |(v, m), c| {
            (v + self.moments.variance_at(time, c), m + self.moments.mean_at(time, c))
        });
        v / m
    }

    /// Mean sample variance over the selected cells.
    pub fn pooled_variance(&self, time: usize, cells: &[usize]) -> f64 {
        cells.iter().map(|&c| self.moments.variance_at(time, c)).sum::<f64>() / cells.len() as f64
    }

    /// Monte Carlo band half-width (one sigma) of the mean count around the
    /// heat solution.
    pub fn heat_band(&self, time: usize, cell: usize) -> Option<f64> {
        let heat = self.heat_mean.as_ref()?;
        let n = self.params.n_walkers as f64;
        let p = (heat[time * self.n_cells() + cell] / n).clamp(0.0, 1.0);
        Some((n * p * (1.0 - p) / self.params.realizations as f64).sqrt())
    }
}

fn run_realization(p: &Params, lattice: &LatticeSpec, seed: u64, full: bool) -> Result<(Recorded, Option<OccupationSeries>)> {
    let mut ensemble = WalkerEnsemble::new(lattice, p.n_walkers, p.source, seed)?;
    if p.background > 0 {
        let bg = WalkerEnsemble::new(lattice, p.background, Source::Uniform, realization_seed(seed, u64::MAX))?;
        ensemble = ensemble.join(bg);
    }
    if full {
        let series = ensemble.simulate(lattice, p.n_steps());
        let rows = p.record_times.iter().map(|&t| series.row(t).to_vec()).collect();
        return Ok((Recorded { n_cells: p.n_cells, rows }, Some(series)));
    }
    let mut rows = Vec::with_capacity(p.record_times.len());
    let mut now = 0;
    for &t in &p.record_times {
        rows.push(ensemble.advance(lattice, t - now));
        now = t;
    }
    Ok((Recorded { n_cells: p.n_cells, rows }, None))
}

pub fn compute(p: &Params, seed: u64) -> Result<OccupationResult> {
    p.validate()?;
    let lattice = LatticeSpec::new(p.n_cells)?;
    let runs: Vec<(Recorded, Option<OccupationSeries>)> = (0..p.realizations)
        .into_par_iter()
        .map(|r| run_realization(p, &lattice, realization_seed(seed, r as u64), r == 0))
        .collect::<Result<_>>()?;
    let mut recorded = Vec::with_capacity(runs.len());
    let mut sample = None;
    for (rec, full) in runs {
        recorded.push(rec);
        sample = sample.or(full);
    }
    let moments = empirical_moments(&recorded)?;

    let n = p.n_walkers as f64;
    let nb = p.background as f64;
    let q = 1.0 / p.n_cells as f64;
    let mut theory_mean = Vec::new();
    let mut theory_variance = Vec::new();
    let mut dominated = Vec::new();
    for &t in &p.record_times {
        let prof = exact_walk_profile(&lattice, p.source, t as u64)?;
        for &pi in prof.values() {
            theory_mean.push(n * pi + nb * q);
            theory_variance.push(n * pi * (1.0 - pi) + nb * q * (1.0 - q));
        }
        if p.background > 0 {
            let eq = equilibrium_stats(p.background as u64, p.n_cells, p.n_walkers as u64, &prof)?;
            dominated.extend(eq.approx_valid);
        }
    }

    let heat_mean = if p.compare_heat {
        let initial = Field::new_1d(p.source.initial_distribution(&lattice)?, 1.0, 0.5)?;
        let times: Vec<f64> = p.record_times.iter().map(|&t| t as f64).collect();
        let fields = solve_heat(&initial, &times)?;
        Some(fields.iter().flat_map(|f| f.values().iter().map(|&v| n * v)).collect())
    } else {
        None
    };

    Ok(OccupationResult {
        params: p.clone(),
        seed,
        moments,
        theory_mean,
        theory_variance,
        background_dominated: (p.background > 0).then_some(dominated),
        heat_mean,
        sample: sample.expect("realization 0 keeps its full series"),
    })
}

pub fn write(r: &OccupationResult, out: &mut OutputDir) -> Result<()> {
    let nc = r.n_cells();
    let mut head = header(&["time", "cell", "mean", "variance", "standard_error", "expected_mean", "expected_variance"]);
    if r.background_dominated.is_some() {
        head.push("background_dominated".into());
    }
    if r.heat_mean.is_some() {
        head.extend(header(&["heat_mean", "band_sigma"]));
    }
    let rows = r.params.record_times.iter().enumerate().flat_map(|(ti, &t)| {
        (0..nc).map(move |c| {
            let k = ti * nc + c;
            let mut row = vec![
                t.to_string(),
                c.to_string(),
                fmt(r.moments.mean[k]),
                fmt(r.moments.variance[k]),
                fmt(r.moments.standard_error(ti, c)),
                fmt(r.theory_mean[k]),
                fmt(r.theory_variance[k]),
            ];
            if let Some(d) = &r.background_dominated {
                row.push(d[k].to_string());
            }
            if let Some(h) = &r.heat_mean {
                row.push(fmt(h[k]));
                row.push(fmt(r.heat_band(ti, c).expect("heat present")));
            }
            row
        })
    });
    out.csv("moments.csv", &head, rows)?;
    out.with_writer("occupation.csv", |f| io::write_occupation_csv(&r.sample, f))?;
    out.binary("occupation", |dir, stem| io::write_occupation_binary(dir, stem, &r.sample, r.seed))
}
