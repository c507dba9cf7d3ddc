//! One-dimensional random walk with reflecting walls and its occupation-number
//! statistics.
//!
//! Cells are indexed `0..n_cells`. Every walker owns a ChaCha8 stream keyed by
//! `(seed, walker index)` and consumes exactly one bit per step, so a trajectory
//! depends only on the seed and the walker index, never on scheduling.

use crate::error::{ensure_positive, Error, Result};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Tolerance on `sum(p) <= 1` for probability profiles.
pub const PROFILE_MASS_TOL: f64 = 1e-12;

/// `p_i` below this counts as "p << 1", where `Var(N_i) ~ mean(N_i)` holds.
pub const SMALL_PROBABILITY: f64 = 0.01;

/// Diffusion term below this fraction of the equilibrium occupation counts as negligible.
pub const NEGLIGIBLE_DIFFUSION_FRACTION: f64 = 0.1;

const WALKERS_PER_TASK: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// A step that would leave the lattice is rejected; the walker stays put.
    Reflecting,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    n_cells: usize,
    boundary: Boundary,
}

impl LatticeSpec {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::invalid("n_cells", format!("need at least 2 cells, got {n_cells}")));
        }
        Ok(Self {
            n_cells,
            boundary: Boundary::Reflecting,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Geometric centre of the lattice in cell-index coordinates.
    pub fn center(&self) -> f64 {
        (self.n_cells as f64 - 1.0) / 2.0
    }

    #[inline]
    fn reflect(&self, from: u32, step_right: bool) -> u32 {
        if step_right {
            if (from as usize) + 1 < self.n_cells {
                from + 1
            } else {
                from
            }
        } else if from > 0 {
            from - 1
        } else {
            from
        }
    }
}

/// Where walkers start.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "cell")]
pub enum Source {
    /// All walkers in one cell.
    Cell(usize),
    /// The lattice centre. With an even cell count the centre is the edge
    /// between the two middle cells and each walker picks one of them with a
    /// fair coin.
    Center,
    /// Each walker in an independent, uniformly random cell (equilibrium).
    Uniform,
}

impl Source {
    fn validate(&self, lattice: &LatticeSpec) -> Result<()> {
        match *self {
            Source::Cell(c) if c >= lattice.n_cells => Err(Error::invalid(
                "source",
                format!("cell {c} outside lattice of {} cells", lattice.n_cells),
            )),
            _ => Ok(()),
        }
    }

    /// Initial probability distribution over the lattice.
    pub fn initial_distribution(&self, lattice: &LatticeSpec) -> Result<Vec<f64>> {
        self.validate(lattice)?;
        let n = lattice.n_cells;
        let mut p = vec![0.0; n];
        match *self {
            Source::Cell(c) => p[c] = 1.0,
            Source::Center if n % 2 == 0 => {
                p[n / 2 - 1] = 0.5;
                p[n / 2] = 0.5;
            }
            Source::Center => p[n / 2] = 1.0,
            Source::Uniform => p.iter_mut().for_each(|v| *v = 1.0 / n as f64),
        }
        Ok(p)
    }

    /// Mean starting position.
    pub fn origin(&self, lattice: &LatticeSpec) -> f64 {
        match *self {
            Source::Cell(c) => c as f64,
            Source::Center | Source::Uniform => lattice.center(),
        }
    }
}

#[derive(Clone, Debug)]
struct WalkerStream {
    rng: ChaCha8Rng,
    bits: u64,
    left: u32,
}

impl WalkerStream {
    fn new(seed: u64, walker: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(walker);
        Self { rng, bits: 0, left: 0 }
    }

    #[inline]
    fn next_bit(&mut self) -> bool {
        if self.left == 0 {
            self.bits = self.rng.next_u64();
            self.left = 64;
        }
        let bit = self.bits & 1 == 1;
        self.bits >>= 1;
        self.left -= 1;
        bit
    }
}

/// Seed for realization `r` of an experiment with master seed `seed`.
pub fn realization_seed(seed: u64, r: u64) -> u64 {
    seed ^ (r.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Clone, Debug)]
pub struct WalkerEnsemble {
    positions: Vec<u32>,
    streams: Vec<WalkerStream>,
    seed: u64,
    time: u64,
}

impl WalkerEnsemble {
    pub fn new(lattice: &LatticeSpec, n_walkers: usize, source: Source, seed: u64) -> Result<Self> {
        if n_walkers == 0 {
            return Err(Error::invalid("n_walkers", "need at least one walker"));
        }
        source.validate(lattice)?;
        let n = lattice.n_cells;
        let mut streams: Vec<WalkerStream> =
            (0..n_walkers as u64).map(|w| WalkerStream::new(seed, w)).collect();
        let positions = streams
            .iter_mut()
            .map(|s| match source {
                Source::Cell(c) => c as u32,
                Source::Center if n % 2 == 0 => (n / 2 - 1) as u32 + s.rng.random_range(0..2u32),
                Source::Center => (n / 2) as u32,
                Source::Uniform => s.rng.random_range(0..n as u32),
            })
            .collect();
        Ok(Self {
            positions,
            streams,
            seed,
            time: 0,
        })
    }

    /// Ensemble whose members start at explicit cells.
    pub fn from_positions(lattice: &LatticeSpec, positions: Vec<usize>, seed: u64) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::invalid("positions", "need at least one walker"));
        }
        if let Some(&bad) = positions.iter().find(|&&p| p >= lattice.n_cells) {
            return Err(Error::invalid("positions", format!("cell {bad} outside lattice")));
        }
        let streams = (0..positions.len() as u64)
            .map(|w| WalkerStream::new(seed, w))
            .collect();
        Ok(Self {
            positions: positions.into_iter().map(|p| p as u32).collect(),
            streams,
            seed,
            time: 0,
        })
    }

    /// Concatenates two ensembles on the same lattice. Walkers of `other` keep
    /// their own streams.
    pub fn join(mut self, other: WalkerEnsemble) -> Self {
        self.positions.extend(other.positions);
        self.streams.extend(other.streams);
        self
    }

    pub fn n_walkers(&self) -> usize {
        self.positions.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.positions.iter().map(|&p| p as usize)
    }

    pub fn histogram(&self, lattice: &LatticeSpec) -> Vec<u64> {
        let mut h = vec![0u64; lattice.n_cells];
        for &p in &self.positions {
            h[p as usize] += 1;
        }
        h
    }

    /// Advances every walker by one step.
    pub fn step(&mut self, lattice: &LatticeSpec) {
        self.positions
            .par_iter_mut()
            .zip(self.streams.par_iter_mut())
            .with_min_len(WALKERS_PER_TASK)
            .for_each(|(pos, stream)| *pos = lattice.reflect(*pos, stream.next_bit()));
        self.time += 1;
    }

    /// Runs `n_steps` and records the histogram at every step, including the
    /// starting one.
    pub fn simulate(&mut self, lattice: &LatticeSpec, n_steps: usize) -> OccupationSeries {
        let n = lattice.n_cells;
        let rows = n_steps + 1;
        let start_time = self.time;
        let counts = self
            .positions
            .par_chunks_mut(WALKERS_PER_TASK)
            .zip(self.streams.par_chunks_mut(WALKERS_PER_TASK))
            .map(|(pos, streams)| {
                let mut local = vec![0u64; rows * n];
                for (p, s) in pos.iter_mut().zip(streams.iter_mut()) {
                    local[*p as usize] += 1;
                    for t in 1..rows {
                        *p = lattice.reflect(*p, s.next_bit());
                        local[t * n + *p as usize] += 1;
                    }
                }
                local
            })
            .reduce(
                || vec![0u64; rows * n],
                |mut a, b| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                    a
                },
            );
        self.time += n_steps as u64;
        OccupationSeries {
            lattice: *lattice,
            start_time,
            n_walkers: self.positions.len() as u64,
            counts,
        }
    }

    /// Runs `n_steps` and returns only the final histogram.
    pub fn advance(&mut self, lattice: &LatticeSpec, n_steps: usize) -> Vec<u64> {
        self.positions
            .par_chunks_mut(WALKERS_PER_TASK)
            .zip(self.streams.par_chunks_mut(WALKERS_PER_TASK))
            .for_each(|(pos, streams)| {
                for (p, s) in pos.iter_mut().zip(streams.iter_mut()) {
                    let mut x = *p;
                    for _ in 0..n_steps {
                        x = lattice.reflect(x, s.next_bit());
                    }
                    *p = x;
                }
            });
        self.time += n_steps as u64;
        self.histogram(lattice)
    }
}

/// Functional form of a single step: returns the stepped ensemble.
pub fn step_ensemble(mut ensemble: WalkerEnsemble, lattice: &LatticeSpec) -> WalkerEnsemble {
    ensemble.step(lattice);
    ensemble
}

/// Particle counts per cell, one row per time step.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupationSeries {
    lattice: LatticeSpec,
    start_time: u64,
    n_walkers: u64,
    counts: Vec<u64>,
}

impl OccupationSeries {
    pub fn from_counts(lattice: LatticeSpec, start_time: u64, counts: Vec<u64>) -> Result<Self> {
        let n = lattice.n_cells;
        if counts.is_empty() || counts.len() % n != 0 {
            return Err(Error::ShapeMismatch(format!(
                "{} counts do not fill rows of {n} cells",
                counts.len()
            )));
        }
        let n_walkers = counts[..n].iter().sum();
        if counts.chunks(n).any(|row| row.iter().sum::<u64>() != n_walkers) {
            return Err(Error::ShapeMismatch("row sums differ: walkers not conserved".into()));
        }
        Ok(Self {
            lattice,
            start_time,
            n_walkers,
            counts,
        })
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn n_walkers(&self) -> u64 {
        self.n_walkers
    }

    pub fn n_times(&self) -> usize {
        self.counts.len() / self.lattice.n_cells
    }

    pub fn start_time(&self) -> u64 {
        self.start_time
    }

    pub fn row(&self, index: usize) -> &[u64] {
        let n = self.lattice.n_cells;
        &self.counts[index * n..(index + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.counts.chunks(self.lattice.n_cells)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Mean squared distance of the walkers from `origin` at row `index`.
    pub fn mean_square_displacement(&self, index: usize, origin: f64) -> f64 {
        let row = self.row(index);
        row.iter()
            .enumerate()
            .map(|(c, &k)| k as f64 * (c as f64 - origin).powi(2))
            .sum::<f64>()
            / self.n_walkers as f64
    }
}

/// Read access shared by integer occupation series and real-valued trajectories.
pub trait SeriesView {
    fn n_times(&self) -> usize;
    fn n_cells(&self) -> usize;
    fn value(&self, time: usize, cell: usize) -> f64;
}

impl SeriesView for OccupationSeries {
    fn n_times(&self) -> usize {
        OccupationSeries::n_times(self)
    }
    fn n_cells(&self) -> usize {
        self.lattice.n_cells
    }
    fn value(&self, time: usize, cell: usize) -> f64 {
        self.counts[time * self.lattice.n_cells + cell] as f64
    }
}

/// Probabilities `p_i` over a contiguous run of cells starting at `first_cell`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityProfile {
    first_cell: i64,
    p: Vec<f64>,
    time: f64,
}

impl ProbabilityProfile {
    pub fn new(first_cell: i64, p: Vec<f64>, time: f64) -> Result<Self> {
        if let Some(bad) = p.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::invalid("p", format!("probabilities must be >= 0, got {bad}")));
        }
        let sum: f64 = p.iter().sum();
        if sum > 1.0 + PROFILE_MASS_TOL {
            return Err(Error::NotNormalized { sum });
        }
        if !(time >= 0.0) {
            return Err(Error::invalid("time", "must be nonnegative"));
        }
        Ok(Self { first_cell, p, time })
    }

    pub fn first_cell(&self) -> i64 {
        self.first_cell
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    pub fn cells(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.p
            .iter()
            .enumerate()
            .map(move |(k, &v)| (self.first_cell + k as i64, v))
    }

    /// `p_i`, zero outside the stored window.
    pub fn get(&self, cell: i64) -> f64 {
        let k = cell - self.first_cell;
        if k < 0 {
            return 0.0;
        }
        self.p.get(k as usize).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.cells().map(|(c, v)| c as f64 * v).sum::<f64>() / self.total()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.cells().map(|(c, v)| (c as f64 - m).powi(2) * v).sum::<f64>() / self.total()
    }
}

fn gaussian_weight(offset: f64, t: f64, alpha: f64) -> f64 {
    (-(offset * offset) / (4.0 * alpha * t)).exp() / (4.0 * PI * alpha * t).sqrt()
}

fn finish_profile(first_cell: i64, mut p: Vec<f64>, t: f64) -> Result<ProbabilityProfile> {
    // For 2*alpha*t below about 1.5 the lattice sum of the density exceeds one
    // by more than rounding; such profiles are rescaled to unit mass.
    let sum: f64 = p.iter().sum();
    if sum > 1.0 {
        p.iter_mut().for_each(|v| *v /= sum);
    }
    ProbabilityProfile::new(first_cell, p, t)
}

/// Continuum Gaussian `p_i = exp(-i^2/(4 alpha t)) / sqrt(4 pi alpha t)` at
/// integer offsets from the source, over a window of +-12 standard deviations.
pub fn gaussian_profile(t: f64, alpha: f64) -> Result<ProbabilityProfile> {
    ensure_positive("t", t)?;
    ensure_positive("alpha", alpha)?;
    let sigma = (2.0 * alpha * t).sqrt();
    let half = (12.0 * sigma).ceil() as i64 + 1;
    let p = (-half..=half)
        .map(|i| gaussian_weight(i as f64, t, alpha))
        .collect();
    finish_profile(-half, p, t)
}

/// The same Gaussian centred at `center` (which may sit between cells) and
/// evaluated on the cells of `lattice`. Mass beyond the walls is dropped.
pub fn gaussian_on_lattice(
    lattice: &LatticeSpec,
    center: f64,
    t: f64,
    alpha: f64,
) -> Result<ProbabilityProfile> {
    ensure_positive("t", t)?;
    ensure_positive("alpha", alpha)?;
    let p = (0..lattice.n_cells)
        .map(|i| gaussian_weight(i as f64 - center, t, alpha))
        .collect();
    finish_profile(0, p, t)
}

/// One application of the walk's transition matrix to a distribution.
pub fn propagate_once(lattice: &LatticeSpec, p: &[f64]) -> Vec<f64> {
    let n = lattice.n_cells;
    let mut next = vec![0.0; n];
    for (i, &v) in p.iter().enumerate() {
        let half = 0.5 * v;
        next[lattice.reflect(i as u32, false) as usize] += half;
        next[lattice.reflect(i as u32, true) as usize] += half;
    }
    next
}

/// Exact occupation probabilities of the reflecting walk after `steps` steps.
pub fn exact_walk_profile(lattice: &LatticeSpec, source: Source, steps: u64) -> Result<ProbabilityProfile> {
    let mut p = source.initial_distribution(lattice)?;
    for _ in 0..steps {
        p = propagate_once(lattice, &p);
    }
    let sum: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= sum);
    ProbabilityProfile::new(0, p, steps as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OccupationStats {
    pub first_cell: i64,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// Per cell: whether `p_i << 1`, i.e. `Var ~ mean` is a good approximation.
    pub poisson_valid: Vec<bool>,
}

/// Mean `n p_i` and variance `n p_i (1 - p_i)` of the occupation numbers of
/// `n` independent walkers.
pub fn occupation_stats(n: u64, p: &ProbabilityProfile) -> Result<OccupationStats> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one walker"));
    }
    let nf = n as f64;
    Ok(OccupationStats {
        first_cell: p.first_cell,
        mean: p.p.iter().map(|&pi| nf * pi).collect(),
        variance: p.p.iter().map(|&pi| nf * pi * (1.0 - pi)).collect(),
        poisson_valid: p.p.iter().map(|&pi| pi < SMALL_PROBABILITY).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumStats {
    pub mean: Vec<f64>,
    pub exact_variance: Vec<f64>,
    /// `n_equi / n_cells`, the same for every cell.
    pub approx_variance: f64,
    pub approx_valid: Vec<bool>,
}

/// Occupation statistics of `n_0` walkers injected on top of `n_equi`
/// uniformly distributed equilibrium walkers. `p_gauss` must cover the lattice
/// cells `0..n_cells`.
pub fn equilibrium_stats(
    n_equi: u64,
    n_cells: usize,
    n_0: u64,
    p_gauss: &ProbabilityProfile,
) -> Result<EquilibriumStats> {
    if n_equi == 0 || n_cells == 0 {
        return Err(Error::invalid("n_equi/n_cells", "must be positive"));
    }
    if p_gauss.first_cell != 0 || p_gauss.p.len() != n_cells {
        return Err(Error::ShapeMismatch(format!(
            "profile covers cells {}..{}, expected 0..{n_cells}",
            p_gauss.first_cell,
            p_gauss.first_cell + p_gauss.p.len() as i64
        )));
    }
    let base = n_equi as f64 / n_cells as f64;
    let total = (n_equi + n_0) as f64;
    let mean: Vec<f64> = p_gauss.p.iter().map(|&p| base + n_0 as f64 * p).collect();
    let exact_variance = mean.iter().map(|&m| m * (1.0 - m / total)).collect();
    let approx_valid = p_gauss
        .p
        .iter()
        .map(|&p| n_0 as f64 * p <= NEGLIGIBLE_DIFFUSION_FRACTION * base)
        .collect();
    Ok(EquilibriumStats {
        mean,
        exact_variance,
        approx_variance: base,
        approx_valid,
    })
}

/// Single-particle propagation law used by the covariance formula.
pub trait Propagator {
    /// Probability that a particle released at the source is in `cell` at time `t`.
    fn occupancy(&self, cell: i64, t: f64) -> f64;
    /// Probability of moving from `from` to `to` within `tau`.
    fn transition(&self, from: i64, to: i64, tau: f64) -> f64;
}

/// Continuum Gaussian spreading around `source`.
#[derive(Clone, Copy, Debug)]
pub struct GaussianPropagator {
    pub alpha: f64,
    pub source: f64,
}

impl Propagator for GaussianPropagator {
    fn occupancy(&self, cell: i64, t: f64) -> f64 {
        gaussian_weight(cell as f64 - self.source, t, self.alpha)
    }

    fn transition(&self, from: i64, to: i64, tau: f64) -> f64 {
        if tau == 0.0 {
            return if from == to { 1.0 } else { 0.0 };
        }
        gaussian_weight((to - from) as f64, tau, self.alpha)
    }
}

/// Exact transition probabilities of the reflecting lattice walk. Times are
/// rounded to whole steps.
#[derive(Clone, Copy, Debug)]
pub struct LatticePropagator {
    pub lattice: LatticeSpec,
    pub source: Source,
}

impl Propagator for LatticePropagator {
    fn occupancy(&self, cell: i64, t: f64) -> f64 {
        exact_walk_profile(&self.lattice, self.source, t.round() as u64)
            .map(|p| p.get(cell))
            .unwrap_or(0.0)
    }

    fn transition(&self, from: i64, to: i64, tau: f64) -> f64 {
        if from < 0 || from as usize >= self.lattice.n_cells {
            return 0.0;
        }
        exact_walk_profile(&self.lattice, Source::Cell(from as usize), tau.round() as u64)
            .map(|p| p.get(to))
            .unwrap_or(0.0)
    }
}

/// `Cov(N_i(t), N_j(t+tau)) = n p_i(t) (P(i -> j in tau) - p_j(t+tau))`.
pub fn covariance<P: Propagator>(prop: &P, i: i64, j: i64, t: f64, tau: f64, n: u64) -> f64 {
    let pi = prop.occupancy(i, t);
    n as f64 * pi * (prop.transition(i, j, tau) - prop.occupancy(j, t + tau))
}

/// Covariance of occupation numbers for walkers spreading as a continuum
/// Gaussian from cell 0.
pub fn covariance_analytic(i: i64, j: i64, t: f64, tau: f64, n: u64, alpha: f64) -> Result<f64> {
    ensure_positive("t", t)?;
    ensure_positive("alpha", alpha)?;
    if !(tau >= 0.0) {
        return Err(Error::invalid("tau", "lag must be nonnegative"));
    }
    Ok(covariance(&GaussianPropagator { alpha, source: 0.0 }, i, j, t, tau, n))
}

/// Sample moments over realizations of equally shaped series.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMoments {
    pub n_times: usize,
    pub n_cells: usize,
    pub realizations: usize,
    /// Row-major `[time][cell]`.
    pub mean: Vec<f64>,
    /// Unbiased, row-major `[time][cell]`.
    pub variance: Vec<f64>,
}

impl EmpiricalMoments {
    pub fn mean_at(&self, time: usize, cell: usize) -> f64 {
        self.mean[time * self.n_cells + cell]
    }

    pub fn variance_at(&self, time: usize, cell: usize) -> f64 {
        self.variance[time * self.n_cells + cell]
    }

    /// Standard error of the mean at `(time, cell)`.
    pub fn standard_error(&self, time: usize, cell: usize) -> f64 {
        (self.variance_at(time, cell) / self.realizations as f64).sqrt()
    }
}

fn check_shapes<S: SeriesView>(series: &[S]) -> Result<(usize, usize)> {
    if series.len() < 2 {
        return Err(Error::invalid("series", "need at least two realizations"));
    }
    let (t, c) = (series[0].n_times(), series[0].n_cells());
    if series.iter().any(|s| s.n_times() != t || s.n_cells() != c) {
        return Err(Error::ShapeMismatch("realizations differ in duration or lattice".into()));
    }
    Ok((t, c))
}

pub fn empirical_moments<S: SeriesView + Sync>(series: &[S]) -> Result<EmpiricalMoments> {
    let (n_times, n_cells) = check_shapes(series)?;
    let r = series.len() as f64;
    let mut mean = vec![0.0; n_times * n_cells];
    let mut variance = vec![0.0; n_times * n_cells];
    for t in 0..n_times {
        for c in 0..n_cells {
            let m = series.iter().map(|s| s.value(t, c)).sum::<f64>() / r;
            let v = series.iter().map(|s| (s.value(t, c) - m).powi(2)).sum::<f64>() / (r - 1.0);
            mean[t * n_cells + c] = m;
            variance[t * n_cells + c] = v;
        }
    }
    Ok(EmpiricalMoments {
        n_times,
        n_cells,
        realizations: series.len(),
        mean,
        variance,
    })
}

/// Unbiased sample covariance of `value(t_a, cell_a)` and `value(t_b, cell_b)`
/// across realizations, with its standard error.
pub fn empirical_covariance<S: SeriesView>(
    series: &[S],
    (t_a, cell_a): (usize, usize),
    (t_b, cell_b): (usize, usize),
) -> Result<(f64, f64)> {
    let (n_times, n_cells) = check_shapes(series)?;
    if t_a.max(t_b) >= n_times || cell_a.max(cell_b) >= n_cells {
        return Err(Error::ShapeMismatch("index outside the series".into()));
    }
    let a: Vec<f64> = series.iter().map(|s| s.value(t_a, cell_a)).collect();
    let b: Vec<f64> = series.iter().map(|s| s.value(t_b, cell_b)).collect();
    Ok(sample_covariance(&a, &b))
}

/// Unbiased covariance of paired samples and the standard error of that estimate.
pub fn sample_covariance(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let cov = prods.iter().sum::<f64>() / (n - 1.0);
    let spread = prods.iter().map(|p| (p - cov).powi(2)).sum::<f64>() / (n - 1.0);
    (cov, (spread / n).sqrt())
}
