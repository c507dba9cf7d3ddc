//! Local transform between surface temperature and a virtual wave, and its
//! regularised inversion by truncated SVD or by ADMM with L1 sparsity and
//! nonnegativity.
//!
//! Only retarded times `t' >= 0` are unknowns; the kernel is even in `t'`, so
//! the negative half folds onto the positive one with doubled weight.

use crate::error::{ensure_positive, Error, Result};
use crate::heat::SurfaceRecord;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `c / sqrt(pi alpha t) * exp(-c^2 tp^2 / (4 alpha t))`.
pub fn kernel_value(t: f64, tp: f64, c: f64, alpha: f64) -> Result<f64> {
    ensure_positive("t", t)?;
    ensure_positive("c", c)?;
    ensure_positive("alpha", alpha)?;
    Ok(c / (PI * alpha * t).sqrt() * (-(c * c * tp * tp) / (4.0 * alpha * t)).exp())
}

fn grid_step(name: &'static str, g: &[f64]) -> Result<f64> {
    if g.len() < 2 {
        return Err(Error::invalid(name, "need at least two samples"));
    }
    let step = g[1] - g[0];
    if !(step > 0.0) {
        return Err(Error::invalid(name, "must be strictly increasing"));
    }
    if g.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step.max(w[1].abs())) {
        return Err(Error::invalid(name, "grid must be uniform"));
    }
    Ok(step)
}

/// `t_i = (i + 1) dt` for `i < n`.
pub fn time_grid(n: usize, dt: f64) -> Vec<f64> {
    (1..=n).map(|i| i as f64 * dt).collect()
}

/// `t'_j = j dtp` for `j < n`.
pub fn retarded_grid(n: usize, dtp: f64) -> Vec<f64> {
    (0..n).map(|j| j as f64 * dtp).collect()
}

#[derive(Clone, Debug)]
pub struct KernelMatrix {
    t_grid: Vec<f64>,
    tp_grid: Vec<f64>,
    entries: DMatrix<f64>,
    c: f64,
    alpha: f64,
}

impl KernelMatrix {
    /// Folded quadrature: `2 kernel(t_i, tp_j) dtp`, halved at `tp = 0`.
    pub fn build(t_grid: &[f64], tp_grid: &[f64], c: f64, alpha: f64) -> Result<Self> {
        grid_step("t_grid", t_grid)?;
        let dtp = grid_step("tp_grid", tp_grid)?;
        if tp_grid[0].abs() > 1e-12 * dtp {
            return Err(Error::invalid("tp_grid", "must start at 0"));
        }
        ensure_positive("t_grid[0]", t_grid[0])?;
        ensure_positive("c", c)?;
        ensure_positive("alpha", alpha)?;
        let entries = DMatrix::from_fn(t_grid.len(), tp_grid.len(), |i, j| {
            let w = if j == 0 { dtp } else { 2.0 * dtp };
            let t = t_grid[i];
            w * c / (PI * alpha * t).sqrt() * (-(c * c * tp_grid[j] * tp_grid[j]) / (4.0 * alpha * t)).exp()
        });
        Ok(Self {
            t_grid: t_grid.to_vec(),
            tp_grid: tp_grid.to_vec(),
            entries,
            c,
            alpha,
        })
    }

    /// The 200 x 200 reference kernel: `t` up to 400 in steps of 2, unit `t'` step,
    /// `c = 1`, `alpha = 1/2`.
    pub fn reference() -> Self {
        Self::build(&time_grid(200, 2.0), &retarded_grid(200, 1.0), 1.0, 0.5)
            .expect("reference grids are valid")
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn tp_grid(&self) -> &[f64] {
        &self.tp_grid
    }

    pub fn n_t(&self) -> usize {
        self.t_grid.len()
    }

    pub fn n_tp(&self) -> usize {
        self.tp_grid.len()
    }

    pub fn dt(&self) -> f64 {
        self.t_grid[1] - self.t_grid[0]
    }

    pub fn dtp(&self) -> f64 {
        self.tp_grid[1] - self.tp_grid[0]
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.entries.row(i).sum()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.entries * DVector::from_column_slice(x)).as_slice().to_vec()
    }

    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.entries.clone().singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Tsvd,
    Admm,
}

/// How the L1 weight is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lambda {
    Absolute(f64),
    /// Fraction of `lambda_max = ||K^T y||_inf`, above which the solution is zero.
    FractionOfMax(f64),
    /// Largest weight whose residual `||Kx - y||` stays below `sqrt(n_t) * noise_std`.
    Discrepancy { noise_std: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmmConfig {
    #[serde(default = "default_lambda")]
    pub lambda: Lambda,
    /// Penalty parameter; `None` uses `0.01 sigma_max^2` of the kernel.
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub primal_tol: f64,
    #[serde(default = "default_tol")]
    pub dual_tol: f64,
    #[serde(default = "default_true")]
    pub nonnegative: bool,
}

fn default_lambda() -> Lambda {
    Lambda::FractionOfMax(0.01)
}

fn default_max_iters() -> usize {
    500
}

fn default_tol() -> f64 {
    1e-6
}

fn default_true() -> bool {
    true
}

fn default_tsvd_threshold() -> f64 {
    1e-3
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            lambda: default_lambda(),
            rho: None,
            max_iters: default_max_iters(),
            primal_tol: default_tol(),
            dual_tol: default_tol(),
            nonnegative: true,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        match self.lambda {
            Lambda::Absolute(l) | Lambda::FractionOfMax(l) if !(l >= 0.0 && l.is_finite()) => {
                return Err(Error::invalid("lambda", format!("must be >= 0, got {l}")));
            }
            Lambda::Discrepancy { noise_std } => ensure_positive("noise_std", noise_std)?,
            _ => {}
        }
        if let Some(rho) = self.rho {
            ensure_positive("rho", rho)?;
        }
        ensure_positive("primal_tol", self.primal_tol)?;
        ensure_positive("dual_tol", self.dual_tol)?;
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizerConfig {
    pub method: Method,
    #[serde(default = "default_tsvd_threshold")]
    pub tsvd_rel_threshold: f64,
    #[serde(default)]
    pub admm: AdmmConfig,
}

impl RegularizerConfig {
    pub fn tsvd(rel_threshold: f64) -> Self {
        Self {
            method: Method::Tsvd,
            tsvd_rel_threshold: rel_threshold,
            admm: AdmmConfig::default(),
        }
    }

    pub fn admm(admm: AdmmConfig) -> Self {
        Self {
            method: Method::Admm,
            tsvd_rel_threshold: default_tsvd_threshold(),
            admm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tsvd_rel_threshold >= 0.0 && self.tsvd_rel_threshold.is_finite()) {
            return Err(Error::invalid("tsvd_rel_threshold", "must be >= 0"));
        }
        self.admm.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TsvdSolution {
    pub x: Vec<f64>,
    pub rank: usize,
    /// Set when no singular value passed the threshold; `x` is then zero.
    pub all_truncated: bool,
}

/// Truncated-SVD solver with the decomposition computed once.
#[derive(Clone, Debug)]
pub struct TsvdSolver {
    u: DMatrix<f64>,
    s: Vec<f64>,
    v_t: DMatrix<f64>,
}

impl TsvdSolver {
    pub fn new(kernel: &KernelMatrix) -> Self {
        Self::from_matrix(kernel.entries.clone())
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        let svd = m.svd(true, true);
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let u_full = svd.u.expect("requested U");
        let vt_full = svd.v_t.expect("requested V^T");
        let u = DMatrix::from_fn(u_full.nrows(), order.len(), |i, k| u_full[(i, order[k])]);
        let v_t = DMatrix::from_fn(order.len(), vt_full.ncols(), |k, j| vt_full[(order[k], j)]);
        let s = order.iter().map(|&k| svd.singular_values[k]).collect();
        Self { u, s, v_t }
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.s
    }

    /// Number of singular values at or above `rel_threshold * sigma_max`.
    pub fn rank(&self, rel_threshold: f64) -> usize {
        let cut = rel_threshold * self.s[0];
        self.s.iter().filter(|&&s| s > 0.0 && s >= cut).count()
    }

    /// Right singular vector `k` (decreasing order).
    pub fn right_vector(&self, k: usize) -> Vec<f64> {
        self.v_t.row(k).iter().copied().collect()
    }

    pub fn solve(&self, signal: &[f64], rel_threshold: f64) -> Result<TsvdSolution> {
        if signal.len() != self.u.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "signal has {} samples, kernel {} rows",
                signal.len(),
                self.u.nrows()
            )));
        }
        if !(rel_threshold >= 0.0) {
            return Err(Error::invalid("rel_threshold", "must be >= 0"));
        }
        let rank = self.rank(rel_threshold);
        let y = DVector::from_column_slice(signal);
        let mut x = DVector::zeros(self.v_t.ncols());
        for k in 0..rank {
            let coef = self.u.column(k).dot(&y) / self.s[k];
            x.axpy(coef, &self.v_t.row(k).transpose(), 1.0);
        }
        Ok(TsvdSolution {
            x: x.as_slice().to_vec(),
            rank,
            all_truncated: rank == 0,
        })
    }
}

pub fn invert_tsvd(kernel: &KernelMatrix, signal: &[f64], rel_threshold: f64) -> Result<TsvdSolution> {
    TsvdSolver::new(kernel).solve(signal, rel_threshold)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmmSolution {
    /// The constrained iterate `z` (sparse and, if requested, nonnegative).
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// `||x - z||` at exit, the distance between the two split iterates.
    pub split_gap: f64,
    pub lambda: f64,
    pub objective: f64,
}

/// Scaled-form ADMM for `1/2 ||Kx - y||^2 + lambda ||x||_1 (+ indicator x >= 0)`
/// with the Cholesky factor of `K^T K + rho I` cached.
#[derive(Clone, Debug)]
pub struct AdmmSolver {
    k: DMatrix<f64>,
    kt: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    rho: f64,
    sigma_max: f64,
}

impl AdmmSolver {
    pub fn new(kernel: &KernelMatrix, rho: Option<f64>) -> Result<Self> {
        Self::from_matrix(kernel.entries.clone(), rho)
    }

    pub fn from_matrix(k: DMatrix<f64>, rho: Option<f64>) -> Result<Self> {
        let kt = k.transpose();
        let gram = &kt * &k;
        let sigma_max = gram
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(0.0, f64::max)
            .sqrt();
        let rho = rho.unwrap_or(0.01 * sigma_max * sigma_max);
        ensure_positive("rho", rho)?;
        let n = gram.nrows();
        let chol = Cholesky::new(gram + DMatrix::identity(n, n) * rho)
            .ok_or_else(|| Error::invalid("rho", "K^T K + rho I is not positive definite"))?;
        Ok(Self {
            k,
            kt,
            chol,
            rho,
            sigma_max,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `||K^T y||_inf`.
    pub fn lambda_max(&self, signal: &[f64]) -> f64 {
        (&self.kt * DVector::from_column_slice(signal)).amax()
    }

    pub fn objective(&self, signal: &[f64], x: &[f64], lambda: f64) -> f64 {
        let r = &self.k * DVector::from_column_slice(x) - DVector::from_column_slice(signal);
        0.5 * r.norm_squared() + lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn solve(&self, signal: &[f64], config: &AdmmConfig) -> Result<AdmmSolution> {
        config.validate()?;
        if signal.len() != self.k.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "signal has {} samples, kernel {} rows",
                signal.len(),
                self.k.nrows()
            )));
        }
        let lmax = self.lambda_max(signal);
        match config.lambda {
            Lambda::Absolute(l) => self.solve_with(signal, l, config),
            Lambda::FractionOfMax(f) => self.solve_with(signal, f * lmax, config),
            Lambda::Discrepancy { noise_std } => self.discrepancy(signal, noise_std, lmax, config),
        }
    }

    fn discrepancy(&self, signal: &[f64], noise_std: f64, lmax: f64, config: &AdmmConfig) -> Result<AdmmSolution> {
        let target = noise_std * (signal.len() as f64).sqrt();
        let y = DVector::from_column_slice(signal);
        let residual = |s: &AdmmSolution| (&self.k * DVector::from_column_slice(&s.x) - &y).norm();
        let (mut lo, mut hi) = ((1e-8f64).ln(), 0.0f64);
        let mut best = self.solve_with(signal, (lo.exp()) * lmax, config)?;
        for _ in 0..24 {
            let mid = 0.5 * (lo + hi);
            let sol = self.solve_with(signal, mid.exp() * lmax, config)?;
            if residual(&sol) <= target {
                lo = mid;
                best = sol;
            } else {
                hi = mid;
            }
        }
        Ok(best)
    }

    fn solve_with(&self, signal: &[f64], lambda: f64, config: &AdmmConfig) -> Result<AdmmSolution> {
        let n = self.k.ncols();
        let rho = self.rho;
        let kty = &self.kt * DVector::from_column_slice(signal);
        let scale = kty.amax() / (self.sigma_max * self.sigma_max).max(f64::MIN_POSITIVE);
        let abs_tol = (n as f64).sqrt() * 1e-3 * config.primal_tol * scale;
        let mut x = DVector::zeros(n);
        let mut z = DVector::<f64>::zeros(n);
        let mut u = DVector::<f64>::zeros(n);
        let kappa = lambda / rho;
        let mut history: Vec<f64> = Vec::with_capacity(config.max_iters);
        let (mut r_norm, mut s_norm) = (f64::INFINITY, f64::INFINITY);
        let mut converged = false;
        let mut iterations = 0;
        for it in 1..=config.max_iters {
            iterations = it;
            x = self.chol.solve(&(&kty + (&z - &u) * rho));
            let z_prev = z.clone();
            z = &x + &u;
            z.apply(|v| {
                let shrunk = v.signum() * (v.abs() - kappa).max(0.0);
                *v = if config.nonnegative { shrunk.max(0.0) } else { shrunk };
            });
            u += &x - &z;
            r_norm = (&x - &z).norm();
            s_norm = rho * (&z - &z_prev).norm();
            let eps_pri = abs_tol + config.primal_tol * x.norm().max(z.norm());
            let eps_dual = abs_tol * rho + config.dual_tol * rho * u.norm();
            if !(r_norm.is_finite() && s_norm.is_finite()) {
                return Err(Error::Diverged {
                    iterations: it,
                    primal: r_norm,
                    dual: s_norm,
                });
            }
            if r_norm <= eps_pri && s_norm <= eps_dual {
                converged = true;
                break;
            }
            let combined = r_norm.max(s_norm);
            if it > 50 && combined > 10.0 * history[it - 51] {
                return Err(Error::Diverged {
                    iterations: it,
                    primal: r_norm,
                    dual: s_norm,
                });
            }
            history.push(combined);
        }
        let out: Vec<f64> = z.as_slice().to_vec();
        Ok(AdmmSolution {
            objective: self.objective(signal, &out, lambda),
            split_gap: (&x - &z).norm(),
            x: out,
            iterations,
            converged,
            primal_residual: r_norm,
            dual_residual: s_norm,
            lambda,
        })
    }
}

pub fn invert_admm(kernel: &KernelMatrix, signal: &[f64], config: &RegularizerConfig) -> Result<AdmmSolution> {
    if config.method != Method::Admm {
        return Err(Error::invalid("method", "invert_admm needs method = admm"));
    }
    AdmmSolver::new(kernel, config.admm.rho)?.solve(signal, &config.admm)
}

/// Per-detector virtual-wave traces on the retarded-time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VirtualField {
    pub detector_xs: Vec<f64>,
    pub dtp: f64,
    pub c: f64,
    /// `[detector][t']`.
    pub values: Vec<Vec<f64>>,
}

impl VirtualField {
    pub fn n_detectors(&self) -> usize {
        self.values.len()
    }

    pub fn n_tp(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// Writes rows `tp,det_0,...`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["tp".to_string()];
        header.extend((0..self.n_detectors()).map(|d| format!("det_{d}")));
        w.write_record(&header)?;
        for j in 0..self.n_tp() {
            let mut row = vec![format!("{:e}", j as f64 * self.dtp)];
            row.extend(self.values.iter().map(|v| format!("{:e}", v[j])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-trace outcome of a record inversion.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceReport {
    pub rank: Option<usize>,
    pub iterations: Option<usize>,
    pub converged: bool,
}

/// Inverts every detector trace of `record`. The kernel's time grid must match
/// the record's samples.
pub fn invert_record(
    kernel: &KernelMatrix,
    record: &SurfaceRecord,
    config: &RegularizerConfig,
) -> Result<(VirtualField, Vec<TraceReport>)> {
    config.validate()?;
    if record.n_times() != kernel.n_t() {
        return Err(Error::ShapeMismatch(format!(
            "record has {} samples, kernel {} rows",
            record.n_times(),
            kernel.n_t()
        )));
    }
    let traces: Vec<(Vec<f64>, TraceReport)> = match config.method {
        Method::Tsvd => {
            let solver = TsvdSolver::new(kernel);
            record
                .values
                .par_iter()
                .map(|y| {
                    solver.solve(y, config.tsvd_rel_threshold).map(|s| {
                        let report = TraceReport {
                            rank: Some(s.rank),
                            iterations: None,
                            converged: !s.all_truncated,
                        };
                        (s.x, report)
                    })
                })
                .collect::<Result<_>>()?
        }
        Method::Admm => {
            let solver = AdmmSolver::new(kernel, config.admm.rho)?;
            record
                .values
                .par_iter()
                .map(|y| {
                    solver.solve(y, &config.admm).map(|s| {
                        let report = TraceReport {
                            rank: None,
                            iterations: Some(s.iterations),
                            converged: s.converged,
                        };
                        (s.x, report)
                    })
                })
                .collect::<Result<_>>()?
        }
    };
    let (values, reports) = traces.into_iter().unzip();
    Ok((
        VirtualField {
            detector_xs: record.detector_xs.clone(),
            dtp: kernel.dtp(),
            c: kernel.c,
            values,
        },
        reports,
    ))
}
