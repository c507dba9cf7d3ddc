//! Resolution limits: the 1D cutoff formulas and the 2D point-spread function.

use super::{header, OutputDir};
use crate::error::{Error, Result};
use crate::io::{self, fmt, DType, Sidecar};
use crate::resolution::{
    psf_2d_windowed, sinc_reconstruction, PsfExtents, PsfGrid, PsfImage, ResolutionReport, SpectralWindow,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params1d {
    pub alpha: f64,
    pub snr_k: f64,
    pub n0: f64,
    /// Diffusion times for the k-space cutoff.
    pub times: Vec<f64>,
    /// The sinc is sampled on `[-half_extent, half_extent]`.
    pub half_extent: f64,
    pub n_points: usize,
    pub depth_snr: f64,
    pub depths: Vec<f64>,
    pub alphas: Vec<f64>,
}

impl Default for Params1d {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            snr_k: 1000.0,
            n0: 1.0,
            times: vec![20.0, 100.0, 1000.0],
            half_extent: 100.0,
            n_points: 4001,
            depth_snr: 1000.0,
            depths: vec![1.0, 2.0, 5.0, 10.0],
            alphas: vec![0.1, 0.5, 2.0],
        }
    }
}

impl Params1d {
    pub fn validate(&self) -> Result<()> {
        for &t in &self.times {
            ResolutionReport::time_domain(self.alpha, t, self.snr_k)?;
        }
        for &a in &self.alphas {
            for &x in &self.depths {
                ResolutionReport::depth_domain(a, x, self.depth_snr)?;
            }
        }
        if self.n_points < 3 || !(self.half_extent > 0.0) {
            return Err(Error::invalid("n_points/half_extent", "need at least 3 points on a positive extent"));
        }
        Ok(())
    }

    fn xs(&self) -> Vec<f64> {
        let step = 2.0 * self.half_extent / (self.n_points - 1) as f64;
        (0..self.n_points).map(|i| -self.half_extent + i as f64 * step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeDomainRow {
    pub t: f64,
    pub report: ResolutionReport,
    /// Distance between the zeros bounding the sinc's main lobe, if both lie
    /// inside the sampled extent.
    pub zero_spacing: Option<f64>,
    pub grid_step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DepthRow {
    pub alpha: f64,
    pub depth: f64,
    pub report: ResolutionReport,
}

pub struct Psf1dResult {
    pub xs: Vec<f64>,
    /// One sinc per diffusion time.
    pub sincs: Vec<Vec<f64>>,
    pub time_domain: Vec<TimeDomainRow>,
    pub depth_domain: Vec<DepthRow>,
}

fn crossing(xs: &[f64], v: &[f64], i: usize, j: usize) -> f64 {
    xs[i] + (xs[j] - xs[i]) * v[i] / (v[i] - v[j])
}

/// Main-lobe zero-to-zero width of a profile peaked at its maximum.
fn zero_spacing(xs: &[f64], v: &[f64]) -> Option<f64> {
    let peak = (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b]))?;
    let right = (peak..v.len() - 1).find(|&i| v[i + 1] <= 0.0)?;
    let left = (1..=peak).rev().find(|&i| v[i - 1] <= 0.0)?;
    Some(crossing(xs, v, right, right + 1) - crossing(xs, v, left, left - 1))
}

pub fn compute_1d(p: &Params1d) -> Result<Psf1dResult> {
    p.validate()?;
    let xs = p.xs();
    let grid_step = xs[1] - xs[0];
    let mut sincs = Vec::new();
    let mut time_domain = Vec::new();
    for &t in &p.times {
        let report = ResolutionReport::time_domain(p.alpha, t, p.snr_k)?;
        let s = sinc_reconstruction(p.n0, report.k_cut, &xs)?;
        time_domain.push(TimeDomainRow {
            t,
            report,
            zero_spacing: zero_spacing(&xs, &s),
            grid_step,
        });
        sincs.push(s);
    }
    let mut depth_domain = Vec::new();
    for &alpha in &p.alphas {
        for &depth in &p.depths {
            depth_domain.push(DepthRow {
                alpha,
                depth,
                report: ResolutionReport::depth_domain(alpha, depth, p.depth_snr)?,
            });
        }
    }
    Ok(Psf1dResult {
        xs,
        sincs,
        time_domain,
        depth_domain,
    })
}

pub fn write_1d(r: &Psf1dResult, out: &mut OutputDir) -> Result<()> {
    out.csv(
        "sinc.csv",
        &header(&["t", "x", "value"]),
        r.time_domain.iter().zip(&r.sincs).flat_map(|(row, s)| {
            r.xs.iter()
                .zip(s)
                .map(move |(x, v)| vec![fmt(row.t), fmt(*x), fmt(*v)])
        }),
    )?;
    out.csv(
        "time_domain.csv",
        &header(&["t", "k_cut", "omega_cut", "delta_r", "zero_spacing"]),
        r.time_domain.iter().map(|row| {
            vec![
                fmt(row.t),
                fmt(row.report.k_cut),
                fmt(row.report.omega_cut),
                fmt(row.report.delta_r),
                row.zero_spacing.map(fmt).unwrap_or_default(),
            ]
        }),
    )?;
    out.csv(
        "depth_domain.csv",
        &header(&["alpha", "depth", "omega_cut", "mu_cut", "delta_r"]),
        r.depth_domain.iter().map(|row| {
            vec![
                fmt(row.alpha),
                fmt(row.depth),
                fmt(row.report.omega_cut),
                fmt(1.0 / row.report.k_cut),
                fmt(row.report.delta_r),
            ]
        }),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params2d {
    pub snrs: Vec<f64>,
    /// Source depth; the grid is in units of it.
    pub depth: f64,
    pub grid: PsfGrid,
    pub window: SpectralWindow,
}

impl Default for Params2d {
    fn default() -> Self {
        Self {
            snrs: vec![100.0, 1000.0],
            depth: 1.0,
            grid: PsfGrid::square(512, 2.0),
            window: SpectralWindow::HardCut,
        }
    }
}

impl Params2d {
    pub fn validate(&self) -> Result<()> {
        if self.snrs.is_empty() {
            return Err(Error::invalid("snrs", "list is empty"));
        }
        for &s in &self.snrs {
            ResolutionReport::depth_domain(0.5, self.depth, s)?;
        }
        if self.grid.nx < crate::resolution::MIN_PSF_SAMPLES || self.grid.nz < crate::resolution::MIN_PSF_SAMPLES {
            return Err(Error::GridTooCoarse {
                samples: self.grid.nx.min(self.grid.nz) as f64,
                required: crate::resolution::MIN_PSF_SAMPLES,
            });
        }
        if !(self.grid.half_x > 0.0 && self.grid.half_z > 0.0) {
            return Err(Error::invalid("grid", "half extents must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PsfSummary {
    pub snr: f64,
    pub extents: PsfExtents,
    /// Measured main-lobe window along depth.
    pub axial_window: (f64, f64),
    /// `d -/+ delta_r / 2` with `delta_r = pi d / ln(snr)`.
    pub expected_window: (f64, f64),
    pub fwhm_ratio: f64,
    pub zero_ratio: Option<f64>,
}

pub struct Psf2dResult {
    pub images: Vec<PsfImage>,
    pub summaries: Vec<PsfSummary>,
}

pub fn compute_2d(p: &Params2d) -> Result<Psf2dResult> {
    p.validate()?;
    let images: Vec<PsfImage> = p
        .snrs
        .par_iter()
        .map(|&s| psf_2d_windowed(s, p.depth, &p.grid, p.window))
        .collect::<Result<_>>()?;
    let summaries = images
        .iter()
        .map(|img| {
            let extents = img.extents()?;
            let dr = ResolutionReport::depth_domain(0.5, p.depth, img.snr)?.delta_r;
            Ok(PsfSummary {
                snr: img.snr,
                extents,
                axial_window: img.axial_window()?,
                expected_window: (p.depth - dr / 2.0, p.depth + dr / 2.0),
                fwhm_ratio: extents.lateral_fwhm / extents.axial_fwhm,
                zero_ratio: extents
                    .lateral_zero_to_zero
                    .zip(extents.axial_zero_to_zero)
                    .map(|(l, a)| l / a),
            })
        })
        .collect::<Result<_>>()?;
    Ok(Psf2dResult { images, summaries })
}

pub fn write_2d(r: &Psf2dResult, out: &mut OutputDir) -> Result<()> {
    for img in &r.images {
        let tag = format!("snr{}", img.snr);
        out.binary(&format!("psf_{tag}"), |dir, stem| {
            let sidecar = Sidecar::new(DType::F64Le, vec![img.zs.len(), img.xs.len()])
                .with("snr", img.snr)
                .with("depth", img.depth)
                .with("x0", img.xs[0])
                .with("dx", img.xs[1] - img.xs[0])
                .with("z0", img.zs[0])
                .with("dz", img.zs[1] - img.zs[0]);
            io::write_f64(dir, stem, &img.values, &sidecar)
        })?;
        out.with_writer(&format!("profiles_{tag}.csv"), |f| img.write_profiles_csv(f))?;
    }
    out.json("psf.json", &r.summaries)
}
