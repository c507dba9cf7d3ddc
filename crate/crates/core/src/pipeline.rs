//! End-to-end synthetic imaging: a buried phantom diffuses to the surface, the
//! noisy surface record is inverted trace by trace into virtual waves, and the
//! virtual waves are back-projected into an image of the initial temperature.

use crate::error::{ensure_positive, Error, Result};
use crate::heat::{self, Field, GaussianSource, PhantomSpec, SurfaceRecord};
use crate::resolution::measure_lobe_at;
use crate::saft::{saft_backproject, ReconstructionGrid};
use crate::virtual_wave::{invert_record, retarded_grid, time_grid, KernelMatrix, RegularizerConfig, TraceReport, VirtualField};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "shape")]
pub enum SourceShape {
    Gaussian { width: f64 },
    /// All heat in the single cell containing the centre.
    Spike,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSource {
    /// Lateral position relative to the first detector.
    pub x: f64,
    pub depth: f64,
    pub amplitude: f64,
    #[serde(flatten)]
    pub shape: SourceShape,
}

impl SceneSource {
    /// Where the reconstruction should peak: the centre for Gaussians, the
    /// centre of the occupied cell for spikes.
    pub fn true_position(&self) -> (f64, f64) {
        match self.shape {
            SourceShape::Gaussian { .. } => (self.x, self.depth),
            SourceShape::Spike => (self.x.round(), self.depth.floor() + 0.5),
        }
    }
}

fn default_detectors() -> usize {
    200
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    #[serde(default = "default_detectors")]
    pub n_detectors: usize,
    /// Depth of the phantom region in cells.
    pub height: usize,
    /// Depth of the reconstructed image in cells.
    pub image_depth: usize,
    pub sources: Vec<SceneSource>,
    pub nt: usize,
    pub dt: f64,
    pub ntp: usize,
    pub dtp: f64,
    pub c: f64,
    pub alpha: f64,
    pub snr: f64,
    #[serde(default)]
    pub noise_seed: u64,
}

impl SceneConfig {
    /// Three equal sources under a 200-detector line, centred in the rows at a
    /// quarter, half and three quarters of a region `height` cells deep. The
    /// record spans `20 * height` steps so the deepest source's surface response
    /// has peaked.
    pub fn three_sources(height: usize, shape: SourceShape) -> Self {
        let sources = [(60.0, 0.25), (100.0, 0.5), (140.0, 0.75)]
            .iter()
            .map(|&(x, f)| SceneSource {
                x,
                depth: (f * height as f64).round() + 0.5,
                amplitude: 1.0,
                shape,
            })
            .collect();
        Self {
            n_detectors: 200,
            height,
            image_depth: height + 10,
            sources,
            nt: 20 * height,
            dt: 1.0,
            ntp: 160,
            dtp: 1.0,
            c: 1.0,
            alpha: 0.5,
            snr: 1000.0,
            noise_seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_detectors == 0 || self.height == 0 || self.image_depth == 0 {
            return Err(Error::invalid("n_detectors/height/image_depth", "must be positive"));
        }
        if self.nt < 2 || self.ntp < 2 {
            return Err(Error::invalid("nt/ntp", "need at least two samples"));
        }
        for (name, v) in [("dt", self.dt), ("dtp", self.dtp), ("c", self.c), ("alpha", self.alpha)] {
            ensure_positive(name, v)?;
        }
        if !(self.snr > 0.0) {
            return Err(Error::invalid("snr", "must be positive"));
        }
        for s in &self.sources {
            ensure_positive("amplitude", s.amplitude)?;
            if let SourceShape::Gaussian { width } = s.shape {
                ensure_positive("width", width)?;
            }
            if !(s.x >= 0.0 && s.x <= (self.n_detectors - 1) as f64 && s.depth > 0.0 && s.depth < self.height as f64) {
                return Err(Error::invalid(
                    "sources",
                    format!("source at ({}, {}) lies outside the scene", s.x, s.depth),
                ));
            }
        }
        Ok(())
    }

    /// Lateral and bottom padding that keeps the walls out of the record.
    pub fn padding(&self) -> usize {
        heat::boundary_padding(self.alpha, self.nt as f64 * self.dt, 1.0)
    }

    pub fn times(&self) -> Vec<f64> {
        time_grid(self.nt, self.dt)
    }

    pub fn detector_xs(&self) -> Vec<f64> {
        (0..self.n_detectors).map(|d| d as f64).collect()
    }

    pub fn kernel(&self) -> Result<KernelMatrix> {
        KernelMatrix::build(&self.times(), &retarded_grid(self.ntp, self.dtp), self.c, self.alpha)
    }

    pub fn image_grid(&self) -> Result<ReconstructionGrid> {
        ReconstructionGrid::new(self.n_detectors, self.image_depth, 0.0, 0.5, 1.0, 1.0)
    }

    /// Initial temperature on the padded simulation grid.
    fn padded_phantom(&self) -> Result<Field> {
        let pad = self.padding();
        let nx = self.n_detectors + 2 * pad;
        let nz = self.height + pad;
        let gaussians: Vec<GaussianSource> = self
            .sources
            .iter()
            .filter_map(|s| match s.shape {
                SourceShape::Gaussian { width } => Some(GaussianSource {
                    x: s.x + pad as f64,
                    z: s.depth,
                    amplitude: s.amplitude,
                    width,
                }),
                SourceShape::Spike => None,
            })
            .collect();
        let field = heat::make_phantom(&PhantomSpec {
            nx,
            nz,
            spacing: 1.0,
            alpha: self.alpha,
            sources: gaussians,
        })?;
        let mut values = field.into_values();
        for s in self.sources.iter().filter(|s| s.shape == SourceShape::Spike) {
            let ix = s.x.round() as usize + pad;
            let iz = s.depth.floor() as usize;
            values[iz * nx + ix] += s.amplitude;
        }
        Field::new_2d(nx, nz, values, 1.0, self.alpha)
    }
}

/// Phantom over the detector aperture and the scene depth, plus the noisy record.
pub fn simulate_record(scene: &SceneConfig) -> Result<(Field, SurfaceRecord)> {
    scene.validate()?;
    let pad = scene.padding();
    let padded = scene.padded_phantom()?;
    let detectors: Vec<usize> = (pad..pad + scene.n_detectors).collect();
    let mut clean = heat::surface_response(&padded, &scene.times(), &detectors)?;
    clean.detector_xs = scene.detector_xs();
    let noisy = heat::add_noise(&clean, scene.snr, scene.noise_seed)?;
    let mut crop = Vec::with_capacity(scene.n_detectors * scene.height);
    for iz in 0..scene.height {
        crop.extend_from_slice(&padded.row(iz)[pad..pad + scene.n_detectors]);
    }
    let t0 = Field::new_2d(scene.n_detectors, scene.height, crop, 1.0, scene.alpha)?;
    Ok((t0, noisy))
}

/// Virtual waves and back-projected image from a surface record.
pub fn reconstruct(
    scene: &SceneConfig,
    record: &SurfaceRecord,
    regularizer: &RegularizerConfig,
) -> Result<(VirtualField, Vec<TraceReport>, ReconstructionGrid)> {
    let kernel = scene.kernel()?;
    let (virtual_field, reports) = invert_record(&kernel, record, regularizer)?;
    let image = saft_backproject(&virtual_field, &record.detector_xs, &scene.image_grid()?, scene.c)?;
    Ok((virtual_field, reports, image))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceMetrics {
    pub true_position: (f64, f64),
    pub peak_position: (f64, f64),
    pub peak_error: f64,
    pub peak_value: f64,
    /// Main-lobe FWHM along depth through the peak, if the lobe closes inside
    /// the image.
    pub axial_fwhm: Option<f64>,
}

/// Half extents of the search window around each true source position.
pub const SEARCH_HALF_X: usize = 6;
pub const SEARCH_HALF_Z: usize = 8;

fn nearest(v: f64, origin: f64, step: f64, n: usize) -> usize {
    (((v - origin) / step).round().max(0.0) as usize).min(n - 1)
}

/// Locates each source's reconstructed peak within a window around its true
/// position and measures its axial width.
pub fn source_metrics(image: &ReconstructionGrid, sources: &[SceneSource]) -> Vec<SourceMetrics> {
    sources
        .iter()
        .map(|s| {
            let (tx, tz) = s.true_position();
            let cx = nearest(tx, image.x0, image.dx, image.nx);
            let cz = nearest(tz, image.z0, image.dz, image.nz);
            let (mut bx, mut bz) = (cx, cz);
            for iz in cz.saturating_sub(SEARCH_HALF_Z)..=(cz + SEARCH_HALF_Z).min(image.nz - 1) {
                for ix in cx.saturating_sub(SEARCH_HALF_X)..=(cx + SEARCH_HALF_X).min(image.nx - 1) {
                    if image.at(ix, iz) > image.at(bx, bz) {
                        bx = ix;
                        bz = iz;
                    }
                }
            }
            let (px, pz) = (image.x(bx), image.z(bz));
            let column: Vec<f64> = (0..image.nz).map(|iz| image.at(bx, iz)).collect();
            let zs: Vec<f64> = (0..image.nz).map(|iz| image.z(iz)).collect();
            SourceMetrics {
                true_position: (tx, tz),
                peak_position: (px, pz),
                peak_error: (px - tx).hypot(pz - tz),
                peak_value: image.at(bx, bz),
                axial_fwhm: measure_lobe_at(&column, &zs, bz).ok().map(|l| l.fwhm),
            }
        })
        .collect()
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    (sum / n.max(1) as f64).sqrt()
}

/// RMS of the image outside discs of `radius` cells around every source.
pub fn background_rms(image: &ReconstructionGrid, sources: &[SceneSource], radius: f64) -> f64 {
    let centres: Vec<(f64, f64)> = sources.iter().map(SceneSource::true_position).collect();
    rms((0..image.nz).flat_map(|iz| {
        let centres = &centres;
        (0..image.nx).filter_map(move |ix| {
            let (x, z) = (image.x(ix), image.z(iz));
            centres
                .iter()
                .all(|&(cx, cz)| (x - cx).hypot(z - cz) > radius)
                .then(|| image.at(ix, iz))
        })
    }))
}

/// Peak of the trace at the detector nearest `x`, over the RMS of the whole record.
pub fn record_contrast(record: &SurfaceRecord, x: f64) -> f64 {
    let d = record
        .detector_xs
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
        .map_or(0, |(i, _)| i);
    let peak = record.values[d].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    peak / rms(record.values.iter().flatten().copied())
}

/// Reconstructed peak value over the RMS of the whole image.
pub fn image_contrast(image: &ReconstructionGrid, metrics: &SourceMetrics) -> f64 {
    metrics.peak_value / rms(image.values.iter().copied())
}
