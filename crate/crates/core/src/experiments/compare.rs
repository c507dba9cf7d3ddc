//! Side-by-side metrics for two reconstructions of the same record.

use crate::error::{Error, Result};
use crate::io;
use crate::pipeline::{background_rms, image_contrast, source_metrics, SceneSource, SourceMetrics};
use crate::saft::ReconstructionGrid;
use crate::virtual_wave::{Method, RegularizerConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Sources closer than this to a pixel exclude it from the background.
pub const BACKGROUND_RADIUS: f64 = 10.0;

pub const SUMMARY_FILE: &str = "summary.json";
pub const IMAGE_STEM: &str = "recon";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionSummary {
    pub regularizer: RegularizerConfig,
    pub sources: Vec<SceneSource>,
    /// SHA-256 of the surface record's little-endian samples.
    pub record_checksum: String,
    /// Per source: trace peak over record RMS at the nearest detector.
    pub record_contrast: Vec<f64>,
    pub converged_traces: usize,
    pub total_traces: usize,
    pub min_virtual: f64,
}

impl ReconstructionSummary {
    pub fn method(&self) -> Method {
        self.regularizer.method
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub summary: ReconstructionSummary,
    pub image: ReconstructionGrid,
}

/// Reads `summary.json` and `recon.bin` from a method directory written by the
/// phantom pipeline.
pub fn load_reconstruction(dir: &Path) -> Result<Reconstruction> {
    Ok(Reconstruction {
        summary: io::read_json(&dir.join(SUMMARY_FILE))?,
        image: io::read_grid(dir, IMAGE_STEM)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SourceComparison {
    pub a: SourceMetrics,
    pub b: SourceMetrics,
    /// `b - a` axial FWHM, when both lobes close inside the image.
    pub fwhm_difference: Option<f64>,
    /// Whether `b` is strictly narrower along depth. An unmeasurable lobe is
    /// never narrower.
    pub b_sharper: bool,
    pub record_contrast: f64,
    pub a_contrast: f64,
    pub b_contrast: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub a_method: Method,
    pub b_method: Method,
    pub sources: Vec<SourceComparison>,
    pub a_background_rms: f64,
    pub b_background_rms: f64,
    pub max_abs_difference: f64,
    /// With one T-SVD and one ADMM image: whether ADMM is narrower for every source.
    pub admm_sharper_everywhere: Option<bool>,
    pub min_a: f64,
    pub min_b: f64,
}

fn narrower(x: Option<f64>, than: Option<f64>) -> bool {
    matches!((x, than), (Some(x), Some(y)) if x < y)
}

pub fn compare_reconstructions(a: &Reconstruction, b: &Reconstruction) -> Result<ComparisonReport> {
    if !a.image.same_geometry(&b.image) {
        return Err(Error::ShapeMismatch("reconstructions lie on different grids".into()));
    }
    if a.summary.record_checksum != b.summary.record_checksum {
        return Err(Error::ShapeMismatch("reconstructions come from different records".into()));
    }
    if a.summary.sources != b.summary.sources {
        return Err(Error::ShapeMismatch("reconstructions describe different phantoms".into()));
    }
    let sources = &a.summary.sources;
    let ma = source_metrics(&a.image, sources);
    let mb = source_metrics(&b.image, sources);
    let per_source: Vec<SourceComparison> = ma
        .into_iter()
        .zip(mb)
        .enumerate()
        .map(|(i, (sa, sb))| SourceComparison {
            fwhm_difference: sb.axial_fwhm.zip(sa.axial_fwhm).map(|(y, x)| y - x),
            b_sharper: narrower(sb.axial_fwhm, sa.axial_fwhm),
            record_contrast: a.summary.record_contrast.get(i).copied().unwrap_or(f64::NAN),
            a_contrast: image_contrast(&a.image, &sa),
            b_contrast: image_contrast(&b.image, &sb),
            a: sa,
            b: sb,
        })
        .collect();
    let admm_sharper_everywhere = match (a.summary.method(), b.summary.method()) {
        (Method::Tsvd, Method::Admm) => Some(per_source.iter().all(|s| s.b_sharper)),
        (Method::Admm, Method::Tsvd) => Some(
            per_source
                .iter()
                .all(|s| narrower(s.a.axial_fwhm, s.b.axial_fwhm)),
        ),
        _ => None,
    };
    let min = |g: &ReconstructionGrid| g.values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ComparisonReport {
        a_method: a.summary.method(),
        b_method: b.summary.method(),
        a_background_rms: background_rms(&a.image, sources, BACKGROUND_RADIUS),
        b_background_rms: background_rms(&b.image, sources, BACKGROUND_RADIUS),
        max_abs_difference: a
            .image
            .values
            .iter()
            .zip(&b.image.values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max),
        admm_sharper_everywhere,
        min_a: min(&a.image),
        min_b: min(&b.image),
        sources: per_source,
    })
}
