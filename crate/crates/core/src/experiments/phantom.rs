//! Synthetic imaging: phantom, noisy surface record, virtual waves and
//! back-projected images for one or more regularizers.

use super::compare::{compare_reconstructions, ComparisonReport, Reconstruction, ReconstructionSummary, IMAGE_STEM, SUMMARY_FILE};
use super::OutputDir;
use crate::error::{Error, Result};
use crate::heat::{Field, SurfaceRecord};
use crate::io::{self, DType, Sidecar};
use crate::pipeline::{reconstruct, record_contrast, simulate_record, SceneConfig, SourceShape};
use crate::virtual_wave::{RegularizerConfig, TraceReport, VirtualField};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// The scene's noise seed is replaced by the experiment seed.
    pub scene: SceneConfig,
    pub regularizers: Vec<RegularizerConfig>,
}

impl Default for Params {
    fn default() -> Self {
        let scene = SceneConfig::three_sources(20, SourceShape::Gaussian { width: 2.0 });
        let thr = 1.0 / (scene.snr * (scene.n_detectors as f64).sqrt());
        Self {
            scene,
            regularizers: vec![RegularizerConfig::tsvd(thr)],
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        if self.regularizers.is_empty() {
            return Err(Error::invalid("regularizers", "list is empty"));
        }
        for r in &self.regularizers {
            r.validate()?;
        }
        Ok(())
    }
}

pub struct MethodOutput {
    /// Output subdirectory.
    pub name: String,
    pub virtual_field: VirtualField,
    pub reports: Vec<TraceReport>,
    pub reconstruction: Reconstruction,
}

pub struct PipelineResult {
    pub scene: SceneConfig,
    pub t0: Field,
    pub record: SurfaceRecord,
    pub methods: Vec<MethodOutput>,
    /// The first two methods against each other.
    pub comparison: Option<ComparisonReport>,
}

pub fn record_checksum(record: &SurfaceRecord) -> String {
    let mut h = Sha256::new();
    for v in record.values.iter().flatten() {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

fn method_name(r: &RegularizerConfig) -> &'static str {
    match r.method {
        crate::virtual_wave::Method::Tsvd => "tsvd",
        crate::virtual_wave::Method::Admm => "admm",
    }
}

pub fn compute(p: &Params, seed: u64) -> Result<PipelineResult> {
    p.validate()?;
    let mut scene = p.scene.clone();
    scene.noise_seed = seed;
    let (t0, record) = simulate_record(&scene)?;
    let checksum = record_checksum(&record);
    let record_contrasts: Vec<f64> = scene.sources.iter().map(|s| record_contrast(&record, s.x)).collect();
    let mut methods: Vec<MethodOutput> = Vec::new();
    for reg in &p.regularizers {
        let (virtual_field, reports, image) = reconstruct(&scene, &record, reg)?;
        let base = method_name(reg);
        let taken = methods.iter().filter(|m| m.name.starts_with(base)).count();
        let name = if taken == 0 { base.to_string() } else { format!("{base}_{taken}") };
        let summary = ReconstructionSummary {
            regularizer: *reg,
            sources: scene.sources.clone(),
            record_checksum: checksum.clone(),
            record_contrast: record_contrasts.clone(),
            converged_traces: reports.iter().filter(|r| r.converged).count(),
            total_traces: reports.len(),
            min_virtual: virtual_field.values.iter().flatten().copied().fold(f64::INFINITY, f64::min),
        };
        methods.push(MethodOutput {
            name,
            virtual_field,
            reports,
            reconstruction: Reconstruction { summary, image },
        });
    }
    let comparison = match &methods[..] {
        [a, b, ..] => Some(compare_reconstructions(&a.reconstruction, &b.reconstruction)?),
        _ => None,
    };
    Ok(PipelineResult {
        scene,
        t0,
        record,
        methods,
        comparison,
    })
}

pub fn write(r: &PipelineResult, out: &mut OutputDir) -> Result<()> {
    out.json("scene.json", &r.scene)?;
    out.binary("t0", |dir, stem| io::write_field(dir, stem, &r.t0))?;
    out.with_writer("record.csv", |f| r.record.write_csv(f))?;
    out.binary("record", |dir, stem| {
        let data: Vec<f64> = r.record.values.iter().flatten().copied().collect();
        let sidecar = Sidecar::new(DType::F64Le, vec![r.record.n_detectors(), r.record.n_times()])
            .with("t0", r.record.t0)
            .with("dt", r.record.dt)
            .with("detector_xs", &r.record.detector_xs)
            .with("snr", r.record.snr)
            .with("seed", r.record.seed);
        io::write_f64(dir, stem, &data, &sidecar)
    })?;
    for m in &r.methods {
        let v = &m.virtual_field;
        out.with_writer(&format!("{}/virtual.csv", m.name), |f| v.write_csv(f))?;
        out.binary(&format!("{}/virtual", m.name), |dir, stem| {
            let data: Vec<f64> = v.values.iter().flatten().copied().collect();
            let sidecar = Sidecar::new(DType::F64Le, vec![v.n_detectors(), v.n_tp()])
                .with("dtp", v.dtp)
                .with("c", v.c)
                .with("detector_xs", &v.detector_xs);
            io::write_f64(dir, stem, &data, &sidecar)
        })?;
        out.binary(&format!("{}/{IMAGE_STEM}", m.name), |dir, stem| {
            io::write_grid(dir, stem, &m.reconstruction.image)
        })?;
        out.json(&format!("{}/traces.json", m.name), &m.reports)?;
        out.json(&format!("{}/{SUMMARY_FILE}", m.name), &m.reconstruction.summary)?;
    }
    if let Some(c) = &r.comparison {
        out.json("comparison.json", c)?;
    }
    Ok(())
}
