//! Config-driven experiment runner. One experiment writes one output directory
//! holding CSV tables, raw binaries with JSON sidecars and a `manifest.json`
//! with the checksums of everything else.

mod compare;
pub mod entropy;
pub mod gain;
pub mod kernel;
pub mod langevin;
pub mod occupation;
pub mod phantom;
pub mod psf;
pub mod walk;

pub use compare::{compare_reconstructions, load_reconstruction, ComparisonReport, ReconstructionSummary, SourceComparison};

use crate::error::{Error, Result};
use crate::io;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.json";

/// Every accepted value of the `experiment` field.
pub const EXPERIMENT_IDS: [&str; 9] = [
    "walk",
    "occupation",
    "langevin",
    "entropy",
    "psf1d",
    "psf2d",
    "phantom-pipeline",
    "gain-table",
    "kernel",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", content = "params", rename_all = "kebab-case")]
pub enum ExperimentParams {
    Walk(walk::Params),
    Occupation(occupation::Params),
    Langevin(langevin::Params),
    Entropy(entropy::Params),
    Psf1d(psf::Params1d),
    Psf2d(psf::Params2d),
    PhantomPipeline(phantom::Params),
    GainTable(gain::Params),
    Kernel(kernel::Params),
}

impl ExperimentParams {
    pub fn id(&self) -> &'static str {
        match self {
            Self::Walk(_) => "walk",
            Self::Occupation(_) => "occupation",
            Self::Langevin(_) => "langevin",
            Self::Entropy(_) => "entropy",
            Self::Psf1d(_) => "psf1d",
            Self::Psf2d(_) => "psf2d",
            Self::PhantomPipeline(_) => "phantom-pipeline",
            Self::GainTable(_) => "gain-table",
            Self::Kernel(_) => "kernel",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Walk(p) => p.validate(),
            Self::Occupation(p) => p.validate(),
            Self::Langevin(p) => p.validate(),
            Self::Entropy(p) => p.validate(),
            Self::Psf1d(p) => p.validate(),
            Self::Psf2d(p) => p.validate(),
            Self::PhantomPipeline(p) => p.validate(),
            Self::GainTable(p) => p.validate(),
            Self::Kernel(p) => p.validate(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub params: ExperimentParams,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; the command line may override it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

const TOP_LEVEL_KEYS: [&str; 4] = ["experiment", "params", "seed", "out"];

impl ExperimentConfig {
    /// Parses and validates a JSON config. Every failure is a config error
    /// naming the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Config("config must be a JSON object".into()))?;
        if let Some(key) = obj.keys().find(|k| !TOP_LEVEL_KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!(
                "unknown field `{key}`, expected one of {}",
                TOP_LEVEL_KEYS.join(", ")
            )));
        }
        match obj.get("experiment") {
            None => return Err(Error::Config("missing field `experiment`".into())),
            Some(Value::String(id)) if !EXPERIMENT_IDS.contains(&id.as_str()) => {
                return Err(Error::Config(format!(
                    "experiment: unknown experiment id `{id}`, expected one of {}",
                    EXPERIMENT_IDS.join(", ")
                )))
            }
            _ => {}
        }
        let tagged = serde_json::json!({
            "experiment": obj["experiment"],
            "params": obj.get("params").cloned().unwrap_or_else(|| Value::Object(Default::default())),
        });
        let params: ExperimentParams = serde_path_to_error::deserialize(tagged).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("{path}: {}", e.into_inner()))
        })?;
        let seed = match obj.get("seed") {
            None => 0,
            Some(v) => v
                .as_u64()
                .ok_or_else(|| Error::Config(format!("seed: expected a nonnegative integer, got {v}")))?,
        };
        let out = match obj.get("out") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(PathBuf::from(s)),
            Some(v) => return Err(Error::Config(format!("out: expected a path string, got {v}"))),
        };
        let config = Self { params, seed, out };
        config.params.validate().map_err(|e| Error::Config(format!("params: {e}")))?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Collects the files an experiment writes, relative to its directory.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> Result<PathBuf> {
        let p = self.root.join(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        self.files.push(name.to_string());
        Ok(p)
    }

    pub fn csv(&mut self, name: &str, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let p = self.path(name)?;
        io::write_csv(&p, header, rows)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.path(name)?;
        io::write_json(&p, value)
    }

    /// Streams into a file through `write`.
    pub fn with_writer(&mut self, name: &str, write: impl FnOnce(fs::File) -> Result<()>) -> Result<()> {
        let p = self.path(name)?;
        write(fs::File::create(p)?)
    }

    /// Registers `stem.bin` and `stem.json` written by `write` into `dir`.
    pub fn binary(&mut self, stem: &str, write: impl FnOnce(&Path, &str) -> Result<()>) -> Result<()> {
        let bin = self.path(&format!("{stem}.bin"))?;
        self.path(&format!("{stem}.json"))?;
        let dir = bin.parent().expect("output files live in a directory").to_path_buf();
        let name = Path::new(stem).file_name().and_then(|s| s.to_str()).expect("utf-8 stem");
        write(&dir, name)
    }
}

pub fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    /// The parsed config, defaults filled in.
    pub config: Value,
    pub files: Vec<FileEntry>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Runs `config` into `out`. The directory is created only after the config
/// has been validated.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    config.params.validate()?;
    let mut dir = OutputDir::create(out)?;
    let seed = config.seed;
    match &config.params {
        ExperimentParams::Walk(p) => walk::write(&walk::compute(p, seed)?, &mut dir)?,
        ExperimentParams::Occupation(p) => occupation::write(&occupation::compute(p, seed)?, &mut dir)?,
        ExperimentParams::Langevin(p) => langevin::write(&langevin::compute(p, seed)?, &mut dir)?,
        ExperimentParams::Entropy(p) => entropy::write(&entropy::compute(p, seed)?, &mut dir)?,
        ExperimentParams::Psf1d(p) => psf::write_1d(&psf::compute_1d(p)?, &mut dir)?,
        ExperimentParams::Psf2d(p) => psf::write_2d(&psf::compute_2d(p)?, &mut dir)?,
        ExperimentParams::PhantomPipeline(p) => phantom::write(&phantom::compute(p, seed)?, &mut dir)?,
        ExperimentParams::GainTable(p) => gain::write(&gain::compute(p)?, &mut dir)?,
        ExperimentParams::Kernel(p) => kernel::write(&kernel::compute(p)?, &mut dir)?,
    }
    let mut names = dir.files.clone();
    names.sort();
    names.dedup();
    let files = names
        .into_iter()
        .map(|name| {
            let p = out.join(&name);
            Ok(FileEntry {
                bytes: fs::metadata(&p)?.len(),
                sha256: sha256_file(&p)?,
                path: name,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut echoed = config.clone();
    echoed.out = None;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: config.params.id().to_string(),
        seed,
        config: serde_json::to_value(&echoed)?,
        files,
    };
    io::write_json(&out.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_id_is_a_config_error() {
        let e = ExperimentConfig::from_json(r#"{"experiment": "nope", "params": {}}"#).unwrap_err();
        assert!(e.is_config_error());
        assert!(e.to_string().contains("nope"));
    }

    #[test]
    fn field_errors_name_the_field() {
        let e = ExperimentConfig::from_json(r#"{"experiment": "gain-table", "params": {"detectors": "x"}}"#).unwrap_err();
        assert!(e.to_string().contains("params.detectors"), "{e}");
        let e = ExperimentConfig::from_json(r#"{"experiment": "gain-table", "params": {"detectors": [1]}, "sede": 3}"#)
            .unwrap_err();
        assert!(e.to_string().contains("sede"), "{e}");
        let e = ExperimentConfig::from_json(r#"{"experiment": "gain-table", "params": {"detectors": [0]}}"#).unwrap_err();
        assert!(e.is_config_error() && e.to_string().contains("n_detectors"), "{e}");
    }

    #[test]
    fn ids_cover_every_variant() {
        for id in EXPERIMENT_IDS {
            let text = format!(r#"{{"experiment": "{id}", "params": {{}}}}"#);
            match ExperimentConfig::from_json(&text) {
                Ok(c) => assert_eq!(c.params.id(), id),
                Err(e) => assert!(!e.to_string().contains("unknown experiment id"), "{e}"),
            }
        }
    }
}
