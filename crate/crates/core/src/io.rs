//! File formats: CSV tables and raw little-endian binaries with JSON sidecars.

use crate::error::{Error, Result};
use crate::heat::Field;
use crate::langevin::LangevinTrajectory;
use crate::lattice_walk::OccupationSeries;
use crate::saft::ReconstructionGrid;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DType {
    F64Le,
    U64Le,
}

/// Description of a raw binary file, stored next to it with a `.json` extension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub dtype: DType,
    /// Row-major shape, slowest axis first.
    pub shape: Vec<usize>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub meta: Map<String, Value>,
}

impl Sidecar {
    pub fn new(dtype: DType, shape: Vec<usize>) -> Self {
        Self {
            dtype,
            shape,
            meta: Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.meta.insert(
            key.to_string(),
            serde_json::to_value(value).expect("sidecar metadata serialises"),
        );
        self
    }

    fn len(&self) -> usize {
        self.shape.iter().product()
    }
}

/// `dir/stem.bin` and `dir/stem.json`.
pub fn binary_paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{stem}.bin")), dir.join(format!("{stem}.json")))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

fn check_len(sidecar: &Sidecar, n: usize) -> Result<()> {
    if sidecar.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "shape {:?} holds {} values, got {n}",
            sidecar.shape,
            sidecar.len()
        )));
    }
    Ok(())
}

pub fn write_f64(dir: &Path, stem: &str, data: &[f64], sidecar: &Sidecar) -> Result<()> {
    check_len(sidecar, data.len())?;
    let (bin, json) = binary_paths(dir, stem);
    let bytes: Vec<u8> = data.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(bin, bytes)?;
    write_json(&json, sidecar)
}

pub fn write_u64(dir: &Path, stem: &str, data: &[u64], sidecar: &Sidecar) -> Result<()> {
    check_len(sidecar, data.len())?;
    let (bin, json) = binary_paths(dir, stem);
    let bytes: Vec<u8> = data.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(bin, bytes)?;
    write_json(&json, sidecar)
}

fn read_words(dir: &Path, stem: &str, want: DType) -> Result<(Vec<[u8; 8]>, Sidecar)> {
    let (bin, json) = binary_paths(dir, stem);
    let sidecar: Sidecar = read_json(&json)?;
    if sidecar.dtype != want {
        return Err(Error::Config(format!("{} holds {:?}, expected {want:?}", json.display(), sidecar.dtype)));
    }
    let bytes = fs::read(bin)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::ShapeMismatch("binary length is not a multiple of 8".into()));
    }
    let words: Vec<[u8; 8]> = bytes
        .chunks_exact(8)
        .map(|c| c.try_into().expect("chunk of 8"))
        .collect();
    check_len(&sidecar, words.len())?;
    Ok((words, sidecar))
}

pub fn read_f64(dir: &Path, stem: &str) -> Result<(Vec<f64>, Sidecar)> {
    let (w, s) = read_words(dir, stem, DType::F64Le)?;
    Ok((w.into_iter().map(f64::from_le_bytes).collect(), s))
}

pub fn read_u64(dir: &Path, stem: &str) -> Result<(Vec<u64>, Sidecar)> {
    let (w, s) = read_words(dir, stem, DType::U64Le)?;
    Ok((w.into_iter().map(u64::from_le_bytes).collect(), s))
}

/// Writes a CSV table whose cells are already formatted.
pub fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip representation in exponent form.
pub fn fmt(v: f64) -> String {
    format!("{v:e}")
}

fn cell_header(n: usize) -> Vec<String> {
    std::iter::once("time".to_string())
        .chain((0..n).map(|c| format!("cell_{c}")))
        .collect()
}

/// `time,cell_0,...,cell_{n-1}`, one row per step.
pub fn write_occupation_csv<W: Write>(series: &OccupationSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(cell_header(series.lattice().n_cells()))?;
    for (i, row) in series.rows().enumerate() {
        let t = series.start_time() + i as u64;
        w.write_record(std::iter::once(t.to_string()).chain(row.iter().map(u64::to_string)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_occupation_binary(dir: &Path, stem: &str, series: &OccupationSeries, seed: u64) -> Result<()> {
    let sidecar = Sidecar::new(DType::U64Le, vec![series.n_times(), series.lattice().n_cells()])
        .with("seed", seed)
        .with("start_time", series.start_time())
        .with("n_walkers", series.n_walkers())
        .with("lattice", series.lattice());
    write_u64(dir, stem, series.counts(), &sidecar)
}

pub fn write_trajectory_csv<W: Write>(traj: &LangevinTrajectory, out: W) -> Result<()> {
    use crate::lattice_walk::SeriesView;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(cell_header(traj.n_cells()))?;
    for i in 0..traj.n_rows() {
        let t = i as f64 * traj.sample_interval();
        w.write_record(std::iter::once(fmt(t)).chain(traj.row(i).iter().map(|&v| fmt(v))))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_field(dir: &Path, stem: &str, field: &Field) -> Result<()> {
    let sidecar = Sidecar::new(DType::F64Le, field.dims())
        .with("spacing", field.spacing())
        .with("alpha", field.alpha());
    write_f64(dir, stem, field.values(), &sidecar)
}

pub fn read_field(dir: &Path, stem: &str) -> Result<Field> {
    let (values, s) = read_f64(dir, stem)?;
    let get = |k: &str| {
        s.meta
            .get(k)
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::Config(format!("field sidecar lacks `{k}`")))
    };
    let (spacing, alpha) = (get("spacing")?, get("alpha")?);
    match s.shape[..] {
        [nx] if nx == values.len() => Field::new_1d(values, spacing, alpha),
        [nz, nx] => Field::new_2d(nx, nz, values, spacing, alpha),
        _ => Err(Error::ShapeMismatch(format!("unsupported field shape {:?}", s.shape))),
    }
}

pub fn write_grid(dir: &Path, stem: &str, grid: &ReconstructionGrid) -> Result<()> {
    let sidecar = Sidecar::new(DType::F64Le, grid.dims())
        .with("x0", grid.x0)
        .with("z0", grid.z0)
        .with("dx", grid.dx)
        .with("dz", grid.dz);
    write_f64(dir, stem, &grid.values, &sidecar)
}

pub fn read_grid(dir: &Path, stem: &str) -> Result<ReconstructionGrid> {
    let (values, s) = read_f64(dir, stem)?;
    let get = |k: &str| {
        s.meta
            .get(k)
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::Config(format!("grid sidecar lacks `{k}`")))
    };
    let [nz, nx] = s.shape[..] else {
        return Err(Error::ShapeMismatch(format!("grid shape {:?} is not 2D", s.shape)));
    };
    let mut grid = ReconstructionGrid::new(nx, nz, get("x0")?, get("z0")?, get("dx")?, get("dz")?)?;
    grid.values = values;
    Ok(grid)
}
