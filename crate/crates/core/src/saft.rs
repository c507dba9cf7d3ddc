//! Delay-and-sum back-projection of virtual waves onto an image grid, and the
//! gain available from averaging over detectors.

use crate::error::{ensure_positive, Error, Result};
use crate::virtual_wave::VirtualField;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Image on `x = x0 + ix dx`, `z = z0 + iz dz`, stored row-major `[z][x]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionGrid {
    pub nx: usize,
    pub nz: usize,
    pub x0: f64,
    pub z0: f64,
    pub dx: f64,
    pub dz: f64,
    pub values: Vec<f64>,
}

impl ReconstructionGrid {
    pub fn new(nx: usize, nz: usize, x0: f64, z0: f64, dx: f64, dz: f64) -> Result<Self> {
        if nx == 0 || nz == 0 {
            return Err(Error::invalid("nx/nz", "grid must be nonempty"));
        }
        ensure_positive("dx", dx)?;
        ensure_positive("dz", dz)?;
        if !(x0.is_finite() && z0.is_finite()) {
            return Err(Error::invalid("x0/z0", "origin must be finite"));
        }
        Ok(Self {
            nx,
            nz,
            x0,
            z0,
            dx,
            dz,
            values: vec![0.0; nx * nz],
        })
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x0 + ix as f64 * self.dx
    }

    pub fn z(&self, iz: usize) -> f64 {
        self.z0 + iz as f64 * self.dz
    }

    pub fn at(&self, ix: usize, iz: usize) -> f64 {
        self.values[iz * self.nx + ix]
    }

    pub fn same_geometry(&self, other: &Self) -> bool {
        self.nx == other.nx
            && self.nz == other.nz
            && self.x0 == other.x0
            && self.z0 == other.z0
            && self.dx == other.dx
            && self.dz == other.dz
    }

    /// Shape as written to binary sidecars.
    pub fn dims(&self) -> Vec<usize> {
        vec![self.nz, self.nx]
    }
}

#[inline]
fn interpolate(trace: &[f64], pos: f64) -> f64 {
    if pos < 0.0 {
        return 0.0;
    }
    let i = pos.floor() as usize;
    if i + 1 >= trace.len() {
        return if i + 1 == trace.len() && pos == i as f64 { trace[i] } else { 0.0 };
    }
    let f = pos - i as f64;
    trace[i] * (1.0 - f) + trace[i + 1] * f
}

/// `value(r) = (1/n) sum_d virtual_d(|r - r_d| / c)` with detectors on `z = 0`.
pub fn saft_backproject(
    virtual_field: &VirtualField,
    detector_xs: &[f64],
    grid: &ReconstructionGrid,
    c: f64,
) -> Result<ReconstructionGrid> {
    if detector_xs.is_empty() {
        return Err(Error::invalid("detector_xs", "need at least one detector"));
    }
    if detector_xs.len() != virtual_field.n_detectors() {
        return Err(Error::ShapeMismatch(format!(
            "{} detector positions for {} virtual traces",
            detector_xs.len(),
            virtual_field.n_detectors()
        )));
    }
    ensure_positive("c", c)?;
    if (virtual_field.c - c).abs() > 1e-12 * c {
        return Err(Error::invalid("c", format!("virtual field was built with c = {}", virtual_field.c)));
    }
    let scale = 1.0 / (c * virtual_field.dtp);
    let w = 1.0 / detector_xs.len() as f64;
    let mut out = grid.clone();
    out.values
        .par_chunks_mut(grid.nx)
        .enumerate()
        .for_each(|(iz, row)| {
            let z = grid.z(iz);
            for (ix, v) in row.iter_mut().enumerate() {
                let x = grid.x(ix);
                *v = w * detector_xs
                    .iter()
                    .zip(&virtual_field.values)
                    .map(|(&xd, trace)| interpolate(trace, (x - xd).hypot(z) * scale))
                    .sum::<f64>();
            }
        });
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AveragingGain {
    /// `sqrt(n)`.
    pub snr_factor: f64,
    /// `ln(sqrt(n))`, the resolution gain through the `ln(snr)` dependence.
    pub resolution_factor: f64,
}

pub fn averaging_gain(n_detectors: usize) -> Result<AveragingGain> {
    if n_detectors == 0 {
        return Err(Error::invalid("n_detectors", "need at least one detector"));
    }
    let s = (n_detectors as f64).sqrt();
    Ok(AveragingGain {
        snr_factor: s,
        resolution_factor: s.ln(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(values: Vec<Vec<f64>>) -> VirtualField {
        VirtualField {
            detector_xs: (0..values.len()).map(|d| d as f64).collect(),
            dtp: 1.0,
            c: 1.0,
            values,
        }
    }

    #[test]
    fn gain_examples() {
        let g = averaging_gain(200).unwrap();
        assert!((g.snr_factor - 14.142135623730951).abs() < 1e-12);
        assert!((g.resolution_factor - 2.649158683274018).abs() < 1e-12);
        assert_eq!(averaging_gain(1).unwrap().resolution_factor, 0.0);
        assert!(averaging_gain(0).is_err());
    }

    #[test]
    fn empty_detectors_rejected() {
        let grid = ReconstructionGrid::new(4, 4, 0.0, 0.5, 1.0, 1.0).unwrap();
        assert!(saft_backproject(&field(vec![]), &[], &grid, 1.0).is_err());
    }

    #[test]
    fn zero_field_gives_zero_map() {
        let grid = ReconstructionGrid::new(9, 7, 0.0, 0.5, 1.0, 1.0).unwrap();
        let out = saft_backproject(&field(vec![vec![0.0; 30]; 3]), &[0.0, 1.0, 2.0], &grid, 1.0).unwrap();
        assert!(out.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_delta_lights_an_arc() {
        let tau = 6.0;
        let mut trace = vec![0.0; 20];
        trace[tau as usize] = 1.0;
        let grid = ReconstructionGrid::new(41, 20, -20.0, 0.25, 0.5, 0.5).unwrap();
        let out = saft_backproject(&field(vec![trace]), &[0.0], &grid, 1.0).unwrap();
        for iz in 0..grid.nz {
            for ix in 0..grid.nx {
                let r = grid.x(ix).hypot(grid.z(iz));
                if out.at(ix, iz) != 0.0 {
                    assert!((r - tau).abs() < 1.0, "r = {r}");
                }
            }
        }
        assert!(out.values.iter().any(|&v| v > 0.5));
    }

    #[test]
    fn interpolation_edges() {
        let t = [1.0, 3.0];
        assert_eq!(interpolate(&t, 0.5), 2.0);
        assert_eq!(interpolate(&t, 1.0), 3.0);
        assert_eq!(interpolate(&t, 1.5), 0.0);
        assert_eq!(interpolate(&t, -0.1), 0.0);
    }
}
