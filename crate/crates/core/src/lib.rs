//! Photothermal resolution-limit toolkit: random-walk and Langevin models of
//! heat diffusion, forward heat solvers, resolution bounds, virtual-wave
//! reconstruction and synthetic-aperture imaging.

pub mod dct;
pub mod error;
pub mod experiments;
pub mod heat;
pub mod langevin;
pub mod io;
pub mod lattice_walk;
pub mod pipeline;
pub mod resolution;
pub mod saft;
pub mod virtual_wave;

pub use error::{Error, Result};
