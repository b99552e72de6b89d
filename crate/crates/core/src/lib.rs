//! Permittivity extraction from small-distance-increment FMCW radar sweeps.
//!
//! Layers, bottom up: [`em`] plane-wave slab reflection, [`fmcw`] IF
//! synthesis and metal calibration, [`solver`] bounded least squares,
//! [`estimator`] the permittivity fit, [`bench`] Monte-Carlo harness,
//! [`io`] text file formats and [`cli`] the `sdi` command implementations.

pub mod bench;
pub mod cli;
pub mod em;
pub mod error;
pub mod estimator;
pub mod fmcw;
pub mod io;
pub mod solver;

pub use em::{Backing, ComplexPermittivity, SlabGeometry, SPEED_OF_LIGHT};
pub use error::{Result, SdiError};
pub use estimator::{fit_permittivity, FitBounds, FitResult, SdiDataset, StageDirection, Starts};
