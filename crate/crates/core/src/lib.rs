//! Capillary squeeze flow of micro-droplets between parallel plates.
//!
//! The forward solver maps a nozzle firing pattern and a spread time to an
//! imprint image and a film thickness. Around it sit the dataset tooling
//! (four-file CSV partitions, filtering, normalization, split recipes) and a
//! non-trainable inverse baseline with pixel-classification metrics.

pub mod baseline;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod grid;
mod multigrid;
pub mod numerics;
pub mod params;
pub mod pressure;
pub mod sim;
pub mod vof;

pub use error::{Error, Result};
pub use grid::{DropPattern, Grid, ImprintImage, SimState, VofField};
pub use params::{AdvectionScheme, InterfaceModel, SimParams};
