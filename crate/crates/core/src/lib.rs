//! Simulation and analysis toolkit for beyond-field-of-view tomography.
//!
//! Two acquisition strategies are modelled on synthetic porous-disk phantoms:
//!
//! * **LTA** (local tomography acquisition): the object is rotated about a
//!   square grid of region-of-interest centers, each local tomogram is
//!   reconstructed on its own and the disks are mosaicked.
//! * **SOA** (sinogram-oriented acquisition): the object is offset from the
//!   rotation axis, partial sinogram bands are collected and stitched in the
//!   sinogram domain before a single reconstruction.
//!
//! The crate covers phantom generation ([`phantom`]), the parallel-beam forward
//! model and photon noise ([`projector`]), scan planning with data-size and
//! dose accounting ([`plan`]), filtered backprojection and stitching
//! ([`recon`]), phase-correlation registration studies ([`register`]), image
//! quality metrics ([`metrics`]), persistence ([`io`]) and the experiment
//! driver behind the `tomostitch` binary ([`cli`]).
//!
//! Geometry conventions used everywhere: image pixel `(i, j)` (column, row)
//! has object coordinates `x = i + 0.5 - W/2`, `y = j + 0.5 - H/2`. A ray at
//! angle `θ` has detector coordinate `s = x·sin θ + y·cos θ`, so a point at
//! `(x, y)` traces `s₀(θ) = √(x²+y²)·cos(α − θ) + c0` with `α = atan2(x, y)`.
//! Detector column `k` has its center at `s = k + 0.5 − c0`.

pub mod cli;
pub mod error;
pub mod io;
pub mod metrics;
pub mod phantom;
pub mod plan;
pub mod projector;
pub mod recon;
pub mod register;

mod fft;

pub use error::{Error, Result};
pub use phantom::{disk_mask, generate_phantom, ImageGrid, Phantom, PhantomParams, Point, Pore};
pub use plan::{ScanPlan, Strategy};
pub use projector::{NoiseModel, Sinogram};
