//! Simulation and verification toolkit for 2D incompressible Euler flows with
//! bounded vorticity and polynomially growing velocity.
//!
//! The crate provides:
//!
//! * grids, scalar/vector fields, smooth radial cutoffs and snapshot I/O ([`fields`]),
//! * local Morrey norms `L^p_alpha` and their large-scale tails ([`morrey`]),
//! * the split log-kernel machinery, a free-space Poisson solver and spectral
//!   low-pass filters ([`kernels`]),
//! * pressure-force operators built on the kernel splitting, with a spectral
//!   Leray oracle ([`pressure`]),
//! * velocity reconstruction from vorticity and localized gradient
//!   decompositions ([`biot_savart`]),
//! * a semi-Lagrangian vorticity transport solver ([`solver`]),
//! * scenario constructions and quantitative bound checks ([`analysis`]).
//!
//! All computations are free-space (domain-doubled convolutions, never
//! periodic wraparound) on truncated data; consumers declare a trusted region
//! that excludes the truncation-contaminated outer buffer.

pub mod analysis;
mod diffops;
pub mod biot_savart;
pub mod fields;
pub mod fft2d;
pub mod kernels;
pub mod morrey;
pub mod pressure;
pub mod smooth;
pub mod solver;

pub use fields::{CutoffProfile, DyadicPartition, Grid2D, ScalarField2D, VectorField2D};
pub use morrey::{MorreyParams, MorreyReport, RadiusLadder, TrustedRegion};
