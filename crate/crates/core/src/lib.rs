//! Counting-field-dressed Liouvillians for weakly coupled open quantum systems.
//!
//! The crate builds tilted generators `L(χ)` for three quantum master
//! equations (Redfield, Unified, fully Secular), extracts heat-current
//! statistics from them and checks the fluctuation and transport symmetries
//! those statistics should obey. Everything here is pure computation: no I/O,
//! no threads, `alloc` only. The `qfcs` crate adds the CLI, file formats and
//! parallel sweeps on top.
//!
//! Module map:
//!
//! * [`model`]: spectrum, couplings, baths, Bohr-frequency clusters, jump operators
//! * [`rates`]: Ohmic golden-rule rates with local detailed balance and phase dressing
//! * [`generators`]: superoperator assembly for each master equation
//! * [`spectral`]: eigenvalues, CGF branches, steady states, matrix exponentials
//! * [`fcs`]: cumulants, symmetry scans, Green-Kubo, TUR and the figure sweeps
//! * [`vmodel`]: the three-level V system and its closed-form generator

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

mod error;
pub mod fcs;
pub mod generators;
pub mod model;
pub mod rates;
pub mod spectral;
pub mod system;
pub mod vmodel;

pub use error::{Error, Result};
pub use generators::{BasisOrdering, CountingField, Method, TiltedGenerator};
pub use model::CheckedModel;
pub use model::{BathSpec, BohrFrequency, ClusterPartition, CouplingSpec, SystemModel};
pub use rates::RateTable;
pub use system::OpenSystem;
pub use vmodel::VParams;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
/// Dense real matrix.
pub type RMatrix = nalgebra::DMatrix<f64>;
