//! Computational model of the Calogero–Moser spaces.
//!
//! Points are pairs of complex `n × n` matrices `(X, Y)` with
//! `rank([X, Y] + id) = 1`, taken up to simultaneous conjugation. The crate
//! builds such pairs, applies the explicit automorphisms (Calogero–Moser
//! flows, `SL₂` action, transpose-swap, shears and overshears), compares
//! points through conjugation invariants, realizes `𝒞₂` in explicit affine
//! coordinates, and numerically certifies the tangent-spanning and
//! generating-vector properties used for flexibility and density.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! parallel batch drivers live in the `cm-spaces` companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod autos;
pub mod cm2;
pub mod error;
pub mod flex;
pub mod fspec;
pub mod invariants;
pub mod linalg;
pub mod pair;
pub mod tol;

pub use autos::{AutoProgram, AutoStep, BaseFlow, FlowDirection, ProgramRun};
pub use cm2::{Cm2Coords, Cm2Generators, GaussianRational};
pub use error::{Error, Result};
pub use fspec::{FSpec, Generator};
pub use invariants::{EquivVerdict, Fingerprint};
pub use linalg::{CMatrix, C64};
pub use pair::{MatrixPair, Member, Membership, WilsonChartPoint};
pub use tol::Tolerances;
