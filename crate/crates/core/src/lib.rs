//! Open-system dynamics of two laser-driven, cross-coupled atomic ensembles.
//!
//! Each ensemble is mapped to a bosonic mode by the Holstein-Primakoff
//! transformation and truncated to a finite number of Fock levels. The
//! resulting master equation is integrated in time and the excitation
//! numbers, scattered intensity and excitation statistics are extracted.
//!
//! Two independent routes are provided for checking the main model: closed
//! moment equations of the linear (zeroth-order) model and an exact
//! collective-spin simulator in the symmetric Dicke subspace.

pub mod error;
pub mod fock;
pub mod integrator;
pub mod model;
pub mod observables;
pub mod oracles;
pub mod params;

pub use error::{Error, Mode, Result};
pub use params::{HpOrder, MixParams, ModeSpec, NumberTerm};
