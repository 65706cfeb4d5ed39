//! Independent reference solutions used to check the main model.

pub mod dicke;
pub mod moments;

pub use dicke::{dicke_evolve, dicke_evolve_from, DickeRow, SpinOps, SpinSpace};
pub use moments::{moment_evolve, moment_rhs, MomentSample, MomentState};
