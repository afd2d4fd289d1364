pub mod concentration;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod initial;
pub mod propagators;
pub mod scenarios;
pub mod snapshot;
pub mod solver;
mod spectral;
pub mod transforms;

pub use error::{Error, Result};
pub use grid::{AliasPolicy, DiagnosticsRecord, Field, Frame, GridSpec, C64};
