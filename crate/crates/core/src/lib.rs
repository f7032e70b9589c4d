//! Parameter extraction for superconducting quantum chips from inductive-energy
//! participation ratios: bare-model construction, normal-mode synthesis, the
//! inverse extraction, Kerr parameters, field-export postprocessing, subsystem
//! analysis and a truncated Fock-space oracle.

pub mod analysis;
pub mod error;
pub mod extract;
pub mod fieldproc;
pub mod io;
pub mod modal;
pub mod model;
pub mod nonlinear;
pub mod oracle;

pub use error::{Error, Result};
pub use nalgebra;
