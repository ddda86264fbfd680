//! Metaplectic time-frequency analysis.
//!
//! Row-vector convention throughout: a point `x` maps to `x·M`.

pub mod bench;
pub mod cohen;
pub mod error;
pub mod field;
pub mod gmconv;
pub mod io;
pub mod lsfilter;
pub mod properties;
pub(crate) mod fourier;
pub mod metaplectic;
pub mod optimizer;
pub mod signals;
pub mod symplectic;
pub mod wigner;

pub use error::{MtfaError, Result};
pub use field::TfDistribution;
pub use fourier::Lin;
pub use num_complex::Complex64 as C64;
pub use signals::{SampledSignal, UniformGrid};
pub use symplectic::SymplecticMatrix;
