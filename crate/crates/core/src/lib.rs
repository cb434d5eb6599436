//! Damped-wave photoacoustic tomography on rectangular grids.

pub mod error;
pub mod io;
pub mod media;
pub mod operators;
pub mod rays;
pub mod reconstruction;
pub mod record;
pub mod wavesolver;

pub use error::{PatError, Result};
