//! Semi-discrete optimal transport with a one-dimensional discrete target.

pub mod congestion;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod hedonic;
pub mod laguerre;
pub mod nest;
pub mod numerics;
pub mod oracle;
pub mod report;
pub mod svg;

pub use error::{Error, Result};
