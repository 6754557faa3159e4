//! Semi-simple cohomological field theories over exact and high-precision scalars.

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod scalar;
pub mod matrix;
pub mod series;
pub mod frobenius;
pub mod tft;
pub mod nodal;
pub mod oracle;
pub mod correlator;
pub mod reconstruction;
