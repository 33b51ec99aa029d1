//! Landscape metrics: fitness-distance correlation, ruggedness, local optima,
//! rank persistence and the sample-size density study.

mod fdc;
mod optima;
mod persistence;
mod ruggedness;
mod study;

pub use fdc::*;
pub use optima::*;
pub use persistence::*;
pub use ruggedness::*;
pub use study::*;
