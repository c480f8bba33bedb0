//! Bandlimited pulse shaping for intensity-modulated direct-detection links.

pub mod bias;
pub mod constellation;
pub mod error;
pub mod link;
pub mod matched;
pub mod power;
pub mod pulse;
pub mod quadrature;
pub mod special;
pub mod waveform;

pub use bias::{required_bias, BiasOptions, BiasSolution};
pub use constellation::Constellation;
pub use error::{Error, Result};
pub use pulse::{PulseFamily, PulseMetadata, PulseSpec, ALPHA_MIN};
