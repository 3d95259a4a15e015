//! Sender-node authentication at the physical layer using the residual
//! channel left behind by non-reciprocal transceiver hardware.
//!
//! Bob pings a sender with a known preamble, the sender echoes it back
//! (amplify-and-forward or decode-and-forward), and the product of the four
//! transmit/receive chain gains survives the round trip while the radio
//! channel and oscillator offsets cancel. That residual is the sender's
//! fingerprint. Bob estimates it by least squares and runs a Neyman-Pearson
//! test against the fingerprint learnt from Alice during training.
//!
//! The numerical core is generic over the scalar type through
//! [`Scalar`]; the experiment harness and CLI run in `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod detector;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod oracle;
pub mod pingpong;
pub mod scalar;
pub mod specfn;
pub mod worldmodel;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use specfn::{ComplexSample, Probability, RandomStream};

/// Double-precision instantiations used by the harness and CLI.
pub type Fingerprint64 = worldmodel::Fingerprint<f64>;
pub type SystemConfig64 = worldmodel::SystemConfig<f64>;
pub type Device64 = worldmodel::Device<f64>;
pub type PongObservation64 = pingpong::PongObservation<f64>;
pub type FingerprintEstimate64 = estimator::FingerprintEstimate<f64>;
pub type Decision64 = detector::Decision<f64>;
pub type Probability64 = Probability<f64>;

/// Single-precision instantiations.
pub type Fingerprint32 = worldmodel::Fingerprint<f32>;
pub type SystemConfig32 = worldmodel::SystemConfig<f32>;
pub type Probability32 = Probability<f32>;
