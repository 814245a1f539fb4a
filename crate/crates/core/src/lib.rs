//! Metasurface-integrated neural network simulator.
//!
//! * [`channel`]: geometry, multipath channels, SIM diffraction and the
//!   received-signal map.
//! * [`data`]: MNIST IDX ingestion and batching.
//! * [`model`]: the TX encoder, power controller, RX decoder, relaxed loss and
//!   the training and evaluation loops.
//! * [`harness`]: configuration, checkpoints, sweeps and result files.
//! * [`selfcheck`]: gradient checks and closed-form channel anchors.

pub mod channel;
pub mod data;
pub mod error;
pub mod harness;
pub mod model;
pub mod seed;
pub mod selfcheck;

pub use error::{MinnError, Result};
