//! Stochastic wireless environment with a stacked intelligent metasurface.
//!
//! A fixed [`Environment`] holds the geometry, the static scatterers, the
//! line-of-sight TX → SIM channel and the inter-layer diffraction matrix.
//! Each user position yields a [`ChannelSet`] of Saleh-Valenzuela multipath
//! channels, and the received signal is
//! `y = (H_mr Φ H_tm + H_tr)·√P·x + n` with `Φ` the SIM cascade response.

mod cmatrix;
mod environment;
mod geometry;
mod propagation;
mod signal;
mod sim;

pub use cmatrix::{stack_parts, CMatrix};
pub use environment::{BatchChannels, ChannelPool, ChannelSet, Environment};
pub use geometry::{EnvironmentGeometry, PathlossModel, Vec3};
pub use propagation::{
    channel_sv, channel_sv_with, channel_tx_sim, complex_normal, pathloss, scattered_gain,
    steering_vector, ArrayEnd, ScattererSet,
};
pub use signal::{
    apply_channel, effective_channel, received_signal, received_signal_graph, sample_noise,
    sample_noise_parts, NORM_TOLERANCE,
};
pub use sim::{psi_entry, sim_propagation_matrix, SimPropagation};

pub use num_complex::Complex64;
