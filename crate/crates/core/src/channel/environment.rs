use std::sync::Arc;

use rand::Rng;

use super::cmatrix::{stack_parts, CMatrix};
use super::geometry::{EnvironmentGeometry, Vec3};
use super::propagation::{channel_sv, channel_tx_sim, ArrayEnd, ScattererSet};
use super::sim::{sim_propagation_matrix, SimPropagation};
use crate::error::Result;
use crate::seed::{self, Stream};
use autodiff::Tensor;

/// The three channel matrices seen by one user position.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    /// Direct TX → RX channel, `N_r × N_t`.
    pub h_tr: CMatrix,
    /// TX → first SIM layer, `N × N_t`; shared by every realization.
    pub h_tm: Arc<CMatrix>,
    /// Last SIM layer → RX, `N_r × N`.
    pub h_mr: CMatrix,
    pub user_position: Vec3,
}

/// Fixed geometry, clutter and the quantities derived from them.
#[derive(Clone, Debug)]
pub struct Environment {
    pub geometry: EnvironmentGeometry,
    pub scatterers: ScattererSet,
    pub h_tm: Arc<CMatrix>,
    pub sim: SimPropagation,
    tx_elements: Vec<Vec3>,
    last_layer: Vec<Vec3>,
}

impl Environment {
    /// Draws the clutter from the environment stream of `env_seed`.
    pub fn new(geometry: EnvironmentGeometry, env_seed: u64) -> Result<Self> {
        geometry.validate()?;
        let scatterers =
            ScattererSet::sample(&geometry, &mut seed::rng(env_seed, Stream::Environment));
        Self::with_scatterers(geometry, scatterers)
    }

    pub fn with_scatterers(
        geometry: EnvironmentGeometry,
        scatterers: ScattererSet,
    ) -> Result<Self> {
        geometry.validate()?;
        let h_tm = Arc::new(channel_tx_sim(&geometry)?);
        let sim = sim_propagation_matrix(&geometry)?;
        Ok(Environment {
            tx_elements: geometry.tx_elements(),
            last_layer: geometry.layer_elements(geometry.layers),
            geometry,
            scatterers,
            h_tm,
            sim,
        })
    }

    /// Channels for a receiver whose first antenna sits at `user`.
    pub fn realization_at(&self, user: Vec3) -> Result<ChannelSet> {
        let g = &self.geometry;
        let rx = g.rx_elements(user);
        let rx_end = ArrayEnd {
            elements: &rx,
            reference: user,
        };
        let k = g.scatterers as f64;
        let tx_end = ArrayEnd {
            elements: &self.tx_elements,
            reference: g.p_tx,
        };
        let sim_end = ArrayEnd {
            elements: &self.last_layer,
            reference: g.layer_origin(g.layers),
        };
        let h_tr = channel_sv(
            g,
            tx_end,
            rx_end,
            &self.scatterers,
            ((g.n_t * g.n_r) as f64 / k).sqrt(),
        )?;
        let h_mr = channel_sv(
            g,
            sim_end,
            rx_end,
            &self.scatterers,
            ((g.n * g.n_r) as f64 / k).sqrt(),
        )?;
        Ok(ChannelSet {
            h_tr,
            h_tm: Arc::clone(&self.h_tm),
            h_mr,
            user_position: user,
        })
    }

    /// Draws a user position uniformly in the box and builds its channels.
    pub fn sample_realization<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChannelSet> {
        let (lo, hi) = (self.geometry.box_min, self.geometry.box_max);
        let user = Vec3::new(
            rng.random_range(lo.x..hi.x),
            rng.random_range(lo.y..hi.y),
            rng.random_range(lo.z..hi.z),
        );
        self.realization_at(user)
    }

    pub fn pool<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<ChannelPool> {
        let sets = (0..count)
            .map(|_| self.sample_realization(rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(ChannelPool { sets })
    }
}

/// Pre-generated realizations that training and evaluation draw from.
#[derive(Clone, Debug)]
pub struct ChannelPool {
    pub sets: Vec<ChannelSet>,
}

/// Per-sample channels of one minibatch as stacked real/imaginary tensors.
#[derive(Clone, Debug)]
pub struct BatchChannels {
    pub h_tr: (Tensor, Tensor),
    pub h_mr: (Tensor, Tensor),
    /// User position of each sample.
    pub positions: Vec<Vec3>,
}

impl ChannelPool {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn batch(&self, indices: &[usize]) -> Result<BatchChannels> {
        let picked: Vec<&ChannelSet> = indices.iter().map(|&i| &self.sets[i]).collect();
        Ok(BatchChannels {
            h_tr: stack_parts(picked.iter().map(|c| &c.h_tr))?,
            h_mr: stack_parts(picked.iter().map(|c| &c.h_mr))?,
            positions: picked.iter().map(|c| c.user_position).collect(),
        })
    }
}
