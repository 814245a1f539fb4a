use std::f64::consts::PI;

use autodiff::{ComplexVar, Graph, Tensor, Var};

use super::weights::{Architecture, ParamVars};
use crate::channel::{received_signal_graph, BatchChannels, Environment, Vec3};
use crate::error::{MinnError, Result};

/// Added to the transmit norm before dividing.
pub const NORM_EPS: f64 = 1e-12;

/// Bound on the power logit; keeps `sigmoid` strictly inside `(0, 1)` in f64.
pub const POWER_LOGIT_LIMIT: f64 = 30.0;

/// Map from unconstrained reals to SIM phases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PhaseMap {
    /// `2·atan(θ) + π`, onto `(0, 2π)`.
    #[default]
    Squashed,
    /// `π·(atan(θ) + 1)`, whose range `(π − π²/2, π + π²/2)` exceeds `[0, 2π]`.
    PaperLiteral,
}

impl PhaseMap {
    pub fn apply(self, raw: f64) -> f64 {
        match self {
            PhaseMap::Squashed => 2.0 * raw.atan() + PI,
            PhaseMap::PaperLiteral => PI * (raw.atan() + 1.0),
        }
    }

    pub fn apply_graph(self, g: &mut Graph, raw: Var) -> Var {
        let a = g.atan(raw);
        match self {
            PhaseMap::Squashed => {
                let s = g.scale(a, 2.0);
                g.add_scalar(s, PI)
            }
            PhaseMap::PaperLiteral => {
                let s = g.add_scalar(a, 1.0);
                g.scale(s, PI)
            }
        }
    }
}

/// Where the transmit power comes from in one forward pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PowerMode {
    /// `P_ceil · sigmoid(u)` from the power network, with `u` clamped to
    /// `±POWER_LOGIT_LIMIT`.
    Learned { p_ceil: f64 },
    /// The same power in W for every sample.
    Fixed(f64),
}

pub struct ForwardOutput {
    /// Class probabilities, `[B, classes]`.
    pub probs: Var,
    /// Transmit power in W, `[B]`.
    pub power: Var,
    /// Unit-norm transmit vectors, `[B, N_t]`.
    pub x: ComplexVar,
}

fn mlp(g: &mut Graph, mut h: Var, params: &[Var]) -> Result<Var> {
    let layers = params.len() / 2;
    for (i, wb) in params.chunks(2).enumerate() {
        h = g.linear(h, wb[0], Some(wb[1]))?;
        if i + 1 < layers {
            h = g.relu(h);
        }
    }
    Ok(h)
}

/// CNN encoder: `[B, 1, s, s]` images to unit-norm `[B, N_t]` complex vectors.
pub fn tx_encode(
    g: &mut Graph,
    arch: &Architecture,
    images: Var,
    tx: &[Var],
) -> Result<ComplexVar> {
    let b = g.shape(images)[0];
    let mut h = images;
    for conv in tx[..6].chunks(2) {
        h = g.conv2d(h, conv[0], Some(conv[1]), 1, 1)?;
        h = g.relu(h);
        h = g.max_pool2d(h, 2)?;
    }
    let flat = g.reshape(h, &[b, arch.flat_features()])?;
    let z = mlp(g, flat, &tx[6..])?;
    let re = g.narrow(z, 0, arch.n_t)?;
    let im = g.narrow(z, arch.n_t, arch.n_t)?;
    let rr = g.mul(re, re)?;
    let ii = g.mul(im, im)?;
    let sq = g.add(rr, ii)?;
    let sq = g.sum_last(sq);
    let norm = g.sqrt(sq);
    let norm = g.add_scalar(norm, NORM_EPS);
    let inv = g.recip(norm);
    let re = g.row_scale(re, inv)?;
    let im = g.row_scale(im, inv)?;
    Ok(ComplexVar { re, im })
}

/// Horizontal position mapped to `[−1, 1]²` over the user box.
pub fn normalized_positions(env: &Environment, positions: &[Vec3]) -> Tensor {
    let (lo, hi) = (env.geometry.box_min, env.geometry.box_max);
    let data = positions
        .iter()
        .flat_map(|p| {
            [
                2.0 * (p.x - lo.x) / (hi.x - lo.x) - 1.0,
                2.0 * (p.y - lo.y) / (hi.y - lo.y) - 1.0,
            ]
        })
        .collect();
    Tensor::new(&[positions.len(), 2], data).expect("position shape")
}

/// Transmit power per sample, `[B]` in W.
pub fn power_control(
    g: &mut Graph,
    mode: PowerMode,
    positions: Tensor,
    power: &[Var],
) -> Result<Var> {
    let b = positions.shape()[0];
    match mode {
        PowerMode::Fixed(p) => Ok(g.constant(Tensor::full(&[b], p))),
        PowerMode::Learned { p_ceil } => {
            let pos = g.constant(positions);
            let u = mlp(g, pos, power)?;
            let u = g.reshape(u, &[b])?;
            let u = g.clamp(u, -POWER_LOGIT_LIMIT, POWER_LOGIT_LIMIT);
            let s = g.sigmoid(u);
            Ok(g.scale(s, p_ceil))
        }
    }
}

/// Decoder from `[B, N_r]` received samples to class probabilities. The
/// input is divided by the noise standard deviation first.
pub fn rx_decode(g: &mut Graph, y: ComplexVar, sigma: f64, rx: &[Var]) -> Result<Var> {
    let re = g.scale(y.re, 1.0 / sigma);
    let im = g.scale(y.im, 1.0 / sigma);
    let features = g.concat(&[re, im])?;
    let logits = mlp(g, features, rx)?;
    Ok(g.softmax(logits))
}

/// The composed network for one minibatch.
#[allow(clippy::too_many_arguments)]
pub fn minn_forward(
    g: &mut Graph,
    arch: &Architecture,
    params: &ParamVars,
    images: Var,
    env: &Environment,
    channels: &BatchChannels,
    power_mode: PowerMode,
    phase_map: PhaseMap,
    noise: Option<&(Tensor, Tensor)>,
) -> Result<ForwardOutput> {
    let b = g.shape(images)[0];
    if channels.positions.len() != b {
        return Err(MinnError::Contract(format!(
            "{b} images but {} channel realizations",
            channels.positions.len()
        )));
    }
    let x = tx_encode(g, arch, images, &params.tx)?;
    let positions = normalized_positions(env, &channels.positions);
    let power = power_control(g, power_mode, positions, &params.power)?;
    let theta = phase_map.apply_graph(g, params.theta_raw);
    let phi = env.sim.response_graph(g, theta)?;
    let y = received_signal_graph(g, x, power, &env.h_tm, channels, phi, noise)?;
    let probs = rx_decode(g, y, env.geometry.noise_power.sqrt(), &params.rx)?;
    Ok(ForwardOutput { probs, power, x })
}

/// `mean_b [CE_b + γ · 1000 · P_b]`, with `P` in W.
pub fn relaxed_loss(
    g: &mut Graph,
    probs: Var,
    targets: &Tensor,
    power: Var,
    gamma: f64,
) -> Result<Var> {
    if !(gamma >= 0.0) {
        return Err(MinnError::Contract(format!(
            "penalty weight must be non-negative, got {gamma}"
        )));
    }
    let ce = g.cross_entropy(probs, targets)?;
    let p_mw = g.scale(power, 1000.0 * gamma);
    let per_sample = g.add(ce, p_mw)?;
    Ok(g.mean(per_sample))
}
