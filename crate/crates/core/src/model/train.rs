use autodiff::{AdamConfig, AdamState, Graph, Tensor};
use log::info;
use rand::Rng;

use super::forward::{minn_forward, relaxed_loss, PhaseMap, PowerMode};
use super::weights::{Architecture, MinnWeights};
use crate::channel::{sample_noise_parts, ChannelPool, Environment};
use crate::data::{batches, Dataset};
use crate::error::{MinnError, Result};
use crate::seed::{self, Stream};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PowerSetting {
    /// Power network, held at `frozen_power` for the first epochs.
    Learned,
    /// Power network disabled; every sample uses this power in W.
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub gamma: f64,
    pub power_freeze_epochs: usize,
    /// W.
    pub frozen_power: f64,
    /// W.
    pub p_ceil: f64,
    pub power: PowerSetting,
    pub phase_map: PhaseMap,
    pub n_train_channels: usize,
    pub n_test_channels: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 150,
            lr: 1e-3,
            batch_size: 128,
            gamma: 1e-2,
            power_freeze_epochs: 50,
            frozen_power: 0.1,
            p_ceil: 0.2,
            power: PowerSetting::Learned,
            phase_map: PhaseMap::Squashed,
            n_train_channels: 10_000,
            n_test_channels: 1_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(MinnError::Contract(m));
        if self.epochs == 0
            || self.batch_size == 0
            || self.n_train_channels == 0
            || self.n_test_channels == 0
        {
            return bad("epochs, batch size and channel pool sizes must be positive".into());
        }
        if !(self.lr > 0.0) || !(self.gamma >= 0.0) {
            return bad(format!("invalid lr {} or gamma {}", self.lr, self.gamma));
        }
        if !(self.p_ceil > 0.0) || !(self.frozen_power > 0.0) || self.frozen_power > self.p_ceil {
            return bad(format!(
                "need 0 < frozen_power ({}) <= p_ceil ({})",
                self.frozen_power, self.p_ceil
            ));
        }
        if let PowerSetting::Fixed(p) = self.power {
            if !(p > 0.0) {
                return bad(format!("fixed power must be positive, got {p}"));
            }
        }
        Ok(())
    }

    /// Power source used during `epoch` (counted from 0).
    pub fn power_mode(&self, epoch: usize) -> PowerMode {
        match self.power {
            PowerSetting::Fixed(p) => PowerMode::Fixed(p),
            PowerSetting::Learned if epoch < self.power_freeze_epochs => {
                PowerMode::Fixed(self.frozen_power)
            }
            PowerSetting::Learned => PowerMode::Learned {
                p_ceil: self.p_ceil,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalMetrics {
    pub accuracy: f64,
    /// W.
    pub mean_power: f64,
    pub mean_ce: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochMetrics {
    /// Counted from 1.
    pub epoch: usize,
    pub power_frozen: bool,
    pub train_loss: f64,
    /// Per-sample training power statistics in W.
    pub train_power_mean: f64,
    pub train_power_min: f64,
    pub train_power_max: f64,
    pub test: EvalMetrics,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Weights of the epoch with the highest test accuracy. With learned
    /// power, only epochs after the freeze are candidates.
    pub best: MinnWeights,
    pub best_epoch: usize,
    pub best_metrics: EvalMetrics,
    pub last: MinnWeights,
    pub traces: Vec<EpochMetrics>,
}

pub struct TrainInputs<'a> {
    pub env: &'a Environment,
    pub train_pool: &'a ChannelPool,
    pub test_pool: &'a ChannelPool,
    pub train_data: &'a Dataset,
    pub test_data: &'a Dataset,
}

/// Builds the training and test channel pools from their seed streams.
pub fn channel_pools(
    env: &Environment,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(ChannelPool, ChannelPool)> {
    let train = env.pool(
        cfg.n_train_channels,
        &mut seed::rng(seed, Stream::TrainChannels),
    )?;
    let test = env.pool(
        cfg.n_test_channels,
        &mut seed::rng(seed, Stream::TestChannels),
    )?;
    Ok((train, test))
}

/// Accuracy, mean power and mean cross-entropy over `data`, each sample
/// paired with a pool realization and fresh noise from the evaluation stream.
pub fn evaluate(
    weights: &MinnWeights,
    env: &Environment,
    pool: &ChannelPool,
    data: &Dataset,
    mode: PowerMode,
    phase_map: PhaseMap,
    seed: u64,
    batch_size: usize,
) -> Result<EvalMetrics> {
    if data.is_empty() || pool.is_empty() {
        return Err(MinnError::Contract(
            "evaluation needs data and channels".into(),
        ));
    }
    let mut rng = seed::rng(seed, Stream::Eval);
    let pairing: Vec<usize> = (0..data.len())
        .map(|_| rng.random_range(0..pool.len()))
        .collect();
    let (mut correct, mut power, mut ce) = (0usize, 0.0, 0.0);
    let order: Vec<usize> = (0..data.len()).collect();
    for idx in order.chunks(batch_size.max(1)) {
        let (images, targets) = data.batch_tensors(idx)?;
        let chan_idx: Vec<usize> = idx.iter().map(|&i| pairing[i]).collect();
        let channels = pool.batch(&chan_idx)?;
        let noise = sample_noise_parts(
            &mut rng,
            idx.len(),
            env.geometry.n_r,
            env.geometry.noise_power,
        );
        let mut g = Graph::new();
        let params = weights.attach(&mut g);
        let img = g.constant(images);
        let out = minn_forward(
            &mut g,
            &weights.arch,
            &params,
            img,
            env,
            &channels,
            mode,
            phase_map,
            Some(&noise),
        )?;
        let ces = g.cross_entropy(out.probs, &targets)?;
        ce += g.value(ces).data().iter().sum::<f64>();
        power += g.value(out.power).data().iter().sum::<f64>();
        let classes = weights.arch.classes;
        for (row, &i) in g.value(out.probs).data().chunks(classes).zip(idx) {
            if argmax(row) == data.labels[i] as usize {
                correct += 1;
            }
        }
    }
    let n = data.len() as f64;
    Ok(EvalMetrics {
        accuracy: correct as f64 / n,
        mean_power: power / n,
        mean_ce: ce / n,
    })
}

fn argmax(row: &[f64]) -> usize {
    row.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        })
        .0
}

struct Optimizers {
    tx: AdamState,
    power: AdamState,
    theta: AdamState,
    rx: AdamState,
}

/// Trains from a fresh initialization drawn from the seed's init stream.
pub fn train(cfg: &TrainConfig, inputs: &TrainInputs, seed: u64) -> Result<TrainOutcome> {
    let arch = Architecture {
        image_side: inputs.train_data.rows,
        ..Architecture::for_geometry(&inputs.env.geometry)
    };
    let weights = MinnWeights::init(&arch, &mut seed::rng(seed, Stream::Init));
    train_from(cfg, inputs, seed, weights)
}

/// Trains starting from `weights`.
pub fn train_from(
    cfg: &TrainConfig,
    inputs: &TrainInputs,
    seed: u64,
    mut weights: MinnWeights,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let env = inputs.env;
    let n = inputs.train_data.len();
    if n == 0 || inputs.train_pool.is_empty() {
        return Err(MinnError::Contract(
            "training needs data and channels".into(),
        ));
    }
    let adam = AdamConfig::default();
    let mut opt = Optimizers {
        tx: AdamState::for_params(&weights.tx, adam),
        power: AdamState::for_params(&weights.power, adam),
        theta: AdamState::for_params(std::slice::from_ref(&weights.theta_raw), adam),
        rx: AdamState::for_params(&weights.rx, adam),
    };
    let mut shuffle_rng = seed::rng(seed, Stream::Shuffle);
    let mut pairing_rng = seed::rng(seed, Stream::Pairing);
    let mut noise_rng = seed::rng(seed, Stream::Noise);
    let mut traces = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, EvalMetrics, MinnWeights)> = None;

    for epoch in 0..cfg.epochs {
        let mode = cfg.power_mode(epoch);
        let train_power = matches!(mode, PowerMode::Learned { .. });
        let order = batches(n, cfg.batch_size, &mut shuffle_rng)?;
        let pairing: Vec<usize> = (0..n)
            .map(|_| pairing_rng.random_range(0..inputs.train_pool.len()))
            .collect();
        let (mut loss_sum, mut p_sum, mut p_min, mut p_max) =
            (0.0, 0.0, f64::INFINITY, f64::NEG_INFINITY);
        for (bi, idx) in order.iter().enumerate() {
            let (images, targets) = inputs.train_data.batch_tensors(idx)?;
            let chan_idx: Vec<usize> = idx.iter().map(|&i| pairing[i]).collect();
            let channels = inputs.train_pool.batch(&chan_idx)?;
            let noise = sample_noise_parts(
                &mut noise_rng,
                idx.len(),
                env.geometry.n_r,
                env.geometry.noise_power,
            );

            let mut g = Graph::new();
            let params = weights.attach(&mut g);
            let img = g.constant(images);
            let out = minn_forward(
                &mut g,
                &weights.arch,
                &params,
                img,
                env,
                &channels,
                mode,
                cfg.phase_map,
                Some(&noise),
            )?;
            let loss = relaxed_loss(&mut g, out.probs, &targets, out.power, cfg.gamma)?;
            let lv = g.value(loss).data()[0];
            if !lv.is_finite() {
                return Err(MinnError::NonFiniteLoss {
                    epoch: epoch + 1,
                    batch: bi + 1,
                });
            }
            loss_sum += lv * idx.len() as f64;
            for &p in g.value(out.power).data() {
                p_sum += p;
                p_min = p_min.min(p);
                p_max = p_max.max(p);
            }
            g.backward(loss)?;

            let grads = |vars: &[autodiff::Var]| -> Vec<Tensor> {
                vars.iter().map(|&v| g.grad_or_zeros(v)).collect()
            };
            opt.tx.step(&mut weights.tx, &grads(&params.tx), cfg.lr)?;
            opt.theta.step(
                std::slice::from_mut(&mut weights.theta_raw),
                &grads(std::slice::from_ref(&params.theta_raw)),
                cfg.lr,
            )?;
            opt.rx.step(&mut weights.rx, &grads(&params.rx), cfg.lr)?;
            if train_power {
                opt.power
                    .step(&mut weights.power, &grads(&params.power), cfg.lr)?;
            }
        }

        let test = evaluate(
            &weights,
            env,
            inputs.test_pool,
            inputs.test_data,
            mode,
            cfg.phase_map,
            seed,
            cfg.batch_size,
        )?;
        let m = EpochMetrics {
            epoch: epoch + 1,
            power_frozen: matches!(cfg.power, PowerSetting::Learned) && !train_power,
            train_loss: loss_sum / n as f64,
            train_power_mean: p_sum / n as f64,
            train_power_min: p_min,
            train_power_max: p_max,
            test: test.clone(),
        };
        info!(
            "epoch {:>3}: loss {:.4}  test acc {:.4}  power {:.3} mW",
            m.epoch,
            m.train_loss,
            test.accuracy,
            test.mean_power * 1e3
        );
        // a learned-power run reports a model whose power network is active
        let eligible = !m.power_frozen || cfg.power_freeze_epochs >= cfg.epochs;
        traces.push(m);
        if eligible
            && best
                .as_ref()
                .is_none_or(|(_, b, _)| test.accuracy > b.accuracy)
        {
            best = Some((epoch + 1, test, weights.clone()));
        }
    }
    let (best_epoch, best_metrics, best_weights) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        best: best_weights,
        best_epoch,
        best_metrics,
        last: weights,
        traces,
    })
}

/// Whether a mean power meets `P_max`, and by how many dB.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstraintReport {
    pub satisfied: bool,
    /// `10·log10(P_max / P)`; negative when violated.
    pub margin_db: f64,
}

pub fn constraint_check(mean_power: f64, p_max: f64) -> ConstraintReport {
    ConstraintReport {
        satisfied: mean_power <= p_max,
        margin_db: 10.0 * (p_max / mean_power).log10(),
    }
}
