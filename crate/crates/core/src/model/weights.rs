use autodiff::{Graph, Tensor, Var};
use rand::Rng;

use crate::channel::EnvironmentGeometry;
use crate::error::{MinnError, Result};

/// Layer sizes of the four modules.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Architecture {
    pub n_t: usize,
    pub n_r: usize,
    pub n: usize,
    pub layers: usize,
    pub image_side: usize,
    pub conv_channels: usize,
    pub tx_hidden: usize,
    pub power_hidden: usize,
    pub rx_hidden: usize,
    pub classes: usize,
}

impl Architecture {
    pub fn for_geometry(geom: &EnvironmentGeometry) -> Self {
        Architecture {
            n_t: geom.n_t,
            n_r: geom.n_r,
            n: geom.n,
            layers: geom.layers,
            image_side: 28,
            conv_channels: 32,
            tx_hidden: 128,
            power_hidden: 16,
            rx_hidden: 128,
            classes: 10,
        }
    }

    /// Spatial side after the three conv + 2×2 pool stages.
    pub fn pooled_side(&self) -> usize {
        self.image_side / 2 / 2 / 2
    }

    pub fn flat_features(&self) -> usize {
        self.conv_channels * self.pooled_side().pow(2)
    }

    /// Stable text form used for checkpoint digests.
    pub fn describe(&self) -> String {
        format!(
            "n_t={};n_r={};n={};layers={};image_side={};conv_channels={};tx_hidden={};power_hidden={};rx_hidden={};classes={}",
            self.n_t,
            self.n_r,
            self.n,
            self.layers,
            self.image_side,
            self.conv_channels,
            self.tx_hidden,
            self.power_hidden,
            self.rx_hidden,
            self.classes
        )
    }

    fn tx_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let c = self.conv_channels;
        let mut v = Vec::new();
        for (i, cin) in [1, c, c].into_iter().enumerate() {
            v.push((format!("tx.conv{}.weight", i + 1), vec![c, cin, 3, 3]));
            v.push((format!("tx.conv{}.bias", i + 1), vec![c]));
        }
        v.extend(dense(
            "tx.fc",
            &[
                self.flat_features(),
                self.tx_hidden,
                self.tx_hidden,
                2 * self.n_t,
            ],
        ));
        v
    }

    fn power_shapes(&self) -> Vec<(String, Vec<usize>)> {
        dense("power.fc", &[2, self.power_hidden, self.power_hidden, 1])
    }

    fn rx_shapes(&self) -> Vec<(String, Vec<usize>)> {
        dense(
            "rx.fc",
            &[2 * self.n_r, self.rx_hidden, self.rx_hidden, self.classes],
        )
    }
}

fn dense(prefix: &str, widths: &[usize]) -> Vec<(String, Vec<usize>)> {
    widths
        .windows(2)
        .enumerate()
        .flat_map(|(i, w)| {
            [
                (format!("{prefix}{}.weight", i + 1), vec![w[1], w[0]]),
                (format!("{prefix}{}.bias", i + 1), vec![w[1]]),
            ]
        })
        .collect()
}

/// The four trainable parameter groups.
#[derive(Clone, Debug, PartialEq)]
pub struct MinnWeights {
    pub arch: Architecture,
    pub tx: Vec<Tensor>,
    pub power: Vec<Tensor>,
    /// Unconstrained SIM phases, `[L, N]`.
    pub theta_raw: Tensor,
    pub rx: Vec<Tensor>,
}

/// Graph handles for one attached copy of [`MinnWeights`].
#[derive(Clone, Debug)]
pub struct ParamVars {
    pub tx: Vec<Var>,
    pub power: Vec<Var>,
    pub theta_raw: Var,
    pub rx: Vec<Var>,
}

fn uniform_tensor<R: Rng + ?Sized>(rng: &mut R, shape: &[usize], bound: f64) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
    Tensor::new(shape, data).expect("parameter shape")
}

/// Weights and biases drawn from `U(−1/√fan_in, 1/√fan_in)`.
fn init_group<R: Rng + ?Sized>(rng: &mut R, shapes: &[(String, Vec<usize>)]) -> Vec<Tensor> {
    let mut out = Vec::with_capacity(shapes.len());
    let mut fan_in = 1;
    for (name, shape) in shapes {
        if name.ends_with("weight") {
            fan_in = shape[1..].iter().product();
        }
        out.push(uniform_tensor(rng, shape, 1.0 / (fan_in as f64).sqrt()));
    }
    out
}

impl MinnWeights {
    pub fn init<R: Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> Self {
        let tx = init_group(rng, &arch.tx_shapes());
        let mut power = init_group(rng, &arch.power_shapes());
        // zero output bias: the initial power sits near P_ceil / 2
        if let Some(b) = power.last_mut() {
            b.data_mut().fill(0.0);
        }
        let theta_raw = uniform_tensor(rng, &[arch.layers, arch.n], 1.0);
        let rx = init_group(rng, &arch.rx_shapes());
        MinnWeights {
            arch: arch.clone(),
            tx,
            power,
            theta_raw,
            rx,
        }
    }

    pub fn attach(&self, g: &mut Graph) -> ParamVars {
        ParamVars {
            tx: self.tx.iter().map(|t| g.param(t.clone())).collect(),
            power: self.power.iter().map(|t| g.param(t.clone())).collect(),
            theta_raw: g.param(self.theta_raw.clone()),
            rx: self.rx.iter().map(|t| g.param(t.clone())).collect(),
        }
    }

    /// Every tensor with its block name, in serialization order.
    pub fn named(&self) -> Vec<(String, &Tensor)> {
        let a = &self.arch;
        let mut out: Vec<(String, &Tensor)> = Vec::new();
        out.extend(a.tx_shapes().into_iter().map(|(n, _)| n).zip(&self.tx));
        out.extend(
            a.power_shapes()
                .into_iter()
                .map(|(n, _)| n)
                .zip(&self.power),
        );
        out.push(("sim.theta_raw".to_string(), &self.theta_raw));
        out.extend(a.rx_shapes().into_iter().map(|(n, _)| n).zip(&self.rx));
        out
    }

    /// Expected `(name, shape)` of every block for `arch`.
    pub fn layout(arch: &Architecture) -> Vec<(String, Vec<usize>)> {
        let mut v = arch.tx_shapes();
        v.extend(arch.power_shapes());
        v.push(("sim.theta_raw".to_string(), vec![arch.layers, arch.n]));
        v.extend(arch.rx_shapes());
        v
    }

    /// Rebuilds weights from blocks in [`MinnWeights::layout`] order.
    pub fn from_blocks(arch: &Architecture, blocks: Vec<Tensor>) -> Result<Self> {
        let layout = Self::layout(arch);
        if blocks.len() != layout.len() {
            return Err(MinnError::Incompatible(format!(
                "expected {} parameter blocks, found {}",
                layout.len(),
                blocks.len()
            )));
        }
        for ((name, shape), t) in layout.iter().zip(&blocks) {
            if t.shape() != &shape[..] {
                return Err(MinnError::Incompatible(format!(
                    "block {name} has shape {:?}, expected {shape:?}",
                    t.shape()
                )));
            }
        }
        let n_tx = arch.tx_shapes().len();
        let n_p = arch.power_shapes().len();
        let mut it = blocks.into_iter();
        let tx: Vec<Tensor> = it.by_ref().take(n_tx).collect();
        let power: Vec<Tensor> = it.by_ref().take(n_p).collect();
        let theta_raw = it.next().expect("theta block");
        let rx: Vec<Tensor> = it.collect();
        Ok(MinnWeights {
            arch: arch.clone(),
            tx,
            power,
            theta_raw,
            rx,
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.named().iter().map(|(_, t)| t.numel()).sum()
    }
}
