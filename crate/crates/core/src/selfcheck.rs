//! Built-in verification: gradient checks over every differentiable operation
//! and the composed network, plus closed-form channel anchors.

use autodiff::{grad_check, AutodiffError, GradCheckOptions, Graph, Tensor, Var};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{
    psi_entry, sample_noise, sample_noise_parts, sim_propagation_matrix, CMatrix, Complex64,
};
use crate::channel::{Environment, EnvironmentGeometry};
use crate::error::{MinnError, Result};
use crate::model::{
    minn_forward, relaxed_loss, Architecture, MinnWeights, ParamVars, PhaseMap, PowerMode,
};
use crate::seed::{self, Stream};

/// Largest accepted relative gradient error.
pub const GRADCHECK_TOL: f64 = 1e-4;

/// Facing-element diffraction coefficient under the default geometry.
pub const PSI_FACING: (f64, f64) = (3.9789e-4, -2.5e-2);

#[derive(Clone, Debug, PartialEq)]
pub struct GradResult {
    pub name: String,
    pub max_rel_error: f64,
    pub entries: usize,
}

impl GradResult {
    pub fn passed(&self) -> bool {
        self.max_rel_error < GRADCHECK_TOL
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnchorResult {
    pub name: &'static str,
    pub detail: String,
    pub passed: bool,
}

type Build = Box<dyn Fn(&mut Graph, &[Var]) -> autodiff::Result<Var>>;

struct OpCase {
    name: &'static str,
    params: Vec<Tensor>,
    build: Build,
}

fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random_range(lo..hi)).collect())
        .expect("shape matches data")
}

/// Magnitudes in `[0.05, 2)` with random signs, away from kinks at zero.
fn off_zero(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let m = rng.random_range(0.05..2.0);
            if rng.random_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect();
    Tensor::new(shape, data).expect("shape matches data")
}

fn one_hot(rng: &mut ChaCha8Rng, rows: usize, classes: usize) -> Tensor {
    let mut t = Tensor::zeros(&[rows, classes]);
    for r in 0..rows {
        let c = rng.random_range(0..classes);
        t.data_mut()[r * classes + c] = 1.0;
    }
    t
}

/// Collapses any output to a scalar with distinct fixed weights per entry.
fn weighted_sum(g: &mut Graph, y: Var) -> autodiff::Result<Var> {
    let n = g.value(y).numel();
    let flat = g.reshape(y, &[n])?;
    let w = Tensor::from_vec(
        (0..n)
            .map(|i| 0.5 + ((i * 7919) % 13) as f64 / 13.0)
            .collect(),
    );
    let w = g.constant(w);
    let p = g.mul(flat, w)?;
    Ok(g.sum(p))
}

fn unary(name: &'static str, x: Tensor, f: fn(&mut Graph, Var) -> Var) -> OpCase {
    OpCase {
        name,
        params: vec![x],
        build: Box::new(move |g, v| Ok(f(g, v[0]))),
    }
}

fn op_cases(rng: &mut ChaCha8Rng) -> Vec<OpCase> {
    let mut c = Vec::new();
    let (a, b) = (
        uniform(rng, &[2, 3], -2.0, 2.0),
        uniform(rng, &[2, 3], -2.0, 2.0),
    );
    c.push(OpCase {
        name: "add",
        params: vec![a.clone(), b.clone()],
        build: Box::new(|g, v| g.add(v[0], v[1])),
    });
    c.push(OpCase {
        name: "sub",
        params: vec![a.clone(), b.clone()],
        build: Box::new(|g, v| g.sub(v[0], v[1])),
    });
    c.push(OpCase {
        name: "mul",
        params: vec![a.clone(), b],
        build: Box::new(|g, v| g.mul(v[0], v[1])),
    });
    let k = rng.random_range(-2.0..2.0);
    c.push(OpCase {
        name: "scale",
        params: vec![a.clone()],
        build: Box::new(move |g, v| Ok(g.scale(v[0], k))),
    });
    c.push(OpCase {
        name: "add_scalar",
        params: vec![a.clone()],
        build: Box::new(move |g, v| Ok(g.add_scalar(v[0], k))),
    });
    c.push(unary("relu", off_zero(rng, &[6]), Graph::relu));
    c.push(unary(
        "sigmoid",
        uniform(rng, &[5], -3.0, 3.0),
        Graph::sigmoid,
    ));
    c.push(unary("atan", uniform(rng, &[5], -3.0, 3.0), Graph::atan));
    c.push(unary("sin", uniform(rng, &[5], -3.0, 3.0), Graph::sin));
    c.push(unary("cos", uniform(rng, &[5], -3.0, 3.0), Graph::cos));
    c.push(unary("exp", uniform(rng, &[5], -2.0, 2.0), Graph::exp));
    c.push(unary("sqrt", uniform(rng, &[5], 0.5, 4.0), Graph::sqrt));
    c.push(unary("recip", uniform(rng, &[5], 0.5, 4.0), Graph::recip));
    c.push(unary("sum", uniform(rng, &[3, 4], -2.0, 2.0), Graph::sum));
    c.push(unary("mean", uniform(rng, &[3, 4], -2.0, 2.0), Graph::mean));
    c.push(unary(
        "sum_last",
        uniform(rng, &[3, 4], -2.0, 2.0),
        Graph::sum_last,
    ));
    c.push(unary(
        "softmax",
        uniform(rng, &[3, 5], -3.0, 3.0),
        Graph::softmax,
    ));
    // entries kept at least 0.05 from either bound
    let mut x = off_zero(rng, &[6]);
    x.data_mut().iter_mut().for_each(|e| *e *= 0.45);
    c.push(OpCase {
        name: "clamp",
        params: vec![x],
        build: Box::new(|g, v| Ok(g.clamp(v[0], -0.5, 0.5))),
    });
    c.push(OpCase {
        name: "row_scale",
        params: vec![
            uniform(rng, &[3, 4], -2.0, 2.0),
            uniform(rng, &[3], -2.0, 2.0),
        ],
        build: Box::new(|g, v| g.row_scale(v[0], v[1])),
    });
    c.push(OpCase {
        name: "matmul",
        params: vec![
            uniform(rng, &[3, 4], -1.0, 1.0),
            uniform(rng, &[4, 2], -1.0, 1.0),
        ],
        build: Box::new(|g, v| g.matmul(v[0], v[1])),
    });
    c.push(OpCase {
        name: "matmul_batched",
        params: vec![
            uniform(rng, &[2, 3, 4], -1.0, 1.0),
            uniform(rng, &[2, 4, 2], -1.0, 1.0),
        ],
        build: Box::new(|g, v| g.matmul(v[0], v[1])),
    });
    c.push(OpCase {
        name: "linear",
        params: vec![
            uniform(rng, &[3, 4], -1.0, 1.0),
            uniform(rng, &[2, 4], -1.0, 1.0),
            uniform(rng, &[2], -1.0, 1.0),
        ],
        build: Box::new(|g, v| g.linear(v[0], v[1], Some(v[2]))),
    });
    let (stride, padding) = (rng.random_range(1..3), rng.random_range(0..2));
    c.push(OpCase {
        name: "conv2d",
        params: vec![
            uniform(rng, &[2, 2, 5, 5], -1.0, 1.0),
            uniform(rng, &[3, 2, 3, 3], -1.0, 1.0),
            uniform(rng, &[3], -1.0, 1.0),
        ],
        build: Box::new(move |g, v| g.conv2d(v[0], v[1], Some(v[2]), stride, padding)),
    });
    c.push(OpCase {
        name: "max_pool2d",
        params: vec![uniform(rng, &[1, 2, 4, 4], -2.0, 2.0)],
        build: Box::new(|g, v| g.max_pool2d(v[0], 2)),
    });
    let (p, q) = (
        uniform(rng, &[2, 3], -2.0, 2.0),
        uniform(rng, &[2, 2], -2.0, 2.0),
    );
    c.push(OpCase {
        name: "reshape",
        params: vec![p.clone()],
        build: Box::new(|g, v| g.reshape(v[0], &[3, 2])),
    });
    c.push(OpCase {
        name: "concat",
        params: vec![p.clone(), q],
        build: Box::new(|g, v| g.concat(&[v[0], v[1]])),
    });
    c.push(OpCase {
        name: "narrow",
        params: vec![p.clone()],
        build: Box::new(|g, v| g.narrow(v[0], 1, 2)),
    });
    c.push(OpCase {
        name: "select_row",
        params: vec![p],
        build: Box::new(|g, v| g.select_row(v[0], 1)),
    });
    c.push(OpCase {
        name: "diag_embed",
        params: vec![uniform(rng, &[4], -2.0, 2.0)],
        build: Box::new(|g, v| g.diag_embed(v[0])),
    });
    let target = one_hot(rng, 3, 5);
    c.push(OpCase {
        name: "cross_entropy",
        params: vec![uniform(rng, &[3, 5], -3.0, 3.0)],
        build: Box::new(move |g, v| {
            let p = g.softmax(v[0]);
            g.cross_entropy(p, &target)
        }),
    });
    c.push(OpCase {
        name: "complex_chain",
        params: vec![
            uniform(rng, &[3], -3.0, 3.0),
            uniform(rng, &[3, 3], -1.0, 1.0),
            uniform(rng, &[3, 3], -1.0, 1.0),
            uniform(rng, &[3, 1], -1.0, 1.0),
            uniform(rng, &[3, 1], -1.0, 1.0),
            uniform(rng, &[3], 0.5, 2.0),
        ],
        // |reshape(s ⊙ (H·diag(e^{-jθ})·z + z))|², exercising every complex op
        build: Box::new(|g, v| {
            let ph = g.phasor_neg(v[0]);
            let d = g.cdiag(ph)?;
            let h = g.complex(v[1], v[2])?;
            let z = g.complex(v[3], v[4])?;
            let hd = g.cmatmul(h, d)?;
            let y = g.cmatmul(hd, z)?;
            let y = g.cadd(y, z)?;
            let y = g.crow_scale(y, v[5])?;
            let y = g.creshape(y, &[3])?;
            let rr = g.mul(y.re, y.re)?;
            let ii = g.mul(y.im, y.im)?;
            g.add(rr, ii)
        }),
    });
    c
}

/// Finite-difference checks of every differentiable operation at `cases`
/// random points each; reports the worst error per operation.
pub fn op_gradchecks(seed: u64, cases: usize) -> Result<Vec<GradResult>> {
    let mut rng = seed::rng(seed, Stream::Eval);
    let mut worst: Vec<GradResult> = Vec::new();
    for _ in 0..cases.max(1) {
        for (i, case) in op_cases(&mut rng).into_iter().enumerate() {
            let build = &case.build;
            let report = grad_check(
                |g, v| {
                    let y = build(g, v)?;
                    weighted_sum(g, y)
                },
                &case.params,
                GradCheckOptions::default(),
            )?;
            if worst.len() <= i {
                worst.push(GradResult {
                    name: case.name.to_string(),
                    max_rel_error: 0.0,
                    entries: 0,
                });
            }
            let w = &mut worst[i];
            w.max_rel_error = w.max_rel_error.max(report.max_rel_error);
            w.entries += report.entries_checked;
        }
    }
    Ok(worst)
}

/// Geometry of the composed-network check: two TX and two RX antennas, a
/// 2×2 two-layer SIM.
pub fn tiny_geometry() -> EnvironmentGeometry {
    EnvironmentGeometry {
        n_t: 2,
        n_r: 2,
        n: 4,
        layers: 2,
        ..Default::default()
    }
}

/// CNN and MLP widths shrunk so every weight entry can be differenced.
pub fn tiny_architecture(geom: &EnvironmentGeometry) -> Architecture {
    Architecture {
        image_side: 8,
        conv_channels: 3,
        tx_hidden: 8,
        rx_hidden: 16,
        ..Architecture::for_geometry(geom)
    }
}

fn contract(e: MinnError) -> AutodiffError {
    AutodiffError::Contract(e.to_string())
}

/// Finite-difference check of the relaxed loss of the full network (learned
/// power, frozen noise) over every parameter, plus the phase gradient under
/// the alternative phase map.
pub fn network_gradchecks(seed: u64) -> Result<Vec<GradResult>> {
    let geom = tiny_geometry();
    let env = Environment::new(geom.clone(), seed)?;
    let arch = tiny_architecture(&geom);
    let w = MinnWeights::init(&arch, &mut seed::rng(seed, Stream::Init));
    let b = 3;
    let pool = env.pool(b, &mut seed::rng(seed, Stream::TrainChannels))?;
    let channels = pool.batch(&[0, 1, 2])?;
    let mut rng = seed::rng(seed, Stream::DataSubset);
    let side = arch.image_side;
    let images = uniform(&mut rng, &[b, 1, side, side], 0.0, 1.0);
    let targets = one_hot(&mut rng, b, 10);
    let noise = sample_noise_parts(
        &mut seed::rng(seed, Stream::Noise),
        b,
        geom.n_r,
        geom.noise_power,
    );

    let params: Vec<Tensor> = w.named().into_iter().map(|(_, t)| t.clone()).collect();
    let (nt, np) = (w.tx.len(), w.power.len());
    let full = grad_check(
        |g, vars| {
            let pv = ParamVars {
                tx: vars[..nt].to_vec(),
                power: vars[nt..nt + np].to_vec(),
                theta_raw: vars[nt + np],
                rx: vars[nt + np + 1..].to_vec(),
            };
            let img = g.constant(images.clone());
            let out = minn_forward(
                g,
                &arch,
                &pv,
                img,
                &env,
                &channels,
                PowerMode::Learned { p_ceil: 0.2 },
                PhaseMap::Squashed,
                Some(&noise),
            )
            .map_err(contract)?;
            relaxed_loss(g, out.probs, &targets, out.power, 1e-2).map_err(contract)
        },
        &params,
        GradCheckOptions::default(),
    )?;
    let literal = grad_check(
        |g, vars| {
            let pv = ParamVars {
                theta_raw: vars[0],
                ..w.attach(g)
            };
            let img = g.constant(images.clone());
            let out = minn_forward(
                g,
                &arch,
                &pv,
                img,
                &env,
                &channels,
                PowerMode::Fixed(0.1),
                PhaseMap::PaperLiteral,
                Some(&noise),
            )
            .map_err(contract)?;
            relaxed_loss(g, out.probs, &targets, out.power, 0.0).map_err(contract)
        },
        std::slice::from_ref(&w.theta_raw),
        GradCheckOptions::default(),
    )?;
    Ok(vec![
        GradResult {
            name: "minn_full".into(),
            max_rel_error: full.max_rel_error,
            entries: full.entries_checked,
        },
        GradResult {
            name: "minn_phases_literal_map".into(),
            max_rel_error: literal.max_rel_error,
            entries: literal.entries_checked,
        },
    ])
}

/// Closed-form checks of the diffraction coefficient, the SIM response and
/// the noise statistics.
pub fn channel_anchors(seed: u64) -> Result<Vec<AnchorResult>> {
    let mut out = Vec::new();
    let g = EnvironmentGeometry::default();
    let z = psi_entry(g.layer_distance, &g);
    let want = Complex64::new(PSI_FACING.0, PSI_FACING.1);
    let rel = (z - want).norm() / want.norm();
    out.push(AnchorResult {
        name: "psi_facing_element",
        detail: format!("{:.6e}{:+.6e}j, relative error {rel:.2e}", z.re, z.im),
        passed: rel < 1e-6,
    });

    let g1 = EnvironmentGeometry {
        layers: 1,
        ..Default::default()
    };
    let phi = sim_propagation_matrix(&g1)?.response(&vec![0.0; g1.n])?;
    out.push(AnchorResult {
        name: "identity_response",
        detail: format!("L = 1, theta = 0, N = {}", g1.n),
        passed: phi == CMatrix::identity(g1.n),
    });

    let mut rng = seed::rng(seed, Stream::Eval);
    let theta: Vec<f64> = (0..g1.n).map(|_| rng.random_range(-50.0..50.0)).collect();
    let phi = sim_propagation_matrix(&g1)?.response(&theta)?;
    let dev = (0..g1.n)
        .map(|i| (phi[(i, i)].norm() - 1.0).abs())
        .fold(0.0, f64::max);
    out.push(AnchorResult {
        name: "unit_modulus",
        detail: format!("max ||phi_nn| - 1| = {dev:.2e}"),
        passed: dev < 1e-12,
    });

    let draws = 100_000;
    let noise = sample_noise(&mut seed::rng(seed, Stream::Noise), draws, g.noise_power);
    let var = noise.iter().map(|z| z.norm_sqr()).sum::<f64>() / draws as f64;
    let rel = (var - g.noise_power).abs() / g.noise_power;
    out.push(AnchorResult {
        name: "noise_variance",
        detail: format!("{var:.4e} W over {draws} draws, relative error {rel:.4}"),
        passed: rel < 0.03,
    });
    Ok(out)
}
