//! Recorded operations and their vector-Jacobian products.

use crate::conv::{self, ConvGeometry};
use crate::gemm::{gemm, Operand};
use crate::graph::{Node, Var};
use crate::tensor::Tensor;

/// Backward rule of a [`crate::Graph::custom_unary`] node:
/// `(input, output, grad_output) -> grad_input`.
pub type CustomVjp = Box<dyn Fn(&Tensor, &Tensor, &Tensor) -> Tensor>;

pub(crate) enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Relu(Var),
    Sigmoid(Var),
    Atan(Var),
    Sin(Var),
    Cos(Var),
    Exp(Var),
    Sqrt(Var),
    Recip(Var),
    Sum(Var),
    Mean(Var),
    SumLast(Var),
    RowScale {
        x: Var,
        s: Var,
    },
    Matmul {
        a: Var,
        b: Var,
    },
    Linear {
        x: Var,
        w: Var,
        b: Option<Var>,
    },
    Conv2d {
        x: Var,
        w: Var,
        b: Option<Var>,
        geom: ConvGeometry,
    },
    MaxPool2d {
        x: Var,
        argmax: Vec<usize>,
    },
    Reshape(Var),
    Concat(Vec<Var>),
    Narrow {
        x: Var,
        start: usize,
    },
    SelectRow {
        x: Var,
        index: usize,
    },
    DiagEmbed(Var),
    Softmax(Var),
    CrossEntropy {
        pred: Var,
        target: Tensor,
        floor: f64,
    },
    Custom {
        x: Var,
        vjp: CustomVjp,
    },
}

/// Batch layout of a (possibly batched) matrix product operand.
pub(crate) struct MatDims {
    pub batch: usize,
    pub a_batched: bool,
    pub b_batched: bool,
    pub m: usize,
    pub k: usize,
    pub n: usize,
}

pub(crate) fn matmul_dims(a: &[usize], b: &[usize]) -> Option<MatDims> {
    let (a_batch, m, k) = match a {
        [m, k] => (None, *m, *k),
        [bt, m, k] => (Some(*bt), *m, *k),
        _ => return None,
    };
    let (b_batch, k2, n) = match b {
        [k, n] => (None, *k, *n),
        [bt, k, n] => (Some(*bt), *k, *n),
        _ => return None,
    };
    if k != k2 {
        return None;
    }
    let batch = match (a_batch, b_batch) {
        (Some(x), Some(y)) if x != y => return None,
        (Some(x), _) | (_, Some(x)) => x,
        (None, None) => 1,
    };
    Some(MatDims {
        batch,
        a_batched: a_batch.is_some(),
        b_batched: b_batch.is_some(),
        m,
        k,
        n,
    })
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| f(x, y))
        .collect();
    Tensor::new(a.shape(), data).expect("same shape")
}

impl Op {
    pub fn parents(&self) -> Vec<Var> {
        use Op::*;
        match self {
            Leaf => vec![],
            Add(a, b) | Sub(a, b) | Mul(a, b) => vec![*a, *b],
            Scale(x, _)
            | AddScalar(x)
            | Relu(x)
            | Sigmoid(x)
            | Atan(x)
            | Sin(x)
            | Cos(x)
            | Exp(x)
            | Sqrt(x)
            | Recip(x)
            | Sum(x)
            | Mean(x)
            | SumLast(x)
            | Reshape(x)
            | DiagEmbed(x)
            | Softmax(x) => vec![*x],
            RowScale { x, s } => vec![*x, *s],
            Matmul { a, b } => vec![*a, *b],
            Linear { x, w, b } | Conv2d { x, w, b, .. } => {
                let mut v = vec![*x, *w];
                v.extend(b.iter().copied());
                v
            }
            MaxPool2d { x, .. } | Narrow { x, .. } | SelectRow { x, .. } | Custom { x, .. } => {
                vec![*x]
            }
            Concat(parts) => parts.clone(),
            CrossEntropy { pred, .. } => vec![*pred],
        }
    }

    pub fn vjp(&self, nodes: &[Node], out: &Tensor, g: &Tensor) -> Vec<(Var, Tensor)> {
        use Op::*;
        let val = |v: &Var| &nodes[v.0].value;
        let needs = |v: &Var| nodes[v.0].requires_grad;
        match self {
            Leaf => vec![],
            Add(a, b) => vec![(*a, g.clone()), (*b, g.clone())],
            Sub(a, b) => vec![(*a, g.clone()), (*b, g.map(|v| -v))],
            Mul(a, b) => {
                let mut out = Vec::with_capacity(2);
                if needs(a) {
                    out.push((*a, zip_map(g, val(b), |gi, bi| gi * bi)));
                }
                if needs(b) {
                    out.push((*b, zip_map(g, val(a), |gi, ai| gi * ai)));
                }
                out
            }
            Scale(x, c) => vec![(*x, g.map(|v| v * c))],
            AddScalar(x) => vec![(*x, g.clone())],
            Relu(x) => vec![(
                *x,
                zip_map(g, val(x), |gi, xi| if xi > 0.0 { gi } else { 0.0 }),
            )],
            Sigmoid(x) => vec![(*x, zip_map(g, out, |gi, s| gi * s * (1.0 - s)))],
            Atan(x) => vec![(*x, zip_map(g, val(x), |gi, xi| gi / (1.0 + xi * xi)))],
            Sin(x) => vec![(*x, zip_map(g, val(x), |gi, xi| gi * xi.cos()))],
            Cos(x) => vec![(*x, zip_map(g, val(x), |gi, xi| -gi * xi.sin()))],
            Exp(x) => vec![(*x, zip_map(g, out, |gi, e| gi * e))],
            // d sqrt(x)/dx is unbounded at 0; the zero subgradient keeps the tape finite.
            Sqrt(x) => vec![(
                *x,
                zip_map(g, out, |gi, r| if r > 0.0 { gi * 0.5 / r } else { 0.0 }),
            )],
            Recip(x) => vec![(*x, zip_map(g, out, |gi, r| -gi * r * r))],
            Sum(x) => vec![(*x, Tensor::full(val(x).shape(), g.data()[0]))],
            Mean(x) => {
                let n = val(x).numel().max(1) as f64;
                vec![(*x, Tensor::full(val(x).shape(), g.data()[0] / n))]
            }
            SumLast(x) => {
                let xs = val(x).shape();
                let last = *xs.last().unwrap_or(&1);
                let mut d = Vec::with_capacity(val(x).numel());
                for &gi in g.data() {
                    d.extend(std::iter::repeat_n(gi, last));
                }
                vec![(*x, Tensor::new(xs, d).expect("shape"))]
            }
            RowScale { x, s } => {
                let rows = val(s).numel();
                let width = val(x).numel() / rows.max(1);
                let mut outv = Vec::with_capacity(2);
                if needs(x) {
                    let sd = val(s).data();
                    let mut dx = g.clone();
                    for (r, chunk) in dx.data_mut().chunks_mut(width).enumerate() {
                        chunk.iter_mut().for_each(|v| *v *= sd[r]);
                    }
                    outv.push((*x, dx));
                }
                if needs(s) {
                    let ds: Vec<f64> = g
                        .data()
                        .chunks(width)
                        .zip(val(x).data().chunks(width))
                        .map(|(gc, xc)| gc.iter().zip(xc).map(|(a, b)| a * b).sum())
                        .collect();
                    outv.push((*s, Tensor::new(val(s).shape(), ds).expect("shape")));
                }
                outv
            }
            Matmul { a, b } => matmul_vjp(*a, *b, val(a), val(b), g, needs(a), needs(b)),
            Linear { x, w, b } => linear_vjp(*x, *w, *b, val(x), val(w), g, nodes),
            Conv2d { x, w, b, geom } => {
                let (dx, dw, db) = conv::conv2d_backward(
                    val(x),
                    val(w),
                    g,
                    *geom,
                    needs(x),
                    needs(w),
                    b.map(|bv| needs(&bv)).unwrap_or(false),
                );
                let mut outv = Vec::new();
                if let Some(dx) = dx {
                    outv.push((*x, dx));
                }
                if let Some(dw) = dw {
                    outv.push((*w, dw));
                }
                if let (Some(b), Some(db)) = (b, db) {
                    outv.push((*b, db));
                }
                outv
            }
            MaxPool2d { x, argmax } => {
                let mut dx = Tensor::zeros(val(x).shape());
                let d = dx.data_mut();
                for (gi, &src) in g.data().iter().zip(argmax) {
                    d[src] += gi;
                }
                vec![(*x, dx)]
            }
            Reshape(x) => vec![(
                *x,
                g.clone().reshaped(val(x).shape()).expect("reshape back"),
            )],
            Concat(parts) => {
                let total_last = *out.shape().last().unwrap_or(&1);
                let rows = out.numel() / total_last.max(1);
                let mut offset = 0;
                let mut outv = Vec::with_capacity(parts.len());
                for p in parts {
                    let w = *val(p).shape().last().unwrap_or(&1);
                    if needs(p) {
                        let mut d = Vec::with_capacity(rows * w);
                        for r in 0..rows {
                            let base = r * total_last + offset;
                            d.extend_from_slice(&g.data()[base..base + w]);
                        }
                        outv.push((*p, Tensor::new(val(p).shape(), d).expect("shape")));
                    }
                    offset += w;
                }
                outv
            }
            Narrow { x, start } => {
                let xs = val(x).shape();
                let full = *xs.last().unwrap_or(&1);
                let w = *out.shape().last().unwrap_or(&1);
                let mut dx = Tensor::zeros(xs);
                for (r, gc) in g.data().chunks(w).enumerate() {
                    dx.data_mut()[r * full + start..r * full + start + w].copy_from_slice(gc);
                }
                vec![(*x, dx)]
            }
            SelectRow { x, index } => {
                let w = g.numel();
                let mut dx = Tensor::zeros(val(x).shape());
                dx.data_mut()[index * w..(index + 1) * w].copy_from_slice(g.data());
                vec![(*x, dx)]
            }
            DiagEmbed(v) => {
                let n = val(v).numel();
                let d = (0..n).map(|i| g.data()[i * n + i]).collect();
                vec![(*v, Tensor::new(val(v).shape(), d).expect("shape"))]
            }
            Softmax(x) => {
                let c = *out.shape().last().unwrap_or(&1);
                let mut dx = Vec::with_capacity(out.numel());
                for (pc, gc) in out.data().chunks(c).zip(g.data().chunks(c)) {
                    let dot: f64 = pc.iter().zip(gc).map(|(p, gi)| p * gi).sum();
                    dx.extend(pc.iter().zip(gc).map(|(p, gi)| p * (gi - dot)));
                }
                vec![(*x, Tensor::new(out.shape(), dx).expect("shape"))]
            }
            CrossEntropy {
                pred,
                target,
                floor,
            } => {
                let c = *val(pred).shape().last().unwrap_or(&1);
                let mut d = Vec::with_capacity(val(pred).numel());
                for ((pc, tc), gi) in val(pred)
                    .data()
                    .chunks(c)
                    .zip(target.data().chunks(c))
                    .zip(g.data())
                {
                    d.extend(pc.iter().zip(tc).map(
                        |(&p, &t)| {
                            if p >= *floor {
                                -gi * t / p
                            } else {
                                0.0
                            }
                        },
                    ));
                }
                vec![(*pred, Tensor::new(val(pred).shape(), d).expect("shape"))]
            }
            Custom { x, vjp } => vec![(*x, vjp(val(x), out, g))],
        }
    }
}

fn matmul_vjp(
    a: Var,
    b: Var,
    av: &Tensor,
    bv: &Tensor,
    g: &Tensor,
    need_a: bool,
    need_b: bool,
) -> Vec<(Var, Tensor)> {
    let dims = matmul_dims(av.shape(), bv.shape()).expect("validated at forward");
    let MatDims { m, k, n, .. } = dims;
    let mut outv = Vec::with_capacity(2);
    if need_a {
        let mut da = Tensor::zeros(av.shape());
        for t in 0..dims.batch {
            let gs = &g.data()[t * m * n..(t + 1) * m * n];
            let bs = if dims.b_batched {
                &bv.data()[t * k * n..(t + 1) * k * n]
            } else {
                bv.data()
            };
            let (dst, beta) = if dims.a_batched {
                (&mut da.data_mut()[t * m * k..(t + 1) * m * k], 0.0)
            } else {
                (da.data_mut(), 1.0)
            };
            // dA = dC · Bᵀ
            gemm(m, n, k, Operand::plain(gs), Operand::t(bs), beta, dst);
        }
        outv.push((a, da));
    }
    if need_b {
        let mut db = Tensor::zeros(bv.shape());
        for t in 0..dims.batch {
            let gs = &g.data()[t * m * n..(t + 1) * m * n];
            let as_ = if dims.a_batched {
                &av.data()[t * m * k..(t + 1) * m * k]
            } else {
                av.data()
            };
            let (dst, beta) = if dims.b_batched {
                (&mut db.data_mut()[t * k * n..(t + 1) * k * n], 0.0)
            } else {
                (db.data_mut(), 1.0)
            };
            // dB = Aᵀ · dC
            gemm(k, m, n, Operand::t(as_), Operand::plain(gs), beta, dst);
        }
        outv.push((b, db));
    }
    outv
}

fn linear_vjp(
    x: Var,
    w: Var,
    b: Option<Var>,
    xv: &Tensor,
    wv: &Tensor,
    g: &Tensor,
    nodes: &[Node],
) -> Vec<(Var, Tensor)> {
    let (rows, fan_in) = (xv.shape()[0], xv.shape()[1]);
    let fan_out = wv.shape()[0];
    let mut outv = Vec::with_capacity(3);
    if nodes[x.0].requires_grad {
        // dX = dY · W
        let mut dx = Tensor::zeros(xv.shape());
        gemm(
            rows,
            fan_out,
            fan_in,
            Operand::plain(g.data()),
            Operand::plain(wv.data()),
            0.0,
            dx.data_mut(),
        );
        outv.push((x, dx));
    }
    if nodes[w.0].requires_grad {
        // dW = dYᵀ · X
        let mut dw = Tensor::zeros(wv.shape());
        gemm(
            fan_out,
            rows,
            fan_in,
            Operand::t(g.data()),
            Operand::plain(xv.data()),
            0.0,
            dw.data_mut(),
        );
        outv.push((w, dw));
    }
    if let Some(b) = b {
        if nodes[b.0].requires_grad {
            let mut db = vec![0.0; fan_out];
            for row in g.data().chunks(fan_out) {
                for (acc, v) in db.iter_mut().zip(row) {
                    *acc += v;
                }
            }
            outv.push((b, Tensor::from_vec(db)));
        }
    }
    outv
}
