//! Forward constructors for every recorded operation.

use crate::conv::{self, ConvGeometry, PoolGeometry};
use crate::error::{AutodiffError, Result};
use crate::gemm::{gemm, Operand};
use crate::graph::{Graph, Var};
use crate::op::{matmul_dims, Op};
use crate::tensor::Tensor;

/// Floor applied to probabilities before the logarithm in [`Graph::cross_entropy`].
pub const LOG_FLOOR: f64 = 1e-12;

impl Graph {
    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(AutodiffError::shape(op, self.shape(a), self.shape(b)));
        }
        Ok(())
    }

    fn binary(
        &mut self,
        op: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor> {
        self.same_shape(op, a, b)?;
        let (av, bv) = (self.value(a), self.value(b));
        let data = av
            .data()
            .iter()
            .zip(bv.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        Tensor::new(av.shape(), data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.binary("add", a, b, |x, y| x + y)?;
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.binary("sub", a, b, |x, y| x - y)?;
        Ok(self.push(v, Op::Sub(a, b)))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.binary("mul", a, b, |x, y| x * y)?;
        Ok(self.push(v, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let v = self.value(x).map(|e| e * c);
        self.push(v, Op::Scale(x, c))
    }

    pub fn add_scalar(&mut self, x: Var, c: f64) -> Var {
        let v = self.value(x).map(|e| e + c);
        self.push(v, Op::AddScalar(x))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        // NaN must propagate, so no `f64::max`
        let v = self.value(x).map(|e| if e < 0.0 { 0.0 } else { e });
        self.push(v, Op::Relu(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let v = self.value(x).map(|e| {
            if e >= 0.0 {
                1.0 / (1.0 + (-e).exp())
            } else {
                let z = e.exp();
                z / (1.0 + z)
            }
        });
        self.push(v, Op::Sigmoid(x))
    }

    pub fn atan(&mut self, x: Var) -> Var {
        let v = self.value(x).map(f64::atan);
        self.push(v, Op::Atan(x))
    }

    pub fn sin(&mut self, x: Var) -> Var {
        let v = self.value(x).map(f64::sin);
        self.push(v, Op::Sin(x))
    }

    pub fn cos(&mut self, x: Var) -> Var {
        let v = self.value(x).map(f64::cos);
        self.push(v, Op::Cos(x))
    }

    pub fn exp(&mut self, x: Var) -> Var {
        let v = self.value(x).map(f64::exp);
        self.push(v, Op::Exp(x))
    }

    pub fn sqrt(&mut self, x: Var) -> Var {
        let v = self.value(x).map(f64::sqrt);
        self.push(v, Op::Sqrt(x))
    }

    pub fn recip(&mut self, x: Var) -> Var {
        let v = self.value(x).map(|e| 1.0 / e);
        self.push(v, Op::Recip(x))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(x))
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let s = t.data().iter().sum::<f64>() / t.numel().max(1) as f64;
        self.push(Tensor::scalar(s), Op::Mean(x))
    }

    /// Sums over the last axis, dropping it (`[.., n] -> [..]`).
    pub fn sum_last(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let shape = t.shape();
        let last = *shape.last().unwrap_or(&1);
        let data: Vec<f64> = t
            .data()
            .chunks(last.max(1))
            .map(|c| c.iter().sum())
            .collect();
        let out_shape: Vec<usize> = if shape.len() > 1 {
            shape[..shape.len() - 1].to_vec()
        } else {
            vec![1]
        };
        let v = Tensor::new(&out_shape, data).expect("sum_last shape");
        self.push(v, Op::SumLast(x))
    }

    /// Multiplies row `r` of `x` (everything after the leading axis) by `s[r]`.
    pub fn row_scale(&mut self, x: Var, s: Var) -> Result<Var> {
        let (xs, ss) = (self.shape(x), self.shape(s));
        if ss.len() != 1 || xs.is_empty() || xs[0] != ss[0] {
            return Err(AutodiffError::shape("row_scale", xs, ss));
        }
        let rows = ss[0];
        let width = self.value(x).numel() / rows.max(1);
        let sd = self.value(s).data().to_vec();
        let mut v = self.value(x).clone();
        for (r, chunk) in v.data_mut().chunks_mut(width.max(1)).enumerate() {
            chunk.iter_mut().for_each(|e| *e *= sd[r]);
        }
        Ok(self.push(v, Op::RowScale { x, s }))
    }

    /// Matrix product of `[m,k]` / `[B,m,k]` with `[k,n]` / `[B,k,n]`; a 2D
    /// operand is shared across the batch of the other.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let dims = matmul_dims(self.shape(a), self.shape(b))
            .ok_or_else(|| AutodiffError::shape("matmul", self.shape(a), self.shape(b)))?;
        let (m, k, n) = (dims.m, dims.k, dims.n);
        let mut out = vec![0.0; dims.batch * m * n];
        let (av, bv) = (self.value(a).data(), self.value(b).data());
        for t in 0..dims.batch {
            let a_s = if dims.a_batched {
                &av[t * m * k..(t + 1) * m * k]
            } else {
                av
            };
            let b_s = if dims.b_batched {
                &bv[t * k * n..(t + 1) * k * n]
            } else {
                bv
            };
            gemm(
                m,
                k,
                n,
                Operand::plain(a_s),
                Operand::plain(b_s),
                0.0,
                &mut out[t * m * n..(t + 1) * m * n],
            );
        }
        let shape = if dims.a_batched || dims.b_batched {
            vec![dims.batch, m, n]
        } else {
            vec![m, n]
        };
        let v = Tensor::new(&shape, out)?;
        Ok(self.push(v, Op::Matmul { a, b }))
    }

    /// Affine map `W·x + b` applied to each row of `x: [rows, in]`, with
    /// `W: [out, in]` and `b: [out]`.
    pub fn linear(&mut self, x: Var, w: Var, b: Option<Var>) -> Result<Var> {
        let (xs, ws) = (self.shape(x).to_vec(), self.shape(w).to_vec());
        if xs.len() != 2 || ws.len() != 2 || xs[1] != ws[1] {
            return Err(AutodiffError::shape("linear", &xs, &ws));
        }
        let (rows, fan_in, fan_out) = (xs[0], xs[1], ws[0]);
        if let Some(b) = b {
            if self.shape(b) != [fan_out] {
                return Err(AutodiffError::shape(
                    "linear bias",
                    self.shape(b),
                    &[fan_out],
                ));
            }
        }
        let mut out = vec![0.0; rows * fan_out];
        if let Some(b) = b {
            let bd = self.value(b).data();
            for row in out.chunks_mut(fan_out) {
                row.copy_from_slice(bd);
            }
        }
        gemm(
            rows,
            fan_in,
            fan_out,
            Operand::plain(self.value(x).data()),
            Operand::t(self.value(w).data()),
            1.0,
            &mut out,
        );
        let v = Tensor::new(&[rows, fan_out], out)?;
        Ok(self.push(v, Op::Linear { x, w, b }))
    }

    /// Cross-correlation of `x: [B,C,H,W]` with `w: [O,C,kh,kw]` plus optional
    /// per-channel bias `b: [O]`.
    pub fn conv2d(
        &mut self,
        x: Var,
        w: Var,
        b: Option<Var>,
        stride: usize,
        padding: usize,
    ) -> Result<Var> {
        let geom = ConvGeometry::new(self.shape(x), self.shape(w), stride, padding)
            .ok_or_else(|| AutodiffError::shape("conv2d", self.shape(x), self.shape(w)))?;
        if let Some(b) = b {
            if self.shape(b) != [geom.out_channels] {
                return Err(AutodiffError::shape(
                    "conv2d bias",
                    self.shape(b),
                    &[geom.out_channels],
                ));
            }
        }
        let v = conv::conv2d_forward(self.value(x), self.value(w), b.map(|b| self.value(b)), geom);
        Ok(self.push(v, Op::Conv2d { x, w, b, geom }))
    }

    pub fn max_pool2d(&mut self, x: Var, size: usize) -> Result<Var> {
        let geom = PoolGeometry::new(self.shape(x), size)
            .ok_or_else(|| AutodiffError::shape("max_pool2d", self.shape(x), &[size, size]))?;
        let (v, argmax) = conv::max_pool_forward(self.value(x), geom);
        Ok(self.push(v, Op::MaxPool2d { x, argmax }))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let v = self.value(x).clone().reshaped(shape)?;
        Ok(self.push(v, Op::Reshape(x)))
    }

    /// Concatenates along the last axis; all leading axes must agree.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| AutodiffError::Contract("concat of zero tensors".into()))?;
        let lead = self.shape(*first)[..self.shape(*first).len() - 1].to_vec();
        let mut total = 0;
        for p in parts {
            let s = self.shape(*p);
            if s.len() != lead.len() + 1 || s[..lead.len()] != lead[..] {
                return Err(AutodiffError::shape("concat", self.shape(*first), s));
            }
            total += s[s.len() - 1];
        }
        let rows: usize = lead.iter().product();
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for p in parts {
                let w = *self.shape(*p).last().unwrap();
                data.extend_from_slice(&self.value(*p).data()[r * w..(r + 1) * w]);
            }
        }
        let mut shape = lead;
        shape.push(total);
        let v = Tensor::new(&shape, data)?;
        Ok(self.push(v, Op::Concat(parts.to_vec())))
    }

    /// Slice `[start, start + len)` of the last axis.
    pub fn narrow(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let shape = self.shape(x).to_vec();
        let full = *shape.last().unwrap_or(&0);
        if start + len > full {
            return Err(AutodiffError::shape("narrow", &shape, &[start, len]));
        }
        let rows = self.value(x).numel() / full.max(1);
        let mut data = Vec::with_capacity(rows * len);
        for r in 0..rows {
            data.extend_from_slice(&self.value(x).data()[r * full + start..r * full + start + len]);
        }
        let mut out_shape = shape;
        *out_shape.last_mut().unwrap() = len;
        let v = Tensor::new(&out_shape, data)?;
        Ok(self.push(v, Op::Narrow { x, start }))
    }

    /// Row `index` of the leading axis (`[R, ..] -> [..]`).
    pub fn select_row(&mut self, x: Var, index: usize) -> Result<Var> {
        let shape = self.shape(x).to_vec();
        if shape.len() < 2 || index >= shape[0] {
            return Err(AutodiffError::shape("select_row", &shape, &[index]));
        }
        let w: usize = shape[1..].iter().product();
        let data = self.value(x).data()[index * w..(index + 1) * w].to_vec();
        let v = Tensor::new(&shape[1..], data)?;
        Ok(self.push(v, Op::SelectRow { x, index }))
    }

    /// `[n] -> [n, n]` with `v` on the diagonal.
    pub fn diag_embed(&mut self, v: Var) -> Result<Var> {
        if self.shape(v).len() != 1 {
            return Err(AutodiffError::shape("diag_embed", self.shape(v), &[]));
        }
        let n = self.shape(v)[0];
        let mut data = vec![0.0; n * n];
        for (i, e) in self.value(v).data().iter().enumerate() {
            data[i * n + i] = *e;
        }
        let t = Tensor::new(&[n, n], data)?;
        Ok(self.push(t, Op::DiagEmbed(v)))
    }

    /// Softmax over the last axis, shifted by the row maximum.
    pub fn softmax(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let c = *t.shape().last().unwrap_or(&1);
        let mut data = Vec::with_capacity(t.numel());
        for row in t.data().chunks(c.max(1)) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let start = data.len();
            let mut total = 0.0;
            for &e in row {
                let z = (e - max).exp();
                total += z;
                data.push(z);
            }
            data[start..].iter_mut().for_each(|z| *z /= total);
        }
        let v = Tensor::new(t.shape(), data).expect("softmax shape");
        self.push(v, Op::Softmax(x))
    }

    /// Per-row `−Σ_c t_c · ln(max(p_c, 1e-12))` for probabilities `pred: [R, C]`
    /// against targets of the same shape. Returns `[R]`.
    pub fn cross_entropy(&mut self, pred: Var, target: &Tensor) -> Result<Var> {
        let ps = self.shape(pred);
        if ps != target.shape() || ps.len() != 2 {
            return Err(AutodiffError::shape("cross_entropy", ps, target.shape()));
        }
        let c = ps[1];
        let data: Vec<f64> = self
            .value(pred)
            .data()
            .chunks(c)
            .zip(target.data().chunks(c))
            .map(|(pc, tc)| {
                -pc.iter()
                    .zip(tc)
                    .filter(|(_, &t)| t != 0.0)
                    .map(|(&p, &t)| t * if p < LOG_FLOOR { LOG_FLOOR } else { p }.ln())
                    .sum::<f64>()
            })
            .collect();
        let v = Tensor::new(&[ps[0]], data)?;
        Ok(self.push(
            v,
            Op::CrossEntropy {
                pred,
                target: target.clone(),
                floor: LOG_FLOOR,
            },
        ))
    }

    /// Elementwise clamp to `[lo, hi]`; the gradient is passed where the input
    /// lies inside the interval and zero outside.
    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Var {
        self.custom_unary(
            x,
            move |t| {
                t.map(|e| {
                    if e < lo {
                        lo
                    } else if e > hi {
                        hi
                    } else {
                        e
                    }
                })
            },
            move |input, _, g| {
                let data = input
                    .data()
                    .iter()
                    .zip(g.data())
                    .map(|(&e, &gi)| if (lo..=hi).contains(&e) { gi } else { 0.0 })
                    .collect();
                Tensor::new(input.shape(), data).expect("clamp shape")
            },
        )
    }

    /// Records an elementwise-shaped unary op with caller-supplied forward value
    /// and backward rule `(input, output, grad_output) -> grad_input`.
    pub fn custom_unary(
        &mut self,
        x: Var,
        forward: impl Fn(&Tensor) -> Tensor,
        vjp: impl Fn(&Tensor, &Tensor, &Tensor) -> Tensor + 'static,
    ) -> Var {
        let v = forward(self.value(x));
        self.push(
            v,
            Op::Custom {
                x,
                vjp: Box::new(vjp),
            },
        )
    }
}
