//! 2D cross-correlation and max pooling kernels (NCHW layout).
//!
//! Each sample is lowered into a `[C·kh·kw, Ho·Wo]` column matrix so every
//! direction of the convolution is a GEMM on a cache-sized operand.

use crate::gemm::{gemm, Operand};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeometry {
    pub batch: usize,
    pub in_channels: usize,
    pub height: usize,
    pub width: usize,
    pub out_channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub stride: usize,
    pub padding: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl ConvGeometry {
    /// `None` when the kernel does not fit inside the padded input.
    pub fn new(
        input: &[usize],
        kernel: &[usize],
        stride: usize,
        padding: usize,
    ) -> Option<ConvGeometry> {
        let [batch, in_channels, height, width] = *input else {
            return None;
        };
        let [out_channels, kc, kernel_h, kernel_w] = *kernel else {
            return None;
        };
        if kc != in_channels || stride == 0 {
            return None;
        }
        let (ph, pw) = (height + 2 * padding, width + 2 * padding);
        if kernel_h > ph || kernel_w > pw || kernel_h == 0 || kernel_w == 0 {
            return None;
        }
        Some(ConvGeometry {
            batch,
            in_channels,
            height,
            width,
            out_channels,
            kernel_h,
            kernel_w,
            stride,
            padding,
            out_h: (ph - kernel_h) / stride + 1,
            out_w: (pw - kernel_w) / stride + 1,
        })
    }

    fn patch(&self) -> usize {
        self.in_channels * self.kernel_h * self.kernel_w
    }

    fn positions(&self) -> usize {
        self.out_h * self.out_w
    }

    pub fn output_shape(&self) -> [usize; 4] {
        [self.batch, self.out_channels, self.out_h, self.out_w]
    }
}

/// Output columns `ox` whose input column `ox·stride + kx − padding` lies
/// inside the image, as a half-open range.
fn valid_cols(g: &ConvGeometry, kx: usize) -> (usize, usize) {
    let lo = g.padding.saturating_sub(kx).div_ceil(g.stride);
    let hi = if g.width + g.padding > kx {
        ((g.width + g.padding - kx - 1) / g.stride + 1).min(g.out_w)
    } else {
        0
    };
    (lo.min(hi), hi)
}

/// Visits every in-bounds `(input offset, cols offset, run length)` of one
/// sample's column matrix.
#[inline]
fn for_each_run(g: &ConvGeometry, mut f: impl FnMut(usize, usize, usize)) {
    let p = g.positions();
    for c in 0..g.in_channels {
        for ky in 0..g.kernel_h {
            for kx in 0..g.kernel_w {
                let row = (c * g.kernel_h + ky) * g.kernel_w + kx;
                let (lo, hi) = valid_cols(g, kx);
                if lo >= hi {
                    continue;
                }
                for oy in 0..g.out_h {
                    let Some(y) = (oy * g.stride + ky).checked_sub(g.padding) else {
                        continue;
                    };
                    if y >= g.height {
                        continue;
                    }
                    let x0 = lo * g.stride + kx - g.padding;
                    let src = (c * g.height + y) * g.width + x0;
                    f(src, row * p + oy * g.out_w + lo, hi - lo);
                }
            }
        }
    }
}

/// Fills `cols` (`[C·kh·kw, Ho·Wo]`) from one sample `x` (`[C, H, W]`).
fn im2col(x: &[f64], g: &ConvGeometry, cols: &mut [f64]) {
    cols.fill(0.0);
    let s = g.stride;
    for_each_run(g, |src, dst, len| {
        let out = &mut cols[dst..dst + len];
        if s == 1 {
            out.copy_from_slice(&x[src..src + len]);
        } else {
            for (i, o) in out.iter_mut().enumerate() {
                *o = x[src + i * s];
            }
        }
    });
}

/// Accumulates one sample's column gradient into `dx` (`[C, H, W]`).
fn col2im(cols: &[f64], g: &ConvGeometry, dx: &mut [f64]) {
    let s = g.stride;
    for_each_run(g, |dst, src, len| {
        let from = &cols[src..src + len];
        if s == 1 {
            for (d, v) in dx[dst..dst + len].iter_mut().zip(from) {
                *d += v;
            }
        } else {
            for (i, v) in from.iter().enumerate() {
                dx[dst + i * s] += v;
            }
        }
    });
}

pub(crate) fn conv2d_forward(
    x: &Tensor,
    w: &Tensor,
    b: Option<&Tensor>,
    g: ConvGeometry,
) -> Tensor {
    let (p, k, o) = (g.positions(), g.patch(), g.out_channels);
    let image = g.in_channels * g.height * g.width;
    let mut cols = vec![0.0; k * p];
    let mut y = vec![0.0; g.batch * o * p];
    for (xb, yb) in x.data().chunks(image.max(1)).zip(y.chunks_mut(o * p)) {
        if let Some(b) = b {
            for (row, &bias) in yb.chunks_mut(p).zip(b.data()) {
                row.fill(bias);
            }
        }
        im2col(xb, &g, &mut cols);
        let beta = if b.is_some() { 1.0 } else { 0.0 };
        gemm(
            o,
            k,
            p,
            Operand::plain(w.data()),
            Operand::plain(&cols),
            beta,
            yb,
        );
    }
    Tensor::new(&g.output_shape(), y).expect("conv output shape")
}

#[allow(clippy::type_complexity)]
pub(crate) fn conv2d_backward(
    x: &Tensor,
    w: &Tensor,
    grad_out: &Tensor,
    g: ConvGeometry,
    need_x: bool,
    need_w: bool,
    need_b: bool,
) -> (Option<Tensor>, Option<Tensor>, Option<Tensor>) {
    let (p, k, o) = (g.positions(), g.patch(), g.out_channels);
    let image = g.in_channels * g.height * g.width;
    let dy_all = grad_out.data();
    let db = need_b.then(|| {
        let mut db = vec![0.0; o];
        for dyb in dy_all.chunks(o * p) {
            for (acc, row) in db.iter_mut().zip(dyb.chunks(p)) {
                *acc += row.iter().sum::<f64>();
            }
        }
        Tensor::from_vec(db)
    });
    let mut dw = need_w.then(|| Tensor::zeros(w.shape()));
    let mut dx = need_x.then(|| Tensor::zeros(x.shape()));
    if dw.is_none() && dx.is_none() {
        return (dx, dw, db);
    }
    let mut wt = vec![0.0; k * o];
    if dx.is_some() {
        for (r, row) in w.data().chunks(k).enumerate() {
            for (c, &v) in row.iter().enumerate() {
                wt[c * o + r] = v;
            }
        }
    }
    let mut cols = vec![0.0; k * p];
    let mut dcols = vec![0.0; k * p];
    for bi in 0..g.batch {
        let dyb = &dy_all[bi * o * p..(bi + 1) * o * p];
        if let Some(dw) = dw.as_mut() {
            im2col(&x.data()[bi * image..(bi + 1) * image], &g, &mut cols);
            gemm(
                o,
                p,
                k,
                Operand::plain(dyb),
                Operand::t(&cols),
                1.0,
                dw.data_mut(),
            );
        }
        if let Some(dx) = dx.as_mut() {
            gemm(
                k,
                o,
                p,
                Operand::plain(&wt),
                Operand::plain(dyb),
                0.0,
                &mut dcols,
            );
            col2im(&dcols, &g, &mut dx.data_mut()[bi * image..(bi + 1) * image]);
        }
    }
    (dx, dw, db)
}

#[derive(Clone, Copy, Debug)]
pub struct PoolGeometry {
    pub batch: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub size: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl PoolGeometry {
    pub fn new(input: &[usize], size: usize) -> Option<PoolGeometry> {
        let [batch, channels, height, width] = *input else {
            return None;
        };
        if size == 0 || size > height || size > width {
            return None;
        }
        Some(PoolGeometry {
            batch,
            channels,
            height,
            width,
            size,
            out_h: height / size,
            out_w: width / size,
        })
    }
}

/// Non-overlapping `size × size` max pooling; trailing rows/cols that do not fill
/// a window are dropped. Returns the pooled tensor and the flat argmax of each
/// output cell.
pub(crate) fn max_pool_forward(x: &Tensor, g: PoolGeometry) -> (Tensor, Vec<usize>) {
    let planes = g.batch * g.channels;
    let mut out = Vec::with_capacity(planes * g.out_h * g.out_w);
    let mut argmax = Vec::with_capacity(out.capacity());
    let xd = x.data();
    for plane in 0..planes {
        let base = plane * g.height * g.width;
        for oy in 0..g.out_h {
            for ox in 0..g.out_w {
                let mut best = f64::NEG_INFINITY;
                let mut best_idx = base + oy * g.size * g.width + ox * g.size;
                for dy in 0..g.size {
                    for dx in 0..g.size {
                        let idx = base + (oy * g.size + dy) * g.width + ox * g.size + dx;
                        if xd[idx] > best {
                            best = xd[idx];
                            best_idx = idx;
                        }
                    }
                }
                out.push(best);
                argmax.push(best_idx);
            }
        }
    }
    let t = Tensor::new(&[g.batch, g.channels, g.out_h, g.out_w], out).expect("pool shape");
    (t, argmax)
}
