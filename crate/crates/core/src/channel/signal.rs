use autodiff::{ComplexVar, Graph, Tensor, Var};
use num_complex::Complex64;
use rand::Rng;

use super::cmatrix::CMatrix;
use super::environment::{BatchChannels, ChannelSet};
use super::propagation::complex_normal;
use crate::error::{MinnError, Result};

/// Tolerance on the unit-norm transmit constraint.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// AWGN `CN(0, σ²I)`: each complex entry has `E|n|² = σ²`.
pub fn sample_noise<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    noise_power: f64,
) -> Vec<Complex64> {
    (0..count)
        .map(|_| complex_normal(rng, noise_power))
        .collect()
}

/// [`sample_noise`] laid out as `[rows, cols]` real and imaginary tensors.
pub fn sample_noise_parts<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    noise_power: f64,
) -> (Tensor, Tensor) {
    let n = sample_noise(rng, rows * cols, noise_power);
    let re = n.iter().map(|z| z.re).collect();
    let im = n.iter().map(|z| z.im).collect();
    (
        Tensor::new(&[rows, cols], re).expect("noise shape"),
        Tensor::new(&[rows, cols], im).expect("noise shape"),
    )
}

/// Effective end-to-end channel `H_mr Φ H_tm + H_tr`.
pub fn effective_channel(ch: &ChannelSet, phi: &CMatrix) -> Result<CMatrix> {
    ch.h_mr.matmul(&phi.matmul(&ch.h_tm)?)?.add(&ch.h_tr)
}

fn check_unit_norm(x: &[Complex64]) -> Result<()> {
    let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(MinnError::Contract(format!(
            "transmit vector has norm {norm}, expected 1"
        )));
    }
    Ok(())
}

/// `y = (H_mr Φ H_tm + H_tr)·√P·x + n` for a unit-norm `x`.
pub fn received_signal(
    x: &[Complex64],
    power: f64,
    ch: &ChannelSet,
    phi: &CMatrix,
    noise: Option<&[Complex64]>,
) -> Result<Vec<Complex64>> {
    check_unit_norm(x)?;
    if !(power > 0.0) {
        return Err(MinnError::Contract(format!(
            "transmit power must be positive, got {power}"
        )));
    }
    apply_channel(x, power, ch, phi, noise)
}

/// [`received_signal`] without the norm and power preconditions.
pub fn apply_channel(
    x: &[Complex64],
    power: f64,
    ch: &ChannelSet,
    phi: &CMatrix,
    noise: Option<&[Complex64]>,
) -> Result<Vec<Complex64>> {
    let h = effective_channel(ch, phi)?;
    let y = h.matmul(&CMatrix::column(x))?.scale(power.sqrt());
    let mut y = y.data().to_vec();
    if let Some(n) = noise {
        if n.len() != y.len() {
            return Err(MinnError::Contract(format!(
                "noise has {} entries, expected {}",
                n.len(),
                y.len()
            )));
        }
        y.iter_mut().zip(n).for_each(|(a, b)| *a += b);
    }
    Ok(y)
}

/// Graph form of [`received_signal`] over a minibatch.
///
/// `x` is `[B, N_t]`, `power` is `[B]` in W, `phi` is `[N, N]`; the result is
/// `[B, N_r]`. `noise`, when given, is a `[B, N_r]` draw added as a constant.
pub fn received_signal_graph(
    g: &mut Graph,
    x: ComplexVar,
    power: Var,
    h_tm: &CMatrix,
    channels: &BatchChannels,
    phi: ComplexVar,
    noise: Option<&(Tensor, Tensor)>,
) -> Result<ComplexVar> {
    let (xr, xi) = (g.value(x.re), g.value(x.im));
    let nt = h_tm.cols();
    if xr.rank() != 2 || xr.shape()[1] != nt {
        return Err(MinnError::Contract(format!(
            "transmit batch must be [B, {nt}], got {:?}",
            xr.shape()
        )));
    }
    let batch = xr.shape()[0];
    for (b, (rr, ri)) in xr.data().chunks(nt).zip(xi.data().chunks(nt)).enumerate() {
        let norm = rr.iter().chain(ri).map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(MinnError::Contract(format!(
                "transmit vector {b} has norm {norm}, expected 1"
            )));
        }
    }
    if g.value(power).data().iter().any(|&p| !(p > 0.0)) {
        return Err(MinnError::Contract(
            "transmit power must be positive".into(),
        ));
    }
    apply_channel_graph(g, x, power, h_tm, channels, phi, noise, batch)
}

#[allow(clippy::too_many_arguments)]
fn apply_channel_graph(
    g: &mut Graph,
    x: ComplexVar,
    power: Var,
    h_tm: &CMatrix,
    channels: &BatchChannels,
    phi: ComplexVar,
    noise: Option<&(Tensor, Tensor)>,
    batch: usize,
) -> Result<ComplexVar> {
    let (nt, nr) = (h_tm.cols(), channels.h_tr.0.shape()[1]);
    let (tr, ti) = h_tm.to_parts();
    let htm = g.complex_constant(tr, ti)?;
    let hmr = g.complex_constant(channels.h_mr.0.clone(), channels.h_mr.1.clone())?;
    let htr = g.complex_constant(channels.h_tr.0.clone(), channels.h_tr.1.clone())?;
    let sim_path = g.cmatmul(phi, htm)?;
    let cascade = g.cmatmul(hmr, sim_path)?;
    let h = g.cadd(cascade, htr)?;
    let xc = g.creshape(x, &[batch, nt, 1])?;
    let y = g.cmatmul(h, xc)?;
    let y = g.creshape(y, &[batch, nr])?;
    let amp = g.sqrt(power);
    let mut y = g.crow_scale(y, amp)?;
    if let Some((nr_, ni)) = noise {
        let n = g.complex_constant(nr_.clone(), ni.clone())?;
        y = g.cadd(y, n)?;
    }
    Ok(y)
}
