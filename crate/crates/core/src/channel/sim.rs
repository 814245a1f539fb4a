use std::f64::consts::PI;

use autodiff::{ComplexVar, Graph, Var};
use num_complex::Complex64;

use super::cmatrix::CMatrix;
use super::geometry::EnvironmentGeometry;
use crate::error::{MinnError, Result};

/// Inter-layer diffraction matrix shared by every pair of adjacent layers.
#[derive(Clone, Debug, PartialEq)]
pub struct SimPropagation {
    pub psi: CMatrix,
    pub layers: usize,
}

/// Rayleigh-Sommerfeld coefficient between two elements `d` meters apart.
pub fn psi_entry(d: f64, geom: &EnvironmentGeometry) -> Complex64 {
    let wl = geom.wavelength;
    let amplitude = geom.layer_distance * geom.element_area / (d * d);
    let radial = Complex64::new(1.0 / (2.0 * PI * d), -1.0 / wl);
    let phase = if geom.paper_literal_psi {
        2.0 * PI * d
    } else {
        2.0 * PI * d / wl
    };
    radial * amplitude * Complex64::from_polar(1.0, phase)
}

/// `[Ψ]_{n,n'}` from element `n'` of one layer to element `n` of the next.
pub fn sim_propagation_matrix(geom: &EnvironmentGeometry) -> Result<SimPropagation> {
    if !(geom.layer_distance > 0.0) {
        return Err(MinnError::Contract(
            "layer distance must be positive".into(),
        ));
    }
    let (src, dst) = (geom.layer_elements(1), geom.layer_elements(2));
    let mut psi = CMatrix::zeros(geom.n, geom.n);
    for (n, &p) in dst.iter().enumerate() {
        for (m, &q) in src.iter().enumerate() {
            psi[(n, m)] = psi_entry(p.distance(q), geom);
        }
    }
    Ok(SimPropagation {
        psi,
        layers: geom.layers,
    })
}

impl SimPropagation {
    /// Overall response `Φ_L Ψ ⋯ Φ_2 Ψ Φ_1` for phases `theta` (layer-major,
    /// `L·N` entries) with `Φ_l = diag(exp(−jθ_l))`.
    pub fn response(&self, theta: &[f64]) -> Result<CMatrix> {
        let n = self.psi.rows();
        if theta.len() != n * self.layers {
            return Err(MinnError::Contract(format!(
                "expected {} phases, got {}",
                n * self.layers,
                theta.len()
            )));
        }
        let phasors = |l: usize| -> Vec<Complex64> {
            theta[l * n..(l + 1) * n]
                .iter()
                .map(|&t| Complex64::from_polar(1.0, -t))
                .collect()
        };
        let mut phi = CMatrix::diag(&phasors(0));
        for l in 1..self.layers {
            phi = CMatrix::diag(&phasors(l)).matmul(&self.psi.matmul(&phi)?)?;
        }
        Ok(phi)
    }

    /// Graph version of [`SimPropagation::response`]; `theta` has shape `[L, N]`.
    pub fn response_graph(&self, g: &mut Graph, theta: Var) -> Result<ComplexVar> {
        let n = self.psi.rows();
        if g.shape(theta) != [self.layers, n] {
            return Err(MinnError::Contract(format!(
                "phases must have shape [{}, {n}], got {:?}",
                self.layers,
                g.shape(theta)
            )));
        }
        let (pr, pi) = self.psi.to_parts();
        let psi = g.complex_constant(pr, pi)?;
        let first = g.select_row(theta, 0)?;
        let ph = g.phasor_neg(first);
        let mut phi = g.cdiag(ph)?;
        for l in 1..self.layers {
            let row = g.select_row(theta, l)?;
            let ph = g.phasor_neg(row);
            let propagated = g.cmatmul(psi, phi)?;
            phi = diag_mul(g, ph, propagated)?;
        }
        Ok(phi)
    }
}

/// `diag(d) · m` without materializing the diagonal matrix.
fn diag_mul(g: &mut Graph, d: ComplexVar, m: ComplexVar) -> Result<ComplexVar> {
    let a = g.row_scale(m.re, d.re)?;
    let b = g.row_scale(m.im, d.im)?;
    let c = g.row_scale(m.im, d.re)?;
    let e = g.row_scale(m.re, d.im)?;
    let re = g.sub(a, b)?;
    let im = g.add(c, e)?;
    Ok(ComplexVar { re, im })
}
