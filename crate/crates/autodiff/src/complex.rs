//! Complex tensors as pairs of real nodes.
//!
//! Every complex quantity is a `(re, im)` pair of ordinary real nodes and every
//! complex operation is a composition of real ones, so gradients are plain real
//! gradients of a real scalar loss with respect to the real and imaginary parts.

use crate::error::{AutodiffError, Result};
use crate::graph::{Graph, Var};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComplexVar {
    pub re: Var,
    pub im: Var,
}

impl Graph {
    pub fn complex(&self, re: Var, im: Var) -> Result<ComplexVar> {
        if self.shape(re) != self.shape(im) {
            return Err(AutodiffError::shape(
                "complex",
                self.shape(re),
                self.shape(im),
            ));
        }
        Ok(ComplexVar { re, im })
    }

    pub fn complex_constant(&mut self, re: Tensor, im: Tensor) -> Result<ComplexVar> {
        if re.shape() != im.shape() {
            return Err(AutodiffError::shape("complex", re.shape(), im.shape()));
        }
        let re = self.constant(re);
        let im = self.constant(im);
        Ok(ComplexVar { re, im })
    }

    pub fn complex_param(&mut self, re: Tensor, im: Tensor) -> Result<ComplexVar> {
        if re.shape() != im.shape() {
            return Err(AutodiffError::shape("complex", re.shape(), im.shape()));
        }
        let re = self.param(re);
        let im = self.param(im);
        Ok(ComplexVar { re, im })
    }

    pub fn cshape(&self, z: ComplexVar) -> &[usize] {
        self.shape(z.re)
    }

    /// `(A.re·B.re − A.im·B.im) + j(A.re·B.im + A.im·B.re)`, with the same
    /// batching rules as [`Graph::matmul`].
    pub fn cmatmul(&mut self, a: ComplexVar, b: ComplexVar) -> Result<ComplexVar> {
        let rr = self.matmul(a.re, b.re)?;
        let ii = self.matmul(a.im, b.im)?;
        let ri = self.matmul(a.re, b.im)?;
        let ir = self.matmul(a.im, b.re)?;
        let re = self.sub(rr, ii)?;
        let im = self.add(ri, ir)?;
        Ok(ComplexVar { re, im })
    }

    pub fn cadd(&mut self, a: ComplexVar, b: ComplexVar) -> Result<ComplexVar> {
        let re = self.add(a.re, b.re)?;
        let im = self.add(a.im, b.im)?;
        Ok(ComplexVar { re, im })
    }

    /// Diagonal matrix from a complex vector.
    pub fn cdiag(&mut self, v: ComplexVar) -> Result<ComplexVar> {
        let re = self.diag_embed(v.re)?;
        let im = self.diag_embed(v.im)?;
        Ok(ComplexVar { re, im })
    }

    /// Unit-modulus phasor `exp(−jθ) = cos θ − j sin θ`, elementwise.
    pub fn phasor_neg(&mut self, theta: Var) -> ComplexVar {
        let re = self.cos(theta);
        let s = self.sin(theta);
        let im = self.scale(s, -1.0);
        ComplexVar { re, im }
    }

    /// Scales row `r` of both parts by the real `s[r]`.
    pub fn crow_scale(&mut self, z: ComplexVar, s: Var) -> Result<ComplexVar> {
        let re = self.row_scale(z.re, s)?;
        let im = self.row_scale(z.im, s)?;
        Ok(ComplexVar { re, im })
    }

    pub fn creshape(&mut self, z: ComplexVar, shape: &[usize]) -> Result<ComplexVar> {
        let re = self.reshape(z.re, shape)?;
        let im = self.reshape(z.im, shape)?;
        Ok(ComplexVar { re, im })
    }
}
