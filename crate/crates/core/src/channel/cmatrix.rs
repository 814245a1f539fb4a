use autodiff::Tensor;
use num_complex::Complex64;

use crate::error::{MinnError, Result};

/// Dense row-major complex matrix for quantities that are not trained.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(MinnError::Contract(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn column(v: &[Complex64]) -> Self {
        CMatrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn diag(v: &[Complex64]) -> Self {
        let mut m = Self::zeros(v.len(), v.len());
        for (i, &z) in v.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    /// `a · bᴴ`.
    pub fn outer_conj(a: &[Complex64], b: &[Complex64]) -> Self {
        let data = a
            .iter()
            .flat_map(|&x| b.iter().map(move |y| x * y.conj()))
            .collect();
        CMatrix {
            rows: a.len(),
            cols: b.len(),
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn matmul(&self, o: &CMatrix) -> Result<CMatrix> {
        if self.cols != o.rows {
            return Err(MinnError::Contract(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                o.shape()
            )));
        }
        let mut out = CMatrix::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let row = &o.data[k * o.cols..(k + 1) * o.cols];
                for (c, &b) in out.data[i * o.cols..(i + 1) * o.cols].iter_mut().zip(row) {
                    *c += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, o: &CMatrix) -> Result<CMatrix> {
        if self.shape() != o.shape() {
            return Err(MinnError::Contract(format!(
                "cannot add {:?} and {:?}",
                self.shape(),
                o.shape()
            )));
        }
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect();
        Ok(CMatrix { data, ..*self })
    }

    pub fn scale(&self, c: f64) -> CMatrix {
        CMatrix {
            data: self.data.iter().map(|z| z * c).collect(),
            ..*self
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Real and imaginary parts as `[rows, cols]` tensors.
    pub fn to_parts(&self) -> (Tensor, Tensor) {
        let shape = [self.rows, self.cols];
        let re = self.data.iter().map(|z| z.re).collect();
        let im = self.data.iter().map(|z| z.im).collect();
        (
            Tensor::new(&shape, re).expect("matrix shape"),
            Tensor::new(&shape, im).expect("matrix shape"),
        )
    }

    pub fn from_parts(re: &Tensor, im: &Tensor) -> Result<CMatrix> {
        let (rows, cols) = match re.shape() {
            [r, c] => (*r, *c),
            [r] => (*r, 1),
            s => {
                return Err(MinnError::Contract(format!(
                    "expected a matrix, got shape {s:?}"
                )))
            }
        };
        if re.shape() != im.shape() {
            return Err(MinnError::Contract(format!(
                "real part {:?} and imaginary part {:?} differ",
                re.shape(),
                im.shape()
            )));
        }
        let data = re
            .data()
            .iter()
            .zip(im.data())
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect();
        Ok(CMatrix { rows, cols, data })
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Stacks equally shaped matrices into `[count, rows, cols]` real and
/// imaginary tensors.
pub fn stack_parts<'a>(mats: impl IntoIterator<Item = &'a CMatrix>) -> Result<(Tensor, Tensor)> {
    let mut re = Vec::new();
    let mut im = Vec::new();
    let mut shape = None;
    let mut count = 0;
    for m in mats {
        match shape {
            None => shape = Some(m.shape()),
            Some(s) if s != m.shape() => {
                return Err(MinnError::Contract(format!(
                    "cannot stack {:?} with {:?}",
                    s,
                    m.shape()
                )))
            }
            _ => {}
        }
        re.extend(m.data.iter().map(|z| z.re));
        im.extend(m.data.iter().map(|z| z.im));
        count += 1;
    }
    let (r, c) = shape.unwrap_or((0, 0));
    Ok((
        Tensor::new(&[count, r, c], re)?,
        Tensor::new(&[count, r, c], im)?,
    ))
}
