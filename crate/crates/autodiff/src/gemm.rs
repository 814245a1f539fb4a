//! Thin wrapper over `matrixmultiply::dgemm` for row-major slices.

/// Row-major operand, optionally read as its transpose.
#[derive(Clone, Copy)]
pub(crate) struct Operand<'a> {
    pub data: &'a [f64],
    /// Stored as `[k, m]` (resp. `[n, k]`) and read transposed.
    pub transposed: bool,
}

impl<'a> Operand<'a> {
    pub fn plain(data: &'a [f64]) -> Self {
        Operand {
            data,
            transposed: false,
        }
    }

    pub fn t(data: &'a [f64]) -> Self {
        Operand {
            data,
            transposed: true,
        }
    }
}

/// `c = a · b + beta · c` where `a` is `m × k`, `b` is `k × n` and `c` is `m × n`.
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: Operand<'_>,
    b: Operand<'_>,
    beta: f64,
    c: &mut [f64],
) {
    assert!(a.data.len() >= m * k && b.data.len() >= k * n && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for v in c[..m * n].iter_mut() {
            *v *= beta;
        }
        return;
    }
    let (rsa, csa) = if a.transposed { (1, m) } else { (k, 1) };
    let (rsb, csb) = if b.transposed { (1, k) } else { (n, 1) };
    // SAFETY: the bounds above cover every index dgemm touches for these strides.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            rsa as isize,
            csa as isize,
            b.data.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}
