//! Central finite-difference verification of reverse-mode gradients.

use crate::error::{AutodiffError, Result};
use crate::graph::{Graph, Var};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug)]
pub struct GradCheckOptions {
    /// Perturbation is `step · max(1, |p|)` for each entry `p`.
    pub step: f64,
    /// Lower bound on the per-tensor gradient scale used as the denominator.
    pub abs_floor: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            step: 1e-6,
            abs_floor: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(parameter, entry)` of the worst disagreement.
    pub worst: Option<(usize, usize)>,
    pub analytic: f64,
    pub numeric: f64,
    pub entries_checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, rel_tol: f64) -> bool {
        self.max_rel_error < rel_tol
    }
}

fn evaluate<F>(f: &F, params: &[Tensor]) -> Result<f64>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    let mut g = Graph::new();
    let vars: Vec<Var> = params.iter().map(|p| g.param(p.clone())).collect();
    let loss = f(&mut g, &vars)?;
    g.value(loss).item().ok_or_else(|| {
        AutodiffError::Contract(format!("loss must be scalar, got {:?}", g.shape(loss)))
    })
}

/// Compares `backward` gradients of the scalar built by `f` against central
/// differences over every entry of every parameter. `f` must be deterministic.
///
/// The error of an entry is `|analytic − numeric|` divided by the largest
/// gradient magnitude of its parameter tensor (never less than `abs_floor`),
/// so entries whose true gradient is near zero are not judged on roundoff.
pub fn grad_check<F>(f: F, params: &[Tensor], opts: GradCheckOptions) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    let mut g = Graph::new();
    let vars: Vec<Var> = params.iter().map(|p| g.param(p.clone())).collect();
    let loss = f(&mut g, &vars)?;
    if !g.value(loss).is_finite() {
        return Err(AutodiffError::Contract(
            "loss is not finite at the base point".into(),
        ));
    }
    g.backward(loss)?;
    let analytic: Vec<Tensor> = vars.iter().map(|&v| g.grad_or_zeros(v)).collect();
    drop(g);

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        analytic: 0.0,
        numeric: 0.0,
        entries_checked: 0,
    };
    let mut work: Vec<Tensor> = params.to_vec();
    for (pi, grad) in analytic.iter().enumerate() {
        let mut numeric = Vec::with_capacity(params[pi].numel());
        for idx in 0..params[pi].numel() {
            if !grad.data()[idx].is_finite() {
                return Err(AutodiffError::NonFinite {
                    param: pi,
                    index: idx,
                });
            }
            let base = params[pi].data()[idx];
            let h = opts.step * base.abs().max(1.0);
            work[pi].data_mut()[idx] = base + h;
            let plus = evaluate(&f, &work)?;
            work[pi].data_mut()[idx] = base - h;
            let minus = evaluate(&f, &work)?;
            work[pi].data_mut()[idx] = base;
            let n = (plus - minus) / (2.0 * h);
            if !n.is_finite() {
                return Err(AutodiffError::NonFinite {
                    param: pi,
                    index: idx,
                });
            }
            numeric.push(n);
        }
        let scale = grad
            .data()
            .iter()
            .chain(&numeric)
            .fold(opts.abs_floor, |m, v| m.max(v.abs()));
        for (idx, (&a, &n)) in grad.data().iter().zip(&numeric).enumerate() {
            let rel = (a - n).abs() / scale;
            report.entries_checked += 1;
            if report.worst.is_none() || rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((pi, idx));
                report.analytic = a;
                report.numeric = n;
            }
        }
    }
    Ok(report)
}
