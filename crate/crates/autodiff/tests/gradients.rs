//! Reverse-mode gradients against central finite differences, op by op.

use autodiff::{grad_check, GradCheckOptions, Graph, Result, Tensor, Var};
use proptest::prelude::*;

const TOL: f64 = 1e-5;

fn weights(n: usize) -> Tensor {
    Tensor::from_vec(
        (0..n)
            .map(|i| 0.5 + ((i * 7919) % 13) as f64 / 13.0)
            .collect(),
    )
}

/// Reduces an arbitrary-shaped output to a scalar with fixed, non-uniform
/// weights so that every output entry contributes a distinct amount.
fn weighted_sum(g: &mut Graph, y: Var) -> Result<Var> {
    let n = g.value(y).numel();
    let flat = g.reshape(y, &[n])?;
    let w = g.constant(weights(n));
    let p = g.mul(flat, w)?;
    Ok(g.sum(p))
}

fn check<F>(params: Vec<Tensor>, build: F) -> f64
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    let report = grad_check(
        |g, v| {
            let y = build(g, v)?;
            weighted_sum(g, y)
        },
        &params,
        GradCheckOptions::default(),
    )
    .expect("gradcheck runs");
    assert_eq!(
        report.entries_checked,
        params.iter().map(Tensor::numel).sum::<usize>()
    );
    report.max_rel_error
}

fn tensor(shape: &'static [usize], lo: f64, hi: f64) -> impl Strategy<Value = Tensor> {
    let n: usize = shape.iter().product();
    prop::collection::vec(lo..hi, n).prop_map(move |d| Tensor::new(shape, d).unwrap())
}

/// Values bounded away from zero in magnitude, for ops with a kink at 0.
fn tensor_off_zero(shape: &'static [usize]) -> impl Strategy<Value = Tensor> {
    let n: usize = shape.iter().product();
    prop::collection::vec((0.05f64..2.0, any::<bool>()), n).prop_map(move |d| {
        Tensor::new(
            shape,
            d.into_iter().map(|(m, s)| if s { m } else { -m }).collect(),
        )
        .unwrap()
    })
}

fn unary(x: Tensor, f: fn(&mut Graph, Var) -> Var) -> f64 {
    check(vec![x], move |g, v| Ok(f(g, v[0])))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn add_sub_mul(a in tensor(&[2, 3], -2.0, 2.0), b in tensor(&[2, 3], -2.0, 2.0)) {
        prop_assert!(check(vec![a.clone(), b.clone()], |g, v| g.add(v[0], v[1])) < TOL);
        prop_assert!(check(vec![a.clone(), b.clone()], |g, v| g.sub(v[0], v[1])) < TOL);
        prop_assert!(check(vec![a, b], |g, v| g.mul(v[0], v[1])) < TOL);
    }

    #[test]
    fn scale_and_shift(x in tensor(&[4], -3.0, 3.0), c in -2.0f64..2.0) {
        prop_assert!(check(vec![x.clone()], move |g, v| Ok(g.scale(v[0], c))) < TOL);
        prop_assert!(check(vec![x], move |g, v| Ok(g.add_scalar(v[0], c))) < TOL);
    }

    #[test]
    fn relu(x in tensor_off_zero(&[6])) {
        prop_assert!(unary(x, Graph::relu) < TOL);
    }

    #[test]
    fn sigmoid_and_atan(x in tensor(&[5], -3.0, 3.0)) {
        prop_assert!(unary(x.clone(), Graph::sigmoid) < TOL);
        prop_assert!(unary(x, Graph::atan) < TOL);
    }

    #[test]
    fn sin(x in tensor(&[5], -1.2, 1.2)) {
        prop_assert!(unary(x, Graph::sin) < TOL);
    }

    #[test]
    fn cos(x in tensor(&[5], 0.3, 2.8)) {
        prop_assert!(unary(x, Graph::cos) < TOL);
    }

    #[test]
    fn exp(x in tensor(&[5], -2.0, 2.0)) {
        prop_assert!(unary(x, Graph::exp) < TOL);
    }

    #[test]
    fn sqrt_and_recip(x in tensor(&[5], 0.5, 4.0)) {
        prop_assert!(unary(x.clone(), Graph::sqrt) < TOL);
        prop_assert!(unary(x, Graph::recip) < TOL);
    }

    #[test]
    fn reductions(x in tensor(&[3, 4], -2.0, 2.0)) {
        // square first so the reduced scalar has a non-constant gradient
        let sum_sq = check(vec![x.clone()], |g, v| {
            let s = g.mul(v[0], v[0])?;
            Ok(g.sum(s))
        });
        let mean_sq = check(vec![x.clone()], |g, v| {
            let s = g.mul(v[0], v[0])?;
            Ok(g.mean(s))
        });
        prop_assert!(sum_sq < TOL);
        prop_assert!(mean_sq < TOL);
        prop_assert!(check(vec![x], |g, v| Ok(g.sum_last(v[0]))) < TOL);
    }

    #[test]
    fn row_scale(x in tensor(&[3, 4], -2.0, 2.0), s in tensor(&[3], -2.0, 2.0)) {
        prop_assert!(check(vec![x, s], |g, v| g.row_scale(v[0], v[1])) < TOL);
    }

    #[test]
    fn matmul_plain(a in tensor(&[3, 4], -1.0, 1.0), b in tensor(&[4, 2], -1.0, 1.0)) {
        prop_assert!(check(vec![a, b], |g, v| g.matmul(v[0], v[1])) < TOL);
    }

    #[test]
    fn matmul_batched(a in tensor(&[2, 3, 4], -1.0, 1.0), b in tensor(&[2, 4, 2], -1.0, 1.0), s in tensor(&[4, 2], -1.0, 1.0)) {
        prop_assert!(check(vec![a.clone(), b], |g, v| g.matmul(v[0], v[1])) < TOL);
        prop_assert!(check(vec![a, s.clone()], |g, v| g.matmul(v[0], v[1])) < TOL);
        let lhs = Tensor::new(&[3, 4], (0..12).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        prop_assert!(check(vec![lhs, Tensor::new(&[2, 4, 2], s.data().repeat(2)).unwrap()], |g, v| g.matmul(v[0], v[1])) < TOL);
    }

    #[test]
    fn linear(x in tensor(&[3, 4], -1.0, 1.0), w in tensor(&[2, 4], -1.0, 1.0), b in tensor(&[2], -1.0, 1.0)) {
        prop_assert!(check(vec![x.clone(), w.clone(), b], |g, v| g.linear(v[0], v[1], Some(v[2]))) < TOL);
        prop_assert!(check(vec![x, w], |g, v| g.linear(v[0], v[1], None)) < TOL);
    }

    #[test]
    fn conv2d(
        x in tensor(&[2, 2, 5, 5], -1.0, 1.0),
        w in tensor(&[3, 2, 3, 3], -1.0, 1.0),
        b in tensor(&[3], -1.0, 1.0),
        stride in 1usize..3,
        padding in 0usize..2,
    ) {
        let err = check(vec![x, w, b], move |g, v| g.conv2d(v[0], v[1], Some(v[2]), stride, padding));
        prop_assert!(err < TOL, "conv2d rel error {err:e}");
    }

    #[test]
    fn max_pool(x in tensor(&[1, 2, 5, 5], -2.0, 2.0)) {
        prop_assert!(check(vec![x], |g, v| g.max_pool2d(v[0], 2)) < TOL);
    }

    #[test]
    fn shape_ops(a in tensor(&[2, 3], -2.0, 2.0), b in tensor(&[2, 2], -2.0, 2.0)) {
        prop_assert!(check(vec![a.clone()], |g, v| g.reshape(v[0], &[3, 2])) < TOL);
        prop_assert!(check(vec![a.clone(), b], |g, v| g.concat(&[v[0], v[1]])) < TOL);
        prop_assert!(check(vec![a.clone()], |g, v| g.narrow(v[0], 1, 2)) < TOL);
        prop_assert!(check(vec![a], |g, v| g.select_row(v[0], 1)) < TOL);
    }

    #[test]
    fn diag_embed(v in tensor(&[4], -2.0, 2.0)) {
        prop_assert!(check(vec![v], |g, v| g.diag_embed(v[0])) < TOL);
    }

    #[test]
    fn softmax_cross_entropy(x in tensor(&[3, 5], -3.0, 3.0), labels in prop::collection::vec(0usize..5, 3)) {
        prop_assert!(check(vec![x.clone()], |g, v| Ok(g.softmax(v[0]))) < TOL);
        let mut t = vec![0.0; 15];
        for (r, &c) in labels.iter().enumerate() {
            t[r * 5 + c] = 1.0;
        }
        let target = Tensor::new(&[3, 5], t).unwrap();
        let err = check(vec![x], move |g, v| {
            let p = g.softmax(v[0]);
            g.cross_entropy(p, &target)
        });
        prop_assert!(err < TOL);
    }

    #[test]
    fn complex_chain(
        theta in tensor(&[3], -3.0, 3.0),
        hr in tensor(&[3, 3], -1.0, 1.0),
        hi in tensor(&[3, 3], -1.0, 1.0),
    ) {
        // |H·diag(exp(-jθ))·1|² summed, the shape of a metasurface response
        let err = check(vec![theta, hr, hi], |g, v| {
            let ph = g.phasor_neg(v[0]);
            let d = g.cdiag(ph)?;
            let h = g.complex(v[1], v[2])?;
            let hd = g.cmatmul(h, d)?;
            let ones = g.complex_constant(Tensor::full(&[3, 1], 1.0), Tensor::zeros(&[3, 1]))?;
            let y = g.cmatmul(hd, ones)?;
            let rr = g.mul(y.re, y.re)?;
            let ii = g.mul(y.im, y.im)?;
            g.add(rr, ii)
        });
        prop_assert!(err < TOL);
    }

    #[test]
    fn softmax_rows_sum_to_one(x in tensor(&[4, 10], -1e3, 1e3)) {
        let mut g = Graph::new();
        let v = g.constant(x);
        let p = g.softmax(v);
        for row in g.value(p).data().chunks(10) {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|&e| (0.0..=1.0).contains(&e)));
        }
    }

    #[test]
    fn cmatmul_is_associative(
        parts in prop::collection::vec(tensor(&[3, 3], -1.0, 1.0), 6),
    ) {
        let mut g = Graph::new();
        let a = g.complex_constant(parts[0].clone(), parts[1].clone()).unwrap();
        let b = g.complex_constant(parts[2].clone(), parts[3].clone()).unwrap();
        let c = g.complex_constant(parts[4].clone(), parts[5].clone()).unwrap();
        let ab = g.cmatmul(a, b).unwrap();
        let left = g.cmatmul(ab, c).unwrap();
        let bc = g.cmatmul(b, c).unwrap();
        let right = g.cmatmul(a, bc).unwrap();
        for (l, r) in [(left.re, right.re), (left.im, right.im)] {
            for (x, y) in g.value(l).data().iter().zip(g.value(r).data()) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn independent_subgraphs_do_not_interact(x in tensor(&[3], -2.0, 2.0), y in tensor(&[3], -2.0, 2.0)) {
        let f = |g: &mut Graph, x: Var| -> Var {
            let s = g.sin(x);
            let e = g.exp(s);
            g.sum(e)
        };
        let mut g1 = Graph::new();
        let xv = g1.param(x.clone());
        let l = f(&mut g1, xv);
        g1.backward(l).unwrap();

        let mut g2 = Graph::new();
        let xv2 = g2.param(x);
        let yv = g2.param(y);
        let fx = f(&mut g2, xv2);
        let y2 = g2.mul(yv, yv).unwrap();
        let gy = g2.sum(y2);
        let l2 = g2.add(fx, gy).unwrap();
        g2.backward(l2).unwrap();
        prop_assert_eq!(g1.grad(xv).unwrap(), g2.grad(xv2).unwrap());
    }

    #[test]
    fn linear_functions_check_tightly(x in tensor(&[3], -1.0, 1.0), c in tensor_off_zero(&[3])) {
        let report = grad_check(
            move |g, v| {
                let cv = g.constant(c.clone());
                let p = g.mul(v[0], cv)?;
                Ok(g.sum(p))
            },
            &[x],
            GradCheckOptions::default(),
        )
        .unwrap();
        prop_assert!(report.max_rel_error < 1e-8);
    }
}

#[test]
fn wrong_vjp_is_detected() {
    // forward x³ with the derivative of x²
    let x = Tensor::from_vec(vec![0.7, -1.3, 2.1]);
    let report = grad_check(
        |g, v| {
            let y = g.custom_unary(
                v[0],
                |t| t.map(|e| e * e * e),
                |input, _out, gy| {
                    let d: Vec<f64> = input
                        .data()
                        .iter()
                        .zip(gy.data())
                        .map(|(x, g)| 2.0 * x * g)
                        .collect();
                    Tensor::new(input.shape(), d).unwrap()
                },
            );
            Ok(g.sum(y))
        },
        &[x],
        GradCheckOptions::default(),
    )
    .unwrap();
    assert!(!report.passes(TOL));
    assert!(report.max_rel_error > 0.1);
    assert!(report.worst.is_some());
}

#[test]
fn correct_custom_vjp_passes() {
    let x = Tensor::from_vec(vec![0.7, -1.3, 2.1]);
    let report = grad_check(
        |g, v| {
            let y = g.custom_unary(
                v[0],
                |t| t.map(|e| e * e * e),
                |input, _out, gy| {
                    let d: Vec<f64> = input
                        .data()
                        .iter()
                        .zip(gy.data())
                        .map(|(x, g)| 3.0 * x * x * g)
                        .collect();
                    Tensor::new(input.shape(), d).unwrap()
                },
            );
            Ok(g.sum(y))
        },
        &[x],
        GradCheckOptions::default(),
    )
    .unwrap();
    assert!(report.passes(TOL));
}

#[test]
fn reused_node_accumulates() {
    let mut g = Graph::new();
    let x = g.param(Tensor::from_vec(vec![1.5, -2.0]));
    let a = g.mul(x, x).unwrap();
    let b = g.add(a, x).unwrap();
    let s = g.sum(b);
    g.backward(s).unwrap();
    assert_eq!(g.grad(x).unwrap().data(), &[4.0, -3.0]);
}
