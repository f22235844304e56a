use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;

fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

fn eval(prim: Primitive, inputs: &[Tensor]) -> Tensor {
    let refs: Vec<&Tensor> = inputs.iter().collect();
    forward(prim, &refs).unwrap()
}

#[test]
fn matmul_by_identity_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in 1..5 {
        let x = uniform(&mut rng, &[3, k], -1.0, 1.0);
        assert_eq!(eval(Primitive::MatMul, &[Tensor::identity(3), x.clone()]), x);
    }
    let v = Tensor::vector(vec![1.0, -2.0, 0.5]);
    assert_eq!(eval(Primitive::MatMul, &[Tensor::identity(3), v.clone()]), v);
}

#[test]
fn softmax_of_zeros_is_uniform() {
    let p = eval(Primitive::Softmax, &[Tensor::vector(vec![0.0; 4])]);
    assert_eq!(p.values(), &[0.25; 4]);
}

#[test]
#[allow(clippy::approx_constant)]
fn entropy_of_fair_coin_matches_scalar_evaluation() {
    let p = eval(Primitive::Softmax, &[Tensor::vector(vec![0.0, 0.0])]);
    let h = eval(Primitive::Entropy, std::slice::from_ref(&p)).item().unwrap();
    let mut brute = 0.0;
    for &pi in p.values() {
        brute -= pi * pi.ln();
    }
    assert!((h - brute).abs() < 1e-15);
    assert!((h - 0.693147).abs() < 1e-6);
}

#[test]
fn shape_mismatches_are_rejected_with_names() {
    let a = Tensor::zeros(&[2, 3]);
    let b = Tensor::zeros(&[2, 3]);
    let err = forward(Primitive::MatMul, &[&a, &b]).unwrap_err();
    match err {
        Error::Shape { op, shapes } => {
            assert_eq!(op, "matmul");
            assert!(shapes.contains("[2, 3]"));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(forward(Primitive::Add, &[&Tensor::zeros(&[2]), &Tensor::zeros(&[3])]).is_err());
    assert!(forward(Primitive::Mul, &[&Tensor::zeros(&[2]), &Tensor::zeros(&[1, 2])]).is_err());
    assert!(forward(Primitive::Row(2), &[&Tensor::zeros(&[2, 2])]).is_err());
    assert!(forward(Primitive::Nll(3), &[&Tensor::zeros(&[3])]).is_err());
    assert!(forward(Primitive::Concat, &[&Tensor::zeros(&[2, 1])]).is_err());
}

#[test]
fn empty_vectors_are_rejected() {
    let empty = Tensor::vector(vec![]);
    for prim in [Primitive::LogSoftmax, Primitive::Entropy, Primitive::Softmax] {
        assert!(matches!(forward(prim, &[&empty]), Err(Error::EmptyInput { .. })), "{prim:?}");
    }
}

#[test]
fn backward_of_sum_is_all_ones() {
    let mut store = ParamStore::new();
    let p = store.add("p", Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap());
    let mut tape = Tape::new(&store);
    let x = tape.param(p);
    let loss = tape.sum(x).unwrap();
    let grads = tape.backward(loss).unwrap();
    assert_eq!(grads[p], Tensor::filled(&[2, 3], 1.0));
}

#[test]
fn zero_scaled_loss_has_exactly_zero_gradient() {
    let mut store = ParamStore::new();
    let p = store.add("p", Tensor::vector(vec![0.3, -0.7, 1.1]));
    let unused = store.add("unused", Tensor::vector(vec![1.0]));
    let mut tape = Tape::new(&store);
    let x = tape.param(p);
    let t = tape.tanh(x).unwrap();
    let s = tape.sum(t).unwrap();
    let loss = tape.scale(s, 0.0).unwrap();
    let grads = tape.backward(loss).unwrap();
    assert!(grads[p].values().iter().all(|&g| g == 0.0));
    assert!(grads.is_all_zero(unused));
    assert_eq!(grads.len(), store.len());
}

#[test]
fn non_scalar_loss_is_rejected() {
    let mut store = ParamStore::new();
    let p = store.add("p", Tensor::vector(vec![1.0, 2.0]));
    let mut tape = Tape::new(&store);
    let x = tape.param(p);
    assert!(matches!(tape.backward(x), Err(Error::NonScalarLoss(_))));
}

#[test]
fn repeated_param_registration_shares_one_leaf() {
    let mut store = ParamStore::new();
    let p = store.add("p", Tensor::vector(vec![2.0]));
    let mut tape = Tape::new(&store);
    let a = tape.param(p);
    let b = tape.param(p);
    assert_eq!(a, b);
    let prod = tape.mul(a, b).unwrap();
    let loss = tape.sum(prod).unwrap();
    let grads = tape.backward(loss).unwrap();
    assert_eq!(grads[p].values(), &[4.0]);
}

#[test]
fn backward_is_bitwise_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut store = ParamStore::new();
    let w = store.add("w", uniform(&mut rng, &[5, 4], -1.0, 1.0));
    let x = store.add("x", uniform(&mut rng, &[4], -1.0, 1.0));
    let run = || {
        let mut tape = Tape::new(&store);
        let (wv, xv) = (tape.param(w), tape.param(x));
        let y = tape.matmul(wv, xv).unwrap();
        let ls = tape.log_softmax(y).unwrap();
        let loss = tape.nll(ls, 2).unwrap();
        tape.backward(loss).unwrap().flatten()
    };
    let a = run();
    let b = run();
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn fd_check_of_half_squared_norm_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut store = ParamStore::new();
    let mut values = uniform(&mut rng, &[7], 0.5, 1.0).into_values();
    for (i, v) in values.iter_mut().enumerate() {
        if i % 2 == 1 {
            *v = -*v;
        }
    }
    let p = store.add("p", Tensor::vector(values));
    let check = finite_difference_check(&store, 1e-5, |tape| {
        let x = tape.param(p);
        let sq = tape.mul(x, x)?;
        let s = tape.sum(sq)?;
        tape.scale(s, 0.5)
    })
    .unwrap();
    assert!(check.max_relative_error < 1e-8, "{}", check.max_relative_error);
}

#[test]
fn fd_check_of_constant_is_zero() {
    let mut store = ParamStore::new();
    let p = store.add("p", Tensor::vector(vec![0.1, 0.2]));
    let check = finite_difference_check(&store, 1e-5, |tape| {
        let _ = tape.param(p);
        Ok(tape.constant(Tensor::scalar(3.0)))
    })
    .unwrap();
    assert_eq!(check.max_relative_error, 0.0);
    assert!(check.analytic.iter().chain(&check.numeric).all(|&v| v == 0.0));
}

#[test]
fn fd_check_reports_non_finite_coordinate() {
    let mut store = ParamStore::new();
    let p = store.add("p", Tensor::vector(vec![1.0, 1e308]));
    // Perturbing the second coordinate by +h overflows; the zero mask turns
    // that into NaN while leaving the first coordinate finite.
    let err = finite_difference_check(&store, 1e308, |tape| {
        let x = tape.param(p);
        let mask = tape.constant(Tensor::vector(vec![1.0, 0.0]));
        let y = tape.mul(x, mask)?;
        tape.sum(y)
    })
    .unwrap_err();
    assert!(matches!(err, Error::NonFinite { coordinate: 1, .. }), "{err:?}");
}

/// Objective `sum(w ⊙ prim(inputs))` with fixed random weights `w`, so every
/// output coordinate contributes to the gradient.
fn primitive_check(prim: Primitive, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let (m, k, n) = (rng.gen_range(1..5), rng.gen_range(1..5), rng.gen_range(1..4));
    let ids: Vec<ParamId> = match prim {
        Primitive::MatMul => {
            let second = if seed.is_multiple_of(2) { vec![k, n] } else { vec![k] };
            vec![
                store.add("a", uniform(&mut rng, &[m, k], -1.0, 1.0)),
                store.add("b", uniform(&mut rng, &second, -1.0, 1.0)),
            ]
        }
        Primitive::Add | Primitive::Mul => vec![
            store.add("a", uniform(&mut rng, &[m, k], -1.0, 1.0)),
            store.add("b", uniform(&mut rng, &[m, k], -1.0, 1.0)),
        ],
        Primitive::Concat => vec![
            store.add("a", uniform(&mut rng, &[m], -1.0, 1.0)),
            store.add("b", uniform(&mut rng, &[k], -1.0, 1.0)),
            store.add("c", uniform(&mut rng, &[n], -1.0, 1.0)),
        ],
        Primitive::Row(_) => vec![store.add("table", uniform(&mut rng, &[m + 1, k], -1.0, 1.0))],
        Primitive::Entropy => vec![store.add("p", uniform(&mut rng, &[k + 1], 0.05, 1.0))],
        _ => vec![store.add("x", uniform(&mut rng, &[k + 1], -1.0, 1.0))],
    };
    let prim = match prim {
        Primitive::Row(_) => Primitive::Row(rng.gen_range(0..=m)),
        Primitive::Nll(_) => Primitive::Nll(rng.gen_range(0..=k)),
        Primitive::Scale(_) => Primitive::Scale(rng.gen_range(-2.0..2.0)),
        p => p,
    };
    let out_len = {
        let vals: Vec<&Tensor> = ids.iter().map(|&i| store.get(i)).collect();
        forward(prim, &vals).unwrap().len()
    };
    let weights = uniform(&mut rng, &[out_len], -1.0, 1.0).into_values();
    let check = finite_difference_check(&store, 1e-5, |tape| {
        let vars: Vec<Var> = ids.iter().map(|&i| tape.param(i)).collect();
        let y = tape.apply(prim, &vars)?;
        let shape = tape.value(y).shape().to_vec();
        let w = tape.constant(Tensor::new(shape, weights.clone())?);
        let wy = tape.mul(w, y)?;
        tape.sum(wy)
    })
    .unwrap();
    check.max_relative_error
}

#[test]
fn every_primitive_matches_central_differences() {
    let prims = [
        Primitive::MatMul,
        Primitive::Add,
        Primitive::Mul,
        Primitive::Concat,
        Primitive::Tanh,
        Primitive::Sigmoid,
        Primitive::Row(0),
        Primitive::Softmax,
        Primitive::LogSoftmax,
        Primitive::Nll(0),
        Primitive::Entropy,
        Primitive::Sum,
        Primitive::Scale(1.0),
    ];
    for prim in prims {
        for seed in 0..100 {
            let err = primitive_check(prim, seed);
            assert!(err < 1e-4, "{prim:?} seed {seed}: relative error {err}");
        }
    }
}

proptest! {
    #[test]
    fn softmax_is_a_probability_vector(x in prop::collection::vec(-30.0f64..30.0, 1..12)) {
        let p = eval(Primitive::Softmax, &[Tensor::vector(x)]);
        prop_assert!(p.values().iter().all(|&v| v >= 0.0));
        let total: f64 = p.values().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn log_softmax_is_log_of_softmax(x in prop::collection::vec(-20.0f64..20.0, 1..12)) {
        let t = Tensor::vector(x);
        let p = eval(Primitive::Softmax, std::slice::from_ref(&t));
        let lp = eval(Primitive::LogSoftmax, &[t]);
        for (a, b) in lp.values().iter().zip(p.values()) {
            prop_assert!((a - b.ln()).abs() <= 1e-10);
        }
    }

    #[test]
    fn forward_and_backward_stay_finite(x in prop::collection::vec(-50.0f64..50.0, 1..8), idx in 0usize..8) {
        let n = x.len();
        let mut store = ParamStore::new();
        let p = store.add("x", Tensor::vector(x));
        let mut tape = Tape::new(&store);
        let v = tape.param(p);
        let t = tape.tanh(v).unwrap();
        let s = tape.sigmoid(v).unwrap();
        let sum = tape.add(t, s).unwrap();
        let ls = tape.log_softmax(sum).unwrap();
        let loss = tape.nll(ls, idx % n).unwrap();
        prop_assert!(tape.value(loss).is_finite());
        let g = tape.backward(loss).unwrap();
        prop_assert!(g[p].is_finite());
    }
}
