//! Analytic gradients against central differences, plus the worked
//! first- and second-order examples.

use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tensorad::{grad, Tape, Tensor};

const H: f64 = 1e-5;

fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-9
}

fn random(shape: &[usize], rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

type Func = dyn Fn(&[Tensor]) -> Tensor;

/// Contracts `f`'s output with fixed weights so that every Jacobian entry
/// contributes, then compares analytic and numeric gradients.
fn check(f: &Func, inputs: &[Tensor], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probe_shape = f(inputs).shape().to_vec();
    let weights = random(&probe_shape, &mut rng, -1.0, 1.0);
    let scalar = |xs: &[Tensor]| f(xs).mul(&weights).unwrap().sum();

    let tape = Tape::new();
    let vars: Vec<Tensor> = inputs.iter().map(|t| tape.var(t)).collect();
    let out = scalar(&vars);
    let refs: Vec<&Tensor> = vars.iter().collect();
    let analytic = grad(&out, &refs, false).unwrap();

    for (k, input) in inputs.iter().enumerate() {
        for i in 0..input.numel() {
            let bump = |delta: f64| {
                let mut xs = inputs.to_vec();
                let mut data = input.to_vec();
                data[i] += delta;
                xs[k] = Tensor::new(input.shape(), data).unwrap();
                scalar(&xs).item()
            };
            let numeric = (bump(H) - bump(-H)) / (2.0 * H);
            let a = analytic[k].data()[i];
            assert!(
                rel_close(a, numeric, 1e-6),
                "input {k} element {i}: analytic {a} vs numeric {numeric}"
            );
        }
    }
}

fn unary_case(op: fn(&Tensor) -> Tensor, seed: u64, lo: f64, hi: f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random(&[3, 4], &mut rng, lo, hi);
    check(&move |xs: &[Tensor]| op(&xs[0]), &[x], seed);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn elementwise_unary(seed in 0u64..10_000) {
        unary_case(|x| x.tanh(), seed, -2.0, 2.0);
        unary_case(|x| x.sigmoid(), seed, -2.0, 2.0);
        unary_case(|x| x.softplus(), seed, -2.0, 2.0);
        unary_case(|x| x.exp(), seed, -2.0, 2.0);
        unary_case(|x| x.square(), seed, -2.0, 2.0);
        unary_case(|x| x.neg(), seed, -2.0, 2.0);
        unary_case(|x| x.scale(-1.7), seed, -2.0, 2.0);
        unary_case(|x| x.add_scalar(0.3), seed, -2.0, 2.0);
        // Domains kept away from kinks and poles.
        unary_case(|x| x.sqrt(), seed, 0.2, 2.0);
        unary_case(|x| x.ln(), seed, 0.2, 2.0);
        unary_case(|x| x.relu(), seed, 0.1, 2.0);
        unary_case(|x| x.relu(), seed, -2.0, -0.1);
    }

    #[test]
    fn binary_with_broadcast(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random(&[3, 4], &mut rng, -2.0, 2.0);
        let b = random(&[3, 4], &mut rng, -2.0, 2.0);
        let row = random(&[1, 4], &mut rng, -2.0, 2.0);
        let col = random(&[3, 1], &mut rng, 0.5, 2.0);
        check(&|x: &[Tensor]| x[0].add(&x[1]).unwrap(), &[a.clone(), b.clone()], seed);
        check(&|x: &[Tensor]| x[0].sub(&x[1]).unwrap(), &[a.clone(), row.clone()], seed);
        check(&|x: &[Tensor]| x[0].mul(&x[1]).unwrap(), &[a.clone(), row.clone()], seed);
        check(&|x: &[Tensor]| x[0].div(&x[1]).unwrap(), &[a.clone(), col.clone()], seed);
        check(&|x: &[Tensor]| x[1].mul(&x[0]).unwrap(), &[Tensor::scalar(0.7), a], seed);
    }

    #[test]
    fn structural(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random(&[3, 4], &mut rng, -2.0, 2.0);
        let b = random(&[4, 2], &mut rng, -2.0, 2.0);
        let c = random(&[3, 2], &mut rng, -2.0, 2.0);
        check(&|x: &[Tensor]| x[0].matmul(&x[1]).unwrap(), &[a.clone(), b], seed);
        check(&|x: &[Tensor]| x[0].transpose().unwrap(), std::slice::from_ref(&a), seed);
        check(&|x: &[Tensor]| x[0].reshape(&[2, 6]).unwrap(), std::slice::from_ref(&a), seed);
        check(&|x: &[Tensor]| Tensor::concat(&[&x[0], &x[1]], 1).unwrap(), &[a.clone(), c], seed);
        check(&|x: &[Tensor]| x[0].slice(1, 1, 2).unwrap(), std::slice::from_ref(&a), seed);
        check(&|x: &[Tensor]| x[0].pad(0, 1, 5).unwrap(), std::slice::from_ref(&a), seed);
        check(&|x: &[Tensor]| x[0].sum(), std::slice::from_ref(&a), seed);
        check(&|x: &[Tensor]| x[0].mean(), std::slice::from_ref(&a), seed);
        check(&|x: &[Tensor]| x[0].variance(), std::slice::from_ref(&a), seed);
        check(&|x: &[Tensor]| x[0].sum_axis(0).unwrap(), std::slice::from_ref(&a), seed);
        check(&|x: &[Tensor]| x[0].softmax().unwrap(), std::slice::from_ref(&a), seed);
        check(&|x: &[Tensor]| x[0].sum_to(&[1, 4]).unwrap(), std::slice::from_ref(&a), seed);
        let row = random(&[1, 4], &mut rng, -2.0, 2.0);
        check(&|x: &[Tensor]| x[0].broadcast_to(&[3, 4]).unwrap(), &[row], seed);
        let index = Arc::new(vec![2, 0, 2, 1, 0]);
        let gi = Arc::clone(&index);
        check(&move |x: &[Tensor]| x[0].gather_rows(&gi).unwrap(), std::slice::from_ref(&a), seed);
        let e = random(&[5, 4], &mut rng, -2.0, 2.0);
        check(&move |x: &[Tensor]| x[0].scatter_add_rows(&index, 3).unwrap(), &[e], seed);
    }

    /// Second order: the gradient of `sum(w * grad f)` matches central
    /// differences of the first-order gradient.
    #[test]
    fn second_order_matches_differenced_gradient(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random(&[2, 3], &mut rng, 0.3, 2.0);
        let w = random(&[3, 2], &mut rng, -1.0, 1.0);
        let f = |x: &Tensor| -> Tensor {
            let h = x.matmul(&w).unwrap().tanh();
            let s = x.sqrt().sigmoid().mul(&x.ln().softplus()).unwrap();
            h.sum().add(&s.div(&x.exp()).unwrap().sum()).unwrap()
        };
        let first = |x: &Tensor| -> Tensor {
            let tape = Tape::new();
            let v = tape.var(x);
            grad(&f(&v), &[&v], false).unwrap().remove(0)
        };
        let probe = random(&[2, 3], &mut rng, -1.0, 1.0);
        let tape = Tape::new();
        let v = tape.var(&x);
        let g = grad(&f(&v), &[&v], true).unwrap().remove(0);
        let z = g.mul(&probe).unwrap().sum();
        let hv = grad(&z, &[&v], false).unwrap().remove(0);
        for i in 0..x.numel() {
            let bump = |d: f64| {
                let mut data = x.to_vec();
                data[i] += d;
                first(&Tensor::new(&[2, 3], data).unwrap()).mul(&probe).unwrap().sum().item()
            };
            let numeric = (bump(H) - bump(-H)) / (2.0 * H);
            prop_assert!(rel_close(hv.data()[i], numeric, 1e-6), "{} vs {}", hv.data()[i], numeric);
        }
    }
}

#[test]
fn worked_values() {
    assert_eq!(Tensor::from_vec(vec![1.0, 2.0, 3.0]).mean().item(), 2.0);
    let var = Tensor::from_vec(vec![1.0, 2.0, 3.0]).variance().item();
    assert!((var - 2.0 / 3.0).abs() < 1e-15);
    let sm = Tensor::from_vec(vec![0.0, 0.0]).softmax().unwrap();
    assert_eq!(sm.data(), &[0.5, 0.5]);
}

#[test]
fn square_derivative() {
    let tape = Tape::new();
    let x = tape.var(&Tensor::scalar(3.0));
    let g = grad(&x.square(), &[&x], false).unwrap();
    assert_eq!(g[0].item(), 6.0);
}

#[test]
fn gradient_through_gradient() {
    // y = w x, dy/dx = w; z = (dy/dx)^2, dz/dw = 2 w = 4 at w = 2.
    let tape = Tape::new();
    let w = tape.var(&Tensor::scalar(2.0));
    let x = tape.var(&Tensor::scalar(5.0));
    let y = w.mul(&x).unwrap();
    let dydx = grad(&y, &[&x], true).unwrap().remove(0);
    assert_eq!(dydx.item(), 2.0);
    let z = dydx.square();
    let dzdw = grad(&z, &[&w], false).unwrap().remove(0);
    assert_eq!(dzdw.item(), 4.0);
}

#[test]
fn sum_gradient_is_ones() {
    let tape = Tape::new();
    let x = tape.var(&Tensor::from_vec(vec![0.5, -1.0, 2.0, 3.0, 4.0]));
    let g = grad(&x.sum(), &[&x], false).unwrap();
    assert_eq!(g[0].data(), &[1.0; 5]);
}

#[test]
fn cubic_second_derivative() {
    let tape = Tape::new();
    let x = tape.var(&Tensor::scalar(2.0));
    let y = x.square().mul(&x).unwrap();
    let d1 = grad(&y, &[&x], true).unwrap().remove(0);
    let d2 = grad(&d1, &[&x], false).unwrap().remove(0);
    assert!((d2.item() - 12.0).abs() < 1e-6);
}

#[test]
fn independent_variable_has_exact_zero_gradient() {
    let tape = Tape::new();
    let x = tape.var(&Tensor::from_vec(vec![1.0, 2.0]));
    let unused = tape.var(&Tensor::from_vec(vec![3.0, 4.0, 5.0]));
    let constant = Tensor::from_vec(vec![9.0]);
    let y = x.tanh().sum();
    let g = grad(&y, &[&unused, &constant, &x], false).unwrap();
    assert_eq!(g[0].data(), &[0.0, 0.0, 0.0]);
    assert_eq!(g[1].data(), &[0.0]);
    assert!(g[2].data().iter().all(|v| *v != 0.0));
}

#[test]
fn non_scalar_output_is_rejected() {
    let tape = Tape::new();
    let x = tape.var(&Tensor::from_vec(vec![1.0, 2.0]));
    assert!(grad(&x.tanh(), &[&x], false).is_err());
}

#[test]
fn shape_mismatch_is_an_error() {
    let a = Tensor::zeros(&[2, 3]);
    let b = Tensor::zeros(&[3, 2]);
    assert!(a.add(&b).is_err());
    assert!(a.matmul(&a).is_err());
    assert!(Tensor::concat(&[&a, &b], 1).is_err());
    assert!(a.reshape(&[4]).is_err());
}

#[test]
fn mixing_tapes_is_an_error() {
    let t1 = Tape::new();
    let t2 = Tape::new();
    let a = t1.var(&Tensor::scalar(1.0));
    let b = t2.var(&Tensor::scalar(1.0));
    assert!(a.add(&b).is_err());
}

fn run_once() -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x0 = random(&[4, 3], &mut rng, -2.0, 2.0);
    let w0 = random(&[3, 2], &mut rng, -2.0, 2.0);
    let tape = Tape::new();
    let x = tape.var(&x0);
    let w = tape.var(&w0);
    let y = x.matmul(&w).unwrap().sigmoid().variance();
    let g = grad(&y, &[&x, &w], true).unwrap();
    let z = g[0].square().sum();
    let gw = grad(&z, &[&w], false).unwrap().remove(0);
    (g[0].to_vec(), gw.to_vec())
}

#[test]
fn passes_are_bit_identical() {
    let (a1, b1) = run_once();
    let (a2, b2) = run_once();
    assert!(a1.iter().zip(&a2).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert!(b1.iter().zip(&b2).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn replay_reproduces_recorded_values() {
    let tape = Tape::new();
    let x = tape.var(&Tensor::from_vec(vec![0.5, -0.25, 1.5]));
    let y = x.tanh().mul(&x).unwrap().exp().sum();
    let values = tape.replay(&[]).unwrap();
    let last = values.last().unwrap();
    assert_eq!(last.item().to_bits(), y.item().to_bits());

    let moved = Tensor::from_vec(vec![1.0, 2.0, 3.0]);
    let replayed = tape.replay(&[(x.node_id().unwrap(), moved.clone())]).unwrap();
    let fresh = moved.tanh().mul(&moved).unwrap().exp().sum();
    assert_eq!(replayed.last().unwrap().item(), fresh.item());
}

#[test]
fn tape_records_inputs_before_outputs() {
    let tape = Tape::new();
    let x = tape.var(&Tensor::from_vec(vec![1.0, 2.0]));
    let _ = x.square().sum();
    assert_eq!(tape.op_names(), vec!["leaf", "square", "sum"]);
}

#[test]
fn checkpoint_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("params");
    let named = vec![
        ("a.weight".to_string(), Tensor::new(&[2, 2], vec![1.0, -2.0, 3.5, 1e-300]).unwrap()),
        ("a.bias".to_string(), Tensor::from_vec(vec![f64::MIN_POSITIVE])),
    ];
    tensorad::checkpoint::save(&stem, &named, serde_json::json!({"note": "x"})).unwrap();
    let (manifest, back) = tensorad::checkpoint::load(&stem).unwrap();
    assert_eq!(manifest.meta["note"], "x");
    for ((n1, t1), (n2, t2)) in named.iter().zip(&back) {
        assert_eq!(n1, n2);
        assert_eq!(t1.shape(), t2.shape());
        assert_eq!(t1.data(), t2.data());
    }
}
