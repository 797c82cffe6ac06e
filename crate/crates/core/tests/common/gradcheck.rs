//! Finite-difference checks of every backward pass, shared by the gradient
//! tests and the acceptance run.

use blc_core::nn::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Central difference of `f` at `x` along every coordinate.
fn numeric_grad(x: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + STEP;
            let up = f(&x);
            x[i] = orig - STEP;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * STEP)
        })
        .collect()
}

fn assert_close(analytic: &[f64], numeric: &[f64], what: &str) {
    assert_eq!(analytic.len(), numeric.len());
    for (i, (a, n)) in analytic.iter().zip(numeric).enumerate() {
        assert!(rel_err(*a, *n) <= TOL, "{what}[{i}]: analytic {a} vs numeric {n}");
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dense_layer() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let (i, o, b) = (rng.random_range(1..6), rng.random_range(1..6), rng.random_range(1..4));
        let mut layer = Dense::init(i, o, &mut rng);
        layer.bias = random_vec(&mut rng, o);
        let x = random_vec(&mut rng, i * b);
        let r = random_vec(&mut rng, o * b);
        let gx = layer.backward(&x, &r, b);
        assert_close(&gx, &numeric_grad(&x, |x| dot(&layer.forward(x, b), &r)), "dense dx");
        let probe = layer.clone();
        let gw = numeric_grad(&probe.weights, |w| {
            let mut l = probe.clone();
            l.weights = w.to_vec();
            dot(&l.forward(&x, b), &r)
        });
        assert_close(&layer.grad_weights, &gw, "dense dW");
        let gb = numeric_grad(&probe.bias, |v| {
            let mut l = probe.clone();
            l.bias = v.to_vec();
            dot(&l.forward(&x, b), &r)
        });
        assert_close(&layer.grad_bias, &gb, "dense db");
    }
}

pub fn conv_layer() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 0..20 {
        let kernel = [1, 3, 5, 7][n % 4];
        let (i, o, len) = (rng.random_range(1..5), rng.random_range(1..5), rng.random_range(2..12));
        let mut layer = Conv1d::init(i, o, kernel, &mut rng).unwrap();
        layer.bias = random_vec(&mut rng, o);
        let x = Signal::new(i, len, random_vec(&mut rng, i * len)).unwrap();
        let r = random_vec(&mut rng, o * len);
        assert_eq!(layer.forward(&x).len, len);
        let gx = layer.backward(&x, &Signal::new(o, len, r.clone()).unwrap());
        let num = numeric_grad(&x.data, |d| dot(&layer.forward(&Signal::new(i, len, d.to_vec()).unwrap()).data, &r));
        assert_close(&gx.data, &num, "conv dx");
        let probe = layer.clone();
        let gw = numeric_grad(&probe.weights, |w| {
            let mut l = probe.clone();
            l.weights = w.to_vec();
            dot(&l.forward(&x).data, &r)
        });
        assert_close(&layer.grad_weights, &gw, "conv dW");
        let gb = numeric_grad(&probe.bias, |v| {
            let mut l = probe.clone();
            l.bias = v.to_vec();
            dot(&l.forward(&x).data, &r)
        });
        assert_close(&layer.grad_bias, &gb, "conv db");
    }
}

pub fn instance_norm_layer() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let (c, len) = (rng.random_range(1..5), rng.random_range(2..16));
        let x = Signal::new(c, len, random_vec(&mut rng, c * len)).unwrap();
        let r = random_vec(&mut rng, c * len);
        let cache = instance_norm_forward(&x).unwrap();
        let gx = instance_norm_backward(&cache, &Signal::new(c, len, r.clone()).unwrap());
        let num = numeric_grad(&x.data, |d| dot(&instance_norm(&Signal::new(c, len, d.to_vec()).unwrap()).unwrap().data, &r));
        assert_close(&gx.data, &num, "norm dx");
    }
}

pub fn activations() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for act in [Activation::Relu, Activation::LeakyRelu, Activation::Linear] {
        for _ in 0..20 {
            let n = rng.random_range(1..20);
            // keep clear of the kink at 0
            let x: Vec<f64> = (0..n)
                .map(|_| {
                    let v: f64 = rng.random_range(0.01..1.0);
                    if rng.random_bool(0.5) { v } else { -v }
                })
                .collect();
            let r = random_vec(&mut rng, n);
            let g = act.backward(&x, &r);
            assert_close(&g, &numeric_grad(&x, |x| dot(&act.forward(x), &r)), "activation");
        }
    }
}

pub fn losses() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for loss in [Loss::Mae, Loss::Mse] {
        for _ in 0..20 {
            let n = rng.random_range(1..20);
            let t = random_vec(&mut rng, n);
            let p: Vec<f64> = t.iter().map(|v| v + rng.random_range(0.01..1.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
            let g = loss.gradient(&p, &t, 1.0).unwrap();
            assert_close(&g, &numeric_grad(&p, |p| loss.value(p, &t).unwrap()), "loss");
        }
    }
}

pub fn linear_dense_mse_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut layer = Dense::init(4, 3, &mut rng);
    let x = random_vec(&mut rng, 4);
    let t = random_vec(&mut rng, 3);
    let y = layer.forward(&x, 1);
    let g = Loss::Mse.gradient(&y, &t, 3.0).unwrap();
    layer.backward(&x, &g, 1);
    for o in 0..3 {
        for i in 0..4 {
            let want = 2.0 * (y[o] - t[o]) * x[i];
            assert!((layer.grad_weights[o * 4 + i] - want).abs() < 1e-12);
        }
    }
}

pub fn whole_networks() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut net = ParamNet::from_widths(&[5, 7, 4, 2], Some(11));
    let x = random_vec(&mut rng, 10);
    let r = random_vec(&mut rng, 4);
    net.forward(&x, 2).unwrap();
    let gx = net.backward(&r).unwrap();
    assert_close(&gx, &numeric_grad(&x, |x| dot(&net.predict(x, 2).unwrap(), &r)), "param net dx");

    let mut cnn = BlcNet::from_channels(&[3, 4, 4, 1], 5, Some(12)).unwrap();
    let len = 10;
    let x = Signal::new(3, len, random_vec(&mut rng, 3 * len)).unwrap();
    let r = random_vec(&mut rng, len);
    cnn.forward(&x).unwrap();
    let gx = cnn.backward(&r).unwrap();
    let num = numeric_grad(&x.data, |d| dot(&cnn.predict(&Signal::new(3, len, d.to_vec()).unwrap()).unwrap(), &r));
    assert_close(&gx.data, &num, "cnn dx");
    let w1 = cnn.convs[1].weights.clone();
    let g1 = cnn.convs[1].grad_weights.clone();
    let num = numeric_grad(&w1, |w| {
        cnn.convs[1].weights = w.to_vec();
        dot(&cnn.predict(&x).unwrap(), &r)
    });
    assert_close(&g1, &num, "cnn dW");
}
