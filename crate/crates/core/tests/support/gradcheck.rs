//! Central finite-difference oracle for tensorgrad ops, run in f64.

use rand::Rng;
use seganforge::tensorgrad::{ConvSpec, ConvTransposeSpec, Graph, Tensor, TensorError, Var};

pub const EPS: f64 = 1e-3;
pub const INSTANCES: usize = 20;

type Builder = dyn Fn(&mut Graph<f64>, &[Var]) -> Result<Var, TensorError>;

fn forward(build: &Builder, inputs: &[Tensor<f64>]) -> (Graph<f64>, Vec<Var>, Var) {
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t).unwrap()).collect();
    let out = build(&mut g, &vars).unwrap();
    (g, vars, out)
}

/// Norm-wise relative error between the analytic vector-Jacobian product and
/// its central-difference estimate, maximised over all inputs.
pub fn max_relative_error(build: &Builder, inputs: Vec<Tensor<f64>>, rng: &mut impl Rng) -> f64 {
    let inputs: Vec<Tensor<f64>> = inputs.into_iter().map(|t| t.with_requires_grad(true)).collect();
    let (g, vars, out) = forward(build, &inputs);
    let seed: Vec<f64> = (0..g.value(out).len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let grads = g.backward_with_seed(out, seed.clone()).unwrap();
    let project = |inputs: &[Tensor<f64>]| -> f64 {
        let (g, _, out) = forward(build, inputs);
        g.value(out).iter().zip(&seed).map(|(a, b)| a * b).sum()
    };
    let mut worst = 0.0f64;
    for (i, var) in vars.iter().enumerate() {
        let analytic = grads.get(*var).map(|s| s.to_vec()).unwrap_or_else(|| vec![0.0; inputs[i].len()]);
        let mut numeric = vec![0.0; inputs[i].len()];
        for j in 0..inputs[i].len() {
            let mut plus = inputs.clone();
            plus[i].data_mut()[j] += EPS;
            let mut minus = inputs.clone();
            minus[i].data_mut()[j] -= EPS;
            numeric[j] = (project(&plus) - project(&minus)) / (2.0 * EPS);
        }
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(numeric.iter().map(|n| n * n).sum::<f64>().sqrt());
        worst = worst.max(if scale < 1e-12 { diff } else { diff / scale });
    }
    worst
}

pub fn random_tensor(shape: &[usize], rng: &mut impl Rng) -> Tensor<f64> {
    Tensor::from_fn(shape.to_vec(), |_| rng.gen_range(-1.0..1.0))
}

/// Values bounded away from zero so kinked ops never straddle the kink
/// within the finite-difference step.
pub fn away_from_zero(shape: &[usize], rng: &mut impl Rng) -> Tensor<f64> {
    Tensor::from_fn(shape.to_vec(), |_| {
        let m = rng.gen_range(0.05..1.0);
        if rng.gen_bool(0.5) {
            m
        } else {
            -m
        }
    })
}

/// Runs `INSTANCES` random instances of every op; returns `(op, worst error)`.
pub fn run_suite(rng: &mut impl Rng) -> Vec<(&'static str, f64)> {
    let mut results = Vec::new();
    let mut track = |name: &'static str, errs: Vec<f64>| {
        results.push((name, errs.into_iter().fold(0.0, f64::max)));
    };

    let mut errs = Vec::new();
    for _ in 0..INSTANCES {
        let (b, cin, cout) = (rng.gen_range(1..3), rng.gen_range(1..4), rng.gen_range(1..4));
        let k = rng.gen_range(1..6);
        let stride = rng.gen_range(1..4);
        let pad = rng.gen_range(0..k);
        let len = rng.gen_range(k.max(2)..14);
        let spec = ConvSpec { stride, pad };
        let inputs = vec![random_tensor(&[b, cin, len], rng), random_tensor(&[cout, cin, k], rng), random_tensor(&[cout], rng)];
        errs.push(max_relative_error(&move |g, v| g.conv1d(v[0], v[1], Some(v[2]), spec), inputs, rng));
    }
    track("conv1d", errs);

    let mut errs = Vec::new();
    for _ in 0..INSTANCES {
        let (b, cin, cout) = (rng.gen_range(1..3), rng.gen_range(1..4), rng.gen_range(1..4));
        let k = rng.gen_range(1..6);
        let stride = rng.gen_range(1..4);
        let pad = rng.gen_range(0..=k / 2);
        let output_padding = if stride > 1 { rng.gen_range(0..2) } else { 0 };
        let len = rng.gen_range(2..9);
        let spec = ConvTransposeSpec { stride, pad, output_padding };
        let inputs = vec![random_tensor(&[b, cin, len], rng), random_tensor(&[cin, cout, k], rng), random_tensor(&[cout], rng)];
        errs.push(max_relative_error(&move |g, v| g.conv_transpose1d(v[0], v[1], Some(v[2]), spec), inputs, rng));
    }
    track("conv_transpose1d", errs);

    let mut errs = Vec::new();
    for _ in 0..INSTANCES {
        let (b, c, l) = (rng.gen_range(1..3), rng.gen_range(1..4), rng.gen_range(1..8));
        let inputs = vec![away_from_zero(&[b, c, l], rng), random_tensor(&[c], rng)];
        errs.push(max_relative_error(&|g, v| g.prelu(v[0], v[1]), inputs, rng));
    }
    track("prelu", errs);

    let mut errs = Vec::new();
    for _ in 0..INSTANCES {
        let slope = rng.gen_range(0.0..0.5);
        let inputs = vec![away_from_zero(&[1, 2, rng.gen_range(1..10)], rng)];
        errs.push(max_relative_error(&move |g, v| g.leaky_relu(v[0], slope), inputs, rng));
    }
    track("leaky_relu", errs);

    let mut errs = Vec::new();
    for _ in 0..INSTANCES {
        let inputs = vec![Tensor::from_fn(vec![2, 2, rng.gen_range(1..8)], |_| rng.gen_range(-2.0..2.0))];
        errs.push(max_relative_error(&|g, v| g.tanh(v[0]), inputs, rng));
    }
    track("tanh", errs);

    let mut errs = Vec::new();
    for _ in 0..INSTANCES {
        let (b, l) = (rng.gen_range(1..3), rng.gen_range(1..7));
        let inputs = vec![random_tensor(&[b, rng.gen_range(1..4), l], rng), random_tensor(&[b, rng.gen_range(1..4), l], rng)];
        errs.push(max_relative_error(&|g, v| g.concat_channels(v[0], v[1]), inputs, rng));
    }
    track("concat_channels", errs);

    let mut errs = Vec::new();
    for _ in 0..INSTANCES {
        let shape = [rng.gen_range(1..3), rng.gen_range(1..3), rng.gen_range(1..6)];
        let inputs = vec![random_tensor(&shape, rng), random_tensor(&shape, rng)];
        errs.push(max_relative_error(&|g, v| g.add(v[0], v[1]), inputs, rng));
    }
    track("add", errs);

    let mut errs = Vec::new();
    for _ in 0..INSTANCES {
        let factor = rng.gen_range(-3.0..3.0);
        let inputs = vec![random_tensor(&[1, 3, rng.gen_range(1..6)], rng)];
        errs.push(max_relative_error(&move |g, v| g.scale(v[0], factor), inputs, rng));
    }
    track("scale", errs);

    let mut errs = Vec::new();
    for _ in 0..INSTANCES {
        let l = rng.gen_range(1..6);
        let inputs = vec![random_tensor(&[2, 3, l], rng)];
        errs.push(max_relative_error(&move |g, v| g.reshape(v[0], vec![6, l]), inputs, rng));
    }
    track("reshape", errs);

    let mut errs = Vec::new();
    for _ in 0..INSTANCES {
        let shape = [rng.gen_range(1..3), rng.gen_range(1..3), rng.gen_range(1..6)];
        let a = random_tensor(&shape, rng);
        let offset = away_from_zero(&shape, rng);
        let b = Tensor::new(shape.to_vec(), a.data().iter().zip(offset.data()).map(|(x, o)| x + o).collect()).unwrap();
        errs.push(max_relative_error(&|g, v| g.l1_loss(v[0], v[1]), vec![a, b], rng));
    }
    track("l1_loss", errs);

    let mut errs = Vec::new();
    for _ in 0..INSTANCES {
        let shape = [rng.gen_range(1..3), rng.gen_range(1..3), rng.gen_range(1..6)];
        let inputs = vec![random_tensor(&shape, rng), random_tensor(&shape, rng)];
        errs.push(max_relative_error(&|g, v| g.mse_loss(v[0], v[1]), inputs, rng));
    }
    track("mse_loss", errs);

    results
}

/// `|<conv1d(x), y> − <x, conv_transpose1d(y)>| / max(|lhs|, |rhs|)` over
/// `INSTANCES` random geometries, maximised.
pub fn adjoint_suite(rng: &mut impl Rng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..INSTANCES {
        let (b, cin, cout) = (rng.gen_range(1..3), rng.gen_range(1..5), rng.gen_range(1..5));
        let k = rng.gen_range(1..12);
        let stride = rng.gen_range(1..4);
        let pad = rng.gen_range(0..=k / 2);
        let len = rng.gen_range(k.max(stride)..40);
        let spec = ConvSpec { stride, pad };
        let x = random_tensor(&[b, cin, len], rng).cast::<f32>();
        let w = random_tensor(&[cout, cin, k], rng).cast::<f32>();
        let mut g = Graph::<f32>::new();
        let (xv, wv) = (g.leaf(&x).unwrap(), g.leaf(&w).unwrap());
        let fx = g.conv1d(xv, wv, None, spec).unwrap();
        let lout = g.shape(fx)[2];
        let y = random_tensor(&[b, cout, lout], rng).cast::<f32>();
        let lhs: f64 = g.value(fx).iter().zip(y.data()).map(|(a, b)| (*a as f64) * (*b as f64)).sum();

        let natural = (lout - 1) * stride + k - 2 * pad;
        let output_padding = len - natural;
        let tspec = ConvTransposeSpec { stride, pad, output_padding };
        let mut h = Graph::<f32>::new();
        let (yv, wv) = (h.leaf(&y).unwrap(), h.leaf(&w).unwrap());
        let ty = h.conv_transpose1d(yv, wv, None, tspec).unwrap();
        assert_eq!(h.shape(ty), x.shape());
        let rhs: f64 = x.data().iter().zip(h.value(ty)).map(|(a, b)| (*a as f64) * (*b as f64)).sum();
        let scale = lhs.abs().max(rhs.abs()).max(1e-6);
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    worst
}
