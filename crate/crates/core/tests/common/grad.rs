//! Backprop versus central finite differences of the mean cross-entropy.

use lerac::network::{Architecture, Mode, Network};
use lerac::tensor::ops::softmax_xent_backward;
use lerac::tensor::{finite_diff_grad, relative_error, softmax_xent, Scalar, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_batch(dims: &[usize], classes: usize, seed: u64) -> (Tensor<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = dims.iter().product();
    let x = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let labels = (0..dims[0]).map(|_| rng.random_range(0..classes)).collect();
    (Tensor::new(dims, x).unwrap(), labels)
}

pub fn loss_of<T: Scalar>(net: &mut Network<T>, x: &Tensor<T>, y: &[usize]) -> T {
    let logits = net.forward(x, Mode::Eval).unwrap();
    softmax_xent(&logits, y).unwrap().0
}

pub fn analytic<T: Scalar>(net: &mut Network<T>, x: &Tensor<T>, y: &[usize]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let logits = net.forward(x, Mode::Train).unwrap();
    let (_, probs) = softmax_xent(&logits, y).unwrap();
    let grads = net.backward(&softmax_xent_backward(&probs, y).unwrap()).unwrap();
    grads
        .iter()
        .map(|(_, p)| (p.weights.to_f64_vec(), p.bias.to_f64_vec()))
        .collect()
}

/// Finite-difference gradients of every trainable block, always in f64.
pub fn numeric(net: &Network<f64>, x: &Tensor<f64>, y: &[usize], eps: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
    (1..=net.depth())
        .map(|j| {
            let p = net.params(j).unwrap().clone();
            let mut probe = net.clone();
            let gw = finite_diff_grad(
                |w| {
                    probe.params_mut(j).unwrap().weights = w.clone();
                    loss_of(&mut probe, x, y)
                },
                &p.weights,
                eps,
            )
            .unwrap();
            let mut probe = net.clone();
            let gb = finite_diff_grad(
                |b| {
                    probe.params_mut(j).unwrap().bias = b.clone();
                    loss_of(&mut probe, x, y)
                },
                &p.bias,
                eps,
            )
            .unwrap();
            (gw.into_data(), gb.into_data())
        })
        .collect()
}

/// Returns the worst per-block relative error.
pub fn worst_error(a: &[(Vec<f64>, Vec<f64>)], b: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .flat_map(|((aw, ab), (bw, bb))| [relative_error(aw, bw, 1e-12), relative_error(ab, bb, 1e-12)])
        .fold(0.0, f64::max)
}

pub fn network(
    arch: Architecture,
    dims: &[usize],
    classes: usize,
    smoothing: Option<(usize, f64)>,
    seed: u64,
) -> Network<f64> {
    let mut net: Network<f64> = arch
        .build(&dims[1..], classes, smoothing.map(|(k, _)| k))
        .unwrap()
        .with_seed(seed);
    if let Some((_, sigma)) = smoothing {
        net.set_smoothing_sigma(sigma).unwrap();
    }
    net
}

/// Worst relative error between backprop and finite differences, in f64.
pub fn f64_gradient_error(
    arch: Architecture,
    dims: &[usize],
    classes: usize,
    smoothing: Option<(usize, f64)>,
    seed: u64,
) -> f64 {
    let mut net = network(arch, dims, classes, smoothing, seed);
    let (x, y) = random_batch(dims, classes, seed + 1000);
    let got = analytic(&mut net, &x, &y);
    let want = numeric(&net, &x, &y, 1e-6);
    worst_error(&got, &want)
}
