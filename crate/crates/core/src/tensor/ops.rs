//! Forward operations and their analytic backward passes.
//!
//! All loops run in a fixed order so results are bitwise reproducible for a
//! given build.

use super::{Scalar, Shape, Tensor};
use crate::error::{Error, Result};

fn expect_rank<T: Scalar>(t: &Tensor<T>, rank: usize, context: &str) -> Result<()> {
    if t.shape().rank() != rank {
        return Err(Error::Validation(format!(
            "{context}: expected a rank-{rank} tensor, got shape {}",
            t.shape()
        )));
    }
    Ok(())
}

/// Matrix product of `a` (m×p) and `b` (p×q).
pub fn matmul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    expect_rank(a, 2, "matmul")?;
    expect_rank(b, 2, "matmul")?;
    let (m, p) = (a.dims()[0], a.dims()[1]);
    let (p2, q) = (b.dims()[0], b.dims()[1]);
    if p != p2 {
        return Err(Error::shape("matmul inner dimensions", a.dims(), b.dims()));
    }
    let (ad, bd) = (a.data(), b.data());
    let mut out = vec![T::zero(); m * q];
    for i in 0..m {
        let row = &mut out[i * q..(i + 1) * q];
        for k in 0..p {
            let aik = ad[i * p + k];
            let brow = &bd[k * q..(k + 1) * q];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o = *o + aik * bv;
            }
        }
    }
    Tensor::new(&[m, q], out)
}

/// `aᵀ · b` for `a` (p×m) and `b` (p×q).
pub(crate) fn matmul_tn<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (p, m) = (a.dims()[0], a.dims()[1]);
    let (p2, q) = (b.dims()[0], b.dims()[1]);
    if p != p2 {
        return Err(Error::shape("matmul_tn outer dimensions", a.dims(), b.dims()));
    }
    let (ad, bd) = (a.data(), b.data());
    let mut out = vec![T::zero(); m * q];
    for k in 0..p {
        let brow = &bd[k * q..(k + 1) * q];
        for i in 0..m {
            let aki = ad[k * m + i];
            let row = &mut out[i * q..(i + 1) * q];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o = *o + aki * bv;
            }
        }
    }
    Tensor::new(&[m, q], out)
}

/// `a · bᵀ` for `a` (m×p) and `b` (q×p).
pub(crate) fn matmul_nt<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (m, p) = (a.dims()[0], a.dims()[1]);
    let (q, p2) = (b.dims()[0], b.dims()[1]);
    if p != p2 {
        return Err(Error::shape("matmul_nt inner dimensions", a.dims(), b.dims()));
    }
    let (ad, bd) = (a.data(), b.data());
    let mut out = Vec::with_capacity(m * q);
    for i in 0..m {
        let arow = &ad[i * p..(i + 1) * p];
        for j in 0..q {
            let brow = &bd[j * p..(j + 1) * p];
            let mut acc = T::zero();
            for (&x, &y) in arow.iter().zip(brow) {
                acc = acc + x * y;
            }
            out.push(acc);
        }
    }
    Tensor::new(&[m, q], out)
}

/// Output spatial extent of a sliding window.
pub(crate) fn window_extent(input: usize, window: usize, stride: usize, padding: usize) -> Option<usize> {
    let padded = input + 2 * padding;
    if window == 0 || stride == 0 || window > padded {
        return None;
    }
    Some((padded - window) / stride + 1)
}

#[derive(Clone, Copy)]
struct ConvGeometry {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    f: usize,
    kh: usize,
    kw: usize,
    oh: usize,
    ow: usize,
    stride: usize,
    padding: usize,
}

fn conv_geometry<T: Scalar>(
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    stride: usize,
    padding: usize,
) -> Result<ConvGeometry> {
    expect_rank(input, 4, "conv2d input")?;
    expect_rank(kernel, 4, "conv2d kernel")?;
    let [n, c, h, w] = <[usize; 4]>::try_from(input.dims()).expect("rank 4");
    let [f, kc, kh, kw] = <[usize; 4]>::try_from(kernel.dims()).expect("rank 4");
    if stride == 0 {
        return Err(Error::Validation("conv2d stride must be at least 1".into()));
    }
    if kc != c {
        return Err(Error::shape("conv2d channel count", input.dims(), kernel.dims()));
    }
    let (Some(oh), Some(ow)) = (
        window_extent(h, kh, stride, padding),
        window_extent(w, kw, stride, padding),
    ) else {
        return Err(Error::shape(
            "conv2d kernel larger than padded input",
            input.dims(),
            kernel.dims(),
        ));
    };
    Ok(ConvGeometry {
        n,
        c,
        h,
        w,
        f,
        kh,
        kw,
        oh,
        ow,
        stride,
        padding,
    })
}

/// Input coordinate hit by output coordinate `o` at kernel tap `k`, if it
/// falls inside the unpadded input.
#[inline]
fn tap(o: usize, k: usize, stride: usize, padding: usize, extent: usize) -> Option<usize> {
    let pos = (o * stride + k).checked_sub(padding)?;
    (pos < extent).then_some(pos)
}

/// 2-D cross-correlation with zero padding. `input` is N×C×H×W, `kernel` is
/// F×C×kh×kw; the result is N×F×H'×W'.
pub fn conv2d<T: Scalar>(input: &Tensor<T>, kernel: &Tensor<T>, stride: usize, padding: usize) -> Result<Tensor<T>> {
    let g = conv_geometry(input, kernel, stride, padding)?;
    let (x, k) = (input.data(), kernel.data());
    let plane = g.oh * g.ow;
    let mut out = vec![T::zero(); g.n * g.f * plane];
    for n in 0..g.n {
        for f in 0..g.f {
            let dst = &mut out[(n * g.f + f) * plane..(n * g.f + f + 1) * plane];
            for c in 0..g.c {
                let src = &x[(n * g.c + c) * g.h * g.w..(n * g.c + c + 1) * g.h * g.w];
                for i in 0..g.kh {
                    for j in 0..g.kw {
                        let kv = k[((f * g.c + c) * g.kh + i) * g.kw + j];
                        for oy in 0..g.oh {
                            let Some(iy) = tap(oy, i, g.stride, g.padding, g.h) else {
                                continue;
                            };
                            for ox in 0..g.ow {
                                if let Some(ix) = tap(ox, j, g.stride, g.padding, g.w) {
                                    dst[oy * g.ow + ox] = dst[oy * g.ow + ox] + kv * src[iy * g.w + ix];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Tensor::new(&[g.n, g.f, g.oh, g.ow], out)
}

/// Gradients of [`conv2d`] with respect to its input and kernel.
pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    grad_out: &Tensor<T>,
    stride: usize,
    padding: usize,
) -> Result<(Tensor<T>, Tensor<T>)> {
    let g = conv_geometry(input, kernel, stride, padding)?;
    let expected = [g.n, g.f, g.oh, g.ow];
    if grad_out.dims() != expected {
        return Err(Error::shape("conv2d output gradient", grad_out.dims(), &expected));
    }
    let (x, k, go) = (input.data(), kernel.data(), grad_out.data());
    let plane = g.oh * g.ow;
    let mut gx = vec![T::zero(); x.len()];
    let mut gk = vec![T::zero(); k.len()];
    for n in 0..g.n {
        for f in 0..g.f {
            let gplane = &go[(n * g.f + f) * plane..(n * g.f + f + 1) * plane];
            for c in 0..g.c {
                let base = (n * g.c + c) * g.h * g.w;
                for i in 0..g.kh {
                    for j in 0..g.kw {
                        let kidx = ((f * g.c + c) * g.kh + i) * g.kw + j;
                        let kv = k[kidx];
                        let mut acc = T::zero();
                        for oy in 0..g.oh {
                            let Some(iy) = tap(oy, i, g.stride, g.padding, g.h) else {
                                continue;
                            };
                            for ox in 0..g.ow {
                                if let Some(ix) = tap(ox, j, g.stride, g.padding, g.w) {
                                    let gv = gplane[oy * g.ow + ox];
                                    let xi = base + iy * g.w + ix;
                                    acc = acc + gv * x[xi];
                                    gx[xi] = gx[xi] + gv * kv;
                                }
                            }
                        }
                        gk[kidx] = gk[kidx] + acc;
                    }
                }
            }
        }
    }
    Ok((
        Tensor::from_parts(input.shape().clone(), gx),
        Tensor::from_parts(kernel.shape().clone(), gk),
    ))
}

/// Per-channel 2-D correlation with a single shared `size`×`size` kernel,
/// stride 1 and zero "same" padding. `size` must be odd.
pub fn depthwise_conv2d_same<T: Scalar>(input: &Tensor<T>, kernel: &[T], size: usize) -> Result<Tensor<T>> {
    expect_rank(input, 4, "depthwise conv input")?;
    if size.is_multiple_of(2) || kernel.len() != size * size {
        return Err(Error::Validation(format!(
            "depthwise kernel must be odd-sized square, got size {size} with {} taps",
            kernel.len()
        )));
    }
    let [n, c, h, w] = <[usize; 4]>::try_from(input.dims()).expect("rank 4");
    let half = size / 2;
    let x = input.data();
    let mut out = vec![T::zero(); x.len()];
    for plane in 0..n * c {
        let src = &x[plane * h * w..(plane + 1) * h * w];
        let dst = &mut out[plane * h * w..(plane + 1) * h * w];
        for i in 0..size {
            for j in 0..size {
                let kv = kernel[i * size + j];
                for y in 0..h {
                    let Some(iy) = tap(y, i, 1, half, h) else { continue };
                    for xo in 0..w {
                        if let Some(ix) = tap(xo, j, 1, half, w) {
                            dst[y * w + xo] = dst[y * w + xo] + kv * src[iy * w + ix];
                        }
                    }
                }
            }
        }
    }
    Ok(Tensor::from_parts(input.shape().clone(), out))
}

/// Elementwise `max(x, 0)`.
pub fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Passes `grad_out` through where the forward input was positive.
pub fn relu_backward<T: Scalar>(input: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    if input.dims() != grad_out.dims() {
        return Err(Error::shape("relu gradient", grad_out.dims(), input.dims()));
    }
    let data = input
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&x, &g)| if x > T::zero() { g } else { T::zero() })
        .collect();
    Ok(Tensor::from_parts(input.shape().clone(), data))
}

/// Max pooling over N×C×H×W input, no padding.
pub fn maxpool2d<T: Scalar>(x: &Tensor<T>, window: usize, stride: usize) -> Result<Tensor<T>> {
    maxpool2d_with_indices(x, window, stride).map(|(out, _)| out)
}

/// Max pooling that also returns, for every output element, the flat input
/// index it was taken from. Ties resolve to the first maximum in scan order.
pub(crate) fn maxpool2d_with_indices<T: Scalar>(
    x: &Tensor<T>,
    window: usize,
    stride: usize,
) -> Result<(Tensor<T>, Vec<usize>)> {
    expect_rank(x, 4, "maxpool2d input")?;
    let [n, c, h, w] = <[usize; 4]>::try_from(x.dims()).expect("rank 4");
    if stride == 0 {
        return Err(Error::Validation("maxpool2d stride must be at least 1".into()));
    }
    let (Some(oh), Some(ow)) = (window_extent(h, window, stride, 0), window_extent(w, window, stride, 0)) else {
        return Err(Error::shape(
            "maxpool2d window larger than input",
            x.dims(),
            &[window, window],
        ));
    };
    let data = x.data();
    let mut out = Vec::with_capacity(n * c * oh * ow);
    let mut argmax = Vec::with_capacity(n * c * oh * ow);
    for plane in 0..n * c {
        let base = plane * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best_idx = base + oy * stride * w + ox * stride;
                let mut best = data[best_idx];
                for i in 0..window {
                    for j in 0..window {
                        let idx = base + (oy * stride + i) * w + ox * stride + j;
                        if data[idx] > best {
                            best = data[idx];
                            best_idx = idx;
                        }
                    }
                }
                out.push(best);
                argmax.push(best_idx);
            }
        }
    }
    Ok((Tensor::new(&[n, c, oh, ow], out)?, argmax))
}

/// Scatters pooled gradients back to the recorded argmax positions.
pub(crate) fn maxpool2d_backward<T: Scalar>(
    input_shape: &Shape,
    argmax: &[usize],
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>> {
    if argmax.len() != grad_out.len() {
        return Err(Error::State(format!(
            "maxpool2d backward received {} gradients for {} pooled outputs",
            grad_out.len(),
            argmax.len()
        )));
    }
    let mut gx = vec![T::zero(); input_shape.numel()];
    for (&idx, &g) in argmax.iter().zip(grad_out.data()) {
        gx[idx] = gx[idx] + g;
    }
    Ok(Tensor::from_parts(input_shape.clone(), gx))
}

fn check_labels<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> Result<(usize, usize)> {
    expect_rank(logits, 2, "softmax_xent logits")?;
    let (n, classes) = (logits.dims()[0], logits.dims()[1]);
    if labels.len() != n {
        return Err(Error::shape("softmax_xent labels", &[labels.len()], logits.dims()));
    }
    if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
        return Err(Error::Validation(format!(
            "label {l} at row {i} is outside [0, {classes})"
        )));
    }
    Ok((n, classes))
}

/// Mean softmax cross-entropy over the batch, together with the row-wise
/// softmax probabilities.
pub fn softmax_xent<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> Result<(T, Tensor<T>)> {
    let (n, classes) = check_labels(logits, labels)?;
    let z = logits.data();
    let mut probs = Vec::with_capacity(z.len());
    let mut total = T::zero();
    for (row, &label) in z.chunks_exact(classes).zip(labels) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let exps: Vec<T> = row.iter().map(|&v| (v - max).exp()).collect();
        let sum: T = exps.iter().copied().sum();
        // -log softmax(z)[label] = logsumexp(z) - z[label]
        total = total + (max + sum.ln() - row[label]);
        probs.extend(exps.into_iter().map(|e| e / sum));
    }
    let loss = total / T::from_f64(n as f64);
    Ok((loss, Tensor::from_parts(logits.shape().clone(), probs)))
}

/// Gradient of the mean cross-entropy with respect to the logits:
/// `(probs - onehot(labels)) / N`.
pub fn softmax_xent_backward<T: Scalar>(probs: &Tensor<T>, labels: &[usize]) -> Result<Tensor<T>> {
    let (n, classes) = check_labels(probs, labels)?;
    let scale = T::from_f64(1.0 / n as f64);
    let mut grad = probs.data().to_vec();
    for (row, &label) in grad.chunks_exact_mut(classes).zip(labels) {
        row[label] = row[label] - T::one();
        for v in row.iter_mut() {
            *v = *v * scale;
        }
    }
    Ok(Tensor::from_parts(probs.shape().clone(), grad))
}
