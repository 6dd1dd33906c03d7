use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Central-difference gradient of a scalar function:
/// `(f(x + eps·e_i) - f(x - eps·e_i)) / (2·eps)` for every coordinate `i`.
pub fn finite_diff_grad<T, F>(mut f: F, x: &Tensor<T>, eps: T) -> Result<Tensor<T>>
where
    T: Scalar,
    F: FnMut(&Tensor<T>) -> T,
{
    if !(eps > T::zero()) {
        return Err(Error::Validation(format!(
            "finite difference step must be positive, got {eps}"
        )));
    }
    let mut probe = x.clone();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = x.data()[i];
        probe.data_mut()[i] = orig + eps;
        let plus = f(&probe);
        probe.data_mut()[i] = orig - eps;
        let minus = f(&probe);
        probe.data_mut()[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::Numeric(format!(
                "function is not finite around coordinate {i} (f+ = {plus}, f- = {minus})"
            )));
        }
        grad.push((plus - minus) / (eps + eps));
    }
    Tensor::new(x.dims(), grad)
}

/// Norm-wise relative error `‖a − b‖ / max(‖a‖, ‖b‖)`, or the absolute
/// error when both sides are below `floor`.
pub fn relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    assert_eq!(a.len(), b.len(), "relative_error length mismatch");
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    diff / norm(a).max(norm(b)).max(floor)
}
