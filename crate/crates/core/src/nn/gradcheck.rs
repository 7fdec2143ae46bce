//! Central finite-difference gradients, used as the oracle for every
//! hand-derived backward pass.

use crate::error::{Error, Result};
use crate::nn::optim::Parameters;

/// Gradient magnitudes below this are compared on an absolute scale.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

/// `(L(w+ε) − L(w−ε)) / 2ε` for every scalar parameter.
pub fn finite_diff_grad<P, F>(loss_fn: F, params: &P, epsilon: f64) -> Result<P>
where
    P: Parameters + Clone,
    F: Fn(&P) -> f64,
{
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be > 0, got {epsilon}")));
    }
    let mut grads = params.clone();
    grads.zero();
    let mut work = params.clone();
    let shape: Vec<(String, usize)> = params.tensors().into_iter().map(|(n, t)| (n, t.len())).collect();
    for (ti, (name, len)) in shape.iter().enumerate() {
        for k in 0..*len {
            let orig = nth(&mut work, ti)[k];
            nth(&mut work, ti)[k] = orig + epsilon;
            let plus = loss_fn(&work);
            nth(&mut work, ti)[k] = orig - epsilon;
            let minus = loss_fn(&work);
            nth(&mut work, ti)[k] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::Numeric {
                    location: format!("{name}[{k}]"),
                    message: format!("non-finite loss (+ε: {plus}, −ε: {minus})"),
                });
            }
            nth(&mut grads, ti)[k] = (plus - minus) / (2.0 * epsilon);
        }
    }
    Ok(grads)
}

fn nth<P: Parameters>(p: &mut P, i: usize) -> &mut [f64] {
    p.tensors_mut().swap_remove(i).1
}

/// Per-tensor maximum of `|a − n| / max(|a|, |n|, REL_ERROR_FLOOR)`.
pub fn max_relative_error<P: Parameters>(analytic: &P, numeric: &P) -> Vec<(String, f64)> {
    analytic
        .tensors()
        .into_iter()
        .zip(numeric.tensors())
        .map(|((name, a), (_, n))| {
            let worst = a
                .iter()
                .zip(n)
                .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(REL_ERROR_FLOOR))
                .fold(0.0, f64::max);
            (name, worst)
        })
        .collect()
}
