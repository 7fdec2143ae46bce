use crate::error::{Error, Result};
use crate::nn::tensor::Tensor2;

/// Probability floor applied before taking logs in the loss.
pub const PROB_FLOOR: f64 = 1e-12;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// One-layer MLP with tanh activation: `tanh(W·h + b)`.
pub fn mlp_tanh(w: &Tensor2, b: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    if w.rows() != b.len() {
        return Err(Error::shape("mlp bias", w.rows(), b.len()));
    }
    let mut out = w.matvec(h, "mlp input")?;
    for (o, bi) in out.iter_mut().zip(b) {
        *o = (*o + bi).tanh();
    }
    Ok(out)
}

/// Max-shifted softmax.
pub fn softmax(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::Domain("softmax of an empty vector".into()));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::Numeric {
            location: format!("softmax score {i}"),
            message: format!("non-finite score {}", scores[i]),
        });
    }
    Ok(softmax_unchecked(scores))
}

pub(crate) fn softmax_unchecked(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = out.iter().sum();
    for o in &mut out {
        *o /= z;
    }
    out
}

/// `-ln(predicted[true_class])` with the probability floored at [`PROB_FLOOR`].
pub fn cross_entropy(predicted: &[f64], true_class: usize) -> Result<f64> {
    if true_class >= predicted.len() {
        return Err(Error::Domain(format!(
            "class index {true_class} out of range for {} classes",
            predicted.len()
        )));
    }
    let total: f64 = predicted.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("predicted probabilities sum to {total}, not 1")));
    }
    Ok(-predicted[true_class].max(PROB_FLOOR).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn mlp_zero_weights() {
        let out = mlp_tanh(&Tensor2::zeros(3, 2), &[0.0; 3], &[4.0, -2.0]).unwrap();
        assert_eq!(out, vec![0.0; 3]);
    }

    #[test]
    fn mlp_identity_half() {
        // tanh(0.5) = 0.46211715726...
        let out = mlp_tanh(&Tensor2::identity(1), &[0.0], &[0.5]).unwrap();
        assert_abs_diff_eq!(out[0], 0.46212, epsilon = 1e-5);
    }

    #[test]
    fn mlp_saturates() {
        let out = mlp_tanh(&Tensor2::identity(2), &[0.0, 0.0], &[0.0, 1000.0]).unwrap();
        assert_eq!(out[0], 0.0);
        assert_abs_diff_eq!(out[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mlp_shape_errors() {
        assert!(mlp_tanh(&Tensor2::zeros(2, 2), &[0.0], &[0.0, 0.0]).is_err());
        assert!(mlp_tanh(&Tensor2::zeros(2, 2), &[0.0, 0.0], &[0.0]).is_err());
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[42.0]).unwrap(), vec![1.0]);
        assert_eq!(softmax(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        // e/(e+e^2) = 1/(1+e) = 0.2689414213699951
        let p = softmax(&[1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(p[0], 0.26894, epsilon = 1e-5);
        assert_abs_diff_eq!(p[1], 0.73106, epsilon = 1e-5);
        assert!(softmax(&[]).is_err());
    }

    #[test]
    fn cross_entropy_examples() {
        assert_eq!(cross_entropy(&[1.0, 0.0], 0).unwrap(), 0.0);
        assert_abs_diff_eq!(cross_entropy(&[0.5, 0.5], 1).unwrap(), 0.693147, epsilon = 1e-6);
        assert_abs_diff_eq!(cross_entropy(&[0.9, 0.1], 1).unwrap(), 2.302585, epsilon = 1e-6);
        assert!(cross_entropy(&[0.5, 0.5], 2).is_err());
        // floored, not infinite
        assert_abs_diff_eq!(cross_entropy(&[1.0, 0.0], 1).unwrap(), -(1e-12f64).ln());
    }

    proptest! {
        #[test]
        fn softmax_normalized_and_shift_invariant(
            scores in prop::collection::vec(-50.0f64..50.0, 1..20),
            shift in -100.0f64..100.0,
        ) {
            let p = softmax(&scores).unwrap();
            prop_assert!(p.iter().all(|&v| v >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
            let q = softmax(&shifted).unwrap();
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
