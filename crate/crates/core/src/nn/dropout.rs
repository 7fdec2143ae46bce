use crate::error::{Error, Result};
use crate::nn::rng::SeededRng;

/// Inverted-dropout mask: each entry is 0 with probability `rate`,
/// otherwise `1/(1-rate)`.
pub fn dropout_mask(len: usize, rate: f64, rng: &mut SeededRng) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Domain(format!("dropout rate must lie in [0, 1), got {rate}")));
    }
    if rate == 0.0 {
        return Ok(vec![1.0; len]);
    }
    let keep = 1.0 / (1.0 - rate);
    Ok((0..len).map(|_| if rng.unit() < rate { 0.0 } else { keep }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::rng::RngSeed;

    #[test]
    fn zero_rate_is_identity() {
        let m = dropout_mask(7, 0.0, &mut RngSeed(0).rng()).unwrap();
        assert_eq!(m, vec![1.0; 7]);
    }

    #[test]
    fn half_rate_fraction() {
        let m = dropout_mask(10_000, 0.5, &mut RngSeed(11).rng()).unwrap();
        let zeros = m.iter().filter(|&&v| v == 0.0).count() as f64 / 10_000.0;
        assert!((0.48..=0.52).contains(&zeros), "{zeros}");
        assert!(m.iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn deterministic() {
        let a = dropout_mask(100, 0.3, &mut RngSeed(4).rng()).unwrap();
        let b = dropout_mask(100, 0.3, &mut RngSeed(4).rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_rate() {
        let mut r = RngSeed(0).rng();
        assert!(dropout_mask(3, 1.0, &mut r).is_err());
        assert!(dropout_mask(3, -0.1, &mut r).is_err());
    }
}
