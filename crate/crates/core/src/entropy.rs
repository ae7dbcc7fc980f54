//! Base-2 Shannon entropy.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance on the total probability mass accepted by [`shannon_entropy`].
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Entropy in bits.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct EntropyValue(f64);

impl EntropyValue {
    pub(crate) fn from_bits(bits: f64) -> Self {
        EntropyValue(bits)
    }

    pub fn bits(self) -> f64 {
        self.0
    }
}

impl fmt::Display for EntropyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} bits", self.0)
    }
}

/// Neumaier-compensated sum; keeps million-cell grids accurate to ~1e-15.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        carry += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + carry
}

/// `-Σ p·log₂ p` with `0·log₂ 0 = 0`.
///
/// Every entry must be non-negative and the entries must sum to 1 within
/// [`MASS_TOLERANCE`].
pub fn shannon_entropy(probabilities: &[f64]) -> Result<EntropyValue> {
    let mut total = 0.0;
    for (i, &p) in probabilities.iter().enumerate() {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(Error::contract(format!("probability {i} is {p}, expected a finite value >= 0")));
        }
        total += p;
    }
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::contract(format!("probabilities sum to {total}, expected 1")));
    }
    let h = compensated_sum(probabilities.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()));
    Ok(EntropyValue((-h).max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn analytic_cases() {
        assert_abs_diff_eq!(shannon_entropy(&[0.25; 4]).unwrap().bits(), 2.0, epsilon = 1e-15);
        assert_eq!(shannon_entropy(&[1.0, 0.0, 0.0]).unwrap().bits(), 0.0);
        assert_abs_diff_eq!(shannon_entropy(&[0.5, 0.25, 0.25]).unwrap().bits(), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn contract_errors() {
        assert!(matches!(shannon_entropy(&[0.5, -0.1, 0.6]), Err(Error::Contract(_))));
        assert!(matches!(shannon_entropy(&[0.5, 0.4]), Err(Error::Contract(_))));
        assert!(matches!(shannon_entropy(&[f64::NAN, 1.0]), Err(Error::Contract(_))));
        assert!(shannon_entropy(&[]).is_err());
    }

    #[test]
    fn large_uniform_is_exact_to_rounding() {
        let k = 1_024_000;
        let h = shannon_entropy(&vec![1.0 / k as f64; k]).unwrap().bits();
        assert_abs_diff_eq!(h, (k as f64).log2(), epsilon = 1e-12);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        assert_eq!(compensated_sum([1.0, 1e100, 1.0, -1e100]), 2.0);
    }
}
