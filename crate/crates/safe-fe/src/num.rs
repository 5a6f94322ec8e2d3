//! Scalar abstraction for the numeric kernels.
//!
//! The statistical primitives (entropy, information value, Pearson, AUC, JSD)
//! are generic over [`Scalar`] so they work for both `f32` and `f64`; the
//! dataset and pipeline layers fix the concrete type to [`crate::Real`].

use num_traits::{Float, FromPrimitive};

pub trait Scalar: Float + FromPrimitive + Send + Sync + std::fmt::Debug + 'static {
    /// Lossless count-to-scalar conversion for the sample sizes we handle.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Shannon entropy in bits of a discrete distribution given by counts.
/// Zero counts contribute nothing.
pub fn entropy_bits<S: Scalar>(counts: &[usize]) -> S {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return S::zero();
    }
    let n = S::from_count(total);
    let mut h = S::zero();
    for &c in counts {
        if c > 0 {
            let p = S::from_count(c) / n;
            h = h - p * p.log2();
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_of_balanced_pair_is_one_bit() {
        let h: f64 = entropy_bits(&[5, 5]);
        assert!((h - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_of_single_class_is_zero() {
        let h: f64 = entropy_bits(&[7, 0]);
        assert_eq!(h, 0.0);
        let h: f32 = entropy_bits(&[]);
        assert_eq!(h, 0.0);
    }
}
