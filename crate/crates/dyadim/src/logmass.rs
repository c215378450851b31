//! Base-2 log-domain arithmetic for node masses.
//!
//! Masses of deep nodes underflow quickly in linear space (a depth-40 node of
//! a binary tree already sits near 2^-40 times a product of forty weights),
//! so all mass bookkeeping runs on `log2(mass)` with an explicit -inf for
//! zero. Products become sums; ratios become differences, with the one
//! convention that a ratio against a zero denominator is +inf.

use std::fmt;
use std::ops::{Mul, MulAssign};

use crate::error::{Error, Result};

/// A nonnegative mass stored as `log2(mass)`; zero mass is `-inf`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogMass(f64);

impl LogMass {
    pub const ONE: LogMass = LogMass(0.0);
    pub const ZERO: LogMass = LogMass(f64::NEG_INFINITY);

    /// Wraps a linear-domain mass. Rejects negatives, NaN, and infinities.
    pub fn from_linear(x: f64) -> Result<Self> {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::domain(format!(
                "linear mass must be finite and nonnegative, got {x}"
            )));
        }
        Ok(LogMass(x.log2()))
    }

    /// Wraps an already-logarithmic value (`-inf` means zero mass).
    pub fn from_log2(l: f64) -> Self {
        debug_assert!(!l.is_nan(), "log2 mass must not be NaN");
        LogMass(l)
    }

    pub fn log2(self) -> f64 {
        self.0
    }

    /// Back to linear domain; underflows to 0.0 for very negative logs.
    pub fn linear(self) -> f64 {
        self.0.exp2()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// log2 of the ratio `self / den`; +inf when the denominator is zero.
    ///
    /// The zero-denominator convention keeps the statistics total: a
    /// positive-mass node whose central child has zero mass contributes an
    /// infinite ratio, which max/min then treat like any other value.
    pub fn ratio_log2(self, den: LogMass) -> f64 {
        if den.is_zero() {
            f64::INFINITY
        } else {
            self.0 - den.0
        }
    }
}

// Log-domain: multiplying masses adds their exponents.
#[allow(clippy::suspicious_arithmetic_impl)]
impl Mul for LogMass {
    type Output = LogMass;
    fn mul(self, rhs: LogMass) -> LogMass {
        // -inf + finite = -inf, so zero absorbs as it should. Masses are
        // never +inf, hence no -inf + inf = NaN hazard.
        LogMass(self.0 + rhs.0)
    }
}

#[allow(clippy::suspicious_op_assign_impl)]
impl MulAssign for LogMass {
    fn mul_assign(&mut self, rhs: LogMass) {
        self.0 += rhs.0;
    }
}

impl fmt::Display for LogMass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            write!(f, "0")
        } else {
            write!(f, "2^{}", self.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_add_logs() {
        let a = LogMass::from_linear(0.25).unwrap();
        let b = LogMass::from_linear(0.5).unwrap();
        assert_eq!((a * b).log2(), -3.0);
        assert_eq!((a * b).linear(), 0.125);
    }

    #[test]
    fn zero_absorbs() {
        let z = LogMass::from_linear(0.0).unwrap();
        assert!(z.is_zero());
        let a = LogMass::from_linear(0.7).unwrap();
        assert!((z * a).is_zero());
    }

    #[test]
    fn ratio_of_dyadic_masses() {
        let num = LogMass::from_log2(-3.0);
        let den = LogMass::from_log2(-5.0);
        assert_eq!(num.ratio_log2(den), 2.0);
    }

    #[test]
    fn ratio_with_zero_denominator_is_infinite() {
        let num = LogMass::from_log2(-3.0);
        assert_eq!(num.ratio_log2(LogMass::ZERO), f64::INFINITY);
        // Total even when the numerator is zero as well.
        assert_eq!(LogMass::ZERO.ratio_log2(LogMass::ZERO), f64::INFINITY);
    }

    #[test]
    fn rejects_bad_linear_inputs() {
        assert!(LogMass::from_linear(-0.1).is_err());
        assert!(LogMass::from_linear(f64::NAN).is_err());
        assert!(LogMass::from_linear(f64::INFINITY).is_err());
    }

    #[test]
    fn one_is_multiplicative_identity() {
        let a = LogMass::from_linear(0.3).unwrap();
        assert_eq!((LogMass::ONE * a).log2(), a.log2());
    }
}
