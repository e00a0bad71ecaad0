use std::fmt;

use num::{BigInt, BigRational, ToPrimitive, Zero};

/// Probability values the exact DP can run on.
///
/// `BigRational` gives exact results; [`Compensated`] is a double with
/// Neumaier-compensated accumulation for long horizons.
pub trait Probability: Clone + fmt::Debug + PartialEq + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn ratio(num: u64, den: u64) -> Self;
    fn add_assign(&mut self, other: &Self);
    /// `self * num / den`.
    fn scaled(&self, num: u64, den: u64) -> Self;
    fn to_f64(&self) -> f64;
    fn is_zero(&self) -> bool;
}

impl Probability for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }

    fn one() -> Self {
        BigRational::from_integer(BigInt::from(1))
    }

    fn ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }

    fn scaled(&self, num: u64, den: u64) -> Self {
        self * BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

/// Double-precision value carrying its Neumaier compensation term.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    pub fn new(x: f64) -> Self {
        Self { sum: x, comp: 0.0 }
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// Accumulated rounding correction not yet folded into the value.
    pub fn compensation(&self) -> f64 {
        self.comp
    }
}

impl Probability for Compensated {
    fn zero() -> Self {
        Self::new(0.0)
    }

    fn one() -> Self {
        Self::new(1.0)
    }

    fn ratio(num: u64, den: u64) -> Self {
        Self::new(num as f64 / den as f64)
    }

    fn add_assign(&mut self, other: &Self) {
        for x in [other.sum, other.comp] {
            let t = self.sum + x;
            if self.sum.abs() >= x.abs() {
                self.comp += (self.sum - t) + x;
            } else {
                self.comp += (x - t) + self.sum;
            }
            self.sum = t;
        }
    }

    fn scaled(&self, num: u64, den: u64) -> Self {
        Self::new(self.value() * num as f64 / den as f64)
    }

    fn to_f64(&self) -> f64 {
        self.value()
    }

    fn is_zero(&self) -> bool {
        self.value() == 0.0
    }
}
