//! Closed intervals `[lo, hi]` with a point value, for propagating Monte Carlo
//! uncertainty through monotone maps. Exact quantities are degenerate intervals.

use std::ops::{Div, Mul};

use serde::{Deserialize, Serialize};

use crate::connectivity::Estimate;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub value: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(x: f64) -> Self {
        Self {
            lo: x,
            value: x,
            hi: x,
        }
    }

    pub fn new(lo: f64, value: f64, hi: f64) -> Self {
        debug_assert!(lo <= value && value <= hi, "{lo} {value} {hi}");
        Self { lo, value, hi }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    /// `1 - x`, bounds swapped.
    pub fn complement(self) -> Self {
        Self {
            lo: 1.0 - self.hi,
            value: 1.0 - self.value,
            hi: 1.0 - self.lo,
        }
    }

    pub fn scale(self, c: f64) -> Self {
        debug_assert!(c >= 0.0);
        Self {
            lo: self.lo * c,
            value: self.value * c,
            hi: self.hi * c,
        }
    }

    /// `x^a` for `x >= 0`, `a >= 0` (monotone increasing).
    pub fn powf(self, a: f64) -> Self {
        Self {
            lo: self.lo.powf(a),
            value: self.value.powf(a),
            hi: self.hi.powf(a),
        }
    }

    pub fn map_increasing(self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            lo: f(self.lo),
            value: f(self.value),
            hi: f(self.hi),
        }
    }

    pub fn map_decreasing(self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            lo: f(self.hi),
            value: f(self.value),
            hi: f(self.lo),
        }
    }

    pub fn min(self, other: Self) -> Self {
        Self {
            lo: self.lo.min(other.lo),
            value: self.value.min(other.value),
            hi: self.hi.min(other.hi),
        }
    }

    pub fn clamp_unit(self) -> Self {
        self.map_increasing(|x| x.clamp(0.0, 1.0))
    }
}

/// Product of non-negative intervals.
impl Mul for Interval {
    type Output = Self;

    fn mul(self, other: Self) -> Self {
        Self {
            lo: self.lo * other.lo,
            value: self.value * other.value,
            hi: self.hi * other.hi,
        }
    }
}

/// Quotient of a non-negative interval by a positive one.
impl Div for Interval {
    type Output = Self;

    fn div(self, other: Self) -> Self {
        Self {
            lo: self.lo / other.hi,
            value: self.value / other.value,
            hi: self.hi / other.lo,
        }
    }
}

impl From<&Estimate> for Interval {
    fn from(e: &Estimate) -> Self {
        Self {
            lo: e.ci_low,
            value: e.value,
            hi: e.ci_high,
        }
    }
}

impl From<Estimate> for Interval {
    fn from(e: Estimate) -> Self {
        (&e).into()
    }
}
