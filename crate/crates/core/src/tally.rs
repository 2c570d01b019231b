//! Exact accumulation of `f32` quantities.
//!
//! Energy bookkeeping must balance to the last bit, so sums of `f32` values
//! are kept as a fixed-point big integer in units of the smallest subnormal
//! (2^-149). Any finite `f32` is an integer multiple of that unit, so adding
//! and subtracting never rounds.

use std::fmt;
use std::ops::{AddAssign, Neg, SubAssign};

const DIGITS: usize = 10;
const DIGIT_BITS: u32 = 32;
const DIGIT_MASK: i64 = (1 << DIGIT_BITS) - 1;
/// Bit position of 2^0 in the fixed-point representation.
const UNIT_SHIFT: i32 = 149;

/// Exact running sum of `f32` values.
#[derive(Clone, Copy, Default)]
pub struct EnergyTally {
    // little-endian base-2^32 digits, lazily carried
    digits: [i64; DIGITS],
}

impl EnergyTally {
    pub const ZERO: EnergyTally = EnergyTally { digits: [0; DIGITS] };

    pub fn from_f32(x: f32) -> Self {
        let mut t = Self::ZERO;
        t.add(x);
        t
    }

    /// Add `x` exactly. Non-finite values are rejected with a panic; callers
    /// check finiteness before bookkeeping.
    pub fn add(&mut self, x: f32) {
        self.accumulate(x, false);
    }

    pub fn sub(&mut self, x: f32) {
        self.accumulate(x, true);
    }

    fn accumulate(&mut self, x: f32, negate: bool) {
        assert!(x.is_finite(), "non-finite value in energy tally: {x}");
        if x == 0.0 {
            return;
        }
        let bits = x.to_bits();
        let negative = (bits >> 31 == 1) != negate;
        let exp = ((bits >> 23) & 0xff) as i32;
        let frac = (bits & 0x7f_ffff) as i64;
        // value = mantissa * 2^(shift - 149)
        let (mantissa, shift) = if exp == 0 { (frac, 0) } else { (frac | 0x80_0000, exp - 1) };
        let pos = (shift / DIGIT_BITS as i32) as usize;
        let off = shift as u32 % DIGIT_BITS;
        let wide = mantissa << off; // < 2^55
        let lo = wide & DIGIT_MASK;
        let hi = wide >> DIGIT_BITS;
        let sign = if negative { -1 } else { 1 };
        self.digits[pos] += sign * lo;
        self.digits[pos + 1] += sign * hi;
        self.maybe_normalize();
    }

    fn maybe_normalize(&mut self) {
        if self.digits.iter().any(|d| d.unsigned_abs() > (1u64 << 60)) {
            self.normalize();
        }
    }

    /// Propagate carries so every digit but the last is in `[0, 2^32)`.
    fn normalize(&mut self) {
        let mut carry = 0i64;
        for i in 0..DIGITS - 1 {
            let v = self.digits[i] + carry;
            self.digits[i] = v & DIGIT_MASK;
            carry = v >> DIGIT_BITS; // arithmetic shift = floor division
        }
        self.digits[DIGITS - 1] += carry;
    }

    fn canonical(&self) -> [i64; DIGITS] {
        let mut c = *self;
        c.normalize();
        c.digits
    }

    /// Nearest `f64` to the exact value.
    pub fn to_f64(&self) -> f64 {
        let d = self.canonical();
        let mut acc = 0.0f64;
        for (i, &v) in d.iter().enumerate().rev() {
            acc += v as f64 * 2f64.powi(i as i32 * DIGIT_BITS as i32 - UNIT_SHIFT);
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.canonical().iter().all(|&d| d == 0)
    }
}

impl PartialEq for EnergyTally {
    fn eq(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }
}

impl Eq for EnergyTally {}

impl AddAssign for EnergyTally {
    fn add_assign(&mut self, rhs: Self) {
        for (a, b) in self.digits.iter_mut().zip(rhs.canonical()) {
            *a += b;
        }
        self.maybe_normalize();
    }
}

impl SubAssign for EnergyTally {
    fn sub_assign(&mut self, rhs: Self) {
        for (a, b) in self.digits.iter_mut().zip(rhs.canonical()) {
            *a -= b;
        }
        self.maybe_normalize();
    }
}

impl Neg for EnergyTally {
    type Output = EnergyTally;
    fn neg(self) -> Self {
        let mut out = EnergyTally::ZERO;
        out -= self;
        out
    }
}

impl std::ops::Add for EnergyTally {
    type Output = EnergyTally;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl std::ops::Sub for EnergyTally {
    type Output = EnergyTally;
    fn sub(mut self, rhs: Self) -> Self {
        self -= rhs;
        self
    }
}

impl std::iter::Sum<f32> for EnergyTally {
    fn sum<I: Iterator<Item = f32>>(iter: I) -> Self {
        let mut t = EnergyTally::ZERO;
        for x in iter {
            t.add(x);
        }
        t
    }
}

impl fmt::Debug for EnergyTally {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EnergyTally({})", self.to_f64())
    }
}
