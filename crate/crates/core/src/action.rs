//! Canonical 16-entry action/message layout shared by agents and robots.
//!
//! The first [`N_ACT`] entries are actions. Entries 9..=14 are free payload
//! that only travels inside messages and robot memories, and the last entry is
//! the information bit.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

/// Length of every message, program, memory and action vector.
pub const N_PROG: usize = 16;
/// Number of leading entries interpreted as actions.
pub const N_ACT: usize = 9;

pub const MOVE_X: usize = 0;
pub const MOVE_Y: usize = 1;
pub const EAT: usize = 2;
pub const REPRODUCE: usize = 3;
pub const SEND_MESSAGE: usize = 4;
pub const WRITE_SELF_MESSAGE: usize = 5;
/// Robot alias of [`WRITE_SELF_MESSAGE`].
pub const UPDATE_MEMORY: usize = WRITE_SELF_MESSAGE;
pub const TERRAIN_ENERGY_GAIN: usize = 6;
/// `> θ` reads the terrain bit into memory, `< -θ` writes the info bit out.
pub const WRITE_TERRAIN: usize = 7;
pub const PUSH: usize = 8;
pub const INFO_BIT: usize = 15;

/// Human-readable names in index order, used by reports and scenario files.
pub const ACTION_NAMES: [&str; N_PROG] = [
    "MOVE_X",
    "MOVE_Y",
    "EAT",
    "REPRODUCE",
    "SEND_MESSAGE",
    "WRITE_SELF_MESSAGE",
    "TERRAIN_ENERGY_GAIN",
    "WRITE_TERRAIN",
    "PUSH",
    "PAYLOAD_0",
    "PAYLOAD_1",
    "PAYLOAD_2",
    "PAYLOAD_3",
    "PAYLOAD_4",
    "PAYLOAD_5",
    "INFO_BIT",
];

/// A 16-entry vector in the canonical layout.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ActionVector(pub [f32; N_PROG]);

impl ActionVector {
    pub const ZERO: ActionVector = ActionVector([0.0; N_PROG]);
    pub const ONES: ActionVector = ActionVector([1.0; N_PROG]);

    /// Vector with the listed entries set and everything else zero.
    pub fn with(entries: &[(usize, f32)]) -> Self {
        let mut v = Self::ZERO;
        for &(i, x) in entries {
            v.0[i] = x;
        }
        v
    }

    /// Copy with entry `i` replaced.
    pub fn set(mut self, i: usize, x: f32) -> Self {
        self.0[i] = x;
        self
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    /// Elementwise clamp into `[-1, 1]`; NaN maps to 0.
    pub fn clamped(&self) -> Self {
        let mut out = *self;
        for x in out.0.iter_mut() {
            *x = if x.is_nan() { 0.0 } else { x.clamp(-1.0, 1.0) };
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// The information bit cut at `threshold`.
    pub fn info_bit(&self, threshold: f32) -> bool {
        binarize(self.0[INFO_BIT], threshold)
    }
}

impl Index<usize> for ActionVector {
    type Output = f32;
    fn index(&self, i: usize) -> &f32 {
        &self.0[i]
    }
}

impl IndexMut<usize> for ActionVector {
    fn index_mut(&mut self, i: usize) -> &mut f32 {
        &mut self.0[i]
    }
}

impl From<[f32; N_PROG]> for ActionVector {
    fn from(v: [f32; N_PROG]) -> Self {
        ActionVector(v)
    }
}

/// Cut a continuous value into a bit: strictly above `threshold` is 1.
#[inline]
pub fn binarize(x: f32, threshold: f32) -> bool {
    x > threshold
}

#[inline]
pub fn bit_value(b: bool) -> f32 {
    if b {
        1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_consistent() {
        assert!(N_PROG > N_ACT);
        assert_eq!(INFO_BIT, N_PROG - 1);
        assert_eq!(UPDATE_MEMORY, WRITE_SELF_MESSAGE);
        for i in [MOVE_X, MOVE_Y, EAT, REPRODUCE, SEND_MESSAGE, WRITE_SELF_MESSAGE, TERRAIN_ENERGY_GAIN, WRITE_TERRAIN, PUSH] {
            assert!(i < N_ACT);
        }
        assert_eq!(ACTION_NAMES[PUSH], "PUSH");
        assert_eq!(ACTION_NAMES[INFO_BIT], "INFO_BIT");
    }

    #[test]
    fn clamp_bounds_and_nan() {
        let mut v = ActionVector::ZERO;
        v[0] = 3.0;
        v[1] = -7.5;
        v[2] = f32::NAN;
        v[3] = 0.25;
        let c = v.clamped();
        assert_eq!(c[0], 1.0);
        assert_eq!(c[1], -1.0);
        assert_eq!(c[2], 0.0);
        assert_eq!(c[3], 0.25);
    }

    #[test]
    fn binarize_is_strict() {
        assert!(!binarize(0.5, 0.5));
        assert!(binarize(0.5001, 0.5));
        assert!(!binarize(-1.0, 0.5));
    }
}
