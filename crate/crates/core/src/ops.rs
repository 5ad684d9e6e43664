//! Complex-multiplication accounting.
//!
//! Counters are plain values threaded through `&mut` and summed by the
//! caller; nothing here is global. One complex multiply is one unit. An
//! `n`-point FFT is charged the radix-2 butterfly count `ceil(n/2 * log2 n)`
//! regardless of the length actually planned, which is the cost model the
//! complexity comparison is stated in.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCount {
    pub complex_mults: u64,
}

impl OpCount {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn mults(&mut self, n: usize) {
        self.complex_mults += n as u64;
    }

    #[inline]
    pub fn fft(&mut self, n: usize) {
        self.complex_mults += fft_cost(n);
    }
}

/// Radix-2 butterfly multiply count for an `n`-point transform.
pub fn fft_cost(n: usize) -> u64 {
    if n < 2 {
        return 0;
    }
    let n = n as f64;
    (0.5 * n * n.log2()).ceil() as u64
}

impl Add for OpCount {
    type Output = OpCount;
    fn add(self, rhs: OpCount) -> OpCount {
        OpCount {
            complex_mults: self.complex_mults + rhs.complex_mults,
        }
    }
}

impl AddAssign for OpCount {
    fn add_assign(&mut self, rhs: OpCount) {
        self.complex_mults += rhs.complex_mults;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radix2_counts() {
        assert_eq!(fft_cost(1), 0);
        assert_eq!(fft_cost(2), 1);
        assert_eq!(fft_cost(1024), 5120);
        // non power of two rounds up
        assert_eq!(fft_cost(1280), (640.0 * 1280f64.log2()).ceil() as u64);
    }

    #[test]
    fn accumulates() {
        let mut a = OpCount::new();
        a.mults(10);
        a.fft(8);
        let b = a + a;
        assert_eq!(a.complex_mults, 22);
        assert_eq!(b.complex_mults, 44);
    }
}
