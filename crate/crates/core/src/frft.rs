//! Unitary DFT and fast discrete fractional Fourier transform.
//!
//! The transform uses the dimensionless grid `x = (n - floor(N/2)) / sqrt(N)`
//! for both the input and the output, so an `N`-sample buffer spans a
//! symmetric interval of width `sqrt(N)`. With that normalisation a chirp
//! `exp(j pi c x^2)` collapses to an impulse at the angle `phi` where
//! `cot(phi) = -c`, and a point `(t, f)` of the time-frequency plane (in
//! samples and DFT bins) lands on output bin `t cos(phi) + f sin(phi)` from
//! the centre.
//!
//! For `|phi| <= pi/2` the transform is evaluated as
//!
//! ```text
//! F^phi = exp(j phi/2) * Q(-tan(phi/2)) * C(sin(phi)) * Q(-tan(phi/2))
//! ```
//!
//! where `Q(c)` multiplies by `exp(j pi c x^2)` and `C(s)` multiplies the
//! centred spectrum by `exp(-j pi s k^2 / N)`, i.e. a circular chirp
//! convolution carried out with two FFTs. Every factor is unitary, so the
//! composite is unitary to rounding. Angles outside `[-pi/2, pi/2]` are
//! reduced with the exact parity operator `F^pi`. Multiples of `pi/2`
//! (to within rounding of the angle) are evaluated directly as identity,
//! centred DFT, parity or centred inverse DFT.

use crate::error::Result;
use crate::ops::OpCount;
use crate::signal::ComplexSignal;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::Arc;

/// Forward and inverse FFT of one length, shareable across threads.
#[derive(Clone)]
pub struct FftPlan {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPlan").field("len", &self.len).finish()
    }
}

impl FftPlan {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place unnormalised forward transform.
    pub fn forward_raw(&self, buf: &mut [Complex64], ops: &mut OpCount) {
        debug_assert_eq!(buf.len(), self.len);
        self.forward.process(buf);
        ops.fft(self.len);
    }

    /// In-place unnormalised inverse transform.
    pub fn inverse_raw(&self, buf: &mut [Complex64], ops: &mut OpCount) {
        debug_assert_eq!(buf.len(), self.len);
        self.inverse.process(buf);
        ops.fft(self.len);
    }

    /// Unitary forward DFT, standard (DC first) ordering.
    pub fn forward_unitary(&self, buf: &mut [Complex64], ops: &mut OpCount) {
        self.forward_raw(buf, ops);
        scale(buf, 1.0 / (self.len as f64).sqrt());
    }

    pub fn inverse_unitary(&self, buf: &mut [Complex64], ops: &mut OpCount) {
        self.inverse_raw(buf, ops);
        scale(buf, 1.0 / (self.len as f64).sqrt());
    }

    /// Unitary DFT on centred indices: bin `floor(N/2)` is DC.
    pub fn centered_forward(&self, buf: &mut [Complex64], ops: &mut OpCount) {
        let h = self.len / 2;
        buf.rotate_left(h);
        self.forward_unitary(buf, ops);
        buf.rotate_right(h);
    }

    pub fn centered_inverse(&self, buf: &mut [Complex64], ops: &mut OpCount) {
        let h = self.len / 2;
        buf.rotate_left(h);
        self.inverse_unitary(buf, ops);
        buf.rotate_right(h);
    }
}

fn scale(buf: &mut [Complex64], s: f64) {
    for v in buf.iter_mut() {
        *v *= s;
    }
}

/// Unitary forward DFT (DC first).
pub fn fft(x: &ComplexSignal) -> Result<ComplexSignal> {
    x.require_non_empty("fft")?;
    let mut buf = x.samples().to_vec();
    FftPlan::new(buf.len()).forward_unitary(&mut buf, &mut OpCount::new());
    Ok(ComplexSignal::with_rate_of(buf, x))
}

/// Unitary inverse DFT (DC first).
pub fn ifft(x: &ComplexSignal) -> Result<ComplexSignal> {
    x.require_non_empty("ifft")?;
    let mut buf = x.samples().to_vec();
    FftPlan::new(buf.len()).inverse_unitary(&mut buf, &mut OpCount::new());
    Ok(ComplexSignal::with_rate_of(buf, x))
}

/// Reduce an angle to `(-pi, pi]`.
pub fn wrap_angle(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Angles this close to a multiple of `pi/2` (in quarter turns) take the
/// exact identity, DFT, parity or inverse-DFT path.
const QUARTER_TURN_SNAP: f64 = 1e-9;

/// Reusable fractional Fourier transform of a fixed length.
#[derive(Debug, Clone)]
pub struct FrftPlan {
    fft: FftPlan,
}

impl FrftPlan {
    pub fn new(len: usize) -> Self {
        Self {
            fft: FftPlan::new(len),
        }
    }

    pub fn len(&self) -> usize {
        self.fft.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fft.is_empty()
    }

    pub fn fft_plan(&self) -> &FftPlan {
        &self.fft
    }

    /// Transform `x` by rotation angle `phi` (radians, any real).
    pub fn transform(&self, x: &[Complex64], phi: f64, ops: &mut OpCount) -> Vec<Complex64> {
        let mut buf = x.to_vec();
        self.transform_in_place(&mut buf, phi, ops);
        buf
    }

    pub fn transform_in_place(&self, buf: &mut [Complex64], phi: f64, ops: &mut OpCount) {
        assert_eq!(buf.len(), self.len(), "frft buffer length mismatch");
        let quarters = wrap_angle(phi) / FRAC_PI_2;
        let nearest = quarters.round();
        if (quarters - nearest).abs() < QUARTER_TURN_SNAP {
            match (nearest as i64).rem_euclid(4) {
                0 => {}
                1 => self.fft.centered_forward(buf, ops),
                2 => parity(buf),
                _ => self.fft.centered_inverse(buf, ops),
            }
            return;
        }
        let mut phi = wrap_angle(phi);
        let flip = phi.abs() > FRAC_PI_2;
        if flip {
            phi -= PI.copysign(phi);
        }
        self.shear_rotate(buf, phi, ops);
        if flip {
            parity(buf);
        }
    }

    fn shear_rotate(&self, buf: &mut [Complex64], phi: f64, ops: &mut OpCount) {
        let n = self.len();
        let h = (n / 2) as f64;
        let nf = n as f64;
        let t = (0.5 * phi).tan();
        let s = phi.sin();

        let time_chirp = |i: usize| {
            let x = i as f64 - h;
            Complex64::from_polar(1.0, -PI * t * x * x / nf)
        };

        for (i, v) in buf.iter_mut().enumerate() {
            *v *= time_chirp(i);
        }
        ops.mults(n);

        // Chirp convolution in the (standard-order) spectrum of the
        // centred sequence.
        let hn = n / 2;
        buf.rotate_left(hn);
        self.fft.forward_raw(buf, ops);
        for (k, v) in buf.iter_mut().enumerate() {
            let kc = if k < n - hn { k as f64 } else { k as f64 - nf };
            *v *= Complex64::from_polar(1.0, -PI * s * kc * kc / nf);
        }
        ops.mults(n);
        self.fft.inverse_raw(buf, ops);
        buf.rotate_right(hn);

        let global = Complex64::from_polar(1.0 / nf, 0.5 * phi);
        for (i, v) in buf.iter_mut().enumerate() {
            *v *= time_chirp(i) * global;
        }
        ops.mults(n);
    }
}

/// `y[m] = x[-m]` on centred indices (the transform at angle `pi`).
pub fn parity(buf: &mut [Complex64]) {
    let n = buf.len();
    if n < 2 {
        return;
    }
    let h = n / 2;
    // centred index m maps to array index m + h; -m maps to (2h - i) mod n
    buf.rotate_left(h);
    buf[1..].reverse();
    buf.rotate_right(h);
}

/// Fractional Fourier transform of `x` at rotation angle `phi` (radians).
pub fn frft(x: &ComplexSignal, phi: f64) -> Result<ComplexSignal> {
    x.require_non_empty("frft")?;
    let plan = FrftPlan::new(x.len());
    let out = plan.transform(x.samples(), phi, &mut OpCount::new());
    Ok(ComplexSignal::with_rate_of(out, x))
}
