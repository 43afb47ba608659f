//! Overflow-safe sums of complex exponentials.

use num_complex::Complex64;

/// Running value of `sum_k exp(e_k + i theta_k)`, stored as a shift `m`
/// (the largest `e_k` seen so far) and the scaled sums
/// `(re, im) = sum_k exp(e_k - m) (cos theta_k, sin theta_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexExpSum {
    shift: f64,
    re: f64,
    im: f64,
    count: usize,
}

impl Default for ComplexExpSum {
    fn default() -> Self {
        Self::new()
    }
}

impl ComplexExpSum {
    pub fn new() -> Self {
        Self {
            shift: f64::NEG_INFINITY,
            re: 0.0,
            im: 0.0,
            count: 0,
        }
    }

    /// Adds `exp(exponent + i angle)`.
    #[inline]
    pub fn push(&mut self, exponent: f64, angle: f64) {
        let (s, c) = angle.sin_cos();
        self.push_scaled(exponent, c, s);
    }

    /// Adds the real term `exp(exponent)`.
    #[inline]
    pub fn push_real(&mut self, exponent: f64) {
        self.push_scaled(exponent, 1.0, 0.0);
    }

    #[inline]
    fn push_scaled(&mut self, exponent: f64, c: f64, s: f64) {
        self.count += 1;
        if exponent <= self.shift {
            let w = (exponent - self.shift).exp();
            self.re += w * c;
            self.im += w * s;
        } else {
            let rescale = (self.shift - exponent).exp();
            self.re = self.re * rescale + c;
            self.im = self.im * rescale + s;
            self.shift = exponent;
        }
    }

    /// Two-pass evaluation: the shift is the maximum exponent, found first.
    pub fn two_pass(exponents: &[f64], angles: &[f64]) -> Self {
        assert_eq!(exponents.len(), angles.len());
        let shift = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut re = 0.0;
        let mut im = 0.0;
        for (e, a) in exponents.iter().zip(angles) {
            let w = (e - shift).exp();
            let (s, c) = a.sin_cos();
            re += w * c;
            im += w * s;
        }
        Self {
            shift,
            re,
            im,
            count: exponents.len(),
        }
    }

    /// Merges another sum into this one.
    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let shift = self.shift.max(other.shift);
        let a = (self.shift - shift).exp();
        let b = (other.shift - shift).exp();
        self.re = self.re * a + other.re * b;
        self.im = self.im * a + other.im * b;
        self.shift = shift;
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn scaled(&self) -> (f64, f64) {
        (self.re, self.im)
    }

    /// `log |sum|`; `-inf` for an empty or fully cancelled sum.
    pub fn log_magnitude(&self) -> f64 {
        if self.count == 0 {
            return f64::NEG_INFINITY;
        }
        self.shift + self.re.hypot(self.im).ln()
    }

    pub fn phase(&self) -> f64 {
        self.im.atan2(self.re)
    }

    /// `exp(-offset) * sum`, evaluated without forming the raw sum.
    pub fn scaled_value(&self, offset: f64) -> Complex64 {
        if self.count == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let w = (self.shift - offset).exp();
        Complex64::new(self.re * w, self.im * w)
    }

    pub fn value(&self) -> Complex64 {
        self.scaled_value(0.0)
    }
}
