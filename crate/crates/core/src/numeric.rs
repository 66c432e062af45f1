//! Floating-point helpers shared by the real-valued paths.

use num_complex::Complex64;
use num_traits::ToPrimitive;

use crate::radix_core::ExactRational;

/// Neumaier compensated accumulator.
///
/// Keeps a running sum and a separate compensation term, so the error of a
/// sum of `n` terms is bounded by a small multiple of the unit roundoff
/// times `Σ|x_i|`, independent of `n`. Two accumulators merge by adding the
/// other's sum and compensation as ordinary terms.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_value(x: f64) -> Self {
        Self { sum: x, comp: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &Neumaier) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Componentwise [`Neumaier`] accumulation of complex terms.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ComplexNeumaier {
    re: Neumaier,
    im: Neumaier,
}

impl ComplexNeumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn merge(&mut self, other: &ComplexNeumaier) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Nearest `f64` to an exact rational.
pub fn to_f64(q: &ExactRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // Only reachable for magnitudes outside the f64 range.
        if q.numer().sign() == num_bigint::Sign::Minus {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Rounds to 15 significant decimal digits.
pub fn round_sig15(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.14e}").parse().unwrap_or(x)
}

/// `e^{2πi·num/den}` for an already-reduced phase `0 ≤ num < den`.
#[inline]
pub fn unit_phase(num: u128, den: u128) -> Complex64 {
    // Fold into [-1/2, 1/2) so the argument of sin/cos stays small.
    let (num, neg) = if 2 * num >= den {
        (den - num, true)
    } else {
        (num, false)
    };
    let theta = std::f64::consts::TAU * (num as f64 / den as f64);
    let (s, c) = theta.sin_cos();
    Complex64::new(c, if neg { -s } else { s })
}
