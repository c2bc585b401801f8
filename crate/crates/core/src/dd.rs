//! Double-double arithmetic for log-domain product accumulation.
//!
//! The bound formulas multiply out millions of factors that are individually
//! close to 1. Working in logs keeps that stable, but plain f64 summation
//! would still lose digits near the 1e-5 tolerances the reported constants
//! carry. A double-double value (an unevaluated sum of two f64s, giving
//! roughly 32 significant digits) with error-free transformations removes
//! the accumulation as an error source entirely; what remains is the ~1 ulp
//! error of each individual `ln`.
//!
//! Exponent coefficients are exact rationals until the final multiply, and
//! enter here through [`Dd::from_rational`].

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;

/// An unevaluated sum `hi + lo` of two doubles with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

/// ln 2 to double-double precision.
pub const LN_2: Dd = Dd {
    hi: 0.693_147_180_559_945_3,
    lo: 2.319_046_813_846_299_6e-17,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn new(hi: f64, lo: f64) -> Dd {
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn to_f64(&self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, other: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, other.hi);
        let (t1, t2) = two_sum(self.lo, other.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }

    pub fn sub(self, other: Dd) -> Dd {
        self.add(Dd {
            hi: -other.hi,
            lo: -other.lo,
        })
    }

    pub fn mul(self, other: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, other.hi);
        let p2 = p2 + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    pub fn mul_i64(self, k: i64) -> Dd {
        self.mul(Dd::from_f64(k as f64))
    }

    /// Converts an exact rational without losing more than double-double
    /// precision: the leading f64 approximation is corrected by the exactly
    /// represented residual.
    pub fn from_rational(r: &BigRational) -> Dd {
        let hi = r.to_f64().expect("rational outside f64 range");
        assert!(hi.is_finite(), "rational outside f64 range");
        let residual = r - BigRational::from_float(hi).expect("finite");
        let lo = residual.to_f64().unwrap_or(0.0);
        Dd::new(hi, lo)
    }

    /// `exp` of the value, accurate to f64 precision.
    pub fn exp_f64(&self) -> f64 {
        self.hi.exp() * (1.0 + self.lo)
    }
}

/// Natural log of a positive big integer, accurate to roughly 1e-16
/// absolute: the argument is split as `f * 2^E` with `f` carrying 106
/// mantissa bits, and only `ln f` is left to the f64 library call.
pub fn ln_biguint(n: &BigUint) -> Dd {
    assert!(*n != BigUint::ZERO, "ln of zero");
    let bits = n.bits();
    let shift = bits.saturating_sub(106);
    let top = (n >> shift).to_u128().expect("106-bit window");

    let m1 = top as f64;
    let m2 = (top as i128).wrapping_sub(m1 as i128) as f64;

    // normalize m1 = f * 2^e with f in [1, 2)
    let e = m1.log2().floor() as i64;
    let f = m1 / (e as f64).exp2();
    let ln_f = f.ln();
    let correction = m2 / m1;

    Dd::from_f64(ln_f)
        .add(Dd::from_f64(correction))
        .add(LN_2.mul_i64(e + shift as i64))
}

/// Deterministic compensated accumulator for natural-log contributions.
///
/// Terms must be fed in one fixed order; the value and the compensation word
/// are then bit-identical across runs and worker counts.
#[derive(Debug, Clone, Copy)]
pub struct LogAccumulator {
    sum: Dd,
    terms: usize,
}

impl LogAccumulator {
    pub fn new() -> LogAccumulator {
        LogAccumulator {
            sum: Dd::ZERO,
            terms: 0,
        }
    }

    /// Adds `coefficient * ln_value` where the coefficient is exact.
    pub fn add_scaled(&mut self, coefficient: &BigRational, ln_value: Dd) {
        self.add(Dd::from_rational(coefficient).mul(ln_value));
    }

    pub fn add(&mut self, term: Dd) {
        self.sum = self.sum.add(term);
        self.terms += 1;
    }

    /// The accumulated log value.
    pub fn value(&self) -> Dd {
        self.sum
    }

    /// The running compensation word.
    pub fn compensation(&self) -> f64 {
        self.sum.lo
    }

    pub fn term_count(&self) -> usize {
        self.terms
    }
}

impl Default for LogAccumulator {
    fn default() -> Self {
        Self::new()
    }
}
