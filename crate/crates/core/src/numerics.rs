use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for v in iter {
            s.add(v);
        }
        s
    }
}

/// `num / den` as `q * 2^-shift` with `q` holding 64 to 65 significant bits.
fn scaled_quotient(num: &BigUint, den: &BigUint) -> (f64, i64) {
    assert!(!den.is_zero(), "zero denominator");
    let shift = den.bits() as i64 - num.bits() as i64 + 64;
    let q = if shift >= 0 {
        (num << shift as u64) / den
    } else {
        num / (den << (-shift) as u64)
    };
    (q.to_f64().expect("quotient fits in f64"), shift)
}

/// `x * 2^e` without intermediate overflow.
fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

/// `log2(num / den)` for exact integers. The quotient is taken to 64 bits
/// and its logarithm evaluated near 1, so the absolute error stays at a few
/// ulps of the result rather than of `log2(2^64)`.
pub fn ratio_log2(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        assert!(!den.is_zero(), "zero denominator");
        return f64::NEG_INFINITY;
    }
    let (q, shift) = scaled_quotient(num, den);
    (q * 2f64.powi(-64)).log2() + (64 - shift) as f64
}

/// `num / den` as an `f64`, correct to an ulp even when both integers are
/// far outside `f64` range.
pub fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        assert!(!den.is_zero(), "zero denominator");
        return 0.0;
    }
    let (q, shift) = scaled_quotient(num, den);
    ldexp(q, -shift)
}
