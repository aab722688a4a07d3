//! Exact counting kernels: factorials, binomials, ordinary and r-restricted
//! Stirling numbers of the second kind, plus the enumeration oracle used to
//! cross-check them.
//!
//! All counting is done on arbitrary-precision integers. Floating point only
//! enters through [`LogReal`], at the boundary where a count becomes a
//! probability.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Largest set size (`n + r`) the partition enumerator will walk.
pub const PARTITION_ORACLE_MAX: u64 = 13;

/// An exact nonnegative integer count.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BigCount(BigUint);

impl BigCount {
    pub fn zero() -> Self {
        BigCount(BigUint::zero())
    }

    pub fn one() -> Self {
        BigCount(BigUint::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn as_biguint(&self) -> &BigUint {
        &self.0
    }

    pub fn into_biguint(self) -> BigUint {
        self.0
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }

    pub fn to_log_real(&self) -> LogReal {
        LogReal::from_biguint(&self.0)
    }
}

impl From<u64> for BigCount {
    fn from(v: u64) -> Self {
        BigCount(BigUint::from(v))
    }
}

impl From<BigUint> for BigCount {
    fn from(v: BigUint) -> Self {
        BigCount(v)
    }
}

impl PartialEq<u64> for BigCount {
    fn eq(&self, other: &u64) -> bool {
        self.0 == BigUint::from(*other)
    }
}

impl fmt::Display for BigCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A nonnegative real stored as its base-2 logarithm.
///
/// Used to carry probabilities such as `k! S / M^n` whose numerator and
/// denominator individually overflow `f64`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogReal {
    log2: f64,
    zero: bool,
}

impl LogReal {
    pub const ZERO: LogReal = LogReal {
        log2: f64::NEG_INFINITY,
        zero: true,
    };
    pub const ONE: LogReal = LogReal {
        log2: 0.0,
        zero: false,
    };

    pub fn from_log2(log2: f64) -> Self {
        if log2 == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogReal { log2, zero: false }
        }
    }

    pub fn from_f64(v: f64) -> Self {
        assert!(v >= 0.0, "LogReal holds nonnegative values only");
        if v == 0.0 {
            Self::ZERO
        } else {
            LogReal {
                log2: v.log2(),
                zero: false,
            }
        }
    }

    /// Logarithm of an exact integer. Values below 2^1023 go through a single
    /// correctly rounded `f64` conversion; larger ones keep the top 64 bits
    /// and add the discarded exponent back.
    pub fn from_biguint(v: &BigUint) -> Self {
        if v.is_zero() {
            return Self::ZERO;
        }
        let bits = v.bits();
        let log2 = if bits <= 1023 {
            v.to_f64().expect("below f64 range").log2()
        } else {
            let shift = bits - 64;
            let top = (v >> shift).to_u64().expect("64 bits remain");
            shift as f64 + (top as f64).log2()
        };
        LogReal { log2, zero: false }
    }

    /// `num / den` for exact integers, from a 64-bit quotient so the
    /// logarithm is accurate even when the ratio is close to one.
    pub fn from_ratio(num: &BigUint, den: &BigUint) -> Self {
        Self::from_log2(crate::numerics::ratio_log2(num, den))
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn log2(&self) -> f64 {
        self.log2
    }

    pub fn to_f64(&self) -> f64 {
        if self.zero {
            0.0
        } else {
            self.log2.exp2()
        }
    }

    pub fn mul(self, other: LogReal) -> LogReal {
        if self.zero || other.zero {
            Self::ZERO
        } else {
            LogReal {
                log2: self.log2 + other.log2,
                zero: false,
            }
        }
    }

    pub fn div(self, other: LogReal) -> LogReal {
        assert!(!other.zero, "division by zero LogReal");
        if self.zero {
            Self::ZERO
        } else {
            LogReal {
                log2: self.log2 - other.log2,
                zero: false,
            }
        }
    }
}

impl PartialOrd for LogReal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        match (self.zero, other.zero) {
            (true, true) => Some(std::cmp::Ordering::Equal),
            (true, false) => Some(std::cmp::Ordering::Less),
            (false, true) => Some(std::cmp::Ordering::Greater),
            (false, false) => self.log2.partial_cmp(&other.log2),
        }
    }
}

pub fn factorial(n: u64) -> BigCount {
    BigCount((2..=n).fold(BigUint::one(), |acc, i| acc * i))
}

pub fn binomial(n: u64, k: u64) -> BigCount {
    if k > n {
        return BigCount::zero();
    }
    let k = k.min(n - k);
    // Each partial product is itself a binomial coefficient, so the
    // division is exact at every step.
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    BigCount(acc)
}

/// `base^exp` with `0^0 = 1`.
fn pow_big(base: u64, exp: u64) -> BigUint {
    num_traits::pow::pow(BigUint::from(base), exp as usize)
}

/// Σ_{j=0..k} (-1)^{k-j} C(k,j) (offset+j)^n, summed exactly.
fn signed_difference(n: u64, k: u64, offset: u64) -> BigUint {
    let mut acc = BigInt::zero();
    let mut coeff = BigUint::one();
    for j in 0..=k {
        let term = BigInt::from_biguint(Sign::Plus, &coeff * pow_big(offset + j, n));
        if (k - j).is_multiple_of(2) {
            acc += term;
        } else {
            acc -= term;
        }
        coeff = coeff * (k - j) / (j + 1);
    }
    acc.to_biguint().expect("finite difference of x^n is nonnegative")
}

/// Ordinary Stirling number of the second kind from the explicit
/// alternating sum, divided exactly by `k!` at the end.
pub fn stirling2(n: u64, k: u64) -> BigCount {
    if k > n {
        return BigCount::zero();
    }
    let sum = signed_difference(n, k, 0);
    let (q, rem) = num_integer::Integer::div_rem(&sum, factorial(k).as_biguint());
    debug_assert!(rem.is_zero());
    BigCount(q)
}

/// `k! · {n+r brace k+r}_r`: the number of ways to drop `n` labelled photons
/// onto `k` distinguishable pixels that must each be hit and `r` pixels that
/// may receive anything.
pub fn ordered_r_stirling2(n: u64, k: u64, r: u64) -> BigCount {
    if k > n {
        return BigCount::zero();
    }
    BigCount(signed_difference(n, k, r))
}

/// `{n+r brace k+r}_r`: partitions of an `(n+r)`-set into `k+r` blocks with
/// `r` designated elements in distinct blocks.
pub fn r_stirling2(n: u64, k: u64, r: u64) -> BigCount {
    if k > n {
        return BigCount::zero();
    }
    let sum = signed_difference(n, k, r);
    let (q, rem) = num_integer::Integer::div_rem(&sum, factorial(k).as_biguint());
    debug_assert!(rem.is_zero());
    BigCount(q)
}

/// Evaluates `{n brace k}_r` through the shifted-restriction recurrence
///
/// `{n brace k}_r = Σ_i C(n-r, i) {n-p-i brace k-p}_{r-p} p^i`
///
/// for a chosen `0 <= p <= r`. The inner `{·}_{r-p}` values are reduced once
/// more with the full shift `p' = r - p`, which lands on ordinary Stirling
/// numbers. Binomials, ordinary Stirling numbers and inner values are cached
/// so a sweep over many `(n, k, r, p)` stays cheap.
#[derive(Default)]
pub struct RecurrenceEvaluator {
    binomials: HashMap<(u64, u64), BigUint>,
    stirling: HashMap<(u64, u64), BigUint>,
    inner: HashMap<(u64, u64, u64), BigUint>,
}

impl RecurrenceEvaluator {
    pub fn new() -> Self {
        Self::default()
    }

    fn binomial(&mut self, n: u64, k: u64) -> BigUint {
        self.binomials
            .entry((n, k))
            .or_insert_with(|| binomial(n, k).into_biguint())
            .clone()
    }

    fn stirling(&mut self, n: u64, k: u64) -> BigUint {
        self.stirling
            .entry((n, k))
            .or_insert_with(|| stirling2(n, k).into_biguint())
            .clone()
    }

    /// One application of the recurrence with shift `p`; `inner` supplies
    /// the `{·}_{r-p}` values.
    fn apply(
        &mut self,
        n: u64,
        k: u64,
        r: u64,
        p: u64,
        mut inner: impl FnMut(&mut Self, u64, u64) -> BigUint,
    ) -> BigUint {
        if r > k || k > n {
            return BigUint::zero();
        }
        let mut acc = BigUint::zero();
        let mut p_pow = BigUint::one();
        for i in 0..=(n - r) {
            if i > 0 {
                if p == 0 {
                    break;
                }
                p_pow *= p;
            }
            let term = inner(self, n - p - i, k - p);
            if !term.is_zero() {
                acc += self.binomial(n - r, i) * term * &p_pow;
            }
        }
        acc
    }

    /// `{a brace b}_q` by the full shift `p = q`.
    fn reduced(&mut self, a: u64, b: u64, q: u64) -> BigUint {
        if let Some(v) = self.inner.get(&(a, b, q)) {
            return v.clone();
        }
        let v = self.apply(a, b, q, q, |ev, m, j| ev.stirling(m, j));
        self.inner.insert((a, b, q), v.clone());
        v
    }

    pub fn eval(&mut self, n: u64, k: u64, r: u64, p: u64) -> Result<BigCount> {
        if p > r {
            return Err(Error::Parameter(format!(
                "recurrence shift p = {p} exceeds restriction r = {r}"
            )));
        }
        let q = r - p;
        Ok(BigCount(self.apply(n, k, r, p, |ev, m, j| ev.reduced(m, j, q))))
    }
}

/// `{n brace k}_r` through the recurrence with shift `p`. Note the symbol
/// convention: the arguments are the full set size and block count, so
/// `r_stirling2_recurrence(n + r, k + r, r, p) == r_stirling2(n, k, r)`.
pub fn r_stirling2_recurrence(n: u64, k: u64, r: u64, p: u64) -> Result<BigCount> {
    RecurrenceEvaluator::new().eval(n, k, r, p)
}

/// Walks every set partition of `{0, .., size-1}` (as restricted growth
/// strings) and tallies them by the number of blocks and by how long the
/// prefix `0, 1, .., r-1` of pairwise separated elements runs.
///
/// `table[r][b]` counts partitions with `b` blocks in which elements
/// `0..r` sit in distinct blocks.
pub fn partition_count_table(size: u64) -> Result<Vec<Vec<u64>>> {
    if size > PARTITION_ORACLE_MAX {
        return Err(Error::Resource(format!(
            "partition enumeration of a {size}-element set exceeds the limit of {PARTITION_ORACLE_MAX}"
        )));
    }
    let size = size as usize;
    let mut table = vec![vec![0u64; size + 1]; size + 1];
    if size == 0 {
        table[0][0] = 1;
        return Ok(table);
    }

    // a[i] = block of element i; m[i] = number of blocks among a[0..=i].
    let mut a = vec![0usize; size];
    let mut m = vec![1usize; size];
    loop {
        let blocks = m[size - 1];
        let mut separated = 0;
        while separated < size && a[separated] == separated {
            separated += 1;
        }
        for row in table.iter_mut().take(separated + 1) {
            row[blocks] += 1;
        }

        // Next restricted growth string.
        let mut i = size - 1;
        loop {
            if i == 0 {
                return Ok(table);
            }
            if a[i] < m[i - 1] {
                a[i] += 1;
                m[i] = m[i - 1].max(a[i] + 1);
                for j in (i + 1)..size {
                    a[j] = 0;
                    m[j] = m[i];
                }
                break;
            }
            i -= 1;
        }
    }
}

/// Counts partitions of an `(n+r)`-set into `k+r` blocks with the `r`
/// designated elements separated, by exhaustive enumeration.
pub fn count_partitions_oracle(n: u64, k: u64, r: u64) -> Result<BigCount> {
    let table = partition_count_table(n + r)?;
    let blocks = (k + r) as usize;
    Ok(BigCount::from(
        table[r as usize].get(blocks).copied().unwrap_or(0),
    ))
}

/// Insert-only cache of `k! · {n+r brace k+r}_r`, keyed by `(n, k, r)`.
/// Safe to share between threads; a hit returns exactly what a miss would
/// have computed.
#[derive(Default)]
pub struct StirlingMemo {
    table: Mutex<HashMap<(u64, u64, u64), Arc<BigUint>>>,
}

impl StirlingMemo {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn ordered(&self, n: u64, k: u64, r: u64) -> Arc<BigUint> {
        if let Some(v) = self.table.lock().unwrap().get(&(n, k, r)) {
            return Arc::clone(v);
        }
        let v = Arc::new(ordered_r_stirling2(n, k, r).into_biguint());
        self.table
            .lock()
            .unwrap()
            .entry((n, k, r))
            .or_insert(v)
            .clone()
    }

    pub fn len(&self) -> usize {
        self.table.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Forward-difference table of `b -> b^n` over bases `0..=max_base`.
///
/// Row `k`, column `r` holds `Δ^k (r+·)^n |_0 = k! {n+r brace k+r}_r`. Every
/// entry is a count, so the table stays nonnegative and is built with
/// unsigned subtraction only.
pub struct OrderedStirlingTable {
    n: u64,
    rows: Vec<Vec<BigUint>>,
}

impl OrderedStirlingTable {
    /// `powers[b]` must equal `b^n` for `b` in `0..=max_base`.
    pub fn from_powers(n: u64, powers: &[BigUint], max_order: usize) -> Self {
        let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(max_order + 1);
        rows.push(powers.to_vec());
        for k in 1..=max_order.min(powers.len().saturating_sub(1)) {
            let prev = &rows[k - 1];
            let next: Vec<BigUint> = prev.windows(2).map(|w| &w[1] - &w[0]).collect();
            rows.push(next);
        }
        OrderedStirlingTable { n, rows }
    }

    pub fn new(n: u64, max_base: u64, max_order: usize) -> Self {
        let powers: Vec<BigUint> = (0..=max_base).map(|b| pow_big(b, n)).collect();
        Self::from_powers(n, &powers, max_order)
    }

    pub fn photons(&self) -> u64 {
        self.n
    }

    /// `k! {n+r brace k+r}_r`, or `None` outside the tabulated range.
    pub fn get(&self, k: usize, r: usize) -> Option<&BigUint> {
        self.rows.get(k).and_then(|row| row.get(r))
    }

    pub fn max_order(&self) -> usize {
        self.rows.len() - 1
    }
}
