//! Probability of a frame outcome given the photon number and the detector
//! activation pattern.
//!
//! For a compatible pair `(x, s)` the probability depends only on the
//! Hamming weights `k = |x|` and `l = |s|`: with `r = M - l` inactive pixels,
//! `P(x | n, s) = k! {n+r brace k+r}_r / M^n`. The brute-force route sums
//! multinomial weights over explicit photon arrangements instead.

use std::io::{self, Write};

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::bits::{OutcomeString, PixelBits, StatusConfig};
use crate::combinatorics::{factorial, ordered_r_stirling2, LogReal};
use crate::error::{Error, Result};

/// Exact probability as an unreduced-on-input, reduced-on-construction ratio.
pub type ExactProb = Ratio<BigUint>;

/// Largest array the arrangement oracle will enumerate.
pub const ORACLE_MAX_PIXELS: usize = 6;
/// Largest photon number the arrangement oracle will enumerate.
pub const ORACLE_MAX_PHOTONS: u64 = 8;
/// Largest array exported as a dense matrix.
pub const SIERPINSKI_MAX_PIXELS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NumericMode {
    /// Big-integer numerator over `M^n`.
    Exact,
    /// Base-2 logarithm, computed from exact integers.
    #[default]
    Log,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Probability {
    Exact(ExactProb),
    Log(LogReal),
}

impl Probability {
    fn from_counts(count: BigUint, total: BigUint, mode: NumericMode) -> Self {
        match mode {
            NumericMode::Exact => Probability::Exact(Ratio::new(count, total)),
            NumericMode::Log => Probability::Log(LogReal::from_ratio(&count, &total)),
        }
    }

    fn zero(mode: NumericMode) -> Self {
        match mode {
            NumericMode::Exact => Probability::Exact(Ratio::zero()),
            NumericMode::Log => Probability::Log(LogReal::ZERO),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Probability::Exact(r) => r.is_zero(),
            Probability::Log(l) => l.is_zero(),
        }
    }

    pub fn to_log_real(&self) -> LogReal {
        match self {
            Probability::Exact(r) => LogReal::from_ratio(r.numer(), r.denom()),
            Probability::Log(l) => *l,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Probability::Exact(r) => crate::numerics::ratio_to_f64(r.numer(), r.denom()),
            Probability::Log(l) => l.to_f64(),
        }
    }

    pub fn exact(&self) -> Option<&ExactProb> {
        match self {
            Probability::Exact(r) => Some(r),
            Probability::Log(_) => None,
        }
    }
}

/// Pixel indices split by `(x_i, s_i)`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CompatibilityClasses {
    pub i00: Vec<usize>,
    pub i01: Vec<usize>,
    pub i10: Vec<usize>,
    pub i11: Vec<usize>,
}

impl CompatibilityClasses {
    /// A click on an inactive pixel rules out every photon arrangement.
    pub fn is_compatible(&self) -> bool {
        self.i10.is_empty()
    }

    pub fn detections(&self) -> usize {
        self.i10.len() + self.i11.len()
    }

    pub fn active(&self) -> usize {
        self.i01.len() + self.i11.len()
    }
}

pub fn compatibility(x: &OutcomeString, s: &StatusConfig) -> Result<CompatibilityClasses> {
    s.check_len(x.len())?;
    let mut c = CompatibilityClasses::default();
    for i in 0..x.len() {
        match (x.get(i), s.get(i)) {
            (false, false) => c.i00.push(i),
            (false, true) => c.i01.push(i),
            (true, false) => c.i10.push(i),
            (true, true) => c.i11.push(i),
        }
    }
    Ok(c)
}

fn pixel_power(pixels: usize, n: u64) -> BigUint {
    num_traits::pow::pow(BigUint::from(pixels), n as usize)
}

/// `P(x | n, s)` from the r-Stirling closed form.
pub fn cond_prob(
    x: &OutcomeString,
    n: u64,
    s: &StatusConfig,
    mode: NumericMode,
) -> Result<Probability> {
    let classes = compatibility(x, s)?;
    if !classes.is_compatible() {
        return Ok(Probability::zero(mode));
    }
    let pixels = x.len();
    reduced_prob(
        classes.detections() as u64,
        n,
        classes.active() as u64,
        pixels,
        mode,
    )
}

/// `P(x | n, s)` by summing `n! / (M^n Π n_i!)` over every occupancy vector
/// `(n_1, .., n_M)` with `Σ n_i = n` that is compatible with `(x, s)`.
pub fn cond_prob_oracle(x: &OutcomeString, n: u64, s: &StatusConfig) -> Result<ExactProb> {
    s.check_len(x.len())?;
    let pixels = x.len();
    if pixels > ORACLE_MAX_PIXELS || n > ORACLE_MAX_PHOTONS {
        return Err(Error::Resource(format!(
            "arrangement enumeration limited to M <= {ORACLE_MAX_PIXELS}, n <= {ORACLE_MAX_PHOTONS} (got M = {pixels}, n = {n})"
        )));
    }
    let n_fact = factorial(n).into_biguint();
    let factorials: Vec<BigUint> = (0..=n).map(|i| factorial(i).into_biguint()).collect();

    // Per-pixel admissible photon counts (Table of requirements).
    let allowed = |i: usize, count: u64| -> bool {
        match (x.get(i), s.get(i)) {
            (false, false) => true,
            (false, true) => count == 0,
            (true, false) => false,
            (true, true) => count >= 1,
        }
    };

    let mut total = BigUint::zero();
    let mut counts = vec![0u64; pixels];
    // Enumerate compositions of n into `pixels` parts, last part implied.
    fn walk(
        pos: usize,
        remaining: u64,
        counts: &mut Vec<u64>,
        visit: &mut dyn FnMut(&[u64]),
    ) {
        if pos + 1 == counts.len() {
            counts[pos] = remaining;
            visit(counts);
            return;
        }
        for c in 0..=remaining {
            counts[pos] = c;
            walk(pos + 1, remaining - c, counts, visit);
        }
    }
    if pixels == 0 {
        return Ok(if n == 0 { Ratio::one() } else { Ratio::zero() });
    }
    walk(0, n, &mut counts, &mut |occ: &[u64]| {
        if occ.iter().enumerate().all(|(i, &c)| allowed(i, c)) {
            let denom: BigUint = occ.iter().map(|&c| &factorials[c as usize]).product();
            total += &n_fact / denom;
        }
    });
    Ok(Ratio::new(total, pixel_power(pixels, n)))
}

/// `P(k | n, l)`: probability of a particular `k`-click string given `l`
/// active pixels out of `M`, for strings that click only on active pixels.
pub fn reduced_prob(
    k: u64,
    n: u64,
    active: u64,
    pixels: usize,
    mode: NumericMode,
) -> Result<Probability> {
    let m = pixels as u64;
    if k > m || active > m {
        return Err(Error::Parameter(format!(
            "weights k = {k}, l = {active} must not exceed M = {pixels}"
        )));
    }
    if k > n.min(active) {
        return Ok(Probability::zero(mode));
    }
    let count = ordered_r_stirling2(n, k, m - active).into_biguint();
    Ok(Probability::from_counts(count, pixel_power(pixels, n), mode))
}

/// Most likely detection weight and its per-string probability, scanning
/// `k` in `0..=min(n, l)`; ties go to the smaller `k`.
pub fn max_outcome_prob(
    n: u64,
    active: u64,
    pixels: usize,
    mode: NumericMode,
) -> Result<(u64, Probability)> {
    let m = pixels as u64;
    if active > m {
        return Err(Error::Parameter(format!(
            "active pixels l = {active} must not exceed M = {pixels}"
        )));
    }
    let r = m - active;
    let mut best_k = 0;
    let mut best = ordered_r_stirling2(n, 0, r).into_biguint();
    for k in 1..=n.min(active) {
        let t = ordered_r_stirling2(n, k, r).into_biguint();
        if t > best {
            best = t;
            best_k = k;
        }
    }
    Ok((best_k, Probability::from_counts(best, pixel_power(pixels, n), mode)))
}

/// The `(M+1) x (M+1)` table of distinct values `P(k | n, l)`.
#[derive(Clone, Debug)]
pub struct ReducedProbabilityTable {
    photons: u64,
    pixels: usize,
    /// Row-major over `(k, l)`.
    entries: Vec<Probability>,
}

impl ReducedProbabilityTable {
    pub fn build(n: u64, pixels: usize, mode: NumericMode) -> Result<Self> {
        let side = pixels + 1;
        let entries = (0..side * side)
            .into_par_iter()
            .map(|idx| reduced_prob((idx / side) as u64, n, (idx % side) as u64, pixels, mode))
            .collect::<Result<Vec<_>>>()?;
        Ok(ReducedProbabilityTable {
            photons: n,
            pixels,
            entries,
        })
    }

    pub fn photons(&self) -> u64 {
        self.photons
    }

    pub fn pixels(&self) -> usize {
        self.pixels
    }

    pub fn get(&self, k: usize, active: usize) -> &Probability {
        &self.entries[k * (self.pixels + 1) + active]
    }

    /// CSV with header `k,l,probability`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "k,l,probability")?;
        for k in 0..=self.pixels {
            for l in 0..=self.pixels {
                writeln!(out, "{k},{l},{}", fmt_prob(self.get(k, l).to_f64()))?;
            }
        }
        Ok(())
    }
}

/// 17 significant digits.
pub fn fmt_prob(v: f64) -> String {
    format!("{v:.16e}")
}

/// Dense `2^M x 2^M` matrix of `P(x | n, s)`; row = status index, column =
/// outcome index, both with pixel 0 as the most significant bit.
#[derive(Clone, Debug)]
pub struct SierpinskiMatrix {
    pixels: usize,
    photons: u64,
    values: Vec<f64>,
}

impl SierpinskiMatrix {
    pub fn pixels(&self) -> usize {
        self.pixels
    }

    pub fn photons(&self) -> u64 {
        self.photons
    }

    pub fn dim(&self) -> usize {
        1 << self.pixels
    }

    pub fn get(&self, s_index: usize, x_index: usize) -> f64 {
        self.values[s_index * self.dim() + x_index]
    }

    pub fn row(&self, s_index: usize) -> &[f64] {
        let d = self.dim();
        &self.values[s_index * d..(s_index + 1) * d]
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let d = self.dim();
        write!(out, "s_index")?;
        for x in 0..d {
            write!(out, ",x_{x}")?;
        }
        writeln!(out)?;
        for s in 0..d {
            write!(out, "{s}")?;
            for v in self.row(s) {
                write!(out, ",{}", fmt_prob(*v))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

pub fn sierpinski_matrix(pixels: usize, n: u64) -> Result<SierpinskiMatrix> {
    if pixels == 0 || pixels > SIERPINSKI_MAX_PIXELS {
        return Err(Error::Resource(format!(
            "dense matrix export needs 1 <= M <= {SIERPINSKI_MAX_PIXELS}, got {pixels}"
        )));
    }
    let table = ReducedProbabilityTable::build(n, pixels, NumericMode::Exact)?;
    let reduced: Vec<f64> = table.entries.iter().map(Probability::to_f64).collect();
    let d = 1usize << pixels;
    let values = (0..d * d)
        .into_par_iter()
        .map(|idx| {
            let (s, x) = (idx / d, idx % d);
            if x & !s != 0 {
                0.0
            } else {
                let k = x.count_ones() as usize;
                let l = s.count_ones() as usize;
                reduced[k * (pixels + 1) + l]
            }
        })
        .collect();
    Ok(SierpinskiMatrix {
        pixels,
        photons: n,
        values,
    })
}

/// A compatible representative `(x, s)` with the given weights: the first
/// `l` pixels active, the first `k` of them clicking.
pub fn representative(k: usize, active: usize, pixels: usize) -> (OutcomeString, StatusConfig) {
    assert!(k <= active && active <= pixels);
    let mut x = PixelBits::zeros(pixels);
    let mut s = PixelBits::zeros(pixels);
    for i in 0..active {
        s.set(i, true);
    }
    for i in 0..k {
        x.set(i, true);
    }
    (x, s)
}

/// Worst disagreement between [`cond_prob`] and [`cond_prob_oracle`] over
/// every `(x, s)` pair with `1 <= M <= max_pixels`, `n <= max_photons`.
/// Exact mode reports the absolute difference, which is zero on agreement;
/// log mode the relative one. Also returns the number of pairs compared.
pub fn oracle_deviation(max_pixels: usize, max_photons: u64, mode: NumericMode) -> Result<(f64, u64)> {
    if max_pixels > ORACLE_MAX_PIXELS || max_photons > ORACLE_MAX_PHOTONS {
        return Err(Error::Resource(format!(
            "oracle limited to M <= {ORACLE_MAX_PIXELS}, n <= {ORACLE_MAX_PHOTONS}"
        )));
    }
    let cases: Vec<(usize, u64, u64)> = (1..=max_pixels)
        .flat_map(|m| (0..=max_photons).flat_map(move |n| (0..1u64 << m).map(move |si| (m, n, si))))
        .collect();
    let worst = cases
        .into_par_iter()
        .map(|(m, n, si)| -> Result<(f64, u64)> {
            let s = PixelBits::from_msb_index(si, m);
            let mut worst = 0.0f64;
            for xi in 0..1u64 << m {
                let x = PixelBits::from_msb_index(xi, m);
                let want = cond_prob_oracle(&x, n, &s)?;
                let dev = match cond_prob(&x, n, &s, mode)? {
                    Probability::Exact(got) if got == want => 0.0,
                    Probability::Exact(got) => {
                        let diff = if got > want { got - &want } else { &want - got };
                        Probability::Exact(diff).to_f64()
                    }
                    Probability::Log(got) => {
                        let w = Probability::Exact(want.clone()).to_f64();
                        if want.is_zero() {
                            if got.is_zero() { 0.0 } else { f64::INFINITY }
                        } else {
                            (got.to_f64() - w).abs() / w
                        }
                    }
                };
                worst = worst.max(dev);
            }
            Ok((worst, 1u64 << m))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((0.0f64, 0u64), |(w, c), (d, k)| (w.max(d), c + k));
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(a: u64, b: u64) -> ExactProb {
        Ratio::new(BigUint::from(a), BigUint::from(b))
    }

    fn bits(d: &[u8]) -> PixelBits {
        PixelBits::from_digits(d)
    }

    #[test]
    fn compatibility_classes() {
        let c = compatibility(&bits(&[1, 1, 1, 0, 0, 0]), &bits(&[1, 1, 1, 1, 0, 0])).unwrap();
        assert_eq!((c.i11.len(), c.i01.len(), c.i00.len(), c.i10.len()), (3, 1, 2, 0));
        assert!(c.is_compatible());

        let c = compatibility(&PixelBits::zeros(5), &PixelBits::zeros(5)).unwrap();
        assert_eq!(c.i00.len(), 5);
        assert!(c.i01.is_empty() && c.i10.is_empty() && c.i11.is_empty());

        let c = compatibility(&bits(&[1]), &bits(&[0])).unwrap();
        assert_eq!(c.i10.len(), 1);
        assert!(!c.is_compatible());

        assert!(matches!(
            compatibility(&bits(&[1, 0]), &bits(&[1])),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn six_pixel_worked_probability() {
        let x = bits(&[1, 1, 1, 0, 0, 0]);
        let s = bits(&[1, 1, 1, 1, 0, 0]);
        let p = cond_prob(&x, 4, &s, NumericMode::Exact).unwrap();
        assert_eq!(p.exact().unwrap(), &ratio(84, 1296));
        assert_eq!(cond_prob_oracle(&x, 4, &s).unwrap(), ratio(84, 1296));
        let l = cond_prob(&x, 4, &s, NumericMode::Log).unwrap();
        assert!((l.to_f64() - 84.0 / 1296.0).abs() < 1e-16);
    }

    #[test]
    fn cond_prob_trivial_cases() {
        for idx in 0..16u64 {
            let s = PixelBits::from_msb_index(idx, 4);
            let p = cond_prob(&PixelBits::zeros(4), 0, &s, NumericMode::Exact).unwrap();
            assert_eq!(p.exact().unwrap(), &ratio(1, 1));
        }
        for n in 1..6u64 {
            for pixel in 0..5 {
                let mut x = PixelBits::zeros(5);
                x.set(pixel, true);
                let p = cond_prob(&x, n, &PixelBits::ones(5), NumericMode::Exact).unwrap();
                assert_eq!(p.exact().unwrap(), &ratio(1, 5u64.pow(n as u32)));
            }
        }
    }

    #[test]
    fn oracle_zero_cases() {
        let p = cond_prob_oracle(&bits(&[1, 0, 1]), 3, &bits(&[1, 1, 0])).unwrap();
        assert!(p.is_zero());
        let p = cond_prob_oracle(&bits(&[1, 1, 1]), 2, &bits(&[1, 1, 1])).unwrap();
        assert!(p.is_zero());
        assert!(matches!(
            cond_prob_oracle(&PixelBits::zeros(7), 2, &PixelBits::zeros(7)),
            Err(Error::Resource(_))
        ));
        assert!(cond_prob_oracle(&PixelBits::zeros(3), 9, &PixelBits::zeros(3)).is_err());
    }

    #[test]
    fn reduced_prob_values() {
        // k = 0: every photon must land on an inactive pixel.
        for pixels in 1..=6usize {
            for l in 0..=pixels as u64 {
                for n in 0..=7u64 {
                    let p = reduced_prob(0, n, l, pixels, NumericMode::Exact).unwrap();
                    let want = Ratio::new(
                        num_traits::pow::pow(BigUint::from(pixels as u64 - l), n as usize),
                        num_traits::pow::pow(BigUint::from(pixels), n as usize),
                    );
                    assert_eq!(p.exact().unwrap(), &want);
                    let (x, s) = representative(0, l as usize, pixels);
                    assert_eq!(cond_prob_oracle(&x, n, &s).unwrap(), want);
                }
            }
        }
        let p = reduced_prob(3, 4, 4, 6, NumericMode::Exact).unwrap();
        assert_eq!(p.exact().unwrap(), &ratio(84, 1296));
        assert!(reduced_prob(2, 1, 5, 5, NumericMode::Exact).unwrap().is_zero());
        assert!(reduced_prob(7, 1, 5, 5, NumericMode::Exact).is_err());
    }

    #[test]
    fn max_outcome_cases() {
        for m in 1..10usize {
            let (k, p) = max_outcome_prob(1, m as u64, m, NumericMode::Exact).unwrap();
            assert_eq!(k, 1);
            assert_eq!(p.exact().unwrap(), &ratio(1, m as u64));
            let (k, p) = max_outcome_prob(0, (m / 2) as u64, m, NumericMode::Exact).unwrap();
            assert_eq!(k, 0);
            assert_eq!(p.exact().unwrap(), &ratio(1, 1));
        }
    }

    #[test]
    fn max_outcome_matches_exhaustive_scan() {
        let (m, n) = (9usize, 9u64);
        let (_, best) = max_outcome_prob(n, 9, m, NumericMode::Exact).unwrap();
        let s = PixelBits::ones(m);
        let brute = (0..1u64 << m)
            .map(|idx| {
                cond_prob(&PixelBits::from_msb_index(idx, m), n, &s, NumericMode::Exact)
                    .unwrap()
                    .exact()
                    .unwrap()
                    .clone()
            })
            .max()
            .unwrap();
        assert_eq!(best.exact().unwrap(), &brute);
    }

    #[test]
    fn tie_breaks_toward_smaller_k() {
        // M = 2, n = 2, both active: k=0 is 0, k=1 is 1/4, k=2 is 2/4.
        let (k, _) = max_outcome_prob(2, 2, 2, NumericMode::Exact).unwrap();
        assert_eq!(k, 2);
        // M = 2, n = 1, one active: k=0 has 1/2, k=1 has 1/2.
        let (k, p) = max_outcome_prob(1, 1, 2, NumericMode::Exact).unwrap();
        assert_eq!(k, 0);
        assert_eq!(p.exact().unwrap(), &ratio(1, 2));
    }

    #[test]
    fn reduced_table_normalises() {
        for pixels in 1..=6usize {
            for n in 0..=8u64 {
                let t = ReducedProbabilityTable::build(n, pixels, NumericMode::Exact).unwrap();
                for l in 0..=pixels {
                    let mut total: ExactProb = Ratio::zero();
                    for k in 0..=l {
                        let c = crate::combinatorics::binomial(l as u64, k as u64).into_biguint();
                        total += t.get(k, l).exact().unwrap() * Ratio::from_integer(c);
                    }
                    assert_eq!(total, Ratio::one(), "M={pixels} n={n} l={l}");
                }
            }
        }
    }

    #[test]
    fn sierpinski_structure() {
        let mat = sierpinski_matrix(9, 9).unwrap();
        assert_eq!(mat.dim(), 512);
        let row0 = mat.row(0);
        assert_eq!(row0[0], 1.0);
        assert!(row0[1..].iter().all(|&v| v == 0.0));
        for s in 0..512 {
            let sum: f64 = mat.row(s).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "row {s}: {sum}");
        }
        assert!(sierpinski_matrix(11, 2).is_err());
    }

    #[test]
    fn sierpinski_zero_pattern_follows_compatibility() {
        let (m, n) = (5usize, 3u64);
        let mat = sierpinski_matrix(m, n).unwrap();
        for s in 0..(1usize << m) {
            let sb = PixelBits::from_msb_index(s as u64, m);
            for x in 0..(1usize << m) {
                let xb = PixelBits::from_msb_index(x as u64, m);
                let c = compatibility(&xb, &sb).unwrap();
                let k = c.detections() as u64;
                // Every pixel on and at least one photon: something clicks.
                let forced = c.active() == m && k == 0 && n > 0;
                let nonzero = c.is_compatible() && k <= n && !forced;
                assert_eq!(mat.get(s, x) != 0.0, nonzero, "s={s} x={x}");
            }
        }
    }

    #[test]
    fn oracle_sweep_agrees() {
        assert_eq!(oracle_deviation(4, 5, NumericMode::Exact).unwrap(), (0.0, 6 * (4 + 16 + 64 + 256)));
        assert!(oracle_deviation(3, 4, NumericMode::Log).unwrap().0 <= 1e-15);
        assert!(oracle_deviation(7, 2, NumericMode::Exact).is_err());
    }

    #[test]
    fn sierpinski_csv_layout() {
        let mat = sierpinski_matrix(2, 1).unwrap();
        let mut buf = Vec::new();
        mat.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "s_index,x_0,x_1,x_2,x_3");
        assert_eq!(lines.len(), 5);
        // s = 11 (both active), one photon: x = 01 and 10 each with 1/2.
        assert_eq!(
            lines[4],
            "3,0.0000000000000000e0,5.0000000000000000e-1,5.0000000000000000e-1,0.0000000000000000e0"
        );
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn permutation_invariance(
                m in 1usize..=6,
                xi in any::<u64>(),
                si in any::<u64>(),
                n in 0u64..10,
                perm_seed in any::<u64>(),
            ) {
                let mask = (1u64 << m) - 1;
                let x = PixelBits::from_msb_index(xi & mask, m);
                let s = PixelBits::from_msb_index(si & mask, m);
                let mut perm: Vec<usize> = (0..m).collect();
                let mut state = perm_seed;
                for i in (1..m).rev() {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    let j = (state >> 33) as usize % (i + 1);
                    perm.swap(i, j);
                }
                let a = cond_prob(&x, n, &s, NumericMode::Exact).unwrap();
                let b = cond_prob(&x.permuted(&perm), n, &s.permuted(&perm), NumericMode::Exact).unwrap();
                prop_assert_eq!(a, b);
            }

            #[test]
            fn zero_pattern(m in 1usize..12, k in 0u64..12, l in 0u64..12, n in 0u64..15) {
                prop_assume!(k <= m as u64 && l <= m as u64);
                let p = reduced_prob(k, n, l, m, NumericMode::Log).unwrap();
                let forced = l == m as u64 && k == 0 && n > 0;
                prop_assert_eq!(p.is_zero(), k > n.min(l) || forced);
            }
        }
    }
}
