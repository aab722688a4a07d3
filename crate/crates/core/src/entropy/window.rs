//! Truncation of the photon-number and status-weight sums.
//!
//! Both windows grow outward from the mode, always absorbing the heavier
//! neighbour, until the mass left outside drops to the requested epsilon.
//! The reported tail is the neglected mass itself, summed small-term-first.

use crate::combinatorics::binomial;
use crate::detector::SourceModel;
use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;

/// A contiguous index range with its probabilities and the mass outside it.
#[derive(Clone, Debug)]
pub struct Window {
    pub lo: u64,
    pub hi: u64,
    /// Probability of each index in `lo..=hi`.
    pub weights: Vec<f64>,
    /// Mass outside the window.
    pub tail: f64,
}

impl Window {
    /// Largest `|ln w|` over the nonzero weights, which governs the relative
    /// error of weights evaluated as exponentials of logarithms.
    pub fn log_spread(&self) -> f64 {
        self.weights
            .iter()
            .filter(|&&w| w > 0.0)
            .map(|w| w.ln().abs())
            .fold(0.0, f64::max)
    }

    pub fn weight(&self, i: u64) -> f64 {
        self.weights[(i - self.lo) as usize]
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<u64> {
        self.lo..=self.hi
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn degenerate(at: u64) -> Window {
    Window {
        lo: at,
        hi: at,
        weights: vec![1.0],
        tail: 0.0,
    }
}

/// Sums a geometrically decaying Poisson tail starting at `start` and moving
/// by `step` (+1 or -1), adding the geometric bound on whatever is left when
/// the terms stop mattering.
fn poisson_tail(source: &SourceModel, mu: f64, start: i64, step: i64) -> f64 {
    let mut acc = CompensatedSum::new();
    let mut n = start;
    while n >= 0 {
        let term = source.pmf(n as u64);
        acc.add(term);
        let ratio = if step > 0 {
            mu / (n as f64 + 1.0)
        } else {
            n as f64 / mu
        };
        if term == 0.0 || (ratio < 1.0 && term <= acc.value() * 1e-18) {
            if ratio < 1.0 && n > 0 {
                acc.add(term * ratio / (1.0 - ratio));
            }
            break;
        }
        n += step;
    }
    acc.value()
}

/// Window over the number of emitted photons.
pub fn photon_window(source: &SourceModel, eps: f64, cap: Option<u64>) -> Result<Window> {
    match *source {
        SourceModel::Fixed { n } => {
            if let Some(c) = cap {
                if n > c {
                    return Err(Error::Infeasible(format!(
                        "fixed photon number {n} exceeds the hard cap {c}"
                    )));
                }
            }
            Ok(degenerate(n))
        }
        SourceModel::Poisson { mu_total } if mu_total == 0.0 => Ok(degenerate(0)),
        SourceModel::Poisson { mu_total: mu } => {
            let mode = mu.floor() as u64;
            let left = |lo: u64| {
                if lo == 0 {
                    0.0
                } else {
                    poisson_tail(source, mu, lo as i64 - 1, -1)
                }
            };
            let right = |hi: u64| poisson_tail(source, mu, hi as i64 + 1, 1);

            if let Some(c) = cap {
                if c < mode || right(c) > eps {
                    return Err(Error::Infeasible(format!(
                        "photon cap {c} leaves more than eps = {eps:e} of Poisson({mu}) mass uncovered"
                    )));
                }
            }

            let (mut lo, mut hi) = (mode, mode);
            let mut tail = left(lo) + right(hi);
            while tail > eps {
                let can_grow_right = cap.is_none_or(|c| hi < c);
                let grow_left = lo > 0
                    && (!can_grow_right || source.pmf(lo - 1) >= source.pmf(hi + 1));
                if grow_left {
                    lo -= 1;
                } else if can_grow_right {
                    hi += 1;
                } else {
                    return Err(Error::Infeasible(format!(
                        "cannot reach eps = {eps:e} within photon cap"
                    )));
                }
                tail = left(lo) + right(hi);
            }
            let weights = (lo..=hi).map(|n| source.pmf(n)).collect();
            Ok(Window {
                lo,
                hi,
                weights,
                tail,
            })
        }
    }
}

/// `log2` of `C(M, r) eta^(M-r) (1-eta)^r`, the chance that exactly `r` of
/// `M` pixels are switched off.
pub fn status_log2_weights(pixels: usize, eta: f64) -> Vec<f64> {
    let m = pixels as u64;
    let (la, li) = (eta.log2(), (1.0 - eta).log2());
    (0..=m)
        .map(|r| {
            let active = (m - r) as f64;
            let a = if m - r == 0 { 0.0 } else { active * la };
            let i = if r == 0 { 0.0 } else { r as f64 * li };
            let c = binomial(m, r).to_log_real().log2();
            let v = c + a + i;
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        })
        .collect()
}

/// Window over the number of inactive pixels for uniform efficiency.
pub fn status_window(pixels: usize, eta: f64, eps: f64) -> Window {
    let all: Vec<f64> = status_log2_weights(pixels, eta)
        .into_iter()
        .map(f64::exp2)
        .collect();
    let mode = all
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |best, (i, &w)| {
            if w > best.1 {
                (i, w)
            } else {
                best
            }
        })
        .0;
    let left = |lo: usize| all[..lo].iter().copied().collect::<CompensatedSum>().value();
    let right = |hi: usize| {
        all[hi + 1..]
            .iter()
            .rev()
            .copied()
            .collect::<CompensatedSum>()
            .value()
    };
    let (mut lo, mut hi) = (mode, mode);
    let mut tail = left(lo) + right(hi);
    while tail > eps && (lo > 0 || hi < pixels) {
        let l = if lo > 0 { all[lo - 1] } else { -1.0 };
        let r = if hi < pixels { all[hi + 1] } else { -1.0 };
        if l >= r {
            lo -= 1;
        } else {
            hi += 1;
        }
        tail = left(lo) + right(hi);
    }
    Window {
        lo: lo as u64,
        hi: hi as u64,
        weights: all[lo..=hi].to_vec(),
        tail,
    }
}

/// Probability mass of each active-pixel count `l` (index = `l`), from an
/// exhaustive walk over all `2^M` status vectors in ascending order.
pub fn active_count_masses(etas: &[f64]) -> Vec<f64> {
    let m = etas.len();
    let mut sums = vec![CompensatedSum::new(); m + 1];
    for mask in 0u64..(1u64 << m) {
        let p: f64 = etas
            .iter()
            .enumerate()
            .map(|(i, &e)| if mask >> i & 1 == 1 { e } else { 1.0 - e })
            .product();
        sums[mask.count_ones() as usize].add(p);
    }
    sums.iter().map(CompensatedSum::value).collect()
}
