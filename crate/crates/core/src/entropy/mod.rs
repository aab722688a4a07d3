//! Classical and conditional min-entropies of the pixel array.
//!
//! The adversary knows the photon number `n` and picks the activation
//! pattern `s`; her best guess succeeds with probability
//! `max_k k! {n+r brace k+r}_r / M^n` where `r` is the number of pixels she
//! switched off. Averaging that over `n` and `s` gives the guessing
//! probability `2^-H_min(X|N,S)`.
//!
//! Three evaluation routes exist:
//!
//! * [`conditional_min_entropy`]: uniform efficiency, status vectors grouped
//!   by their weight through the binomial law. This is the fast path; for
//!   each `n` it builds the forward-difference table of `b -> b^n` once and
//!   reads every `k! {n+r brace k+r}_r` off it.
//! * [`conditional_min_entropy_general`]: per-pixel efficiencies, all `2^M`
//!   status vectors enumerated. Independent of the fast path and used to
//!   cross-check it.
//! * [`no_source_info_entropy`]: the adversary does not learn `n`.
//!
//! Sums run in ascending `n`, then ascending `r`, with compensated
//! accumulation. Work fans out over contiguous blocks of `n`; every per-`n`
//! partial is computed from exact integers, so the result does not depend on
//! how the blocks are scheduled.

mod sweep;
pub mod window;

use std::f64::consts::LN_2;
use std::fmt;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rayon::prelude::*;

use crate::combinatorics::{OrderedStirlingTable, StirlingMemo};
use crate::detector::{generation_rate, AcquisitionParams, DetectorArrayModel, SourceModel};
use crate::error::{Error, Result};
use crate::numerics::{ratio_log2, ratio_to_f64, CompensatedSum};

pub use sweep::{optimize_mu, sweep_mu, write_sweep_csv, SweepRow, SWEEP_CSV_HEADER};
use window::{active_count_masses, photon_window, status_log2_weights, status_window, Window};

/// Largest array for the routes that enumerate every status vector.
pub const ENUMERATION_MAX_PIXELS: usize = 16;

/// Photon numbers handled per parallel work item.
const PHOTON_BLOCK: u64 = 8;

/// Where to cut the infinite photon sum and the status-weight sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationPolicy {
    pub eps_n: f64,
    pub eps_s: f64,
    pub hard_n_max: Option<u64>,
}

impl TruncationPolicy {
    pub fn new(eps_n: f64, eps_s: f64, hard_n_max: Option<u64>) -> Result<Self> {
        for (name, e) in [("eps_n", eps_n), ("eps_s", eps_s)] {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::Parameter(format!("{name} must lie in (0, 1), got {e}")));
            }
        }
        Ok(TruncationPolicy {
            eps_n,
            eps_s,
            hard_n_max,
        })
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            eps_n: 1e-15,
            eps_s: 1e-15,
            hard_n_max: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntropyMode {
    /// Adversary knows photon number and activation pattern.
    WithPhotonInfo,
    /// Adversary knows only the activation pattern.
    NoPhotonInfo,
    /// No adversary: min-entropy of the output distribution itself.
    Classical,
}

impl fmt::Display for EntropyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntropyMode::WithPhotonInfo => "with-photon-info",
            EntropyMode::NoPhotonInfo => "no-photon-info",
            EntropyMode::Classical => "classical",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropyReport {
    pub mode: EntropyMode,
    pub pixels: usize,
    /// Mean photons per pixel per frame.
    pub mu_px: f64,
    /// Uniform efficiency, when there is one.
    pub eta: Option<f64>,
    pub h_classical: f64,
    /// Min-entropy under `mode`; equals `h_classical` in classical mode.
    pub h_conditional: f64,
    pub p_guess: f64,
    /// Upper bound on `|p_guess - exact|`: the probability mass the
    /// truncated sums leave out plus a floating-point rounding allowance.
    pub truncation_bound: f64,
    pub n_range: (u64, u64),
    pub r_range: (u64, u64),
    /// `(n, r, k)` cells evaluated.
    pub terms: u64,
    pub secure_rate: f64,
    pub wall_time: Duration,
}

/// Guessing probability and its complement, the latter kept separately so
/// entropies near zero keep their relative precision.
#[derive(Clone, Copy, Debug)]
struct Guess {
    p: f64,
    complement: f64,
}

impl Guess {
    fn entropy(&self) -> f64 {
        let h = if self.p > 0.5 {
            -(-self.complement).ln_1p() / LN_2
        } else {
            -self.p.log2()
        };
        h.max(0.0)
    }
}

/// `(t / M^n, (M^n - t) / M^n)` from exact integers.
fn split(best: &BigUint, total: &BigUint) -> (f64, f64) {
    (ratio_to_f64(best, total), ratio_to_f64(&(total - best), total))
}

fn pow_big(base: u64, exp: u64) -> BigUint {
    num_traits::pow::pow(BigUint::from(base), exp as usize)
}

/// Per-`n` contribution of the uniform route: `Σ_r w_r max_k P(k | n, M-r)`
/// and the same with complements.
#[derive(Clone, Copy, Debug, Default)]
struct PhotonTerm {
    p: f64,
    q: f64,
    terms: u64,
}

/// Evaluates one photon number. `powers[i] = (base_lo + i)^n`.
fn photon_term(
    n: u64,
    pixels: usize,
    powers: &[BigUint],
    base_lo: u64,
    status: &Window,
    total: &BigUint,
) -> PhotonTerm {
    let m = pixels as u64;
    let (r_lo, r_hi) = (status.lo, status.hi);
    debug_assert_eq!(base_lo, r_lo);
    let width = (r_hi - r_lo + 1) as usize;
    let k_cap = n.min(m - r_lo);

    // Running forward differences, kept only on the positions still needed.
    let mut row: Vec<BigUint> = powers.to_vec();
    let mut best: Vec<BigUint> = row[..width].to_vec();
    for k in 1..=k_cap {
        let live = row.len() - 1;
        for i in 0..live {
            let d = &row[i + 1] - &row[i];
            row[i] = d;
        }
        row.truncate(live);
        // Order k is admissible at r only when k <= M - r.
        let r_max = r_hi.min(m - k);
        if r_max < r_lo {
            break;
        }
        for (i, slot) in best.iter_mut().enumerate().take((r_max - r_lo + 1) as usize) {
            if row[i] > *slot {
                *slot = row[i].clone();
            }
        }
    }

    let mut p = CompensatedSum::new();
    let mut q = CompensatedSum::new();
    let mut terms = 0;
    for (i, r) in status.indices().enumerate() {
        let w = status.weights[i];
        let (pk, qk) = split(&best[i], total);
        p.add(w * pk);
        q.add(w * qk);
        terms += n.min(m - r) + 1;
    }
    PhotonTerm {
        p: p.value(),
        q: q.value(),
        terms,
    }
}

fn uniform_terms(pixels: usize, photons: &Window, status: &Window) -> Vec<PhotonTerm> {
    let m = pixels as u64;
    let base_lo = status.lo;
    let blocks: Vec<(u64, u64)> = {
        let mut v = Vec::new();
        let mut start = photons.lo;
        while start <= photons.hi {
            let end = (start + PHOTON_BLOCK - 1).min(photons.hi);
            v.push((start, end));
            start = end + 1;
        }
        v
    };
    blocks
        .into_par_iter()
        .map(|(start, end)| {
            let k_cap = end.min(m - status.lo);
            let base_hi = m.min(status.hi + k_cap);
            let bases: Vec<u64> = (base_lo..=base_hi).collect();
            let mut powers: Vec<BigUint> = bases.iter().map(|&b| pow_big(b, start)).collect();
            let mut total = pow_big(m, start);
            let mut out = Vec::with_capacity((end - start + 1) as usize);
            for n in start..=end {
                if n > start {
                    for (p, &b) in powers.iter_mut().zip(&bases) {
                        *p *= b;
                    }
                    total *= m;
                }
                let kc = n.min(m - status.lo);
                let needed = (m.min(status.hi + kc) - base_lo + 1) as usize;
                out.push(photon_term(n, pixels, &powers[..needed], base_lo, status, &total));
            }
            out
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

fn combine(photons: &Window, terms: &[PhotonTerm], status_tail: f64) -> Guess {
    let mut p = CompensatedSum::new();
    let mut q = CompensatedSum::new();
    for (i, t) in terms.iter().enumerate() {
        let w = photons.weights[i];
        p.add(w * t.p);
        q.add(w * t.q);
    }
    let (a, b) = (photons.tail, status_tail);
    let outside = a + b - a * b;
    Guess {
        p: p.value(),
        complement: outside + q.value(),
    }
}

/// Allowance for rounding in a sum of `weight * ratio` terms whose weights
/// carry a relative error of about `spread` units in the last place.
fn rounding_allowance(p: f64, spread: f64) -> f64 {
    p * f64::EPSILON * (16.0 + 2.0 * spread)
}

fn require_uniform(model: &DetectorArrayModel) -> Result<f64> {
    model.uniform_eta().ok_or_else(|| {
        Error::Parameter("this route needs a uniform efficiency across pixels".into())
    })
}

/// Mean photons per pixel implied by the source.
fn mu_px_of(model: &DetectorArrayModel, source: &SourceModel) -> f64 {
    source.mean_per_pixel(model.pixels())
}

/// `2^-H_min(X|N,S)` for a uniform-efficiency array.
pub fn guessing_probability(
    model: &DetectorArrayModel,
    source: &SourceModel,
    policy: &TruncationPolicy,
) -> Result<f64> {
    Ok(conditional_min_entropy(model, source, policy)?.p_guess)
}

/// Uniform-efficiency conditional min-entropy with the photon and status
/// sums truncated per `policy`.
pub fn conditional_min_entropy(
    model: &DetectorArrayModel,
    source: &SourceModel,
    policy: &TruncationPolicy,
) -> Result<EntropyReport> {
    let photons = photon_window(source, policy.eps_n, policy.hard_n_max)?;
    let eta = require_uniform(model)?;
    let status = status_window(model.pixels(), eta, policy.eps_s);
    conditional_min_entropy_in(model, source, &photons, &status)
}

/// Same as [`conditional_min_entropy`] but over caller-chosen index ranges
/// (`n_range` photons, `r_range` inactive pixels). Mass outside the ranges
/// is reported as the truncation bound.
pub fn conditional_min_entropy_over(
    model: &DetectorArrayModel,
    source: &SourceModel,
    n_range: (u64, u64),
    r_range: (u64, u64),
) -> Result<EntropyReport> {
    let eta = require_uniform(model)?;
    let m = model.pixels() as u64;
    if n_range.0 > n_range.1 || r_range.0 > r_range.1 || r_range.1 > m {
        return Err(Error::Parameter(format!(
            "bad ranges n {n_range:?}, r {r_range:?} for M = {m}"
        )));
    }
    let pmf: Vec<f64> = (n_range.0..=n_range.1).map(|n| source.pmf(n)).collect();
    let inside: f64 = pmf.iter().copied().collect::<CompensatedSum>().value();
    let photons = Window {
        lo: n_range.0,
        hi: n_range.1,
        weights: pmf,
        tail: (1.0 - inside).max(0.0),
    };
    let all: Vec<f64> = status_log2_weights(model.pixels(), eta)
        .into_iter()
        .map(f64::exp2)
        .collect();
    let weights = all[r_range.0 as usize..=r_range.1 as usize].to_vec();
    let status_tail = all[..r_range.0 as usize]
        .iter()
        .chain(all[r_range.1 as usize + 1..].iter())
        .copied()
        .collect::<CompensatedSum>()
        .value();
    let status = Window {
        lo: r_range.0,
        hi: r_range.1,
        weights,
        tail: status_tail,
    };
    conditional_min_entropy_in(model, source, &photons, &status)
}

fn conditional_min_entropy_in(
    model: &DetectorArrayModel,
    source: &SourceModel,
    photons: &Window,
    status: &Window,
) -> Result<EntropyReport> {
    let start = Instant::now();
    let terms = uniform_terms(model.pixels(), photons, status);
    let guess = combine(photons, &terms, status.tail);
    let h = guess.entropy();
    let acq = model.acquisition();
    Ok(EntropyReport {
        mode: EntropyMode::WithPhotonInfo,
        pixels: model.pixels(),
        mu_px: mu_px_of(model, source),
        eta: model.uniform_eta(),
        h_classical: classical_entropy(model, source)?,
        h_conditional: h,
        p_guess: guess.p,
        truncation_bound: photons.tail
            + status.tail
            + rounding_allowance(guess.p, photons.log_spread() + status.log_spread()),
        n_range: (photons.lo, photons.hi),
        r_range: (status.lo, status.hi),
        terms: terms.iter().map(|t| t.terms).sum(),
        secure_rate: generation_rate(h, &acq),
        wall_time: start.elapsed(),
    })
}

fn check_enumerable(model: &DetectorArrayModel) -> Result<()> {
    if model.pixels() > ENUMERATION_MAX_PIXELS {
        return Err(Error::Resource(format!(
            "status enumeration limited to M <= {ENUMERATION_MAX_PIXELS}, got {}",
            model.pixels()
        )));
    }
    Ok(())
}

fn etas_of(model: &DetectorArrayModel) -> Vec<f64> {
    (0..model.pixels()).map(|i| model.eta(i)).collect()
}

/// Conditional min-entropy with per-pixel efficiencies, summing over every
/// status vector. The per-vector maximum is found on the reduced `(k, l)`
/// representation using the explicit r-Stirling sum.
pub fn conditional_min_entropy_general(
    model: &DetectorArrayModel,
    source: &SourceModel,
    policy: &TruncationPolicy,
) -> Result<EntropyReport> {
    check_enumerable(model)?;
    let start = Instant::now();
    let pixels = model.pixels();
    let m = pixels as u64;
    let photons = photon_window(source, policy.eps_n, policy.hard_n_max)?;
    let masses = active_count_masses(&etas_of(model));
    let memo = StirlingMemo::new();

    let per_n: Vec<(f64, f64, u64)> = photons
        .indices()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| {
            let total = pow_big(m, n);
            let mut p = CompensatedSum::new();
            let mut q = CompensatedSum::new();
            let mut terms = 0;
            for (l, &mass) in masses.iter().enumerate() {
                let l = l as u64;
                let r = m - l;
                let mut best = memo.ordered(n, 0, r);
                for k in 1..=n.min(l) {
                    let t = memo.ordered(n, k, r);
                    if *t > *best {
                        best = t;
                    }
                }
                terms += n.min(l) + 1;
                let (pk, qk) = split(&best, &total);
                p.add(mass * pk);
                q.add(mass * qk);
            }
            (p.value(), q.value(), terms)
        })
        .collect();

    let mut p = CompensatedSum::new();
    let mut q = CompensatedSum::new();
    for (i, &(pn, qn, _)) in per_n.iter().enumerate() {
        p.add(photons.weights[i] * pn);
        q.add(photons.weights[i] * qn);
    }
    let guess = Guess {
        p: p.value(),
        complement: photons.tail + q.value(),
    };
    let h = guess.entropy();
    Ok(EntropyReport {
        mode: EntropyMode::WithPhotonInfo,
        pixels,
        mu_px: mu_px_of(model, source),
        eta: model.uniform_eta(),
        h_classical: classical_entropy(model, source)?,
        h_conditional: h,
        p_guess: guess.p,
        truncation_bound: photons.tail
            + rounding_allowance(guess.p, photons.log_spread() + pixels as f64),
        n_range: (photons.lo, photons.hi),
        r_range: (0, m),
        terms: per_n.iter().map(|t| t.2).sum(),
        secure_rate: generation_rate(h, &model.acquisition()),
        wall_time: start.elapsed(),
    })
}

/// Min-entropy when the adversary controls the activation pattern but does
/// not learn the photon number: `Σ_s P_S(s) max_x Σ_n P_N(n) P(x | n, s)`.
pub fn no_source_info_entropy(
    model: &DetectorArrayModel,
    source: &SourceModel,
    policy: &TruncationPolicy,
) -> Result<EntropyReport> {
    check_enumerable(model)?;
    let start = Instant::now();
    let pixels = model.pixels();
    let m = pixels as u64;
    let photons = photon_window(source, policy.eps_n, policy.hard_n_max)?;
    let masses = active_count_masses(&etas_of(model));
    let side = pixels + 1;

    // Per n: P(k | n, l) and its complement for every (k, l), flattened.
    let cells: Vec<Vec<(f64, f64)>> = photons
        .indices()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| {
            let order = n.min(m) as usize;
            let table = OrderedStirlingTable::new(n, m, order);
            let total = pow_big(m, n);
            let zero = BigUint::default();
            let mut row = vec![(0.0, 1.0); side * side];
            for l in 0..=m {
                for k in 0..=n.min(l) {
                    let t = table.get(k as usize, (m - l) as usize).unwrap_or(&zero);
                    row[k as usize * side + l as usize] = split(t, &total);
                }
            }
            row
        })
        .collect();

    let mut p = CompensatedSum::new();
    let mut q = CompensatedSum::new();
    let mut terms = 0u64;
    for (l, &mass) in masses.iter().enumerate() {
        let mut best: Option<(f64, f64)> = None;
        for k in 0..=l {
            let mut a = CompensatedSum::new();
            let mut b = CompensatedSum::new();
            for (i, row) in cells.iter().enumerate() {
                let (pk, qk) = row[k * side + l];
                a.add(photons.weights[i] * pk);
                b.add(photons.weights[i] * qk);
            }
            terms += cells.len() as u64;
            let cand = (a.value(), photons.tail + b.value());
            if best.is_none_or(|(bp, _)| cand.0 > bp) {
                best = Some(cand);
            }
        }
        let (bp, bq) = best.expect("l >= 0 always has k = 0");
        p.add(mass * bp);
        q.add(mass * bq);
    }
    let guess = Guess {
        p: p.value(),
        complement: q.value(),
    };
    let h = guess.entropy();
    Ok(EntropyReport {
        mode: EntropyMode::NoPhotonInfo,
        pixels,
        mu_px: mu_px_of(model, source),
        eta: model.uniform_eta(),
        h_classical: classical_entropy(model, source)?,
        h_conditional: h,
        p_guess: guess.p,
        truncation_bound: photons.tail
            + rounding_allowance(guess.p, photons.log_spread() + pixels as f64),
        n_range: (photons.lo, photons.hi),
        r_range: (0, m),
        terms,
        secure_rate: generation_rate(h, &model.acquisition()),
        wall_time: start.elapsed(),
    })
}

/// `-log2` of one pixel's most likely bit, evaluated without cancellation.
fn pixel_classical_bits(mu_px: f64, eta: f64) -> f64 {
    let miss = (-mu_px).exp();
    let p1 = eta * -(-mu_px).exp_m1();
    let p0 = (1.0 - eta) + eta * miss;
    if p0 >= p1 {
        -p0.log2()
    } else {
        -(-p0).ln_1p() / LN_2
    }
}

/// Min-entropy of the output distribution with no adversary.
///
/// Under a Poisson source every pixel is an independent Bernoulli trial, so
/// the most likely frame is the product of per-pixel maxima. A fixed photon
/// number couples the pixels; there the marginal is summed out exactly.
pub fn classical_entropy(model: &DetectorArrayModel, source: &SourceModel) -> Result<f64> {
    let pixels = model.pixels();
    match *source {
        SourceModel::Poisson { .. } => {
            let mu_px = source.mean_per_pixel(pixels);
            Ok((0..pixels)
                .map(|i| pixel_classical_bits(mu_px, model.eta(i)))
                .collect::<CompensatedSum>()
                .value()
                .max(0.0))
        }
        SourceModel::Fixed { n } => match model.uniform_eta() {
            Some(eta) => Ok(fixed_classical_uniform(pixels, n, eta)),
            None => fixed_classical_general(model, n),
        },
    }
}

/// `max_k Σ_j C(M-k, j) eta^(k+j) (1-eta)^(M-k-j) P(k | n, k+j)`.
fn fixed_classical_uniform(pixels: usize, n: u64, eta: f64) -> f64 {
    let m = pixels as u64;
    let table = OrderedStirlingTable::new(n, m, n.min(m) as usize);
    let total = pow_big(m, n);
    let (la, li) = (eta.log2(), (1.0 - eta).log2());
    let mut best = 0.0f64;
    for k in 0..=n.min(m) {
        let mut acc = CompensatedSum::new();
        for j in 0..=(m - k) {
            let r = m - k - j;
            let Some(t) = table.get(k as usize, r as usize) else {
                continue;
            };
            let active = k + j;
            let mut lw = crate::combinatorics::binomial(m - k, j).to_log_real().log2();
            if active > 0 {
                lw += active as f64 * la;
            }
            if r > 0 {
                lw += r as f64 * li;
            }
            if lw.is_nan() || lw == f64::NEG_INFINITY {
                continue;
            }
            acc.add((lw + ratio_log2(t, &total)).exp2());
        }
        best = best.max(acc.value());
    }
    (-best.log2()).max(0.0)
}

fn fixed_classical_general(model: &DetectorArrayModel, n: u64) -> Result<f64> {
    check_enumerable(model)?;
    let pixels = model.pixels();
    let m = pixels as u64;
    let table = OrderedStirlingTable::new(n, m, n.min(m) as usize);
    let total = pow_big(m, n);
    let etas = etas_of(model);
    let mut best = 0.0f64;
    for mask in 0u64..(1u64 << pixels) {
        let k = mask.count_ones() as u64;
        if k > n {
            continue;
        }
        let clicked: f64 = (0..pixels)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| etas[i])
            .product();
        // Distribution of how many of the other pixels are active.
        let mut dist = vec![1.0f64];
        for i in (0..pixels).filter(|i| mask >> i & 1 == 0) {
            let e = etas[i];
            let mut next = vec![0.0; dist.len() + 1];
            for (j, &d) in dist.iter().enumerate() {
                next[j] += d * (1.0 - e);
                next[j + 1] += d * e;
            }
            dist = next;
        }
        let mut acc = CompensatedSum::new();
        for (j, &d) in dist.iter().enumerate() {
            let r = m - k - j as u64;
            if let Some(t) = table.get(k as usize, r as usize) {
                acc.add(d * ratio_to_f64(t, &total));
            }
        }
        best = best.max(clicked * acc.value());
    }
    Ok((-best.log2()).max(0.0))
}

/// Classical report from a measured click probability shared by all pixels.
pub fn classical_report(pixels: usize, p1: f64, acq: AcquisitionParams) -> Result<EntropyReport> {
    if !(0.0..=1.0).contains(&p1) {
        return Err(Error::Parameter(format!("P1 must lie in [0, 1], got {p1}")));
    }
    if pixels == 0 {
        return Err(Error::Parameter("pixel count must be at least 1".into()));
    }
    let h = crate::detector::classical_min_entropy(1.0 - p1, p1, pixels);
    Ok(classical_from(h, pixels, f64::NAN, None, acq))
}

fn classical_from(
    h: f64,
    pixels: usize,
    mu_px: f64,
    eta: Option<f64>,
    acq: AcquisitionParams,
) -> EntropyReport {
    EntropyReport {
        mode: EntropyMode::Classical,
        pixels,
        mu_px,
        eta,
        h_classical: h,
        h_conditional: h,
        p_guess: (-h).exp2(),
        truncation_bound: 0.0,
        n_range: (0, 0),
        r_range: (0, 0),
        terms: 0,
        secure_rate: generation_rate(h, &acq),
        wall_time: Duration::ZERO,
    }
}

/// Classical report for a modelled array and source.
pub fn classical_model_report(
    model: &DetectorArrayModel,
    source: &SourceModel,
) -> Result<EntropyReport> {
    let h = classical_entropy(model, source)?;
    Ok(classical_from(
        h,
        model.pixels(),
        mu_px_of(model, source),
        model.uniform_eta(),
        model.acquisition(),
    ))
}
