//! Acceptance suite. Each criterion runs under its own time budget and
//! prints one PASS or FAIL line; the process exits non-zero if any fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use qrng_entropy::bits::PixelBits;
use qrng_entropy::combinatorics::{
    binomial, factorial, ordered_r_stirling2, r_stirling2, RecurrenceEvaluator,
};
use qrng_entropy::conditional::{cond_prob, NumericMode, Probability};
use qrng_entropy::detector::{
    classical_min_entropy, generation_rate, AcquisitionParams, DetectorArrayModel, SourceModel,
};
use qrng_entropy::entropy::{
    classical_report, conditional_min_entropy, conditional_min_entropy_over, guessing_probability,
    no_source_info_entropy, TruncationPolicy,
};
use qrng_entropy::extractor::{
    monobit_p_value, output_length, runs_p_value, toeplitz_extract, toeplitz_fft, toeplitz_hash,
    toeplitz_streaming, DEFAULT_EPS_SEC,
};
use qrng_entropy::simulator::{empirical_guess_rate, simulate_frames, SimSeed};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn uniform(m: usize, eta: f64) -> DetectorArrayModel {
    DetectorArrayModel::uniform(m, eta, AcquisitionParams::default()).unwrap()
}

fn poisson(mu_px: f64, m: usize) -> SourceModel {
    SourceModel::poisson_per_pixel(mu_px, m).unwrap()
}

fn mask_bits(mask: usize, m: usize) -> PixelBits {
    let bools: Vec<bool> = (0..m).map(|i| mask >> i & 1 == 1).collect();
    PixelBits::from_bools(&bools)
}

/// Hit-set histogram: for each subset `H` of pixels, the number of the `M^n`
/// photon-to-pixel assignments whose set of hit pixels is exactly `H`.
fn hit_histogram(m: usize, n: u32) -> Vec<u64> {
    let mut hist = vec![0u64; 1 << m];
    let total = (m as u64).pow(n);
    for code in 0..total {
        let mut c = code;
        let mut hit = 0usize;
        for _ in 0..n {
            hit |= 1 << (c % m as u64);
            c /= m as u64;
        }
        hist[hit] += 1;
    }
    hist
}

/// Partitions of `{0, .., size-1}` into `blocks` blocks with the last
/// `separated` elements in distinct blocks, by direct recursion.
fn count_separated_partitions(size: usize, blocks: usize, separated: usize) -> u64 {
    fn go(i: usize, assign: &mut Vec<usize>, used: usize, size: usize, blocks: usize, sep: usize) -> u64 {
        if i == size {
            let tail = &assign[size - sep..];
            let distinct = (0..tail.len()).all(|a| (a + 1..tail.len()).all(|b| tail[a] != tail[b]));
            return u64::from(used == blocks && distinct);
        }
        let mut total = 0;
        for b in 0..=used.min(blocks - 1) {
            assign.push(b);
            total += go(i + 1, assign, used.max(b + 1), size, blocks, sep);
            assign.pop();
        }
        total
    }
    go(0, &mut Vec::new(), 0, size, blocks, separated)
}

fn criterion_1() -> Outcome {
    let partitions = count_separated_partitions(6, 5, 2);
    ensure(partitions == 14, || format!("enumerated {partitions} partitions"))?;
    let s_val = r_stirling2(4, 3, 2).to_u64();
    ensure(s_val == Some(14), || format!("r_stirling2(4,3,2) = {s_val:?}"))?;
    let t = ordered_r_stirling2(4, 3, 2).to_u64();
    let k_fact = factorial(3).to_u64().unwrap();
    ensure(t == Some(84) && k_fact * 14 == 84, || format!("ordered count {t:?}"))?;

    // Arrangements of 4 photons on 6 pixels: pixels 0..3 must each be hit,
    // pixel 3 must stay dark, pixels 4 and 5 are unconstrained.
    let mut arrangements = 0;
    for code in 0..6u32.pow(4) {
        let mut hits = [0u32; 6];
        let mut c = code;
        for _ in 0..4 {
            hits[(c % 6) as usize] += 1;
            c /= 6;
        }
        if hits[..3].iter().all(|&h| h > 0) && hits[3] == 0 {
            arrangements += 1;
        }
    }
    ensure(arrangements == 84, || format!("enumerated {arrangements} arrangements"))?;

    let x = PixelBits::from_digits(&[1, 1, 1, 0, 0, 0]);
    let s = PixelBits::from_digits(&[1, 1, 1, 1, 0, 0]);
    let want = Ratio::new(BigUint::from(84u32), BigUint::from(1296u32));
    let got = cond_prob(&x, 4, &s, NumericMode::Exact).map_err(|e| e.to_string())?;
    ensure(got.exact() == Some(&want), || format!("cond_prob = {got:?}"))?;
    ensure(*want.numer() == BigUint::from(7u32) && *want.denom() == BigUint::from(108u32), || {
        "reduced form".into()
    })?;
    Ok("{6 brace 5}_2 = 14, t = 84, P = 84/1296".into())
}

fn criterion_2() -> Outcome {
    let mut pairs = 0u64;
    let mut worst_log = 0.0f64;
    for m in 2..=5usize {
        for n in 0..=6u32 {
            let hist = hit_histogram(m, n);
            let total = (m as u64).pow(n);
            for si in 0..1usize << m {
                let s = mask_bits(si, m);
                let mut counts = vec![0u64; 1 << m];
                for (h, &c) in hist.iter().enumerate() {
                    counts[h & si] += c;
                }
                for (xi, &count) in counts.iter().enumerate() {
                    let x = mask_bits(xi, m);
                    let want = Ratio::new(BigUint::from(count), BigUint::from(total));
                    let exact = cond_prob(&x, n as u64, &s, NumericMode::Exact).map_err(|e| e.to_string())?;
                    ensure(exact.exact() == Some(&want), || {
                        format!("M={m} n={n} x={xi:b} s={si:b}: {exact:?} vs {count}/{total}")
                    })?;
                    let log = cond_prob(&x, n as u64, &s, NumericMode::Log).map_err(|e| e.to_string())?;
                    ensure(matches!(log, Probability::Log(_)), || "log mode returned exact".into())?;
                    let reference = count as f64 / total as f64;
                    let dev = if reference == 0.0 {
                        if log.is_zero() { 0.0 } else { f64::INFINITY }
                    } else {
                        (log.to_f64() - reference).abs() / reference
                    };
                    worst_log = worst_log.max(dev);
                    pairs += 1;
                }
            }
        }
    }
    ensure(worst_log <= 1e-12, || format!("log-mode relative deviation {worst_log:e}"))?;
    Ok(format!("{pairs} (x, s, n) cases exact; log-mode max rel dev {worst_log:.2e}"))
}

fn criterion_3() -> Outcome {
    let mut checks = 0;
    for m in 0..=8u64 {
        for l in 0..=m {
            let r = m - l;
            for n in 0..=20u64 {
                let mut sum = BigUint::zero();
                for k in 0..=l {
                    sum += binomial(l, k).into_biguint()
                        * factorial(k).into_biguint()
                        * r_stirling2(n, k, r).into_biguint();
                }
                let want = num_traits::pow(BigUint::from(m), n as usize);
                ensure(sum == want, || format!("M={m} l={l} n={n}: {sum} vs {want}"))?;
                checks += 1;
            }
        }
    }
    Ok(format!("{checks} (M, l, n) identities hold"))
}

fn criterion_4() -> Outcome {
    let results: Vec<Result<u64, String>> = (0..=30u64)
        .into_par_iter()
        .map(|n| {
            let mut ev = RecurrenceEvaluator::new();
            let mut count = 0;
            for k in 0..=30u64 {
                for r in 0..=30u64 {
                    let explicit = r_stirling2(n, k, r);
                    for p in 0..=r {
                        let rec = ev.eval(n + r, k + r, r, p).map_err(|e| e.to_string())?;
                        if rec != explicit {
                            return Err(format!("n={n} k={k} r={r} p={p}"));
                        }
                        count += 1;
                    }
                }
            }
            Ok(count)
        })
        .collect();
    let mut total = 0;
    for r in results {
        total += r?;
    }
    Ok(format!("{total} (n, k, r, p) evaluations agree"))
}

fn criterion_5() -> Outcome {
    let r = conditional_min_entropy(&uniform(9, 0.5), &poisson(28.0, 9), &TruncationPolicy::default())
        .map_err(|e| e.to_string())?;
    let ratio = r.h_conditional / 6e-12;
    ensure((0.1..=10.0).contains(&ratio), || format!("H_min(X|C) = {:e}", r.h_conditional))?;
    ensure((r.h_classical - 9.0).abs() < 1e-9, || format!("H_inf = {}", r.h_classical))?;
    let unbiased = classical_min_entropy(0.5, 0.5, 9);
    ensure(unbiased == 9.0, || format!("unbiased H_inf = {unbiased}"))?;
    Ok(format!("H_min(X|C) = {:.3e} bits, H_inf = {}", r.h_conditional, unbiased))
}

fn criterion_6() -> Outcome {
    let acq = AcquisitionParams::new(200e-9, 49_000.0).map_err(|e| e.to_string())?;
    let r = classical_report(1024, 0.5, acq).map_err(|e| e.to_string())?;
    ensure(r.secure_rate == 50_176_000.0, || format!("rate {}", r.secure_rate))?;
    ensure(generation_rate(1024.0, &acq) == 50_176_000.0, || "generation_rate".into())?;
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = qrng_entropy::cli::run_with_io(
        ["qrng-entropy", "entropy", "--mode", "classical", "--pixels", "1024", "--p1", "0.5", "--rate", "49000"],
        &mut out,
        &mut err,
    );
    let text = String::from_utf8_lossy(&out);
    ensure(code == 0 && text.contains("secure_rate_bps: 50176000\n"), || {
        format!("cli exit {code}: {text}{}", String::from_utf8_lossy(&err))
    })?;
    Ok("R_gen = 50176000 bit/s".into())
}

fn criterion_7() -> Outcome {
    let mut notes = Vec::new();
    for (i, (m, mu, eta)) in [(4usize, 0.5, 0.7), (3, 2.0, 0.9)].into_iter().enumerate() {
        let model = uniform(m, eta);
        let src = poisson(mu, m);
        let p = guessing_probability(&model, &src, &TruncationPolicy::default()).map_err(|e| e.to_string())?;
        let (freq, se) = empirical_guess_rate(&model, &src, 1_000_000, SimSeed::new(20_240_607, i as u64))
            .map_err(|e| e.to_string())?;
        let z = (freq - p).abs() / se;
        ensure(z <= 5.0, || format!("M={m}: empirical {freq} vs {p}, {z:.2} se"))?;
        notes.push(format!("M={m}: {freq:.5} vs {p:.5} ({z:.2} se)"));
    }
    Ok(notes.join("; "))
}

fn criterion_8() -> Outcome {
    let policy = TruncationPolicy::default();
    let slack = 1e-9;
    let mut cases = 0;
    for m in 2..=6usize {
        for mu in [0.1, 1.0, 5.0, 20.0] {
            for eta in [0.3, 0.7, 1.0] {
                let model = uniform(m, eta);
                let src = poisson(mu, m);
                let ns = conditional_min_entropy(&model, &src, &policy).map_err(|e| e.to_string())?;
                let s = no_source_info_entropy(&model, &src, &policy).map_err(|e| e.to_string())?;
                let tag = format!("M={m} mu={mu} eta={eta}");
                ensure(ns.h_conditional >= 0.0, || format!("{tag}: negative"))?;
                ensure(ns.h_conditional <= s.h_conditional + slack, || {
                    format!("{tag}: H(X|N,S) {} > H(X|S) {}", ns.h_conditional, s.h_conditional)
                })?;
                ensure(s.h_conditional <= ns.h_classical + slack, || {
                    format!("{tag}: H(X|S) {} > H_inf {}", s.h_conditional, ns.h_classical)
                })?;
                ensure(ns.h_classical <= m as f64, || format!("{tag}: H_inf > M"))?;

                let (nlo, nhi) = ns.n_range;
                let (rlo, rhi) = ns.r_range;
                let (wn, wr) = (nhi - nlo + 1, rhi - rlo + 1);
                let wide_n = (nlo.saturating_sub(wn), nhi + wn);
                let wide_r = (rlo.saturating_sub(wr), (rhi + wr).min(m as u64));
                let wide = conditional_min_entropy_over(&model, &src, wide_n, wide_r).map_err(|e| e.to_string())?;
                let moved = (wide.p_guess - ns.p_guess).abs();
                ensure(moved < ns.truncation_bound, || {
                    format!("{tag}: p_guess moved {moved:e}, bound {:e}", ns.truncation_bound)
                })?;
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} grid points ordered and truncation-honest"))
}

fn criterion_9() -> Outcome {
    let policy = TruncationPolicy::new(1e-15, 1e-15, None).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let r = conditional_min_entropy(&uniform(256, 0.5), &poisson(0.1, 256), &policy).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    ensure(r.h_conditional >= 0.0 && r.h_conditional <= r.h_classical + 1e-9, || {
        format!("H = {} vs H_inf = {}", r.h_conditional, r.h_classical)
    })?;
    let mut out = Vec::new();
    let code = qrng_entropy::cli::run_with_io(["qrng-entropy", "bench"], &mut out, &mut Vec::new());
    let text = String::from_utf8_lossy(&out);
    ensure(code == 0 && text.contains("wall_time_s:"), || format!("bench exit {code}: {text}"))?;
    Ok(format!(
        "M=256 in {:.3} s, {} terms, H_min = {:.6} bits",
        elapsed.as_secs_f64(),
        r.terms,
        r.h_conditional
    ))
}

fn dense_toeplitz(seed: &[bool], input: &[bool], m: usize) -> Vec<bool> {
    (0..m)
        .map(|i| {
            input
                .iter()
                .enumerate()
                .fold(false, |acc, (j, &x)| acc ^ (x & seed[m - 1 + j - i]))
        })
        .collect()
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e57);
    for t in 0..200 {
        let n = rng.random_range(1..=1usize << 14);
        let m = rng.random_range(1..=n.min(512));
        let density = rng.random_range(0.05..0.95);
        let seed: Vec<bool> = (0..n + m - 1).map(|_| rng.random_bool(0.5)).collect();
        let input: Vec<bool> = (0..n).map(|_| rng.random_bool(density)).collect();
        let want = dense_toeplitz(&seed, &input, m);
        let stream = toeplitz_streaming(&seed, &input, m).map_err(|e| e.to_string())?;
        ensure(stream == want, || format!("triple {t}: streaming differs (n={n}, m={m})"))?;
        let fft = toeplitz_fft(&seed, &input, m).map_err(|e| e.to_string())?;
        ensure(fft == want, || format!("triple {t}: fft differs (n={n}, m={m})"))?;
    }

    let (m, mu, eta) = (16usize, 1.0, 0.7);
    let model = uniform(m, eta);
    let src = poisson(mu, m);
    let h = conditional_min_entropy(&model, &src, &TruncationPolicy::default())
        .map_err(|e| e.to_string())?
        .h_conditional;
    let target = 1_050_000.0 + 2.0 * (1.0 / DEFAULT_EPS_SEC).log2();
    let frames = (target / h).ceil() as usize;
    let batch = simulate_frames(&model, &src, frames, SimSeed::new(99, 3), false).map_err(|e| e.to_string())?;
    let out_bits = output_length(frames as f64 * h, DEFAULT_EPS_SEC);
    let seed: Vec<bool> = (0..batch.bit_len() + out_bits - 1).map(|_| rng.random_bool(0.5)).collect();
    let out = toeplitz_extract(&batch, h, DEFAULT_EPS_SEC, &seed).map_err(|e| e.to_string())?;
    ensure(out.len() == out_bits && out.len() >= 1_000_000, || format!("{} output bits", out.len()))?;
    let input: Vec<bool> = batch.bits().collect();
    let again = toeplitz_hash(&seed, &input, out_bits).map_err(|e| e.to_string())?;
    ensure(again == out, || "extraction is not reproducible".into())?;
    let (pm, pr) = (monobit_p_value(&out), runs_p_value(&out));
    ensure(pm > 0.001 && pr > 0.001, || format!("monobit p = {pm}, runs p = {pr}"))?;
    Ok(format!(
        "200 dense triples exact; {} bits from {frames} frames (h = {h:.4}/frame), monobit p = {pm:.3}, runs p = {pr:.3}",
        out.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Outcome); 10] = [
        ("six-pixel worked configuration", 1, criterion_1),
        ("closed form against arrangement enumeration", 300, criterion_2),
        ("normalization identity", 60, criterion_3),
        ("recurrence against explicit formula", 120, criterion_4),
        ("security collapse at high flux", 10, criterion_5),
        ("classical rate arithmetic", 1, criterion_6),
        ("Monte-Carlo guessing agreement", 120, criterion_7),
        ("entropy inequalities and truncation honesty", 300, criterion_8),
        ("large-array evaluation time", 60, criterion_9),
        ("Toeplitz extractor correctness", 120, criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        let outcome = outcome.and_then(|msg| {
            if secs < budget as f64 {
                Ok(msg)
            } else {
                Err(format!("{msg}; exceeded {budget} s budget"))
            }
        });
        match outcome {
            Ok(msg) => println!("PASS criterion {} ({name}): {msg} [{secs:.2} s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {msg} [{secs:.2} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

