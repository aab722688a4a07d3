//! Toeplitz hashing of raw frames into nearly uniform output bits.
//!
//! For `N` input bits and `m` output bits the seed supplies `N + m - 1`
//! bits and the matrix entry in row `i`, column `j` is `seed[m - 1 + j - i]`:
//! the first row is `seed[m-1..]` and the first column, read from the bottom
//! up, is `seed[0..m]`. Output `i` is the parity of the row `i` entries that
//! meet a set input bit.
//!
//! With `R` the seed reversed, column `j` is the window `R[N-1-j..][..m]`,
//! which gives two evaluation orders. [`ToeplitzStream`] XORs one window
//! per set input bit and can consume frames as they arrive. [`toeplitz_fft`]
//! reads every output as `(R * x)[i + N - 1] mod 2`, an integer convolution
//! evaluated block by block with FFTs.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::simulator::FrameBatch;

/// Default security parameter, `2^-64`.
pub const DEFAULT_EPS_SEC: f64 = 5.421010862427522e-20;

/// Inputs up to this many `N * m` bit operations use the direct route.
const DIRECT_WORK_LIMIT: u128 = 1 << 34;

/// Leftover-hash output length: `floor(H - 2 log2(1 / eps_sec))`, or zero
/// when the entropy does not cover the security cost.
pub fn output_length(total_min_entropy: f64, eps_sec: f64) -> usize {
    let m = (total_min_entropy - 2.0 * (1.0 / eps_sec).log2()).floor();
    if m.is_nan() || m <= 0.0 {
        0
    } else {
        m as usize
    }
}

/// Shape of one extraction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtractorParams {
    pub input_bits: usize,
    pub output_bits: usize,
    pub eps_sec: f64,
}

impl ExtractorParams {
    pub fn new(input_bits: usize, output_bits: usize, eps_sec: f64) -> Result<Self> {
        if output_bits > input_bits {
            return Err(Error::Parameter(format!(
                "output length {output_bits} exceeds input length {input_bits}"
            )));
        }
        if !(eps_sec > 0.0 && eps_sec < 1.0) {
            return Err(Error::Parameter(format!("eps_sec must lie in (0, 1), got {eps_sec}")));
        }
        Ok(ExtractorParams {
            input_bits,
            output_bits,
            eps_sec,
        })
    }

    /// Seed bits required; zero when there is no output.
    pub fn seed_bits(&self) -> usize {
        if self.output_bits == 0 {
            0
        } else {
            self.input_bits + self.output_bits - 1
        }
    }
}

/// Bytes to bits, most significant bit of each byte first.
pub fn bits_from_bytes(bytes: &[u8]) -> Vec<bool> {
    bytes
        .iter()
        .flat_map(|&b| (0..8).rev().map(move |i| (b >> i) & 1 == 1))
        .collect()
}

/// Bits to bytes, most significant bit first, last byte zero-padded.
pub fn bytes_from_bits(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (7 - i))))
        .collect()
}

/// Seed given as a hexadecimal string.
pub fn bits_from_hex(text: &str) -> Result<Vec<bool>> {
    let clean: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bytes = hex::decode(&clean).map_err(|e| Error::Parameter(format!("bad hex seed: {e}")))?;
    Ok(bits_from_bytes(&bytes))
}

fn check_seed(seed: &[bool], n: usize, m: usize) -> Result<()> {
    if m > n {
        return Err(Error::Parameter(format!("output length {m} exceeds input length {n}")));
    }
    let needed = n + m - 1;
    if seed.len() < needed {
        return Err(Error::SeedTooShort {
            needed,
            available: seed.len(),
        });
    }
    Ok(())
}

fn pack_words(bits: impl Iterator<Item = bool>, len: usize) -> Vec<u64> {
    // One spare word so 64-bit windows can always read their upper half.
    let mut words = vec![0u64; len.div_ceil(64) + 1];
    for (t, b) in bits.enumerate() {
        if b {
            words[t / 64] |= 1 << (t % 64);
        }
    }
    words
}

fn window64(words: &[u64], pos: usize) -> u64 {
    let (w, s) = (pos / 64, pos % 64);
    if s == 0 {
        words[w]
    } else {
        (words[w] >> s) | (words[w + 1] << (64 - s))
    }
}

/// Incremental Toeplitz evaluation: feed the `N` input bits in order, then
/// call [`ToeplitzStream::finish`].
#[derive(Clone, Debug)]
pub struct ToeplitzStream {
    reversed: Vec<u64>,
    acc: Vec<u64>,
    input_bits: usize,
    output_bits: usize,
    fed: usize,
}

impl ToeplitzStream {
    pub fn new(seed: &[bool], input_bits: usize, output_bits: usize) -> Result<Self> {
        let (n, m) = (input_bits, output_bits);
        if m == 0 {
            return Ok(ToeplitzStream {
                reversed: Vec::new(),
                acc: Vec::new(),
                input_bits: n,
                output_bits: 0,
                fed: 0,
            });
        }
        check_seed(seed, n, m)?;
        let len = n + m - 1;
        let reversed = pack_words(seed[..len].iter().rev().copied(), len);
        Ok(ToeplitzStream {
            reversed,
            acc: vec![0; m.div_ceil(64)],
            input_bits: n,
            output_bits: m,
            fed: 0,
        })
    }

    pub fn push(&mut self, bit: bool) -> Result<()> {
        if self.fed == self.input_bits {
            return Err(Error::Parameter(format!(
                "more than the declared {} input bits",
                self.input_bits
            )));
        }
        let j = self.fed;
        self.fed += 1;
        if bit && self.output_bits > 0 {
            let offset = self.input_bits - 1 - j;
            for (w, a) in self.acc.iter_mut().enumerate() {
                *a ^= window64(&self.reversed, offset + 64 * w);
            }
        }
        Ok(())
    }

    pub fn extend<I: IntoIterator<Item = bool>>(&mut self, bits: I) -> Result<()> {
        bits.into_iter().try_for_each(|b| self.push(b))
    }

    pub fn finish(self) -> Result<Vec<bool>> {
        if self.fed != self.input_bits {
            return Err(Error::Parameter(format!(
                "received {} of {} input bits",
                self.fed, self.input_bits
            )));
        }
        Ok((0..self.output_bits)
            .map(|i| (self.acc[i / 64] >> (i % 64)) & 1 == 1)
            .collect())
    }
}

/// Bit-serial evaluation through [`ToeplitzStream`].
pub fn toeplitz_streaming(seed: &[bool], input: &[bool], output_bits: usize) -> Result<Vec<bool>> {
    let mut s = ToeplitzStream::new(seed, input.len(), output_bits)?;
    s.extend(input.iter().copied())?;
    s.finish()
}

/// FFT evaluation, overlap-add over input blocks.
pub fn toeplitz_fft(seed: &[bool], input: &[bool], output_bits: usize) -> Result<Vec<bool>> {
    let (n, m) = (input.len(), output_bits);
    if m == 0 {
        return Ok(Vec::new());
    }
    check_seed(seed, n, m)?;
    let len = n + m - 1;
    let reversed: Vec<bool> = seed[..len].iter().rev().copied().collect();

    let block = m.max(1 << 14).min(n);
    let size = (2 * block + m).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);
    let zero = Complex::new(0.0, 0.0);
    let mut parity = vec![false; m];
    let mut a = vec![zero; size];
    let mut w = vec![zero; size];

    let mut j0 = 0;
    while j0 < n {
        let b = block.min(n - j0);
        let chunk = &input[j0..j0 + b];
        if chunk.iter().any(|&x| x) {
            // Contribution of x[j0..j0+b]: y_i += (chunk * R[base..base+b+m-1])[b-1+i].
            let base = n - j0 - b;
            a.fill(zero);
            w.fill(zero);
            for (t, &x) in chunk.iter().enumerate() {
                a[t].re = x as u8 as f64;
            }
            for (t, &r) in reversed[base..base + b + m - 1].iter().enumerate() {
                w[t].re = r as u8 as f64;
            }
            forward.process(&mut a);
            forward.process(&mut w);
            for (x, y) in a.iter_mut().zip(&w) {
                *x *= y;
            }
            inverse.process(&mut a);
            let scale = size as f64;
            for (i, p) in parity.iter_mut().enumerate() {
                let v = (a[b - 1 + i].re / scale).round() as u64;
                *p ^= v & 1 == 1;
            }
        }
        j0 += b;
    }
    Ok(parity)
}

/// Toeplitz product, choosing the cheaper evaluation order.
pub fn toeplitz_hash(seed: &[bool], input: &[bool], output_bits: usize) -> Result<Vec<bool>> {
    if (input.len() as u128) * (output_bits as u128) <= DIRECT_WORK_LIMIT {
        toeplitz_streaming(seed, input, output_bits)
    } else {
        toeplitz_fft(seed, input, output_bits)
    }
}

/// Hashes a whole batch, frames concatenated in order, to the length its
/// certified entropy supports. Seed bits beyond the required length are
/// ignored.
pub fn toeplitz_extract(
    batch: &FrameBatch,
    min_entropy_per_frame: f64,
    eps_sec: f64,
    seed: &[bool],
) -> Result<Vec<bool>> {
    let pixels = batch.pixels() as f64;
    if !(0.0..=pixels).contains(&min_entropy_per_frame) {
        return Err(Error::Parameter(format!(
            "entropy per frame {min_entropy_per_frame} outside [0, {pixels}]"
        )));
    }
    if !(eps_sec > 0.0 && eps_sec < 1.0) {
        return Err(Error::Parameter(format!("eps_sec must lie in (0, 1), got {eps_sec}")));
    }
    let m = output_length(batch.len() as f64 * min_entropy_per_frame, eps_sec);
    if m == 0 {
        return Ok(Vec::new());
    }
    let input: Vec<bool> = batch.bits().collect();
    toeplitz_hash(seed, &input, m)
}

/// Frequency (monobit) test p-value.
pub fn monobit_p_value(bits: &[bool]) -> f64 {
    let n = bits.len() as f64;
    let sum: i64 = bits.iter().map(|&b| if b { 1 } else { -1 }).sum();
    erfc((sum.unsigned_abs() as f64 / n.sqrt()) / std::f64::consts::SQRT_2)
}

/// Runs test p-value; zero when the ones fraction already fails the
/// frequency prerequisite.
pub fn runs_p_value(bits: &[bool]) -> f64 {
    let n = bits.len() as f64;
    if bits.len() < 2 {
        return 0.0;
    }
    let pi = bits.iter().filter(|&&b| b).count() as f64 / n;
    if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        return 0.0;
    }
    let runs = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
    let expected = 2.0 * n * pi * (1.0 - pi);
    erfc((runs as f64 - expected).abs() / (2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi)))
}
