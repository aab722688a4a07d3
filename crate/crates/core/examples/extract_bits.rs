//! Certifies the entropy of a simulated batch, hashes it with a Toeplitz
//! matrix down to the certified length and runs two NIST-style checks on
//! the output.

use qrng_entropy::detector::{AcquisitionParams, DetectorArrayModel, SourceModel};
use qrng_entropy::entropy::{conditional_min_entropy, TruncationPolicy};
use qrng_entropy::extractor::{monobit_p_value, output_length, runs_p_value, toeplitz_extract, DEFAULT_EPS_SEC};
use qrng_entropy::simulator::{simulate_frames, SimSeed};
use rand::{Rng, SeedableRng};

fn main() -> qrng_entropy::error::Result<()> {
    let (m, mu, eta) = (16, 1.0, 0.7);
    let model = DetectorArrayModel::uniform(m, eta, AcquisitionParams::default())?;
    let source = SourceModel::poisson_per_pixel(mu, m)?;
    let h = conditional_min_entropy(&model, &source, &TruncationPolicy::default())?.h_conditional;
    let batch = simulate_frames(&model, &source, 20_000, SimSeed::new(1, 0), false)?;
    let out_len = output_length(batch.len() as f64 * h, DEFAULT_EPS_SEC);

    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(0xC0FFEE);
    let seed: Vec<bool> = (0..batch.bit_len() + out_len - 1).map(|_| rng.random_bool(0.5)).collect();
    let bits = toeplitz_extract(&batch, h, DEFAULT_EPS_SEC, &seed)?;

    println!("certified {h:.4} bits per {m}-bit frame");
    println!("{} raw bits -> {} extracted bits", batch.bit_len(), bits.len());
    println!("monobit p = {:.4}, runs p = {:.4}", monobit_p_value(&bits), runs_p_value(&bits));
    let head: String = bits.iter().take(64).map(|&b| if b { '1' } else { '0' }).collect();
    println!("first 64 bits: {head}");
    Ok(())
}
