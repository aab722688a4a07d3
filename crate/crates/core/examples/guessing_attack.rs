//! Plays the adversary: knowing the photon number and which pixels are
//! active, guess the whole frame. Compares the hit rate with the predicted
//! guessing probability.

use qrng_entropy::detector::{AcquisitionParams, DetectorArrayModel, SourceModel};
use qrng_entropy::entropy::{conditional_min_entropy, TruncationPolicy};
use qrng_entropy::simulator::{empirical_guess_rate, SimSeed};

fn main() -> qrng_entropy::error::Result<()> {
    for (i, (m, mu, eta)) in [(4, 0.5, 0.7), (3, 2.0, 0.9), (6, 3.0, 0.6)].into_iter().enumerate() {
        let model = DetectorArrayModel::uniform(m, eta, AcquisitionParams::default())?;
        let source = SourceModel::poisson_per_pixel(mu, m)?;
        let report = conditional_min_entropy(&model, &source, &TruncationPolicy::default())?;
        let (freq, se) = empirical_guess_rate(&model, &source, 1_000_000, SimSeed::new(7, i as u64))?;
        println!(
            "M = {m}, mu_px = {mu}, eta = {eta}: predicted {:.5}, observed {freq:.5} +/- {se:.5} ({:+.2} se), H_min = {:.4} bits",
            report.p_guess,
            (freq - report.p_guess) / se,
            report.h_conditional
        );
    }
    Ok(())
}
