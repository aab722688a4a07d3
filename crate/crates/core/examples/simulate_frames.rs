//! Simulates a detector run, writes frame and side-information files, reads
//! them back and reports per-pixel click statistics.

use qrng_entropy::detector::{bit_probabilities, AcquisitionParams, DetectorArrayModel, SourceModel};
use qrng_entropy::frames::{read_frames_with_side_info, write_frames, write_side_info};
use qrng_entropy::simulator::{empirical_bit_prob, simulate_frames, SimSeed};

fn main() -> qrng_entropy::error::Result<()> {
    let (m, mu, eta) = (8, 1.0, 0.5);
    let model = DetectorArrayModel::uniform(m, eta, AcquisitionParams::default())?;
    let source = SourceModel::poisson_per_pixel(mu, m)?;
    let batch = simulate_frames(&model, &source, 200_000, SimSeed::new(2024, 0), true)?;

    let dir = std::env::temp_dir().join("qrng-entropy-example");
    std::fs::create_dir_all(&dir)?;
    let (fp, sp) = (dir.join("frames.bin"), dir.join("side.bin"));
    write_frames(&batch, &fp)?;
    write_side_info(&batch, &sp)?;
    let back = read_frames_with_side_info(&fp, &sp)?;
    assert_eq!(back, batch);
    println!("wrote and re-read {} frames under {}", back.len(), dir.display());

    let stats = empirical_bit_prob(&back)?;
    let (_, p1) = bit_probabilities(mu, eta)?;
    for (i, (f, se)) in stats.p1.iter().zip(&stats.std_err).enumerate() {
        println!("pixel {i}: P1 = {f:.5} +/- {se:.5} (model {p1:.5})");
    }
    println!("uniformity p-value: {:.4}", stats.uniformity_p_value);
    let first = &back.side_info().expect("recorded")[0];
    println!("frame 0: n = {}, s = {:?}, x = {:?}", first.photons, first.status, back.frames()[0]);
    Ok(())
}
