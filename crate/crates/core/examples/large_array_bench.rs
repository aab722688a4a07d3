//! Times the conditional min-entropy of a 256-pixel array and reports how
//! the work scales with the array size.

use std::time::Instant;

use qrng_entropy::detector::{AcquisitionParams, DetectorArrayModel, SourceModel};
use qrng_entropy::entropy::{conditional_min_entropy, TruncationPolicy};

fn main() -> qrng_entropy::error::Result<()> {
    let policy = TruncationPolicy::new(1e-15, 1e-15, None)?;
    for m in [16, 64, 128, 256, 512] {
        let model = DetectorArrayModel::uniform(m, 0.5, AcquisitionParams::default())?;
        let source = SourceModel::poisson_per_pixel(0.1, m)?;
        let start = Instant::now();
        let r = conditional_min_entropy(&model, &source, &policy)?;
        println!(
            "M = {m:>3}: H_min = {:>10.6} bits (H_inf = {:>10.6}), n in {:?}, r in {:?}, {:>9} terms, {:.3} s",
            r.h_conditional,
            r.h_classical,
            r.n_range,
            r.r_range,
            r.terms,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
