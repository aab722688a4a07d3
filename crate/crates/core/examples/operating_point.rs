//! Finds the illumination level that maximises the certified bit rate and
//! contrasts it with the classical rate at the unbiased point.

use qrng_entropy::detector::{unbiased_mu, AcquisitionParams, DetectorArrayModel, SourceModel};
use qrng_entropy::entropy::{classical_model_report, optimize_mu, TruncationPolicy};

fn main() -> qrng_entropy::error::Result<()> {
    let acq = AcquisitionParams::new(200e-9, 49_000.0)?;
    let policy = TruncationPolicy::default();
    for (m, eta) in [(4, 1.0), (9, 0.5), (16, 0.7)] {
        let model = DetectorArrayModel::uniform(m, eta, acq)?;
        let (mu_star, rate) = optimize_mu(&model, &policy, (0.01, 10.0), 0.05)?;
        print!("M = {m:>2}, eta = {eta}: best mu_px = {mu_star:.3}, secure rate = {:.4} Mbit/s", rate / 1e6);
        if let Ok(mu0) = unbiased_mu(eta) {
            let classical = classical_model_report(&model, &SourceModel::poisson_per_pixel(mu0, m)?)?;
            print!("; classical at mu_px = {mu0:.3}: {:.4} Mbit/s", classical.secure_rate / 1e6);
        }
        println!();
    }
    Ok(())
}
