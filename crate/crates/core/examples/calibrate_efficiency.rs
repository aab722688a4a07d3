//! Turns measured click probabilities into equivalent efficiencies and uses
//! the resulting curve for an entropy sweep.

use qrng_entropy::detector::{equivalent_efficiency, unbiased_mu, AcquisitionParams, CalibrationCurve, DetectorArrayModel};
use qrng_entropy::entropy::{sweep_mu, TruncationPolicy};

fn main() -> qrng_entropy::error::Result<()> {
    // Synthetic measurements from a detector whose efficiency sags with flux.
    let measured = [(0.2, 0.11), (0.5, 0.24), (1.0, 0.40), (2.0, 0.55), (4.0, 0.62)];
    let mut points = Vec::new();
    for &(mu, p1) in &measured {
        let eta = equivalent_efficiency(p1, mu)?;
        println!("mu_px = {mu:<4} P1 = {p1:<5} -> eta = {eta:.5}");
        points.push((mu, eta));
    }
    let curve = CalibrationCurve::new(points)?;
    print!("{}", curve.to_text());

    let model = DetectorArrayModel::uniform(6, 1.0, AcquisitionParams::default())?;
    let grid = [0.2, 0.7, 1.5, 3.0, 4.0];
    for row in sweep_mu(&grid, &model, &TruncationPolicy::default(), Some(&curve))? {
        println!(
            "mu_px = {:<5.3} eta = {:.4} H_inf = {:.4} H_min(X|N,S) = {:.4}",
            row.mu_px, row.eta, row.h_classical, row.h_conditional
        );
    }
    println!("unbiased point for eta = 0.8: mu_px = {:.6}", unbiased_mu(0.8)?);
    Ok(())
}
