//! Entropy as a function of the illumination level, and the operating point
//! that maximises the secure rate.

use std::io::{self, Write};

use super::{conditional_min_entropy, EntropyReport, TruncationPolicy};
use crate::conditional::fmt_prob;
use crate::detector::{CalibrationCurve, DetectorArrayModel, SourceModel};
use crate::error::{Error, Result};

pub const SWEEP_CSV_HEADER: &str =
    "mu_px,eta,h_classical,h_conditional,p_guess,truncation_bound,secure_rate_bps";

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub mu_px: f64,
    pub eta: f64,
    pub h_classical: f64,
    pub h_conditional: f64,
    pub p_guess: f64,
    pub truncation_bound: f64,
    pub secure_rate: f64,
}

impl From<&EntropyReport> for SweepRow {
    fn from(r: &EntropyReport) -> Self {
        SweepRow {
            mu_px: r.mu_px,
            eta: r.eta.unwrap_or(f64::NAN),
            h_classical: r.h_classical,
            h_conditional: r.h_conditional,
            p_guess: r.p_guess,
            truncation_bound: r.truncation_bound,
            secure_rate: r.secure_rate,
        }
    }
}

fn evaluate(
    mu_px: f64,
    model: &DetectorArrayModel,
    policy: &TruncationPolicy,
    calibration: Option<&CalibrationCurve>,
) -> Result<EntropyReport> {
    let model = match calibration {
        Some(curve) => model.with_eta(curve.eta_at(mu_px)?)?,
        None => model.clone(),
    };
    let source = SourceModel::poisson_per_pixel(mu_px, model.pixels())?;
    conditional_min_entropy(&model, &source, policy)
}

/// One report per grid point, in grid order. With a calibration curve the
/// efficiency of each row is read off the curve; otherwise the model's own
/// uniform efficiency is used throughout.
pub fn sweep_mu(
    grid: &[f64],
    model: &DetectorArrayModel,
    policy: &TruncationPolicy,
    calibration: Option<&CalibrationCurve>,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::Parameter("mu grid is empty".into()));
    }
    if let Some(bad) = grid.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
        return Err(Error::Parameter(format!("mu grid value {bad} is not a finite non-negative number")));
    }
    if let Some(curve) = calibration {
        let (lo, hi) = curve.range();
        if let Some(out) = grid.iter().find(|&&m| m < lo || m > hi) {
            return Err(Error::Range(format!(
                "calibration curve covers [{lo}, {hi}] but the grid asks for {out}"
            )));
        }
    }
    grid.iter()
        .map(|&mu| evaluate(mu, model, policy, calibration).map(|r| SweepRow::from(&r)))
        .collect()
}

/// Writes the sweep table. `comments` become leading `# ` lines.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], comments: &[String], mut out: W) -> io::Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        let cells = [
            r.mu_px,
            r.eta,
            r.h_classical,
            r.h_conditional,
            r.p_guess,
            r.truncation_bound,
            r.secure_rate,
        ];
        let line: Vec<String> = cells.iter().map(|&v| fmt_prob(v)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

fn grid_between(a: f64, b: f64, step: f64) -> Vec<f64> {
    let count = ((b - a) / step).floor() as u64;
    let mut pts: Vec<f64> = (0..=count).map(|i| a + i as f64 * step).collect();
    if pts.last().is_some_and(|&l| l < b) {
        pts.push(b);
    }
    pts
}

fn best_of(
    pts: &[f64],
    model: &DetectorArrayModel,
    policy: &TruncationPolicy,
) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for &mu in pts {
        let rate = evaluate(mu, model, policy, None)?.secure_rate;
        if best.is_none_or(|(_, r)| rate > r) {
            best = Some((mu, rate));
        }
    }
    best.ok_or_else(|| Error::Parameter("empty search grid".into()))
}

/// Mean photons per pixel maximising the secure rate over `[a, b]`: a scan
/// at `step`, then a scan at `step / 10` around the winning cell. Ties go to
/// the smaller `mu`.
pub fn optimize_mu(
    model: &DetectorArrayModel,
    policy: &TruncationPolicy,
    range: (f64, f64),
    step: f64,
) -> Result<(f64, f64)> {
    let (a, b) = range;
    if !(a.is_finite() && b.is_finite() && a >= 0.0 && a <= b) {
        return Err(Error::Parameter(format!("empty or invalid search range [{a}, {b}]")));
    }
    if a == b {
        return best_of(&[a], model, policy);
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Parameter(format!("resolution must be positive, got {step}")));
    }
    let (coarse, _) = best_of(&grid_between(a, b, step), model, policy)?;
    let lo = (coarse - step).max(a);
    let hi = (coarse + step).min(b);
    best_of(&grid_between(lo, hi, step / 10.0), model, policy)
}
