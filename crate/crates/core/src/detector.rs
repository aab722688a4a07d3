//! Source, pixel-array and acquisition model, and the equivalent-efficiency
//! calibration that ties measured click probabilities to the gating model.
//!
//! Illumination is parameterised per pixel: `mu_px` is the mean photon
//! number reaching one pixel in one frame. With uniform routing over `M`
//! pixels the source emits Poisson(`M * mu_px`) photons and each pixel sees
//! an independent Poisson(`mu_px`) stream, so the no-photon probability at a
//! pixel is `exp(-mu_px)`.

use std::fmt::Write as _;
use std::path::Path;

use crate::bits::StatusConfig;
use crate::error::{Error, ParseError, Result};

/// Frame timing of the camera.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcquisitionParams {
    integration_time: f64,
    frame_rate: f64,
}

impl AcquisitionParams {
    pub fn new(integration_time: f64, frame_rate: f64) -> Result<Self> {
        if !(integration_time > 0.0 && integration_time.is_finite()) {
            return Err(Error::Parameter(format!(
                "integration time must be positive, got {integration_time}"
            )));
        }
        if !(frame_rate > 0.0 && frame_rate.is_finite()) {
            return Err(Error::Parameter(format!(
                "frame rate must be positive, got {frame_rate}"
            )));
        }
        if 1.0 / frame_rate < integration_time {
            return Err(Error::Parameter(format!(
                "frame period {} s is shorter than the integration time {integration_time} s",
                1.0 / frame_rate
            )));
        }
        Ok(AcquisitionParams {
            integration_time,
            frame_rate,
        })
    }

    /// Integration time in seconds.
    pub fn integration_time(&self) -> f64 {
        self.integration_time
    }

    /// Frames per second.
    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn frame_period(&self) -> f64 {
        1.0 / self.frame_rate
    }
}

impl Default for AcquisitionParams {
    /// 200 ns integration at 49 kHz.
    fn default() -> Self {
        AcquisitionParams {
            integration_time: 200e-9,
            frame_rate: 49_000.0,
        }
    }
}

/// Photon-number law of the light source.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SourceModel {
    /// Poisson with the given mean over the whole illuminated array.
    Poisson { mu_total: f64 },
    /// Exactly `n` photons every frame.
    Fixed { n: u64 },
}

impl SourceModel {
    pub fn poisson(mu_total: f64) -> Result<Self> {
        if !(mu_total >= 0.0 && mu_total.is_finite()) {
            return Err(Error::Parameter(format!(
                "mean photon number must be finite and nonnegative, got {mu_total}"
            )));
        }
        Ok(SourceModel::Poisson { mu_total })
    }

    /// Poisson source tuned so each of `pixels` pixels sees `mu_px` on average.
    pub fn poisson_per_pixel(mu_px: f64, pixels: usize) -> Result<Self> {
        Self::poisson(mu_px * pixels as f64)
    }

    pub fn fixed(n: u64) -> Self {
        SourceModel::Fixed { n }
    }

    /// Natural log of `P_N(n)`.
    pub fn ln_pmf(&self, n: u64) -> f64 {
        match *self {
            SourceModel::Poisson { mu_total } => {
                if mu_total == 0.0 {
                    return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
                }
                n as f64 * mu_total.ln() - mu_total - ln_factorial(n)
            }
            SourceModel::Fixed { n: fixed } => {
                if n == fixed {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn pmf(&self, n: u64) -> f64 {
        self.ln_pmf(n).exp()
    }

    /// Mean photons per pixel for an array of `pixels` pixels.
    pub fn mean_per_pixel(&self, pixels: usize) -> f64 {
        match *self {
            SourceModel::Poisson { mu_total } => mu_total / pixels as f64,
            SourceModel::Fixed { n } => n as f64 / pixels as f64,
        }
    }
}

pub(crate) fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        statrs::function::gamma::ln_gamma(n as f64 + 1.0)
    }
}

/// Adversary activation probability of each pixel.
#[derive(Clone, Debug, PartialEq)]
pub enum Efficiency {
    Uniform(f64),
    PerPixel(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorArrayModel {
    pixels: usize,
    efficiency: Efficiency,
    acquisition: AcquisitionParams,
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Parameter(format!("{name} must lie in [0, 1], got {v}")));
    }
    Ok(())
}

impl DetectorArrayModel {
    pub fn uniform(pixels: usize, eta: f64, acquisition: AcquisitionParams) -> Result<Self> {
        if pixels == 0 {
            return Err(Error::Parameter("pixel count must be at least 1".into()));
        }
        check_unit("efficiency", eta)?;
        Ok(DetectorArrayModel {
            pixels,
            efficiency: Efficiency::Uniform(eta),
            acquisition,
        })
    }

    pub fn per_pixel(etas: Vec<f64>, acquisition: AcquisitionParams) -> Result<Self> {
        if etas.is_empty() {
            return Err(Error::Parameter("pixel count must be at least 1".into()));
        }
        for &e in &etas {
            check_unit("efficiency", e)?;
        }
        Ok(DetectorArrayModel {
            pixels: etas.len(),
            efficiency: Efficiency::PerPixel(etas),
            acquisition,
        })
    }

    pub fn pixels(&self) -> usize {
        self.pixels
    }

    pub fn efficiency(&self) -> &Efficiency {
        &self.efficiency
    }

    pub fn acquisition(&self) -> AcquisitionParams {
        self.acquisition
    }

    pub fn eta(&self, pixel: usize) -> f64 {
        match &self.efficiency {
            Efficiency::Uniform(e) => *e,
            Efficiency::PerPixel(v) => v[pixel],
        }
    }

    /// The shared efficiency, if every pixel has the same one.
    pub fn uniform_eta(&self) -> Option<f64> {
        match &self.efficiency {
            Efficiency::Uniform(e) => Some(*e),
            Efficiency::PerPixel(v) => {
                let first = v[0];
                v.iter().all(|&e| e == first).then_some(first)
            }
        }
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::uniform(self.pixels, eta, self.acquisition)
    }
}

/// Probability that no photon reaches a pixel whose mean is `mu_px`.
pub fn no_photon_prob(mu_px: f64) -> Result<f64> {
    if !(mu_px >= 0.0) {
        return Err(Error::Parameter(format!(
            "mean photon number must be nonnegative, got {mu_px}"
        )));
    }
    Ok((-mu_px).exp())
}

/// `(P0, P1)` for one pixel: `P1 = eta (1 - exp(-mu_px))`.
pub fn bit_probabilities(mu_px: f64, eta: f64) -> Result<(f64, f64)> {
    check_unit("efficiency", eta)?;
    no_photon_prob(mu_px)?;
    // 1 - exp(-mu), without cancellation at small mu.
    let hit = -(-mu_px).exp_m1();
    let p1 = eta * hit;
    Ok((1.0 - p1, p1))
}

/// Inverts [`bit_probabilities`] for the efficiency.
pub fn equivalent_efficiency(p1_measured: f64, mu_px: f64) -> Result<f64> {
    if !(mu_px > 0.0) {
        return Err(Error::Parameter(format!(
            "calibration needs a positive mean photon number, got {mu_px}"
        )));
    }
    check_unit("measured P1", p1_measured)?;
    let limit = -(-mu_px).exp_m1();
    if p1_measured > limit {
        return Err(Error::InfeasibleCalibration {
            p1: p1_measured,
            mu: mu_px,
            limit,
        });
    }
    Ok((p1_measured / limit).min(1.0))
}

/// Mean photons per pixel at which a pixel of efficiency `eta` clicks with
/// probability exactly one half.
pub fn unbiased_mu(eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Parameter(format!(
            "efficiency must lie in (0, 1], got {eta}"
        )));
    }
    if eta <= 0.5 {
        return Err(Error::Infeasible(format!(
            "efficiency {eta} <= 1/2 never reaches P1 = 1/2"
        )));
    }
    Ok(-(-1.0 / (2.0 * eta)).ln_1p())
}

/// Product-Bernoulli probability that the adversary picks `s`.
pub fn status_config_prob(s: &StatusConfig, model: &DetectorArrayModel) -> Result<f64> {
    s.check_len(model.pixels())?;
    Ok((0..model.pixels())
        .map(|i| {
            let e = model.eta(i);
            if s.get(i) {
                e
            } else {
                1.0 - e
            }
        })
        .product())
}

/// `-M log2 max(P0, P1)` for `M` identically distributed pixels.
pub fn classical_min_entropy(p0: f64, p1: f64, pixels: usize) -> f64 {
    let h = -(pixels as f64) * p0.max(p1).log2();
    // -0.0 for deterministic output reads badly.
    h.max(0.0)
}

/// Secure or raw bit rate for `entropy_per_frame` bits per frame.
pub fn generation_rate(entropy_per_frame: f64, acq: &AcquisitionParams) -> f64 {
    entropy_per_frame * acq.frame_rate()
}

/// Tabulated `(mu_px, eta)` points with linear interpolation in between.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationCurve {
    points: Vec<(f64, f64)>,
}

impl CalibrationCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Parameter("calibration curve has no points".into()));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Parameter(format!(
                    "calibration mu values must increase strictly ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        for &(mu, eta) in &points {
            if !(mu >= 0.0) {
                return Err(Error::Parameter(format!("negative mu {mu} in calibration")));
            }
            check_unit("efficiency", eta)?;
        }
        Ok(CalibrationCurve { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn range(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }

    pub fn eta_at(&self, mu_px: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if !(mu_px >= lo && mu_px <= hi) {
            return Err(Error::Range(format!(
                "mu = {mu_px} outside calibration range [{lo}, {hi}]"
            )));
        }
        let idx = self.points.partition_point(|&(m, _)| m < mu_px);
        if idx < self.points.len() && self.points[idx].0 == mu_px {
            return Ok(self.points[idx].1);
        }
        let (m0, e0) = self.points[idx - 1];
        let (m1, e1) = self.points[idx];
        Ok(e0 + (e1 - e0) * (mu_px - m0) / (m1 - m0))
    }

    /// Parses the `mu,eta` text table.
    pub fn parse(text: &str) -> Result<Self> {
        let points = parse_pair_table(text, "mu,eta")?;
        Self::new(points)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("mu,eta\n");
        for &(mu, eta) in &self.points {
            let _ = writeln!(out, "{mu:.16e},{eta:.16e}");
        }
        out
    }
}

/// Reads a two-column numeric table with a required header. Lines starting
/// with `#` and blank lines are skipped.
pub fn parse_pair_table(text: &str, header: &str) -> Result<Vec<(f64, f64)>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some((_, l)) if l.replace(' ', "") == header => {}
        Some((line, l)) => {
            return Err(ParseError::Table {
                line,
                reason: format!("expected header {header:?}, found {l:?}"),
            }
            .into())
        }
        None => {
            return Err(ParseError::Table {
                line: 1,
                reason: format!("missing header {header:?}"),
            }
            .into())
        }
    }
    let mut out = Vec::new();
    for (line, l) in lines {
        let mut parts = l.split(',');
        let mut field = |what: &str| -> Result<f64> {
            let raw = parts.next().ok_or_else(|| ParseError::Table {
                line,
                reason: format!("missing {what}"),
            })?;
            raw.trim().parse::<f64>().map_err(|e| {
                ParseError::Table {
                    line,
                    reason: format!("bad {what} {raw:?}: {e}"),
                }
                .into()
            })
        };
        let a = field("first column")?;
        let b = field("second column")?;
        if parts.next().is_some() {
            return Err(ParseError::Table {
                line,
                reason: "more than two columns".into(),
            }
            .into());
        }
        out.push((a, b));
    }
    Ok(out)
}
