//! Monte-Carlo model of the gated array.
//!
//! Each frame: the adversary switches pixel `i` on with probability
//! `eta_i`, the source emits `n` photons, each photon lands on a uniformly
//! chosen pixel, and a pixel clicks when it is on and was hit.
//!
//! Every frame draws from its own ChaCha8 stream, keyed by the seed and
//! stream id and selected by the frame index, so batches are reproducible
//! bit for bit however the work is split across threads.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::bits::{OutcomeString, PixelBits, StatusConfig};
use crate::conditional::{max_outcome_prob, NumericMode};
use crate::detector::{DetectorArrayModel, SourceModel};
use crate::error::{Error, Result};

/// Largest array for which the guessing game precomputes Eve's strategy.
pub const GUESS_MAX_PIXELS: usize = 12;

const TRIAL_CHUNK: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct SimSeed {
    pub seed: u64,
    pub stream_id: u64,
}

impl SimSeed {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        SimSeed { seed, stream_id }
    }

    /// Generator for the frame (or trial) with the given index.
    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.stream_id.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        rng
    }
}

/// What the adversary knows about one frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SideInfo {
    pub photons: u32,
    pub status: StatusConfig,
}

/// One simulated frame together with its hidden variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameDraw {
    pub outcome: OutcomeString,
    pub photons: u64,
    pub status: StatusConfig,
}

/// Frames of equal length, optionally with per-frame side information.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameBatch {
    pixels: usize,
    frames: Vec<OutcomeString>,
    side_info: Option<Vec<SideInfo>>,
}

impl FrameBatch {
    pub fn new(
        pixels: usize,
        frames: Vec<OutcomeString>,
        side_info: Option<Vec<SideInfo>>,
    ) -> Result<Self> {
        for f in &frames {
            f.check_len(pixels)?;
        }
        if let Some(side) = &side_info {
            if side.len() != frames.len() {
                return Err(Error::Parameter(format!(
                    "{} side-info records for {} frames",
                    side.len(),
                    frames.len()
                )));
            }
            for (i, (f, s)) in frames.iter().zip(side).enumerate() {
                s.status.check_len(pixels)?;
                let clash = f
                    .words()
                    .iter()
                    .zip(s.status.words())
                    .any(|(x, s)| x & !s != 0);
                if clash {
                    return Err(Error::Parameter(format!(
                        "frame {i} clicks on a pixel its status marks inactive"
                    )));
                }
            }
        }
        Ok(FrameBatch {
            pixels,
            frames,
            side_info,
        })
    }

    pub fn pixels(&self) -> usize {
        self.pixels
    }

    pub fn frames(&self) -> &[OutcomeString] {
        &self.frames
    }

    pub fn side_info(&self) -> Option<&[SideInfo]> {
        self.side_info.as_deref()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// All frame bits in order, pixel 0 of frame 0 first.
    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        self.frames.iter().flat_map(|f| f.iter())
    }

    /// Number of bits yielded by [`FrameBatch::bits`].
    pub fn bit_len(&self) -> usize {
        self.frames.len() * self.pixels
    }
}

/// Photon-number sampler for one source.
enum PhotonLaw {
    Fixed(u64),
    Poisson(Poisson<f64>),
}

impl PhotonLaw {
    fn new(source: &SourceModel) -> Result<Self> {
        Ok(match *source {
            SourceModel::Fixed { n } => PhotonLaw::Fixed(n),
            SourceModel::Poisson { mu_total } if mu_total == 0.0 => PhotonLaw::Fixed(0),
            SourceModel::Poisson { mu_total } => PhotonLaw::Poisson(
                Poisson::new(mu_total)
                    .map_err(|e| Error::Parameter(format!("Poisson mean {mu_total}: {e}")))?,
            ),
        })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        match self {
            PhotonLaw::Fixed(n) => *n,
            PhotonLaw::Poisson(p) => p.sample(rng) as u64,
        }
    }
}

fn draw_with<R: Rng>(model: &DetectorArrayModel, law: &PhotonLaw, rng: &mut R) -> FrameDraw {
    let m = model.pixels();
    let mut status = PixelBits::zeros(m);
    for i in 0..m {
        status.set(i, rng.random_bool(model.eta(i)));
    }
    let photons = law.sample(rng);
    let mut outcome = PixelBits::zeros(m);
    for _ in 0..photons {
        let i = rng.random_range(0..m);
        if status.get(i) {
            outcome.set(i, true);
        }
    }
    FrameDraw {
        outcome,
        photons,
        status,
    }
}

/// Draws a single frame from `rng`.
pub fn draw_frame<R: Rng>(
    model: &DetectorArrayModel,
    source: &SourceModel,
    rng: &mut R,
) -> Result<FrameDraw> {
    Ok(draw_with(model, &PhotonLaw::new(source)?, rng))
}

pub fn simulate_frames(
    model: &DetectorArrayModel,
    source: &SourceModel,
    count: usize,
    seed: SimSeed,
    record_side_info: bool,
) -> Result<FrameBatch> {
    if count == 0 {
        return Err(Error::Parameter("frame count must be at least 1".into()));
    }
    let law = PhotonLaw::new(source)?;
    let draws: Vec<FrameDraw> = (0..count as u64)
        .into_par_iter()
        .map(|i| draw_with(model, &law, &mut seed.rng(i)))
        .collect();
    let mut frames = Vec::with_capacity(count);
    let mut side = record_side_info.then(|| Vec::with_capacity(count));
    for d in draws {
        if let Some(side) = side.as_mut() {
            let photons = u32::try_from(d.photons).map_err(|_| {
                Error::Parameter(format!("photon number {} does not fit the side-info record", d.photons))
            })?;
            side.push(SideInfo {
                photons,
                status: d.status,
            });
        }
        frames.push(d.outcome);
    }
    FrameBatch::new(model.pixels(), frames, side)
}

/// Per-pixel click frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct BitStats {
    pub p1: Vec<f64>,
    /// Binomial standard error of each frequency.
    pub std_err: Vec<f64>,
    /// Chi-square p-value for "all pixels share one click probability".
    pub uniformity_p_value: f64,
}

pub fn empirical_bit_prob(batch: &FrameBatch) -> Result<BitStats> {
    if batch.is_empty() {
        return Err(Error::Parameter("batch is empty".into()));
    }
    let m = batch.pixels();
    let frames = batch.len() as f64;
    let mut clicks = vec![0u64; m];
    for f in batch.frames() {
        for (i, c) in clicks.iter_mut().enumerate() {
            *c += f.get(i) as u64;
        }
    }
    let p1: Vec<f64> = clicks.iter().map(|&c| c as f64 / frames).collect();
    let std_err = p1.iter().map(|p| (p * (1.0 - p) / frames).sqrt()).collect();

    // 2 x M contingency table of clicks and misses.
    let total: u64 = clicks.iter().sum();
    let pooled = total as f64 / (frames * m as f64);
    let uniformity_p_value = if m < 2 || pooled == 0.0 || pooled == 1.0 {
        1.0
    } else {
        let (e1, e0) = (frames * pooled, frames * (1.0 - pooled));
        let stat: f64 = clicks
            .iter()
            .map(|&c| {
                let (o1, o0) = (c as f64, frames - c as f64);
                (o1 - e1).powi(2) / e1 + (o0 - e0).powi(2) / e0
            })
            .sum();
        let chi = ChiSquared::new((m - 1) as f64).expect("positive degrees of freedom");
        1.0 - chi.cdf(stat)
    };
    Ok(BitStats {
        p1,
        std_err,
        uniformity_p_value,
    })
}

/// Eve's guess for a given photon number and activation pattern: the best
/// weight `k*` placed on the last `k*` active pixels, which is the
/// lexicographically first string of that weight supported on `s`.
pub fn eve_guess(status: &StatusConfig, k_star: u64) -> OutcomeString {
    let mut guess = PixelBits::zeros(status.len());
    let mut left = k_star;
    for i in (0..status.len()).rev() {
        if left == 0 {
            break;
        }
        if status.get(i) {
            guess.set(i, true);
            left -= 1;
        }
    }
    guess
}

/// Frequency with which Eve, knowing `n` and `s`, guesses the whole frame,
/// and its standard error.
pub fn empirical_guess_rate(
    model: &DetectorArrayModel,
    source: &SourceModel,
    trials: u64,
    seed: SimSeed,
) -> Result<(f64, f64)> {
    let m = model.pixels();
    if m > GUESS_MAX_PIXELS {
        return Err(Error::Resource(format!(
            "guessing game limited to M <= {GUESS_MAX_PIXELS}, got {m}"
        )));
    }
    if trials == 0 {
        return Err(Error::Parameter("trial count must be at least 1".into()));
    }
    let law = PhotonLaw::new(source)?;
    let chunks: Vec<u64> = (0..trials.div_ceil(TRIAL_CHUNK)).collect();
    let hits: u64 = chunks
        .into_par_iter()
        .map(|c| -> Result<u64> {
            let mut best_k: HashMap<(u64, u64), u64> = HashMap::new();
            let mut hits = 0;
            for t in c * TRIAL_CHUNK..((c + 1) * TRIAL_CHUNK).min(trials) {
                let d = draw_with(model, &law, &mut seed.rng(t));
                let l = d.status.weight() as u64;
                let k = match best_k.get(&(d.photons, l)) {
                    Some(&k) => k,
                    None => {
                        let (k, _) = max_outcome_prob(d.photons, l, m, NumericMode::Log)?;
                        best_k.insert((d.photons, l), k);
                        k
                    }
                };
                hits += (eve_guess(&d.status, k) == d.outcome) as u64;
            }
            Ok(hits)
        })
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum();
    let f = hits as f64 / trials as f64;
    Ok((f, (f * (1.0 - f) / trials as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::AcquisitionParams;

    fn uniform(m: usize, eta: f64) -> DetectorArrayModel {
        DetectorArrayModel::uniform(m, eta, AcquisitionParams::default()).unwrap()
    }

    #[test]
    fn dark_or_off_arrays_stay_silent() {
        let seed = SimSeed::new(1, 0);
        let b = simulate_frames(&uniform(5, 0.0), &SourceModel::poisson(50.0).unwrap(), 500, seed, false)
            .unwrap();
        assert!(b.frames().iter().all(|f| f.weight() == 0));
        let b = simulate_frames(&uniform(5, 0.9), &SourceModel::fixed(0), 500, seed, true).unwrap();
        assert!(b.frames().iter().all(|f| f.weight() == 0));
        assert_eq!(b.side_info().unwrap().len(), 500);
        assert!(simulate_frames(&uniform(5, 0.9), &SourceModel::fixed(0), 0, seed, true).is_err());
    }

    #[test]
    fn same_seed_same_batch() {
        let model = uniform(7, 0.6);
        let src = SourceModel::poisson_per_pixel(1.3, 7).unwrap();
        let a = simulate_frames(&model, &src, 2000, SimSeed::new(9, 3), true).unwrap();
        let b = simulate_frames(&model, &src, 2000, SimSeed::new(9, 3), true).unwrap();
        let c = simulate_frames(&model, &src, 2000, SimSeed::new(9, 4), true).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn side_info_is_compatible() {
        let model = uniform(9, 0.4);
        let src = SourceModel::poisson_per_pixel(2.0, 9).unwrap();
        let b = simulate_frames(&model, &src, 3000, SimSeed::new(5, 0), true).unwrap();
        for (f, s) in b.frames().iter().zip(b.side_info().unwrap()) {
            for i in 0..9 {
                assert!(!f.get(i) || s.status.get(i));
            }
            assert!(f.weight() as u32 <= s.photons);
        }
    }

    #[test]
    fn batch_rejects_incompatible_side_info() {
        let f = PixelBits::from_digits(&[1, 0]);
        let s = SideInfo {
            photons: 1,
            status: PixelBits::from_digits(&[0, 1]),
        };
        assert!(FrameBatch::new(2, vec![f.clone()], Some(vec![s])).is_err());
        assert!(FrameBatch::new(3, vec![f], None).is_err());
    }

    #[test]
    fn bit_stats_of_silent_batch() {
        let b = FrameBatch::new(3, vec![PixelBits::zeros(3); 10], None).unwrap();
        let s = empirical_bit_prob(&b).unwrap();
        assert_eq!(s.p1, vec![0.0; 3]);
        assert_eq!(s.std_err, vec![0.0; 3]);
        assert_eq!(s.uniformity_p_value, 1.0);
        let empty = FrameBatch::new(3, vec![], None).unwrap();
        assert!(empirical_bit_prob(&empty).is_err());
    }

    #[test]
    fn eve_guess_uses_last_active_pixels() {
        let s = PixelBits::from_digits(&[1, 0, 1, 1, 0, 1]);
        assert_eq!(eve_guess(&s, 2), PixelBits::from_digits(&[0, 0, 0, 1, 0, 1]));
        assert_eq!(eve_guess(&s, 0), PixelBits::zeros(6));
    }

    #[test]
    fn guessing_in_the_dark_always_wins() {
        let (f, se) = empirical_guess_rate(
            &uniform(4, 0.5),
            &SourceModel::poisson(1e-12).unwrap(),
            10_000,
            SimSeed::new(2, 0),
        )
        .unwrap();
        assert_eq!((f, se), (1.0, 0.0));
        assert!(empirical_guess_rate(&uniform(13, 0.5), &SourceModel::fixed(1), 10, SimSeed::default()).is_err());
    }
}
