//! Acoustic augmentations used by the consistency loss.
//!
//! Waveform-domain: speed perturbation (resampling), pitch shift
//! (resampling plus overlap-add time stretch) and additive white Gaussian
//! noise. Feature-domain: SpecAugment-style time and frequency masking.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dsp::{spectrogram, FrontendConfig, Spectrogram, Waveform};
use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum AugmentationPolicy {
    None,
    Speed {
        factor: f64,
    },
    Pitch {
        semitones: i32,
    },
    Awgn {
        snr_db: f64,
    },
    #[serde(rename = "specaugment")]
    SpecAugment(SpecAugmentParams),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecAugmentParams {
    /// Maximum width of each time mask, in frames.
    pub time_width: usize,
    /// Maximum width of each frequency mask, in bins.
    pub freq_width: usize,
    pub time_masks: usize,
    pub freq_masks: usize,
}

impl Default for SpecAugmentParams {
    fn default() -> Self {
        Self {
            time_width: 40,
            freq_width: 27,
            time_masks: 2,
            freq_masks: 2,
        }
    }
}

impl AugmentationPolicy {
    pub fn speed() -> Self {
        Self::Speed { factor: 1.5 }
    }

    pub fn pitch() -> Self {
        Self::Pitch { semitones: 2 }
    }

    pub fn awgn() -> Self {
        Self::Awgn { snr_db: 5.0 }
    }

    pub fn spec_augment() -> Self {
        Self::SpecAugment(SpecAugmentParams::default())
    }

    /// Config name: `none`, `speed`, `pitch`, `awgn` or `specaugment`.
    pub fn name(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Speed { .. } => "speed",
            Self::Pitch { .. } => "pitch",
            Self::Awgn { .. } => "awgn",
            Self::SpecAugment(_) => "specaugment",
        }
    }

    /// Short label used in variant names (`cr-s`, `cr-p`, `cr-a`, `cr-sa`).
    pub fn short(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Speed { .. } => "s",
            Self::Pitch { .. } => "p",
            Self::Awgn { .. } => "a",
            Self::SpecAugment(_) => "sa",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Speed { factor } if factor.is_nan() || factor <= 0.0 => Err(Error::InvalidArgument(format!(
                "speed factor {factor} must be positive"
            ))),
            Self::Pitch { semitones } if semitones.abs() > 12 => Err(Error::InvalidArgument(format!(
                "pitch shift {semitones} exceeds an octave"
            ))),
            Self::Awgn { snr_db } if snr_db.is_nan() => Err(Error::InvalidArgument("snr_db is NaN".into())),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for AugmentationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AugmentationPolicy {
    type Err = Error;

    /// Accepts the config names and the one-letter labels, with default
    /// parameters.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Self::None),
            "speed" | "s" => Ok(Self::speed()),
            "pitch" | "p" => Ok(Self::pitch()),
            "awgn" | "a" => Ok(Self::awgn()),
            "specaugment" | "sa" => Ok(Self::spec_augment()),
            other => Err(Error::InvalidArgument(format!("unknown augmentation {other:?}"))),
        }
    }
}

/// Resample by `factor`: output is `floor(N / factor)` samples, sample `k`
/// linearly interpolated at input position `k * factor`. Tempo and pitch
/// both scale by `factor`.
pub fn speed(w: &Waveform, factor: f64) -> Result<Waveform> {
    if factor.is_nan() || factor <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "speed factor {factor} must be positive"
        )));
    }
    let n = w.samples.len();
    let out_len = (n as f64 / factor).floor() as usize;
    if out_len == 0 {
        return Err(Error::InvalidArgument(format!(
            "speed factor {factor} leaves no samples from {n}"
        )));
    }
    if factor == 1.0 {
        return Ok(w.clone());
    }
    let x = &w.samples;
    let out = (0..out_len)
        .map(|k| {
            let pos = k as f64 * factor;
            let i = pos.floor() as usize;
            let frac = pos - i as f64;
            if i + 1 < n {
                x[i] * (1.0 - frac) + x[i + 1] * frac
            } else {
                x[n - 1]
            }
        })
        .collect();
    Ok(Waveform::new(out, w.sample_rate))
}

const OLA_HOP_S: f64 = 0.010;
const OLA_WINDOW_S: f64 = 0.025;

/// Duration-changing, pitch-preserving stretch by `alpha` (output is about
/// `alpha` times longer), using waveform-similarity overlap-add: each
/// analysis frame is shifted within half a hop to best continue the
/// previous one.
pub fn time_stretch(w: &Waveform, alpha: f64, out_len: usize) -> Waveform {
    let rate = f64::from(w.sample_rate);
    let hop = ((OLA_HOP_S * rate).round() as usize).max(1);
    let win = ((OLA_WINDOW_S * rate).round() as usize).max(hop + 1);
    let tol = hop / 2;
    let x = &w.samples;
    let n = x.len();
    let window: Vec<f64> = (0..win)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * (i as f64 + 0.5) / win as f64).cos())
        .collect();
    let get = |i: isize| -> f64 {
        if i >= 0 && (i as usize) < n {
            x[i as usize]
        } else {
            0.0
        }
    };
    let mut out = vec![0.0; out_len + win];
    let mut norm = vec![0.0; out_len + win];
    let mut prev: isize = 0;
    let frames = out_len / hop + 1;
    for j in 0..frames {
        let nominal = (j as f64 * hop as f64 / alpha).round() as isize;
        let start = if j == 0 {
            0
        } else {
            // natural continuation of the previous frame
            let target = prev + hop as isize;
            let overlap = win - hop;
            let mut best = nominal;
            let mut best_score = f64::NEG_INFINITY;
            for d in -(tol as isize)..=(tol as isize) {
                let cand = nominal + d;
                let mut score = 0.0;
                for i in 0..overlap as isize {
                    score += get(target + i) * get(cand + i);
                }
                if score > best_score {
                    best_score = score;
                    best = cand;
                }
            }
            best
        };
        let base = j * hop;
        for i in 0..win {
            out[base + i] += window[i] * get(start + i as isize);
            norm[base + i] += window[i];
        }
        prev = start;
    }
    out.truncate(out_len);
    for (o, z) in out.iter_mut().zip(&norm) {
        if *z > 1e-8 {
            *o /= z;
        }
    }
    Waveform::new(out, w.sample_rate)
}

/// Shift pitch by `semitones` half-steps, keeping the duration.
pub fn pitch(w: &Waveform, semitones: i32) -> Result<Waveform> {
    if semitones.abs() > 12 {
        return Err(Error::InvalidArgument(format!(
            "pitch shift {semitones} exceeds an octave"
        )));
    }
    if semitones == 0 {
        return Ok(w.clone());
    }
    let ratio = 2f64.powf(f64::from(semitones) / 12.0);
    let resampled = speed(w, ratio)?;
    Ok(time_stretch(&resampled, ratio, w.samples.len()))
}

/// Add zero-mean Gaussian noise at the given signal-to-noise ratio.
pub fn awgn(w: &Waveform, snr_db: f64, rng: &mut RngStream) -> Result<Waveform> {
    let ps = w.power();
    if ps <= 0.0 {
        return Err(Error::ZeroSignal);
    }
    let var = ps / 10f64.powf(snr_db / 10.0);
    if var == 0.0 {
        return Ok(w.clone());
    }
    let sd = var.sqrt();
    let samples = w
        .samples
        .iter()
        .map(|x| {
            let z: f64 = StandardNormal.sample(rng);
            x + sd * z
        })
        .collect();
    Ok(Waveform::new(samples, w.sample_rate))
}

/// Rectangular regions overwritten by [`spec_augment`], as `(start, width)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Masks {
    pub time: Vec<(usize, usize)>,
    pub freq: Vec<(usize, usize)>,
}

pub fn spec_augment(s: &Spectrogram, p: &SpecAugmentParams, rng: &mut RngStream) -> Spectrogram {
    spec_augment_with_masks(s, p, rng).0
}

/// Masks are drawn with width uniform in `[0, min(max_width, extent)]` and a
/// uniform start; masked cells take the mean of the input spectrogram.
pub fn spec_augment_with_masks(s: &Spectrogram, p: &SpecAugmentParams, rng: &mut RngStream) -> (Spectrogram, Masks) {
    let mut out = s.clone();
    let (frames, bins) = (s.n_frames(), s.n_bins());
    let fill = s.mean();
    let mut masks = Masks::default();
    for _ in 0..p.time_masks {
        let width = rng.range_inclusive(0, p.time_width.min(frames));
        let start = rng.range_inclusive(0, frames - width);
        masks.time.push((start, width));
        for t in start..start + width {
            out.data_mut()[t * bins..(t + 1) * bins].fill(fill);
        }
    }
    for _ in 0..p.freq_masks {
        let width = rng.range_inclusive(0, p.freq_width.min(bins));
        let start = rng.range_inclusive(0, bins - width);
        masks.freq.push((start, width));
        for t in 0..frames {
            out.data_mut()[t * bins + start..t * bins + start + width].fill(fill);
        }
    }
    (out, masks)
}

/// The augmentation function of the consistency loss: waveform policies
/// transform the audio and recompute features, SpecAugment masks the
/// features, `None` returns the plain spectrogram.
pub fn apply(
    policy: &AugmentationPolicy,
    w: &Waveform,
    frontend: &FrontendConfig,
    rng: &mut RngStream,
) -> Result<Spectrogram> {
    policy.validate()?;
    match policy {
        AugmentationPolicy::None => spectrogram(w, frontend),
        AugmentationPolicy::Speed { factor } => spectrogram(&speed(w, *factor)?, frontend),
        AugmentationPolicy::Pitch { semitones } => spectrogram(&pitch(w, *semitones)?, frontend),
        AugmentationPolicy::Awgn { snr_db } => spectrogram(&awgn(w, *snr_db, rng)?, frontend),
        AugmentationPolicy::SpecAugment(p) => Ok(spec_augment(&spectrogram(w, frontend)?, p, rng)),
    }
}
