//! Waveforms and the log-magnitude spectrogram frontend.

mod wav;

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use wav::{read_wav, write_wav};

pub const DEFAULT_SAMPLE_RATE: u32 = 4000;

#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        assert!(sample_rate > 0, "sample rate must be positive");
        Self { samples, sample_rate }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    /// Mean squared amplitude.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64
    }
}

/// `frames x bins` matrix of log-magnitudes, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram {
    data: Vec<f64>,
    n_frames: usize,
    n_bins: usize,
    pub frame_stride_s: f64,
    pub source_rate: u32,
}

impl Spectrogram {
    pub fn from_parts(data: Vec<f64>, n_frames: usize, n_bins: usize, frame_stride_s: f64, source_rate: u32) -> Self {
        assert_eq!(data.len(), n_frames * n_bins, "spectrogram shape");
        Self {
            data,
            n_frames,
            n_bins,
            frame_stride_s,
            source_rate,
        }
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.n_bins..(t + 1) * self.n_bins]
    }

    pub fn get(&self, t: usize, b: usize) -> f64 {
        self.data[t * self.n_bins + b]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrontendConfig {
    pub window_s: f64,
    pub stride_s: f64,
    /// Magnitudes are clamped to this before taking the log.
    pub log_floor: f64,
    /// Zero-pad waveforms shorter than one window instead of rejecting them.
    pub pad_short: bool,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        Self {
            window_s: 0.200,
            stride_s: 0.100,
            log_floor: 1e-10,
            pad_short: true,
        }
    }
}

impl FrontendConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.stride_s > 0.0 && self.stride_s <= self.window_s) {
            return Err(Error::Config(format!(
                "need 0 < stride_s <= window_s, got stride {} window {}",
                self.stride_s, self.window_s
            )));
        }
        if self.log_floor.is_nan() || self.log_floor <= 0.0 {
            return Err(Error::Config("log_floor must be positive".into()));
        }
        Ok(())
    }

    pub fn window_samples(&self, rate: u32) -> usize {
        ((self.window_s * f64::from(rate)).round() as usize).max(1)
    }

    pub fn stride_samples(&self, rate: u32) -> usize {
        ((self.stride_s * f64::from(rate)).round() as usize).max(1)
    }

    /// Number of nonnegative-frequency bins of a window-length transform.
    pub fn n_bins(&self, rate: u32) -> usize {
        self.window_samples(rate) / 2 + 1
    }

    /// Frames produced for `n` samples (after padding short inputs).
    pub fn n_frames(&self, n: usize, rate: u32) -> usize {
        let w = self.window_samples(rate);
        let s = self.stride_samples(rate);
        1 + n.max(w).saturating_sub(w) / s
    }
}

/// Symmetric Hamming window.
pub fn hamming_window(n: usize) -> Vec<f64> {
    assert!(n >= 1);
    if n == 1 {
        return vec![1.0];
    }
    let denom = (n - 1) as f64;
    (0..n)
        .map(|k| 0.54 - 0.46 * (2.0 * PI * k as f64 / denom).cos())
        .collect()
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Log-magnitude short-time Fourier transform with a Hamming window.
pub fn spectrogram(w: &Waveform, cfg: &FrontendConfig) -> Result<Spectrogram> {
    let rate = w.sample_rate;
    let win = cfg.window_samples(rate);
    let hop = cfg.stride_samples(rate);
    let padded;
    let samples: &[f64] = if w.samples.len() < win {
        if !cfg.pad_short {
            return Err(Error::TooShort {
                samples: w.samples.len(),
                window: win,
            });
        }
        let mut p = w.samples.clone();
        p.resize(win, 0.0);
        padded = p;
        &padded
    } else {
        &w.samples
    };
    let n_frames = 1 + (samples.len() - win) / hop;
    let n_bins = win / 2 + 1;
    let window = hamming_window(win);
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(win));
    let mut buf = vec![Complex::new(0.0, 0.0); win];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut data = Vec::with_capacity(n_frames * n_bins);
    for f in 0..n_frames {
        let frame = &samples[f * hop..f * hop + win];
        for ((b, x), h) in buf.iter_mut().zip(frame).zip(&window) {
            *b = Complex::new(x * h, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        data.extend(buf[..n_bins].iter().map(|c| c.norm().max(cfg.log_floor).ln()));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("spectrogram"));
    }
    Ok(Spectrogram::from_parts(data, n_frames, n_bins, cfg.stride_s, rate))
}

/// Frequency (Hz) of the strongest bin of a magnitude spectrum of the whole
/// signal, refined by parabolic interpolation over log-magnitudes.
pub fn dominant_frequency(w: &Waveform) -> f64 {
    let n = w.samples.len();
    let window = hamming_window(n);
    let mut buf: Vec<Complex<f64>> = w
        .samples
        .iter()
        .zip(&window)
        .map(|(x, h)| Complex::new(x * h, 0.0))
        .collect();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n));
    fft.process(&mut buf);
    let mags: Vec<f64> = buf[..n / 2 + 1].iter().map(|c| c.norm()).collect();
    let k = mags
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut offset = 0.0;
    if k > 0 && k + 1 < mags.len() {
        let (a, b, c) = (mags[k - 1].max(1e-300).ln(), mags[k].ln(), mags[k + 1].max(1e-300).ln());
        let denom = a - 2.0 * b + c;
        if denom.abs() > 1e-12 {
            offset = 0.5 * (a - c) / denom;
        }
    }
    (k as f64 + offset) * f64::from(w.sample_rate) / n as f64
}
