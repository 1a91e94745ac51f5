use serde::{Deserialize, Serialize};

use super::spectral::SpectrumPlan;
use super::{frame_and_window, mel_filterbank, mirror_pad, AudioClip};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MfccConfig {
    pub sample_rate_hz: u32,
    pub clip_seconds: f64,
    pub frame_length: usize,
    pub hop_length: usize,
    pub fft_size: usize,
    pub n_mels: usize,
    pub n_mfcc: usize,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
    pub log_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        MfccConfig {
            sample_rate_hz: 16000,
            clip_seconds: 5.0,
            frame_length: 400,
            hop_length: 160,
            fft_size: 512,
            n_mels: 64,
            n_mfcc: 40,
            fmin_hz: 0.0,
            fmax_hz: 8000.0,
            log_floor: 1e-10,
        }
    }
}

impl MfccConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::param(m));
        if self.sample_rate_hz == 0 {
            return bad("sample rate must be positive".into());
        }
        if self.frame_length == 0 || self.frame_length > self.fft_size {
            return bad(format!(
                "frame length {} must be in 1..={}",
                self.frame_length, self.fft_size
            ));
        }
        if self.hop_length == 0 {
            return bad("hop length must be at least 1".into());
        }
        if self.n_mfcc == 0 || self.n_mfcc > self.n_mels {
            return bad(format!("n_mfcc {} must be in 1..={}", self.n_mfcc, self.n_mels));
        }
        if !(self.fmin_hz >= 0.0 && self.fmin_hz < self.fmax_hz) {
            return bad(format!("need 0 <= fmin ({}) < fmax ({})", self.fmin_hz, self.fmax_hz));
        }
        if self.fmax_hz > self.sample_rate_hz as f64 / 2.0 {
            return bad(format!(
                "fmax {} Hz exceeds Nyquist {} Hz",
                self.fmax_hz,
                self.sample_rate_hz / 2
            ));
        }
        if self.clip_seconds <= 0.0 || self.log_floor <= 0.0 {
            return bad("clip length and log floor must be positive".into());
        }
        if self.clip_len() < self.frame_length {
            return bad("clip length is shorter than one frame".into());
        }
        Ok(())
    }

    /// Fixed clip length in samples.
    pub fn clip_len(&self) -> usize {
        (self.clip_seconds * self.sample_rate_hz as f64).round() as usize
    }

    /// Frames produced for a clip of `clip_len()` samples.
    pub fn frames(&self) -> usize {
        1 + (self.clip_len() - self.frame_length) / self.hop_length
    }
}

/// MFCC feature map: `frames × n_mfcc`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MfccMatrix {
    values: Tensor,
    config: MfccConfig,
}

impl MfccMatrix {
    pub fn new(values: Tensor, config: MfccConfig) -> Result<Self> {
        if values.ndim() != 2 || values.shape()[1] != config.n_mfcc {
            return Err(Error::dim(format!(
                "MFCC matrix must be frames x {}, got {:?}",
                config.n_mfcc,
                values.shape()
            )));
        }
        if !values.all_finite() {
            return Err(Error::Numeric("MFCC matrix holds non-finite values".into()));
        }
        Ok(MfccMatrix { values, config })
    }

    pub fn frames(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn coefficients(&self) -> usize {
        self.values.shape()[1]
    }

    pub fn values(&self) -> &Tensor {
        &self.values
    }

    pub fn config(&self) -> &MfccConfig {
        &self.config
    }

    pub fn row(&self, frame: usize) -> &[f64] {
        let c = self.coefficients();
        &self.values.data()[frame * c..(frame + 1) * c]
    }

    /// Single-channel image `[1, n_mfcc, frames]`: coefficients on the
    /// height axis, time on the width axis.
    pub fn to_image(&self) -> Tensor {
        let (t, c) = (self.frames(), self.coefficients());
        let d = self.values.data();
        Tensor::from_fn(vec![1, c, t], |i| {
            let (coef, frame) = (i / t, i % t);
            d[frame * c + coef]
        })
    }
}

/// Orthonormal DCT-II of `x`, keeping the first `keep` coefficients.
pub fn dct2_orthonormal(x: &[f64], keep: usize) -> Vec<f64> {
    let n = x.len();
    let nf = n as f64;
    (0..keep.min(n))
        .map(|k| {
            let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
            scale
                * x.iter()
                    .enumerate()
                    .map(|(i, v)| v * (std::f64::consts::PI * k as f64 * (2 * i + 1) as f64 / (2.0 * nf)).cos())
                    .sum::<f64>()
        })
        .collect()
}

struct DctTable {
    rows: Vec<Vec<f64>>,
}

impl DctTable {
    fn new(n: usize, keep: usize) -> Self {
        let nf = n as f64;
        let rows = (0..keep)
            .map(|k| {
                let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
                (0..n)
                    .map(|i| scale * (std::f64::consts::PI * k as f64 * (2 * i + 1) as f64 / (2.0 * nf)).cos())
                    .collect()
            })
            .collect();
        DctTable { rows }
    }

    fn apply(&self, x: &[f64]) -> impl Iterator<Item = f64> + '_ {
        let x = x.to_vec();
        self.rows.iter().map(move |r| r.iter().zip(&x).map(|(a, b)| a * b).sum())
    }
}

/// Pads or truncates to the configured clip length, then computes
/// log-mel cepstra frame by frame.
///
/// The clip must already be at `config.sample_rate_hz`.
pub fn mfcc(clip: &AudioClip, config: &MfccConfig) -> Result<MfccMatrix> {
    config.validate()?;
    if clip.sample_rate() != config.sample_rate_hz {
        return Err(Error::protocol(format!(
            "clip is at {} Hz but features expect {} Hz; resample first",
            clip.sample_rate(),
            config.sample_rate_hz
        )));
    }
    let padded = mirror_pad(clip.samples(), config.clip_len())?;
    let frames = frame_and_window(&padded, config)?;
    let bank = mel_filterbank(config)?;
    let dct = DctTable::new(config.n_mels, config.n_mfcc);
    let mut plan = SpectrumPlan::new(config.fft_size);
    let mut values = Vec::with_capacity(frames.len() * config.n_mfcc);
    let mut log_mel = vec![0.0; config.n_mels];
    for frame in &frames {
        let power = plan.power(frame)?;
        for (slot, filter) in log_mel.iter_mut().zip(&bank) {
            let e: f64 = filter.iter().zip(&power).map(|(w, p)| w * p).sum();
            *slot = e.max(config.log_floor).ln();
        }
        values.extend(dct.apply(&log_mel));
    }
    MfccMatrix::new(Tensor::new(vec![frames.len(), config.n_mfcc], values)?, config.clone())
}
