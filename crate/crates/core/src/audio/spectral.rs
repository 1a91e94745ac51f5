use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::MfccConfig;
use crate::error::{Error, Result};

/// Symmetric Hann window: zero at both ends.
pub fn hann_window(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let denom = (n - 1) as f64;
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / denom).cos())
        .collect()
}

/// Hann-windowed frames of `frame_length` samples every `hop_length`.
pub fn frame_and_window(samples: &[f64], config: &MfccConfig) -> Result<Vec<Vec<f64>>> {
    let (len, hop) = (config.frame_length, config.hop_length);
    if hop == 0 || len == 0 {
        return Err(Error::param("frame and hop length must be positive"));
    }
    if samples.len() < len {
        return Err(Error::protocol(format!(
            "clip of {} samples is shorter than one {len}-sample frame; pad it first",
            samples.len()
        )));
    }
    let window = hann_window(len);
    let count = 1 + (samples.len() - len) / hop;
    Ok((0..count)
        .map(|f| {
            samples[f * hop..f * hop + len]
                .iter()
                .zip(&window)
                .map(|(s, w)| s * w)
                .collect()
        })
        .collect())
}

/// Reusable FFT plan for one-sided power spectra.
pub(crate) struct SpectrumPlan {
    fft: Arc<dyn Fft<f64>>,
    size: usize,
    buf: Vec<Complex<f64>>,
}

impl SpectrumPlan {
    pub(crate) fn new(size: usize) -> Self {
        SpectrumPlan {
            fft: FftPlanner::new().plan_fft_forward(size),
            size,
            buf: vec![Complex::default(); size],
        }
    }

    pub(crate) fn power(&mut self, frame: &[f64]) -> Result<Vec<f64>> {
        if frame.len() > self.size {
            return Err(Error::param(format!(
                "frame of {} samples exceeds FFT size {}",
                frame.len(),
                self.size
            )));
        }
        self.buf.fill(Complex::default());
        for (b, &x) in self.buf.iter_mut().zip(frame) {
            b.re = x;
        }
        self.fft.process(&mut self.buf);
        Ok(self.buf[..self.size / 2 + 1].iter().map(|c| c.norm_sqr()).collect())
    }
}

/// `|DFT|²` of the zero-padded frame, bins `0..=fft_size/2`.
pub fn power_spectrum(frame: &[f64], fft_size: usize) -> Result<Vec<f64>> {
    if fft_size == 0 {
        return Err(Error::param("FFT size must be positive"));
    }
    SpectrumPlan::new(fft_size).power(frame)
}

/// Time-domain energy recovered from a one-sided power spectrum (Parseval):
/// equals the sum of squares of the zero-padded frame.
pub fn spectrum_energy(power: &[f64], fft_size: usize) -> f64 {
    let half = fft_size / 2;
    let total: f64 = power
        .iter()
        .enumerate()
        .map(|(k, p)| if k == 0 || (fft_size.is_multiple_of(2) && k == half) { *p } else { 2.0 * p })
        .sum();
    total / fft_size as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn frame_count_for_five_seconds() {
        let cfg = MfccConfig::default();
        let frames = frame_and_window(&vec![0.0; 80000], &cfg).unwrap();
        assert_eq!(frames.len(), 498);
        assert!(frames.iter().all(|f| f.len() == 400));
    }

    #[test]
    fn hann_ends_are_zero_and_constant_frame_is_the_window() {
        let w = hann_window(400);
        assert_eq!(w[0], 0.0);
        assert!(w[399].abs() < 1e-15);
        let cfg = MfccConfig::default();
        let frames = frame_and_window(&vec![1.0; 400], &cfg).unwrap();
        assert_eq!(frames, vec![w]);
    }

    #[test]
    fn short_clip_is_a_protocol_error() {
        let cfg = MfccConfig::default();
        assert!(matches!(frame_and_window(&[0.0; 10], &cfg), Err(Error::Protocol(_))));
    }

    #[test]
    fn silence_has_no_energy() {
        assert!(power_spectrum(&[0.0; 300], 512).unwrap().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn bin_centred_cosine_is_concentrated() {
        let n = 512;
        let k = 37;
        let frame: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * k as f64 * i as f64 / n as f64).cos())
            .collect();
        let p = power_spectrum(&frame, n).unwrap();
        let peak = p[k];
        for (bin, v) in p.iter().enumerate() {
            if bin != k {
                assert!(*v < 1e-9 * peak, "bin {bin}: {v}");
            }
        }
    }

    #[test]
    fn matches_direct_dft_and_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let frame: Vec<f64> = (0..400).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = 512;
        let p = power_spectrum(&frame, n).unwrap();
        for (k, got) in p.iter().enumerate() {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, x) in frame.iter().enumerate() {
                let a = -2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64;
                re += x * a.cos();
                im += x * a.sin();
            }
            let expect = re * re + im * im;
            assert!((got - expect).abs() <= 1e-9 * expect.max(1e-300), "bin {k}");
        }
        let energy: f64 = frame.iter().map(|x| x * x).sum();
        assert!((spectrum_energy(&p, n) - energy).abs() < 1e-9 * energy);
    }
}
