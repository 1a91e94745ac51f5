//! WAV ingestion and the MFCC feature frontend.

mod cache;
mod mel;
mod mfcc;
mod resample;
mod spectral;
mod wav;

pub use cache::{read_feature_file, write_feature_file, FeatureHeader};
pub use mel::{hz_to_mel, mel_filterbank, mel_to_hz};
pub use mfcc::{dct2_orthonormal, mfcc, MfccConfig, MfccMatrix};
pub use resample::{mirror_pad, resample};
pub use spectral::{frame_and_window, hann_window, power_spectrum, spectrum_energy};
pub use wav::{decode_wav, read_wav, write_wav, write_wav_to};

use crate::error::{Error, Result};

/// Mono audio at a fixed sample rate.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::param("audio clip has no samples"));
        }
        if sample_rate == 0 {
            return Err(Error::param("sample rate must be positive"));
        }
        Ok(AudioClip { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}
