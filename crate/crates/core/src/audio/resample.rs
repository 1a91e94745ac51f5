use super::AudioClip;
use crate::error::{Error, Result};

/// Linear-interpolation resampling to `target_hz`.
///
/// Output length is `round(len * target / source)`; equal rates return the
/// clip unchanged.
pub fn resample(clip: &AudioClip, target_hz: u32) -> Result<AudioClip> {
    if target_hz == 0 {
        return Err(Error::param("target sample rate must be positive"));
    }
    let source_hz = clip.sample_rate();
    if source_hz == target_hz {
        return Ok(clip.clone());
    }
    let x = clip.samples();
    let ratio = source_hz as f64 / target_hz as f64;
    let n_out = ((x.len() as f64) * target_hz as f64 / source_hz as f64).round().max(1.0) as usize;
    let last = x.len() - 1;
    let out = (0..n_out)
        .map(|i| {
            let pos = i as f64 * ratio;
            let k = (pos.floor() as usize).min(last);
            let frac = pos - k as f64;
            if k >= last {
                x[last]
            } else {
                x[k] + (x[k + 1] - x[k]) * frac
            }
        })
        .collect();
    AudioClip::new(out, target_hz)
}

/// Extends a short segment to `target_len` by repeating it end to end, or
/// truncates a long one.
pub fn mirror_pad(samples: &[f64], target_len: usize) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::param("cannot pad an empty segment"));
    }
    if target_len == 0 {
        return Err(Error::param("target length must be at least 1"));
    }
    Ok(samples.iter().cycle().take(target_len).copied().collect())
}
