use super::MfccConfig;
use crate::error::{Error, Result};

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters, peak height 1, centres evenly spaced in mel between
/// `fmin_hz` and `fmax_hz`. Rows are filters, columns FFT bins.
pub fn mel_filterbank(config: &MfccConfig) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    let bins = config.fft_size / 2 + 1;
    let (lo, hi) = (hz_to_mel(config.fmin_hz), hz_to_mel(config.fmax_hz));
    let edges: Vec<f64> = (0..config.n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (config.n_mels + 1) as f64))
        .collect();
    let bin_hz = config.sample_rate_hz as f64 / config.fft_size as f64;
    let mut bank = Vec::with_capacity(config.n_mels);
    for m in 0..config.n_mels {
        let (left, centre, right) = (edges[m], edges[m + 1], edges[m + 2]);
        let row: Vec<f64> = (0..bins)
            .map(|k| {
                let f = k as f64 * bin_hz;
                let up = (f - left) / (centre - left);
                let down = (right - f) / (right - centre);
                up.min(down).max(0.0)
            })
            .collect();
        if row.iter().all(|&w| w == 0.0) {
            return Err(Error::param(format!(
                "mel filter {m} ({left:.1}-{right:.1} Hz) covers no FFT bin; lower n_mels or raise fft_size"
            )));
        }
        bank.push(row);
    }
    Ok(bank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::power_spectrum;

    #[test]
    fn mel_formula() {
        assert!((hz_to_mel(700.0) - 2595.0 * 2f64.log10()).abs() < 1e-12);
        assert!((hz_to_mel(700.0) - 781.17).abs() < 0.01);
        assert!((mel_to_hz(hz_to_mel(1234.5)) - 1234.5).abs() < 1e-9);
    }

    #[test]
    fn each_filter_has_one_peak_region() {
        let bank = mel_filterbank(&MfccConfig::default()).unwrap();
        assert_eq!(bank.len(), 64);
        for row in &bank {
            assert!(row.iter().all(|&w| w >= 0.0));
            let max = row.iter().cloned().fold(0.0, f64::max);
            // indices attaining the max form one contiguous run
            let at: Vec<usize> = (0..row.len()).filter(|&k| row[k] == max).collect();
            assert_eq!(at.last().unwrap() - at[0] + 1, at.len());
            // rises to the peak, falls after it
            let (a, b) = (at[0], *at.last().unwrap());
            assert!(row[..=a].windows(2).all(|w| w[0] <= w[1]));
            assert!(row[b..].windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn tone_at_centre_excites_its_own_filter_most() {
        let cfg = MfccConfig::default();
        let bank = mel_filterbank(&cfg).unwrap();
        let lo = hz_to_mel(cfg.fmin_hz);
        let hi = hz_to_mel(cfg.fmax_hz);
        // filters narrower than a couple of bins cannot resolve a windowed tone
        for m in 16..cfg.n_mels {
            let centre = mel_to_hz(lo + (hi - lo) * (m + 1) as f64 / (cfg.n_mels + 1) as f64);
            let frame: Vec<f64> = crate::audio::hann_window(cfg.fft_size)
                .iter()
                .enumerate()
                .map(|(i, w)| w * (2.0 * std::f64::consts::PI * centre * i as f64 / cfg.sample_rate_hz as f64).sin())
                .collect();
            let p = power_spectrum(&frame, cfg.fft_size).unwrap();
            let response: Vec<f64> = bank.iter().map(|r| r.iter().zip(&p).map(|(a, b)| a * b).sum()).collect();
            let best = (0..response.len()).max_by(|&a, &b| response[a].total_cmp(&response[b])).unwrap();
            assert_eq!(best, m, "tone at {centre:.1} Hz");
        }
    }

    #[test]
    fn too_many_filters_is_rejected() {
        let cfg = MfccConfig { n_mels: 200, n_mfcc: 40, fft_size: 512, ..MfccConfig::default() };
        assert!(matches!(mel_filterbank(&cfg), Err(Error::Parameter(_))));
    }
}
