//! Synthesizes a one-second tone, writes it as WAV, reads it back and
//! extracts the 40 x 498 MFCC matrix.

use dynser::audio::{mfcc, read_wav, write_wav, AudioClip, MfccConfig};
use dynser::Result;

fn main() -> Result<()> {
    let sr = 16000;
    let samples: Vec<f64> = (0..sr)
        .map(|i| {
            let t = i as f64 / sr as f64;
            0.4 * (std::f64::consts::TAU * 440.0 * t).sin() + 0.1 * (std::f64::consts::TAU * 1320.0 * t).sin()
        })
        .collect();
    let dir = std::env::temp_dir().join("dynser-mfcc-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("tone.wav");
    write_wav(&path, &AudioClip::new(samples, sr as u32)?)?;

    let clip = read_wav(&path)?;
    println!("{}: {} samples, {:.2} s", path.display(), clip.len(), clip.duration_seconds());
    let cfg = MfccConfig::default();
    let m = mfcc(&clip, &cfg)?;
    println!("clip padded to {} samples -> {} frames x {} coefficients", cfg.clip_len(), m.frames(), m.coefficients());
    let row = m.row(0);
    println!("frame 0, c0..c4: {:.3?}", &row[..5]);
    println!("image layout for the 2D stream: {:?}", m.to_image().shape());
    Ok(())
}
