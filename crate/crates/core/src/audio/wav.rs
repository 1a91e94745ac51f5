use std::io::Write;
use std::path::Path;

use super::AudioClip;
use crate::error::{Error, Result};

fn encoding_name(tag: u16) -> String {
    match tag {
        0x0001 => "PCM".into(),
        0x0002 => "Microsoft ADPCM".into(),
        0x0003 => "IEEE float".into(),
        0x0006 => "A-law".into(),
        0x0007 => "mu-law".into(),
        0x0011 => "IMA ADPCM".into(),
        0x0055 => "MPEG layer 3".into(),
        0xFFFE => "extensible".into(),
        other => format!("format tag 0x{other:04X}"),
    }
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Parses a RIFF/WAVE byte buffer holding 16-bit PCM.
fn parse(bytes: &[u8]) -> Result<AudioClip> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::UnsupportedFormat("not a RIFF/WAVE file".into()));
    }
    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    let mut at = 12;
    while at + 8 <= bytes.len() {
        let id = &bytes[at..at + 4];
        let size = u32_at(bytes, at + 4) as usize;
        let body_start = at + 8;
        let body = &bytes[body_start..(body_start + size).min(bytes.len())];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(Error::Data("truncated fmt chunk".into()));
                }
                let mut tag = u16_at(body, 0);
                if tag == 0xFFFE && body.len() >= 26 {
                    // WAVE_FORMAT_EXTENSIBLE: the subformat GUID starts with the real tag
                    tag = u16_at(body, 24);
                }
                fmt = Some((tag, u16_at(body, 2), u32_at(body, 4), u16_at(body, 14)));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        at = body_start + size + (size & 1);
    }
    let (tag, channels, rate, bits) =
        fmt.ok_or_else(|| Error::Data("WAV file has no fmt chunk".into()))?;
    if tag != 1 {
        return Err(Error::UnsupportedFormat(format!(
            "{} encoding; only 16-bit PCM is supported",
            encoding_name(tag)
        )));
    }
    if bits != 16 {
        return Err(Error::UnsupportedFormat(format!(
            "PCM with {bits} bits per sample; only 16-bit PCM is supported"
        )));
    }
    if channels == 0 {
        return Err(Error::Data("WAV header declares zero channels".into()));
    }
    let data = data.ok_or_else(|| Error::Data("WAV file has no data chunk".into()))?;
    let frame = 2 * channels as usize;
    let samples: Vec<f64> = data
        .chunks_exact(frame)
        .map(|f| {
            let sum: f64 = f
                .chunks_exact(2)
                .map(|s| i16::from_le_bytes([s[0], s[1]]) as f64 / 32768.0)
                .sum();
            sum / channels as f64
        })
        .collect();
    AudioClip::new(samples, rate).map_err(|_| Error::Data("WAV data chunk holds no frames".into()))
}

/// Reads 16-bit PCM WAV, averaging channels down to mono.
pub fn read_wav(path: &Path) -> Result<AudioClip> {
    let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
    decode_wav(&bytes, path)
}

/// [`read_wav`] over bytes already in memory; `path` only labels errors.
pub fn decode_wav(bytes: &[u8], path: &Path) -> Result<AudioClip> {
    parse(bytes).map_err(|e| match e {
        Error::UnsupportedFormat(m) => Error::UnsupportedFormat(format!("{}: {m}", path.display())),
        Error::Data(m) => Error::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn to_i16(x: f64) -> i16 {
    (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Writes mono 16-bit PCM. Samples are scaled by 32768 and clamped.
pub fn write_wav_to<W: Write>(mut w: W, clip: &AudioClip) -> Result<()> {
    let data_len = (clip.len() * 2) as u32;
    let rate = clip.sample_rate();
    w.write_all(b"RIFF")?;
    w.write_all(&(36 + data_len).to_le_bytes())?;
    w.write_all(b"WAVEfmt ")?;
    w.write_all(&16u32.to_le_bytes())?;
    w.write_all(&1u16.to_le_bytes())?;
    w.write_all(&1u16.to_le_bytes())?;
    w.write_all(&rate.to_le_bytes())?;
    w.write_all(&(rate * 2).to_le_bytes())?;
    w.write_all(&2u16.to_le_bytes())?;
    w.write_all(&16u16.to_le_bytes())?;
    w.write_all(b"data")?;
    w.write_all(&data_len.to_le_bytes())?;
    let mut buf = Vec::with_capacity(clip.len() * 2);
    for &s in clip.samples() {
        buf.extend_from_slice(&to_i16(s).to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn write_wav(path: &Path, clip: &AudioClip) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::file(path, e))?;
    write_wav_to(std::io::BufWriter::new(f), clip)
}
