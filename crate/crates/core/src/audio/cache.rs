//! Per-clip feature files: one compact JSON header line, then row-major
//! little-endian `f64` values.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MfccConfig;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const FEATURE_FORMAT: &str = "dynser-features";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureHeader {
    pub format: String,
    pub version: u32,
    pub config: MfccConfig,
    pub shape: Vec<usize>,
}

pub fn write_feature_file(path: &Path, config: &MfccConfig, values: &Tensor) -> Result<()> {
    let header = FeatureHeader {
        format: FEATURE_FORMAT.into(),
        version: 1,
        config: config.clone(),
        shape: values.shape().to_vec(),
    };
    let f = std::fs::File::create(path).map_err(|e| Error::file(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(values.numel() * 8);
    for v in values.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_feature_file(path: &Path) -> Result<(FeatureHeader, Tensor)> {
    let f = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    let mut r = BufReader::new(f);
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    let header: FeatureHeader = serde_json::from_slice(&line)?;
    if header.format != FEATURE_FORMAT {
        return Err(Error::UnsupportedFormat(format!(
            "{}: expected a {FEATURE_FORMAT} file",
            path.display()
        )));
    }
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let tensor = Tensor::new(header.shape.clone(), values)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    Ok((header, tensor))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.feat");
        let t = Tensor::from_fn(vec![3, 4], |i| i as f64 * 0.1 - 0.3);
        write_feature_file(&p, &MfccConfig::default(), &t).unwrap();
        let (h, back) = read_feature_file(&p).unwrap();
        assert_eq!(back, t);
        assert_eq!(h.shape, vec![3, 4]);
        assert_eq!(h.config, MfccConfig::default());
    }
}
