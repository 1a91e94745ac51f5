//! Flat tensor checkpoint files.
//!
//! Layout: one line of compact JSON (terminated by `\n`) describing every
//! tensor, followed by all tensor data as little-endian `f64` values laid
//! end to end. Offsets count `f64` elements from the start of the payload.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const FORMAT: &str = "dynser-tensors";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryHeader {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    #[serde(default = "default_trainable")]
    pub trainable: bool,
}

fn default_trainable() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    entries: Vec<EntryHeader>,
}

/// One named tensor in a checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub tensor: Tensor,
    pub trainable: bool,
}

pub fn write_tensors<W: Write>(mut w: W, entries: &[NamedTensor]) -> Result<()> {
    let mut offset = 0;
    let headers = entries
        .iter()
        .map(|e| {
            let h = EntryHeader {
                name: e.name.clone(),
                shape: e.tensor.shape().to_vec(),
                offset,
                trainable: e.trainable,
            };
            offset += e.tensor.numel();
            h
        })
        .collect();
    let header = Header {
        format: FORMAT.into(),
        version: VERSION,
        entries: headers,
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for e in entries {
        for v in e.tensor.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_tensors<R: Read>(r: R) -> Result<Vec<NamedTensor>> {
    let mut r = BufReader::new(r);
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    let header: Header = serde_json::from_slice(&line)?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(Error::UnsupportedFormat(format!(
            "checkpoint format {} v{}",
            header.format, header.version
        )));
    }
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() % 8 != 0 {
        return Err(Error::Data("checkpoint payload is not a whole number of f64 values".into()));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    header
        .entries
        .into_iter()
        .map(|e| {
            let n: usize = e.shape.iter().product();
            let slice = values.get(e.offset..e.offset + n).ok_or_else(|| {
                Error::Data(format!("checkpoint entry {} runs past the payload", e.name))
            })?;
            Ok(NamedTensor {
                tensor: Tensor::new(e.shape, slice.to_vec())?,
                name: e.name,
                trainable: e.trainable,
            })
        })
        .collect()
}

pub fn save(path: &Path, entries: &[NamedTensor]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::file(path, e))?;
    write_tensors(std::io::BufWriter::new(f), entries)
}

pub fn load(path: &Path) -> Result<Vec<NamedTensor>> {
    let f = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    read_tensors(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn roundtrips_bit_exactly(values in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..40), split in 1usize..40) {
            let split = split.min(values.len());
            let mut entries = vec![NamedTensor {
                name: "a.w".into(),
                tensor: Tensor::from_vec(values[..split].to_vec()),
                trainable: true,
            }];
            if split < values.len() {
                entries.push(NamedTensor {
                    name: "a.running_mean".into(),
                    tensor: Tensor::from_vec(values[split..].to_vec()),
                    trainable: false,
                });
            }
            let mut buf = Vec::new();
            write_tensors(&mut buf, &entries).unwrap();
            prop_assert_eq!(read_tensors(&buf[..]).unwrap(), entries);
        }
    }

    #[test]
    fn header_lists_offsets() {
        let entries = vec![
            NamedTensor { name: "x".into(), tensor: Tensor::zeros(vec![2, 3]), trainable: true },
            NamedTensor { name: "y".into(), tensor: Tensor::zeros(vec![4]), trainable: false },
        ];
        let mut buf = Vec::new();
        write_tensors(&mut buf, &entries).unwrap();
        let line = buf.split(|&b| b == b'\n').next().unwrap();
        let v: serde_json::Value = serde_json::from_slice(line).unwrap();
        assert_eq!(v["entries"][1]["offset"], 6);
        assert_eq!(v["entries"][0]["shape"], serde_json::json!([2, 3]));
        assert_eq!(buf.len(), line.len() + 1 + 10 * 8);
    }
}
