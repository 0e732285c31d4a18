//! Versioned binary model file with a CRC32 trailer.

use std::fs;
use std::path::Path;

use super::conv::{ConvLayer, FeatureExtractor};
use super::head::{Dense, RegressionHead};
use super::{RegressionModel, INPUT_SIDE};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &str = "MARKERLENS-MODEL v1";

fn arch_line(m: &RegressionModel) -> String {
    let conv: Vec<String> = m
        .extractor
        .layers
        .iter()
        .map(|l| format!("{}:{}", l.in_ch, l.out_ch))
        .collect();
    let mut head: Vec<String> = m.head.layers.iter().map(|l| l.inputs.to_string()).collect();
    head.push("1".into());
    let n = m.head.layers.len();
    let act: Vec<&str> = (0..n).map(|i| if i + 1 == n { "sigmoid" } else { "relu" }).collect();
    format!(
        "arch input={INPUT_SIDE}x{INPUT_SIDE} conv={} kernel=3 pool=2 head={} act={}",
        conv.join(","),
        head.join(":"),
        act.join(",")
    )
}

fn push_all(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn weight_block(m: &RegressionModel) -> Vec<u8> {
    let mut out = m.extractor.weight_bytes();
    for l in &m.head.layers {
        push_all(&mut out, &l.weights);
        push_all(&mut out, &l.bias);
    }
    out
}

/// Serializes `m` to bytes.
pub fn encode_model(m: &RegressionModel) -> Vec<u8> {
    let weights = weight_block(m);
    let mut out = format!("{MODEL_MAGIC}\n{}\n", arch_line(m)).into_bytes();
    out.extend_from_slice(&weights);
    out.extend_from_slice(format!("\ncrc32 {:08x}\n", crc32fast::hash(&weights)).as_bytes());
    out
}

pub fn save_model(m: &RegressionModel, path: &Path) -> Result<()> {
    fs::write(path, encode_model(m))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<RegressionModel> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::FileNotFound(path.to_path_buf()))
        }
        Err(e) => return Err(e.into()),
    };
    decode_model(&bytes)
}

fn take_line<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a str> {
    let rest = &bytes[*pos..];
    let end = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::CorruptData("missing model header line".into()))?;
    *pos += end + 1;
    std::str::from_utf8(&rest[..end]).map_err(|_| Error::CorruptData("non-text model header".into()))
}

fn parse_pairs(spec: &str) -> Result<Vec<(usize, usize)>> {
    spec.split(',')
        .map(|p| {
            let (a, b) = p
                .split_once(':')
                .ok_or_else(|| Error::CorruptData(format!("bad conv spec `{p}`")))?;
            Ok((parse_dim(a)?, parse_dim(b)?))
        })
        .collect()
}

fn parse_dim(s: &str) -> Result<usize> {
    match s.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(Error::CorruptData(format!("bad layer size `{s}`"))),
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<Vec<f64>> {
        let len = n.checked_mul(8).ok_or_else(|| Error::CorruptData("oversized layer".into()))?;
        if self.bytes.len() - self.pos < len {
            return Err(Error::CorruptData("truncated weight block".into()));
        }
        let out = self.bytes[self.pos..self.pos + len]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        self.pos += len;
        Ok(out)
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<RegressionModel> {
    let mut pos = 0;
    let magic = take_line(bytes, &mut pos).map_err(|_| Error::VersionMismatch("<missing>".into()))?;
    if magic != MODEL_MAGIC {
        return Err(Error::VersionMismatch(magic.chars().take(64).collect()));
    }
    let arch = take_line(bytes, &mut pos)?;
    let mut conv = None;
    let mut head = None;
    for field in arch.split_whitespace().skip(1) {
        match field.split_once('=') {
            Some(("conv", v)) => conv = Some(parse_pairs(v)?),
            Some(("head", v)) => {
                head = Some(v.split(':').map(parse_dim).collect::<Result<Vec<_>>>()?);
            }
            Some(("input", v)) if v != format!("{INPUT_SIDE}x{INPUT_SIDE}") => {
                return Err(Error::CorruptData(format!("unsupported input size {v}")));
            }
            _ => {}
        }
    }
    let conv = conv.ok_or_else(|| Error::CorruptData("missing conv spec".into()))?;
    let head = head.ok_or_else(|| Error::CorruptData("missing head spec".into()))?;
    if head.len() < 2 || *head.last().expect("non-empty") != 1 {
        return Err(Error::CorruptData("head must end in one unit".into()));
    }
    let conv_out = conv.last().map(|c| c.1).unwrap_or(0);
    let side = INPUT_SIDE >> conv.len();
    if conv.first().map(|c| c.0) != Some(1)
        || conv.windows(2).any(|w| w[0].1 != w[1].0)
        || conv_out * side * side != head[0]
    {
        return Err(Error::CorruptData("inconsistent layer sizes".into()));
    }

    let mut rd = Reader { bytes, pos };
    let mut layers = Vec::with_capacity(conv.len());
    for &(i, o) in &conv {
        let weights = rd.take(o * i * 9)?;
        let bias = rd.take(o)?;
        layers.push(ConvLayer {
            in_ch: i,
            out_ch: o,
            weights,
            bias,
        });
    }
    let mut dense = Vec::with_capacity(head.len() - 1);
    for w in head.windows(2) {
        let weights = rd.take(w[0] * w[1])?;
        let bias = rd.take(w[1])?;
        dense.push(Dense {
            inputs: w[0],
            outputs: w[1],
            weights,
            bias,
        });
    }
    let block = &bytes[pos..rd.pos];
    let trailer = std::str::from_utf8(&bytes[rd.pos..])
        .map_err(|_| Error::CorruptData("bad checksum trailer".into()))?;
    let hex = trailer
        .strip_prefix("\ncrc32 ")
        .and_then(|t| t.strip_suffix('\n'))
        .filter(|h| h.len() == 8)
        .ok_or_else(|| Error::CorruptData("bad checksum trailer".into()))?;
    let stored = u32::from_str_radix(hex, 16).map_err(|_| Error::CorruptData("bad checksum trailer".into()))?;
    let computed = crc32fast::hash(block);
    if stored != computed {
        return Err(Error::ChecksumMismatch { stored, computed });
    }
    Ok(RegressionModel {
        extractor: FeatureExtractor { layers, frozen: true },
        head: RegressionHead { layers: dense },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_model() -> RegressionModel {
        RegressionModel {
            extractor: FeatureExtractor::random(3).frozen(),
            head: RegressionHead::random(&[8192, 5, 3], 4).unwrap(),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = small_model();
        let back = decode_model(&encode_model(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn header_layout() {
        let bytes = encode_model(&small_model());
        let text = String::from_utf8_lossy(&bytes[..200]);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(MODEL_MAGIC));
        assert_eq!(
            lines.next(),
            Some("arch input=128x128 conv=1:8,8:16,16:32 kernel=3 pool=2 head=8192:5:3:1 act=relu,relu,sigmoid")
        );
    }

    #[test]
    fn wrong_magic() {
        let mut bytes = encode_model(&small_model());
        bytes[17] = b'2';
        assert!(matches!(decode_model(&bytes), Err(Error::VersionMismatch(_))));
        assert!(matches!(decode_model(b"hello\n"), Err(Error::VersionMismatch(_))));
    }

    #[test]
    fn flipped_weight_byte() {
        let mut bytes = encode_model(&small_model());
        let header = MODEL_MAGIC.len() + 1 + bytes[MODEL_MAGIC.len() + 1..].iter().position(|&b| b == b'\n').unwrap() + 1;
        bytes[header + 1000] ^= 0x10;
        assert!(matches!(decode_model(&bytes), Err(Error::ChecksumMismatch { .. })));
    }

    #[test]
    fn truncated_file() {
        let bytes = encode_model(&small_model());
        assert!(matches!(decode_model(&bytes[..bytes.len() / 2]), Err(Error::CorruptData(_))));
    }
}
