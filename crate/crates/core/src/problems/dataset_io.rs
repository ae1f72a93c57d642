//! Binary export/import of synthetic datasets for reuse across runs.
//!
//! All fields are little-endian.
//!
//! ```text
//! magic "TNGD" | version: u8 | n: u64 | d: u64 | c_sk: f64 | c_th: f64 | seed: u64
//! features: n·d × f64 (row-major) | labels: n × i8
//! ```
//!
//! Imported datasets carry no provenance; regenerate from the header
//! parameters when `B̄` or `w̄` are needed.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::problems::logreg::{validate_generator, SyntheticDataset};

const MAGIC: &[u8; 4] = b"TNGD";
const VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 8 + 8 + 8 + 8 + 8;

pub fn encode_dataset(ds: &SyntheticDataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + ds.features.len() * 8 + ds.labels.len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(ds.n as u64).to_le_bytes());
    out.extend_from_slice(&(ds.d as u64).to_le_bytes());
    out.extend_from_slice(&ds.c_sk.to_le_bytes());
    out.extend_from_slice(&ds.c_th.to_le_bytes());
    out.extend_from_slice(&ds.seed.to_le_bytes());
    for x in &ds.features {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out.extend(ds.labels.iter().map(|&l| l as u8));
    out
}

fn field<const N: usize>(bytes: &[u8], at: usize) -> [u8; N] {
    bytes[at..at + N].try_into().unwrap()
}

pub fn decode_dataset(bytes: &[u8]) -> Result<SyntheticDataset> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::decode("truncated dataset header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::decode("not a dataset file"));
    }
    if bytes[4] != VERSION {
        return Err(Error::decode(format!("unsupported dataset version {}", bytes[4])));
    }
    let n = u64::from_le_bytes(field(bytes, 5));
    let d = u64::from_le_bytes(field(bytes, 13));
    let c_sk = f64::from_le_bytes(field(bytes, 21));
    let c_th = f64::from_le_bytes(field(bytes, 29));
    let seed = u64::from_le_bytes(field(bytes, 37));

    let body = (|| {
        let n = usize::try_from(n).ok()?;
        let d = usize::try_from(d).ok()?;
        let cells = n.checked_mul(d)?;
        Some((n, d, cells, cells.checked_mul(8)?.checked_add(n)?))
    })();
    let Some((n, d, cells, body_len)) = body else {
        return Err(Error::decode("dataset dimensions overflow"));
    };
    if bytes.len() - HEADER_LEN != body_len {
        return Err(Error::decode(format!(
            "dataset body is {} bytes, header implies {body_len}",
            bytes.len() - HEADER_LEN
        )));
    }
    validate_generator(n, d, c_sk, c_th).map_err(|e| Error::decode(e.to_string()))?;

    let feature_bytes = &bytes[HEADER_LEN..HEADER_LEN + cells * 8];
    let mut features = Vec::with_capacity(cells);
    for chunk in feature_bytes.chunks_exact(8) {
        let x = f64::from_le_bytes(chunk.try_into().unwrap());
        if !x.is_finite() {
            return Err(Error::decode("non-finite feature value"));
        }
        features.push(x);
    }
    let labels = bytes[HEADER_LEN + cells * 8..]
        .iter()
        .map(|&b| match b as i8 {
            l @ (1 | -1) => Ok(l),
            other => Err(Error::decode(format!("label {other} is not ±1"))),
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SyntheticDataset {
        n,
        d,
        c_sk,
        c_th,
        seed,
        features,
        labels,
        provenance: None,
    })
}

pub fn write_dataset(path: &Path, ds: &SyntheticDataset) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(&encode_dataset(ds))?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<SyntheticDataset> {
    decode_dataset(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::logreg::gen_synthetic;

    fn strip(mut ds: SyntheticDataset) -> SyntheticDataset {
        ds.provenance = None;
        ds
    }

    #[test]
    fn round_trip_through_file() {
        let ds = gen_synthetic(13, 5, 0.25, 0.6, 77).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.bin");
        write_dataset(&path, &ds).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(back, strip(ds));
    }

    #[test]
    fn rejects_corruption() {
        let ds = gen_synthetic(3, 2, 1.0, 0.5, 1).unwrap();
        let bytes = encode_dataset(&ds);
        assert!(decode_dataset(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(1);
        assert!(decode_dataset(&extra).is_err());
        let mut bad_label = bytes.clone();
        *bad_label.last_mut().unwrap() = 0;
        assert!(decode_dataset(&bad_label).is_err());
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(decode_dataset(&bad_magic).is_err());
        let mut huge = bytes[..HEADER_LEN].to_vec();
        huge[5..13].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(decode_dataset(&huge).is_err());
        let mut bad_skew = bytes;
        bad_skew[21..29].copy_from_slice(&2.0f64.to_le_bytes());
        assert!(decode_dataset(&bad_skew).is_err());
    }
}
