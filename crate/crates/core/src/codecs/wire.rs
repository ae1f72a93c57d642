//! Binary layout of a [`CompressedMessage`], used to verify ledger entries.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! tag: u8 | dim: u32 | scale: f64 | payload
//! ```
//!
//! | tag | kind    | payload                                               |
//! |-----|---------|-------------------------------------------------------|
//! | 0   | ternary | ⌈dim/4⌉ bytes, 2-bit trits LSB first (00=0, 01=+1, 10=−1) |
//! | 1   | quant   | levels: u32, then dim × i32 signed level              |
//! | 2   | sparse  | nnz: u32, then nnz × (index: u32, value: f64)         |
//! | 3   | dense   | dim × f64                                             |
//!
//! Sparse and dense frames carry `scale = 0.0`. Unused padding bits must be
//! zero and trailing bytes are rejected.

use crate::codecs::{CompressedMessage, QuantMessage, SparseMessage, TernaryMessage};
use crate::error::{Error, Result};
use crate::vecmath::DenseVector;

const TAG_TERNARY: u8 = 0;
const TAG_QUANT: u8 = 1;
const TAG_SPARSE: u8 = 2;
const TAG_DENSE: u8 = 3;

pub fn encode_message(msg: &CompressedMessage) -> Vec<u8> {
    let mut out = Vec::new();
    let (tag, scale) = match msg {
        CompressedMessage::Ternary(m) => (TAG_TERNARY, m.scale()),
        CompressedMessage::Quant(m) => (TAG_QUANT, m.scale()),
        CompressedMessage::Sparse(_) => (TAG_SPARSE, 0.0),
        CompressedMessage::Dense(_) => (TAG_DENSE, 0.0),
    };
    out.push(tag);
    out.extend_from_slice(&(msg.dim() as u32).to_le_bytes());
    out.extend_from_slice(&scale.to_le_bytes());
    match msg {
        CompressedMessage::Ternary(m) => {
            for chunk in m.trits().chunks(4) {
                let mut byte = 0u8;
                for (i, &t) in chunk.iter().enumerate() {
                    let code = match t {
                        1 => 0b01,
                        -1 => 0b10,
                        _ => 0b00,
                    };
                    byte |= code << (2 * i);
                }
                out.push(byte);
            }
        }
        CompressedMessage::Quant(m) => {
            out.extend_from_slice(&m.levels().to_le_bytes());
            for c in m.codes() {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        CompressedMessage::Sparse(m) => {
            out.extend_from_slice(&(m.nnz() as u32).to_le_bytes());
            for &(i, v) in m.entries() {
                out.extend_from_slice(&i.to_le_bytes());
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        CompressedMessage::Dense(v) => {
            for x in v.iter() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::decode("truncated message"));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// Fails unless at least `count * width` bytes remain, before allocating.
    fn expect_at_least(&self, count: usize, width: usize) -> Result<()> {
        match count.checked_mul(width) {
            Some(n) if n <= self.buf.len() => Ok(()),
            _ => Err(Error::decode("declared length exceeds the buffer")),
        }
    }
}

pub fn decode_message(bytes: &[u8]) -> Result<CompressedMessage> {
    let mut r = Reader { buf: bytes };
    let tag = r.u8()?;
    let dim = r.u32()? as usize;
    let scale = r.f64()?;
    if dim == 0 {
        return Err(Error::EmptyVector);
    }
    let msg = match tag {
        TAG_TERNARY => {
            let packed = r.take(dim.div_ceil(4))?;
            let mut trits = Vec::with_capacity(dim);
            for (i, &byte) in packed.iter().enumerate() {
                for slot in 0..4 {
                    let code = (byte >> (2 * slot)) & 0b11;
                    if i * 4 + slot >= dim {
                        if code != 0 {
                            return Err(Error::decode("nonzero padding bits"));
                        }
                        continue;
                    }
                    trits.push(match code {
                        0b00 => 0,
                        0b01 => 1,
                        0b10 => -1,
                        _ => return Err(Error::decode("invalid trit code")),
                    });
                }
            }
            CompressedMessage::Ternary(TernaryMessage::new(scale, trits)?)
        }
        TAG_QUANT => {
            let levels = r.u32()?;
            r.expect_at_least(dim, 4)?;
            let codes = (0..dim).map(|_| r.i32()).collect::<Result<Vec<_>>>()?;
            CompressedMessage::Quant(QuantMessage::new(scale, levels, codes)?)
        }
        TAG_SPARSE => {
            if scale != 0.0 {
                return Err(Error::decode("sparse frames carry a zero scale"));
            }
            let nnz = r.u32()? as usize;
            r.expect_at_least(nnz, 12)?;
            let entries = (0..nnz).map(|_| Ok((r.u32()?, r.f64()?))).collect::<Result<Vec<_>>>()?;
            CompressedMessage::Sparse(SparseMessage::new(dim, entries)?)
        }
        TAG_DENSE => {
            if scale != 0.0 {
                return Err(Error::decode("dense frames carry a zero scale"));
            }
            r.expect_at_least(dim, 8)?;
            let values = (0..dim).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            CompressedMessage::Dense(DenseVector::new(values)?)
        }
        other => return Err(Error::decode(format!("unknown message tag {other}"))),
    };
    if !r.buf.is_empty() {
        return Err(Error::decode("trailing bytes after message"));
    }
    Ok(msg)
}
