//! DTEN: a minimal little-endian container for 2-D numeric matrices.
//!
//! Layout: `DTEN`, version u8 = 1, dtype u8, ndim u8 = 2, pad u8 = 0,
//! rows u64, cols u64, then the row-major payload. dtype 0 is float32,
//! dtype 1 is float64.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"DTEN";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum DType {
    F32 = 0,
    F64 = 1,
}

impl DType {
    fn width(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }
}

/// A decoded matrix. Values are widened to f64; `dtype` records the stored width.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub dtype: DType,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn f64(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len());
        Matrix {
            rows,
            cols,
            dtype: DType::F64,
            data,
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

fn header(dtype: DType, rows: usize, cols: usize) -> [u8; HEADER_LEN] {
    let mut h = [0u8; HEADER_LEN];
    h[..4].copy_from_slice(&MAGIC);
    h[4] = VERSION;
    h[5] = dtype as u8;
    h[6] = 2;
    h[7] = 0;
    h[8..16].copy_from_slice(&(rows as u64).to_le_bytes());
    h[16..24].copy_from_slice(&(cols as u64).to_le_bytes());
    h
}

/// Encodes an f32 matrix.
pub fn encode_f32(rows: usize, cols: usize, data: &[f32]) -> Vec<u8> {
    assert_eq!(rows * cols, data.len());
    let mut out = Vec::with_capacity(HEADER_LEN + data.len() * 4);
    out.extend_from_slice(&header(DType::F32, rows, cols));
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Encodes an f64 matrix.
pub fn encode_f64(rows: usize, cols: usize, data: &[f64]) -> Vec<u8> {
    assert_eq!(rows * cols, data.len());
    let mut out = Vec::with_capacity(HEADER_LEN + data.len() * 8);
    out.extend_from_slice(&header(DType::F64, rows, cols));
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parsed header of one DTEN record.
#[derive(Debug, Clone, Copy)]
pub struct Header {
    pub dtype: DType,
    pub rows: usize,
    pub cols: usize,
}

impl Header {
    pub fn payload_len(&self) -> usize {
        self.rows * self.cols * self.dtype.width()
    }
}

pub fn parse_header(bytes: &[u8], path: &Path) -> Result<Header> {
    if bytes.len() < 4 || bytes[..4] != MAGIC {
        return Err(Error::MagicMismatch {
            path: path.to_path_buf(),
            expected: MAGIC,
            found: bytes[..bytes.len().min(4)].to_vec(),
        });
    }
    let unsupported = |message: String| Error::UnsupportedFormat {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < HEADER_LEN {
        return Err(unsupported(format!(
            "truncated header ({} bytes)",
            bytes.len()
        )));
    }
    if bytes[4] != VERSION {
        return Err(unsupported(format!("version {}", bytes[4])));
    }
    let dtype = match bytes[5] {
        0 => DType::F32,
        1 => DType::F64,
        d => return Err(unsupported(format!("dtype {d}"))),
    };
    if bytes[6] != 2 {
        return Err(unsupported(format!("ndim {}", bytes[6])));
    }
    if bytes[7] != 0 {
        return Err(unsupported(format!("pad byte {}", bytes[7])));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    Ok(Header { dtype, rows, cols })
}

/// Decodes one record from the front of `bytes`, returning it and the bytes consumed.
pub fn decode_prefix(bytes: &[u8], path: &Path) -> Result<(Matrix, usize)> {
    let h = parse_header(bytes, path)?;
    let end = h
        .rows
        .checked_mul(h.cols)
        .and_then(|n| n.checked_mul(h.dtype.width()))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::UnsupportedFormat {
            path: path.to_path_buf(),
            message: "dims overflow".into(),
        })?;
    if bytes.len() < end {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            message: format!("payload truncated: need {end} bytes, have {}", bytes.len()),
        });
    }
    let payload = &bytes[HEADER_LEN..end];
    let data = match h.dtype {
        DType::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        DType::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    };
    Ok((
        Matrix {
            rows: h.rows,
            cols: h.cols,
            dtype: h.dtype,
            data,
        },
        end,
    ))
}

/// Decodes a buffer holding exactly one record.
pub fn decode(bytes: &[u8], path: &Path) -> Result<Matrix> {
    let (m, used) = decode_prefix(bytes, path)?;
    if used != bytes.len() {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            message: format!("{} trailing bytes", bytes.len() - used),
        });
    }
    Ok(m)
}

/// Raw f32 payload of a single-record f32 file, without widening.
pub fn decode_f32_exact(bytes: &[u8], path: &Path) -> Result<(Header, Vec<f32>)> {
    let h = parse_header(bytes, path)?;
    if h.dtype != DType::F32 {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            message: "expected float32 payload".into(),
        });
    }
    let expected = HEADER_LEN + h.payload_len();
    if bytes.len() != expected {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            message: format!("file has {} bytes, header implies {expected}", bytes.len()),
        });
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((h, data))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut buf = Vec::new();
    f.read_to_end(&mut buf).map_err(|e| Error::io(path, e))?;
    Ok(buf)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}
