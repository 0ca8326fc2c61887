//! Matrix and vector files.
//!
//! **CSV**: one matrix row per line, comma separated, no header. Real entries
//! are plain decimal floats; complex entries are written `a+bi` / `a-bi`
//! (e.g. `1.5e0-2.5e-1i`). Values are printed with 17 significant digits so a
//! write/read cycle is lossless. A vector is an `n × 1` matrix.
//!
//! **Binary** (`.pcsm`): a 16-byte little-endian header followed by the
//! entries in row-major order.
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `PCSM`                            |
//! | 4      | 2    | format version (`1`)                    |
//! | 6      | 2    | dtype: `1` = f64, `2` = complex f64     |
//! | 8      | 4    | rows `m` (u32)                          |
//! | 12     | 4    | columns `n` (u32)                       |
//!
//! Each real entry is one f64; each complex entry is two (real, imaginary).

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::{Error, Result, Scalar};

pub const MAGIC: &[u8; 4] = b"PCSM";
pub const FORMAT_VERSION: u16 = 1;
pub const DTYPE_REAL: u16 = 1;
pub const DTYPE_COMPLEX: u16 = 2;

pub fn format_entry<T: Scalar>(v: T) -> String {
    if T::IS_COMPLEX {
        let (re, im) = (v.re(), v.im());
        let sign = if im.is_sign_negative() { '-' } else { '+' };
        format!("{re:.16e}{sign}{:.16e}i", im.abs())
    } else {
        format!("{:.16e}", v.re())
    }
}

pub fn parse_entry<T: Scalar>(field: &str) -> Option<T> {
    let s = field.trim();
    let (re, im) = match s.strip_suffix('i') {
        None => (s.parse::<f64>().ok()?, 0.0),
        Some(body) => {
            // the split point is the last sign that does not belong to an exponent
            let bytes = body.as_bytes();
            let pos = (1..bytes.len())
                .rev()
                .find(|&p| matches!(bytes[p], b'+' | b'-') && !matches!(bytes[p - 1], b'e' | b'E'));
            match pos {
                Some(p) => (body[..p].parse().ok()?, body[p..].parse().ok()?),
                None => (0.0, body.parse().ok()?),
            }
        }
    };
    T::try_from_parts(re, im)
}

pub fn write_matrix_csv<T: Scalar>(path: impl AsRef<Path>, mat: &DMatrix<T>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for i in 0..mat.nrows() {
        let line: Vec<String> = mat.row(i).iter().map(|&v| format_entry(v)).collect();
        writeln!(w, "{}", line.join(",")).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_matrix_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<DMatrix<T>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<T>> = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                parse_entry::<T>(f)
                    .ok_or_else(|| Error::format(path, format!("line {}: cannot parse entry {f:?}", lineno + 1)))
            })
            .collect::<Result<Vec<T>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::format(
                    path,
                    format!(
                        "line {}: expected {} fields, found {}",
                        lineno + 1,
                        first.len(),
                        row.len()
                    ),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::format(path, "empty matrix"));
    }
    let (m, n) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(m, n, |i, j| rows[i][j]))
}

pub fn write_matrix_bin<T: Scalar>(path: impl AsRef<Path>, mat: &DMatrix<T>) -> Result<()> {
    let path = path.as_ref();
    let (m, n) = mat.shape();
    let dims = u32::try_from(m)
        .and_then(|m| u32::try_from(n).map(|n| (m, n)))
        .map_err(|_| Error::invalid("matrix too large for the binary format"))?;
    let mut buf = Vec::with_capacity(16 + m * n * if T::IS_COMPLEX { 16 } else { 8 });
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let dtype = if T::IS_COMPLEX { DTYPE_COMPLEX } else { DTYPE_REAL };
    buf.extend_from_slice(&dtype.to_le_bytes());
    buf.extend_from_slice(&dims.0.to_le_bytes());
    buf.extend_from_slice(&dims.1.to_le_bytes());
    for i in 0..m {
        for j in 0..n {
            let v = mat[(i, j)];
            buf.extend_from_slice(&v.re().to_le_bytes());
            if T::IS_COMPLEX {
                buf.extend_from_slice(&v.im().to_le_bytes());
            }
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_matrix_bin<T: Scalar>(path: impl AsRef<Path>) -> Result<DMatrix<T>> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(Error::format(path, "missing PCSM header"));
    }
    let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u16_at(4);
    if version != FORMAT_VERSION {
        return Err(Error::format(path, format!("unsupported version {version}")));
    }
    let dtype = u16_at(6);
    let width = match dtype {
        DTYPE_REAL => 1,
        DTYPE_COMPLEX => 2,
        other => return Err(Error::format(path, format!("unknown dtype {other}"))),
    };
    if dtype == DTYPE_COMPLEX && !T::IS_COMPLEX {
        return Err(Error::format(path, "complex file read as a real matrix"));
    }
    let (m, n) = (u32_at(8) as usize, u32_at(12) as usize);
    let expected = 16 + m * n * width * 8;
    if bytes.len() != expected {
        return Err(Error::format(
            path,
            format!("expected {expected} bytes for a {m}x{n} matrix, found {}", bytes.len()),
        ));
    }
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    Ok(DMatrix::from_fn(m, n, |i, j| {
        let o = 16 + (i * n + j) * width * 8;
        let im = if width == 2 { f64_at(o + 8) } else { 0.0 };
        T::try_from_parts(f64_at(o), im).expect("dtype checked above")
    }))
}

/// Reads either format, chosen by the `.pcsm` extension.
pub fn read_matrix<T: Scalar>(path: impl AsRef<Path>) -> Result<DMatrix<T>> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "pcsm") {
        read_matrix_bin(path)
    } else {
        read_matrix_csv(path)
    }
}

pub fn write_matrix<T: Scalar>(path: impl AsRef<Path>, mat: &DMatrix<T>) -> Result<()> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "pcsm") {
        write_matrix_bin(path, mat)
    } else {
        write_matrix_csv(path, mat)
    }
}
