//! Matrix fixture formats.
//!
//! Text: a header line `rows cols`, then one line per row of
//! whitespace-separated decimals printed with 17 significant digits.
//! Binary: little-endian `u64` rows, `u64` cols, then `rows·cols` `f64`
//! values in column-major order.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub fn write_text<W: Write>(m: &Matrix, mut w: W) -> Result<()> {
    writeln!(w, "{} {}", m.rows(), m.cols())?;
    for i in 0..m.rows() {
        let line: Vec<String> = (0..m.cols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn read_text<R: Read>(r: R) -> Result<Matrix> {
    let mut lines = BufReader::new(r).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("missing header line".into()))??;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse(format!("bad header {header:?}: {e}")))?;
    let [rows, cols] = dims[..] else {
        return Err(Error::Parse(format!("header must be `rows cols`, got {header:?}")));
    };
    let mut values = Vec::with_capacity(rows * cols);
    for line in lines {
        for tok in line?.split_whitespace() {
            values.push(
                tok.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad entry {tok:?}: {e}")))?,
            );
        }
    }
    if values.len() != rows * cols {
        return Err(Error::Parse(format!(
            "expected {} entries, found {}",
            rows * cols,
            values.len()
        )));
    }
    Matrix::from_row_major(rows, cols, &values)
}

pub fn write_binary<W: Write>(m: &Matrix, mut w: W) -> Result<()> {
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for x in m.as_slice() {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<Matrix> {
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Parse(format!("dimensions {rows}x{cols} overflow")))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != len * 8 {
        return Err(Error::Parse(format!(
            "expected {} payload bytes, found {}",
            len * 8,
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Matrix::from_col_major(rows, cols, data)
}

/// Fixture file encoding, chosen by extension when reading (`.bin` is binary).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Text,
    Binary,
}

impl MatrixFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => MatrixFormat::Binary,
            _ => MatrixFormat::Text,
        }
    }
}

pub fn save(m: &Matrix, path: &Path, format: MatrixFormat) -> Result<()> {
    let file = std::io::BufWriter::new(fs::File::create(path)?);
    match format {
        MatrixFormat::Text => write_text(m, file),
        MatrixFormat::Binary => write_binary(m, file),
    }
}

pub fn load(path: &Path) -> Result<Matrix> {
    let file = fs::File::open(path)?;
    match MatrixFormat::from_path(path) {
        MatrixFormat::Text => read_text(file),
        MatrixFormat::Binary => read_binary(std::io::BufReader::new(file)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn text_layout_is_row_major() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [3.0, 0.1]]).unwrap();
        let mut buf = Vec::new();
        write_text(&m, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("2 2"));
        assert!(lines.next().unwrap().starts_with("1.0000000000000000e0 2."));
    }

    #[test]
    fn binary_layout_is_little_endian_column_major() {
        let m = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let mut buf = Vec::new();
        write_binary(&m, &mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 16);
        assert_eq!(&buf[..8], &1u64.to_le_bytes());
        assert_eq!(&buf[8..16], &2u64.to_le_bytes());
        assert_eq!(&buf[16..24], &1.0f64.to_le_bytes());
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        assert!(read_text("2 2\n1 2 3\n".as_bytes()).is_err());
        assert!(read_text("2\n1 2\n".as_bytes()).is_err());
        assert!(read_text("1 1\nnan\n".as_bytes()).is_err());
        assert!(read_binary(&[0u8; 7][..]).is_err());
    }

    proptest! {
        #[test]
        fn both_formats_are_lossless(
            rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()
        ) {
            let mut s = seed;
            let m = Matrix::from_fn(rows, cols, |_, _| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 1e3
            });
            let mut t = Vec::new();
            write_text(&m, &mut t).unwrap();
            prop_assert_eq!(read_text(&t[..]).unwrap(), m.clone());
            let mut b = Vec::new();
            write_binary(&m, &mut b).unwrap();
            prop_assert_eq!(read_binary(&b[..]).unwrap(), m);
        }
    }
}
