use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const CAPM_MAGIC: [u8; 4] = *b"CAPM";
pub const CAPM_VERSION: u32 = 1;

/// Every entry as `row,col,value`, row-major.
pub fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["row", "col", "value"])?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            w.write_record([i.to_string(), j.to_string(), m[(i, j)].to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Binary export: `"CAPM"`, version, rows and columns as little-endian `u32`,
/// then the entries row-major as little-endian `f64`.
pub fn write_capm<W: Write>(m: &DMatrix<f64>, mut writer: W) -> Result<()> {
    let dim = |n: usize| {
        u32::try_from(n).map_err(|_| Error::InvalidArgument(format!("matrix dimension {n} exceeds u32")))
    };
    let mut buf = Vec::with_capacity(16 + 8 * m.len());
    buf.extend_from_slice(&CAPM_MAGIC);
    buf.extend_from_slice(&CAPM_VERSION.to_le_bytes());
    buf.extend_from_slice(&dim(m.nrows())?.to_le_bytes());
    buf.extend_from_slice(&dim(m.ncols())?.to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            buf.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    writer.write_all(&buf)?;
    Ok(())
}

pub fn read_capm<R: Read>(mut reader: R) -> Result<DMatrix<f64>> {
    let mut header = [0u8; 16];
    reader.read_exact(&mut header)?;
    if header[..4] != CAPM_MAGIC {
        return Err(Error::InvalidArgument("missing CAPM magic".into()));
    }
    let word = |k: usize| u32::from_le_bytes(header[4 * k..4 * k + 4].try_into().unwrap());
    if word(1) != CAPM_VERSION {
        return Err(Error::Unsupported(format!("CAPM version {}", word(1))));
    }
    let (rows, cols) = (word(2) as usize, word(3) as usize);
    let mut data = vec![0u8; 8 * rows * cols];
    reader.read_exact(&mut data)?;
    let values: Vec<f64> = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}
