//! Embedding matrices on disk: CSV with a `label` column, and a compact
//! little-endian binary form (`DSMX`, version, rows, cols, f32 values).

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::Real;

const MATRIX_MAGIC: &[u8; 4] = b"DSMX";
const MATRIX_VERSION: u32 = 1;

/// Writes `matrix` as CSV with header `{prefix}0..{prefix}{c-1},label`.
/// Values are written at 32-bit precision; a missing label is an empty field.
pub fn write_labelled_csv<T: Real>(
    path: &Path,
    prefix: &str,
    matrix: ArrayView2<T>,
    labels: Option<&[usize]>,
) -> Result<()> {
    if let Some(l) = labels {
        if l.len() != matrix.nrows() {
            return Err(Error::shape("write_labelled_csv labels", matrix.nrows(), l.len()));
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let header: Vec<String> = (0..matrix.ncols())
        .map(|j| format!("{prefix}{j}"))
        .chain(std::iter::once("label".to_string()))
        .collect();
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    let mut line = String::new();
    for (i, row) in matrix.rows().into_iter().enumerate() {
        line.clear();
        for v in row.iter() {
            line.push_str(&format!("{},", v.as_f64() as f32));
        }
        if let Some(l) = labels {
            line.push_str(&l[i].to_string());
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a CSV matrix with a header row. A column named `label` (if any)
/// becomes the label vector; every other column is a feature.
pub fn read_labelled_csv(path: &Path) -> Result<(Array2<f64>, Option<Vec<usize>>)> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let label_col = headers.iter().position(|h| h.trim() == "label");
    let ncols = headers.len() - usize::from(label_col.is_some());
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut any_label = false;
    let mut nrows = 0;
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        for (j, field) in rec.iter().enumerate() {
            let field = field.trim();
            if Some(j) == label_col {
                if field.is_empty() {
                    labels.push(None);
                } else {
                    any_label = true;
                    labels.push(Some(field.parse::<usize>().map_err(|_| {
                        Error::format("CSV matrix", format!("row {r}: bad label {field:?}"))
                    })?));
                }
            } else {
                values.push(field.parse::<f64>().map_err(|_| {
                    Error::format("CSV matrix", format!("row {r}: bad number {field:?}"))
                })?);
            }
        }
        nrows += 1;
    }
    let matrix = Array2::from_shape_vec((nrows, ncols), values)
        .map_err(|e| Error::format("CSV matrix", e.to_string()))?;
    let labels = if any_label {
        Some(
            labels
                .into_iter()
                .enumerate()
                .map(|(r, l)| {
                    l.ok_or_else(|| Error::format("CSV matrix", format!("row {r}: missing label")))
                })
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    Ok((matrix, labels))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::format(format!("CSV file {}", path.display()), e.to_string())
}

pub fn write_binary_matrix<T: Real>(path: &Path, matrix: ArrayView2<T>) -> Result<()> {
    let mut buf = Vec::with_capacity(20 + 4 * matrix.len());
    buf.extend_from_slice(MATRIX_MAGIC);
    buf.extend_from_slice(&MATRIX_VERSION.to_le_bytes());
    buf.extend_from_slice(&(matrix.nrows() as u64).to_le_bytes());
    buf.extend_from_slice(&(matrix.ncols() as u64).to_le_bytes());
    for v in matrix.iter() {
        buf.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_binary_matrix(path: &Path) -> Result<Array2<f64>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() < 24 || &bytes[..4] != MATRIX_MAGIC {
        return Err(Error::format("binary matrix", "missing DSMX header"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != MATRIX_VERSION {
        return Err(Error::format("binary matrix", format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let body = &bytes[24..];
    if body.len() != rows * cols * 4 {
        return Err(Error::format(
            "binary matrix",
            format!("{rows}x{cols} needs {} bytes, found {}", rows * cols * 4, body.len()),
        ));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(Array2::from_shape_vec((rows, cols), values).expect("length checked"))
}
