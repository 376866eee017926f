//! IDX container format (MNIST family). Headers are big-endian:
//! images = magic 0x00000803, count, rows, cols, then `count*rows*cols` bytes;
//! labels = magic 0x00000801, count, then `count` bytes.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    /// Row-major pixels, image after image.
    pub pixels: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxLabels {
    pub labels: Vec<u8>,
}

fn be_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::format(what, format!("truncated header ({} bytes)", bytes.len())))
}

impl IdxImages {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let magic = be_u32(bytes, 0, "IDX image file")?;
        if magic != IMAGES_MAGIC {
            return Err(Error::format(
                "IDX image file",
                format!("bad magic number {magic:#010x}, expected {IMAGES_MAGIC:#010x}"),
            ));
        }
        let count = be_u32(bytes, 4, "IDX image file")? as usize;
        let rows = be_u32(bytes, 8, "IDX image file")? as usize;
        let cols = be_u32(bytes, 12, "IDX image file")? as usize;
        let expected = count
            .checked_mul(rows)
            .and_then(|v| v.checked_mul(cols))
            .ok_or_else(|| Error::format("IDX image file", "header dimensions overflow"))?;
        let body = &bytes[16..];
        if body.len() != expected {
            return Err(Error::format(
                "IDX image file",
                format!("expected {expected} pixel bytes, found {}", body.len()),
            ));
        }
        Ok(IdxImages {
            count,
            rows,
            cols,
            pixels: body.to_vec(),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.pixels.len());
        out.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
        out.extend_from_slice(&(self.count as u32).to_be_bytes());
        out.extend_from_slice(&(self.rows as u32).to_be_bytes());
        out.extend_from_slice(&(self.cols as u32).to_be_bytes());
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn dim(&self) -> usize {
        self.rows * self.cols
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let d = self.dim();
        &self.pixels[i * d..(i + 1) * d]
    }

    /// Swaps rows and columns of every image. EMNIST ships its images
    /// transposed relative to MNIST.
    pub fn transposed(&self) -> Self {
        let (r, c) = (self.rows, self.cols);
        let mut pixels = vec![0u8; self.pixels.len()];
        for n in 0..self.count {
            let src = self.image(n);
            let dst = &mut pixels[n * r * c..(n + 1) * r * c];
            for i in 0..r {
                for j in 0..c {
                    dst[j * r + i] = src[i * c + j];
                }
            }
        }
        IdxImages {
            count: self.count,
            rows: c,
            cols: r,
            pixels,
        }
    }
}

impl IdxLabels {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let magic = be_u32(bytes, 0, "IDX label file")?;
        if magic != LABELS_MAGIC {
            return Err(Error::format(
                "IDX label file",
                format!("bad magic number {magic:#010x}, expected {LABELS_MAGIC:#010x}"),
            ));
        }
        let count = be_u32(bytes, 4, "IDX label file")? as usize;
        let body = &bytes[8..];
        if body.len() != count {
            return Err(Error::format(
                "IDX label file",
                format!("expected {count} label bytes, found {}", body.len()),
            ));
        }
        Ok(IdxLabels {
            labels: body.to_vec(),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.labels.len());
        out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
        out.extend_from_slice(&(self.labels.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.labels);
        out
    }
}

/// Reads a whole file, gunzipping when the name ends in `.gz`.
pub fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    let gz = path.extension().is_some_and(|e| e == "gz");
    if gz {
        GzDecoder::new(file)
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io(path, e))?;
    } else {
        file.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    }
    Ok(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_images() -> IdxImages {
        IdxImages {
            count: 2,
            rows: 2,
            cols: 3,
            pixels: vec![0, 1, 2, 3, 4, 5, 255, 254, 253, 252, 251, 250],
        }
    }

    #[test]
    fn empty_input_is_format_error() {
        assert!(matches!(IdxImages::parse(&[]), Err(Error::Format { .. })));
        assert!(matches!(IdxLabels::parse(&[]), Err(Error::Format { .. })));
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let mut bytes = tiny_images().to_bytes();
        bytes[3] = 0x01;
        assert!(matches!(IdxImages::parse(&bytes), Err(Error::Format { .. })));
        let labels = IdxLabels { labels: vec![1, 2] }.to_bytes();
        assert!(IdxImages::parse(&labels).is_err());
    }

    #[test]
    fn truncated_body_is_rejected() {
        let bytes = tiny_images().to_bytes();
        assert!(IdxImages::parse(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn transpose_swaps_axes() {
        let t = tiny_images().transposed();
        assert_eq!((t.rows, t.cols), (3, 2));
        assert_eq!(t.image(0), &[0, 3, 1, 4, 2, 5]);
        assert_eq!(t.transposed(), tiny_images());
    }

    #[test]
    fn gz_is_transparent() {
        use flate2::write::GzEncoder;
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();
        let raw = tiny_images().to_bytes();
        let path = dir.path().join("imgs.idx3.gz");
        let mut enc = GzEncoder::new(File::create(&path).unwrap(), flate2::Compression::default());
        enc.write_all(&raw).unwrap();
        enc.finish().unwrap();
        assert_eq!(read_maybe_gz(&path).unwrap(), raw);
    }
}
