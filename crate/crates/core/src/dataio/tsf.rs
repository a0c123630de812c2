//! TSF feature-matrix files.
//!
//! Layout (all little-endian):
//!
//! | offset | size      | field                                   |
//! |--------|-----------|-----------------------------------------|
//! | 0      | 4         | magic `TSF1`                            |
//! | 4      | 4         | `n`, u32, features per frame             |
//! | 8      | 4         | `k`, u32, frame count                    |
//! | 12     | `4 n k`   | f32 payload, frame-major                 |
//!
//! Frame `t`'s `n` values are contiguous, so a per-frame extractor can append
//! frames and patch `k` when it closes the file.

use std::fs::File;
use std::io::{BufWriter, Seek, SeekFrom, Write};
use std::path::Path;

use crate::encoder::TimeSeriesMatrix;
use crate::error::{Error, Result};

pub const TSF_MAGIC: [u8; 4] = *b"TSF1";
pub const TSF_HEADER_LEN: usize = 12;

/// Streaming writer: frames are appended one at a time and `k` is written on
/// [`TsfWriter::finish`].
pub struct TsfWriter<W: Write + Seek> {
    inner: W,
    n: usize,
    frames: u32,
}

impl<W: Write + Seek> TsfWriter<W> {
    pub fn new(mut inner: W, n: usize) -> std::io::Result<Self> {
        let n32 =
            u32::try_from(n).map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidInput, "n exceeds u32"))?;
        inner.write_all(&TSF_MAGIC)?;
        inner.write_all(&n32.to_le_bytes())?;
        inner.write_all(&0u32.to_le_bytes())?;
        Ok(Self { inner, n, frames: 0 })
    }

    /// Appends one frame descriptor of length `n`.
    pub fn push_frame(&mut self, frame: &[f64]) -> Result<()> {
        if frame.len() != self.n {
            return Err(Error::LengthMismatch { left: self.n, right: frame.len() });
        }
        let mut buf = Vec::with_capacity(4 * self.n);
        for (index, &v) in frame.iter().enumerate() {
            let single = v as f32;
            if !single.is_finite() {
                return Err(Error::NonFinite { index });
            }
            buf.extend_from_slice(&single.to_le_bytes());
        }
        self.inner.write_all(&buf).map_err(|e| Error::io("<tsf>", e))?;
        self.frames += 1;
        Ok(())
    }

    /// Patches the frame count into the header and returns the underlying writer.
    pub fn finish(mut self) -> std::io::Result<W> {
        self.inner.seek(SeekFrom::Start(8))?;
        self.inner.write_all(&self.frames.to_le_bytes())?;
        self.inner.seek(SeekFrom::End(0))?;
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Serialises a matrix to TSF bytes.
pub fn encode_tsf(matrix: &TimeSeriesMatrix) -> Result<Vec<u8>> {
    let mut writer =
        TsfWriter::new(std::io::Cursor::new(Vec::new()), matrix.n()).map_err(|e| Error::io("<memory>", e))?;
    for t in 0..matrix.k() {
        writer.push_frame(&matrix.frame(t))?;
    }
    Ok(writer.finish().map_err(|e| Error::io("<memory>", e))?.into_inner())
}

pub fn write_tsf(matrix: &TimeSeriesMatrix, path: &Path) -> Result<()> {
    // encode first so a non-finite value never leaves a partial file behind
    let bytes = encode_tsf(matrix).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    out.write_all(&bytes).and_then(|_| out.flush()).map_err(|e| Error::io(path, e))
}

/// Parses TSF bytes; `origin` only labels error messages.
pub fn decode_tsf(bytes: &[u8], origin: &Path) -> Result<TimeSeriesMatrix> {
    if bytes.len() < TSF_HEADER_LEN {
        return Err(Error::format(
            origin,
            format!("size mismatch: {} bytes is shorter than the 12-byte header", bytes.len()),
        ));
    }
    if bytes[..4] != TSF_MAGIC {
        return Err(Error::format(
            origin,
            format!("bad magic {:?}, expected \"TSF1\"", String::from_utf8_lossy(&bytes[..4])),
        ));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let k = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = TSF_HEADER_LEN as u64 + 4 * n as u64 * k as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::format(
            origin,
            format!("size mismatch: header n={n}, k={k} implies {expected} bytes, file has {}", bytes.len()),
        ));
    }
    if n == 0 || k < 2 {
        return Err(Error::format(origin, format!("degenerate matrix n={n}, k={k} (need n >= 1, k >= 2)")));
    }

    let mut data = vec![0.0f64; n * k];
    for (pos, chunk) in bytes[TSF_HEADER_LEN..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::format(
                origin,
                format!("non-finite payload value at frame {}, feature {}", pos / n, pos % n),
            ));
        }
        let (t, i) = (pos / n, pos % n);
        data[i * k + t] = f64::from(v);
    }
    TimeSeriesMatrix::from_row_major(n, k, data)
}

pub fn read_tsf(path: &Path) -> Result<TimeSeriesMatrix> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tsf(&bytes, path)
}
