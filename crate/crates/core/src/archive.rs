//! On-disk formats: the `WMAT` weight container and the `SWSC` archive.
//!
//! Both are little-endian with fixed-size headers.
//!
//! `WMAT` (32-byte header):
//!
//! | offset | size | field                                  |
//! |--------|------|----------------------------------------|
//! | 0      | 4    | magic `WMAT`                           |
//! | 4      | 4    | version (u32) = 1                      |
//! | 8      | 8    | rows (u64)                             |
//! | 16     | 8    | cols (u64)                             |
//! | 24     | 1    | dtype: 0 = f32, 1 = f16                |
//! | 25     | 7    | zero padding                           |
//! | 32     | ..   | rows·cols values, row-major            |
//!
//! `SWSC` (48-byte header):
//!
//! | offset | size | field                                  |
//! |--------|------|----------------------------------------|
//! | 0      | 4    | magic `SWSC`                           |
//! | 4      | 4    | version (u32) = 1                      |
//! | 8      | 8    | rows (u64)                             |
//! | 16     | 8    | cols (u64)                             |
//! | 24     | 4    | k (u32)                                |
//! | 28     | 4    | r (u32)                                |
//! | 32     | 1    | value dtype: 0 = f32, 1 = f16          |
//! | 33     | 1    | label width: 1 = u16                   |
//! | 34     | 6    | zero padding                           |
//! | 40     | 8    | seed (u64)                             |
//! | 48     | ..   | labels: cols × u16                     |
//! |        | ..   | centroids: k·rows values, one centroid after another |
//! |        | ..   | a factor: rows·r values, row-major     |
//! |        | ..   | b factor: r·cols values, row-major     |
//! |        | ..   | singular values: r × f32               |

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use half::f16;

use crate::compressor::{ChannelClustering, CompressedWeight, LowRankFactors, StoragePrecision};
use crate::error::{Result, SwscError};
use crate::linalg::WeightMatrix;

pub const WEIGHT_MAGIC: [u8; 4] = *b"WMAT";
pub const ARCHIVE_MAGIC: [u8; 4] = *b"SWSC";
pub const FORMAT_VERSION: u32 = 1;
pub const WEIGHT_HEADER_LEN: usize = 32;
pub const ARCHIVE_HEADER_LEN: usize = 48;
pub const LABEL_WIDTH_U16: u8 = 1;
pub const MAX_CLUSTERS: usize = u16::MAX as usize;

/// Element encoding of a value section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dtype {
    F32,
    F16,
}

impl Dtype {
    pub fn code(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::F16 => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Dtype> {
        match code {
            0 => Some(Dtype::F32),
            1 => Some(Dtype::F16),
            _ => None,
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F16 => 2,
        }
    }
}

impl From<StoragePrecision> for Dtype {
    fn from(p: StoragePrecision) -> Self {
        match p {
            StoragePrecision::F32 => Dtype::F32,
            StoragePrecision::F16 => Dtype::F16,
        }
    }
}

impl From<Dtype> for StoragePrecision {
    fn from(d: Dtype) -> Self {
        match d {
            Dtype::F32 => StoragePrecision::F32,
            Dtype::F16 => StoragePrecision::F16,
        }
    }
}

fn push_values(out: &mut Vec<u8>, values: &[f64], dtype: Dtype) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        match dtype {
            Dtype::F32 => {
                let x = v as f32;
                if !x.is_finite() {
                    return Err(SwscError::param(format!("value {v} at index {i} overflows f32")));
                }
                out.extend_from_slice(&x.to_le_bytes());
            }
            Dtype::F16 => {
                let x = f16::from_f64(v);
                if !x.is_finite() {
                    return Err(SwscError::param(format!("value {v} at index {i} overflows f16")));
                }
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    Ok(())
}

/// Bounds-checked little-endian reader over a byte buffer.
struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(SwscError::format(
                self.pos as u64,
                format!(
                    "truncated {what}: need {n} bytes, {} left",
                    self.bytes.len() - self.pos
                ),
            )),
        }
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn values(&mut self, count: usize, dtype: Dtype, what: &str) -> Result<Vec<f64>> {
        let start = self.pos;
        let raw = self.take(count * dtype.size(), what)?;
        let values: Vec<f64> = match dtype {
            Dtype::F32 => raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                .collect(),
            Dtype::F16 => raw
                .chunks_exact(2)
                .map(|c| f16::from_le_bytes(c.try_into().unwrap()).to_f64())
                .collect(),
        };
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SwscError::format(
                (start + i * dtype.size()) as u64,
                format!("non-finite value in {what}"),
            ));
        }
        Ok(values)
    }

    fn offset(&self) -> u64 {
        self.pos as u64
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(SwscError::integrity(format!(
                "{} trailing bytes after offset {}",
                self.bytes.len() - self.pos,
                self.pos
            )));
        }
        Ok(())
    }
}

fn expect_magic(r: &mut Reader<'_>, magic: [u8; 4]) -> Result<()> {
    let got = r.take(4, "magic")?;
    if got != magic {
        return Err(SwscError::format(
            0,
            format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(got),
                String::from_utf8_lossy(&magic)
            ),
        ));
    }
    let at = r.offset();
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(SwscError::format(at, format!("unsupported version {version}")));
    }
    Ok(())
}

fn expect_zero_padding(r: &mut Reader<'_>, len: usize) -> Result<()> {
    let at = r.offset();
    if r.take(len, "padding")?.iter().any(|&b| b != 0) {
        return Err(SwscError::format(at, "non-zero padding"));
    }
    Ok(())
}

fn dtype_at(r: &mut Reader<'_>) -> Result<Dtype> {
    let at = r.offset();
    let code = r.u8("dtype")?;
    Dtype::from_code(code).ok_or_else(|| SwscError::format(at, format!("unknown dtype code {code}")))
}

fn dim_to_usize(v: u64, at: u64, what: &str) -> Result<usize> {
    usize::try_from(v).map_err(|_| SwscError::format(at, format!("{what} {v} does not fit in memory")))
}

pub fn encode_weight(w: &WeightMatrix, dtype: Dtype) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(WEIGHT_HEADER_LEN + w.values().len() * dtype.size());
    out.extend_from_slice(&WEIGHT_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(w.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(w.cols() as u64).to_le_bytes());
    out.push(dtype.code());
    out.extend_from_slice(&[0u8; 7]);
    push_values(&mut out, w.values(), dtype)?;
    Ok(out)
}

pub fn decode_weight(bytes: &[u8]) -> Result<(WeightMatrix, Dtype)> {
    let mut r = Reader::new(bytes);
    expect_magic(&mut r, WEIGHT_MAGIC)?;
    let rows_at = r.offset();
    let rows = dim_to_usize(r.u64("rows")?, rows_at, "rows")?;
    let cols = dim_to_usize(r.u64("cols")?, rows_at + 8, "cols")?;
    if rows == 0 || cols == 0 {
        return Err(SwscError::format(rows_at, format!("empty matrix {rows}x{cols}")));
    }
    let dtype = dtype_at(&mut r)?;
    expect_zero_padding(&mut r, 7)?;

    let payload = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(dtype.size()))
        .ok_or_else(|| SwscError::format(rows_at, "dimensions overflow"))?;
    let remaining = bytes.len() - r.pos;
    if payload > remaining {
        return Err(SwscError::format(
            r.offset(),
            format!("truncated payload: header declares {payload} bytes, file has {remaining}"),
        ));
    }
    let values = r.values(rows * cols, dtype, "payload")?;
    r.finish()?;
    let w = WeightMatrix::new(rows, cols, values)
        .map_err(|e| SwscError::format(WEIGHT_HEADER_LEN as u64, e.to_string()))?;
    Ok((w, dtype))
}

/// Fixed-size prefix of an `SWSC` archive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArchiveHeader {
    pub rows: u64,
    pub cols: u64,
    pub k: u32,
    pub r: u32,
    pub dtype: Dtype,
    pub seed: u64,
}

impl ArchiveHeader {
    /// Exact archive size implied by this header, or `None` on overflow.
    pub fn file_len(&self) -> Option<u64> {
        archive_len(self.rows, self.cols, self.k as u64, self.r as u64, self.dtype)
    }
}

/// Size in bytes of an archive with the given parameters.
pub fn archive_len(rows: u64, cols: u64, k: u64, r: u64, dtype: Dtype) -> Option<u64> {
    let v = dtype.size() as u64;
    let labels = cols.checked_mul(2)?;
    let centroids = k.checked_mul(rows)?.checked_mul(v)?;
    let a = rows.checked_mul(r)?.checked_mul(v)?;
    let b = r.checked_mul(cols)?.checked_mul(v)?;
    let sigma = r.checked_mul(4)?;
    [labels, centroids, a, b, sigma]
        .iter()
        .try_fold(ARCHIVE_HEADER_LEN as u64, |acc, &x| acc.checked_add(x))
}

pub fn decode_archive_header(bytes: &[u8]) -> Result<ArchiveHeader> {
    let mut r = Reader::new(bytes);
    expect_magic(&mut r, ARCHIVE_MAGIC)?;
    let rows = r.u64("rows")?;
    let cols = r.u64("cols")?;
    if rows == 0 || cols == 0 {
        return Err(SwscError::format(8, format!("empty matrix {rows}x{cols}")));
    }
    let k = r.u32("k")?;
    if k == 0 {
        return Err(SwscError::param(
            "archive declares k=0; at least one cluster is required",
        ));
    }
    if k as usize > MAX_CLUSTERS {
        return Err(SwscError::format(
            24,
            format!("k={k} exceeds the 16-bit label range"),
        ));
    }
    let rank = r.u32("r")?;
    if rank as u64 > rows.min(cols) {
        return Err(SwscError::format(
            28,
            format!("rank {rank} exceeds min({rows}, {cols})"),
        ));
    }
    let dtype = dtype_at(&mut r)?;
    let width_at = r.offset();
    let width = r.u8("label width")?;
    if width != LABEL_WIDTH_U16 {
        return Err(SwscError::format(
            width_at,
            format!("unsupported label width code {width}"),
        ));
    }
    expect_zero_padding(&mut r, 6)?;
    let seed = r.u64("seed")?;
    Ok(ArchiveHeader {
        rows,
        cols,
        k,
        r: rank,
        dtype,
        seed,
    })
}

pub fn encode_archive(c: &CompressedWeight) -> Result<Vec<u8>> {
    c.validate()?;
    let clustering = c.clustering();
    let factors = c.factors();
    let k = clustering.k();
    if k > MAX_CLUSTERS {
        return Err(SwscError::param(format!("k={k} exceeds the 16-bit label range")));
    }
    let dtype = Dtype::from(c.precision());
    let len = archive_len(
        c.rows() as u64,
        c.cols() as u64,
        k as u64,
        factors.rank() as u64,
        dtype,
    )
    .ok_or_else(|| SwscError::param("archive size overflows"))?;

    let mut out = Vec::with_capacity(len as usize);
    out.extend_from_slice(&ARCHIVE_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(c.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(c.cols() as u64).to_le_bytes());
    out.extend_from_slice(&(k as u32).to_le_bytes());
    out.extend_from_slice(&(factors.rank() as u32).to_le_bytes());
    out.push(dtype.code());
    out.push(LABEL_WIDTH_U16);
    out.extend_from_slice(&[0u8; 6]);
    out.extend_from_slice(&c.seed().to_le_bytes());
    for &l in clustering.labels() {
        out.extend_from_slice(&(l as u16).to_le_bytes());
    }
    push_values(&mut out, clustering.centroids(), dtype)?;
    push_values(&mut out, factors.a_factor(), dtype)?;
    push_values(&mut out, factors.b_factor(), dtype)?;
    push_values(&mut out, factors.retained_singular_values(), Dtype::F32)?;
    debug_assert_eq!(out.len() as u64, len);
    Ok(out)
}

pub fn decode_archive(bytes: &[u8]) -> Result<CompressedWeight> {
    let header = decode_archive_header(bytes)?;
    let expected = header
        .file_len()
        .ok_or_else(|| SwscError::format(8, "declared sizes overflow"))?;
    if expected != bytes.len() as u64 {
        return Err(SwscError::integrity(format!(
            "header implies {expected} bytes, archive has {}",
            bytes.len()
        )));
    }
    let rows = dim_to_usize(header.rows, 8, "rows")?;
    let cols = dim_to_usize(header.cols, 16, "cols")?;
    let k = header.k as usize;
    let rank = header.r as usize;

    let mut r = Reader::new(bytes);
    r.take(ARCHIVE_HEADER_LEN, "header")?;
    let labels: Vec<u32> = r
        .take(cols * 2, "labels")?
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]) as u32)
        .collect();
    let centroids = r.values(k * rows, header.dtype, "centroids")?;
    let a_factor = r.values(rows * rank, header.dtype, "a factor")?;
    let b_factor = r.values(rank * cols, header.dtype, "b factor")?;
    let sigma = r.values(rank, Dtype::F32, "singular values")?;
    r.finish()?;

    let clustering = ChannelClustering::from_parts(k, rows, labels, centroids)?;
    let factors = LowRankFactors::from_parts(rows, cols, rank, a_factor, b_factor, sigma)?;
    CompressedWeight::from_parts(rows, cols, clustering, factors, header.dtype.into(), header.seed)
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| SwscError::io(path, e))
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so a failed write never leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| SwscError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| SwscError::io(tmp.path(), e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| SwscError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| SwscError::io(path, e.error))?;
    Ok(())
}

pub fn write_weight(path: impl AsRef<Path>, w: &WeightMatrix, dtype: Dtype) -> Result<()> {
    write_atomic(path.as_ref(), &encode_weight(w, dtype)?)
}

pub fn read_weight(path: impl AsRef<Path>) -> Result<WeightMatrix> {
    Ok(read_weight_with_dtype(path)?.0)
}

pub fn read_weight_with_dtype(path: impl AsRef<Path>) -> Result<(WeightMatrix, Dtype)> {
    decode_weight(&read_file(path.as_ref())?)
}

pub fn write_archive(path: impl AsRef<Path>, c: &CompressedWeight) -> Result<()> {
    write_atomic(path.as_ref(), &encode_archive(c)?)
}

pub fn read_archive(path: impl AsRef<Path>) -> Result<CompressedWeight> {
    decode_archive(&read_file(path.as_ref())?)
}

/// Reads and validates only the header; the file length must still match it.
pub fn read_archive_header(path: impl AsRef<Path>) -> Result<ArchiveHeader> {
    let path = path.as_ref();
    let mut file = fs::File::open(path).map_err(|e| SwscError::io(path, e))?;
    let actual = file.metadata().map_err(|e| SwscError::io(path, e))?.len();
    let mut head = Vec::with_capacity(ARCHIVE_HEADER_LEN);
    (&mut file)
        .take(ARCHIVE_HEADER_LEN as u64)
        .read_to_end(&mut head)
        .map_err(|e| SwscError::io(path, e))?;
    let header = decode_archive_header(&head)?;
    let expected = header
        .file_len()
        .ok_or_else(|| SwscError::format(8, "declared sizes overflow"))?;
    if expected != actual {
        return Err(SwscError::integrity(format!(
            "header implies {expected} bytes, archive has {actual}"
        )));
    }
    Ok(header)
}
