//! C ABI over the `swsc` compressor.
//!
//! Matrices and compressed weights cross the boundary as opaque handles that
//! the caller releases with the matching `*_free`. Every fallible call returns
//! an [`SwscStatus`]; on failure [`swsc_last_error`] describes what went wrong
//! on the calling thread. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use swsc::{
    CompressOptions, CompressedWeight, Dtype, Granularity, RtnConfig, StoragePrecision, StorageReport,
    SwscError, WeightMatrix,
};

/// Result of every fallible call. `SWSC_STATUS_OK` is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwscStatus {
    Ok = 0,
    NullPointer = 1,
    Shape = 2,
    Parameter = 3,
    Numerical = 4,
    Format = 5,
    Integrity = 6,
    Io = 7,
    InvalidPath = 8,
    Panic = 9,
}

/// Column-grouping of the round-to-nearest baseline.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwscGranularity {
    PerColumn = 0,
    PerTensor = 1,
}

/// Dense row-major matrix of `f64`.
pub struct SwscMatrix {
    inner: WeightMatrix,
}

/// Codebook, labels and low-rank factors of one compressed matrix.
pub struct SwscCompressed {
    inner: CompressedWeight,
}

/// Compression settings; start from [`swsc_compress_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SwscCompressOptions {
    pub clusters: usize,
    pub rank: usize,
    pub seed: u64,
    /// 16 or 32.
    pub value_bits: u32,
    pub max_iter: usize,
    pub tol: f64,
    pub restarts: usize,
    pub parallel: bool,
}

/// Bit accounting of a compressed matrix.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SwscStorageReport {
    pub rows: u64,
    pub cols: u64,
    pub clusters: u64,
    pub rank: u64,
    pub value_bits: u32,
    pub codebook_bits: u64,
    pub factor_bits: u64,
    pub label_bits: u64,
    pub total_bits: u64,
    pub avg_bits_paper: f64,
    pub avg_bits_total: f64,
    pub compression_ratio: f64,
}

impl From<StorageReport> for SwscStorageReport {
    fn from(r: StorageReport) -> Self {
        SwscStorageReport {
            rows: r.rows,
            cols: r.cols,
            clusters: r.clusters,
            rank: r.rank,
            value_bits: r.value_bits,
            codebook_bits: r.codebook_bits,
            factor_bits: r.factor_bits,
            label_bits: r.label_bits,
            total_bits: r.total_bits,
            avg_bits_paper: r.avg_bits_paper,
            avg_bits_total: r.avg_bits_total,
            compression_ratio: r.compression_ratio,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(SwscStatus, String);

impl From<SwscError> for Failure {
    fn from(e: SwscError) -> Self {
        let status = match e {
            SwscError::Shape(_) => SwscStatus::Shape,
            SwscError::Parameter(_) => SwscStatus::Parameter,
            SwscError::Numerical { .. } => SwscStatus::Numerical,
            SwscError::Format { .. } => SwscStatus::Format,
            SwscError::Integrity(_) => SwscStatus::Integrity,
            SwscError::Io { .. } => SwscStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> SwscStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    let failure = match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => return SwscStatus::Ok,
        Ok(Err(f)) => f,
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            Failure(SwscStatus::Panic, format!("internal panic: {what}"))
        }
    };
    set_last_error(failure.1);
    failure.0
}

fn null(what: &str) -> Failure {
    Failure(SwscStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SwscStatus::InvalidPath, "path is not valid UTF-8".into()))
}

fn precision(bits: u32) -> Result<StoragePrecision, Failure> {
    StoragePrecision::from_bits(bits).ok_or_else(|| {
        Failure(
            SwscStatus::Parameter,
            format!("value_bits must be 16 or 32, got {bits}"),
        )
    })
}

/// Message for the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next `swsc_*` call on the same thread.
#[no_mangle]
pub extern "C" fn swsc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Copies `rows * cols` row-major values into a new matrix.
///
/// # Safety
/// `values` must point to `rows * cols` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swsc_matrix_new(
    rows: usize,
    cols: usize,
    values: *const f64,
    out: *mut *mut SwscMatrix,
) -> SwscStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        if values.is_null() {
            return Err(null("values"));
        }
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Failure(SwscStatus::Shape, "rows * cols overflows".into()))?;
        let data = std::slice::from_raw_parts(values, len).to_vec();
        let inner = WeightMatrix::new(rows, cols, data)?;
        *out = Box::into_raw(Box::new(SwscMatrix { inner }));
        Ok(())
    })
}

/// Releases a matrix; NULL is ignored.
///
/// # Safety
/// `m` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn swsc_matrix_free(m: *mut SwscMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Row count, or 0 for NULL.
///
/// # Safety
/// `m` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn swsc_matrix_rows(m: *const SwscMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.rows())
}

/// Column count, or 0 for NULL.
///
/// # Safety
/// `m` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn swsc_matrix_cols(m: *const SwscMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.cols())
}

/// Copies the row-major values into `out`, which holds `len` doubles.
/// `len` must equal `rows * cols`.
///
/// # Safety
/// `m` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn swsc_matrix_copy_values(
    m: *const SwscMatrix,
    out: *mut f64,
    len: usize,
) -> SwscStatus {
    guard(|| {
        let m = deref(m, "matrix")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let values = m.inner.values();
        if len != values.len() {
            return Err(Failure(
                SwscStatus::Shape,
                format!("buffer holds {len} values, matrix has {}", values.len()),
            ));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(values);
        Ok(())
    })
}

/// Defaults for everything except the cluster count, rank and seed:
/// 16-bit values, 100 iterations, tolerance 1e-6, one run, sequential.
#[no_mangle]
pub extern "C" fn swsc_compress_options_default(
    clusters: usize,
    rank: usize,
    seed: u64,
) -> SwscCompressOptions {
    let d = CompressOptions::new(clusters, rank, seed, StoragePrecision::F16);
    SwscCompressOptions {
        clusters,
        rank,
        seed,
        value_bits: 16,
        max_iter: d.max_iter,
        tol: d.tol,
        restarts: d.restarts,
        parallel: d.parallel,
    }
}

/// Clusters the columns of `w` and compensates the residual at rank `opts.rank`.
///
/// # Safety
/// `w` and `opts` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swsc_compress(
    w: *const SwscMatrix,
    opts: *const SwscCompressOptions,
    out: *mut *mut SwscCompressed,
) -> SwscStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let w = deref(w, "matrix")?;
        let o = deref(opts, "options")?;
        let mut options = CompressOptions::new(o.clusters, o.rank, o.seed, precision(o.value_bits)?);
        options.max_iter = o.max_iter;
        options.tol = o.tol;
        options.restarts = o.restarts;
        options.parallel = o.parallel;
        let inner = swsc::compress_with(&w.inner, &options)?;
        *out = Box::into_raw(Box::new(SwscCompressed { inner }));
        Ok(())
    })
}

/// Rebuilds the approximate matrix.
///
/// # Safety
/// `c` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swsc_decompress(c: *const SwscCompressed, out: *mut *mut SwscMatrix) -> SwscStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let c = deref(c, "compressed")?;
        let inner = swsc::decompress(&c.inner)?;
        *out = Box::into_raw(Box::new(SwscMatrix { inner }));
        Ok(())
    })
}

/// Releases a compressed handle; NULL is ignored.
///
/// # Safety
/// `c` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn swsc_compressed_free(c: *mut SwscCompressed) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Bit accounting of an existing compressed handle.
///
/// # Safety
/// `c` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swsc_compressed_report(
    c: *const SwscCompressed,
    include_labels: bool,
    out: *mut SwscStorageReport,
) -> SwscStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let c = deref(c, "compressed")?;
        *out = StorageReport::for_compressed(&c.inner, include_labels)?.into();
        Ok(())
    })
}

/// Bit accounting for an `m × n` matrix at `k` clusters and rank `r`,
/// without compressing anything.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swsc_avg_bits(
    m: u64,
    n: u64,
    k: u64,
    r: u64,
    value_bits: u32,
    include_labels: bool,
    out: *mut SwscStorageReport,
) -> SwscStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = swsc::avg_bits(m, n, k, r, value_bits, include_labels)?.into();
        Ok(())
    })
}

/// Round-to-nearest quantize-dequantize baseline at `bits` in 2..=8.
///
/// # Safety
/// `w` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swsc_rtn(
    w: *const SwscMatrix,
    bits: u32,
    granularity: SwscGranularity,
    out: *mut *mut SwscMatrix,
) -> SwscStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let w = deref(w, "matrix")?;
        let g = match granularity {
            SwscGranularity::PerColumn => Granularity::PerColumn,
            SwscGranularity::PerTensor => Granularity::PerTensor,
        };
        let inner = swsc::rtn_quantize_dequantize(&w.inner, &RtnConfig::new(bits, g)?);
        *out = Box::into_raw(Box::new(SwscMatrix { inner }));
        Ok(())
    })
}

/// Reads a weight file (either dtype) into a new matrix.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swsc_read_weight(path: *const c_char, out: *mut *mut SwscMatrix) -> SwscStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let inner = swsc::read_weight(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(SwscMatrix { inner }));
        Ok(())
    })
}

/// Writes a weight file with 16- or 32-bit values. The file appears atomically.
///
/// # Safety
/// `path` must be a NUL-terminated string; `w` must be live.
#[no_mangle]
pub unsafe extern "C" fn swsc_write_weight(
    path: *const c_char,
    w: *const SwscMatrix,
    value_bits: u32,
) -> SwscStatus {
    guard(|| {
        let w = deref(w, "matrix")?;
        let dtype = Dtype::from(precision(value_bits)?);
        swsc::write_weight(path_arg(path)?, &w.inner, dtype)?;
        Ok(())
    })
}

/// Reads and validates an archive.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swsc_read_archive(path: *const c_char, out: *mut *mut SwscCompressed) -> SwscStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let inner = swsc::read_archive(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(SwscCompressed { inner }));
        Ok(())
    })
}

/// Writes an archive. The file appears atomically.
///
/// # Safety
/// `path` must be a NUL-terminated string; `c` must be live.
#[no_mangle]
pub unsafe extern "C" fn swsc_write_archive(path: *const c_char, c: *const SwscCompressed) -> SwscStatus {
    guard(|| {
        let c = deref(c, "compressed")?;
        swsc::write_archive(path_arg(path)?, &c.inner)?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn message() -> String {
        let p = swsc_last_error();
        assert!(!p.is_null());
        unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
    }

    #[test]
    fn panics_become_status_codes() {
        let prev = std::panic::take_hook();
        std::panic::set_hook(Box::new(|_| {}));
        let status = guard(|| panic!("boom"));
        std::panic::set_hook(prev);
        assert_eq!(status, SwscStatus::Panic);
        assert!(message().contains("boom"));
    }

    #[test]
    fn success_clears_last_error() {
        assert_eq!(guard(|| Err(null("x"))), SwscStatus::NullPointer);
        assert_eq!(message(), "x is null");
        assert_eq!(guard(|| Ok(())), SwscStatus::Ok);
        assert!(swsc_last_error().is_null());
    }

    #[test]
    fn interior_nul_in_message_is_replaced() {
        set_last_error("a\0b".into());
        assert_eq!(message(), "a b");
    }

    #[test]
    fn every_error_kind_has_a_status() {
        let cases = [
            (SwscError::Shape("s".into()), SwscStatus::Shape),
            (SwscError::Parameter("p".into()), SwscStatus::Parameter),
            (SwscError::Integrity("i".into()), SwscStatus::Integrity),
        ];
        for (err, want) in cases {
            assert_eq!(Failure::from(err).0, want);
        }
    }
}
