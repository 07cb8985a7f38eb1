use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use swsc_ffi::*;

fn last_error() -> String {
    let p = swsc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn matrix(rows: usize, cols: usize, values: &[f64]) -> *mut SwscMatrix {
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { swsc_matrix_new(rows, cols, values.as_ptr(), &mut m) },
        SwscStatus::Ok
    );
    m
}

fn values(m: *const SwscMatrix) -> Vec<f64> {
    let len = unsafe { swsc_matrix_rows(m) * swsc_matrix_cols(m) };
    let mut out = vec![0.0; len];
    assert_eq!(
        unsafe { swsc_matrix_copy_values(m, out.as_mut_ptr(), len) },
        SwscStatus::Ok
    );
    out
}

fn cpath(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

#[test]
fn compress_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let (m, n) = (4, 6);
    let data: Vec<f64> = (0..m * n)
        .map(|x| ((x % n) % 3) as f64 * 0.5 + (x / n) as f64)
        .collect();
    let w = matrix(m, n, &data);
    assert_eq!(unsafe { (swsc_matrix_rows(w), swsc_matrix_cols(w)) }, (4, 6));

    let wpath = cpath(&dir.path().join("w.wmat"));
    assert_eq!(
        unsafe { swsc_write_weight(wpath.as_ptr(), w, 32) },
        SwscStatus::Ok
    );
    let mut read = ptr::null_mut();
    assert_eq!(
        unsafe { swsc_read_weight(wpath.as_ptr(), &mut read) },
        SwscStatus::Ok
    );
    assert_eq!(values(read), data);

    let mut opts = swsc_compress_options_default(3, 1, 11);
    opts.value_bits = 32;
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { swsc_compress(read, &opts, &mut c) }, SwscStatus::Ok);
    assert!(swsc_last_error().is_null());

    let apath = cpath(&dir.path().join("w.swsc"));
    assert_eq!(unsafe { swsc_write_archive(apath.as_ptr(), c) }, SwscStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(
        unsafe { swsc_read_archive(apath.as_ptr(), &mut back) },
        SwscStatus::Ok
    );

    let (mut d1, mut d2) = (ptr::null_mut(), ptr::null_mut());
    assert_eq!(unsafe { swsc_decompress(c, &mut d1) }, SwscStatus::Ok);
    assert_eq!(unsafe { swsc_decompress(back, &mut d2) }, SwscStatus::Ok);
    assert_eq!(values(d1), values(d2));
    assert_eq!(values(d1), data, "three distinct columns at k=3 restore exactly");

    let mut rep = SwscStorageReport::default();
    assert_eq!(
        unsafe { swsc_compressed_report(back, true, &mut rep) },
        SwscStatus::Ok
    );
    assert_eq!(
        (rep.rows, rep.cols, rep.clusters, rep.rank, rep.value_bits),
        (4, 6, 3, 1, 32)
    );
    assert_eq!(rep.label_bits, 6 * 2);

    unsafe {
        for h in [w, read, d1, d2] {
            swsc_matrix_free(h);
        }
        swsc_compressed_free(c);
        swsc_compressed_free(back);
    }
}

#[test]
fn avg_bits_matches_core() {
    let mut rep = SwscStorageReport::default();
    assert_eq!(
        unsafe { swsc_avg_bits(4096, 4096, 256, 128, 16, false, &mut rep) },
        SwscStatus::Ok
    );
    assert_eq!(rep.avg_bits_paper, 2.0);
    let core = swsc::avg_bits(4096, 4096, 256, 128, 16, false).unwrap();
    assert_eq!(rep.total_bits, core.total_bits);
    assert_eq!(
        unsafe { swsc_avg_bits(4096, 4096, 0, 0, 16, false, &mut rep) },
        SwscStatus::Parameter
    );
    assert!(!last_error().is_empty());
}

#[test]
fn rtn_through_handles() {
    let w = matrix(1, 4, &[0.0, 0.1, 0.2, 10.0]);
    let mut q = ptr::null_mut();
    assert_eq!(
        unsafe { swsc_rtn(w, 2, SwscGranularity::PerTensor, &mut q) },
        SwscStatus::Ok
    );
    assert_eq!(values(q), vec![0.0, 0.0, 0.0, 10.0]);
    let mut bad = ptr::null_mut();
    assert_eq!(
        unsafe { swsc_rtn(w, 9, SwscGranularity::PerColumn, &mut bad) },
        SwscStatus::Parameter
    );
    assert!(bad.is_null());
    unsafe {
        swsc_matrix_free(q);
        swsc_matrix_free(w);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { swsc_matrix_new(2, 2, ptr::null(), &mut m) },
        SwscStatus::NullPointer
    );
    assert_eq!(
        unsafe { swsc_matrix_new(0, 2, [1.0].as_ptr(), &mut m) },
        SwscStatus::Shape
    );
    assert_eq!(
        unsafe { swsc_matrix_new(1, 1, [f64::NAN].as_ptr(), &mut m) },
        SwscStatus::Parameter
    );
    assert!(m.is_null());
    assert!(!last_error().is_empty());

    let w = matrix(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    let mut buf = [0.0; 5];
    assert_eq!(
        unsafe { swsc_matrix_copy_values(w, buf.as_mut_ptr(), 5) },
        SwscStatus::Shape
    );

    let mut c = ptr::null_mut();
    let opts = swsc_compress_options_default(4, 0, 0);
    assert_eq!(
        unsafe { swsc_compress(w, &opts, &mut c) },
        SwscStatus::Parameter,
        "k > n"
    );
    let mut opts = swsc_compress_options_default(2, 0, 0);
    opts.value_bits = 8;
    assert_eq!(unsafe { swsc_compress(w, &opts, &mut c) }, SwscStatus::Parameter);
    assert!(c.is_null());

    let dir = tempfile::tempdir().unwrap();
    let missing = cpath(&dir.path().join("missing.swsc"));
    assert_eq!(
        unsafe { swsc_read_archive(missing.as_ptr(), &mut c) },
        SwscStatus::Io
    );
    let junk = dir.path().join("junk.swsc");
    std::fs::write(&junk, b"not an archive at all").unwrap();
    assert_eq!(
        unsafe { swsc_read_archive(cpath(&junk).as_ptr(), &mut c) },
        SwscStatus::Format
    );
    assert_eq!(
        unsafe { swsc_read_weight(ptr::null(), &mut m) },
        SwscStatus::NullPointer
    );
    let bad_utf8 = CString::new(vec![0xffu8, 0xfe]).unwrap();
    assert_eq!(
        unsafe { swsc_read_weight(bad_utf8.as_ptr(), &mut m) },
        SwscStatus::InvalidPath
    );

    unsafe {
        swsc_matrix_free(w);
        swsc_matrix_free(ptr::null_mut());
        swsc_compressed_free(ptr::null_mut());
        assert_eq!(swsc_matrix_rows(ptr::null()), 0);
    }
}

/// Builds the C smoke program against the generated header and the static library.
#[test]
fn c_program_links_and_runs() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    // tests run from target/<profile>/deps; the static library sits one level up
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap();
    let staticlib = lib_dir.join("libswsc_ffi.a");
    if !staticlib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!(
            "skipping: no C compiler or static library at {}",
            staticlib.display()
        );
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&staticlib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin)
        .arg(dir.path().join("c.swsc"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
