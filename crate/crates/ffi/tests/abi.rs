use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use crt_array_ffi::*;

fn last_error() -> Option<String> {
    let p = crt_last_error_message();
    if p.is_null() {
        return None;
    }
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { crt_string_free(p) };
    Some(s)
}

fn design(kind: &str, b: i64, c: i64, p: u64) -> (CrtStatus, *mut CrtArray) {
    let k = CString::new(kind).unwrap();
    let mut h = ptr::null_mut();
    let s = unsafe { crt_design_new(k.as_ptr(), b, c, p, &mut h) };
    (s, h)
}

#[test]
fn coprimality_through_the_abi() {
    let mut out = false;
    assert_eq!(unsafe { crt_is_coprime(0, 1, 3, 2, 3, -2, &mut out) }, CrtStatus::Ok);
    assert!(out);
    assert_eq!(unsafe { crt_is_coprime(0, 1, 1, 1, 1, -1, &mut out) }, CrtStatus::Ok);
    assert!(!out);
    assert_eq!(
        unsafe { crt_is_coprime(0, 1, 1, 0, 1, 0, ptr::null_mut()) },
        CrtStatus::NullPointer
    );
    assert!(last_error().unwrap().contains("null"));
}

#[test]
fn design_lifecycle() {
    let (s, h) = design("t_array", 0, 1, 13);
    assert_eq!(s, CrtStatus::Ok);
    assert!(last_error().is_none());
    let mut n = 0usize;
    assert_eq!(unsafe { crt_array_len(h, &mut n) }, CrtStatus::Ok);
    assert_eq!(n, 37);

    let (mut x, mut y) = (0i64, 0i64);
    assert_eq!(unsafe { crt_array_sensor(h, 0, &mut x, &mut y) }, CrtStatus::Ok);
    assert_eq!(unsafe { crt_array_sensor(h, 37, &mut x, &mut y) }, CrtStatus::IndexOutOfRange);
    let (mut px, mut py) = (0f64, 0f64);
    assert_eq!(unsafe { crt_array_position(h, 0, &mut px, &mut py) }, CrtStatus::Ok);
    assert_eq!((px, py), (0.5 * x as f64, 0.5 * y as f64));

    let (mut e, mut t) = (0u64, 0u64);
    assert_eq!(unsafe { crt_array_fragility(h, &mut e, &mut t) }, CrtStatus::Ok);
    assert_eq!((e, t), (37, 37));

    let (mut ok, mut missing) = (false, 99usize);
    assert_eq!(unsafe { crt_array_hole_free(h, 0, &mut ok, &mut missing) }, CrtStatus::Ok);
    assert!(ok);
    assert_eq!(missing, 0);

    let mut js = ptr::null_mut();
    assert_eq!(unsafe { crt_array_to_json(h, &mut js) }, CrtStatus::Ok);
    let text = unsafe { CStr::from_ptr(js) }.to_str().unwrap().to_owned();
    unsafe { crt_string_free(js) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["kind"], "t_array");
    assert_eq!(v["sensors"].as_array().unwrap().len(), 37);

    unsafe { crt_array_free(h) };
    unsafe { crt_array_free(ptr::null_mut()) };
}

#[test]
fn hscrt_fragility_fraction() {
    let (s, h) = design("hscrt", 0, 1, 13);
    assert_eq!(s, CrtStatus::Ok);
    let (mut e, mut t) = (0u64, 0u64);
    assert_eq!(unsafe { crt_array_fragility(h, &mut e, &mut t) }, CrtStatus::Ok);
    assert_eq!((e, t), (16, 61));
    unsafe { crt_array_free(h) };
}

#[test]
fn error_codes() {
    let (s, h) = design("t_array", 0, 1, 4);
    assert_eq!(s, CrtStatus::UnsupportedPrime);
    assert!(h.is_null());
    assert!(last_error().unwrap().contains("prime"));
    assert_eq!(design("spinner", 0, 1, 13).0, CrtStatus::UnsupportedRing);
    assert_eq!(design("zigzag", 0, 1, 13).0, CrtStatus::InvalidInput);
    assert_eq!(design("hscrt", 0, 0, 13).0, CrtStatus::UnsupportedRing);
    assert_eq!(design("hscrt", 0, -2, 13).0, CrtStatus::UnsupportedRing);

    let mut n = 0usize;
    assert_eq!(unsafe { crt_array_len(ptr::null(), &mut n) }, CrtStatus::NullPointer);
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { crt_design_new(ptr::null(), 0, 1, 13, &mut h) }, CrtStatus::NullPointer);
}

#[test]
fn config_designs() {
    let cfg = CString::new("kind=q_tuple\ngenerators=-1-2i\ngenerators=-1+2i\ngenerators=-1+4i\n").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { crt_design_from_config(cfg.as_ptr(), &mut h) }, CrtStatus::Ok);
    let mut n = 0usize;
    unsafe { crt_array_len(h, &mut n) };
    assert_eq!(n, 169);
    let (mut ok, mut missing) = (true, 0usize);
    assert_eq!(unsafe { crt_array_hole_free(h, 0, &mut ok, &mut missing) }, CrtStatus::InvalidArgument);
    unsafe { crt_array_free(h) };

    let bad = CString::new("kind=nested_2d\nn1=0\n").unwrap();
    assert_eq!(unsafe { crt_design_from_config(bad.as_ptr(), &mut h) }, CrtStatus::InvalidArgument);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(crt_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/crt_array.h")
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "crt_version",
        "crt_last_error_message",
        "crt_string_free",
        "crt_is_coprime",
        "crt_design_new",
        "crt_design_from_config",
        "crt_array_free",
        "crt_array_len",
        "crt_array_sensor",
        "crt_array_position",
        "crt_array_to_json",
        "crt_array_fragility",
        "crt_array_hole_free",
        "CRT_STATUS_OK = 0",
        "typedef struct CrtArray CrtArray",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(cc.status.success());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"crt_array.h\"\nint main(void) { CrtArray *h = 0; (void)h; return CRT_STATUS_OK; }\n",
    )
    .unwrap();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header().parent().unwrap())
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn c_program_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libcrt_array_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("static library or C compiler unavailable; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "crt_array.h"
int main(void) {
    CrtArray *h = NULL;
    if (crt_design_new("spinner", -1, 1, 13, &h) != CRT_STATUS_OK) return 1;
    size_t n = 0;
    crt_array_len(h, &n);
    uint64_t e = 0, t = 0;
    crt_array_fragility(h, &e, &t);
    bool ok = false;
    size_t missing = 0;
    crt_array_hole_free(h, 0, &ok, &missing);
    printf("%zu %llu/%llu %d\n", n, (unsigned long long)e, (unsigned long long)t, ok);
    crt_array_free(h);
    if (crt_design_new("t_array", 0, 1, 4, &h) != CRT_STATUS_UNSUPPORTED_PRIME) return 2;
    char *msg = crt_last_error_message();
    if (msg == NULL) return 3;
    crt_string_free(msg);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("probe");
    let out = Command::new("cc")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout), "37 36/37 1\n");
}
