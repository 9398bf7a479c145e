use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use crowd_cluster_ffi::*;

fn last_error() -> String {
    let p = cc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn instance(n: usize, k: usize) -> *mut CcInstance {
    let mut inst = ptr::null_mut();
    assert_eq!(unsafe { cc_instance_generate(n, k, CcProfile::Balanced, 0.0, 7, &mut inst) }, CcStatus::Ok);
    inst
}

#[test]
fn instance_roundtrip() {
    let inst = instance(30, 3);
    unsafe {
        assert_eq!(cc_instance_n(inst), 30);
        assert_eq!(cc_instance_k(inst), 3);
        let mut labels = vec![usize::MAX; 30];
        assert_eq!(cc_instance_labels(inst, labels.as_mut_ptr(), labels.len()), CcStatus::Ok);
        for c in 0..3 {
            assert_eq!(labels.iter().filter(|&&l| l == c).count(), 10);
        }
        assert_eq!(cc_instance_labels(inst, labels.as_mut_ptr(), 29), CcStatus::InvalidArgument);
        cc_instance_free(inst);
    }
}

#[test]
fn bad_parameters_set_message() {
    let mut inst = ptr::null_mut();
    let status = unsafe { cc_instance_generate(3, 5, CcProfile::Balanced, 0.0, 0, &mut inst) };
    assert_eq!(status, CcStatus::InvalidArgument);
    assert!(inst.is_null());
    assert!(last_error().contains("k = 5"));
    assert_eq!(
        unsafe { cc_instance_generate(3, 1, CcProfile::Balanced, 0.0, 0, ptr::null_mut()) },
        CcStatus::NullPointer
    );
}

#[test]
fn null_handles_are_safe() {
    unsafe {
        assert_eq!(cc_instance_n(ptr::null()), 0);
        assert_eq!(cc_session_query_count(ptr::null()), 0);
        cc_instance_free(ptr::null_mut());
        cc_session_free(ptr::null_mut());
        cc_sideinfo_free(ptr::null_mut());
        cc_string_free(ptr::null_mut());
        let mut same = false;
        assert_eq!(cc_session_query(ptr::null_mut(), 0, 1, &mut same), CcStatus::NullPointer);
    }
}

#[test]
fn perfect_session_matches_labels() {
    let inst = instance(20, 4);
    unsafe {
        let mut labels = vec![0usize; 20];
        cc_instance_labels(inst, labels.as_mut_ptr(), 20);
        let mut s = ptr::null_mut();
        assert_eq!(cc_session_new(inst, 0.0, 1, &mut s), CcStatus::Ok);
        for u in 0..20 {
            for v in u + 1..20 {
                let mut same = false;
                assert_eq!(cc_session_query(s, u, v, &mut same), CcStatus::Ok);
                assert_eq!(same, labels[u] == labels[v]);
            }
        }
        assert_eq!(cc_session_query_count(s), 190);
        let mut same = false;
        assert_eq!(cc_session_query(s, 3, 3, &mut same), CcStatus::Oracle);
        assert_eq!(cc_session_query(s, 0, 20, &mut same), CcStatus::Oracle);
        cc_session_free(s);
        cc_instance_free(inst);
    }
}

#[test]
fn faulty_session_rejects_half() {
    let inst = instance(10, 2);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { cc_session_new(inst, 0.5, 1, &mut s) }, CcStatus::InvalidArgument);
    unsafe { cc_instance_free(inst) };
}

#[test]
fn sideinfo_values_on_grid() {
    let inst = instance(40, 4);
    unsafe {
        let mut w = ptr::null_mut();
        assert_eq!(cc_sideinfo_example2(inst, 0.3, 4, 9, &mut w), CcStatus::Ok);
        let mut x = -1.0;
        assert_eq!(cc_sideinfo_value(w, 2, 17, &mut x), CcStatus::Ok);
        assert!([0.125, 0.375, 0.625, 0.875].contains(&x));
        assert_eq!(cc_sideinfo_value(w, 2, 2, &mut x), CcStatus::InvalidArgument);
        cc_sideinfo_free(w);
        cc_instance_free(inst);
    }
}

#[test]
fn run_experiment_csv() {
    let cfg = CString::new(r#"{"algorithm":"baseline","n":50,"k":5,"seeds":{"count":10}}"#).unwrap();
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(cc_run_experiment(cfg.as_ptr(), &mut out), CcStatus::Ok);
        let csv = CStr::from_ptr(out).to_str().unwrap().to_string();
        cc_string_free(out);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "algorithm,n,k,p,seed,queries,rounds,exact,recall,bound_ratio,wall_time");
        assert_eq!(lines.len(), 11);
        assert!(lines[1..].iter().all(|l| l.split(',').nth(7) == Some("true")));

        let mut json = ptr::null_mut();
        assert_eq!(cc_summarize_experiment(cfg.as_ptr(), &mut json), CcStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        cc_string_free(json);
        assert_eq!(v[0]["exact_rate"], 1.0);
        assert_eq!(v[0]["runs"], 10);
    }
}

#[test]
fn run_experiment_rejects_bad_config() {
    let cfg =
        CString::new(r#"{"algorithm":"alg2","n":50,"k":5,"oracle":{"mode":"faulty","p":0.5},"seeds":[1]}"#).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { cc_run_experiment(cfg.as_ptr(), &mut out) }, CcStatus::InvalidConfig);
    assert!(out.is_null());
    assert!(last_error().contains("lambda"));
    assert_eq!(unsafe { cc_run_experiment(ptr::null(), &mut out) }, CcStatus::NullPointer);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(cc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/crowd_cluster.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["cc_run_experiment", "cc_session_query", "cc_last_error_message", "CC_STATUS_OK"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"crowd_cluster.h\"\nint main(void) { CcInstance *i = 0; return cc_instance_generate(10, 2, CC_PROFILE_BALANCED, 0.0, 1, &i) == CC_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .status()
        .expect("C compiler");
    assert!(status.success());
}

#[test]
fn c_program_links_and_runs() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = lib_dir.join("libcrowd_cluster_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "crowd_cluster.h"
int main(void) {
    CcInstance *inst = NULL;
    CcSession *s = NULL;
    bool same = false;
    if (cc_instance_generate(12, 3, CC_PROFILE_BALANCED, 0.0, 5, &inst) != CC_STATUS_OK) return 1;
    if (cc_session_new(inst, 0.0, 1, &s) != CC_STATUS_OK) return 2;
    if (cc_session_query(s, 0, 1, &same) != CC_STATUS_OK) return 3;
    if (cc_session_query(s, 4, 4, &same) != CC_STATUS_ORACLE) return 4;
    printf("%zu %s\n", cc_session_query_count(s), cc_last_error_message());
    cc_session_free(s);
    cc_instance_free(inst);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("main");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(root.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("1 self-query on vertex 4"), "{text}");
}
