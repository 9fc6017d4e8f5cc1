//! The generated header is valid C and links against the static library.

use std::path::PathBuf;
use std::process::Command;

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

const PROGRAM: &str = r#"
#include <stdio.h>
#include "kavd.h"

int main(void) {
    double pts[] = {0, 0, 1, 0, 0, 1, 1, 1, 2, 2, 3, 1};
    KavdPointSet *ps = NULL;
    KavdSketch *sk = NULL;
    if (kavd_point_set_new(pts, 6, 2, NULL, &ps) != KAVD_STATUS_OK) return 1;
    if (kavd_sketch_build(ps, 2, 0.5, &sk) != KAVD_STATUS_OK) return 2;
    double q[] = {0.5, 0.5}, v = 0;
    size_t w = 0;
    if (kavd_sketch_query(sk, q, 2, &v, &w) != KAVD_STATUS_OK) return 3;
    if (kavd_sketch_query(sk, q, 3, &v, &w) != KAVD_STATUS_DIMENSION_MISMATCH) return 4;
    if (kavd_last_error_message() == NULL) return 5;
    printf("%.6f %zu\n", v, w);
    kavd_sketch_free(sk);
    kavd_point_set_free(ps);
    return 0;
}
"#;

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(manifest().join("include/kavd.h")).unwrap();
    for name in [
        "kavd_point_set_new",
        "kavd_sketch_build",
        "kavd_sketch_query",
        "kavd_sketch_save",
        "kavd_sketch_load",
        "kavd_density_build",
        "kavd_last_error_message",
        "typedef struct KavdSketch KavdSketch",
        "KAVD_STATUS_OK = 0",
    ] {
        assert!(h.contains(name), "missing {name}");
    }
}

#[test]
fn c_program_compiles_and_runs() {
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(cc.status.success());
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libkavd_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest().join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C build failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    let v: f64 = text.split_whitespace().next().unwrap().parse().unwrap();
    // d_2 from (0.5, 0.5) is sqrt(1/2).
    assert!(v >= 0.5f64.sqrt() - 1e-9 && v <= 1.5 * 0.5f64.sqrt());
}
