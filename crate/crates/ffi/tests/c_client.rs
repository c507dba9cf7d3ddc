//! Compiles a small C program against the generated header and the static
//! library. Skipped when no C compiler is on PATH.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <math.h>
#include "phototherm.h"

int main(void) {
    double snr = 0, res = 0;
    if (pt_averaging_gain(200, &snr, &res) != PT_STATUS_OK) return 1;
    if (fabs(snr - sqrt(200.0)) > 1e-12) return 2;
    PtKernel *k = NULL;
    if (pt_kernel_new(10, 1.0, 10, 1.0, 1.0, -1.0, &k) != PT_STATUS_INVALID_ARGUMENT || k != NULL) return 3;
    char msg[128];
    if (pt_last_error(msg, sizeof msg) == 0) return 4;
    if (pt_kernel_new(40, 1.0, 20, 1.0, 1.0, 0.5, &k) != PT_STATUS_OK) return 5;
    size_t nt = 0, ntp = 0;
    pt_kernel_dims(k, &nt, &ntp);
    pt_kernel_free(k);
    printf("%zu %zu\n", nt, ntp);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler, skipping");
        return;
    }
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libphototherm_ffi.a");
    assert!(lib.is_file(), "missing {}", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("client.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let bin = tmp.path().join("client");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "40 20");
}
