use std::path::{Path, PathBuf};
use std::process::Command;

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/cyclia.h")
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "CYCLIA_H",
        "typedef struct CycliaModel CycliaModel",
        "CYCLIA_STATUS_REGION = 3",
        "CYCLIA_STATUS_PANIC = 6",
        "typedef struct CycliaParams",
        "cyclia_last_error",
        "cyclia_version",
        "cyclia_string_free",
        "cyclia_model_new",
        "cyclia_model_free",
        "cyclia_model_params",
        "cyclia_model_alpha",
        "cyclia_model_focus_quantities",
        "cyclia_model_focus_quantities_json",
        "cyclia_g1_closed_form",
    ] {
        assert!(h.contains(name), "{name}");
    }
}

const PROGRAM: &str = r#"
#include <stdio.h>
#include "cyclia.h"

int main(void) {
    CycliaModel *m = NULL;
    double g[2];
    if (cyclia_model_new("1/10", "1/10", "13/200", NULL, NULL, NULL, &m) != CYCLIA_STATUS_OK) return 1;
    if (cyclia_model_focus_quantities(m, 2, g) != CYCLIA_STATUS_OK) return 2;
    cyclia_model_free(m);
    if (cyclia_model_new("1/4", "1/10", "1/20", NULL, NULL, NULL, &m) != CYCLIA_STATUS_REGION) return 3;
    printf("%.6f %.6f\n%s\n", g[0], g[1], cyclia_last_error());
    return 0;
}
"#;

#[test]
fn c_program_links_against_the_static_library() {
    let target = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = target.join("libcyclia_ffi.a");
    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
    let mut build = Command::new(cargo);
    build.args(["build", "--quiet", "-p", "cyclia-ffi", "--lib"]);
    if target.ends_with("release") {
        build.arg("--release");
    }
    let built = build.status().unwrap();
    assert!(built.success() && lib.exists(), "{}", lib.display());
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"));
    let src = dir.join("smoke.c");
    let exe = dir.join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("a C compiler is on PATH");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("0.091249 -0.29"), "{text}");
    assert!(text.contains("8 k3 < 1"), "{text}");
}
