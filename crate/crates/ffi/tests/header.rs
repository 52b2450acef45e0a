//! The generated header declares the whole API and links against the static library.

use std::path::{Path, PathBuf};
use std::process::Command;

const FUNCTIONS: &[&str] = &[
    "fc_tolerance_default",
    "fc_last_error_message",
    "fc_string_free",
    "fc_measurement_from_json",
    "fc_measurement_from_builtin",
    "fc_measurement_from_operators",
    "fc_measurement_dim",
    "fc_measurement_outcomes",
    "fc_measurement_free",
    "fc_density_from_matrix",
    "fc_density_from_builtin",
    "fc_density_dim",
    "fc_density_to_matrix",
    "fc_density_free",
    "fc_trace_distance",
    "fc_canonical_form",
    "fc_classify_json",
    "fc_is_asymptotically_dpc",
    "fc_synthesize",
    "fc_plan_len",
    "fc_plan_to_json",
    "fc_plan_from_json",
    "fc_plan_free",
    "fc_run_averaged",
];

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("feedctl.h")
}

#[test]
fn header_declares_api() {
    let text = std::fs::read_to_string(header()).expect("header generated by the build script");
    assert!(text.contains("#ifndef FEEDCTL_H"));
    for f in FUNCTIONS {
        // pointer-returning prototypes read `*fc_name(`
        assert!(text.contains(&format!(" {f}(")) || text.contains(&format!("*{f}(")), "missing {f}");
    }
    for t in ["typedef struct FcMeasurement FcMeasurement;", "typedef struct FcDensity FcDensity;", "typedef struct FcPlan FcPlan;"] {
        assert!(text.contains(t), "missing {t}");
    }
    assert!(text.contains("FC_STATUS_OK = 0"));
    assert!(text.contains("FC_STATUS_SYNTHESIS_PRECONDITION = 9"));
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "feedctl.h"

int main(void) {
    FcMeasurement *m = NULL;
    FcDensity *rho0 = NULL, *rhof = NULL, *fin = NULL;
    FcPlan *plan = NULL;
    double d = 1.0;
    if (fc_measurement_from_builtin("projective-computational(2)", NULL, &m) != FC_STATUS_OK) return 1;
    if (fc_density_from_builtin("plus(2)", NULL, &rho0) != FC_STATUS_OK) return 2;
    if (fc_density_from_builtin("maximally-mixed(2)", NULL, &rhof) != FC_STATUS_OK) return 3;
    if (fc_synthesize(m, rho0, rhof, NULL, &plan) != FC_STATUS_OK) return 4;
    if (fc_run_averaged(rho0, m, plan, NULL, &fin) != FC_STATUS_OK) return 5;
    if (fc_trace_distance(fin, rhof, &d) != FC_STATUS_OK || d > 1e-9) return 6;
    if (fc_measurement_from_builtin("bogus", NULL, &m) == FC_STATUS_OK) return 7;
    printf("%s\n", fc_last_error_message());
    fc_plan_free(plan);
    fc_density_free(rho0);
    fc_density_free(rhof);
    fc_density_free(fin);
    fc_measurement_free(m);
    return 0;
}
"#;

/// Directory holding the library artifacts: tests run from `<target>/<profile>/deps`.
fn artifact_dir() -> PathBuf {
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let lib = artifact_dir().join("libfeedctl_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let exe = dir.path().join("smoke");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let include = header().parent().unwrap().to_path_buf();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .expect("a C compiler named cc is on PATH");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("bogus"));
}
