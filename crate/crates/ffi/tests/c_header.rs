//! Compiles a small C program against the generated header and the static
//! library, then runs it.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "featdp.h"

int main(void) {
    FeatdpCalibration cal;
    if (featdp_calibrate(1.0, 1e-5, 10, 50, 0.01, 2.0, &cal) != FEATDP_STATUS_OK) return 1;
    if (fabs(cal.sigma2 - 173.35316538858228) > 1e-9) return 2;

    FeatdpConfig *cfg = featdp_config_new();
    if (featdp_config_set(cfg, "trials", "50") != FEATDP_STATUS_OK) return 3;
    if (featdp_config_set(cfg, "nope", "1") != FEATDP_STATUS_CONFIG) return 4;
    if (featdp_last_error() == NULL) return 5;
    FeatdpTrialStats stats;
    if (featdp_run_trials(cfg, &stats) != FEATDP_STATUS_OK) return 6;
    if (stats.trials != 50) return 7;
    featdp_config_free(cfg);

    FeatdpEncoder *enc = NULL;
    if (featdp_encoder_sample(2, 4, 1.0, 1, &enc) != FEATDP_STATUS_OK) return 8;
    size_t rows = 0, cols = 0;
    featdp_encoder_shape(enc, &rows, &cols);
    if (rows != 2 || cols != 4) return 9;
    featdp_encoder_free(enc);
    printf("ok\n");
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // <target>/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

fn find_cc() -> Option<&'static str> {
    ["cc", "gcc", "clang"].into_iter().find(|c| {
        Command::new(c)
            .arg("--version")
            .output()
            .is_ok_and(|o| o.status.success())
    })
}

#[test]
fn header_declares_the_abi() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/featdp.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in [
        "featdp_last_error",
        "featdp_config_new",
        "featdp_config_set",
        "featdp_config_free",
        "featdp_encoder_sample",
        "featdp_encoder_free",
        "featdp_calibrate",
        "featdp_minimax_bound",
        "featdp_mimo_bound",
        "featdp_server_bound",
        "featdp_accuracy_lower_bound",
        "featdp_optimal_dim_explicit",
        "featdp_optimal_dim_consistent",
        "featdp_run_trials",
        "FEATDP_STATUS_INFEASIBLE",
        "typedef struct FeatdpConfig FeatdpConfig;",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
}

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = find_cc() else {
        panic!("no C compiler found on PATH");
    };
    let lib_dir = target_dir();
    let staticlib = lib_dir.join("libfeatdp_ffi.a");
    assert!(staticlib.exists(), "missing {}", staticlib.display());
    let dir = tempfile_dir();
    let src = dir.join("smoke.c");
    let exe = dir.join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&staticlib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "smoke program exited with {:?}",
        out.status.code()
    );
    assert_eq!(String::from_utf8_lossy(&out.stdout), "ok\n");
}

fn tempfile_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("c_header");
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
