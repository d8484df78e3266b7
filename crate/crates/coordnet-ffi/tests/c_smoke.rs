//! Compiles and runs a small C program against the generated cdylib and the
//! shipped header, proving the two agree.

use std::io::Write;
use std::path::PathBuf;
use std::process::Command;

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "coordnet.h"

int main(int argc, char **argv) {
    if (argc < 2) return 10;
    CoordnetDetection *det = NULL;
    CoordnetStatus status = coordnet_detect_file(argv[1], "c-smoke", 300, 42, &det);
    if (status != COORDNET_OK) {
        char *err = coordnet_last_error();
        fprintf(stderr, "detect: %s\n", err ? err : "?");
        coordnet_string_free(err);
        return 1;
    }
    CoordnetChannelStats stats;
    memset(&stats, 0, sizeof stats);
    status = coordnet_detection_channel_stats(det, "semantic", &stats);
    if (status != COORDNET_OK) return 2;
    if (stats.coordinated_nodes == 0) return 3;
    long long community = -7;
    status = coordnet_detection_community_of(det, "semantic", "a", &community);
    if (status != COORDNET_OK) return 4;
    status = coordnet_detection_channel_stats(det, "bogus", &stats);
    if (status != COORDNET_INVALID_ARGUMENT) return 5;
    printf("version=%s nodes=%llu links=%llu q=%.4f community=%lld\n",
           coordnet_version(), stats.coordinated_nodes, stats.coordinated_links,
           stats.modularity, community);
    coordnet_detection_free(det);
    return 0;
}
"#;

fn cdylib_dir() -> PathBuf {
    // `cargo test` leaves the cdylib next to the test binary in deps/;
    // `cargo build` uplifts a copy one level higher. Check both.
    let exe = std::env::current_exe().unwrap();
    let deps = exe.parent().unwrap().to_path_buf();
    if deps.join("libcoordnet_ffi.so").exists() {
        return deps;
    }
    deps.parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let lib_dir = cdylib_dir();
    let lib = lib_dir.join("libcoordnet_ffi.so");
    assert!(lib.exists(), "cdylib not found at {}", lib.display());

    let dir = tempfile::tempdir().unwrap();
    let c_path = dir.path().join("smoke.c");
    std::fs::write(&c_path, C_PROGRAM).unwrap();
    let include_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let exe_path = dir.path().join("smoke");

    let compile = Command::new("cc")
        .arg(&c_path)
        .arg("-I")
        .arg(&include_dir)
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lcoordnet_ffi")
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .arg("-o")
        .arg(&exe_path)
        .output()
        .expect("cc available");
    assert!(
        compile.status.success(),
        "compile failed: {}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let posts = dir.path().join("posts.jsonl");
    let mut f = std::fs::File::create(&posts).unwrap();
    for (i, (user, secs)) in [("a", 0), ("b", 15), ("c", 30), ("a", 350), ("b", 360), ("c", 380)]
        .iter()
        .enumerate()
    {
        writeln!(
            f,
            r#"{{"post_id":"p{i}","user_id":"{user}","screen_name":"sn_{user}","timestamp":"2021-03-01T00:{:02}:{:02}Z","text":"t","hashtags":["x"],"urls":[],"mentions":[],"is_original":true}}"#,
            secs / 60,
            secs % 60
        )
        .unwrap();
    }

    let run = Command::new(&exe_path).arg(&posts).output().expect("smoke runs");
    assert!(
        run.status.success(),
        "smoke exited {:?}: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stderr)
    );
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("nodes=3"), "stdout: {stdout}");
}
