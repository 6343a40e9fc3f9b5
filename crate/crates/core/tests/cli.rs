//! End-to-end CLI runs pinned against files in `tests/golden/`.
//! Regenerate with `UPDATE_GOLDEN=1 cargo test --test cli`.

use std::path::PathBuf;
use std::process::{Command, Output};

fn gmetrix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gmetrix"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn assert_golden(name: &str, actual: &str) {
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e} (run with UPDATE_GOLDEN=1)", path.display()));
    assert!(expected == actual, "{name} differs from golden output:\n{actual}");
}

fn run_golden(name: &str, args: &[&str], code: i32) {
    let out = gmetrix(args);
    assert_eq!(
        out.status.code(),
        Some(code),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_golden(name, &String::from_utf8(out.stdout).unwrap());
}

#[test]
fn realize() {
    run_golden("realize_3_4_5.json", &["realize", "3", "4", "5"], 0);
}

#[test]
fn fn_eval() {
    run_golden("eval_min.json", &["fn", "eval", "min(x,1)", "--at", "3"], 0);
}

#[test]
fn fn_classify() {
    run_golden(
        "classify_square.json",
        &["fn", "classify", "x^2", "--x-max", "10", "--points", "2000"],
        0,
    );
}

#[test]
fn member_ladder() {
    run_golden("member_square_eb.json", &["member", "x^2", "--class", "EB"], 0);
    run_golden("member_exp_eb.json", &["member", "exp(x)-1", "--class", "EB"], 1);
    run_golden("member_zero_eb.json", &["member", "0", "--class", "EB"], 1);
}

#[test]
fn region_check_ceil() {
    run_golden(
        "region_ceil.json",
        &["region", "check", "ceil(x)", "--a", "1", "--b", "1", "--n", "8", "--samples", "8"],
        0,
    );
}

#[test]
fn region_plot_svg() {
    let dir = std::env::temp_dir().join(format!("gmetrix-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let svg = dir.join("plot.svg");
    let mutated = "piece(x<=1 ? ceil(x) : piece(x<=2 ? 3 : ceil(x)))";
    let out = gmetrix(&[
        "region", "plot", mutated, "--a", "1", "--b", "1", "--n", "6", "--samples", "8", "-o",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_golden("region_mutated.svg", &std::fs::read_to_string(&svg).unwrap());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn space_round_trip() {
    let dir = std::env::temp_dir().join(format!("gmetrix-space-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("u.json");
    let out = gmetrix(&["space", "random", "--kind", "ultrametric", "-n", "4", "--seed", "3", "-o", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_golden("space_ultrametric.json", &std::fs::read_to_string(&file).unwrap());
    run_golden("verify_ultrametric.json", &["space", "verify", file.to_str().unwrap()], 0);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| gmetrix(args).status.code();
    assert_eq!(code(&["fn", "eval", "2x", "--at", "1"]), Some(64));
    assert_eq!(code(&["frobnicate"]), Some(64));
    assert_eq!(code(&["member", "x", "--class", "Metric"]), Some(64));
    assert_eq!(code(&["fn", "eval", "x-1", "--at", "0"]), Some(65));
    assert_eq!(code(&["region", "check", "x", "--a", "1", "--b", "1", "--n", "3"]), Some(65));
    assert_eq!(code(&["space", "verify", "/nonexistent/space.json"]), Some(66));
    assert_eq!(code(&["search", "x/(1+x)", "--class", "M", "--samples", "2000"]), Some(2));
    assert_eq!(code(&["search", "exp(x)-1", "--class", "MB", "--samples", "2000"]), Some(1));
}

#[test]
fn thread_count_does_not_change_output() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_gmetrix"))
            .args(["member", "sqrt(x)", "--class", "MB", "--samples", "20000"])
            .env("GMETRIX_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("1"), run("4"));
}
