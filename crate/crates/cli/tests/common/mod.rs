#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stickyquake"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = vec!["--out", dir.to_str().expect("utf-8 path")];
    all.extend_from_slice(args);
    run(&all)
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

pub fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).expect("config written");
    p.to_str().expect("utf-8 path").to_string()
}

/// Data rows of a CSV written with a digest comment and a header.
pub fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).expect("csv exists");
    let mut lines = text.lines();
    assert!(lines.next().expect("digest line").starts_with("# config_digest: "));
    lines.next().expect("header");
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}
