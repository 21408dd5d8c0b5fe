//! One line per acceptance criterion, driven through the binary.

mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use common::*;
use serde_json::Value;
use tempfile::tempdir;

/// The closed-form resolvent disagrees with the simulated functional and
/// with the direct boundary value problem whenever `λ > 0`; the check is
/// kept as written and is expected to fail. See the README.
const KNOWN_DEFECTS: &[usize] = &[7];

struct Reports(BTreeMap<String, Value>);

impl Reports {
    fn load(dir: &Path) -> (Self, Vec<u8>) {
        let bytes = std::fs::read(dir.join("report.json")).expect("report written");
        let doc: Value = serde_json::from_slice(&bytes).expect("valid json");
        let map = doc["reports"]
            .as_array()
            .expect("reports array")
            .iter()
            .map(|r| (r["name"].as_str().expect("name").to_string(), r.clone()))
            .collect();
        (Reports(map), bytes)
    }

    fn get(&self, name: &str) -> &Value {
        self.0.get(name).unwrap_or_else(|| panic!("no report named {name}"))
    }

    fn pass(&self, name: &str) -> bool {
        self.get(name)["verdict"] == "PASS"
    }

    fn z(&self, name: &str) -> f64 {
        self.get(name)["z_score"].as_f64().unwrap_or(f64::NAN)
    }

    /// All named checks pass; detail lists `name z=…`.
    fn all(&self, names: &[&str]) -> (bool, String) {
        let ok = names.iter().all(|n| self.pass(n));
        let detail = names
            .iter()
            .map(|n| {
                let short = n.split_once('.').map_or(*n, |p| p.1);
                let flag = if self.pass(n) { "" } else { " FAIL" };
                let z = self.z(n);
                if z.is_nan() {
                    let v = self.get(n)["mc_estimate"].as_f64().unwrap_or(f64::NAN);
                    format!("{short}{flag} value={v:.2e}")
                } else {
                    format!("{short}{flag} z={z:.2}")
                }
            })
            .collect::<Vec<_>>()
            .join("; ");
        (ok, detail)
    }
}

fn validate(dir: &Path, extra: &[&str]) -> i32 {
    let mut args = vec!["validate"];
    args.extend_from_slice(extra);
    let o = run_in(dir, &args);
    let c = code(&o);
    assert!(
        c == 0 || c == 1,
        "validate crashed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    c
}

#[test]
fn acceptance_criteria() {
    let tmp = tempdir().unwrap();
    let main = tmp.path().join("main");
    validate(&main, &["all"]);
    let (r, main_bytes) = Reports::load(&main);

    let mut lines: Vec<(usize, bool, String)> = Vec::new();
    let mut add =
        |k: usize, title: &str, (ok, detail): (bool, String)| lines.push((k, ok, format!("{title}: {detail}")));

    add(
        1,
        "mean exit time",
        r.all(&["rdbm.mean_exit_time", "rdbm.mean_exit_time.bias_shrinks"]),
    );
    add(
        2,
        "zero hitting time law",
        r.all(&["rdbm.hitting_time_ks", "rdbm.hitting_time_mean"]),
    );
    add(3, "killed hitting probability", r.all(&["rdbm.killed_hit_probability"]));
    add(4, "local time law", r.all(&["rdbm.local_time_law_ks"]));
    add(
        5,
        "sticky extra time",
        r.all(&[
            "boundary.sticky_extra_time[delta=1]",
            "boundary.sticky_extra_time[delta=0]",
        ]),
    );
    add(
        6,
        "holding times",
        r.all(&[
            "boundary.holding_identity_ks",
            "boundary.holding_tempered_ks",
            "boundary.holding_mean",
        ]),
    );
    add(
        7,
        "resolvent",
        r.all(&["rdbm.resolvent_closed_form", "rdbm.resolvent_zero_limit"]),
    );
    add(
        8,
        "transition kernel",
        r.all(&["rdbm.transition_density_ks", "rdbm.elastic_survival"]),
    );
    add(
        9,
        "graph equivalence",
        r.all(&[
            "graph.star_exit_time_ks",
            "graph.edge_frequency[edge=0]",
            "graph.edge_frequency[edge=1]",
            "graph.edge_frequency[edge=2]",
        ]),
    );
    add(
        10,
        "event-count survival",
        r.all(&[
            "quake.gr_survival[n=1]",
            "quake.gr_survival[n=2]",
            "quake.gr_power_law_identity",
        ]),
    );

    // same seed, different thread counts
    let one = tmp.path().join("one");
    let eight = tmp.path().join("eight");
    validate(&one, &["all", "--threads", "1"]);
    validate(&eight, &["all", "--threads", "8"]);
    let (_, one_bytes) = Reports::load(&one);
    let (_, eight_bytes) = Reports::load(&eight);
    let same = main_bytes == one_bytes && one_bytes == eight_bytes;
    add(
        11,
        "determinism",
        (
            same,
            format!("report.json identical across 3 runs (default, 1, 8 threads): {same}"),
        ),
    );

    // flipped drift sign
    let neg = tmp.path().join("negative");
    let c = validate(&neg, &["rdbm", "--negative-control", "--paths", "10000"]);
    let (n, _) = Reports::load(&neg);
    let crit1 = ["rdbm.mean_exit_time"];
    let crit2 = ["rdbm.hitting_time_ks", "rdbm.hitting_time_mean"];
    let flagged = |names: &[&str]| names.iter().any(|k| !n.pass(k) && n.z(k).abs() > 5.0);
    let ok = c == 1 && flagged(&crit1) && flagged(&crit2);
    let detail = crit1
        .iter()
        .chain(&crit2)
        .map(|k| format!("{k} {} z={:.1}", if n.pass(k) { "PASS" } else { "FAIL" }, n.z(k)))
        .collect::<Vec<_>>()
        .join("; ");
    add(12, "negative control", (ok, detail));

    for (k, ok, text) in &lines {
        let tag = match (ok, KNOWN_DEFECTS.contains(k)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        // straight to stderr so the table shows without --nocapture
        writeln!(std::io::stderr().lock(), "criterion {k:>2} {tag:<12} {text}").unwrap();
    }

    let unexpected: Vec<_> = lines
        .iter()
        .filter(|(k, ok, _)| !ok && !KNOWN_DEFECTS.contains(k))
        .collect();
    assert!(
        unexpected.is_empty(),
        "criteria failed: {:?}",
        unexpected.iter().map(|l| l.0).collect::<Vec<_>>()
    );

    // the known defect must stay visible: the closed form still fails while
    // the zero limit and the direct solution agree with simulation
    assert!(!r.pass("rdbm.resolvent_closed_form"));
    assert!(r.pass("rdbm.resolvent_zero_limit"));
    assert!(r.pass("rdbm.resolvent_boundary_value_problem"));
}
