use std::path::Path;
use std::process::{Command, Output};

use cmd_harness::trace::read_trace;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_centered-md"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

#[test]
fn zero_adversary_gives_zero_trace() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "zero.json",
        r#"{"algorithm":"pf_static","adversary":{"kind":"constant","T":10,"g":[0.0]},
            "verify":["centered_md","stability","stability_sum","bound","integral_lemmas"],
            "outputs":{"trace":"zero.csv","report":"zero_report.json"}}"#,
    );
    let out = run_in(dir.path(), &["run", "zero.json"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = read_trace(std::fs::File::open(dir.path().join("zero.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 10);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.t, i + 1);
        for x in [
            r.g_norm,
            r.w_norm,
            r.play_norm,
            r.inst_regret,
            r.cum_regret,
            r.delta_t.unwrap(),
        ] {
            assert_eq!(x, 0.0);
        }
        assert_eq!(r.bound_rhs, Some(4.0));
    }
    let report = json(&std::fs::read(dir.path().join("zero_report.json")).unwrap());
    assert_eq!(report["passed"], true);
    assert_eq!(report["checks"].as_object().unwrap().len(), 5);
}

#[test]
fn rademacher_checks_pass() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "rad.json",
        r#"{"algorithm":"pf_static","algorithm_params":{"G":1,"eps":1,"k":3},
            "adversary":{"kind":"rademacher","T":10000,"seed":3},
            "comparators":{"kind":"fixed","u":[-10.0]},
            "verify":["centered_md","stability","bound"]}"#,
    );
    let out = run_in(dir.path(), &["run", "rad.json"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out.stdout);
    for check in ["centered_md", "stability", "bound"] {
        assert_eq!(report["checks"][check]["passed"], true, "{check}");
    }
    assert!(report["summary"]["regret_to_bound"].as_f64().unwrap() < 1.0);
}

#[test]
fn dynamic_lower_bound_reports_sublinearity() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "dyn.json",
        r#"{"algorithm":"dynamic","adversary":{"kind":"constrained_lb","T":1024},
            "comparators":{"kind":"companion"},"verify":["centered_md","bound"]}"#,
    );
    let out = run_in(dir.path(), &["run", "dyn.json"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out.stdout);
    let sub = &report["summary"]["sublinearity"];
    let ts: Vec<u64> = sub["t"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(ts, [128, 256, 512, 1024]);
    assert_eq!(sub["regret_over_t"].as_array().unwrap().len(), 4);
    assert_eq!(report["summary"]["comparator_path_length"], 2.0);
}

#[test]
fn unknown_key_exits_with_pointer() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "bad.json",
        r#"{"algorithm":"pf_static","adversary":{"kind":"constant","T":10,"g":[0.0],"bogus":1}}"#,
    );
    let out = run_in(dir.path(), &["run", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("invalid config at /adversary/bogus"), "{err}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"algorithm":"dynamic","adversary":{"kind":"gaussian_clipped","T":500,"seed":11,"dim":3},
        "comparators":{"kind":"piecewise","switch_points":[100,300],"values":[[1,0,0],[0,-2,0],[0,0,3]]},
        "verify":["centered_md","stability","bound","integral_lemmas"],
        "outputs":{"trace":"t.csv","report":"r.json"}}"#;
    let mut seen = Vec::new();
    for sub in ["a", "b"] {
        std::fs::create_dir(dir.path().join(sub)).unwrap();
        write(&dir.path().join(sub), "c.json", config);
        let out = run_in(&dir.path().join(sub), &["run", "c.json"]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let t = std::fs::read(dir.path().join(sub).join("t.csv")).unwrap();
        let r = std::fs::read(dir.path().join(sub).join("r.json")).unwrap();
        seen.push((t, r));
    }
    assert_eq!(seen[0], seen[1]);
    assert!(!seen[0].0.contains(&b'\r'));
}

#[test]
fn every_algorithm_runs() {
    let dir = tempfile::tempdir().unwrap();
    let adv = r#""adversary":{"kind":"gaussian_clipped","T":300,"seed":5,"dim":2}"#;
    let cases = [
        r#""algorithm":"scale_free","verify":["centered_md","stability","bound","range_ratio","integral_lemmas"]"#,
        r#""algorithm":"implicit_optimistic","verify":["centered_md","stability","bound"]"#,
        r#""algorithm":"implicit_optimistic","algorithm_params":{"hint":"norm","hint_scale":0.5},"verify":["bound"]"#,
        r#""algorithm":"implicit_optimistic","algorithm_params":{"hint":"zero"},"verify":["bound"]"#,
        r#""algorithm":"lazy","algorithm_params":{"schedule":{"uniform":7},"base":"dynamic"}"#,
        r#""algorithm":"lazy","algorithm_params":{"schedule":{"intervals":[[1,100],[101,300]]}}"#,
        r#""algorithm":"onedim","algorithm_params":{"base":"scale_free"},"verify":["integral_lemmas"]"#,
        r#""algorithm":"pf_static","algorithm_params":{"radius":0.5}"#,
    ];
    for (i, case) in cases.iter().enumerate() {
        let name = format!("c{i}.json");
        write(dir.path(), &name, &format!("{{{case},{adv}}}"));
        let out = run_in(dir.path(), &["run", &name]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{case}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let report = json(&out.stdout);
        assert_eq!(report["horizon"], 300);
        if case.contains("radius") {
            assert!(report["summary"]["max_play_norm"].as_f64().unwrap() <= 0.5 + 1e-15);
        }
    }
}

#[test]
fn sweep_of_one_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("configs")).unwrap();
    write(
        &dir.path().join("configs"),
        "one.json",
        r#"{"algorithm":"scale_free","adversary":{"kind":"rademacher","T":2000,"seed":9,"G":3},
            "verify":["centered_md","bound","range_ratio"]}"#,
    );
    let single = run_in(dir.path(), &["run", "configs/one.json"]);
    let swept = run_in(dir.path(), &["sweep", "configs"]);
    assert_eq!(single.status.code(), Some(0));
    assert_eq!(swept.status.code(), Some(0));
    let sweep = json(&swept.stdout);
    assert_eq!(sweep["runs"].as_array().unwrap().len(), 1);
    assert_eq!(sweep["runs"][0]["report"], json(&single.stdout));
}

#[test]
fn scale_invariance_sweep() {
    let dir = tempfile::tempdir().unwrap();
    for j in -3..=3 {
        let g = 2f64.powi(j);
        write(
            dir.path(),
            &format!("s{}.json", j + 3),
            &format!(
                r#"{{"algorithm":"scale_free","adversary":{{"kind":"gaussian_clipped","T":3000,"seed":21,"G":{g},"dim":2}},
                    "group":"scale","verify":["range_ratio"]}}"#
            ),
        );
    }
    let out = run_in(dir.path(), &["sweep", ".", "--out", "sweep.json"]);
    assert_eq!(out.status.code(), Some(0));
    let sweep = json(&std::fs::read(dir.path().join("sweep.json")).unwrap());
    let group = &sweep["groups"][0];
    assert_eq!(group["group"], "scale");
    assert_eq!(group["runs"].as_array().unwrap().len(), 7);
    assert!(
        group["play_max_rel_diff"].as_f64().unwrap() <= 1e-12,
        "{group}"
    );
}

/// The constant-loss iterate overflows before T = 10⁴; the failure is reported, not raised.
#[test]
fn sweep_records_sub_run_errors() {
    let dir = tempfile::tempdir().unwrap();
    for t in [10, 100, 1000, 10_000] {
        write(
            dir.path(),
            &format!("t{t:05}.json"),
            &format!(
                r#"{{"algorithm":"implicit_optimistic","adversary":{{"kind":"constant","T":{t},"g":[1.0]}},
                    "comparators":{{"kind":"fixed","u":[1.0]}},"group":"horizon"}}"#
            ),
        );
    }
    let out = run_in(dir.path(), &["sweep", "."]);
    assert_eq!(out.status.code(), Some(1));
    let sweep = json(&out.stdout);
    let runs = sweep["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 4);
    assert!(runs[..3].iter().all(|r| r["error"].is_null()));
    assert!(runs[3]["error"].as_str().unwrap().contains("round"));
    assert!(sweep["groups"][0]["final_regret_spread"].is_null());
}

#[test]
fn verify_trace_checks() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "c.json",
        r#"{"algorithm":"pf_static","adversary":{"kind":"gaussian_clipped","T":1000,"seed":2},
            "comparators":{"kind":"fixed","u":[3.0]},"outputs":{"trace":"t.csv"}}"#,
    );
    assert_eq!(
        run_in(dir.path(), &["run", "c.json"]).status.code(),
        Some(0)
    );
    let out = run_in(
        dir.path(),
        &[
            "verify",
            "t.csv",
            "--check",
            "ledger",
            "--check",
            "bound",
            "--check",
            "stability-sum",
            "--check",
            "integral-lemmas",
            "--G",
            "1",
            "--eps",
            "1",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    assert_eq!(json(&out.stdout)["checks"].as_object().unwrap().len(), 4);

    // A bound below the measured regret fails with exit status 1.
    let header = "t,g_norm,w_norm,play_norm,inst_regret,cum_regret,delta_t,bound_rhs\n";
    write(
        dir.path(),
        "bad.csv",
        &format!("{header}1,1,0,0,2,2,,1\n2,1,0,0,0,2,,3\n"),
    );
    let out = run_in(
        dir.path(),
        &["verify", "bad.csv", "--check", "bound", "--check", "ledger"],
    );
    assert_eq!(out.status.code(), Some(1));
    let report = json(&out.stdout);
    assert_eq!(report["checks"]["bound"]["details"]["first_violation"], 1);
    assert_eq!(report["checks"]["ledger"]["passed"], true);

    let out = run_in(
        dir.path(),
        &["verify", "bad.csv", "--check", "stability-sum"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lowerbound_sequences() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["lowerbound", "--kind", "constrained", "--T", "4"],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "t,g,u\n\
         1,1.0000000000000000e0,-1.0000000000000000e0\n\
         2,1.0000000000000000e0,-1.0000000000000000e0\n\
         3,-1.0000000000000000e0,1.0000000000000000e0\n\
         4,-1.0000000000000000e0,1.0000000000000000e0\n"
    );

    let out = run_in(
        dir.path(),
        &[
            "lowerbound",
            "--kind",
            "unconstrained",
            "--T",
            "64",
            "--C",
            "1",
            "--out",
            "lb.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("lb.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 65);
    let gs: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(gs.iter().all(|g| g.abs() == 1.0));

    let out = run_in(
        dir.path(),
        &["lowerbound", "--kind", "unconstrained", "--T", "12"],
    );
    assert_eq!(out.status.code(), Some(2));
}
