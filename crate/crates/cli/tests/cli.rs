use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qcr_core::analysis::all_dealer_cuts_ppt;
use qcr_core::construct::{build_example_state, build_ghz_qcr, ShieldSeed};
use qcr_core::statefile::{read_state, write_state};
use qcr_core::verify::is_qcr;
use serde_json::Value;
use tempfile::TempDir;

fn qcr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcr"))
        .current_dir(dir)
        .env_remove("QCR_CONFIG")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("bad report ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn construct(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let mut full = vec!["construct"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", name]);
    let o = qcr(dir, &full);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    dir.join(name)
}

#[test]
fn example_file_matches_the_library_state() {
    let t = TempDir::new().unwrap();
    let path = construct(t.path(), "ex.json", &["example"]);
    let s = read_state(&path).unwrap();
    assert_eq!(s, build_example_state());
    let o = qcr(t.path(), &["verify", "ex.json"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn ghz_file_verifies() {
    let t = TempDir::new().unwrap();
    construct(t.path(), "g.json", &["ghz", "--d", "2", "--n", "2"]);
    let o = qcr(t.path(), &["verify", "g.json", "--report", "json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["format"], "qcr-verify-report");
    assert_eq!(v["report"]["verdict"], true);
    assert_eq!(
        v["report"]["condition_ii"]["coalitions"]
            .as_array()
            .unwrap()
            .len(),
        2
    );
}

#[test]
fn cap_is_enforced_before_building() {
    let t = TempDir::new().unwrap();
    let o = qcr(
        t.path(),
        &[
            "construct",
            "private",
            "--d",
            "5",
            "--shields",
            "20,20",
            "--seed",
            "1",
            "--out",
            "p.json",
        ],
    );
    assert_eq!(code(&o), 64);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cap"));
    assert!(!t.path().join("p.json").exists());
}

#[test]
fn random_families_need_a_seed() {
    let t = TempDir::new().unwrap();
    let o = qcr(
        t.path(),
        &[
            "construct",
            "private",
            "--shields",
            "2,2",
            "--out",
            "p.json",
        ],
    );
    assert_eq!(code(&o), 64);
    let a = construct(
        t.path(),
        "a.json",
        &["private", "--shields", "2,2", "--seed", "9"],
    );
    let b = construct(
        t.path(),
        "b.json",
        &["private", "--shields", "2,2", "--seed", "9"],
    );
    assert_eq!(read_state(a).unwrap(), read_state(b).unwrap());
    assert_eq!(code(&qcr(t.path(), &["verify", "a.json"])), 0);
}

#[test]
fn negative_controls_name_the_failing_condition() {
    let t = TempDir::new().unwrap();
    construct(t.path(), "prod.json", &["product"]);
    let o = qcr(t.path(), &["verify", "prod.json", "--report", "json"]);
    assert_eq!(code(&o), 1);
    assert!(json(&o)["failing"]
        .as_array()
        .unwrap()
        .contains(&Value::from("condition (i)")));

    construct(t.path(), "cl.json", &["classical"]);
    let o = qcr(t.path(), &["verify", "cl.json", "--report", "json"]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["failing"], serde_json::json!(["condition (ii)"]));
    let d = v["report"]["condition_ii"]["max_distance"]
        .as_f64()
        .unwrap();
    assert!((d - 2.0).abs() < 1e-9);

    construct(t.path(), "b.json", &["biased"]);
    let o = qcr(t.path(), &["verify", "b.json", "--report", "json"]);
    assert_eq!(code(&o), 1);
    let dev = json(&o)["report"]["condition_i"]["max_deviation"]
        .as_f64()
        .unwrap();
    assert!((dev - 1.0 / 6.0).abs() <= 1e-12);
}

#[test]
fn malformed_files_get_their_own_exit_code() {
    let t = TempDir::new().unwrap();
    std::fs::write(t.path().join("bad.json"), "{\"format\": \"qcr-state\"").unwrap();
    assert_eq!(code(&qcr(t.path(), &["verify", "bad.json"])), 65);
    assert_eq!(code(&qcr(t.path(), &["verify", "missing.json"])), 74);
    assert_eq!(code(&qcr(t.path(), &["frobnicate"])), 64);
}

#[test]
fn reduce_writes_one_verified_file_per_branch() {
    let t = TempDir::new().unwrap();
    construct(t.path(), "ex.json", &["example"]);
    let o = qcr(
        t.path(),
        &[
            "reduce", "ex.json", "--keep", "1", "--out", "red", "--report", "json",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let branches = json(&o)["branches"].as_array().unwrap().clone();
    assert_eq!(branches.len(), 2);
    for b in &branches {
        let s = read_state(t.path().join(b["file"].as_str().unwrap())).unwrap();
        assert!(is_qcr(&s, 1e-7).unwrap().verdict);
    }
    assert!(t.path().join("red.branch-0.json").exists());
    assert!(t.path().join("red.branch-1.json").exists());

    construct(t.path(), "g3.json", &["ghz", "--n", "3"]);
    let o = qcr(
        t.path(),
        &["reduce", "g3.json", "--keep", "1,2", "--report", "json"],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["branches"].as_array().unwrap().len(), 2);

    let o = qcr(
        t.path(),
        &[
            "reduce", "g3.json", "--keep", "1", "--branch", "1,0", "--report", "json",
        ],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["branches"][0]["beta"], 1);

    assert_eq!(
        code(&qcr(t.path(), &["reduce", "ex.json", "--keep", "1,2"])),
        64
    );
    assert_eq!(
        code(&qcr(t.path(), &["reduce", "ex.json", "--keep", "3"])),
        64
    );
}

#[test]
fn compose_merges_and_checks_moduli() {
    let t = TempDir::new().unwrap();
    construct(t.path(), "me.json", &["private"]);
    construct(t.path(), "ex.json", &["example"]);
    construct(t.path(), "me3.json", &["private", "--d", "3"]);

    let o = qcr(
        t.path(),
        &["compose", "me.json", "me.json", "--out", "two.json"],
    );
    assert_eq!(code(&o), 0);
    let two = read_state(t.path().join("two.json")).unwrap();
    assert_eq!(is_qcr(&two, 1e-7).unwrap().players, 2);

    let o = qcr(
        t.path(),
        &[
            "compose",
            "ex.json",
            "me.json",
            "--out",
            "four.json",
            "--report",
            "json",
        ],
    );
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["record"]["unitary"], "cX");
    assert_eq!(v["report"]["players"], 3);

    let o = qcr(
        t.path(),
        &["compose", "me.json", "me3.json", "--out", "x.json"],
    );
    assert_eq!(code(&o), 65);

    construct(t.path(), "cl.json", &["classical"]);
    assert_eq!(
        code(&qcr(
            t.path(),
            &["compose", "cl.json", "me.json", "--out", "y.json"]
        )),
        1
    );
    let forced = qcr(
        t.path(),
        &[
            "compose", "cl.json", "me.json", "--out", "y.json", "--force",
        ],
    );
    assert_eq!(
        code(&forced),
        1,
        "forced composition of an insecure input still fails verification"
    );
}

#[test]
fn ppt_exit_codes() {
    let t = TempDir::new().unwrap();
    construct(
        t.path(),
        "sep.json",
        &["separable", "--n", "2", "--seed", "4"],
    );
    let o = qcr(t.path(), &["ppt", "sep.json", "--cuts", "dealer"]);
    assert_eq!(code(&o), 0);
    let o = qcr(
        t.path(),
        &["ppt", "sep.json", "--cuts", "all", "--report", "json"],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["report"]["cuts"].as_array().unwrap().len(), 3);

    construct(t.path(), "me.json", &["private"]);
    let o = qcr(t.path(), &["ppt", "me.json", "--report", "json"]);
    assert_eq!(code(&o), 2);
    let min = json(&o)["report"]["cuts"][0]["min_eigenvalue"]
        .as_f64()
        .unwrap();
    assert!((min + 0.5).abs() < 1e-10);

    let o = qcr(
        t.path(),
        &[
            "ppt",
            "me.json",
            "--cuts",
            "explicit",
            "--side-two",
            "A1.i,A1.s",
        ],
    );
    assert_eq!(code(&o), 2);
    assert_eq!(
        code(&qcr(
            t.path(),
            &["ppt", "me.json", "--cuts", "explicit", "--side-two", "Z"]
        )),
        64
    );
}

#[test]
fn cli_ppt_agrees_with_the_library() {
    let t = TempDir::new().unwrap();
    let s = build_ghz_qcr(2, 2, &ShieldSeed::trivial(3)).unwrap();
    write_state(t.path().join("g.json"), &s, None).unwrap();
    let o = qcr(t.path(), &["ppt", "g.json", "--report", "json"]);
    let lib = all_dealer_cuts_ppt(&s, 1e-9).unwrap();
    let cli: qcr_core::analysis::PptReport =
        serde_json::from_value(json(&o)["report"].clone()).unwrap();
    assert_eq!(cli, lib);
}

#[test]
fn distance_and_measure() {
    let t = TempDir::new().unwrap();
    construct(t.path(), "me.json", &["private"]);
    construct(t.path(), "cl.json", &["classical"]);
    let o = qcr(
        t.path(),
        &["distance", "me.json", "cl.json", "--report", "json"],
    );
    assert_eq!(code(&o), 65, "register layouts differ in shield registers");

    construct(t.path(), "prod.json", &["product"]);
    let o = qcr(
        t.path(),
        &["distance", "prod.json", "cl.json", "--report", "json"],
    );
    assert_eq!(code(&o), 0);
    assert!((json(&o)["trace_norm"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let o = qcr(
        t.path(),
        &["measure", "me.json", "--on", "D.i,A1.i", "--report", "json"],
    );
    assert_eq!(code(&o), 0);
    let outcomes = json(&o)["outcomes"].as_array().unwrap().clone();
    assert_eq!(outcomes.len(), 2);
    assert_eq!(outcomes[1]["digits"], serde_json::json!([1, 1]));
}

#[test]
fn config_file_supplies_defaults() {
    let t = TempDir::new().unwrap();
    let cfg = t.path().join("qcr.toml");
    std::fs::write(&cfg, "seed = 5\ncap = 64\nreport = \"json\"\n").unwrap();
    let run = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_qcr"))
            .current_dir(t.path())
            .env("QCR_CONFIG", &cfg)
            .args(args)
            .output()
            .unwrap()
    };
    let o = run(&[
        "construct",
        "private",
        "--shields",
        "2,2",
        "--out",
        "p.json",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["format"], "qcr-construct-summary");
    let o = run(&[
        "construct",
        "private",
        "--shields",
        "4,5",
        "--out",
        "q.json",
    ]);
    assert_eq!(code(&o), 64);
    let o = run(&[
        "construct",
        "private",
        "--shields",
        "4,5",
        "--cap",
        "100",
        "--out",
        "q.json",
    ]);
    assert_eq!(code(&o), 0);

    std::fs::write(&cfg, "tol = -1.0\n").unwrap();
    assert_eq!(code(&run(&["verify", "p.json"])), 64);
}
