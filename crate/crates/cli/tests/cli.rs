use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_freshcost"));
    cmd.env_remove("FRESHCOST_ASSUMPTIONS");
    cmd
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn defaults() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/defaults.json")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stub(confusion: &Path, out: &Path) {
    let o = run(&["gen-stub", "--confusion", p(confusion), "--out", p(out)]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn derive_mcc_formats() {
    let o = run(&["derive-mcc", "--assumptions", p(&defaults())]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for v in ["4.0", "9.0", "3.5", "4.5", "99.9", "499.8"] {
        assert!(text.contains(v), "missing {v} in\n{text}");
    }
    assert!(!text.contains("499.75"));

    let o = run(&["derive-mcc", "--assumptions", p(&defaults()), "--format", "json"]);
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["values"][2][1], 499.75);

    let o = run(&["derive-mcc", "--assumptions", p(&defaults()), "--format", "csv"]);
    assert!(stdout(&o).contains("SP,99.9,499.75,0"));
}

#[test]
fn derive_mcc_zero_probability_and_missing_file() {
    let o = run(&[
        "derive-mcc",
        "--assumptions",
        p(&fixture("zero_purchase.json")),
        "--format",
        "json",
    ]);
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(json["values"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|r| r.as_array().unwrap())
        .all(|v| v == 0.0));

    let o = run(&["derive-mcc", "--assumptions", "/no/such/file.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/no/such/file.json"));
}

#[test]
fn assumptions_path_from_environment() {
    let o = bin()
        .env("FRESHCOST_ASSUMPTIONS", defaults())
        .args(["derive-mcc"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).contains("499.8"));

    let o = run(&["derive-mcc"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_reports_cell_paths() {
    let o = run(&["validate", "--assumptions", p(&defaults())]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "OK");

    let o = run(&["validate", "--assumptions", p(&fixture("bad_probability.json"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("purchase_prob[1][1]"), "{}", stderr(&o));
}

#[test]
fn evaluate_subtotal_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("p.jsonl");
    stub(&fixture("spoiled_as_half_fresh.json"), &preds);
    let report = dir.path().join("report.json");
    let o = run(&[
        "evaluate",
        "--assumptions",
        p(&defaults()),
        "--predictions",
        p(&preds),
        "--report",
        p(&report),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("$4,998"), "{text}");
    assert!(text.contains("sp-hf-10"));

    let doc = freshcost_core::prediction_io::read_report(&report).unwrap();
    let r = &doc.models[0].report;
    assert_eq!(r.cumulative_mcc, 4997.5);
    assert_eq!(r.accuracy, 442.0 / 452.0);
}

#[test]
fn evaluate_perfect_and_mismatched_classes() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("perfect.jsonl");
    stub(&fixture("perfect.json"), &preds);
    let o = run(&["evaluate", "--assumptions", p(&defaults()), "--predictions", p(&preds)]);
    let text = stdout(&o);
    assert!(text.contains("accuracy         100.00%"), "{text}");
    assert!(text.contains("cumulative MCC   $0 (0.0)"), "{text}");

    let o = run(&[
        "evaluate",
        "--assumptions",
        p(&fixture("two_class.json")),
        "--predictions",
        p(&preds),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("do not match"), "{}", stderr(&o));
}

#[test]
fn evaluate_headerless_file_with_unknown_label() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("p.jsonl");
    fs::write(&preds, "{\"item_id\":\"a\",\"actual\":\"FR\",\"predicted\":\"HF\"}\n").unwrap();
    let o = run(&[
        "evaluate",
        "--assumptions",
        p(&fixture("two_class.json")),
        "--predictions",
        p(&preds),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("'a'"), "{}", stderr(&o));
}

#[test]
fn evaluate_golden_file() {
    let o = run(&[
        "evaluate",
        "--assumptions",
        p(&defaults()),
        "--predictions",
        p(&fixture("golden_predictions.jsonl")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("golden"));
    assert!(text.contains("(3.5)"));
}

#[test]
fn compare_ranks_by_cost() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "compare".to_string(),
        "--assumptions".into(),
        p(&defaults()).into(),
        "--predictions".into(),
    ];
    for name in ["UNet", "18-FT", "50-FT", "18-FE", "50-FE"] {
        let out = dir.path().join(format!("{name}.jsonl"));
        stub(&fixture(&format!("ranking/{name}.json")), &out);
        args.push(p(&out).to_string());
    }
    let o = bin().args(&args).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let order: Vec<String> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().nth(1).unwrap().to_string())
        .collect();
    assert_eq!(order, ["50-FE", "50-FT", "18-FE", "18-FT", "UNet"]);
}

#[test]
fn compare_single_and_tie() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    stub(&fixture("perfect.json"), &a);
    let o = run(&["compare", "--assumptions", p(&defaults()), "--predictions", p(&a)]);
    assert_eq!(stdout(&o).lines().count(), 2);

    // equal cost (4.0 each), different accuracy
    let lo = dir.path().join("lo.json");
    let hi = dir.path().join("hi.json");
    fs::write(
        &lo,
        r#"{"model_id":"lower","labels":["FR","HF","SP"],"counts":[[1,1,0],[0,1,0],[0,0,0]]}"#,
    )
    .unwrap();
    fs::write(
        &hi,
        r#"{"model_id":"higher","labels":["FR","HF","SP"],"counts":[[5,1,0],[0,5,0],[0,0,5]]}"#,
    )
    .unwrap();
    let (lo_p, hi_p) = (dir.path().join("lo.jsonl"), dir.path().join("hi.jsonl"));
    stub(&lo, &lo_p);
    stub(&hi, &hi_p);
    let o = run(&[
        "compare",
        "--assumptions",
        p(&defaults()),
        "--predictions",
        p(&lo_p),
        p(&hi_p),
    ]);
    let rows: Vec<String> = stdout(&o).lines().skip(1).map(String::from).collect();
    assert!(rows[0].contains("higher"), "{rows:?}");
}

#[test]
fn simulate_is_deterministic_and_validates_n() {
    let defaults = defaults();
    let args = [
        "simulate",
        "--assumptions",
        p(&defaults),
        "--cell",
        "FR",
        "FR",
        "--n",
        "10",
        "--seed",
        "1",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);

    let o = run(&[
        "simulate",
        "--assumptions",
        p(&defaults),
        "--cell",
        "FR",
        "FR",
        "--n",
        "0",
        "--seed",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&[
        "simulate",
        "--assumptions",
        p(&defaults),
        "--cell",
        "FR",
        "XX",
        "--n",
        "5",
        "--seed",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_items_day() {
    let dir = tempfile::tempdir().unwrap();
    let items = dir.path().join("items.jsonl");
    fs::write(
        &items,
        r#"{"schema_version":1,"classes":["FR","HF","SP"]}
{"item_id":"1","actual":"FR","predicted":"SP"}
"#,
    )
    .unwrap();
    let o = run(&[
        "simulate",
        "--assumptions",
        p(&defaults()),
        "--items",
        p(&items),
        "--seed",
        "3",
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["summary"]["total_realized_regret"], 9.0);

    let o = run(&[
        "simulate",
        "--assumptions",
        p(&defaults()),
        "--items",
        p(&items),
        "--days",
        "50",
        "--seed",
        "3",
        "--format",
        "json",
    ]);
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["summary"]["n"], 50);
    assert_eq!(json["summary"]["mean_realized_regret"], 9.0);
}

#[test]
fn gen_stub_realizes_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.jsonl");
    stub(&fixture("spoiled_as_half_fresh.json"), &out);
    let set = freshcost_core::prediction_io::read_predictions(&out).unwrap();
    let spec = freshcost_core::prediction_io::load_stub_spec(&fixture("spoiled_as_half_fresh.json")).unwrap();
    let cm = freshcost_core::evaluation::confusion_from_records(&set.records, &spec.confusion.labels).unwrap();
    assert_eq!(cm, spec.confusion);
    // deterministic bytes
    let again = dir.path().join("t.jsonl");
    stub(&fixture("spoiled_as_half_fresh.json"), &again);
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn recommend_action() {
    let o = run(&["recommend", "--assumptions", p(&defaults()), "--probs", "0.5,0,0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let line = text.lines().find(|l| l.contains("recommended")).unwrap();
    assert!(line.starts_with("discard"));
    assert!(text.contains("247.3750"));

    let o = run(&["recommend", "--assumptions", p(&defaults()), "--probs", "0.5,0.1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn eda_on_synthetic_tree() {
    use image::{Rgb, RgbImage};
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("data");
    for (class, value) in [("Fresh", 200u8), ("Half-Fresh", 120), ("Spoiled", 40)] {
        let path = root.join("train").join(class).join("x.png");
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        RgbImage::from_pixel(6, 4, Rgb([value, value, value]))
            .save(&path)
            .unwrap();
    }
    let out = dir.path().join("out");
    let o = run(&["eda", "--root", p(&root), "--out-dir", p(&out), "--plots"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("histogram.csv")).unwrap();
    assert_eq!(csv.lines().count() - 1, 768);
    let total: u64 = csv
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 3 * 24);
    assert!(out.join("manifest.json").exists());
    assert!(out.join("hist_Spoiled.png").exists());

    let o = run(&["eda", "--root", p(&dir.path().join("missing")), "--out-dir", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
}
