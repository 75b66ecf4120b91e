use std::path::Path;
use std::process::{Command, Output};

use evindex::hill::KChoice;
use evindex::maxtest::{run_max_test, NullSpec};
use evindex::mc::McReport;
use evindex::simulate::{generate, Model, ModelSpec, SeedSpec};
use evindex::Probability;
use evindex_cli::ingest::{ingest_csv, IngestOptions};
use evindex_cli::report::ReportDocument;

fn evitest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evitest")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(dir: &Path, name: &str, model: &str, n: usize, p: usize, seed: u64) -> std::path::PathBuf {
    let path = dir.join(name);
    let out = evitest(&[
        "simulate", "--model", model, "--n", &n.to_string(), "--p", &p.to_string(), "--seed", &seed.to_string(),
        "--out", s(&path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn simulate_export_round_trips_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate(dir.path(), "a.csv", "A", 300, 7, 42);
    let ds = ingest_csv(&path, &IngestOptions::default()).unwrap();
    let direct = generate(&ModelSpec::null(Model::A, 300, 7).unwrap(), SeedSpec::new(42, 0)).unwrap();
    assert_eq!(ds.matrix, direct);
    assert_eq!(ds.column_names[0], "x1");
}

#[test]
fn cli_decision_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate(dir.path(), "b.csv", "B", 800, 20, 7);
    let g0 = dir.path().join("g0.txt");
    std::fs::write(&g0, "1\n".repeat(20)).unwrap();
    let json = dir.path().join("r.json");
    let out = evitest(&["test", s(&path), "--k", "60", "--gamma0", s(&g0), "--out", s(&json)]);
    assert_eq!(code(&out), 0);
    let doc = ReportDocument::from_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let data = ingest_csv(&path, &IngestOptions::default()).unwrap().matrix;
    let lib = run_max_test(&data, &KChoice::uniform(60, 20, 800).unwrap(), &NullSpec::unit(20), Probability::default())
        .unwrap();
    let cli = doc.results[0].report.as_ref().unwrap();
    assert_eq!(cli, &lib);
    assert_eq!(cli.statistic.to_bits(), lib.statistic.to_bits());
    assert_eq!(doc.hill.as_ref().unwrap().rows.len(), 20);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,b\n1,2\n3,NaN\n4,5\n").unwrap();
    let out = evitest(&["test", s(&bad), "--k", "1", "--equal"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 3, column 2"));

    let dup = dir.path().join("dup.csv");
    let rows: String = (1..=50).map(|i| format!("{0},{0},{1}\n", i * i, (i * 37) % 50 + 1)).collect();
    std::fs::write(&dup, format!("a,b,c\n{rows}")).unwrap();
    assert_eq!(code(&evitest(&["test", s(&dup), "--k", "10", "--equal", "--tests", "T_W"])), 4);
    assert_eq!(code(&evitest(&["test", s(&dup), "--k", "10", "--equal", "--alpha", "1.5"])), 2);
    assert_eq!(code(&evitest(&["test", s(&dup), "--k", "10"])), 2);
    assert_eq!(code(&evitest(&["test", s(&dup), "--k", "10", "--equal", "--tests", "T_Q"])), 2);
    assert_eq!(code(&evitest(&["test", s(&dup), "--k", "10", "--equal"])), 0);

    let short = dir.path().join("g0.txt");
    std::fs::write(&short, "1\n1\n").unwrap();
    assert_eq!(code(&evitest(&["test", s(&dup), "--k", "10", "--gamma0", s(&short)])), 2);

    let neg = dir.path().join("neg.csv");
    std::fs::write(&neg, "a,b\n-1,-2\n-3,-4\n-5,-6\n").unwrap();
    assert_eq!(code(&evitest(&["test", s(&neg), "--k", "1", "--equal"])), 3);
    assert_eq!(code(&evitest(&["test", s(&neg), "--k", "1", "--equal", "--negate"])), 0);
}

#[test]
fn one_test_one_k_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate(dir.path(), "c.csv", "C", 200, 5, 1);
    let out = evitest(&["test", s(&path), "--k", "20", "--equal", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("20,T*,"));
}

#[test]
fn sweep_svg_structure() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate(dir.path(), "d.csv", "B", 500, 10, 3);
    let svg = dir.path().join("s.svg");
    let out = evitest(&[
        "sweep-k", s(&path), "--equal", "--k-min", "20", "--k-max", "215", "--step", "5", "--tests", "T,T_Omega(identity)",
        "--out", s(&svg),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&svg).unwrap();
    let lines: Vec<&str> = text.lines().filter(|l| l.starts_with("<polyline")).collect();
    assert_eq!(lines.len(), 2);
    for l in &lines {
        assert_eq!(l.matches(',').count(), 40);
    }
    let again = evitest(&[
        "sweep-k", s(&path), "--equal", "--k-min", "20", "--k-max", "215", "--step", "5", "--tests", "T,T_Omega(identity)",
        "--format", "svg",
    ]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
    assert_eq!(code(&evitest(&["sweep-k", s(&path), "--equal", "--k-min", "30", "--k-max", "20"])), 2);
}

fn sweep_pvalues(path: &Path, extra: &[&str]) -> Vec<f64> {
    let mut args = vec!["sweep-k", s(path), "--equal", "--format", "json"];
    args.extend_from_slice(extra);
    let out = evitest(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc = ReportDocument::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    doc.results.iter().map(|e| e.report.as_ref().unwrap().p_value).collect()
}

#[test]
fn sweep_identical_columns_never_reject() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (1..=200)
        .map(|i| {
            let v = 1.0 / (1.0 - (i as f64 * 0.618_033_988_7).fract());
            vec![v.to_string(); 50].join(",") + "\n"
        })
        .collect();
    let path = dir.path().join("same.csv");
    std::fs::write(&path, rows).unwrap();
    for pv in sweep_pvalues(&path, &["--k-min", "5", "--k-max", "100", "--step", "5"]) {
        assert!(pv > 0.999, "{pv}");
    }
}

#[test]
fn sweep_detects_perturbed_column() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    std::fs::write(&g, format!("2\n{}", "1\n".repeat(19))).unwrap();
    let path = dir.path().join("alt.csv");
    let out = evitest(&[
        "simulate", "--model", "B", "--n", "2000", "--p", "20", "--gamma", s(&g), "--seed", "5", "--out", s(&path),
    ]);
    assert_eq!(code(&out), 0);
    let pv = sweep_pvalues(&path, &["--k-min", "100", "--k-max", "400", "--step", "50"]);
    assert!(pv.iter().all(|&p| p < 0.01), "{pv:?}");

    let null = simulate(dir.path(), "null.csv", "B", 2000, 20, 6);
    let pv = sweep_pvalues(&null, &["--k-min", "100", "--k-max", "400", "--step", "50"]);
    assert!(pv.iter().filter(|&&p| p < 0.05).count() <= 2, "{pv:?}");
}

#[test]
fn mc_and_compare_tables() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("m.json");
    let out = evitest(&[
        "mc", "--models", "B", "--tests", "T", "--p", "50", "--k", "50", "--reps", "200", "--seed", "3", "--out",
        s(&json),
    ]);
    assert_eq!(code(&out), 0);
    let report = McReport::from_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report.cells.len(), 1);
    assert_eq!(report.provenance.config.master_seed, 3);
    let out = evitest(&["compare-tables", s(&json), "--tolerance", "0.1"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("reference=0.07") && text.contains("0 of 1 cells"), "{text}");

    let unmatched = dir.path().join("u.json");
    evitest(&["mc", "--models", "B", "--p", "20", "--k", "20", "--reps", "5", "--n", "200", "--out", s(&unmatched)]);
    assert_eq!(code(&evitest(&["compare-tables", s(&unmatched)])), 2);
    assert_eq!(code(&evitest(&["mc", "--p", "20", "--k", "20", "--reps", "0"])), 2);
}
