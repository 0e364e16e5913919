use std::process::Command;

use fragcoag::io::parse_partition_row;
use fragcoag::verify::list_scenarios;
use fragcoag::Validate;
use fragcoag_cli::{run_cli, EXIT_OK, EXIT_USAGE};

fn cli(args: &[&str]) -> fragcoag_cli::CliOutput {
    run_cli(std::iter::once("fragcoag").chain(args.iter().copied()))
}

#[test]
fn dirichlet_rows_lie_on_the_simplex() {
    let out = cli(&["--seed", "1", "--samples", "50", "sample", "dirichlet", "--parts", "4", "--alpha", "0.5"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let rows: Vec<&str> = out.stdout.lines().collect();
    assert_eq!(rows.len(), 50);
    for row in rows {
        let x = parse_partition_row(row).unwrap();
        assert_eq!(x.len(), 4);
        assert!((x.masses().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!(x.is_valid());
    }
}

#[test]
fn pgf_at_log_two() {
    let out = cli(&["yule", "pgf", "--k", "1", "--t", "0.6931471805599453", "--s", "0.5"]);
    assert_eq!(out.code, EXIT_OK);
    let v: f64 = out.stdout.trim().parse().unwrap();
    assert!((v - 1.0 / 3.0).abs() < 1e-12, "{v}");
}

#[test]
fn json_sample_records_seed_and_stream() {
    let out = cli(&["--seed", "9", "--samples", "3", "--format", "json", "sample", "pd", "--theta", "1"]);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["seed"], 9);
    assert_eq!(v["stream"], "sample/pd");
    assert_eq!(v["samples"].as_array().unwrap().len(), 3);
}

#[test]
fn csv_round_trips_exactly() {
    let csv = cli(&["--seed", "4", "--samples", "5", "sample", "dirichlet", "--parts", "3", "--alpha", "1"]).stdout;
    let json = cli(&["--seed", "4", "--samples", "5", "--format", "json", "sample", "dirichlet", "--parts", "3", "--alpha", "1"]);
    let v: serde_json::Value = serde_json::from_str(&json.stdout).unwrap();
    for (row, sample) in csv.lines().zip(v["samples"].as_array().unwrap()) {
        let parsed = parse_partition_row(row).unwrap();
        let expected: Vec<f64> = sample["masses"].as_array().unwrap().iter().map(|m| m.as_f64().unwrap()).collect();
        assert_eq!(parsed.masses(), expected.as_slice());
    }
}

#[test]
fn exit_codes() {
    assert_eq!(cli(&["--help"]).code, EXIT_OK);
    assert_eq!(cli(&["--version"]).code, EXIT_OK);
    let bad = cli(&["sample", "dirichlet", "--parts", "0", "--alpha", "1"]);
    assert_eq!(bad.code, EXIT_USAGE);
    assert!(bad.stderr.starts_with("error:"));
    assert_eq!(cli(&["no-such-command"]).code, EXIT_USAGE);
    assert_eq!(cli(&["verify", "no_such_scenario"]).code, EXIT_USAGE);
    assert_eq!(cli(&["verify", "prop1", "--samples", "10"]).code, EXIT_USAGE);
    assert_eq!(cli(&["verify", "prop1", "--theta", "1"]).code, EXIT_USAGE);
    let ok = cli(&["--samples", "2000", "verify", "prop1"]);
    assert_eq!(ok.code, EXIT_OK, "{}", ok.stdout);
    assert!(ok.stdout.ends_with("prop1,passed,,,true\n"));
}

#[test]
fn list_scenarios_is_complete() {
    let out = cli(&["list-scenarios"]);
    let listed: Vec<&str> = out.stdout.lines().collect();
    assert_eq!(listed, list_scenarios());
    for name in ["prop1", "prop1_reverse", "coag_tilde", "prop2", "prop2_reverse", "palm", "chain_k", "chain_inf", "bridge", "lemma1", "thm1", "kendall", "cor1", "lemma2", "thm2", "cor2"] {
        assert!(listed.contains(&name), "{name}");
    }
}

#[test]
fn chain_and_yule_outputs_parse() {
    let t = cli(&["--format", "json", "--samples", "2", "chain", "frag-inf", "--theta", "1", "--steps", "3"]);
    assert_eq!(t.code, EXIT_OK, "{}", t.stderr);
    for line in t.stdout.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["states"].as_array().unwrap().len(), 4);
        assert_eq!(v["k"], "inf");
    }
    let c = cli(&["chain", "coalescent", "--k", "1", "--n", "3"]);
    let levels: Vec<&str> = c.stdout.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(levels.len(), 4);
    assert_eq!(levels.last(), Some(&"0"));
    let y = cli(&["yule", "counts", "--k", "2", "--t-max", "1"]);
    assert!(y.stdout.starts_with("# k=2\njump_time,value\n"));
    let g = cli(&["--format", "json", "yule", "cs-genealogy", "--a", "1", "--t", "0.5"]);
    let v: serde_json::Value = serde_json::from_str(&g.stdout).unwrap();
    assert!(v["total"].as_f64().unwrap() > 0.0);
}

#[test]
fn out_flag_writes_file() {
    let path = std::env::temp_dir().join(format!("fragcoag-cli-test-{}.csv", std::process::id()));
    let out = cli(&["--out", path.to_str().unwrap(), "yule", "pgf", "--k", "2", "--t", "1", "--s", "0.3"]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(written, cli(&["yule", "pgf", "--k", "2", "--t", "1", "--s", "0.3"]).stdout);
}

#[test]
fn binary_matches_library() {
    let out = Command::new(env!("CARGO_BIN_EXE_fragcoag"))
        .args(["--seed", "5", "sample", "w", "--k", "2", "--samples", "4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), cli(&["--seed", "5", "sample", "w", "--k", "2", "--samples", "4"]).stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_fragcoag")).args(["yule", "pgf", "--k", "0", "--t", "1", "--s", "0.5"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_USAGE));
    assert!(!bad.stderr.is_empty());
}
