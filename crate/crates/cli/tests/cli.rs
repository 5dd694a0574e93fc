use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_encompass"))
}

fn plans() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../plans")
}

fn plan(name: &str) -> String {
    plans().join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn target_bf(report: &Value) -> f64 {
    report["target"]["estimate"]["bf"].as_f64().unwrap()
}

const SUBCOMMANDS: [&str; 5] = ["analyze", "replicate", "oracle-check", "densities", "validate-plan"];

/// Every option line in `--help` carries a description, and the documented
/// flags are exactly the expected ones.
#[test]
fn help_documents_every_flag() {
    let global = ["--seed", "--samples", "--output", "--quiet", "--threads", "--help"];
    let specific: [(&str, &[&str]); 5] = [
        ("analyze", &["--plan", "--data", "--counts"]),
        ("replicate", &["--plan", "--original-counts", "--data", "--counts"]),
        ("oracle-check", &["--config", "--shape", "--relation", "--expected"]),
        (
            "densities",
            &["--plan", "--data", "--counts", "--resolution", "--measure"],
        ),
        ("validate-plan", &["--plan"]),
    ];
    for (sub, flags) in specific {
        let out = run(&[sub, "--help"]);
        assert_eq!(code(&out), 0, "{sub}");
        let help = stdout(&out);
        let lines: Vec<&str> = help.lines().collect();
        let mut documented = Vec::new();
        for (i, line) in lines.iter().enumerate() {
            let t = line.trim_start();
            if !(t.starts_with("--") || (t.starts_with('-') && t.contains(", --"))) {
                continue;
            }
            let flag = t.split([' ', ',']).find(|w| w.starts_with("--")).unwrap().to_string();
            // description on the same line after two spaces, or on the next line
            let rest = t.split_once("  ").map(|(_, d)| d.trim()).unwrap_or("");
            let next = lines.get(i + 1).map(|l| l.trim()).unwrap_or("");
            assert!(
                !rest.is_empty() || (!next.is_empty() && !next.starts_with('-')),
                "{sub}: {flag} undocumented"
            );
            documented.push(flag);
        }
        for f in global.iter().chain(flags.iter()) {
            assert!(documented.iter().any(|d| d == f), "{sub} --help lacks {f}:\n{help}");
        }
        documented.retain(|d| d != "--version");
        assert_eq!(
            documented.len(),
            global.len() + flags.len(),
            "{sub}: unexpected flags {documented:?}"
        );
    }
    let top = stdout(&run(&["--help"]));
    for sub in SUBCOMMANDS {
        assert!(top.contains(sub), "{sub} missing from top-level help");
    }
}

#[test]
fn analyze_reanalysis() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.json");
    let out = run(&[
        "analyze",
        "--plan",
        &plan("wyman_vyse.toml"),
        "--counts",
        &plan("wyman_vyse_counts.toml"),
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("target BF_r0 = 560."), "{}", stdout(&out));
    let r = report(&out_path);
    assert!((target_bf(&r) / 560.5 - 1.0).abs() < 0.05);
    assert_eq!(r["target"]["estimate"]["numerator"], "r");
    assert_eq!(r["seed"], 4491);
}

#[test]
fn analyze_from_trials_matches_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let csv = dir.path().join("trials.csv");
    let mut text = String::from("participant_id,measure,correct\n");
    for i in 0..52 {
        text += &format!("p{i},psy,{}\np{i},astro,{}\n", (i < 41) as u8, (i < 24) as u8);
    }
    // one participant with a single measure, dropped by the plan's exclusion rule
    text += "late,psy,1\n";
    std::fs::write(&csv, text).unwrap();
    let base = [
        "analyze",
        "--plan",
        &plan("wyman_vyse.toml"),
        "--samples",
        "20000",
        "-q",
    ];
    let o1 = run(&[&base[..], &["--data", csv.to_str().unwrap(), "-o", a.to_str().unwrap()]].concat());
    let o2 = run(&[
        &base[..],
        &["--counts", &plan("wyman_vyse_counts.toml"), "-o", b.to_str().unwrap()],
    ]
    .concat());
    assert_eq!(code(&o1), 0, "{}", stderr(&o1));
    assert_eq!(code(&o2), 0);
    let (ra, rb) = (report(&a), report(&b));
    assert_eq!(ra["estimates"], rb["estimates"]);
    assert_eq!(ra["excluded"][0]["participant_id"], "late");
    assert_eq!(ra["excluded"][0]["rules"][0], "missing_any_measure");
}

#[test]
fn seed_override_is_recorded_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..3).map(|i| dir.path().join(format!("r{i}.json"))).collect();
    let go = |p: &Path, seed: &str| {
        let out = run(&[
            "analyze",
            "--plan",
            &plan("wyman_vyse.toml"),
            "--counts",
            &plan("wyman_vyse_counts.toml"),
            "--samples",
            "50000",
            "--seed",
            seed,
            "-q",
            "-o",
            p.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        assert!(stdout(&out).is_empty());
        std::fs::read(p).unwrap()
    };
    let first = go(&paths[0], "7");
    assert_eq!(go(&paths[1], "7"), first);
    assert_ne!(go(&paths[2], "8"), first);
    let r = report(&paths[0]);
    assert_eq!(r["seed"], 7);
    assert_eq!(r["plan"]["mc"]["seed"], 7);
    assert_eq!(r["plan"]["mc"]["prior_samples"], 50000);
}

#[test]
fn malformed_csv_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "participant_id,measure,correct\np1,psy,1\np1,astro,yes\n").unwrap();
    let out = run(&[
        "analyze",
        "--plan",
        &plan("wyman_vyse.toml"),
        "--data",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn cyclic_plan_names_the_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(plans().join("wyman_vyse.toml"))
        .unwrap()
        .replace(
            r#"less_than = [["astro", "psy"]]"#,
            r#"less_than = [["astro", "psy"], ["psy", "astro"]]"#,
        );
    let p = dir.path().join("cyclic.toml");
    std::fs::write(&p, text).unwrap();
    for sub in ["analyze", "validate-plan"] {
        let mut args = vec![sub, "--plan", p.to_str().unwrap()];
        if sub == "analyze" {
            args.extend(["--counts", "unused.toml"]);
        }
        let out = run(&args);
        assert_eq!(code(&out), 2, "{sub}");
        assert!(stderr(&out).contains("cycle: psy < astro < psy"), "{}", stderr(&out));
    }
}

#[test]
fn validate_plan_summarises() {
    let out = run(&["validate-plan", "--plan", &plan("wyman_vyse.toml")]);
    assert_eq!(code(&out), 0);
    let s = stdout(&out);
    for needle in [
        "plan ok",
        "H_0: psy = 0.5, astro = 0.5",
        "H_r: astro < psy",
        "target: BF_r0",
        "seed 4491",
    ] {
        assert!(s.contains(needle), "{needle} not in\n{s}");
    }
    let out = run(&["validate-plan", "--plan", &plan("carlson_template.toml")]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("target: BF_0e"));
    assert_eq!(code(&run(&["validate-plan", "--plan", "/no/such/plan.toml"])), 2);
}

#[test]
fn replicate_published_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("rep.json");
    let out = run(&[
        "replicate",
        "--plan",
        &plan("wyman_vyse.toml"),
        "--original-counts",
        &plan("wyman_vyse_counts.toml"),
        "--data",
        &plan("replication_trials.csv"),
        "-o",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = report(&out_path);
    assert!((target_bf(&r) / 1884.0 - 1.0).abs() < 0.10, "{}", target_bf(&r));
    assert_eq!(r["priors"][0]["alpha"], 42.0);
    assert_eq!(r["prior_provenance"]["original_counts"][0]["successes"], 41);
    assert_eq!(r["counts"][1]["successes"], 18);
}

#[test]
fn replicate_without_participants() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("empty.csv");
    std::fs::write(&csv, "participant_id,measure,correct\n").unwrap();
    let out_path = dir.path().join("rep.json");
    let out = run(&[
        "replicate",
        "--plan",
        &plan("wyman_vyse.toml"),
        "--original-counts",
        &plan("wyman_vyse_counts.toml"),
        "--data",
        csv.to_str().unwrap(),
        "-o",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("warning: no trials"));
    let r = report(&out_path);
    for e in r["estimates"].as_array().unwrap() {
        assert_eq!(e["bf"], 1.0, "{e}");
    }
}

#[test]
fn replicate_dimension_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("orig.toml");
    std::fs::write(&counts, "[psy]\nsuccesses = 41\ntrials = 52\n").unwrap();
    let out = run(&[
        "replicate",
        "--plan",
        &plan("wyman_vyse.toml"),
        "--original-counts",
        counts.to_str().unwrap(),
        "--counts",
        &plan("replication_counts.toml"),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("astro"));
}

#[test]
fn degenerate_count_is_a_computational_failure() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("c.toml");
    std::fs::write(
        &counts,
        "[psy]\nsuccesses = 0\ntrials = 2000\n[astro]\nsuccesses = 2000\ntrials = 2000\n",
    )
    .unwrap();
    let out = run(&[
        "analyze",
        "--plan",
        &plan("wyman_vyse.toml"),
        "--counts",
        counts.to_str().unwrap(),
        "--samples",
        "1000",
    ]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("Increase the prior/posterior sample counts"));
}

#[test]
fn oracle_check_verdicts() {
    let out = run(&["oracle-check", "--shape", "1,1", "--shape", "1,1", "--relation", "0,1"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let s = stdout(&out);
    assert!(
        s.contains("oracle:      0.500000") && s.contains("verdict:     PASS"),
        "{s}"
    );

    let out = run(&[
        "oracle-check",
        "--shape",
        "25,29",
        "--shape",
        "42,12",
        "--relation",
        "0,1",
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("0.999714"));

    let out = run(&[
        "oracle-check",
        "--shape",
        "1,1",
        "--shape",
        "1,1",
        "--relation",
        "0,1",
        "--expected",
        "0.55",
    ]);
    assert_eq!(code(&out), 3);
    assert!(stdout(&out).contains("verdict:     FAIL"));

    let out = run(&[
        "oracle-check",
        "--shape",
        "1,1",
        "--shape",
        "2,1",
        "--shape",
        "1,2",
        "--relation",
        "2,0",
        "--relation",
        "0,1",
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("midpoint grid"));

    let four = [
        "oracle-check",
        "--shape",
        "1,1",
        "--shape",
        "1,1",
        "--shape",
        "1,1",
        "--shape",
        "1,1",
    ];
    assert_eq!(code(&run(&four)), 1);
    assert_eq!(code(&run(&["oracle-check", "--shape", "1"])), 1);
}

#[test]
fn oracle_check_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("check.toml");
    std::fs::write(
        &cfg,
        "shapes = [[43, 40], [67, 16]]\nrelations = [[0, 1]]\nseed = 3\nsamples = 200000\n",
    )
    .unwrap();
    let out_path = dir.path().join("check.txt");
    let out = run(&[
        "oracle-check",
        "--config",
        cfg.to_str().unwrap(),
        "-q",
        "-o",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let s = std::fs::read_to_string(&out_path).unwrap();
    assert!(
        s.contains("seed 3") && s.contains("of 200000 draws") && s.contains("PASS"),
        "{s}"
    );
    std::fs::write(&cfg, "shapes = [[1, 1]]\nunknown = 1\n").unwrap();
    assert_eq!(code(&run(&["oracle-check", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn densities_export() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("d.csv");
    let out = run(&[
        "densities",
        "--plan",
        &plan("wyman_vyse.toml"),
        "--counts",
        &plan("wyman_vyse_counts.toml"),
        "--measure",
        "astro",
        "-o",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("measure,theta,prior_density,posterior_density"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f[0], "astro");
            (f[1].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 511);
    let peak = rows.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    assert!((peak.0 - 24.0 / 52.0).abs() <= 1.0 / 512.0, "{peak:?}");

    let out = run(&[
        "densities",
        "--plan",
        &plan("wyman_vyse.toml"),
        "--counts",
        &plan("wyman_vyse_counts.toml"),
        "--resolution",
        "2",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().count(), 3);
    assert!(stdout(&out).contains("astro,0.5,1,"));

    let out = run(&[
        "densities",
        "--plan",
        &plan("wyman_vyse.toml"),
        "--counts",
        &plan("wyman_vyse_counts.toml"),
        "-o",
        dir.path().join("missing/d.csv").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["analyze", "--plan", "x.toml"])), 1);
    assert_eq!(
        code(&run(&["analyze", "--plan", "x.toml", "--counts", "a", "--data", "b"])),
        1
    );
    assert_eq!(
        code(&run(&[
            "--threads",
            "0",
            "validate-plan",
            "--plan",
            &plan("wyman_vyse.toml")
        ])),
        1
    );
    assert_eq!(code(&run(&["--help"])), 0);
}
