use std::path::Path;
use std::process::{Command, Output};

use npcrank_core::simulate::{generate_rep, ModelKind, ModelSpec};

fn npcrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_npcrank"))
        .args(args)
        .output()
        .expect("run npcrank")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn body(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn toy_csv(dir: &Path) -> String {
    let ds = generate_rep(&ModelSpec::new(ModelKind::Toy2D, 400, 1).unwrap(), 0);
    let mut text = String::from("X1,X2,y\n");
    for r in 0..ds.n_samples() {
        text.push_str(&format!(
            "{},{},{}\n",
            ds.column(0)[r],
            ds.column(1)[r],
            ds.labels()[r]
        ));
    }
    let path = dir.join("toy.csv");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn rank_writes_one_row_per_feature() {
    let dir = tempfile::tempdir().unwrap();
    let csv = toy_csv(dir.path());
    let out = stdout(&npcrank(&[
        "rank",
        "--input",
        &csv,
        "--label-col",
        "y",
        "--criterion",
        "npc",
        "--alpha",
        "0.05",
        "--delta1",
        "0.05",
        "--splits",
        "11",
        "--seed",
        "42",
    ]));
    for key in [
        "criterion=npc",
        "alpha=0.05",
        "delta1=0.05",
        "splits=11",
        "seed=42",
        "kernel=gaussian",
        "bandwidth=paper-rate",
    ] {
        assert!(
            out.contains(&format!("# {key}\n")),
            "missing {key} in\n{out}"
        );
    }
    let rows = body(&out);
    assert_eq!(rows[0], "rank\tfeature\tscore\tskipped_splits");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("1\t") && rows[2].starts_with("2\t"));
}

#[test]
fn rank_validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = toy_csv(dir.path());
    let missing_alpha = npcrank(&[
        "rank",
        "--input",
        &csv,
        "--label-col",
        "y",
        "--criterion",
        "npc",
        "--seed",
        "1",
    ]);
    assert_eq!(missing_alpha.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing_alpha.stderr).contains("--alpha"));

    let bad_label = npcrank(&[
        "rank",
        "--input",
        &csv,
        "--label-col",
        "nope",
        "--criterion",
        "cc",
        "--seed",
        "1",
    ]);
    assert_eq!(bad_label.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_label.stderr).contains("nope"));

    let bad_splits = npcrank(&[
        "rank",
        "--input",
        &csv,
        "--label-col",
        "y",
        "--criterion",
        "cc",
        "--splits",
        "0",
        "--seed",
        "1",
    ]);
    assert_eq!(bad_splits.status.code(), Some(2));

    let no_seed = npcrank(&[
        "rank",
        "--input",
        &csv,
        "--label-col",
        "y",
        "--criterion",
        "cc",
    ]);
    assert_eq!(no_seed.status.code(), Some(2));
}

#[test]
fn rank_computation_error_exits_1() {
    // 40 class-0 rows leave m2 = 20 < 59 left-out points at alpha = delta1 = .05
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("a,y\n");
    for i in 0..80 {
        text.push_str(&format!("{},{}\n", (i * 37 % 80) as f64 / 7.0, i % 2));
    }
    let path = dir.path().join("small.csv");
    std::fs::write(&path, text).unwrap();
    let out = npcrank(&[
        "rank",
        "--input",
        path.to_str().unwrap(),
        "--label-col",
        "y",
        "--criterion",
        "npc",
        "--alpha",
        "0.05",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn prior_ratio_is_routed_to_the_classical_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let csv = toy_csv(dir.path());
    let base = [
        "rank",
        "--input",
        csv.as_str(),
        "--label-col",
        "y",
        "--criterion",
        "cc",
        "--seed",
        "3",
    ];
    let default = stdout(&npcrank(&base));
    let mut with = base.to_vec();
    with.extend(["--prior-ratio", "20"]);
    let overridden = stdout(&npcrank(&with));
    assert!(default.contains("# prior_ratio=none\n"));
    assert!(overridden.contains("# prior_ratio=20\n"));
    assert_ne!(body(&default), body(&overridden));
}

#[test]
fn rank_output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let csv = toy_csv(dir.path());
    let target = dir.path().join("ranks.tsv");
    let args = [
        "rank",
        "--input",
        csv.as_str(),
        "--label-col",
        "y",
        "--criterion",
        "cc",
        "--seed",
        "8",
    ];
    let printed = stdout(&npcrank(&args));
    let mut to_file = args.to_vec();
    to_file.extend(["--output", target.to_str().unwrap()]);
    assert_eq!(stdout(&npcrank(&to_file)), "");
    assert_eq!(std::fs::read_to_string(&target).unwrap(), printed);
}

#[test]
fn oracle_prints_closed_forms() {
    let np = stdout(&npcrank(&[
        "oracle",
        "gaussian-np",
        "--mu0",
        "-5",
        "--sigma0",
        "2",
        "--mu1",
        "0",
        "--sigma1",
        "2",
        "--alpha",
        "0.01",
    ]));
    assert!(
        (np.trim().parse::<f64>().unwrap() - 0.431).abs() < 5e-4,
        "{np}"
    );
    let cc = stdout(&npcrank(&[
        "oracle",
        "classical",
        "--mu0",
        "-5",
        "--sigma0",
        "2",
        "--mu1",
        "1.5",
        "--sigma1",
        "3.5",
        "--pi0",
        "0.5",
    ]));
    assert!(
        (cc.trim().parse::<f64>().unwrap() - 0.113).abs() < 5e-4,
        "{cc}"
    );
    let bad = npcrank(&[
        "oracle",
        "classical",
        "--mu0",
        "0",
        "--sigma0",
        "-1",
        "--mu1",
        "1",
        "--sigma1",
        "1",
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn oracle_population_table() {
    let out = stdout(&npcrank(&[
        "oracle",
        "population",
        "mixture",
        "--criterion",
        "npc",
        "--alpha",
        "0.3",
        "--sample-size",
        "100000",
        "--seed",
        "2",
    ]));
    let rows = body(&out);
    assert_eq!(rows[0], "feature\tvalue\tstd_error");
    let v: f64 = rows[2].split('\t').nth(1).unwrap().parse().unwrap();
    assert!((v - 0.17).abs() < 0.01, "{out}");
}

#[test]
fn simulate_writes_tsv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("toy");
    let out = npcrank(&[
        "simulate",
        "toy",
        "--n",
        "1500",
        "--reps",
        "4",
        "--seed",
        "7",
        "--output-prefix",
        prefix.to_str().unwrap(),
    ]);
    stdout(&out);
    let tsv = std::fs::read_to_string(dir.path().join("toy.tsv")).unwrap();
    assert!(tsv.contains("# reps=4\n") && tsv.contains("# criteria=cc,npc:0.01,npc:0.2\n"));
    let rows = body(&tsv);
    assert_eq!(rows[0], "ranker\tfeature\ttop_frequency\taverage_rank");
    assert_eq!(rows.len(), 1 + 3 * 2);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("toy.json")).unwrap())
            .unwrap();
    assert_eq!(json["report"]["reps"], 4);
    assert_eq!(json["report"]["rankers"].as_array().unwrap().len(), 3);
    assert_eq!(json["config"]["model"], "toy");
}

#[test]
fn simulate_rejects_unknown_model_and_ranker() {
    assert_eq!(
        npcrank(&["simulate", "gauss31", "--seed", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        npcrank(&[
            "simulate",
            "toy",
            "--reps",
            "2",
            "--seed",
            "1",
            "--criteria",
            "cc,kendall"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn simulate_mixture_defaults_include_baselines() {
    let out = stdout(&npcrank(&[
        "simulate", "mixture", "--reps", "3", "--seed", "1",
    ]));
    for label in [
        "s-CC",
        "s-NPC(alpha=0.3)",
        "pearson",
        "dcor",
        "welch-t",
        "wilcoxon",
    ] {
        assert!(out.contains(&format!("\n{label}\t")), "missing {label}");
    }
}

#[test]
fn consistency_of_rank_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.tsv");
    let b = dir.path().join("b.tsv");
    let c = dir.path().join("c.tsv");
    std::fs::write(
        &a,
        "# x\nrank\tfeature\tscore\n1\tf1\t0.1\n2\tf2\t0.2\n3\tf3\t0.3\n",
    )
    .unwrap();
    std::fs::write(&b, "rank\tfeature\n3\tf1\n1\tf2\n2\tf3\n").unwrap();
    std::fs::write(&c, "rank\tfeature\n1\tf1\n2\tf2\n3\tf4\n").unwrap();
    let same = stdout(&npcrank(&[
        "consistency",
        a.to_str().unwrap(),
        a.to_str().unwrap(),
    ]));
    assert_eq!(body(&same), vec!["j\tconsistency", "1\t1", "2\t1", "3\t1"]);
    let diff = stdout(&npcrank(&[
        "consistency",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
    ]));
    assert_eq!(
        body(&diff),
        vec!["j\tconsistency", "1\t0", "2\t0.5", "3\t1"]
    );
    let mismatch = npcrank(&["consistency", a.to_str().unwrap(), c.to_str().unwrap()]);
    assert_eq!(mismatch.status.code(), Some(2));
}

#[test]
fn consistency_protocol_run() {
    let dir = tempfile::tempdir().unwrap();
    let csv = toy_csv(dir.path());
    let out = stdout(&npcrank(&[
        "consistency",
        "--input",
        &csv,
        "--label-col",
        "y",
        "--protocol",
        "paper",
        "--alpha",
        "0.1",
        "--seed",
        "4",
    ]));
    assert!(out.contains("# protocol=paper\n"));
    let rows = body(&out);
    assert_eq!(rows[0], "j\ts-CC\ts-NPC");
    assert_eq!(rows.len(), 3);
    assert!(rows[2].ends_with("\t1\t1"));
}
