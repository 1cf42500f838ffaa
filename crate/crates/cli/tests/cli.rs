use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rcw_core::classifiers::LabeledInstance;
use rcw_core::features::{build_feature_vector, write_labeled_csv, FeatureEncoding};
use rcw_core::trajdata::{ClassLabel, Dataset, Provenance, TrajectorySample};
use tempfile::TempDir;

fn rcw(args: &[&str]) -> Output {
    rcw_with(args, None, &[])
}

fn rcw_with(args: &[&str], stdin: Option<&str>, env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rcw"));
    cmd.args(args)
        .env_remove("RCW_CONFIG")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    for (k, v) in env {
        cmd.env(k, v);
    }
    let mut child = cmd.spawn().expect("spawn rcw");
    let mut pipe = child.stdin.take().unwrap();
    // the child may exit before reading, e.g. on a bad model
    let _ = pipe.write_all(stdin.unwrap_or("").as_bytes());
    drop(pipe);
    child.wait_with_output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small generated corpus: (dir, episode csv, labeled csv).
fn small_corpus() -> (TempDir, PathBuf, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let (ep, lab) = (dir.path().join("ep.csv"), dir.path().join("lab.csv"));
    let out = rcw(&[
        "gen",
        "--episodes",
        "10",
        "--out",
        s(&ep),
        "--labeled",
        s(&lab),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    (dir, ep, lab)
}

#[test]
fn exit_codes() {
    let (dir, ep, lab) = small_corpus();
    assert_eq!(rcw(&["--help"]).status.code(), Some(0));
    assert_eq!(rcw(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(rcw(&["train"]).status.code(), Some(1));
    assert_eq!(
        rcw(&["train", "--data", s(&lab), "--cost", "5:x"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        rcw(&["train", "--data", s(&lab), "--method", "svm"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        rcw(&["train", "--data", "/nonexistent/lab.csv"])
            .status
            .code(),
        Some(2)
    );
    let bad = dir.path().join("bad.csv");
    std::fs::write(
        &bad,
        "speed_kmh,delta_x_m,delta_v_ms,tg_s,ttc_s,label\n1,2,3,4,5,7\n",
    )
    .unwrap();
    assert_eq!(rcw(&["train", "--data", s(&bad)]).status.code(), Some(2));

    let again = rcw(&["gen", "--episodes", "10", "--out", s(&ep)]);
    assert_eq!(again.status.code(), Some(1));
    assert!(text(&again.stderr).contains("--force"));
    assert_eq!(
        rcw(&["gen", "--episodes", "10", "--out", s(&ep), "--force"])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn episode_csv_trains_like_its_labeled_form() {
    let (dir, ep, lab) = small_corpus();
    let (a, b) = (dir.path().join("a.model"), dir.path().join("b.model"));
    assert!(
        rcw(&["train", "--method", "c45", "--data", s(&ep), "--out", s(&a)])
            .status
            .success()
    );
    assert!(rcw(&[
        "train",
        "--method",
        "c45",
        "--data",
        s(&lab),
        "--out",
        s(&b)
    ])
    .status
    .success());
    let strip = |p: &Path| -> Vec<String> {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("meta data "))
            .map(String::from)
            .collect()
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn config_file_from_environment() {
    let (dir, _, _) = small_corpus();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "seed = 7\n[generator]\nn_episodes = 3\n").unwrap();
    let out_path = dir.path().join("env.csv");
    let out = rcw_with(
        &["gen", "--out", s(&out_path)],
        None,
        &[("RCW_CONFIG", &cfg)],
    );
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("wrote 3 episodes"));
    let side = std::fs::read_to_string(dir.path().join("env.csv.config.toml")).unwrap();
    assert!(side.contains("seed = 7"));

    // the sidecar reproduces the run
    let replay = dir.path().join("replay.csv");
    assert!(rcw(&[
        "gen",
        "--config",
        s(&dir.path().join("env.csv.config.toml")),
        "--out",
        s(&replay)
    ])
    .status
    .success());
    assert_eq!(
        std::fs::read(&out_path).unwrap(),
        std::fs::read(&replay).unwrap()
    );

    std::fs::write(&cfg, "seeed = 7\n").unwrap();
    assert_eq!(
        rcw_with(
            &["gen", "--out", s(&dir.path().join("x.csv"))],
            None,
            &[("RCW_CONFIG", &cfg)]
        )
        .status
        .code(),
        Some(1)
    );
}

#[test]
fn model_carries_config_snapshot() {
    let (dir, _, lab) = small_corpus();
    let m = dir.path().join("m.model");
    assert!(rcw(&[
        "train",
        "--method",
        "nb",
        "--data",
        s(&lab),
        "--out",
        s(&m),
        "--cost",
        "3:1"
    ])
    .status
    .success());
    let body = std::fs::read_to_string(&m).unwrap();
    assert!(body.contains("meta config.cost \"3:1\""));
    assert!(body.contains("meta no_threat_cap 100.0"));
    assert!(body.contains("meta method nb"));
}

#[test]
fn threshold_extraction_and_rules() {
    let (dir, _, lab) = small_corpus();
    let out = rcw(&[
        "train",
        "--data",
        s(&lab),
        "--method",
        "c45",
        "--feature",
        "ttc",
        "--depth",
        "1",
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("critical TimeToCollision threshold:"));
    assert_eq!(
        rcw(&[
            "train",
            "--data",
            s(&lab),
            "--method",
            "rf",
            "--feature",
            "ttc"
        ])
        .status
        .code(),
        Some(1)
    );

    let tree = dir.path().join("tree.model");
    assert!(rcw(&[
        "train",
        "--data",
        s(&lab),
        "--method",
        "c45",
        "--out",
        s(&tree)
    ])
    .status
    .success());
    let none = text(&rcw(&["rules", "--model", s(&tree), "--top", "0"]).stdout);
    assert_eq!(none.lines().count(), 1);
    assert!(none.starts_with("# 0 of "));
    let three = text(&rcw(&["rules", "--model", s(&tree), "--top", "3"]).stdout);
    let lines: Vec<&str> = three.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1..]
        .iter()
        .all(|l| l.starts_with("If \"") && l.contains("\" Then \"")));
    let support = |l: &str| -> f64 {
        let tail = l.rsplit("frequency").next().unwrap();
        tail.trim_start_matches(['=', ' ', '('])
            .split([',', '"'])
            .next()
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!(support(lines[1]) >= support(lines[2]) && support(lines[2]) >= support(lines[3]));

    let knn = dir.path().join("knn.model");
    assert!(rcw(&[
        "train",
        "--data",
        s(&lab),
        "--method",
        "knn3",
        "--out",
        s(&knn)
    ])
    .status
    .success());
    assert_eq!(rcw(&["rules", "--model", s(&knn)]).status.code(), Some(2));
}

#[test]
fn single_leaf_tree_prints_one_unconditional_rule() {
    let dir = tempfile::tempdir().unwrap();
    let lab = dir.path().join("pure.csv");
    let inst = (0..20)
        .map(|i| LabeledInstance::new([50.0, 10.0 + i as f64, -1.0, 1.0, 5.0], ClassLabel::Safe))
        .collect();
    let ds = Dataset::new(inst, Provenance::Ingested, None).unwrap();
    write_labeled_csv(&ds, std::fs::File::create(&lab).unwrap()).unwrap();
    let m = dir.path().join("leaf.model");
    assert!(rcw(&[
        "train",
        "--data",
        s(&lab),
        "--method",
        "c45",
        "--out",
        s(&m)
    ])
    .status
    .success());
    let out = text(&rcw(&["rules", "--model", s(&m)]).stdout);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("Always \"Safe"));
}

/// Samples drawn to make the rule region "Speed ≤ 73 km/h, ΔX in [4.7, 8.6] m,
/// ΔV in [-13.5, -3.2] m/s, TG ≤ 1.5 s, TTC ≤ 2.8 s" the only warnings.
fn rule_regime(n: usize) -> Dataset {
    let mut r = ChaCha8Rng::seed_from_u64(35);
    let enc = FeatureEncoding::default();
    let inside = |x: &[f64; 5]| {
        x[0] <= 73.0
            && (4.7..=8.6).contains(&x[1])
            && (-13.5..=-3.2).contains(&x[2])
            && x[3] <= 1.5
            && x[4] <= 2.8
    };
    let inst = (0..n)
        .map(|i| {
            let (v_f, v_l, gap) = if i % 2 == 0 {
                let v_f: f64 = r.random_range(5.0..20.0);
                (
                    v_f,
                    (v_f - r.random_range(3.2..13.5)).max(0.0),
                    r.random_range(4.7..8.6),
                )
            } else {
                (
                    r.random_range(0.5..35.0),
                    r.random_range(0.0..35.0),
                    r.random_range(1.0..80.0),
                )
            };
            let x = enc
                .encode(&build_feature_vector(&TrajectorySample::new(0.0, v_f, v_l, gap)).unwrap());
            LabeledInstance::new(
                x,
                if inside(&x) {
                    ClassLabel::Warning
                } else {
                    ClassLabel::Safe
                },
            )
        })
        .collect();
    Dataset::new(inst, Provenance::Synthetic, None).unwrap()
}

#[test]
fn stream_reproduces_a_learned_rule() {
    let dir = tempfile::tempdir().unwrap();
    let lab = dir.path().join("rule.csv");
    write_labeled_csv(&rule_regime(6000), std::fs::File::create(&lab).unwrap()).unwrap();
    let m = dir.path().join("rule.model");
    let out = rcw(&[
        "train",
        "--data",
        s(&lab),
        "--method",
        "c45",
        "--cost",
        "1:1",
        "--out",
        s(&m),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));

    // 54 km/h closing at 6 m/s over 6 m: TG 0.4 s, TTC 1 s
    // then an opening pair with a long gap, then junk
    let input = "t,v_f,v_l,range\n0.0,15,9,6\n0.1,15,20,60\nnot,a,sample\n0.2,15,9\n";
    let out = rcw_with(&["stream", "--model", s(&m)], Some(input), &[]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "t,warning,latency_us");
    assert!(lines[1].starts_with("0.0,1,"), "{}", lines[1]);
    assert!(lines[2].starts_with("0.1,0,"), "{}", lines[2]);
    assert_eq!(lines.len(), 3);
    let latency: f64 = lines[1].rsplit(',').next().unwrap().parse().unwrap();
    assert!(latency > 0.0);
    let stderr = text(&out.stderr);
    assert!(stderr.contains("2 samples, 2 malformed"), "{stderr}");
    assert!(stderr.contains("median latency"));

    // same sample in km/h
    let kmh = rcw_with(
        &["stream", "--units", "kmh", "--model", s(&m)],
        Some("1,54,32.4,6\n"),
        &[],
    );
    assert!(text(&kmh.stdout)
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("1,1,"));
}

#[test]
fn stream_rejects_unreadable_model() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("junk.model");
    std::fs::write(&m, "not a model\n").unwrap();
    assert_eq!(
        rcw_with(&["stream", "--model", s(&m)], Some("0,1,1,1\n"), &[])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn eval_and_compare() {
    let (dir, _, lab) = small_corpus();
    let out = rcw(&[
        "eval",
        "--data",
        s(&lab),
        "--method",
        "ttc",
        "--scenario",
        "70",
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let rows: Vec<String> = text(&out.stdout).lines().map(String::from).collect();
    assert_eq!(
        rows[0],
        "method,scenario,seed,accuracy,sensitivity,specificity,time_s"
    );
    assert!(rows[1].starts_with("ttc,70,1,"));

    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[forest]\nn_trees = 5\n").unwrap();
    let csv = dir.path().join("cmp.csv");
    let out = rcw(&[
        "compare",
        "--config",
        s(&cfg),
        "--data",
        s(&lab),
        "--out",
        s(&csv),
        "--seed",
        "2",
        "--method",
        "rf,nb,ttc,stop-distance",
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let grid = text(&out.stdout);
    let lines: Vec<&str> = grid.lines().collect();
    assert_eq!(lines.len(), 6, "{grid}");
    assert!(lines[1].contains("65%") && lines[1].contains("70%") && lines[1].contains("80%"));
    for (a, line) in lines[2..].iter().enumerate() {
        assert!(line.starts_with(&(a + 1).to_string()));
    }
    let table = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().count(), 1 + 3 * 4);
    // baselines carry prediction-only times, learners include training
    let time = |m: &str| -> f64 {
        table
            .lines()
            .find(|l| l.starts_with(&format!("{m},80,")))
            .unwrap()
            .rsplit(',')
            .next()
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!(time("ttc") < time("rf"));

    let from = rcw(&["compare", "--from", s(&csv)]);
    assert!(from.status.success());
    assert_eq!(text(&from.stdout), grid);
}
