use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ratnmt(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ratnmt"))
        .current_dir(dir)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = ratnmt(dir, args);
    assert!(
        out.status.success(),
        "ratnmt {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

const TINY: &str = "d_model = 16\nn_heads = 2\nn_layers = 1\nd_ff = 32\nmax_len = 16\n\
lr_nmt = 0.001\nbatch_token_budget = 64\nvalidate_every = 10\nmax_steps = 20\n\
decode_max_len = 6\nrecord_wall_time = false\n";

#[test]
fn eval_scores_toy_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("run.txt"),
        "q1 Q0 d1 1 -1.0 t\nq2 Q0 d1 1 -1.0 t\nq2 Q0 d2 2 -2.0 t\nq2 Q0 d3 3 -3.0 t\nq2 Q0 d4 4 -4.0 t\n",
    )
    .unwrap();
    fs::write(d.join("qrels.txt"), "q1 0 d1 1\nq2 0 d2 1\nq2 0 d4 1\nq2 0 d3 0\n").unwrap();
    let out = ok(
        d,
        &[
            "eval",
            "--run",
            "run.txt",
            "--qrels",
            "qrels.txt",
            "--out-dir",
            "scores",
        ],
    );
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        "map,mean_balance,mean_p,mean_r\n0.750000,,,\n"
    );
    let summary = fs::read_to_string(d.join("scores/summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert!(lines.next().unwrap().starts_with("# ratnmt "));
    assert_eq!(lines.next(), Some("map,mean_balance,mean_p,mean_r"));
    assert!(lines.next().unwrap().starts_with("0.750000,"));
    let per_query = fs::read_to_string(d.join("scores/per_query.csv")).unwrap();
    assert!(per_query.contains("q1,1.000000,"));
    assert!(per_query.contains("q2,0.500000,"));
}

#[test]
fn synth_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--seed", "7", "--out", "a"]);
    ok(d, &["synth", "--seed", "7", "--out", "b"]);
    ok(d, &["synth", "--seed", "8", "--out", "c"]);
    for name in [
        "tc.tsv",
        "rc.jsonl",
        "topics.val.jsonl",
        "topics.test.jsonl",
        "qrels.txt",
        "lexicon.tsv",
    ] {
        let a = fs::read(d.join("a").join(name)).unwrap();
        assert_eq!(a, fs::read(d.join("b").join(name)).unwrap(), "{name}");
        assert_ne!(a, fs::read(d.join("c").join(name)).unwrap(), "{name}");
        assert!(String::from_utf8_lossy(&a).starts_with("# ratnmt 0.1.0 seed=7 "));
    }
}

#[test]
fn stages_compose_and_skip_when_up_to_date() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--seed", "2", "--out", "data"]);
    fs::write(d.join("tiny.conf"), TINY).unwrap();
    let common = [
        "--config",
        "data/data.conf",
        "--config",
        "tiny.conf",
        "--seed",
        "2",
        "--workdir",
        "w",
    ];
    let stage = |args: &[&str]| {
        let mut all: Vec<&str> = args.to_vec();
        all.extend(common);
        ok(d, &all)
    };
    stage(&["prep"]);
    stage(&["index", "build"]);
    stage(&["ratgen"]);
    stage(&["train", "baseline"]);
    stage(&["train", "multitask"]);
    stage(&["translate"]);
    stage(&["retrieve"]);
    let out = stage(&["eval", "--translations", "w/translations.jsonl"]);
    let summary = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(summary.starts_with("map,mean_balance,mean_p,mean_r\n"));
    assert_eq!(
        summary
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .filter(|c| !c.is_empty())
            .count(),
        4
    );

    let ckpt = fs::read(d.join("w/baseline.ckpt")).unwrap();
    let before = fs::metadata(d.join("w/baseline.ckpt")).unwrap().modified().unwrap();
    let out = ratnmt(d, &[&["train", "baseline"][..], &common].concat());
    assert!(String::from_utf8_lossy(&out.stderr).is_empty() && out.status.success());
    assert_eq!(
        fs::metadata(d.join("w/baseline.ckpt")).unwrap().modified().unwrap(),
        before
    );

    stage(&["train", "baseline", "--force"]);
    assert_eq!(fs::read(d.join("w/baseline.ckpt")).unwrap(), ckpt);

    // a changed setting invalidates the stage
    let out = ok(
        d,
        &[&["train", "baseline", "--set", "max_steps=10"][..], &common].concat(),
    );
    assert!(out.status.success());
    assert_ne!(fs::read(d.join("w/baseline.ckpt")).unwrap(), ckpt);
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("qrels.txt"), "q1 0 d1 1\n").unwrap();
    fs::write(d.join("bad.txt"), "q1 Q0 d1\n").unwrap();
    let code = |args: &[&str]| ratnmt(d, args).status.code();
    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["frobnicate"]), Some(1));
    assert_eq!(code(&["prep", "--set", "no_such_key=1"]), Some(1));
    assert_eq!(code(&["prep"]), Some(1));
    assert_eq!(code(&["eval", "--run", "missing.txt", "--qrels", "qrels.txt"]), Some(2));
    assert_eq!(code(&["eval", "--run", "bad.txt", "--qrels", "qrels.txt"]), Some(2));
    let out = ratnmt(d, &["eval", "--run", "bad.txt", "--qrels", "qrels.txt"]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("bad.txt:1"));
}
