use std::path::Path;
use std::process::{Command, Output};

fn qcdiff(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcdiff"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> serde_json::Value {
    let out = qcdiff(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const SMALL: &str = r#"
version = 1
seed = 3
[circuits]
qubits = [2, 2]
gates = [1, 3]
kinds = ["h", "cx", "rx"]
max_positions = 3
count = 300
resample_k = 2
test_quota = 2
[schedule]
steps = 200
h = "cosine_alpha2"
[model]
hidden = 16
layers = 2
time_freqs = 2
[training]
batch = 8
steps = 20
[sampler]
steps = 5
samples_per_target = 3
"#;

#[test]
fn pipeline_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("small.toml"), SMALL).unwrap();
    let c = ["--config", "small.toml"];
    let with = |rest: &[&str]| -> Vec<String> { c.iter().chain(rest).map(|s| s.to_string()).collect() };
    let run = |rest: &[&str]| {
        let args = with(rest);
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        ok(d, &refs)
    };

    let gen = run(&["gen-data", "--out", "all.bin"]);
    assert_eq!(gen["records"], 300);
    let split = run(&["split", "--data", "all.bin", "--train", "train.bin", "--test", "test.bin"]);
    assert_eq!(split["test"], 6);
    let trained = run(&["train", "--data", "train.bin", "--out", "model.ckpt", "--trace", "trace.csv"]);
    assert_eq!(trained["steps"], 20);
    let trace = std::fs::read_to_string(d.join("trace.csv")).unwrap();
    assert!(trace.starts_with("step,loss,lr\n"));

    let eval = run(&["eval", "--model", "model.ckpt", "--data", "test.bin", "--limit", "2", "--out", "eval.json", "--csv", "eval.csv"]);
    assert_eq!(eval["targets"], 2);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("eval.json")).unwrap()).unwrap();
    assert_eq!(report["targets"][0]["infidelities"].as_array().unwrap().len(), 3);

    run(&["qft", "--n", "2", "--out", "qft2.bin", "--circuit", "qft2.jsonl"]);
    let sampled = run(&["sample", "--model", "model.ckpt", "--target", "qft2.bin", "--out", "samples.jsonl"]);
    assert_eq!(sampled["samples"], 3);

    // Wrong-width target is a validation failure.
    run(&["qft", "--n", "3", "--out", "qft3.bin"]);
    let bad = qcdiff(d, &with(&["sample", "--model", "model.ckpt", "--target", "qft3.bin", "--out", "x.jsonl"]).iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn targets_and_analysis_commands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let h = ok(d, &["hamiltonian", "--model", "ising", "--n", "3", "--j", "1.0", "--field", "0.5", "--tau", "0.25", "--out", "ising.bin"]);
    assert_eq!(h["dim"], 8);
    ok(d, &["hamiltonian", "--model", "xxz", "--n", "2", "--j", "1.0", "--delta", "0.5", "--tau", "0.25", "--out", "xxz.bin"]);
    assert_eq!(std::fs::metadata(d.join("ising.bin")).unwrap().len(), 4 + 16 * 64);

    let hist = ok(d, &["corrupt", "--mode", "replace", "--count", "200", "--out", "replace.csv", "--seed", "5"]);
    assert_eq!(hist["circuits"], 200);
    assert!(std::fs::read_to_string(d.join("replace.csv")).unwrap().starts_with("center,count\n"));

    ok(d, &["qft", "--n", "3", "--out", "q.bin", "--circuit", "q.jsonl"]);
    let corpus: String = std::iter::repeat(std::fs::read_to_string(d.join("q.jsonl")).unwrap()).take(10).collect();
    std::fs::write(d.join("corpus.jsonl"), corpus).unwrap();
    let g = ok(d, &["gpe", "--corpus", "corpus.jsonl", "--min-freq", "8", "--top", "3", "--out-dir", "gpe"]);
    assert!(g["merges"].as_u64().unwrap() >= 1);
    let text = std::fs::read_to_string(d.join("gpe/report.txt")).unwrap();
    assert!(text.contains("depth 0:") && text.contains("depth 1:"));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("gpe/report.json")).unwrap()).unwrap();
    assert_eq!(report["histogram"][0]["label"], "h");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.toml"), "version = 9\n").unwrap();
    assert_eq!(qcdiff(d, &["--config", "bad.toml", "qft", "--n", "2", "--out", "q.bin"]).status.code(), Some(2));
    assert_eq!(qcdiff(d, &["qft", "--n", "9", "--out", "q.bin"]).status.code(), Some(2));
    assert_eq!(qcdiff(d, &["no-such-command"]).status.code(), Some(2));
    assert_eq!(qcdiff(d, &["eval", "--model", "missing", "--data", "missing", "--out", "r.json"]).status.code(), Some(2));
}
