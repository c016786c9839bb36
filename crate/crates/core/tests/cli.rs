//! The `popsynth` binary, driven stage by stage.

use std::path::Path;
use std::process::{Command, Output};

use popsynth::dataset::Dataset;
use popsynth::schema::CategoricalSchema;
use popsynth::stats::DatasetStats;

fn popsynth(args: &[&str], out: &Path, config: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_popsynth"));
    cmd.args(args).arg("--out-dir").arg(out);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout {}\nstderr {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
}

const SMALL: &str = r#"
seed = 4
toy_rows = 3000
removed_combinations = 10
corruptions = ["attr2,attr4:0.10"]
epochs = 2
batch_size = 64
hidden_units = 16
latent_dim = 8
reference_size = 128
joint_k = [2]
"#;

#[test]
fn toy_gen_is_deterministic_and_counts_match() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        ok(&popsynth(
            &["toy-gen", "--rows", "500", "--seed", "9"],
            d,
            None,
        ));
    }
    for f in ["ground_truth.csv", "schema.json", "ground_truth.stats.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let schema = CategoricalSchema::load(&a.join("schema.json")).unwrap();
    let d = Dataset::load_csv(&a.join("ground_truth.csv"), Some(&schema)).unwrap();
    let stats: DatasetStats =
        serde_json::from_str(&std::fs::read_to_string(a.join("ground_truth.stats.json")).unwrap())
            .unwrap();
    assert_eq!(stats.n_rows, 500);
    let mut rows: Vec<String> = std::fs::read_to_string(a.join("ground_truth.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(String::from)
        .collect();
    rows.sort();
    rows.dedup();
    assert_eq!(stats.n_unique_combinations, rows.len());
    assert_eq!(d.n_rows(), 500);
}

#[test]
fn stages_chain_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let config = dir.path().join("small.toml");
    std::fs::write(&config, SMALL).unwrap();
    let c = Some(config.as_path());

    ok(&popsynth(&["toy-gen"], &out, c));
    ok(&popsynth(&["prepare"], &out, c));
    let schema = CategoricalSchema::load(&out.join("schema.json")).unwrap();
    for name in ["nomis", "miss-2-10"] {
        let d = Dataset::load_csv(&out.join(format!("data/{name}.csv")), Some(&schema)).unwrap();
        assert_eq!(d.schema().digest(), schema.digest());
    }
    let miss = std::fs::read_to_string(out.join("data/miss-2-10.stats.json")).unwrap();
    let stats: DatasetStats = serde_json::from_str(&miss).unwrap();
    assert!((stats.rows_with_any_missing_fraction - 0.19).abs() < 0.05);

    ok(&popsynth(
        &[
            "train",
            "--dataset",
            out.join("data/nomis.csv").to_str().unwrap(),
            "--quiet",
        ],
        &out,
        c,
    ));
    let log = std::fs::read_to_string(out.join("models/nomis/log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 2);

    let ck = out.join("models/nomis/checkpoint.bin");
    let gen = |name: &str, seed: &str| {
        popsynth(
            &[
                "generate",
                "--checkpoint",
                ck.to_str().unwrap(),
                "--n",
                "777",
                "--name",
                name,
                "--seed",
                seed,
            ],
            &out,
            c,
        )
    };
    ok(&gen("s1", "1"));
    ok(&gen("s1b", "1"));
    ok(&gen("s2", "2"));
    let read = |n: &str| std::fs::read(out.join(format!("synthetic/{n}.csv"))).unwrap();
    assert_eq!(read("s1"), read("s1b"));
    assert_ne!(read("s1"), read("s2"));
    let syn = Dataset::load_csv(&out.join("synthetic/s1.csv"), Some(&schema)).unwrap();
    assert_eq!(syn.n_rows(), 777);
    assert!(!syn.has_missing());

    // Refuses to overwrite.
    assert_eq!(gen("s1", "1").status.code(), Some(1));

    let gt = out.join("ground_truth.csv");
    let o = popsynth(
        &[
            "evaluate",
            "--ground-truth",
            gt.to_str().unwrap(),
            "--train",
            out.join("data/nomis.csv").to_str().unwrap(),
            "--synthetic",
            gt.to_str().unwrap(),
            "--name",
            "identity",
        ],
        &out,
        c,
    );
    ok(&o);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for a in report["attributes"].as_array().unwrap() {
        assert_eq!(a["tv_complement"]["value"], 1.0);
        assert_eq!(a["category_coverage"]["value"], 1.0);
    }
    for j in report["joints"].as_array().unwrap() {
        assert_eq!(j["srmse"]["value"], 0.0);
        assert!(j["n_b"].as_u64().unwrap() > 0);
    }
    assert!(out.join("reports/identity/45deg-attr0-attr1.csv").is_file());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    assert_eq!(
        popsynth(&["no-such-command"], &out, None).status.code(),
        Some(2)
    );
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "epochz = 3\n").unwrap();
    assert_eq!(
        popsynth(&["toy-gen"], &out, Some(&bad)).status.code(),
        Some(2)
    );
    let missing = dir.path().join("missing.csv");
    assert_eq!(
        popsynth(
            &["prepare", "--ground-truth", missing.to_str().unwrap()],
            &out,
            None
        )
        .status
        .code(),
        Some(1)
    );
    let ck = dir.path().join("garbage.bin");
    std::fs::write(&ck, b"not a checkpoint").unwrap();
    assert_eq!(
        popsynth(
            &["generate", "--checkpoint", ck.to_str().unwrap(), "--n", "5"],
            &out,
            None
        )
        .status
        .code(),
        Some(1)
    );
}
