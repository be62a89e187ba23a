use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn paraembed(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paraembed"))
        .args(args)
        .current_dir(dir)
        .env_remove("PARA_THREADS")
        .output()
        .unwrap()
}

fn morphseg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_morphseg"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn training_data(dir: &Path) {
    ok(&paraembed(
        dir,
        &[
            "generate",
            "corpus",
            "--pairs",
            "200",
            "--output",
            "corpus.tsv",
        ],
    ));
    ok(&paraembed(
        dir,
        &[
            "sample",
            "--corpus",
            "corpus.tsv",
            "--positives",
            "100",
            "--output",
            "train.tsv",
        ],
    ));
}

#[test]
fn training_manifest_records_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    training_data(tmp.path());
    ok(&paraembed(
        tmp.path(),
        &[
            "train",
            "--train",
            "train.tsv",
            "--encoder",
            "wa",
            "--dim",
            "8",
            "--epochs",
            "1",
            "--output",
            "wa.ckpt",
        ],
    ));
    let m = json(&tmp.path().join("wa.ckpt.manifest.json"));
    assert_eq!(m["command"], "train");
    assert_eq!(m["flags"]["lr"], 0.001);
    assert_eq!(m["flags"]["batch"], 128);
    assert_eq!(m["flags"]["margin"], 0.4);
    assert_eq!(m["flags"]["keep_prob"], 0.8);
    assert_eq!(m["seeds"]["train"], 42);
    let outputs: Vec<&str> = m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["path"].as_str().unwrap())
        .collect();
    assert!(outputs.contains(&"wa.ckpt") && outputs.contains(&"wa.ckpt.log.csv"));
    let log = fs::read_to_string(tmp.path().join("wa.ckpt.log.csv")).unwrap();
    assert_eq!(log.lines().count(), 2);
}

#[test]
fn word_averaging_checkpoint_is_smaller_than_gran() {
    let tmp = tempfile::tempdir().unwrap();
    training_data(tmp.path());
    for kind in ["wa", "gran"] {
        ok(&paraembed(
            tmp.path(),
            &[
                "train",
                "--train",
                "train.tsv",
                "--encoder",
                kind,
                "--dim",
                "8",
                "--hidden",
                "8",
                "--epochs",
                "1",
                "--output",
                &format!("{kind}.ckpt"),
            ],
        ));
    }
    let size = |f: &str| fs::metadata(tmp.path().join(f)).unwrap().len();
    // Four extra matrices and the gate bias.
    assert!(size("gran.ckpt") > size("wa.ckpt") + 4 * 8 * 8 * 4);
}

#[test]
fn bad_input_exits_with_usage_code() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = paraembed(
        tmp.path(),
        &["train", "--train", "nope.tsv", "--output", "x.ckpt"],
    );
    assert_eq!(missing.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&missing.stderr);
    assert!(stderr.contains("nope.tsv"), "{stderr}");

    fs::write(tmp.path().join("c.tsv"), "a b\tc d\n").unwrap();
    let exclusive = paraembed(
        tmp.path(),
        &[
            "sample",
            "--corpus",
            "c.tsv",
            "--positives",
            "1",
            "--token-budget",
            "9",
            "--output",
            "o.tsv",
        ],
    );
    assert_eq!(exclusive.status.code(), Some(2));
    let curve = paraembed(
        tmp.path(),
        &[
            "sample",
            "--corpus",
            "c.tsv",
            "--clean-target",
            "0.5",
            "--output",
            "o.tsv",
        ],
    );
    assert_eq!(curve.status.code(), Some(2));
    assert_eq!(
        paraembed(tmp.path(), &["frobnicate"]).status.code(),
        Some(2)
    );
}

#[test]
fn diverging_training_exits_with_numeric_code() {
    let tmp = tempfile::tempdir().unwrap();
    training_data(tmp.path());
    let out = paraembed(
        tmp.path(),
        &[
            "train",
            "--train",
            "train.tsv",
            "--encoder",
            "gran",
            "--dim",
            "4",
            "--hidden",
            "4",
            "--epochs",
            "5",
            "--lr",
            "1e300",
            "--output",
            "x.ckpt",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn whole_word_model_leaves_text_unchanged() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("m.txt"),
        "#morphseg v1 total=3 alphabet=7\nworld\t2\nhello\t1\n",
    )
    .unwrap();
    let text = "hello world\t4.5\tworld\nworld\t1\thello hello\n";
    fs::write(tmp.path().join("in.tsv"), text).unwrap();
    ok(&morphseg(
        tmp.path(),
        &[
            "apply", "--model", "m.txt", "--input", "in.tsv", "--output", "out.tsv",
        ],
    ));
    assert_eq!(
        fs::read_to_string(tmp.path().join("out.tsv")).unwrap(),
        text
    );
}

#[test]
fn segmenter_splits_shared_stems() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("counts.tsv"), "itis\t2\nit\t3\nis\t3\n").unwrap();
    ok(&morphseg(
        tmp.path(),
        &["train", "--input", "counts.tsv", "--output", "m.txt"],
    ));
    fs::write(tmp.path().join("in.txt"), "itis\n").unwrap();
    ok(&morphseg(
        tmp.path(),
        &[
            "apply", "--model", "m.txt", "--input", "in.txt", "--output", "out.txt",
        ],
    ));
    assert_eq!(
        fs::read_to_string(tmp.path().join("out.txt")).unwrap(),
        "it is\n"
    );
    let m = json(&tmp.path().join("m.txt.manifest.json"));
    assert_eq!(m["program"], "morphseg");
}

#[test]
fn rerun_reports_changed_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&paraembed(
        tmp.path(),
        &[
            "generate",
            "labeled",
            "--positives",
            "5",
            "--negatives",
            "5",
            "--output",
            "l.tsv",
        ],
    ));
    let same = ok(&paraembed(
        tmp.path(),
        &["rerun", "--from", "l.tsv.manifest.json"],
    ));
    assert!(same.contains("same") && !same.contains("DIFFERS"), "{same}");

    let mut m = json(&tmp.path().join("l.tsv.manifest.json"));
    m["outputs"][0]["sha256"] = serde_json::json!("0".repeat(64));
    fs::write(tmp.path().join("edited.json"), m.to_string()).unwrap();
    let out = paraembed(tmp.path(), &["rerun", "--from", "edited.json"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("DIFFERS\tl.tsv"));
}

#[test]
fn stdout_commands_print_tables() {
    let tmp = tempfile::tempdir().unwrap();
    training_data(tmp.path());
    ok(&paraembed(
        tmp.path(),
        &[
            "generate",
            "annotated",
            "--positives",
            "20",
            "--negatives",
            "20",
            "--output",
            "dev.tsv",
        ],
    ));
    ok(&paraembed(
        tmp.path(),
        &[
            "train",
            "--train",
            "train.tsv",
            "--encoder",
            "wa",
            "--dim",
            "8",
            "--epochs",
            "1",
            "--output",
            "wa.ckpt",
        ],
    ));
    let corr = ok(&paraembed(
        tmp.path(),
        &["eval", "corr", "--model", "wa.ckpt", "--input", "dev.tsv"],
    ));
    let mut lines = corr.lines();
    assert_eq!(lines.next(), Some("pairs,pearson_r,spearman_rho"));
    assert!(lines.next().unwrap().starts_with("40,"));
    assert!(tmp.path().join("eval-corr.manifest.json").exists());

    fs::write(tmp.path().join("index.txt"), "a b\nc d\ne f\n").unwrap();
    let nn = ok(&paraembed(
        tmp.path(),
        &[
            "eval",
            "nn",
            "--model",
            "wa.ckpt",
            "--index",
            "index.txt",
            "--query",
            "a b",
            "--k",
            "2",
        ],
    ));
    assert_eq!(nn.lines().filter(|l| !l.is_empty()).count(), 3);
}
