use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fsindex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsindex")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn example_matrix() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/matrices/EXAMPLE4")
}

fn write_fasta(dir: &Path) -> PathBuf {
    let path = dir.join("tiny.faa");
    // "x" breaks the second record; the third is shorter than a window
    std::fs::write(&path, ">one first\nabcdab\nda\n>two\nabxdab\n>three\nab\n").unwrap();
    path
}

fn build(dir: &Path, name: &str, extra: &[&str]) -> (PathBuf, serde_json::Value) {
    let fasta = write_fasta(dir);
    let out = dir.join(name);
    let matrix = example_matrix();
    let mut args = vec![
        "build",
        "--fasta",
        fasta.to_str().unwrap(),
        "--partition",
        "ac,bd",
        "-m",
        "3",
        "--alphabet",
        "abcd",
        "--matrix",
        matrix.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let manifest = serde_json::from_str(&stdout(&fsindex(&args))).unwrap();
    (out, manifest)
}

#[test]
fn build_manifest_counts_windows() {
    let dir = tempfile::tempdir().unwrap();
    let (_, manifest) = build(dir.path(), "a.fsx", &[]);
    assert_eq!(manifest["records"], 3);
    assert_eq!(manifest["residues"], 16);
    // abcdabda: 6 windows; abxdab: only dab
    assert_eq!(manifest["fragments"], 7);
    assert_eq!(manifest["rejected_windows"], 3);
    assert_eq!(manifest["bins"], 8);
}

#[test]
fn rebuild_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, _) = build(dir.path(), "a.fsx", &["--suffix"]);
    let (b, _) = build(dir.path(), "b.fsx", &["--suffix"]);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn missing_letter_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let fasta = write_fasta(dir.path());
    let out = dir.path().join("x.fsx");
    let o = fsindex(&[
        "build",
        "--fasta",
        fasta.to_str().unwrap(),
        "--partition",
        "ac,b",
        "-m",
        "3",
        "--alphabet",
        "abcd",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("letter 'd' missing"), "{err}");
    assert!(!out.exists());
}

#[test]
fn knn_finds_exact_copy() {
    let dir = tempfile::tempdir().unwrap();
    let (index, _) = build(dir.path(), "a.fsx", &[]);
    let m = example_matrix();
    let out = stdout(&fsindex(&[
        "search",
        "-i",
        index.to_str().unwrap(),
        "--matrix",
        m.to_str().unwrap(),
        "--query",
        "cda",
        "-k",
        "1",
    ]));
    let first = out.lines().nth(1).unwrap();
    let cols: Vec<&str> = first.split('\t').collect();
    assert_eq!(cols, ["one", "2", "CDA", "0", "1"]);
}

#[test]
fn similarity_threshold_sets_radius() {
    let dir = tempfile::tempdir().unwrap();
    let (index, _) = build(dir.path(), "a.fsx", &[]);
    let m = example_matrix();
    let search = |extra: &[&str]| {
        let mut args = vec![
            "search",
            "-i",
            index.to_str().unwrap(),
            "--matrix",
            m.to_str().unwrap(),
            "--query",
            "abd",
            "--format",
            "json",
        ];
        args.extend_from_slice(extra);
        serde_json::from_str::<serde_json::Value>(&stdout(&fsindex(&args))).unwrap()
    };
    let by_threshold = search(&["--similarity-threshold", "9"]);
    assert_eq!(by_threshold["epsilon"], 7);
    let by_radius = search(&["--epsilon", "7"]);
    assert_eq!(by_threshold["hits"], by_radius["hits"]);
}

#[test]
fn tsv_and_json_agree() {
    let dir = tempfile::tempdir().unwrap();
    let (index, _) = build(dir.path(), "a.fsx", &[]);
    let m = example_matrix();
    let args = |format: &'static str| {
        vec![
            "search".to_string(),
            "-i".into(),
            index.to_str().unwrap().into(),
            "--matrix".into(),
            m.to_str().unwrap().into(),
            "--query".into(),
            "bcd".into(),
            "--epsilon".into(),
            "20".into(),
            "--format".into(),
            format.into(),
        ]
    };
    let run = |a: Vec<String>| stdout(&Command::new(env!("CARGO_BIN_EXE_fsindex")).args(a).output().unwrap());
    let mut from_tsv: Vec<(String, u64, i64)> = run(args("tsv"))
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let c: Vec<&str> = l.split('\t').collect();
            (c[0].to_string(), c[1].parse().unwrap(), c[3].parse().unwrap())
        })
        .collect();
    let json: serde_json::Value = serde_json::from_str(&run(args("json"))).unwrap();
    let mut from_json: Vec<(String, u64, i64)> = json["hits"]
        .as_array()
        .unwrap()
        .iter()
        .map(|h| {
            (
                h["sequence_id"].as_str().unwrap().to_string(),
                h["offset"].as_u64().unwrap(),
                h["value"].as_i64().unwrap(),
            )
        })
        .collect();
    assert!(!from_tsv.is_empty());
    from_tsv.sort();
    from_json.sort();
    assert_eq!(from_tsv, from_json);
}

#[test]
fn verify_example_matrix() {
    let m = example_matrix();
    let out = stdout(&fsindex(&["verify-matrix", m.to_str().unwrap(), "--all-letters"]));
    assert!(out.contains("quasi-metric: yes"), "{out}");
    assert!(out.contains("triangle violations: 0"), "{out}");
}

#[test]
fn stats_audit_passes() {
    let dir = tempfile::tempdir().unwrap();
    let (index, _) = build(dir.path(), "a.fsx", &["--suffix"]);
    let out = stdout(&fsindex(&["stats", "-i", index.to_str().unwrap(), "--audit"]));
    assert!(!out.is_empty());
}

#[test]
fn exit_codes() {
    assert_eq!(fsindex(&["--no-such-flag"]).status.code(), Some(1));
    assert_eq!(fsindex(&["search"]).status.code(), Some(1));
    assert_eq!(
        fsindex(&["stats", "-i", "/nonexistent/index.fsx"]).status.code(),
        Some(1)
    );
    let dir = tempfile::tempdir().unwrap();
    let (index, _) = build(dir.path(), "a.fsx", &[]);
    let m = example_matrix();
    // length mismatch without suffix mode
    let o = fsindex(&[
        "search",
        "-i",
        index.to_str().unwrap(),
        "--matrix",
        m.to_str().unwrap(),
        "--query",
        "abcd",
        "--epsilon",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(fsindex(&["--help"]).status.code(), Some(0));
}
