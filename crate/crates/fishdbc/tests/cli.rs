use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use fishdbc::cli::{self, ClusterArgs, DataArgs, EngineArgs, OracleArgs, StreamArgs};
use fishdbc::dataio::{self, DistanceName, Format};
use fishdbc::generate::{self, BlobParams};
use fishdbc_core::NOISE;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fishdbc"))
}

fn run(args: &[&str]) -> std::process::Output {
    bin().args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn same_partition(a: &[i64], b: &[i64]) -> bool {
    let mut fwd = HashMap::new();
    let mut back = HashMap::new();
    a.len() == b.len()
        && a.iter().zip(b).all(|(&x, &y)| {
            (x == NOISE) == (y == NOISE) && *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x
        })
}

fn summary(dir: &Path) -> HashMap<String, String> {
    fs::read_to_string(dir.join("summary.txt"))
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn blob_file(dir: &Path, samples: usize, seed: u64) -> PathBuf {
    let out = dir.join(format!("blobs-{samples}-{seed}"));
    let o = run(&["generate", "blobs", "--samples", &samples.to_string(), "--dim", "2", "--seed", &seed.to_string(), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn data(input: &Path, format: Format, distance: DistanceName) -> DataArgs {
    DataArgs {
        input: input.to_path_buf(),
        format,
        distance,
    }
}

fn engine(minpts: usize) -> EngineArgs {
    EngineArgs {
        minpts,
        ef: Some(20),
        min_cluster_size: None,
        alpha: None,
        seed: 3,
    }
}

#[test]
fn cluster_happy_path() {
    let dir = tempfile::tempdir().unwrap();
    let gen = blob_file(dir.path(), 500, 1);
    let out = dir.path().join("run");
    let o = run(&[
        "cluster", "--input", s(&gen.join("data.csv")), "--format", "dense-csv", "--distance", "euclidean",
        "--minpts", "10", "--ef", "20", "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let labels = dataio::read_labels(&out.join("labels.csv")).unwrap();
    assert_eq!(labels.len(), 500);
    let tree: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("tree.json")).unwrap()).unwrap();
    assert_eq!(tree["item_count"], 500);
    let sm = summary(&out);
    for key in ["n", "clustered", "clusters", "distance_calls", "build_seconds", "cluster_seconds"] {
        assert!(sm.contains_key(key), "summary lacks {key}");
    }
    assert_eq!(sm["n"], "500");
    assert!(sm["distance_calls"].parse::<u64>().unwrap() > 0);
}

#[test]
fn unknown_distance_lists_names() {
    let o = run(&["cluster", "--input", "x.csv", "--distance", "manhattan", "--out", "o"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    for name in ["euclidean", "cosine", "jaccard", "jaro-winkler", "simpson", "hamming"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "1,2\nfoo,3\n").unwrap();
    let o = run(&["cluster", "--input", s(&bad), "--out", s(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let o = run(&["cluster", "--input", s(&bad), "--out", "o", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn same_seed_gives_identical_labels() {
    let dir = tempfile::tempdir().unwrap();
    let gen = blob_file(dir.path(), 400, 2);
    let mut files = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("o{i}"));
        let o = run(&["cluster", "--input", s(&gen.join("data.csv")), "--seed", "5", "--out", s(&out)]);
        assert!(o.status.success());
        files.push(fs::read(out.join("labels.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn stream_single_chunk_equals_cluster() {
    let dir = tempfile::tempdir().unwrap();
    let gen = blob_file(dir.path(), 300, 3);
    let input = gen.join("data.csv");
    let batch = dir.path().join("batch");
    let r = cli::cmd_cluster(&ClusterArgs {
        data: data(&input, Format::DenseCsv, DistanceName::Euclidean),
        engine: engine(8),
        out: batch.clone(),
        triple_log: None,
    })
    .unwrap();
    let stream = dir.path().join("stream");
    let snaps = cli::cmd_stream(&StreamArgs {
        data: data(&input, Format::DenseCsv, DistanceName::Euclidean),
        engine: engine(8),
        out: stream.clone(),
        chunk: 300,
    })
    .unwrap();
    assert_eq!(snaps.len(), 1);
    assert_eq!(snaps[0], r);
    for f in ["labels.csv", "tree.json"] {
        assert_eq!(fs::read(batch.join(f)).unwrap(), fs::read(stream.join("00001").join(f)).unwrap());
    }
    let calls = fs::read_to_string(stream.join("calls.csv")).unwrap();
    assert_eq!(calls.lines().count(), 301);
}

#[test]
fn stream_every_item() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("ten.csv");
    let pts = generate::uniform(10, 2, 4);
    dataio::write_dense_csv(&pts, &input).unwrap();
    let e = EngineArgs {
        min_cluster_size: Some(2),
        ..engine(2)
    };
    let snaps = cli::cmd_stream(&StreamArgs {
        data: data(&input, Format::DenseCsv, DistanceName::Euclidean),
        engine: e.clone(),
        out: dir.path().join("s"),
        chunk: 1,
    })
    .unwrap();
    assert_eq!(snaps.len(), 10);
    assert!(dir.path().join("s/00010/labels.csv").exists());
    for (i, snap) in snaps.iter().enumerate() {
        assert_eq!(snap.labels.len(), i + 1);
    }
    let r = cli::cmd_cluster(&ClusterArgs {
        data: data(&input, Format::DenseCsv, DistanceName::Euclidean),
        engine: e,
        out: dir.path().join("c"),
        triple_log: None,
    })
    .unwrap();
    assert_eq!(snaps[9], r);
}

#[test]
fn eval_reports() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth.txt");
    dataio::write_label_lines(&[0, 0, 1, 1, 2, 2], &truth).unwrap();
    let o = run(&["eval", "--predictions", s(&truth), "--labels", s(&truth)]);
    let text = String::from_utf8_lossy(&o.stdout);
    for key in ["ami=1.0", "ari=1.0", "ami_star=1.0", "ari_star=1.0"] {
        assert!(text.contains(key), "{text}");
    }

    let noise = dir.path().join("noise.txt");
    dataio::write_label_lines(&[-1; 6], &noise).unwrap();
    let o = run(&["eval", "--predictions", s(&noise), "--labels", s(&truth)]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("undefined"), "{text}");
    assert!(text.contains("ami=0.000000"));
    assert!(text.contains("# clustered 0 of 6"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("AMI and ARI reported as 0"));

    let short = dir.path().join("short.txt");
    dataio::write_label_lines(&[0, 1], &short).unwrap();
    assert_eq!(run(&["eval", "--predictions", s(&short), "--labels", s(&truth)]).status.code(), Some(2));
}

#[test]
fn synth_cluster_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("synth");
    let o = run(&["generate", "synth", "--samples", "600", "--dim", "640", "--seed", "1", "--out", s(&gen)]);
    assert!(o.status.success());
    let out = dir.path().join("run");
    let o = run(&[
        "cluster", "--input", s(&gen.join("data.sets")), "--format", "set-lines", "--distance", "jaccard", "--ef", "50", "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&[
        "eval", "--predictions", s(&out.join("labels.csv")), "--labels", s(&gen.join("labels.txt")), "--input",
        s(&gen.join("data.sets")), "--format", "set-lines", "--distance", "jaccard", "--sample-size", "200", "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.starts_with("# clustered "), "{text}");
    assert!(text.contains("intra_distance=") && text.contains("silhouette="));
    assert_eq!(fs::read_to_string(out.join("eval.txt")).unwrap(), text);
}

#[test]
fn oracle_on_two_blobs() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("two.csv");
    let mut rows = Vec::new();
    for (i, c) in [0.0, 10.0].into_iter().enumerate() {
        for k in 0..30 {
            let t = k as f64;
            rows.push(vec![c + (t * 0.37).sin() * 0.3, (t * 0.71 + i as f64).cos() * 0.3]);
        }
    }
    dataio::write_dense_csv(&rows, &input).unwrap();
    let args = OracleArgs {
        matrix: None,
        input: Some(input.clone()),
        format: Format::DenseCsv,
        distance: DistanceName::Euclidean,
        mask_from: None,
        minpts: 5,
        min_cluster_size: None,
        out: dir.path().join("o"),
    };
    let r = cli::cmd_oracle(&args).unwrap();
    assert_eq!(r.cluster_count(), 2);

    let empty = dir.path().join("empty.log");
    fs::write(&empty, "").unwrap();
    let masked = cli::cmd_oracle(&OracleArgs {
        mask_from: Some(empty),
        ..args
    })
    .unwrap();
    assert!(masked.labels.iter().all(|&l| l == NOISE));
}

#[test]
fn masked_oracle_matches_engine() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("p.csv");
    let b = generate::blobs(
        &BlobParams {
            samples: 150,
            centers: 3,
            ..BlobParams::default()
        },
        7,
    );
    dataio::write_dense_csv(&b.items, &input).unwrap();
    let log = dir.path().join("triples.log");
    let r = cli::cmd_cluster(&ClusterArgs {
        data: data(&input, Format::DenseCsv, DistanceName::Euclidean),
        engine: engine(5),
        out: dir.path().join("f"),
        triple_log: Some(log.clone()),
    })
    .unwrap();
    let o = run(&["oracle", "--input", s(&input), "--mask-from", s(&log), "--minpts", "5", "--out", s(&dir.path().join("m"))]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let theirs = dataio::read_labels(&dir.path().join("m/labels.csv")).unwrap();
    assert!(same_partition(&r.labels, &theirs));
}

#[test]
fn oracle_matrix_file() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.txt");
    // two triangles joined by nothing
    fs::write(&m, "6\n1 1 inf inf inf\n1 inf inf inf\ninf inf inf\n1 1\n1\n").unwrap();
    let o = run(&["oracle", "--matrix", s(&m), "--minpts", "2", "--out", s(&dir.path().join("o"))]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let labels = dataio::read_labels(&dir.path().join("o/labels.csv")).unwrap();
    assert!(same_partition(&labels, &[0, 0, 0, 1, 1, 1]));
}

#[test]
fn bag_of_words_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("docword.txt");
    fs::write(&p, "3\n4\n6\n1 1 3\n1 2 1\n2 1 6\n2 2 2\n3 3 1\n3 4 5\n").unwrap();
    let spec = dataio::DatasetSpec {
        format: Format::BagOfWords,
        path: p,
        labels: None,
    };
    let docs: Vec<_> = dataio::read_dataset(&spec).unwrap().collect::<Result<_, _>>().unwrap();
    assert_eq!(docs.len(), 3);
    use fishdbc_core::Distance;
    let d = dataio::AnyDistance(DistanceName::Cosine);
    assert!(d.eval(&docs[0], &docs[1]).unwrap().abs() < 1e-12);
    assert!((d.eval(&docs[0], &docs[2]).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn wider_beam_costs_more_calls() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..5 {
        let gen = blob_file(dir.path(), 600, 10 + seed);
        let calls = |ef: &str| {
            let out = dir.path().join(format!("ef{ef}-{seed}"));
            let o = run(&["cluster", "--input", s(&gen.join("data.csv")), "--ef", ef, "--seed", "1", "--out", s(&out)]);
            assert!(o.status.success());
            summary(&out)["distance_calls"].parse::<u64>().unwrap()
        };
        assert!(calls("50") >= calls("20"));
    }
}
