//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::Instant;

use fishdbc::dataio;
use fishdbc::formats::masked_matrix;
use fishdbc::generate::{self, BlobParams, SynthParams};
use fishdbc_core::distance::{self, ItemSet};
use fishdbc_core::hierarchy::cluster_forest;
use fishdbc_core::metrics;
use fishdbc_core::msf::{kruskal, CandidateBuffer, Msf, UnionFind};
use fishdbc_core::oracle::{self, DistanceMatrix};
use fishdbc_core::{Config, Distance, DistanceTriple, Edge, Fishdbc, Weight, NOISE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn same_partition(a: &[i64], b: &[i64]) -> bool {
    let mut fwd = HashMap::new();
    let mut back = HashMap::new();
    a.len() == b.len()
        && a.iter().zip(b).all(|(&x, &y)| {
            (x == NOISE) == (y == NOISE) && *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x
        })
}

fn sorted_weights(edges: &[Edge]) -> Vec<Weight> {
    let mut w: Vec<Weight> = edges.iter().map(|e| e.weight).collect();
    w.sort();
    w
}

/// No two distinct recorded pairs share a distance.
fn tie_free(log: &[DistanceTriple]) -> bool {
    let pairs: HashMap<(usize, usize), Weight> = log.iter().map(|t| ((t.a.min(t.b), t.a.max(t.b)), t.value)).collect();
    let mut v: Vec<Weight> = pairs.into_values().collect();
    v.sort();
    v.windows(2).all(|w| w[0] != w[1])
}

struct Equivalence {
    forest_ok: bool,
    partition_ok: bool,
    tied: bool,
}

fn equivalence<T: Clone, D: Distance<T>>(items: &[T], d: D, minpts: usize, seed: u64) -> Equivalence {
    let mut e = Fishdbc::new(d, Config::new(minpts).with_seed(seed)).unwrap().record_triples();
    for x in items {
        e.add(x.clone()).unwrap();
    }
    let ours = e.cluster(minpts).unwrap();
    let forest = e.spanning_forest().to_vec();
    let m = masked_matrix(items.len(), e.triple_log().unwrap()).unwrap();
    let cores = oracle::exact_core_distances(&m, minpts);
    let exact = oracle::exact_msf(&oracle::mutual_reachability(&m, &cores).unwrap());
    let theirs = oracle::exact_cluster(&m, minpts, minpts).unwrap();
    Equivalence {
        forest_ok: sorted_weights(&forest) == sorted_weights(&exact),
        partition_ok: same_partition(&ours.labels, &theirs.labels),
        tied: !tie_free(e.triple_log().unwrap()),
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let (mut tie_free_ok, mut tie_free_total) = (0, 0);
    let (mut tied_forest_ok, mut tied_total, mut tied_partition_ok) = (0, 0, 0);
    for i in 0..50u64 {
        let n = rng.random_range(50..=200);
        let minpts = [3, 5, 10][rng.random_range(0..3)];
        let r = if i % 2 == 0 {
            let b = generate::blobs(
                &BlobParams {
                    samples: n,
                    centers: rng.random_range(2..6),
                    dim: 2,
                    ..BlobParams::default()
                },
                i,
            );
            equivalence(&b.items, distance::Euclidean, minpts, i)
        } else {
            let universe = rng.random_range(20..80u32);
            let sets: Vec<ItemSet> = (0..n)
                .map(|_| (0..rng.random_range(1..15)).map(|_| rng.random_range(0..universe)).collect())
                .collect();
            equivalence(&sets, distance::Jaccard, minpts, i)
        };
        if r.tied {
            tied_total += 1;
            tied_forest_ok += usize::from(r.forest_ok);
            tied_partition_ok += usize::from(r.partition_ok);
        } else {
            tie_free_total += 1;
            tie_free_ok += usize::from(r.forest_ok && r.partition_ok);
        }
    }
    outcome(
        tie_free_ok == tie_free_total && tied_forest_ok == tied_total,
        format!(
            "tie-free partitions {tie_free_ok}/{tie_free_total}; tied forests {tied_forest_ok}/{tied_total} (partitions also equal on {tied_partition_ok})"
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let (mut ok, mut bridged) = (0, 0);
    for i in 0..20u64 {
        let n = rng.random_range(40..=150);
        let minpts = [3, 5, 10][rng.random_range(0..3)];
        let b = generate::blobs(
            &BlobParams {
                samples: n,
                centers: rng.random_range(2..5),
                dim: 2,
                ..BlobParams::default()
            },
            100 + i,
        );
        // drop a random share of pairs so the reachability graph has ∞ and disconnected parts
        let keep = rng.random_range(0.3..1.0);
        let mut m = DistanceMatrix::new(n);
        for a in 0..n {
            for c in a + 1..n {
                if b.labels[a] == b.labels[c] && rng.random::<f64>() < keep {
                    m.set(a, c, Weight::new(distance::euclidean(&b.items[a], &b.items[c]).unwrap()).unwrap());
                }
            }
        }
        let base = oracle::exact_cluster(&m, minpts, minpts).unwrap();
        let cores = oracle::exact_core_distances(&m, minpts);
        let mr = oracle::mutual_reachability(&m, &cores).unwrap();
        let mut graph: Vec<Edge> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |c| (a, c)))
            .filter(|&(a, c)| mr.get(a, c).is_finite())
            .map(|(a, c)| Edge::new(a, c, mr.get(a, c)).unwrap())
            .collect();
        let extra = rng.random_range(1..=n);
        graph.extend((0..extra).filter_map(|_| Edge::new(rng.random_range(0..n), rng.random_range(0..n), Weight::INFINITY)));
        let mut uf = UnionFind::new(n);
        let forest = kruskal(n, &mut graph, &mut uf);
        bridged += usize::from(forest.iter().any(|e| !e.weight.is_finite()));
        let again = cluster_forest(n, &forest, minpts).unwrap();
        ok += usize::from(again.labels == base.labels);
    }
    outcome(ok == 20, format!("labels unchanged on {ok}/20 instances ({bridged} with ∞ edges in the forest)"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let mut ok = 0;
    for _ in 0..100 {
        let nodes = rng.random_range(2..=200);
        let count = rng.random_range(1..=1000);
        let integral = rng.random_bool(0.5);
        let stream: Vec<Edge> = (0..count)
            .filter_map(|_| {
                let w = if integral { rng.random_range(0..10) as f64 } else { rng.random::<f64>() };
                Edge::new(rng.random_range(0..nodes), rng.random_range(0..nodes), Weight::new(w).unwrap())
            })
            .collect();
        let mut msf = Msf::new();
        msf.grow(nodes);
        let mut buf = CandidateBuffer::new();
        for e in &stream {
            buf.push(*e);
            if rng.random_bool(0.05) {
                msf.update(&mut buf);
            }
        }
        msf.update(&mut buf);
        let mut all = stream.clone();
        let once = kruskal(nodes, &mut all, &mut UnionFind::new(nodes));
        ok += usize::from(sorted_weights(msf.edges()) == sorted_weights(&once));
    }
    outcome(ok == 100, format!("forest weights equal on {ok}/100 streams"))
}

fn blob_labels(dim: usize, seed: u64) -> (Vec<i64>, Vec<i64>) {
    let b = generate::blobs(
        &BlobParams {
            samples: 2000,
            centers: 10,
            dim,
            ..BlobParams::default()
        },
        seed,
    );
    let mut e = Fishdbc::new(distance::Euclidean, Config::new(10).with_ef(20).with_seed(seed)).unwrap();
    for x in b.items {
        e.add(x).unwrap();
    }
    (b.labels, e.cluster(10).unwrap().labels)
}

/// Mean and minimum AMI* for one dimensionality.
type DimScore = (usize, f64, f64);

/// Label files for every (dim, seed) of the blob runs, plus the scores per dim.
fn blob_runs(dir: &std::path::Path) -> (Vec<Vec<u8>>, Vec<DimScore>) {
    let mut files = Vec::new();
    let mut means = Vec::new();
    for dim in [100, 1000] {
        let mut scores = Vec::new();
        for seed in 0..10 {
            let (truth, labels) = blob_labels(dim, seed);
            scores.push(metrics::starred(metrics::ami, &truth, &labels).unwrap());
            let p = dir.join(format!("labels-{dim}-{seed}.csv"));
            dataio::write_labels(&labels, &p).unwrap();
            files.push(std::fs::read(&p).unwrap());
        }
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
        means.push((dim, mean, min));
    }
    (files, means)
}

fn criterion_4(means: &[DimScore]) -> Outcome {
    let pass = means.iter().all(|&(_, m, _)| m >= 0.90);
    let detail = means
        .iter()
        .map(|(d, m, lo)| format!("dim {d}: mean AMI* {m:.4} (min {lo:.4})"))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(pass, detail)
}

fn criterion_5() -> Outcome {
    let p = SynthParams {
        transactions: 10_000,
        clusters: 5,
        dim: 1024,
    };
    let s = generate::synth(&p, 5);
    let mut e = Fishdbc::new(distance::Jaccard, Config::new(10).with_ef(50).with_seed(5)).unwrap();
    for x in s.items {
        e.add(x).unwrap();
    }
    let r = e.cluster(10).unwrap();
    let score = metrics::starred(metrics::ami, &s.labels, &r.labels).unwrap();
    outcome(
        score >= 0.90,
        format!("AMI* {score:.4}, {} clusters, {} of {} clustered", r.cluster_count(), r.clustered_count(), r.labels.len()),
    )
}

/// Criteria 6 and 7 share one 20 000-point run.
fn criteria_6_7() -> (Outcome, Outcome) {
    let n = 20_000;
    let pts = generate::uniform(n, 10, 6);
    let config = Config::new(10).with_ef(20).with_seed(6);
    let alpha = config.alpha;
    let mut e = Fishdbc::new(distance::Euclidean, config).unwrap();
    let mut calls = Vec::with_capacity(n);
    let mut violations = 0;
    let mut ratio_early: f64 = 0.0;
    let mut ratio_late: f64 = 0.0;
    for x in pts {
        e.add(x).unwrap();
        let s = e.stats();
        calls.push(s.last_calls as f64);
        let size = e.len();
        if s.last_buffer as f64 > alpha * size as f64 + s.last_burst as f64 {
            violations += 1;
        }
        let ratio = (e.msf().edges().len() + e.candidates().len()) as f64 / size as f64;
        if (2_500..5_000).contains(&size) {
            ratio_early = ratio_early.max(ratio);
        } else if size >= 10_000 {
            ratio_late = ratio_late.max(ratio);
        }
    }
    let mean = |r: std::ops::Range<usize>| calls[r.clone()].iter().sum::<f64>() / r.len() as f64;
    let early = mean(2_500..5_000);
    let late = mean(15_000..20_000);
    let c6 = outcome(
        late <= 2.0 * early,
        format!("mean calls per item {early:.1} over insertions 2501-5000, {late:.1} over the last 5000 (ratio {:.3})", late / early),
    );
    let s = e.stats();
    let c7 = outcome(
        violations == 0 && ratio_late <= 1.5 * ratio_early.max(1.0),
        format!(
            "{violations} bound violations over {n} adds; max stored edges per item {ratio_early:.2} at n<5000, {ratio_late:.2} at n>=10000; peak buffer {}, {} flushes",
            s.peak_candidates, s.flushes
        ),
    );
    (c6, c7)
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n + 1];
    for i in 1..=n {
        t[i] = t[i - 1] + (i as f64).ln();
    }
    t
}

fn brute_ari(a: &[i64], b: &[i64]) -> f64 {
    let n = a.len();
    let (mut both, mut only_a, mut only_b, mut neither) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..n {
        for j in i + 1..n {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => both += 1.0,
                (true, false) => only_a += 1.0,
                (false, true) => only_b += 1.0,
                (false, false) => neither += 1.0,
            }
        }
    }
    let total = both + only_a + only_b + neither;
    let expected = (both + only_a) * (both + only_b) / total;
    let max = ((both + only_a) + (both + only_b)) / 2.0;
    if max == expected {
        return 1.0;
    }
    (both - expected) / (max - expected)
}

fn counts(labels: &[i64]) -> Vec<usize> {
    let mut m: HashMap<i64, usize> = HashMap::new();
    for &l in labels {
        *m.entry(l).or_default() += 1;
    }
    m.into_values().collect()
}

fn brute_ami(a: &[i64], b: &[i64]) -> f64 {
    let n = a.len();
    let nf = n as f64;
    let mut joint: HashMap<(i64, i64), usize> = HashMap::new();
    let mut ra: HashMap<i64, usize> = HashMap::new();
    let mut cb: HashMap<i64, usize> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
        *ra.entry(x).or_default() += 1;
        *cb.entry(y).or_default() += 1;
    }
    let entropy = |c: &[usize]| -c.iter().map(|&k| k as f64 / nf).map(|p| p * p.ln()).sum::<f64>();
    let (ua, ub) = (counts(a), counts(b));
    let (ha, hb) = (entropy(&ua), entropy(&ub));
    if ua.len() == 1 && ub.len() == 1 {
        return 1.0;
    }
    let mi: f64 = joint
        .iter()
        .map(|(&(x, y), &k)| {
            let p = k as f64 / nf;
            p * (nf * k as f64 / (ra[&x] as f64 * cb[&y] as f64)).ln()
        })
        .sum();
    let lf = ln_factorials(n);
    let mut emi = 0.0;
    for &ai in &ua {
        for &bj in &ub {
            let lo = (ai + bj).saturating_sub(n).max(1);
            for k in lo..=ai.min(bj) {
                let log_p = lf[ai] + lf[bj] + lf[n - ai] + lf[n - bj] - lf[n] - lf[k] - lf[ai - k] - lf[bj - k] - lf[n + k - ai - bj];
                emi += k as f64 / nf * (nf * k as f64 / (ai as f64 * bj as f64)).ln() * log_p.exp();
            }
        }
    }
    let denom = (ha + hb) / 2.0 - emi;
    (mi - emi) / denom
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (ka, kb) = (rng.random_range(2..12), rng.random_range(2..12));
        let a: Vec<i64> = (0..200).map(|_| rng.random_range(0..ka)).collect();
        let b: Vec<i64> = (0..200).map(|_| rng.random_range(0..kb)).collect();
        worst = worst
            .max((metrics::ari(&a, &b).unwrap() - brute_ari(&a, &b)).abs())
            .max((metrics::ami(&a, &b).unwrap() - brute_ami(&a, &b)).abs());
    }
    let reference = [0, 0, 0, 1, 1, 1, 2, 2, 2];
    let predicted = [0, 0, -1, 1, 1, -1, 2, 2, -1];
    let s = metrics::evaluate(&reference, &predicted).unwrap();
    let example = (s.ami - 1.0).abs() < 1e-12 && s.ami_star < s.ami;
    outcome(
        worst <= 1e-9 && example,
        format!("max |difference| {worst:.2e} over 100 labelings; example AMI {:.4} vs AMI* {:.4}", s.ami, s.ami_star),
    )
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().unwrap();
    let first = tempfile::tempdir().unwrap();
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut timed = |id: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        results.push((id, name, o, t.elapsed().as_secs_f64()));
    };
    timed(1, "forest and partition equivalence on the masked matrix", &mut criterion_1);
    timed(2, "infinite edges leave labels unchanged", &mut criterion_2);
    timed(3, "incremental forest matches one-shot Kruskal", &mut criterion_3);
    let mut blob = None;
    timed(4, "blobs AMI* >= 0.90", &mut || {
        let (files, means) = blob_runs(first.path());
        let o = criterion_4(&means);
        blob = Some(files);
        o
    });
    timed(5, "set transactions AMI* >= 0.90", &mut criterion_5);
    let t = Instant::now();
    let (c6, c7) = criteria_6_7();
    let secs = t.elapsed().as_secs_f64();
    results.push((6, "distance calls per item plateau", c6, secs));
    results.push((7, "candidate buffer bound", c7, 0.0));
    let mut timed = |id: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        results.push((id, name, o, t.elapsed().as_secs_f64()));
    };
    timed(8, "metrics agree with brute force", &mut criterion_8);
    timed(9, "repeat runs give byte-identical labels", &mut || {
        let (again, _) = blob_runs(dir.path());
        let before = blob.take().unwrap_or_default();
        let same = if before.len() == again.len() {
            before.iter().zip(&again).filter(|(a, b)| a == b).count()
        } else {
            0
        };
        outcome(!again.is_empty() && same == again.len(), format!("{same}/{} label files identical", again.len()))
    });

    let mut failed = 0;
    for (id, name, o, secs) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("[{tag}] criterion {id}: {name}: {} ({secs:.1}s)", o.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
