//! On-disk formats: condensed tree JSON, distance triple logs and
//! upper-triangle distance matrices.

use std::io::{self, BufRead, Write};

use fishdbc_core::oracle::DistanceMatrix;
use fishdbc_core::{CondensedTree, DistanceTriple, Weight};
use serde::{Deserialize, Serialize};

use crate::dataio::DataError;

/// Reals that may be infinite; JSON has no literal for ∞ so it is written as `"inf"`.
mod maybe_inf {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(D::Error::custom(format!("expected a number or \"inf\", found {t:?}"))),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub id: usize,
    pub parent: Option<usize>,
    #[serde(with = "maybe_inf")]
    pub birth_lambda: f64,
    #[serde(with = "maybe_inf")]
    pub death_lambda: f64,
    pub size: usize,
    #[serde(with = "maybe_inf")]
    pub stability: f64,
    pub selected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub point: usize,
    pub cluster: usize,
    #[serde(with = "maybe_inf")]
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeFile {
    pub item_count: usize,
    pub min_cluster_size: usize,
    pub clusters: Vec<ClusterRecord>,
    pub points: Vec<PointRecord>,
}

impl From<&CondensedTree> for TreeFile {
    fn from(t: &CondensedTree) -> TreeFile {
        TreeFile {
            item_count: t.item_count(),
            min_cluster_size: t.min_cluster_size(),
            clusters: t
                .clusters()
                .iter()
                .map(|c| ClusterRecord {
                    id: c.id,
                    parent: c.parent,
                    birth_lambda: c.birth_lambda,
                    death_lambda: c.death_lambda,
                    size: c.size,
                    stability: c.stability,
                    selected: c.selected,
                })
                .collect(),
            points: t
                .points()
                .iter()
                .map(|p| PointRecord {
                    point: p.point,
                    cluster: p.cluster,
                    lambda: p.lambda,
                })
                .collect(),
        }
    }
}

pub fn write_tree<W: Write>(tree: &CondensedTree, w: W) -> io::Result<()> {
    serde_json::to_writer_pretty(w, &TreeFile::from(tree)).map_err(io::Error::other)
}

pub fn read_tree<R: io::Read>(r: R) -> serde_json::Result<TreeFile> {
    serde_json::from_reader(r)
}

fn parse_weight(line: usize, field: &str) -> Result<Weight, DataError> {
    let v: f64 = match field {
        "inf" | "∞" => f64::INFINITY,
        _ => field.parse().map_err(|_| DataError::Parse {
            line,
            message: format!("invalid distance {field:?}"),
        })?,
    };
    Weight::new(v).ok_or_else(|| DataError::Parse {
        line,
        message: format!("distance must be non-negative, found {field:?}"),
    })
}

fn format_weight(w: Weight) -> String {
    if w.is_finite() {
        format!("{}", w.get())
    } else {
        "inf".to_string()
    }
}

/// One `a b value` line per evaluated pair.
pub fn write_triples<W: Write>(triples: &[DistanceTriple], mut w: W) -> io::Result<()> {
    for t in triples {
        writeln!(w, "{} {} {}", t.a, t.b, format_weight(t.value))?;
    }
    w.flush()
}

pub fn read_triples<R: BufRead>(r: R) -> Result<Vec<DistanceTriple>, DataError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| DataError::io("<triples>".as_ref(), e))?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.is_empty() {
            continue;
        }
        let bad = || DataError::Parse {
            line: i + 1,
            message: format!("expected `a b value`, found {line:?}"),
        };
        if f.len() != 3 {
            return Err(bad());
        }
        out.push(DistanceTriple {
            a: f[0].parse().map_err(|_| bad())?,
            b: f[1].parse().map_err(|_| bad())?,
            value: parse_weight(i + 1, f[2])?,
        });
    }
    Ok(out)
}

/// Distances known from a triple log; every other pair is ∞.
pub fn masked_matrix(n: usize, triples: &[DistanceTriple]) -> Result<DistanceMatrix, DataError> {
    let mut m = DistanceMatrix::new(n);
    for t in triples {
        if t.a >= n || t.b >= n {
            return Err(DataError::Parse {
                line: 0,
                message: format!("triple ({}, {}) refers to an item beyond {n}", t.a, t.b),
            });
        }
        m.set(t.a, t.b, t.value);
    }
    Ok(m)
}

/// First line `n`, then row `i` holds the distances to items `i+1..n`.
pub fn write_matrix<W: Write>(m: &DistanceMatrix, mut w: W) -> io::Result<()> {
    let n = m.len();
    writeln!(w, "{n}")?;
    for i in 0..n.saturating_sub(1) {
        let row: Vec<String> = (i + 1..n).map(|j| format_weight(m.get(i, j))).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    w.flush()
}

pub fn read_matrix<R: BufRead>(r: R) -> Result<DistanceMatrix, DataError> {
    let mut tokens = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| DataError::io("<matrix>".as_ref(), e))?;
        tokens.extend(line.split_whitespace().map(|t| (i + 1, t.to_string())));
    }
    let mut it = tokens.into_iter();
    let (line, first) = it.next().ok_or(DataError::Empty)?;
    let n: usize = first.parse().map_err(|_| DataError::Parse {
        line,
        message: format!("invalid item count {first:?}"),
    })?;
    let mut m = DistanceMatrix::new(n);
    for i in 0..n {
        for j in i + 1..n {
            let (line, t) = it.next().ok_or_else(|| DataError::Parse {
                line,
                message: format!("matrix ends before entry ({i}, {j})"),
            })?;
            m.set(i, j, parse_weight(line, &t)?);
        }
    }
    if let Some((line, t)) = it.next() {
        return Err(DataError::Parse {
            line,
            message: format!("unexpected trailing value {t:?}"),
        });
    }
    Ok(m)
}
