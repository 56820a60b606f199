//! Line-delimited JSON graph datasets.
//!
//! One record per line:
//! `{"id": str, "n": int, "edges": [[u, v], ...], "params": {str: float}, "seed": int}`
//! with `0 <= u < v < n`. Edges are written in lexicographic order.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq)]
pub struct GraphRecord {
    pub id: String,
    pub graph: Graph,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
}

impl GraphRecord {
    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireRecord {
    id: String,
    n: usize,
    edges: Vec<[usize; 2]>,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    #[serde(default)]
    seed: u64,
}

impl From<&GraphRecord> for WireRecord {
    fn from(r: &GraphRecord) -> Self {
        WireRecord {
            id: r.id.clone(),
            n: r.graph.n(),
            edges: r.graph.edges().into_iter().map(|(u, v)| [u, v]).collect(),
            params: r.params.clone(),
            seed: r.seed,
        }
    }
}

pub fn record_to_line(record: &GraphRecord) -> Result<String> {
    Ok(serde_json::to_string(&WireRecord::from(record))?)
}

/// Parses one dataset line; `line` is 1-based and only used for messages.
pub fn record_from_line(text: &str, line: usize) -> Result<GraphRecord> {
    let wire: WireRecord = serde_json::from_str(text).map_err(|e| Error::Record {
        line,
        reason: e.to_string(),
    })?;
    if wire.n == 0 {
        return Err(Error::Record {
            line,
            reason: "n must be positive".into(),
        });
    }
    for (k, &[u, v]) in wire.edges.iter().enumerate() {
        if !(u < v && v < wire.n) {
            return Err(Error::Record {
                line,
                reason: format!("edge #{k} [{u}, {v}] violates 0 <= u < v < n = {}", wire.n),
            });
        }
    }
    let pairs: Vec<(usize, usize)> = wire.edges.iter().map(|&[u, v]| (u, v)).collect();
    let graph = Graph::from_edges(wire.n, &pairs).map_err(|e| Error::Record {
        line,
        reason: e.to_string(),
    })?;
    Ok(GraphRecord {
        id: wire.id,
        graph,
        params: wire.params,
        seed: wire.seed,
    })
}

pub fn write_dataset(records: &[GraphRecord], path: impl AsRef<Path>) -> Result<()> {
    check_unique_ids(records)?;
    let mut out = BufWriter::new(File::create(path)?);
    for r in records {
        writeln!(out, "{}", record_to_line(r)?)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<GraphRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = record_from_line(&line, idx + 1)?;
        if !seen.insert(rec.id.clone()) {
            return Err(Error::Record {
                line: idx + 1,
                reason: format!("duplicate id {:?}", rec.id),
            });
        }
        records.push(rec);
    }
    Ok(records)
}

fn check_unique_ids(records: &[GraphRecord]) -> Result<()> {
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert(r.id.as_str()) {
            return Err(Error::Dataset(format!("duplicate id {:?}", r.id)));
        }
    }
    Ok(())
}

/// Common node count of a non-empty dataset; errors on mixed sizes.
pub fn common_n(graphs: &[&Graph]) -> Result<usize> {
    let n = graphs
        .first()
        .map(|g| g.n())
        .ok_or_else(|| Error::Dataset("dataset is empty".into()))?;
    if let Some((i, g)) = graphs.iter().enumerate().find(|(_, g)| g.n() != n) {
        return Err(Error::Dataset(format!(
            "graph #{i} has {} nodes, expected {n}",
            g.n()
        )));
    }
    Ok(n)
}
