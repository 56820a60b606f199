//! Run manifests: every output directory carries `manifest.json` with the
//! full command config, the digests of its inputs and outputs, the metric in
//! force, and the digest of the graph dataset the stage descends from.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use netdmap::Metric;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub stage: String,
    /// The command that produced this directory, re-runnable as is.
    pub config: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
    /// sha256 of the graph dataset at the root of this stage's lineage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    pub inputs: Vec<FileDigest>,
    /// Output file name → sha256.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let k = f.read(&mut buf)?;
        if k == 0 {
            break;
        }
        h.update(&buf[..k]);
    }
    Ok(hex::encode(h.finalize()))
}

pub fn input(role: &str, path: &Path) -> Result<FileDigest> {
    Ok(FileDigest {
        role: role.to_string(),
        path: path.to_path_buf(),
        sha256: sha256_file(path)?,
    })
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Manifest> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Reads a stage directory, checking the stage kind and that no output
    /// changed since the manifest was written.
    pub fn load_stage(dir: &Path, stages: &[&str]) -> Result<Manifest> {
        let m = Manifest::read(dir)?;
        if !stages.contains(&m.stage.as_str()) {
            bail!(
                "{} holds a `{}` stage; expected one of {:?}",
                dir.display(),
                m.stage,
                stages
            );
        }
        for (name, want) in &m.outputs {
            let got = sha256_file(&dir.join(name))?;
            if &got != want {
                bail!(
                    "{} changed since its manifest was written (sha256 {got}, manifest says {want})",
                    dir.join(name).display()
                );
            }
        }
        Ok(m)
    }
}

/// Flattened leaf-by-leaf differences between two JSON documents.
pub fn diff(a: &Value, b: &Value) -> Vec<String> {
    let mut fa = BTreeMap::new();
    let mut fb = BTreeMap::new();
    flatten("", a, &mut fa);
    flatten("", b, &mut fb);
    let mut keys: Vec<&String> = fa.keys().chain(fb.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .filter_map(|k| match (fa.get(k), fb.get(k)) {
            (Some(x), Some(y)) if x == y => None,
            (x, y) => Some(format!(
                "  {k}: {} | {}",
                x.map_or("<absent>".to_string(), |v| v.to_string()),
                y.map_or("<absent>".to_string(), |v| v.to_string())
            )),
        })
        .collect()
}

fn flatten(prefix: &str, v: &Value, out: &mut BTreeMap<String, Value>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, x)| flatten(&join(k), x, out)),
        Value::Array(items) if items.len() <= 16 => {
            items.iter().enumerate().for_each(|(i, x)| flatten(&join(&i.to_string()), x, out))
        }
        _ => {
            out.insert(prefix.to_string(), v.clone());
        }
    }
}

/// An error listing how two manifests (or a manifest and a request) differ.
pub fn refusal(reason: &str, left: (&str, &Value), right: (&str, &Value)) -> anyhow::Error {
    let lines = diff(left.1, right.1);
    anyhow::anyhow!(
        "{reason}\n--- {} | {}\n{}",
        left.0,
        right.0,
        if lines.is_empty() { "  (no field differences)".to_string() } else { lines.join("\n") }
    )
}
