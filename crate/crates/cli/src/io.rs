use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use netdmap::{read_dataset, GraphRecord, Metric};
use serde::Serialize;

use crate::args::{Command, OutputArgs};
use crate::manifest::{self, FileDigest, Manifest, MANIFEST};

pub const GRAPHS: &str = "graphs.jsonl";

/// A graph dataset read from a `generate` directory or a bare .jsonl file.
pub struct GraphsInput {
    pub records: Vec<GraphRecord>,
    pub digest: FileDigest,
}

impl GraphsInput {
    pub fn open(role: &str, path: &Path) -> Result<GraphsInput> {
        let file = if path.is_dir() {
            Manifest::load_stage(path, &["generate"])?;
            path.join(GRAPHS)
        } else {
            path.to_path_buf()
        };
        let records = read_dataset(&file).with_context(|| format!("reading {}", file.display()))?;
        if records.is_empty() {
            bail!("{} holds no graphs", file.display());
        }
        Ok(GraphsInput {
            records,
            digest: manifest::input(role, &file)?,
        })
    }

    pub fn sha256(&self) -> &str {
        &self.digest.sha256
    }
}

/// Collects output files, then writes the manifest last.
pub struct StageOutput {
    dir: PathBuf,
    files: Vec<String>,
}

impl StageOutput {
    pub fn create(out: &OutputArgs) -> Result<StageOutput> {
        let dir = &out.out;
        if dir.exists() {
            let occupied = fs::read_dir(dir)?.next().is_some();
            if occupied && !out.force {
                bail!("{} is not empty; pass --force to overwrite", dir.display());
            }
        }
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let _ = fs::remove_file(dir.join(MANIFEST));
        Ok(StageOutput {
            dir: dir.clone(),
            files: Vec::new(),
        })
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn csv(&mut self, name: &str, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn finish(
        self,
        command: &Command,
        metric: Option<Metric>,
        dataset: Option<String>,
        inputs: Vec<FileDigest>,
    ) -> Result<Manifest> {
        let mut outputs = BTreeMap::new();
        for name in &self.files {
            outputs.insert(name.clone(), manifest::sha256_file(&self.dir.join(name))?);
        }
        let m = Manifest {
            tool: "netdmap".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            stage: command.stage().into(),
            config: serde_json::to_value(command)?,
            metric,
            dataset,
            inputs,
            outputs,
        };
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        fs::write(self.dir.join(MANIFEST), text)?;
        Ok(m)
    }
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Column names (without `id`), row ids, and rows.
pub type Table = (Vec<String>, Vec<String>, Vec<Vec<f64>>);

/// Reads an `id,<columns…>` CSV of floats.
pub fn read_table(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().skip(1).map(str::to_string).collect();
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        ids.push(rec[0].to_string());
        let row = rec
            .iter()
            .skip(1)
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .with_context(|| format!("{} row {}", path.display(), line + 2))?;
        rows.push(row);
    }
    Ok((header, ids, rows))
}
