use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Hash of the canonical (key-sorted, compact) config JSON.
pub fn config_hash(subcommand: &str, config: &Value) -> String {
    let mut h = Sha256::new();
    h.update(subcommand.as_bytes());
    h.update([0]);
    h.update(serde_json::to_string(config).expect("json value serializes").as_bytes());
    h.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Tabular output with a header row and a trailing `#` metadata block.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn render(&self, meta: &[(&str, String)]) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        for (k, v) in meta {
            let _ = writeln!(out, "# {k}: {v}");
        }
        out
    }
}

pub struct Writer {
    dir: PathBuf,
    subcommand: &'static str,
    hash: String,
    files: Vec<String>,
}

impl Writer {
    pub fn new(dir: &Path, subcommand: &'static str, config: &Value) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            subcommand,
            hash: config_hash(subcommand, config),
            files: Vec::new(),
        })
    }

    pub fn run_id(&self) -> &str {
        &self.hash[..12]
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        let meta = [
            ("subcommand", self.subcommand.to_string()),
            ("config_sha256", self.hash.clone()),
            ("run_id", self.run_id().to_string()),
        ];
        std::fs::write(self.dir.join(name), table.render(&meta))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(self.dir.join(name), text)?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// `report.json`: config echo, run id, outputs and warnings.
    pub fn report(
        &mut self,
        config: &Value,
        status: &str,
        warnings: &[String],
        wall_time_s: f64,
    ) -> Result<(), CliError> {
        let report = serde_json::json!({
            "subcommand": self.subcommand,
            "config": config,
            "config_sha256": self.hash,
            "run_id": self.run_id(),
            "status": status,
            "outputs": self.files,
            "warnings": warnings,
            "wall_time_s": wall_time_s,
        });
        self.json("report.json", &report)
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_key_order_of_source() {
        let a: Value = serde_json::from_str(r#"{"a":1,"b":2}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"b":2,"a":1}"#).unwrap();
        assert_eq!(config_hash("x", &a), config_hash("x", &b));
        assert_ne!(config_hash("x", &a), config_hash("y", &a));
    }

    #[test]
    fn table_has_header_and_metadata() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![num(1.5), num(2.0)]);
        let s = t.render(&[("k", "v".into())]);
        assert_eq!(s, "a,b\n1.5,2\n# k: v\n");
    }
}
