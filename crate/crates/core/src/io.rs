//! CSV series with `#` header lines and JSON run manifests.

use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Shortest round-trip representation, in exponent form outside
/// `[1e-4, 1e15)`; `nan` for NaN.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v.is_nan() {
        "nan".into()
    } else if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Values accepted by [`Table::meta`].
pub trait MetaValue {
    fn render(&self) -> String;
}

impl MetaValue for f64 {
    fn render(&self) -> String {
        num(*self)
    }
}

impl MetaValue for Option<f64> {
    fn render(&self) -> String {
        self.map(num).unwrap_or_else(|| "none".into())
    }
}

macro_rules! meta_display {
    ($($t:ty),*) => {$(
        impl MetaValue for $t {
            fn render(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
meta_display!(usize, u32, i32, &str, String, &String);

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// A table written as CSV: `# ` comment lines, one header row, data rows.
#[derive(Debug, Clone, Default)]
pub struct Table {
    comments: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(title: &str, columns: &[&str]) -> Self {
        Self { comments: vec![title.to_string()], columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    /// Adds a `# key: value` line.
    pub fn meta(mut self, key: &str, value: impl MetaValue) -> Self {
        self.comments.push(format!("{key}: {}", value.render()));
        self
    }

    pub fn row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.columns.len(), "row width must match the header");
        self.rows.push(cells);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.comments {
            let _ = writeln!(s, "# {c}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }
}

/// Size of one emitted file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
}

/// Collects the files of one run under an output directory.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, contents: &str) -> io::Result<()> {
        fs::write(self.root.join(name), contents)?;
        self.files.push(FileEntry { path: name.to_string(), bytes: contents.len() as u64 });
        Ok(())
    }

    pub fn table(&mut self, name: &str, table: &Table) -> io::Result<()> {
        self.write(name, &table.render())
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }
}

/// Record of one command invocation. `config` is accepted back by
/// `--config`, so re-running from a manifest reproduces every data file;
/// only `wall_time_seconds` differs between runs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub wall_time_seconds: f64,
    pub files: Vec<FileEntry>,
    pub outcome: serde_json::Value,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest is serialisable") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_layout() {
        let mut t = Table::new("central curvature", &["t", "w_rr"]).meta("dim", 5);
        t.row(vec![num(0.5), num(-3.25)]);
        t.row(vec![num(1.0), opt(None)]);
        assert_eq!(t.render(), "# central curvature\n# dim: 5\nt,w_rr\n0.5,-3.25\n1,\n");
        assert_eq!(num(f64::NAN), "nan");
        assert_eq!(num(0.1 + 0.2), "0.30000000000000004");
        assert_eq!(num(1.5e-12), "1.5e-12");
        assert_eq!(num(-2e20), "-2e20");
        assert_eq!(num(0.0), "0");
    }

    #[test]
    fn output_dir_inventory() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(&dir.path().join("a/b")).unwrap();
        out.write("x.txt", "hello").unwrap();
        assert_eq!(out.files(), &[FileEntry { path: "x.txt".into(), bytes: 5 }]);
        assert_eq!(fs::read_to_string(out.root().join("x.txt")).unwrap(), "hello");
    }
}
