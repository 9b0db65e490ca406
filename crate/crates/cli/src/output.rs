//! Report files named `<domain>_<experiment>_<timestamp>.<ext>`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

pub struct Sink {
    dir: PathBuf,
    stem: String,
    pub written: Vec<PathBuf>,
}

/// Keeps names portable: anything outside `[A-Za-z0-9.-]` becomes `_`.
fn clean(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

impl Sink {
    pub fn new(dir: &Path, domain: &str, experiment: &str) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Ok(Sink {
            dir: dir.to_path_buf(),
            stem: format!("{}_{}_{stamp}", clean(domain), experiment),
            written: Vec::new(),
        })
    }

    pub fn text(&mut self, ext: &str, body: &str) -> Result<()> {
        let path = self.dir.join(format!("{}.{ext}", self.stem));
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, value: &T) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.text("json", &body)
    }

    pub fn report(&self) {
        for p in &self.written {
            println!("wrote {}", p.display());
        }
    }
}

/// Whitespace-separated columns for gnuplot; missing values are `NaN`.
pub fn gnuplot_table(header: &[&str], rows: impl IntoIterator<Item = Vec<Option<f64>>>) -> String {
    let mut out = format!("# {}\n", header.join(" "));
    for row in rows {
        let cells: Vec<String> = row
            .into_iter()
            .map(|v| v.map_or_else(|| "NaN".to_string(), |x| format!("{x:.17e}")))
            .collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}
