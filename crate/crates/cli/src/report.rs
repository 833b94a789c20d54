//! Output emission: RFC 4180 CSV, the JSON test report, and atomic file
//! replacement so readers never observe a half-written file.

use std::fs;
use std::io::Write;
use std::path::Path;

use pvsim_core::mc::TestRecord;
use serde::Serialize;

use crate::config::RunConfig;

/// Render a float with 17 significant digits so a round trip through
/// `str::parse::<f64>` reproduces the exact bit pattern.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// A rectangular table destined for CSV output.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(columns: Vec<S>) -> Self {
        CsvTable {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match header");
        self.rows.push(row);
    }

    /// Header line first, then one line per row, every line terminated by
    /// a single `\n`. No field needs quoting: names are plain identifiers
    /// and numbers contain no comma.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(|&v| format_real(v)).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

/// Single-column CSV of raw samples: the header names the statistic and
/// each subsequent line carries one value.
pub fn emit_csv(name: &str, samples: &[f64]) -> String {
    let mut table = CsvTable::new(vec![name]);
    for &v in samples {
        table.push(vec![v]);
    }
    table.emit()
}

/// Echo of the resolved run parameters, embedded in the JSON report.
#[derive(Debug, Serialize)]
pub struct ConfigEcho {
    pub command: String,
    pub paths: usize,
    pub steps: usize,
    pub seed: u64,
    pub workers: usize,
    pub window: String,
    pub format: String,
    pub out: String,
}

impl ConfigEcho {
    pub fn from_run(cfg: &RunConfig) -> Self {
        ConfigEcho {
            command: cfg.command.name().to_string(),
            paths: cfg.n_paths,
            steps: cfg.n_steps,
            seed: cfg.master_seed,
            workers: cfg.workers,
            window: cfg.window_label(),
            format: cfg.format.name().to_string(),
            out: cfg.out_path.display().to_string(),
        }
    }
}

/// One verdict line of the report.
#[derive(Debug, Serialize)]
pub struct TestLine {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl From<&TestRecord<f64>> for TestLine {
    fn from(r: &TestRecord<f64>) -> Self {
        TestLine {
            name: r.name.clone(),
            statistic: r.statistic,
            threshold: r.threshold,
            pass: r.pass,
        }
    }
}

/// Compact fingerprint of the sample vector: size, mean, and the eight
/// smallest order statistics. Enough to spot seeding or merge regressions
/// without shipping the full ensemble inside the JSON report.
#[derive(Debug, Serialize)]
pub struct SamplesDigest {
    pub count: usize,
    pub mean: f64,
    pub order_stats: Vec<f64>,
}

impl SamplesDigest {
    pub fn from_samples(samples: &[f64]) -> Self {
        let count = samples.len();
        let mean = if count == 0 {
            0.0
        } else {
            samples.iter().sum::<f64>() / count as f64
        };
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("samples must be ordered"));
        sorted.truncate(8);
        SamplesDigest {
            count,
            mean,
            order_stats: sorted,
        }
    }
}

/// Top-level JSON document.
#[derive(Debug, Serialize)]
pub struct JsonReport {
    pub config: ConfigEcho,
    pub tests: Vec<TestLine>,
    pub samples_digest: SamplesDigest,
    pub runtime_seconds: f64,
}

impl JsonReport {
    pub fn emit(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(self).expect("report serialization cannot fail");
        text.push('\n');
        text
    }
}

/// Write `content` to `path` atomically: the bytes land in a temporary
/// file in the destination directory, then a rename swaps it into place.
pub fn atomic_write(path: &Path, content: &str) -> std::io::Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    fs::create_dir_all(&parent)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&parent)?;
    tmp.write_all(content.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
