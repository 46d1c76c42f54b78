//! Run persistence: a trajectory serializes to a directory holding a JSON
//! manifest (command, config echo, artifact checksums, timings), the norm
//! trace as CSV, and optional coefficient snapshots. All floats print with
//! 17 significant digits so doubles round-trip losslessly through text.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::SweepTable;
use crate::evolution::{PicardDiagnostics, Termination, Trajectory};
use crate::report::VerificationReport;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("missing trace file {0}")]
    MissingTrace(PathBuf),
    #[error("malformed trace row {row}: {message}")]
    MalformedTrace { row: usize, message: String },
    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),
}

fn write_file(path: &Path, contents: &str) -> Result<(), IoError> {
    fs::write(path, contents).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn read_file(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

/// Lossless decimal rendering of a double (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Everything needed to reproduce and audit a run: the command, the full
/// config echo, the emitted files with checksums, and wall-clock timings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_toml: String,
    pub out_dir: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination: Option<Termination>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub artifacts: Vec<ArtifactEntry>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str, config_toml: &str, out_dir: &Path) -> Self {
        Self {
            command: command.to_string(),
            config_toml: config_toml.to_string(),
            out_dir: out_dir.display().to_string(),
            termination: None,
            note: None,
            artifacts: Vec::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    /// Record a file that already exists on disk, hashing its contents.
    pub fn add_artifact(&mut self, dir: &Path, name: &str) -> Result<(), IoError> {
        let path = dir.join(name);
        let data = fs::read(&path).map_err(|source| IoError::File {
            path: path.clone(),
            source,
        })?;
        let mut hasher = Sha256::new();
        hasher.update(&data);
        let digest = hasher.finalize();
        let sha256 = digest.iter().fold(String::with_capacity(64), |mut s, b| {
            use std::fmt::Write;
            let _ = write!(s, "{b:02x}");
            s
        });
        self.artifacts.push(ArtifactEntry {
            path: name.to_string(),
            bytes: data.len() as u64,
            sha256,
        });
        Ok(())
    }

    pub fn record_timing(&mut self, label: &str, millis: f64) {
        self.timings_ms.insert(label.to_string(), millis);
    }

    pub fn write(&self, dir: &Path) -> Result<(), IoError> {
        let text = serde_json::to_string_pretty(self)?;
        write_file(&dir.join("manifest.json"), &(text + "\n"))
    }

    pub fn read(dir: &Path) -> Result<Self, IoError> {
        Ok(serde_json::from_str(&read_file(&dir.join("manifest.json"))?)?)
    }
}

pub const TRACE_FILE: &str = "trace.csv";
pub const TRACE_HEADER: &str = "t,h32,h94,h3,l4t_h94_running";

/// Norm trace CSV: `t, ‖f‖_{3/2}, ‖f‖_{9/4}, ‖f‖₃, running L⁴_t Ḣ^{9/4}`.
pub fn write_trace(dir: &Path, traj: &Trajectory) -> Result<(), IoError> {
    let trace = &traj.trace;
    let h32 = trace.norm_series(1.5).expect("default exponent");
    let h94 = trace.norm_series(2.25).expect("default exponent");
    let h3 = trace.norm_series(3.0).expect("default exponent");
    let l4 = &trace
        .accumulators()
        .iter()
        .find(|a| a.p == 4.0 && a.s == 2.25)
        .expect("default accumulator")
        .running;
    let mut out = String::with_capacity(trace.len() * 96 + 64);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for (i, t) in trace.times().iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f64(*t),
            fmt_f64(h32[i]),
            fmt_f64(h94[i]),
            fmt_f64(h3[i]),
            fmt_f64(l4[i].powf(0.25)),
        ));
    }
    write_file(&dir.join(TRACE_FILE), &out)
}

/// Coefficient snapshots as a `(t, n, re, im)` text table, optionally
/// subsampled in time.
pub fn write_snapshots(dir: &Path, traj: &Trajectory, every: usize) -> Result<(), IoError> {
    let every = every.max(1);
    let mut out = String::from("t,n,re,im\n");
    for (i, t) in traj.times().iter().enumerate() {
        if i % every != 0 && i + 1 != traj.times().len() {
            continue;
        }
        let f = &traj.snapshots()[i];
        for n in -(f.cutoff() as i64)..=f.cutoff() as i64 {
            let c = f.coeff(n);
            if n == 0 || (c.re == 0.0 && c.im == 0.0) {
                continue;
            }
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(*t),
                n,
                fmt_f64(c.re),
                fmt_f64(c.im)
            ));
        }
    }
    write_file(&dir.join("snapshots.csv"), &out)
}

/// Per-iterate Picard distances and contraction factors.
pub fn write_picard_diagnostics(dir: &Path, diag: &PicardDiagnostics) -> Result<(), IoError> {
    let mut out = String::from("iterate,distance,contraction_factor\n");
    for (i, d) in diag.distances.iter().enumerate() {
        let factor = if i == 0 {
            String::new()
        } else {
            fmt_f64(diag.contraction_factors[i - 1])
        };
        out.push_str(&format!("{},{},{}\n", i + 1, fmt_f64(*d), factor));
    }
    write_file(&dir.join("picard.csv"), &out)
}

/// Reports as a JSON document plus the flat CSV summary.
pub fn write_reports(dir: &Path, reports: &[VerificationReport]) -> Result<(), IoError> {
    let json = serde_json::to_string_pretty(reports)?;
    write_file(&dir.join("reports.json"), &(json + "\n"))?;
    let mut csv = String::from(VerificationReport::CSV_HEADER);
    csv.push('\n');
    for r in reports {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    write_file(&dir.join("reports.csv"), &csv)
}

pub fn write_sweep(dir: &Path, table: &SweepTable) -> Result<(), IoError> {
    let mut out = String::from("amplitude,termination,final_h32,max_h32,decays\n");
    for row in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f64(row.amplitude),
            match row.termination {
                Termination::Completed => "completed",
                Termination::BlowupDetected => "blowup_detected",
                Termination::UnderResolved => "under_resolved",
            },
            fmt_f64(row.final_h32),
            fmt_f64(row.max_h32),
            row.decays,
        ));
    }
    write_file(&dir.join("sweep.csv"), &out)
}

/// Parsed trace rows for plot emission.
struct TraceRows {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn read_trace(dir: &Path) -> Result<TraceRows, IoError> {
    let path = dir.join(TRACE_FILE);
    if !path.exists() {
        return Err(IoError::MissingTrace(path));
    }
    let text = read_file(&path)?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .unwrap_or("")
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
        let row = row.map_err(|e| IoError::MalformedTrace {
            row: i + 2,
            message: e.to_string(),
        })?;
        if row.len() != header.len() {
            return Err(IoError::MalformedTrace {
                row: i + 2,
                message: format!("expected {} columns, got {}", header.len(), row.len()),
            });
        }
        rows.push(row);
    }
    Ok(TraceRows { header, rows })
}

/// Convert a run's trace into two-column `(t, value)` files per norm plus a
/// ready-to-run gnuplot script. Returns the emitted file names.
pub fn emit_plot_data(traj_dir: &Path) -> Result<Vec<String>, IoError> {
    let trace = read_trace(traj_dir)?;
    let columns = [("h32", 1usize), ("h94", 2), ("h3", 3)];
    let mut emitted = Vec::new();
    for (name, col) in columns {
        debug_assert_eq!(trace.header[col], name);
        let mut out = String::new();
        for row in &trace.rows {
            out.push_str(&format!("{} {}\n", fmt_f64(row[0]), fmt_f64(row[col])));
        }
        let fname = format!("t_vs_{name}.dat");
        write_file(&traj_dir.join(&fname), &out)?;
        emitted.push(fname);
    }
    let script = "set logscale y\n\
                  set xlabel 't'\n\
                  set ylabel 'norm'\n\
                  plot 't_vs_h32.dat' with lines title 'H^{3/2}', \\\n\
                       't_vs_h94.dat' with lines title 'H^{9/4}', \\\n\
                       't_vs_h3.dat' with lines title 'H^3'\n\
                  pause -1\n";
    write_file(&traj_dir.join("plot.gp"), script)?;
    emitted.push("plot.gp".to_string());
    Ok(emitted)
}

pub fn ensure_dir(dir: &Path) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(|source| IoError::File {
        path: dir.to_path_buf(),
        source,
    })
}

/// Append a line to stdout and flush; the CLI's single progress channel.
pub fn emit_line(line: &str) {
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{line}");
    let _ = stdout.flush();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{simulate, SolverConfig};
    use crate::field::SpectralField;

    fn sample_traj() -> Trajectory {
        let config = SolverConfig {
            dt: 0.01,
            t_final: 0.05,
            ..SolverConfig::with_cutoff(8)
        };
        simulate(&SpectralField::cosine(2, 0.1, 8).unwrap(), &config).unwrap()
    }

    #[test]
    fn trace_roundtrips_losslessly() {
        let dir = tempfile::tempdir().unwrap();
        let traj = sample_traj();
        write_trace(dir.path(), &traj).unwrap();
        let trace = read_trace(dir.path()).unwrap();
        assert_eq!(trace.header.join(","), TRACE_HEADER);
        assert_eq!(trace.rows.len(), traj.times().len());
        let h32 = traj.trace.norm_series(1.5).unwrap();
        for (row, (&t, &v)) in trace.rows.iter().zip(traj.times().iter().zip(h32)) {
            assert_eq!(row[0], t, "lossless t");
            assert_eq!(row[1], v, "lossless h32");
        }
    }

    #[test]
    fn plot_data_files_emitted() {
        let dir = tempfile::tempdir().unwrap();
        write_trace(dir.path(), &sample_traj()).unwrap();
        let emitted = emit_plot_data(dir.path()).unwrap();
        assert!(emitted.contains(&"t_vs_h32.dat".to_string()));
        assert!(dir.path().join("t_vs_h3.dat").exists());
        assert!(dir.path().join("plot.gp").exists());
    }

    #[test]
    fn plot_data_missing_trace_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            emit_plot_data(dir.path()),
            Err(IoError::MissingTrace(_))
        ));
    }

    #[test]
    fn manifest_checksums_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        write_trace(dir.path(), &sample_traj()).unwrap();
        let mut manifest = RunManifest::new("simulate", "[x]\n", dir.path());
        manifest.add_artifact(dir.path(), TRACE_FILE).unwrap();
        manifest.termination = Some(Termination::Completed);
        manifest.write(dir.path()).unwrap();
        let back = RunManifest::read(dir.path()).unwrap();
        assert_eq!(back.artifacts.len(), 1);
        assert_eq!(back.artifacts[0].path, TRACE_FILE);
        assert_eq!(back.artifacts[0].sha256.len(), 64);
        assert_eq!(back.termination, Some(Termination::Completed));
    }
}
