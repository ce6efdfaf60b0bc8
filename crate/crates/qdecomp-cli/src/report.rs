//! Report rows, the run manifest, and the CSV/JSON writers.
//!
//! Every CSV file starts with a `# manifest <hash>` line tying it to the
//! JSON run manifest, whose hash covers the full configuration echo.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::OutputFormat;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct SeriesRow {
    pub tau: f64,
    pub kind: String,
    pub group: String,
    pub estimate: Option<f64>,
    pub se: Option<f64>,
    pub sig_code: String,
    pub excluded_reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AverageRow {
    pub effect: String,
    pub group: String,
    pub estimate: f64,
    pub se: Option<f64>,
    pub sig_code: String,
    /// Control-arm weight share dropped by rank trimming (TATE rows only).
    pub dropped_weight_share: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestRow {
    pub series: String,
    pub group: String,
    pub n: usize,
    pub ks: f64,
    pub p_ks: f64,
    pub psd: f64,
    pub p_psd: f64,
    pub nsd: f64,
    pub p_nsd: f64,
}

/// Configuration echo plus run diagnostics; hashed into `hash` so outputs
/// can reference the exact run that produced them.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: String,
    pub command: String,
    pub input: Option<PathBuf>,
    pub outcome: Option<String>,
    pub treatment: Option<String>,
    pub weight: Option<String>,
    pub groups: Vec<String>,
    pub enrolled: Option<String>,
    pub reference: String,
    pub rank_side: String,
    pub clip_lo: f64,
    pub clip_hi: f64,
    pub mass_point_exclusion: bool,
    pub grid_percentiles: Vec<u8>,
    pub seed: u64,
    pub reps_quantile: usize,
    pub reps_average: usize,
    pub stratify_by_arm: bool,
    pub recentered_ks_bootstrap: bool,
    pub group_levels: Vec<String>,
    pub total_rows: usize,
    pub dropped_rows: usize,
    /// Per-group TATE trimming coverage, keyed by group label.
    pub tate_dropped_weight_shares: Vec<(String, f64)>,
    pub failed_replications_quantile: usize,
    pub failed_replications_average: usize,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub hash: String,
}

impl Manifest {
    /// Fills `hash` with the SHA-256 of the manifest's canonical JSON
    /// (hash field excluded).
    pub fn seal(&mut self) -> Result<()> {
        self.hash = String::new();
        let bytes = serde_json::to_vec(self)
            .map_err(|e| CliError::config(format!("cannot serialize manifest: {e}")))?;
        let digest = Sha256::digest(&bytes);
        let mut hex = String::with_capacity(16);
        for b in digest.iter().take(8) {
            let _ = write!(hex, "{b:02x}");
        }
        self.hash = hex;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompReport {
    pub manifest: Manifest,
    pub series: Vec<SeriesRow>,
    pub averages: Vec<AverageRow>,
    pub tests: Vec<TestRow>,
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

impl DecompReport {
    /// Writes manifest.json plus series/averages/tests in the requested
    /// format; returns the written paths.
    pub fn write(&self, out_dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(out_dir)
            .map_err(|source| CliError::Io { path: out_dir.to_path_buf(), source })?;
        let mut written = Vec::new();

        let manifest_path = out_dir.join("manifest.json");
        let manifest_json = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| CliError::config(format!("cannot serialize manifest: {e}")))?;
        write_file(&manifest_path, &(manifest_json + "\n"))?;
        written.push(manifest_path);

        match format {
            OutputFormat::Csv => {
                let hash = &self.manifest.hash;

                let mut s = format!("# manifest {hash}\n");
                s.push_str("tau,kind,group,estimate,se,sig_code,excluded_reason\n");
                for r in &self.series {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{}",
                        r.tau,
                        csv_escape(&r.kind),
                        csv_escape(&r.group),
                        fmt_opt(r.estimate),
                        fmt_opt(r.se),
                        r.sig_code,
                        r.excluded_reason
                    );
                }
                let p = out_dir.join("series.csv");
                write_file(&p, &s)?;
                written.push(p);

                let mut a = format!("# manifest {hash}\n");
                a.push_str("effect,group,estimate,se,sig_code,dropped_weight_share\n");
                for r in &self.averages {
                    let _ = writeln!(
                        a,
                        "{},{},{},{},{},{}",
                        csv_escape(&r.effect),
                        csv_escape(&r.group),
                        r.estimate,
                        fmt_opt(r.se),
                        r.sig_code,
                        fmt_opt(r.dropped_weight_share)
                    );
                }
                let p = out_dir.join("averages.csv");
                write_file(&p, &a)?;
                written.push(p);

                let mut t = format!("# manifest {hash}\n");
                t.push_str("series,group,n,ks,p_ks,psd,p_psd,nsd,p_nsd\n");
                for r in &self.tests {
                    let _ = writeln!(
                        t,
                        "{},{},{},{},{},{},{},{},{}",
                        csv_escape(&r.series),
                        csv_escape(&r.group),
                        r.n,
                        r.ks,
                        r.p_ks,
                        r.psd,
                        r.p_psd,
                        r.nsd,
                        r.p_nsd
                    );
                }
                let p = out_dir.join("tests.csv");
                write_file(&p, &t)?;
                written.push(p);
            }
            OutputFormat::Json => {
                let p = out_dir.join("report.json");
                let json = serde_json::to_string_pretty(self)
                    .map_err(|e| CliError::config(format!("cannot serialize report: {e}")))?;
                write_file(&p, &(json + "\n"))?;
                written.push(p);
            }
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest() -> Manifest {
        Manifest {
            version: "0.1.0".into(),
            command: "decompose".into(),
            input: None,
            outcome: None,
            treatment: None,
            weight: None,
            groups: vec![],
            enrolled: None,
            reference: "y0".into(),
            rank_side: "control".into(),
            clip_lo: 0.01,
            clip_hi: 0.99,
            mass_point_exclusion: true,
            grid_percentiles: vec![50],
            seed: 1,
            reps_quantile: 10,
            reps_average: 10,
            stratify_by_arm: false,
            recentered_ks_bootstrap: true,
            group_levels: vec!["f".into()],
            total_rows: 4,
            dropped_rows: 0,
            tate_dropped_weight_shares: vec![("f".into(), 0.0)],
            failed_replications_quantile: 0,
            failed_replications_average: 0,
            hash: String::new(),
        }
    }

    #[test]
    fn seal_is_deterministic_and_config_sensitive() {
        let mut a = manifest();
        a.seal().unwrap();
        let mut b = manifest();
        b.seal().unwrap();
        assert_eq!(a.hash, b.hash);
        assert_eq!(a.hash.len(), 16);

        let mut c = manifest();
        c.seed = 2;
        c.seal().unwrap();
        assert_ne!(a.hash, c.hash);
    }

    #[test]
    fn csv_files_reference_manifest_hash() {
        let mut m = manifest();
        m.seal().unwrap();
        let hash = m.hash.clone();
        let report = DecompReport {
            manifest: m,
            series: vec![SeriesRow {
                tau: 0.5,
                kind: "QTE".into(),
                group: "all".into(),
                estimate: Some(1.5),
                se: None,
                sig_code: String::new(),
                excluded_reason: String::new(),
            }],
            averages: vec![],
            tests: vec![],
        };
        let dir = tempfile::tempdir().unwrap();
        report.write(dir.path(), OutputFormat::Csv).unwrap();
        let series = std::fs::read_to_string(dir.path().join("series.csv")).unwrap();
        assert!(series.starts_with(&format!("# manifest {hash}\n")));
        assert!(series.contains("0.5,QTE,all,1.5,,,"));
    }
}
