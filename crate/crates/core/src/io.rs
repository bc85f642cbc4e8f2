//! CSV/JSON artifact formats.
//!
//! Pulses travel as CSV with header `t,ux,uy` (general fields) or `t,phi`
//! (phase-only fields): each row holds the value on the interval starting
//! at its time stamp, and a final sentinel row marks the pulse end.
//! Profiles are `param,fidelity` CSV, scans are `<a>,<b>,Fstar,tstar,Astar`
//! CSV. All floats are written with 17 significant digits so artifacts
//! round-trip exactly. Every artifact embeds its generating configuration
//! and a sha256 hash of its data rows in `#`-prefixed comment lines.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::bloch::RobustnessProfile;
use crate::error::{Error, Result};
use crate::field::{ControlField, FieldKind};
use crate::search::{LandscapeScan, SynthesisRecord};

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn sha256_hex(data: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(data.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

fn preamble(kind: &str, config: Option<&serde_json::Value>, data: &str) -> String {
    let mut head = format!("# pulseforge {kind} v1\n");
    if let Some(cfg) = config {
        let _ = writeln!(head, "# config: {cfg}");
    }
    let _ = writeln!(head, "# sha256: {}", sha256_hex(data));
    head
}

/// Serializes a pulse to CSV text.
pub fn pulse_to_csv(field: &ControlField, config: Option<&serde_json::Value>) -> String {
    let mut data = String::new();
    match field.kind() {
        FieldKind::PhaseOnly { phi } => {
            data.push_str("t,phi\n");
            for (t, p) in field.times().iter().zip(phi.iter()) {
                let _ = writeln!(data, "{},{}", fmt_f64(*t), fmt_f64(*p));
            }
            let _ = writeln!(
                data,
                "{},{}",
                fmt_f64(field.duration()),
                fmt_f64(*phi.last().unwrap())
            );
        }
        _ => {
            data.push_str("t,ux,uy\n");
            let n = field.len();
            for i in 0..n {
                let _ = writeln!(
                    data,
                    "{},{},{}",
                    fmt_f64(field.times()[i]),
                    fmt_f64(field.ux()[i]),
                    fmt_f64(field.uy()[i])
                );
            }
            let _ = writeln!(
                data,
                "{},{},{}",
                fmt_f64(field.duration()),
                fmt_f64(field.ux()[n - 1]),
                fmt_f64(field.uy()[n - 1])
            );
        }
    }
    format!("{}{}", preamble("pulse", config, &data), data)
}

/// Parsed artifact text: payload plus the embedded metadata.
#[derive(Debug)]
pub struct ParsedArtifact<T> {
    pub value: T,
    pub config: Option<serde_json::Value>,
    /// Hash stated in the file and the hash of the data actually read.
    pub stated_sha256: Option<String>,
    pub actual_sha256: String,
}

impl<T> ParsedArtifact<T> {
    pub fn hash_matches(&self) -> bool {
        match &self.stated_sha256 {
            Some(h) => h == &self.actual_sha256,
            None => true,
        }
    }
}

fn split_comments(text: &str) -> (Option<serde_json::Value>, Option<String>, String, usize) {
    let mut config = None;
    let mut hash = None;
    let mut data = String::new();
    let mut first_data_line = 0;
    for (idx, line) in text.lines().enumerate() {
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(cfg) = rest.strip_prefix("config:") {
                config = serde_json::from_str(cfg.trim()).ok();
            } else if let Some(h) = rest.strip_prefix("sha256:") {
                hash = Some(h.trim().to_string());
            }
        } else if !line.trim().is_empty() {
            if data.is_empty() {
                first_data_line = idx;
            }
            data.push_str(line);
            data.push('\n');
        }
    }
    (config, hash, data, first_data_line)
}

/// Parses a pulse CSV (either representation).
pub fn pulse_from_csv(text: &str) -> Result<ParsedArtifact<ControlField>> {
    let (config, stated, data, base_line) = split_comments(text);
    let actual = sha256_hex(&data);
    let mut lines = data.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: base_line + 1,
        message: "empty pulse file".into(),
    })?;
    let header = header.trim();
    let phase_only = match header {
        "t,phi" => true,
        "t,ux,uy" => false,
        other => {
            return Err(Error::Parse {
                line: base_line + 1,
                message: format!("unknown pulse header `{other}`"),
            })
        }
    };
    let mut times = Vec::new();
    let mut col1 = Vec::new();
    let mut col2 = Vec::new();
    for (i, line) in lines {
        let lineno = base_line + i + 1;
        let mut parts = line.split(',');
        let mut next = |what: &str| -> Result<f64> {
            parts
                .next()
                .ok_or(Error::Parse {
                    line: lineno,
                    message: format!("missing {what} column"),
                })?
                .trim()
                .parse()
                .map_err(|e| Error::Parse {
                    line: lineno,
                    message: format!("bad {what} value: {e}"),
                })
        };
        times.push(next("t")?);
        col1.push(next(if phase_only { "phi" } else { "ux" })?);
        if !phase_only {
            col2.push(next("uy")?);
        }
    }
    if times.len() < 2 {
        return Err(Error::Parse {
            line: base_line + 1,
            message: "pulse needs at least one interval (two rows)".into(),
        });
    }
    // the last row is the end-of-pulse sentinel
    let duration = *times.last().unwrap();
    times.pop();
    col1.pop();
    if !phase_only {
        col2.pop();
    }
    let field = if phase_only {
        ControlField::phase_only(times, col1, duration)
    } else {
        ControlField::from_samples(times, col1, col2, duration)
    }
    .map_err(|e| Error::Parse {
        line: base_line + 1,
        message: e.to_string(),
    })?;
    Ok(ParsedArtifact {
        value: field,
        config,
        stated_sha256: stated,
        actual_sha256: actual,
    })
}

/// Serializes a robustness profile to `param,fidelity` CSV.
pub fn profile_to_csv(profile: &RobustnessProfile, config: Option<&serde_json::Value>) -> String {
    let mut data = String::from("param,fidelity\n");
    for (p, f) in &profile.entries {
        let _ = writeln!(data, "{},{}", fmt_f64(*p), fmt_f64(*f));
    }
    format!("{}{}", preamble("profile", config, &data), data)
}

pub fn profile_from_csv(text: &str) -> Result<ParsedArtifact<Vec<(f64, f64)>>> {
    let (config, stated, data, base_line) = split_comments(text);
    let actual = sha256_hex(&data);
    let mut entries = Vec::new();
    for (i, line) in data.lines().enumerate().skip(1) {
        let lineno = base_line + i + 1;
        let mut parts = line.split(',');
        let p: f64 = parts
            .next()
            .ok_or(Error::Parse {
                line: lineno,
                message: "missing param".into(),
            })?
            .trim()
            .parse()
            .map_err(|e| Error::Parse {
                line: lineno,
                message: format!("bad param: {e}"),
            })?;
        let f: f64 = parts
            .next()
            .ok_or(Error::Parse {
                line: lineno,
                message: "missing fidelity".into(),
            })?
            .trim()
            .parse()
            .map_err(|e| Error::Parse {
                line: lineno,
                message: format!("bad fidelity: {e}"),
            })?;
        entries.push((p, f));
    }
    Ok(ParsedArtifact {
        value: entries,
        config,
        stated_sha256: stated,
        actual_sha256: actual,
    })
}

/// Serializes a landscape scan. Failed cells keep NaN scores (flagged,
/// never zeroed) and their failure text is appended as comments.
pub fn scan_to_csv(scan: &LandscapeScan, config: Option<&serde_json::Value>) -> String {
    let mut data = format!("{},{},Fstar,tstar,Astar\n", scan.axes[0].name, scan.axes[1].name);
    for c in &scan.cells {
        let _ = writeln!(
            data,
            "{},{},{},{},{}",
            fmt_f64(c.a),
            fmt_f64(c.b),
            fmt_f64(c.fstar.unwrap_or(f64::NAN)),
            fmt_f64(c.tstar.unwrap_or(f64::NAN)),
            fmt_f64(c.astar.unwrap_or(f64::NAN)),
        );
    }
    let mut out = format!("{}{}", preamble("scan", config, &data), data);
    for c in scan.cells.iter().filter(|c| c.error.is_some()) {
        let _ = writeln!(
            out,
            "# failed: {}={}, {}={}: {}",
            scan.axes[0].name,
            c.a,
            scan.axes[1].name,
            c.b,
            c.error.as_ref().unwrap()
        );
    }
    out
}

/// A synthesis record bundled with its configuration for the JSON artifact.
#[derive(serde::Serialize, serde::Deserialize)]
pub struct RecordArtifact {
    pub config: serde_json::Value,
    pub record: SynthesisRecord,
    pub pulse_sha256: Option<String>,
}

/// Writes `<name>.pulse.csv` and `<name>.record.json` under `dir`.
pub fn write_record(
    dir: &Path,
    name: &str,
    record: &SynthesisRecord,
    config: &serde_json::Value,
) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut record = record.clone();
    let mut pulse_sha = None;
    if let Some(field) = &record.field {
        let csv = pulse_to_csv(field, Some(config));
        let pulse_path = dir.join(format!("{name}.pulse.csv"));
        std::fs::write(&pulse_path, &csv)?;
        pulse_sha = Some(sha256_hex(&csv));
        record.pulse_path = Some(format!("{name}.pulse.csv"));
    }
    let artifact = RecordArtifact {
        config: config.clone(),
        record,
        pulse_sha256: pulse_sha,
    };
    let path = dir.join(format!("{name}.record.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&artifact).map_err(to_io)?)?;
    Ok(path)
}

pub fn read_record(path: &Path) -> Result<RecordArtifact> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: 0,
        message: format!("{}: {e}", path.display()),
    })
}

fn to_io(e: serde_json::Error) -> Error {
    Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

/// Hash of a whole artifact file's bytes (used by reproducibility checks).
pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read_to_string(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulse_round_trips_exactly() {
        let f = ControlField::from_samples(
            vec![0.0, 0.25, 0.5],
            vec![1.0, -0.33333333333333331, 0.1],
            vec![0.0, 0.7071067811865476, -0.2],
            0.75,
        )
        .unwrap();
        let cfg = serde_json::json!({"step": 1e-3});
        let text = pulse_to_csv(&f, Some(&cfg));
        let parsed = pulse_from_csv(&text).unwrap();
        assert!(parsed.hash_matches());
        assert_eq!(parsed.value.times(), f.times());
        assert_eq!(parsed.value.ux(), f.ux());
        assert_eq!(parsed.value.uy(), f.uy());
        assert_eq!(parsed.value.duration(), f.duration());
        assert_eq!(parsed.config.unwrap()["step"], cfg["step"]);
    }

    #[test]
    fn phase_pulse_round_trips() {
        let f = ControlField::phase_only(vec![0.0, 0.1], vec![0.0, 1.234567890123456], 0.2)
            .unwrap();
        let parsed = pulse_from_csv(&pulse_to_csv(&f, None)).unwrap();
        assert_eq!(parsed.value, f);
    }

    #[test]
    fn tampering_breaks_the_hash() {
        let f = ControlField::from_samples(vec![0.0], vec![1.0], vec![0.0], 1.0).unwrap();
        let text = pulse_to_csv(&f, None);
        let tampered = text.replace("1.0000000000000000e0,0", "1.1000000000000000e0,0");
        assert_ne!(text, tampered);
        let parsed = pulse_from_csv(&tampered).unwrap();
        assert!(!parsed.hash_matches());
    }

    #[test]
    fn malformed_pulse_reports_line_number() {
        let text = "t,ux,uy\n0.0,1.0,0.0\nbroken,row\n";
        match pulse_from_csv(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
