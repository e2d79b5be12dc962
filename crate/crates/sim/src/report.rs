//! Experiment reports and their JSON/CSV encodings.
//!
//! Reals are written in scientific notation with 17 significant digits so a
//! report round-trips every `f64` exactly and the JSON and CSV encodings of a
//! run carry identical numeric text.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ExperimentConfig;

/// Two-sided 95% normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

/// Tolerance for the aggregate self-consistency check.
pub const AGGREGATE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("malformed report: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("aggregate `{field}` is {stored}, rows give {recomputed}")]
    Inconsistent {
        field: &'static str,
        stored: f64,
        recomputed: f64,
    },
}

pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serde adapter writing an `f64` through [`format_real`].
pub mod real {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::value::RawValue;

    pub fn serialize<S: Serializer>(x: &f64, serializer: S) -> Result<S::Ok, S::Error> {
        if !x.is_finite() {
            return serializer.serialize_none();
        }
        let raw = RawValue::from_string(super::format_real(*x)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
        f64::deserialize(deserializer)
    }
}

/// [`real`] for optional values; `None` becomes `null`.
pub mod opt_real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<f64>, serializer: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => super::real::serialize(v, serializer),
            None => serializer.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Option<f64>, D::Error> {
        Option::<f64>::deserialize(deserializer)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRow {
    pub index: usize,
    pub seed: u64,
    #[serde(with = "real")]
    pub qber: f64,
    pub sifted_errors: usize,
    pub sifted_length: usize,
    #[serde(with = "real")]
    pub sifted_fraction: f64,
    pub detected: bool,
    pub parity_rounds_run: usize,
    pub final_key_length: Option<usize>,
    #[serde(with = "opt_real")]
    pub eve_accuracy: Option<f64>,
    pub eve_certain_bits: Option<usize>,
    #[serde(with = "opt_real")]
    pub eve_advantage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub sessions: usize,
    #[serde(with = "real")]
    pub mean_qber: f64,
    #[serde(with = "real")]
    pub qber_ci_low: f64,
    #[serde(with = "real")]
    pub qber_ci_high: f64,
    pub total_sifted_bits: usize,
    #[serde(with = "real")]
    pub detection_rate: f64,
    #[serde(with = "real")]
    pub mean_sifted_fraction: f64,
    #[serde(with = "opt_real")]
    pub mean_eve_accuracy: Option<f64>,
    #[serde(with = "opt_real")]
    pub mean_eve_advantage: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

impl Aggregates {
    /// Mean QBER over sessions with a normal-approximation binomial 95%
    /// interval over the pooled sifted bits.
    pub fn from_rows(rows: &[SessionRow]) -> Self {
        let sessions = rows.len();
        let mean_qber = mean(rows.iter().map(|r| r.qber)).unwrap_or(0.0);
        let total_sifted_bits: usize = rows.iter().map(|r| r.sifted_length).sum();
        let half_width = if total_sifted_bits == 0 {
            0.0
        } else {
            Z_95 * (mean_qber * (1.0 - mean_qber) / total_sifted_bits as f64).sqrt()
        };
        Aggregates {
            sessions,
            mean_qber,
            qber_ci_low: (mean_qber - half_width).max(0.0),
            qber_ci_high: (mean_qber + half_width).min(1.0),
            total_sifted_bits,
            detection_rate: mean(rows.iter().map(|r| f64::from(u8::from(r.detected)))).unwrap_or(0.0),
            mean_sifted_fraction: mean(rows.iter().map(|r| r.sifted_fraction)).unwrap_or(0.0),
            mean_eve_accuracy: mean(rows.iter().filter_map(|r| r.eve_accuracy)),
            mean_eve_advantage: mean(rows.iter().filter_map(|r| r.eve_advantage)),
        }
    }

    fn fields(&self) -> [(&'static str, Option<f64>); 8] {
        [
            ("sessions", Some(self.sessions as f64)),
            ("mean_qber", Some(self.mean_qber)),
            ("qber_ci_low", Some(self.qber_ci_low)),
            ("qber_ci_high", Some(self.qber_ci_high)),
            ("total_sifted_bits", Some(self.total_sifted_bits as f64)),
            ("detection_rate", Some(self.detection_rate)),
            ("mean_sifted_fraction", Some(self.mean_sifted_fraction)),
            ("mean_eve_accuracy", self.mean_eve_accuracy),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub sessions: Vec<SessionRow>,
    pub aggregates: Aggregates,
}

impl ExperimentReport {
    pub fn new(config: ExperimentConfig, sessions: Vec<SessionRow>) -> Self {
        let aggregates = Aggregates::from_rows(&sessions);
        ExperimentReport {
            config,
            sessions,
            aggregates,
        }
    }

    /// Checks the stored aggregates against a recomputation from the rows.
    pub fn verify(&self) -> Result<(), ReportError> {
        let fresh = Aggregates::from_rows(&self.sessions);
        let mut pairs: Vec<_> = self.aggregates.fields().into_iter().zip(fresh.fields()).collect();
        pairs.push((
            ("mean_eve_advantage", self.aggregates.mean_eve_advantage),
            ("mean_eve_advantage", fresh.mean_eve_advantage),
        ));
        for ((field, stored), (_, recomputed)) in pairs {
            let consistent = match (stored, recomputed) {
                (Some(a), Some(b)) => (a - b).abs() <= AGGREGATE_TOLERANCE,
                (None, None) => true,
                _ => false,
            };
            if !consistent {
                return Err(ReportError::Inconsistent {
                    field,
                    stored: stored.unwrap_or(f64::NAN),
                    recomputed: recomputed.unwrap_or(f64::NAN),
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, ReportError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a JSON report and verifies its aggregates.
    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        let report: ExperimentReport = serde_json::from_str(text)?;
        report.verify()?;
        Ok(report)
    }

    pub const CSV_HEADER: [&'static str; 12] = [
        "index",
        "seed",
        "qber",
        "sifted_errors",
        "sifted_length",
        "sifted_fraction",
        "detected",
        "parity_rounds_run",
        "final_key_length",
        "eve_accuracy",
        "eve_certain_bits",
        "eve_advantage",
    ];

    /// One header row, one row per session, then `#`-prefixed aggregate lines.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), ReportError> {
        {
            let mut writer = csv::Writer::from_writer(&mut out);
            writer.write_record(Self::CSV_HEADER)?;
            for row in &self.sessions {
                let opt_real = |v: Option<f64>| v.map(format_real).unwrap_or_default();
                let opt_int = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
                writer.write_record([
                    row.index.to_string(),
                    row.seed.to_string(),
                    format_real(row.qber),
                    row.sifted_errors.to_string(),
                    row.sifted_length.to_string(),
                    format_real(row.sifted_fraction),
                    row.detected.to_string(),
                    row.parity_rounds_run.to_string(),
                    opt_int(row.final_key_length),
                    opt_real(row.eve_accuracy),
                    opt_int(row.eve_certain_bits),
                    opt_real(row.eve_advantage),
                ])?;
            }
            writer.flush()?;
        }
        let a = &self.aggregates;
        let opt = |v: Option<f64>| v.map(format_real).unwrap_or_default();
        writeln!(out, "# aggregates")?;
        writeln!(out, "# sessions,{}", a.sessions)?;
        writeln!(out, "# mean_qber,{}", format_real(a.mean_qber))?;
        writeln!(out, "# qber_ci_low,{}", format_real(a.qber_ci_low))?;
        writeln!(out, "# qber_ci_high,{}", format_real(a.qber_ci_high))?;
        writeln!(out, "# total_sifted_bits,{}", a.total_sifted_bits)?;
        writeln!(out, "# detection_rate,{}", format_real(a.detection_rate))?;
        writeln!(out, "# mean_sifted_fraction,{}", format_real(a.mean_sifted_fraction))?;
        writeln!(out, "# mean_eve_accuracy,{}", opt(a.mean_eve_accuracy))?;
        writeln!(out, "# mean_eve_advantage,{}", opt(a.mean_eve_advantage))?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String, ReportError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: usize,
    #[serde(with = "real")]
    pub detection_rate: f64,
    pub sessions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveReport {
    pub config: ExperimentConfig,
    pub curve: Vec<CurvePoint>,
}

impl CurveReport {
    pub fn to_json(&self) -> Result<String, ReportError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv(&self) -> Result<String, ReportError> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(["k", "detection_rate", "sessions"])?;
        for point in &self.curve {
            writer.write_record([
                point.k.to_string(),
                format_real(point.detection_rate),
                point.sessions.to_string(),
            ])?;
        }
        let bytes = writer.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
