//! Long-form CSV and JSON rows shared by every command.

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

pub const COLUMNS: [&str; 13] = [
    "command",
    "quantity",
    "model_kind",
    "N",
    "factors",
    "a_or_alpha_digest",
    "k",
    "n_samples",
    "seed",
    "value",
    "std_error",
    "error_order",
    "wall_time_ms",
];

#[derive(Debug, Clone, Default, Serialize)]
pub struct Row {
    pub command: &'static str,
    pub quantity: String,
    pub model_kind: String,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub factors: String,
    pub a_or_alpha_digest: String,
    pub k: Option<usize>,
    pub n_samples: Option<usize>,
    pub seed: Option<u64>,
    pub value: f64,
    pub std_error: Option<f64>,
    pub error_order: String,
    pub wall_time_ms: u64,
    /// Extra CSV cells after the fixed columns (field coordinates).
    #[serde(skip)]
    pub tail: Vec<String>,
    /// JSON-only payload.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub struct Table {
    pub tail_columns: Vec<&'static str>,
    pub rows: Vec<Row>,
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

impl Table {
    pub fn new(rows: Vec<Row>) -> Self {
        Self {
            tail_columns: Vec::new(),
            rows,
        }
    }

    pub fn write(&self, out: &mut dyn Write, format: Format, timestamp: bool) -> std::io::Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &self.rows)?;
                writeln!(out)
            }
            Format::Csv => {
                if timestamp {
                    let secs = SystemTime::now()
                        .duration_since(UNIX_EPOCH)
                        .map(|d| d.as_secs())
                        .unwrap_or(0);
                    writeln!(out, "# divexp {} generated_at_unix={secs}", env!("CARGO_PKG_VERSION"))?;
                }
                let mut w = csv::Writer::from_writer(out);
                let header: Vec<&str> = COLUMNS.iter().chain(&self.tail_columns).copied().collect();
                w.write_record(&header)?;
                for r in &self.rows {
                    let mut rec = vec![
                        r.command.to_string(),
                        r.quantity.clone(),
                        r.model_kind.clone(),
                        opt(&r.n),
                        r.factors.clone(),
                        r.a_or_alpha_digest.clone(),
                        opt(&r.k),
                        opt(&r.n_samples),
                        opt(&r.seed),
                        r.value.to_string(),
                        opt(&r.std_error),
                        r.error_order.clone(),
                        r.wall_time_ms.to_string(),
                    ];
                    rec.extend(r.tail.iter().cloned());
                    w.write_record(&rec)?;
                }
                w.flush()
            }
        }
    }
}

/// `2x3` for composite spaces, `N` itself for flat ones.
pub fn factors_label(factors: &[usize]) -> String {
    factors
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join("x")
}

/// `a=<a>` for symmetric priors, otherwise a stable FNV-1a digest of α.
pub fn alpha_digest(alpha: &[f64], symmetric: Option<f64>) -> String {
    if let Some(a) = symmetric {
        return format!("a={a}");
    }
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for x in alpha {
        for b in x.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    format!("alpha:{h:016x}")
}
