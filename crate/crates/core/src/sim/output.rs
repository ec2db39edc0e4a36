//! Trace CSV and run-summary JSON.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;

use super::diagnostics::{DriftProbe, Trend, TrendVerdict};
use crate::policy::PolicyKind;

/// One sampled slot: state at the start of slot `slot`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub slot: u64,
    pub avg_queue: f64,
    pub queues: Vec<u64>,
    /// Departures in all earlier slots.
    pub served_total: u64,
}

/// Writes `slot,S,Q_0,...,Q_{M-1},served_total`, one row per sample.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], num_classes: usize, mut out: W) -> io::Result<()> {
    let mut header = String::from("slot,S");
    for i in 0..num_classes {
        header.push_str(&format!(",Q_{i}"));
    }
    header.push_str(",served_total\n");
    out.write_all(header.as_bytes())?;
    for row in rows {
        let mut line = format!("{},{}", row.slot, row.avg_queue);
        for q in &row.queues {
            line.push_str(&format!(",{q}"));
        }
        line.push_str(&format!(",{}\n", row.served_total));
        out.write_all(line.as_bytes())?;
    }
    out.flush()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendReport {
    pub verdict: TrendVerdict,
    pub slope: f64,
    pub heuristic: bool,
}

impl From<&Trend> for TrendReport {
    fn from(t: &Trend) -> Self {
        Self {
            verdict: t.verdict,
            slope: t.slope,
            heuristic: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    /// `null` when fewer than the minimum number of slots qualified.
    pub mean: Option<f64>,
    pub std_err: Option<f64>,
    pub count: usize,
    pub threshold: f64,
}

impl DriftReport {
    pub fn new(probe: &DriftProbe, threshold: f64) -> Self {
        let std_err = match probe {
            DriftProbe::Estimate { std_err, .. } => Some(*std_err),
            DriftProbe::InsufficientData { .. } => None,
        };
        Self {
            mean: probe.mean(),
            std_err,
            count: probe.count(),
            threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub policy: PolicyKind,
    pub seed: u64,
    pub slots: u64,
    /// Time average of `S(n)` over all slots.
    #[serde(rename = "mean_S")]
    pub mean_s: f64,
    #[serde(rename = "final_Q")]
    pub final_q: Vec<u64>,
    pub service_rates: Vec<f64>,
    pub arrival_rates: Vec<f64>,
    /// `c_sigma(n) / n` keyed by the service vector's bit string.
    pub c_sigma_freqs: BTreeMap<String, f64>,
    pub trend: TrendReport,
    pub drift: DriftReport,
}

impl RunSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}
