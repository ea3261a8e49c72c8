//! Telemetry-driven refinement suggestions.
//!
//! After a session, logged utilization per cell tells us where the map is
//! too conservative (the car never got near the assumed limit) or too
//! optimistic (grip anomalies were flagged). Suggestions are conservative
//! nudges, one step per session, clamped to a floor and the grid's cap —
//! the map should converge over sessions, not oscillate.

use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{CellIndex, GripMap, GripMapError, SWrap};

/// One logged sample attributed to a map cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelemetrySample {
    pub s: f64,
    pub n: f64,
    /// Envelope utilization observed at this sample, 1 = at the assumed limit.
    pub utilization: f64,
    /// Set when the vehicle reported a grip anomaly (slip, intervention).
    pub anomaly: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SuggestConfig {
    /// Cells with fewer samples than this are left untouched.
    pub min_samples: usize,
    /// Suggestions never push theta below this floor.
    pub theta_floor: f64,
}

impl Default for SuggestConfig {
    fn default() -> Self {
        Self { min_samples: 20, theta_floor: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuggestReason {
    /// Enough samples, no anomalies, and peak utilization stayed below the
    /// target: the cell can afford more grip.
    Underutilized,
    /// At least one anomaly flag in the cell: back off.
    Anomaly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaSuggestion {
    pub i: usize,
    pub j: usize,
    pub old_theta: f64,
    pub new_theta: f64,
    pub reason: SuggestReason,
    pub samples: usize,
    pub max_utilization: f64,
}

/// Proposes per-cell theta changes from a telemetry log.
///
/// For each cell with at least `cfg.min_samples` samples: any anomaly lowers
/// theta by `step` (down to `cfg.theta_floor`); otherwise, if the peak
/// observed utilization stayed below `target_util`, theta rises by `step`
/// (up to the grid's cap). Cells whose value would not change are omitted.
/// The step must satisfy `0 < step < 0.1` — map refinement is meant to be
/// gradual.
pub fn suggest_theta_updates(
    grid: &GripMap,
    telemetry: &[TelemetrySample],
    target_util: f64,
    step: f64,
    cfg: SuggestConfig,
    wrap: SWrap,
) -> Result<Vec<ThetaSuggestion>, GripMapError> {
    if !(step.is_finite() && step > 0.0 && step < 0.1) {
        return Err(GripMapError::InvalidStep { step });
    }
    if !(target_util.is_finite() && target_util > 0.0) {
        return Err(GripMapError::InvalidStep { step: target_util });
    }
    if !(cfg.theta_floor.is_finite() && cfg.theta_floor > 0.0) {
        return Err(GripMapError::InvalidTheta { value: cfg.theta_floor, cap: grid.theta_cap() });
    }

    #[derive(Clone, Copy)]
    struct CellStats {
        count: usize,
        max_util: f64,
        anomaly: bool,
    }
    let mut stats = vec![CellStats { count: 0, max_util: 0.0, anomaly: false }; grid.cell_count()];
    let stride = grid.n_cells();
    for (index, sample) in telemetry.iter().enumerate() {
        if !(sample.s.is_finite() && sample.n.is_finite() && sample.utilization.is_finite() && sample.utilization >= 0.0) {
            return Err(GripMapError::BadTelemetry { index });
        }
        let idx = grid.index_of(sample.s, sample.n, wrap)?;
        let cell = &mut stats[idx.i * stride + idx.j];
        cell.count += 1;
        cell.max_util = cell.max_util.max(sample.utilization);
        cell.anomaly |= sample.anomaly;
    }

    let mut out = Vec::new();
    for i in 0..grid.s_dim() as usize {
        for j in 0..stride {
            let cell = stats[i * stride + j];
            if cell.count < cfg.min_samples {
                continue;
            }
            let old = grid.theta_at_cell(CellIndex { i, j })?;
            let (new, reason) = if cell.anomaly {
                ((old - step).max(cfg.theta_floor), SuggestReason::Anomaly)
            } else if cell.max_util < target_util {
                ((old + step).min(grid.theta_cap()), SuggestReason::Underutilized)
            } else {
                continue;
            };
            if new == old {
                continue;
            }
            out.push(ThetaSuggestion {
                i,
                j,
                old_theta: old,
                new_theta: new,
                reason,
                samples: cell.count,
                max_utilization: cell.max_util,
            });
        }
    }
    Ok(out)
}

/// Parses telemetry CSV: header `s,n,utilization,anomaly`, `#` comments,
/// anomaly as `0`/`1` or `false`/`true`.
pub fn load_telemetry_csv<R: Read>(reader: R) -> Result<Vec<TelemetrySample>, GripMapError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| GripMapError::TelemetryParse { line: 1, msg: e.to_string() })?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols != ["s", "n", "utilization", "anomaly"] {
        return Err(GripMapError::TelemetryParse {
            line: 1,
            msg: format!("expected header s,n,utilization,anomaly, got {}", cols.join(",")),
        });
    }
    let mut samples = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let line = idx + 2;
        let rec = rec.map_err(|e| GripMapError::TelemetryParse { line, msg: e.to_string() })?;
        let num = |i: usize| -> Result<f64, GripMapError> {
            rec.get(i)
                .ok_or_else(|| GripMapError::TelemetryParse { line, msg: format!("missing column {i}") })?
                .parse::<f64>()
                .map_err(|e| GripMapError::TelemetryParse { line, msg: e.to_string() })
        };
        let anomaly = match rec.get(3) {
            Some("0") | Some("false") => false,
            Some("1") | Some("true") => true,
            other => {
                return Err(GripMapError::TelemetryParse { line, msg: format!("bad anomaly flag {other:?}") });
            }
        };
        samples.push(TelemetrySample { s: num(0)?, n: num(1)?, utilization: num(2)?, anomaly });
    }
    Ok(samples)
}
