//! Per-step trace records and their CSV / JSON Lines encodings.
//!
//! Both formats start with a metadata line carrying the scenario digest and
//! seed. CSV: `# scenario_sha256=<hex> seed=<n>`, then the header row, then one
//! row per step in [`COLUMNS`] order; absent values are empty cells. JSONL:
//! `{"meta":{...}}`, then one object per step.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace is empty")]
    Empty,
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("malformed trace: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub scenario_sha256: String,
    pub seed: u64,
}

/// State of the whole system at one step.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceRecord {
    /// s
    pub time: f64,
    pub usv_east: f64,
    pub usv_north: f64,
    pub usv_latitude: f64,
    pub usv_longitude: f64,
    /// deg
    pub usv_heading: f64,
    /// m/s
    pub usv_surge: f64,
    /// m, left of the active leg positive
    pub cross_track_error: f64,
    pub active_segment: usize,
    pub guidance_finished: bool,
    /// Direct GCS-USV sight line blocked by an obstacle.
    pub los_blocked: bool,
    pub wifi_rssi: f64,
    pub wifi_blocked: bool,
    pub wifi_connected: bool,
    pub wifi_throughput: f64,
    pub wifi_latency: Option<f64>,
    pub lte_rssi: f64,
    pub lte_blocked: bool,
    pub lte_connected: bool,
    pub lte_throughput: f64,
    pub lte_latency: Option<f64>,
    pub relay_deployed: bool,
    pub relay_active: bool,
    pub relay_hover_east: Option<f64>,
    pub relay_hover_north: Option<f64>,
    pub relay_hover_up: Option<f64>,
    pub relay_up_rssi: Option<f64>,
    pub relay_up_blocked: Option<bool>,
    pub relay_down_rssi: Option<f64>,
    pub relay_down_blocked: Option<bool>,
    pub relay_up_throughput: Option<f64>,
    pub relay_down_throughput: Option<f64>,
    pub relay_throughput: Option<f64>,
    pub relay_latency: Option<f64>,
    /// WIFI, RELAY, LTE or NONE
    pub selected: String,
    pub throughput: f64,
    pub latency: Option<f64>,
    pub gcs_pan: f64,
    pub usv_pan: f64,
    pub gcs_pointing_error: f64,
    pub usv_pointing_error: f64,
    /// s since the GCS last heard the USV position
    pub gcs_belief_age: f64,
    pub uav_east: Option<f64>,
    pub uav_north: Option<f64>,
    pub uav_up: Option<f64>,
    pub landing_stage: Option<String>,
    pub charge_state: Option<String>,
    pub motors_on: Option<bool>,
    pub magnet_engaged: Option<bool>,
    /// `;`-separated annotations
    pub events: String,
}

/// CSV column order, identical to the field order of [`TraceRecord`].
pub const COLUMNS: [&str; 50] = [
    "time",
    "usv_east",
    "usv_north",
    "usv_latitude",
    "usv_longitude",
    "usv_heading",
    "usv_surge",
    "cross_track_error",
    "active_segment",
    "guidance_finished",
    "los_blocked",
    "wifi_rssi",
    "wifi_blocked",
    "wifi_connected",
    "wifi_throughput",
    "wifi_latency",
    "lte_rssi",
    "lte_blocked",
    "lte_connected",
    "lte_throughput",
    "lte_latency",
    "relay_deployed",
    "relay_active",
    "relay_hover_east",
    "relay_hover_north",
    "relay_hover_up",
    "relay_up_rssi",
    "relay_up_blocked",
    "relay_down_rssi",
    "relay_down_blocked",
    "relay_up_throughput",
    "relay_down_throughput",
    "relay_throughput",
    "relay_latency",
    "selected",
    "throughput",
    "latency",
    "gcs_pan",
    "usv_pan",
    "gcs_pointing_error",
    "usv_pointing_error",
    "gcs_belief_age",
    "uav_east",
    "uav_north",
    "uav_up",
    "landing_stage",
    "charge_state",
    "motors_on",
    "magnet_engaged",
    "events",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub meta: TraceMeta,
    pub records: Vec<TraceRecord>,
}

#[derive(Serialize, Deserialize)]
struct MetaLine {
    meta: TraceMeta,
}

impl Trace {
    pub fn write<W: Write>(&self, format: Format, out: W) -> Result<(), TraceError> {
        if self.records.is_empty() {
            return Err(TraceError::Empty);
        }
        match format {
            Format::Csv => self.write_csv(out),
            Format::Jsonl => self.write_jsonl(out),
        }
    }

    pub fn to_bytes(&self, format: Format) -> Result<Vec<u8>, TraceError> {
        let mut buf = Vec::new();
        self.write(format, &mut buf)?;
        Ok(buf)
    }

    fn write_csv<W: Write>(&self, mut out: W) -> Result<(), TraceError> {
        writeln!(out, "# scenario_sha256={} seed={}", self.meta.scenario_sha256, self.meta.seed)?;
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), TraceError> {
        serde_json::to_writer(&mut out, &MetaLine { meta: self.meta.clone() })?;
        out.write_all(b"\n")?;
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(format: Format, mut input: R) -> Result<Self, TraceError> {
        let mut first = String::new();
        input.read_line(&mut first)?;
        match format {
            Format::Csv => {
                let meta = parse_csv_meta(first.trim_end())?;
                let mut r = csv::Reader::from_reader(input);
                let records = r.deserialize().collect::<Result<Vec<TraceRecord>, _>>()?;
                Ok(Self { meta, records })
            }
            Format::Jsonl => {
                let meta = serde_json::from_str::<MetaLine>(&first)?.meta;
                let mut records = Vec::new();
                for line in input.lines() {
                    let line = line?;
                    if !line.is_empty() {
                        records.push(serde_json::from_str(&line)?);
                    }
                }
                Ok(Self { meta, records })
            }
        }
    }
}

fn parse_csv_meta(line: &str) -> Result<TraceMeta, TraceError> {
    let bad = || TraceError::Malformed(format!("bad metadata line `{line}`"));
    let rest = line.strip_prefix("# ").ok_or_else(bad)?;
    let (mut hash, mut seed) = (None, None);
    for part in rest.split_whitespace() {
        match part.split_once('=') {
            Some(("scenario_sha256", v)) => hash = Some(v.to_string()),
            Some(("seed", v)) => seed = v.parse().ok(),
            _ => return Err(bad()),
        }
    }
    Ok(TraceMeta { scenario_sha256: hash.ok_or_else(bad)?, seed: seed.ok_or_else(bad)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> Trace {
        let records = (0..n)
            .map(|k| TraceRecord {
                time: k as f64 * 0.1,
                usv_east: 0.1 + k as f64 / 3.0,
                wifi_latency: (k % 2 == 0).then_some(5.0),
                selected: "WIFI".into(),
                landing_stage: (k == 3).then(|| "TRANSIT".to_string()),
                events: if k == 1 { "a;b".into() } else { String::new() },
                ..TraceRecord::default()
            })
            .collect();
        Trace { meta: TraceMeta { scenario_sha256: "ab".repeat(32), seed: 9 }, records }
    }

    #[test]
    fn csv_layout() {
        let bytes = sample(5).to_bytes(Format::Csv).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 1 + 5);
        assert!(lines[0].starts_with("# scenario_sha256=abab"));
        let header: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(header, COLUMNS);
        for row in &lines[2..] {
            let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(row.as_bytes());
            assert_eq!(r.records().next().unwrap().unwrap().len(), COLUMNS.len());
        }
    }

    #[test]
    fn round_trips() {
        let t = sample(5);
        for f in [Format::Csv, Format::Jsonl] {
            let bytes = t.to_bytes(f).unwrap();
            assert_eq!(Trace::read(f, bytes.as_slice()).unwrap(), t, "{f:?}");
        }
    }

    #[test]
    fn empty_trace_refused() {
        let t = Trace { meta: sample(1).meta, records: vec![] };
        assert!(matches!(t.to_bytes(Format::Csv), Err(TraceError::Empty)));
    }
}
