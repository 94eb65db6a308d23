// SPDX-License-Identifier: Apache-2.0

//! RunReport as a directory: `summary.json` (checksum header, counters,
//! latency summaries and a manifest of the CSV files), one
//! `trace_node<i>.csv` per receiver, `histogram.csv` and `percentiles.csv`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::container::{unwrap_text, wrap_text};
use super::{read_text, write_file, IoError};
use crate::chip::TraceRecord;
use crate::engine::report::REPORT_FORMAT_VERSION;
use crate::engine::{LatencySummary, RunReport};
use crate::types::{ChipLabel, SimTime, TICK_NS};

pub const SUMMARY_FILE: &str = "summary.json";
const KIND: &str = "report";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub rows: u64,
    pub crc32: String,
}

#[derive(Serialize)]
struct SummaryOut<'a> {
    report: &'a RunReport,
    files: Vec<FileEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SummaryIn {
    report: RunReport,
    files: Vec<FileEntry>,
}

pub fn trace_file_name(node: usize) -> String {
    format!("trace_node{node}.csv")
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(String, u64), IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    let mut n = 0;
    for r in rows {
        w.write_record(&r)?;
        n += 1;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Malformed(e.to_string()))?;
    Ok((String::from_utf8(bytes).expect("ASCII fields"), n))
}

fn trace_csv(trace: &[TraceRecord]) -> Result<(String, u64), IoError> {
    let ns = |t: SimTime| (t.ticks() * TICK_NS).to_string();
    csv_string(
        &["label", "emitted_ns", "link_arrived_ns", "arrived_ns", "latency_ns"],
        trace.iter().map(|r| {
            vec![
                r.label.to_string(),
                ns(r.emitted_at),
                ns(r.link_arrived_at),
                ns(r.arrived_at),
                (r.latency_ticks() * TICK_NS).to_string(),
            ]
        }),
    )
}

fn histogram_csv(s: &LatencySummary) -> Result<(String, u64), IoError> {
    csv_string(&["bin_ns", "count"], s.histogram.iter().map(|b| vec![b.bin_ns.to_string(), b.count.to_string()]))
}

fn percentiles_csv(r: &RunReport) -> Result<(String, u64), IoError> {
    let row = |name: &str, s: &LatencySummary| {
        let p = s.percentiles.map(|p| [p.p1_ns, p.p50_ns, p.p99_ns, p.max_ns].map(|v| v.to_string()));
        let [p1, p50, p99, max] = p.unwrap_or_default();
        vec![name.to_string(), s.count.to_string(), p1, p50, p99, max, format!("{:.3}", s.mean_ns)]
    };
    csv_string(
        &["metric", "count", "p1_ns", "p50_ns", "p99_ns", "max_ns", "mean_ns"],
        [row("latency", &r.latency), row("link_latency", &r.link_latency)],
    )
}

/// File name and contents of every file of a stored report.
pub fn report_files(report: &RunReport) -> Result<Vec<(String, String)>, IoError> {
    let mut csvs = Vec::new();
    for (i, t) in report.traces.iter().enumerate() {
        csvs.push((trace_file_name(i), trace_csv(t)?));
    }
    csvs.push(("histogram.csv".into(), histogram_csv(&report.latency)?));
    csvs.push(("percentiles.csv".into(), percentiles_csv(report)?));
    let files = csvs
        .iter()
        .map(|(name, (body, rows))| FileEntry {
            name: name.clone(),
            rows: *rows,
            crc32: format!("{:08x}", crc32fast::hash(body.as_bytes())),
        })
        .collect();
    let mut json =
        serde_json::to_string_pretty(&SummaryOut { report, files }).map_err(|e| IoError::Json(e.to_string()))?;
    json.push('\n');
    let mut out = vec![(SUMMARY_FILE.to_string(), wrap_text(KIND, REPORT_FORMAT_VERSION, &json))];
    out.extend(csvs.into_iter().map(|(name, (body, _))| (name, body)));
    Ok(out)
}

fn parse_trace(name: &str, body: &str) -> Result<Vec<TraceRecord>, IoError> {
    let bad = |row: usize, what: &str| IoError::Malformed(format!("{name} row {row}: {what}"));
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    if rdr.headers()?.iter().collect::<Vec<_>>()
        != ["label", "emitted_ns", "link_arrived_ns", "arrived_ns", "latency_ns"]
    {
        return Err(bad(0, "unexpected header"));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |k: usize| -> Result<u64, IoError> {
            rec.get(k).and_then(|v| v.parse().ok()).ok_or_else(|| bad(i + 1, "expected integers"))
        };
        let tick = |k: usize| -> Result<SimTime, IoError> {
            let ns = num(k)?;
            if ns % TICK_NS != 0 {
                return Err(bad(i + 1, "time not on a tick"));
            }
            Ok(SimTime(ns / TICK_NS))
        };
        if rec.len() != 5 {
            return Err(bad(i + 1, "expected five fields"));
        }
        let label = u32::try_from(num(0)?)
            .ok()
            .and_then(|v| ChipLabel::new(v).ok())
            .ok_or_else(|| bad(i + 1, "label out of range"))?;
        let r = TraceRecord { label, emitted_at: tick(1)?, link_arrived_at: tick(2)?, arrived_at: tick(3)? };
        if r.arrived_at < r.emitted_at || num(4)? != r.latency_ticks() * TICK_NS {
            return Err(bad(i + 1, "latency does not match the timestamps"));
        }
        out.push(r);
    }
    Ok(out)
}

/// Rebuilds a report from its files, verifying every checksum.
pub fn report_from_files(files: &BTreeMap<String, String>) -> Result<RunReport, IoError> {
    let summary = files.get(SUMMARY_FILE).ok_or_else(|| IoError::Missing(SUMMARY_FILE.into()))?;
    let json = unwrap_text(KIND, REPORT_FORMAT_VERSION, summary, true)?;
    let parsed: SummaryIn = serde_json::from_str(json).map_err(|e| IoError::Json(e.to_string()))?;
    let mut report = parsed.report;
    if report.format_version != REPORT_FORMAT_VERSION {
        return Err(IoError::Version { found: report.format_version, supported: REPORT_FORMAT_VERSION });
    }
    let mut traces = vec![None; report.node_count];
    for entry in &parsed.files {
        let body = files.get(&entry.name).ok_or_else(|| IoError::Missing(entry.name.clone()))?;
        let computed = crc32fast::hash(body.as_bytes());
        let stored = u32::from_str_radix(&entry.crc32, 16)
            .map_err(|_| IoError::Malformed(format!("bad checksum for {}", entry.name)))?;
        if computed != stored {
            return Err(IoError::Checksum { stored, computed });
        }
        if let Some(slot) = (0..report.node_count).find(|&i| trace_file_name(i) == entry.name) {
            let t = parse_trace(&entry.name, body)?;
            if t.len() as u64 != entry.rows {
                return Err(IoError::Malformed(format!(
                    "{} has {} rows, manifest says {}",
                    entry.name,
                    t.len(),
                    entry.rows
                )));
            }
            traces[slot] = Some(t);
        }
    }
    report.traces = traces
        .into_iter()
        .enumerate()
        .map(|(i, t)| t.ok_or_else(|| IoError::Missing(trace_file_name(i))))
        .collect::<Result<_, _>>()?;
    Ok(report)
}

pub fn store_report(report: &RunReport, dir: &Path) -> Result<(), IoError> {
    std::fs::create_dir_all(dir).map_err(|e| IoError::fs(dir, e))?;
    for (name, body) in report_files(report)? {
        write_file(&dir.join(name), body.as_bytes())?;
    }
    Ok(())
}

pub fn load_report(dir: &Path) -> Result<RunReport, IoError> {
    let mut files = BTreeMap::new();
    let summary = read_text(&dir.join(SUMMARY_FILE))?;
    files.insert(SUMMARY_FILE.to_string(), summary);
    // the manifest names the remaining files
    let names: Vec<String> = {
        let json = unwrap_text(KIND, REPORT_FORMAT_VERSION, &files[SUMMARY_FILE], true)?;
        let v: serde_json::Value = serde_json::from_str(json).map_err(|e| IoError::Json(e.to_string()))?;
        v["files"].as_array().into_iter().flatten().filter_map(|f| f["name"].as_str().map(String::from)).collect()
    };
    for name in names {
        if name.contains(['/', '\\']) || name.starts_with('.') {
            return Err(IoError::Malformed(format!("manifest entry `{name}` is not a plain file name")));
        }
        let body = read_text(&dir.join(&name))?;
        files.insert(name, body);
    }
    report_from_files(&files)
}
