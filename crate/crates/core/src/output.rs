//! Result rows and their CSV/JSON serialization.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Serialize, Serializer};

use crate::error::{ConfigError, Error};
use crate::metrics::RunResult;
use crate::network::CwndTrace;
use crate::scenario::{BufferSize, ConfigClass, Scenario};
use crate::switch::PolicyKind;

pub const CSV_HEADER: &str = "config,n_sources,buffer_cells,policy,r_fraction,z,efficiency,fairness,max_queue_cells,drops,reassembly_discards,retransmits";

/// One line of output: a run's configuration and its headline numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    #[serde(serialize_with = "display")]
    pub config: ConfigClass,
    pub n_sources: u32,
    #[serde(rename = "buffer_cells", serialize_with = "buffer")]
    pub buffer: BufferSize,
    #[serde(serialize_with = "display")]
    pub policy: PolicyKind,
    #[serde(serialize_with = "opt_ratio")]
    pub r_fraction: Option<Ratio<u64>>,
    #[serde(serialize_with = "opt_ratio")]
    pub z: Option<Ratio<u64>>,
    #[serde(serialize_with = "fixed4")]
    pub efficiency: f64,
    #[serde(serialize_with = "fixed4")]
    pub fairness: f64,
    pub max_queue_cells: u64,
    pub drops: u64,
    pub reassembly_discards: u64,
    #[serde(rename = "retransmits")]
    pub retransmitted_segments: u64,
}

impl ResultRow {
    pub fn new(s: &Scenario, r: &RunResult) -> Self {
        let m = r.metrics::<f64>();
        ResultRow {
            config: s.config,
            n_sources: s.n_sources,
            buffer: s.buffer,
            policy: s.policy_spec.kind,
            r_fraction: s.r_fraction(),
            z: s.scale(),
            efficiency: m.efficiency,
            fairness: m.fairness,
            max_queue_cells: r.max_queue_cells(),
            drops: r.drops_total(),
            reassembly_discards: r.reassembly_discards,
            retransmitted_segments: r.retransmitted_segments,
        }
    }

    pub fn to_csv_line(&self) -> String {
        let opt = |v: Option<Ratio<u64>>| {
            v.map(|r| format!("{:.4}", ratio_f64(r)))
                .unwrap_or_default()
        };
        format!(
            "{},{},{},{},{},{},{:.4},{:.4},{},{},{},{}",
            self.config,
            self.n_sources,
            self.buffer,
            self.policy,
            opt(self.r_fraction),
            opt(self.z),
            self.efficiency,
            self.fairness,
            self.max_queue_cells,
            self.drops,
            self.reassembly_discards,
            self.retransmitted_segments
        )
    }
}

fn ratio_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Rounds to four decimals so JSON and CSV agree.
fn round4(v: f64) -> f64 {
    format!("{v:.4}").parse().expect("formatted float parses")
}

fn display<T: fmt::Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn buffer<S: Serializer>(b: &BufferSize, s: S) -> Result<S::Ok, S::Error> {
    match b {
        BufferSize::Cells(k) => s.serialize_u64(*k),
        BufferSize::Infinite => s.serialize_str("infinite"),
    }
}

fn opt_ratio<S: Serializer>(v: &Option<Ratio<u64>>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(r) => s.serialize_f64(round4(ratio_f64(*r))),
        None => s.serialize_none(),
    }
}

fn fixed4<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round4(*v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(ConfigError::invalid(
                "format",
                format!("`{s}` is not csv or json"),
            )),
        }
    }
}

pub fn write_rows<W: Write>(rows: &[ResultRow], format: Format, mut w: W) -> io::Result<()> {
    match format {
        Format::Csv => {
            writeln!(w, "{CSV_HEADER}")?;
            for row in rows {
                writeln!(w, "{}", row.to_csv_line())?;
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)?;
        }
    }
    w.flush()
}

/// Writes rows to `dest`, or to standard output when `dest` is `None`.
pub fn emit_results(rows: &[ResultRow], format: Format, dest: Option<&Path>) -> Result<(), Error> {
    match dest {
        Some(path) => {
            let io_err = |source| Error::Io {
                path: path.to_path_buf(),
                source,
            };
            let file = File::create(path).map_err(io_err)?;
            write_rows(rows, format, BufWriter::new(file)).map_err(io_err)
        }
        None => write_rows(rows, format, io::stdout().lock()).map_err(|source| Error::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

/// One `time_ns,cwnd_bytes` line per change of the congestion window.
pub fn write_trace<W: Write>(trace: &CwndTrace, mut w: W) -> io::Result<()> {
    let mut last = None;
    for sample in trace {
        if last != Some(sample.cwnd) {
            writeln!(w, "{},{}", sample.time.as_nanos(), sample.cwnd)?;
            last = Some(sample.cwnd);
        }
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::SimTime;
    use crate::network::TraceSample;

    fn row() -> ResultRow {
        ResultRow {
            config: ConfigClass::Lan,
            n_sources: 5,
            buffer: BufferSize::Cells(1000),
            policy: PolicyKind::TailDrop,
            r_fraction: None,
            z: None,
            efficiency: 0.2134999,
            fairness: 1.0,
            max_queue_cells: 1000,
            drops: 12,
            reassembly_discards: 3,
            retransmitted_segments: 7,
        }
    }

    fn csv(rows: &[ResultRow]) -> String {
        let mut out = Vec::new();
        write_rows(rows, Format::Csv, &mut out).unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn csv_layout() {
        assert_eq!(csv(&[]), format!("{CSV_HEADER}\n"));
        assert_eq!(
            csv(&[row()]),
            format!("{CSV_HEADER}\nLAN,5,1000,UBR,,,0.2135,1.0000,1000,12,3,7\n")
        );
        let mut fba = row();
        fba.policy = PolicyKind::Fba;
        fba.buffer = BufferSize::Infinite;
        fba.r_fraction = Some(Ratio::new(9, 10));
        fba.z = Some(Ratio::new(4, 5));
        assert_eq!(
            fba.to_csv_line(),
            "LAN,5,infinite,FBA,0.9000,0.8000,0.2135,1.0000,1000,12,3,7"
        );
    }

    #[test]
    fn json_layout() {
        let mut out = Vec::new();
        write_rows(&[row()], Format::Json, &mut out).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
        let obj = &v[0];
        let keys: Vec<&str> = CSV_HEADER.split(',').collect();
        assert_eq!(obj.as_object().unwrap().len(), keys.len());
        for k in keys {
            assert!(obj.get(k).is_some(), "{k}");
        }
        assert_eq!(obj["efficiency"], 0.2135);
        assert_eq!(obj["policy"], "UBR");
        assert!(obj["z"].is_null());
        let mut empty = Vec::new();
        write_rows(&[], Format::Json, &mut empty).unwrap();
        assert_eq!(
            serde_json::from_slice::<serde_json::Value>(&empty).unwrap(),
            serde_json::json!([])
        );
    }

    #[test]
    fn trace_lines() {
        let sample = |us, cwnd| TraceSample {
            time: SimTime::from_micros(us),
            cwnd,
            ssthresh: 65535,
            snd_una: 0,
            snd_max: 0,
        };
        let trace = vec![
            sample(0, 512),
            sample(3, 1024),
            sample(5, 1024),
            sample(8, 512),
        ];
        let mut out = Vec::new();
        write_trace(&trace, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "0,512\n3000,1024\n8000,512\n"
        );
    }

    #[test]
    fn unwritable_destination_names_path() {
        let err = emit_results(
            &[row()],
            Format::Csv,
            Some(Path::new("/nonexistent-dir/x.csv")),
        )
        .unwrap_err();
        assert!(err.to_string().starts_with("/nonexistent-dir/x.csv"));
    }
}
