//! CSV and JSON emission of analysis results.
//!
//! The per-frame CSV has one row per sampled frame, gated or not:
//!
//! ```text
//! frame_index,timestamp_s,label_id,label_name,p_kill,p_death,p_noaction,p_smoke,gated,counted
//! 0,0.000,0,kill,0.970000,0.010000,0.010000,0.010000,true,true
//! ```
//!
//! Probabilities use six decimals and the timestamp three.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::domain::{ActionClass, ActionCounts, FramePrediction};
use crate::error::{Error, Result};
use crate::pipeline::{AnalysisReport, FrameRow};

pub const CSV_HEADER: &str =
    "frame_index,timestamp_s,label_id,label_name,p_kill,p_death,p_noaction,p_smoke,gated,counted";

/// Streaming CSV writer; the header is written on construction and each row
/// is flushed as it arrives.
pub struct CsvSink<W: Write> {
    out: W,
}

impl<W: Write> CsvSink<W> {
    pub fn new(mut out: W) -> Result<Self> {
        writeln!(out, "{CSV_HEADER}").map_err(|e| Error::io("<csv>", e))?;
        Ok(CsvSink { out })
    }

    pub fn write(&mut self, prediction: &FramePrediction, counted: bool) -> Result<()> {
        let p = prediction.ensemble.values();
        writeln!(
            self.out,
            "{},{:.3},{},{},{:.6},{:.6},{:.6},{:.6},{},{}",
            prediction.frame_index,
            prediction.timestamp_s,
            prediction.label.wire_id(),
            prediction.label.name(),
            p[0],
            p[1],
            p[2],
            p[3],
            prediction.gated,
            counted
        )
        .and_then(|_| self.out.flush())
        .map_err(|e| Error::io("<csv>", e))
    }

    pub fn write_row(&mut self, row: &FrameRow<'_>) -> Result<()> {
        self.write(row.prediction, row.counted)
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

pub fn write_csv<W: Write>(report: &AnalysisReport, out: W) -> Result<W> {
    let mut sink = CsvSink::new(out)?;
    for (frame, counted) in report.per_frame.iter().zip(report.counted_flags()) {
        sink.write(frame, counted)?;
    }
    Ok(sink.into_inner())
}

pub fn csv_string(report: &AnalysisReport) -> Result<String> {
    let bytes = write_csv(report, Vec::new())?;
    Ok(String::from_utf8(bytes).expect("csv output is ascii"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub frame_index: u64,
    pub timestamp_s: f64,
    pub label_id: u8,
    pub label_name: String,
    pub p_kill: f64,
    pub p_death: f64,
    pub p_noaction: f64,
    pub p_smoke: f64,
    pub gated: bool,
    pub counted: bool,
}

impl CsvRow {
    pub fn label(&self) -> Result<ActionClass> {
        let by_id = ActionClass::from_wire_id(self.label_id)?;
        if by_id.name() != self.label_name {
            return Err(Error::invalid(format!(
                "frame {}: label id {} does not match name {:?}",
                self.frame_index, self.label_id, self.label_name
            )));
        }
        Ok(by_id)
    }
}

pub fn parse_csv<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.iter().collect::<Vec<_>>().join(",");
    if headers != CSV_HEADER {
        return Err(Error::invalid(format!("unexpected CSV header {headers:?}")));
    }
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Counts rebuilt from the `counted` column.
pub fn counts_from_rows(rows: &[CsvRow]) -> Result<ActionCounts> {
    let mut counts = ActionCounts::new();
    for row in rows.iter().filter(|r| r.counted) {
        counts.increment(row.label()?);
    }
    Ok(counts)
}

pub fn to_json(report: &AnalysisReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counter::CountMode;
    use crate::domain::{ModelVote, ProbabilityVector};
    use crate::pipeline::ConfigEcho;
    use proptest::prelude::*;

    fn report_from(frames: Vec<([f64; 4], u64)>, mode: CountMode) -> AnalysisReport {
        let per_frame: Vec<FramePrediction> = frames
            .into_iter()
            .map(|(p, idx)| {
                let pv = ProbabilityVector::new(p).unwrap();
                FramePrediction::new(
                    idx,
                    idx as f64 / 30.0,
                    vec![ModelVote {
                        model: "m".into(),
                        probabilities: pv,
                    }],
                    pv,
                    0.75,
                )
            })
            .collect();
        let mut report = AnalysisReport {
            counts: ActionCounts::new(),
            per_frame,
            config_echo: ConfigEcho {
                threshold: 0.75,
                count_mode: mode,
                backends: vec!["m".into()],
            },
            input_digest: "00".into(),
        };
        report.counts = report.recount();
        report
    }

    #[test]
    fn csv_layout() {
        let r = report_from(
            vec![([0.97, 0.01, 0.01, 0.01], 0), ([0.6, 0.2, 0.1, 0.1], 30)],
            CountMode::Literal,
        );
        let text = csv_string(&r).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "0,0.000,0,kill,0.970000,0.010000,0.010000,0.010000,true,true");
        assert_eq!(lines[2], "30,1.000,0,kill,0.600000,0.200000,0.100000,0.100000,false,false");
    }

    #[test]
    fn rejects_foreign_csv() {
        assert!(parse_csv("a,b\n1,2\n".as_bytes()).is_err());
        let bad_label = format!("{CSV_HEADER}\n0,0.000,0,death,1,0,0,0,true,true\n");
        let rows = parse_csv(bad_label.as_bytes()).unwrap();
        assert!(counts_from_rows(&rows).is_err());
    }

    fn arb_frame() -> impl Strategy<Value = [f64; 4]> {
        (0usize..4, 0.3f64..0.99).prop_map(|(c, peak)| {
            let mut p = [(1.0 - peak) / 3.0; 4];
            p[c] = peak;
            p
        })
    }

    proptest! {
        #[test]
        fn csv_round_trip(frames in prop::collection::vec(arb_frame(), 0..40), mode in 0usize..3) {
            let frames = frames.into_iter().enumerate().map(|(i, p)| (p, i as u64 * 30)).collect();
            let report = report_from(frames, CountMode::ALL[mode]);
            let rows = parse_csv(csv_string(&report).unwrap().as_bytes()).unwrap();
            prop_assert_eq!(counts_from_rows(&rows).unwrap(), report.counts.clone());
            let labels: Vec<ActionClass> = rows.iter().map(|r| r.label().unwrap()).collect();
            let want: Vec<ActionClass> = report.per_frame.iter().map(|f| f.label).collect();
            prop_assert_eq!(labels, want);
        }
    }
}
