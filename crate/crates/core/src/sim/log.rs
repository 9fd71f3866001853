//! Per-step trajectory records, run summaries and their text formats.

use super::SimError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub v: f64,
    pub omega: f64,
    pub mode: String,
    /// Distance to the nearest obstacle; infinite when there is none.
    pub dmin: f64,
    pub obstacle_id: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub dimension: u8,
    pub records: Vec<LogRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Reached,
    Collision,
    Horizon,
    PlannerError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub reached: bool,
    pub termination: Termination,
    pub steps: usize,
    pub path_length: f64,
    /// Start to the last logged position; a reached run may stop short of
    /// the goal by the goal tolerance.
    pub straight_line: f64,
    pub min_clearance: f64,
    /// Control-bound breaches and planner failures, one line each.
    pub violations: Vec<String>,
    /// Spatial runs: largest |‖heading‖ − 1| and |heading · turn| seen.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_heading_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_orthogonality_residual: Option<f64>,
    pub seed: u64,
}

impl TrajectoryLog {
    pub fn new(dimension: u8) -> Self {
        Self { dimension, records: Vec::new() }
    }

    /// Sum of displacements between consecutive records.
    pub fn path_length(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| {
                let dz = w[1].z.unwrap_or(0.0) - w[0].z.unwrap_or(0.0);
                ((w[1].x - w[0].x).powi(2) + (w[1].y - w[0].y).powi(2) + dz * dz).sqrt()
            })
            .sum()
    }

    fn header(&self) -> &'static [&'static str] {
        if self.dimension == 3 {
            &["t", "x", "y", "z", "v", "omega", "mode", "dmin", "obstacle_id"]
        } else {
            &["t", "x", "y", "theta", "v", "omega", "mode", "dmin", "obstacle_id"]
        }
    }

    /// CSV with shortest round-trip float formatting; the header is written
    /// even for an empty log.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(self.header()).expect("in-memory write");
        for r in &self.records {
            let mut row = vec![r.t.to_string(), r.x.to_string(), r.y.to_string()];
            row.push(if self.dimension == 3 { opt(r.z) } else { opt(r.theta) });
            row.extend([r.v.to_string(), r.omega.to_string(), r.mode.clone(), r.dmin.to_string()]);
            row.push(r.obstacle_id.map(|i| i.to_string()).unwrap_or_default());
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn from_csv(text: &str) -> Result<Self, SimError> {
        let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let headers = r.headers().map_err(csv_err)?.clone();
        let dimension = match headers.get(3) {
            Some("z") => 3,
            Some("theta") => 2,
            other => return Err(SimError::Parse { line: 1, column: 4, message: format!("unexpected column {other:?}") }),
        };
        let mut log = TrajectoryLog::new(dimension);
        for (i, row) in r.records().enumerate() {
            let row = row.map_err(csv_err)?;
            let line = i + 2;
            let num = |c: usize| -> Result<f64, SimError> {
                let s = row.get(c).unwrap_or("");
                s.parse::<f64>().map_err(|e| SimError::Parse { line, column: c + 1, message: format!("{s:?}: {e}") })
            };
            let opt_num = |c: usize| -> Result<Option<f64>, SimError> {
                if row.get(c).unwrap_or("").is_empty() {
                    Ok(None)
                } else {
                    num(c).map(Some)
                }
            };
            let third = opt_num(3)?;
            let id = row.get(8).unwrap_or("");
            log.records.push(LogRecord {
                t: num(0)?,
                x: num(1)?,
                y: num(2)?,
                z: if dimension == 3 { third } else { None },
                theta: if dimension == 2 { third } else { None },
                v: num(4)?,
                omega: num(5)?,
                mode: row.get(6).unwrap_or("").to_string(),
                dmin: num(7)?,
                obstacle_id: if id.is_empty() {
                    None
                } else {
                    Some(id.parse().map_err(|e| SimError::Parse { line, column: 9, message: format!("{id:?}: {e}") })?)
                },
            });
        }
        Ok(log)
    }

    /// One JSON object per record. Infinite distances are written as null.
    pub fn to_jsonl(&self) -> String {
        self.records.iter().map(|r| serde_json::to_string(r).expect("record serializes") + "\n").collect()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> SimError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    SimError::Parse { line, column: 0, message: e.to_string() }
}
