//! Per-iteration history records and their CSV form.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HEADER: &str = "iteration,J,A1111,A1122,A2222,A1212,V1,V2,V3,V4,l1,l2,l3,l4,dt,ls_trials";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub iteration: usize,
    pub objective: f64,
    /// `A1111, A1122, A2222, A1212`.
    pub tensor: [f64; 4],
    pub volumes: [f64; 4],
    pub multipliers: [f64; 4],
    /// Accepted transport step; zero for the initial record and rejected steps.
    pub dt: f64,
    pub line_search_trials: usize,
}

fn sci(v: f64) -> String {
    format!("{v:.11e}")
}

pub fn format_history(records: &[HistoryRecord]) -> String {
    let mut s = String::from(HEADER);
    s.push('\n');
    for r in records {
        let mut cols = vec![r.iteration.to_string(), sci(r.objective)];
        cols.extend(r.tensor.iter().chain(&r.volumes).chain(&r.multipliers).map(|&v| sci(v)));
        cols.push(sci(r.dt));
        cols.push(r.line_search_trials.to_string());
        let _ = writeln!(s, "{}", cols.join(","));
    }
    s
}

pub fn write_history(path: &Path, records: &[HistoryRecord]) -> Result<()> {
    super::write_atomic(path, format_history(records).as_bytes())
}

pub fn parse_history(text: &str, path: &Path) -> Result<Vec<HistoryRecord>> {
    let bad = |message: String| Error::Format { path: path.to_path_buf(), message };
    let mut lines = text.lines();
    if lines.next() != Some(HEADER) {
        return Err(bad("unexpected header".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(row, line)| {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 16 {
                return Err(bad(format!("row {row}: expected 16 columns, found {}", cols.len())));
            }
            let f = |k: usize| cols[k].parse::<f64>().map_err(|_| bad(format!("row {row}: bad value \"{}\"", cols[k])));
            let u = |k: usize| cols[k].parse::<usize>().map_err(|_| bad(format!("row {row}: bad count \"{}\"", cols[k])));
            Ok(HistoryRecord {
                iteration: u(0)?,
                objective: f(1)?,
                tensor: [f(2)?, f(3)?, f(4)?, f(5)?],
                volumes: [f(6)?, f(7)?, f(8)?, f(9)?],
                multipliers: [f(10)?, f(11)?, f(12)?, f(13)?],
                dt: f(14)?,
                line_search_trials: u(15)?,
            })
        })
        .collect()
}

pub fn read_history(path: &Path) -> Result<Vec<HistoryRecord>> {
    parse_history(&super::read_to_string(path)?, path)
}
