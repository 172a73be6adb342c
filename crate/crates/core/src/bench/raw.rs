use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::output::write_csv;
use crate::Result;

/// One observation in the raw measurement CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub mpirun_id: usize,
    pub func: String,
    pub msize: u64,
    pub p: usize,
    pub obs: usize,
    pub runtime_s: f64,
    pub valid: bool,
    pub ground_truth_s: f64,
    pub scheme: String,
    pub sync_method: String,
}

pub const RAW_COLUMNS: [&str; 10] =
    ["mpirun_id", "func", "msize", "p", "obs", "runtime_s", "valid", "ground_truth_s", "scheme", "sync_method"];

pub fn write_raw_csv<W: Write>(rows: &[RawRow], w: W) -> Result<()> {
    write_csv(rows, &RAW_COLUMNS, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let rows = vec![RawRow {
            mpirun_id: 1,
            func: "bcast".into(),
            msize: 8,
            p: 4,
            obs: 0,
            runtime_s: 1.25e-5,
            valid: true,
            ground_truth_s: 1.2e-5,
            scheme: "MS4".into(),
            sync_method: "HCA".into(),
        }];
        let mut buf = Vec::new();
        write_raw_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), RAW_COLUMNS.join(","));
        let back: Vec<RawRow> = csv::Reader::from_reader(&buf[..]).deserialize().collect::<std::result::Result<_, _>>().unwrap();
        assert_eq!(back, rows);
        let mut empty = Vec::new();
        write_raw_csv(&[], &mut empty).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap().trim(), RAW_COLUMNS.join(","));
    }
}
