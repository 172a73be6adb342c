use serde::{Deserialize, Serialize};

use super::quantile::{mean, median, quantile, sorted, std_dev};
use crate::stats::mean_ci;
use crate::{Error, Result};

/// Per-rank reduction over observations used by PS6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalOp {
    Min,
    Max,
    Mean,
    Median,
}

/// The processing schemes of the historical MPI benchmark suites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "UPPERCASE")]
pub enum ProcessingScheme {
    /// Max over ranks per observation, then the mean and standard deviation
    /// of the inner half after sorting.
    Ps1,
    /// Max over ranks per observation; mean with confidence interval, min, max.
    Ps2,
    /// Per-rank averages reduced to min, max and mean over ranks.
    Ps3,
    /// Max global end per observation minus the root's global start.
    Ps4 { root: usize },
    /// All per-rank global durations pooled, values above `a` times the 99th
    /// percentile removed.
    Ps5 { a: f64 },
    /// Per-rank `op` over observations, then max over ranks.
    Ps6 { op: LocalOp },
    /// Per-rank averages reduced to min, max and mean over ranks.
    Ps7,
    /// Minimum over repetitions of a complete measurement.
    Ps8,
}

impl ProcessingScheme {
    pub const PS5_DEFAULT_A: f64 = 2.0;
}

/// Raw benchmark output in one of the reduction topologies.
#[derive(Debug, Clone, PartialEq)]
pub enum RawData {
    /// Per-observation, per-rank timestamps, indexed `[obs][rank]`. Global
    /// timestamps are present for window-synchronized runs.
    Timestamps {
        local_start: Vec<Vec<f64>>,
        local_end: Vec<Vec<f64>>,
        global_start: Option<Vec<Vec<f64>>>,
        global_end: Option<Vec<Vec<f64>>>,
    },
    /// One averaged time per rank.
    PerRank(Vec<f64>),
    /// One result per repetition of a whole measurement.
    Repetitions(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SchemeSummary {
    /// The value the suite reports as its headline number.
    pub primary: f64,
    pub mean: Option<f64>,
    pub stdev: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    /// Number of values entering the final statistic.
    pub n: usize,
}

fn shape(expected: &'static str) -> Error {
    Error::Shape { expected }
}

fn fmin(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn fmax(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn local_durations(start: &[Vec<f64>], end: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if start.is_empty() || start.len() != end.len() {
        return Err(shape("non-empty per-observation per-rank timestamps"));
    }
    let p = start[0].len();
    start
        .iter()
        .zip(end)
        .map(|(s, e)| {
            if s.len() != p || e.len() != p || p == 0 {
                return Err(shape("per-observation per-rank timestamps with a fixed rank count"));
            }
            Ok(s.iter().zip(e).map(|(s, e)| e - s).collect())
        })
        .collect()
}

fn max_over_ranks(durations: &[Vec<f64>]) -> Vec<f64> {
    durations.iter().map(|row| fmax(row)).collect()
}

fn min_max_mean(v: &[f64], divisor: f64) -> SchemeSummary {
    let m = v.iter().sum::<f64>() / divisor;
    SchemeSummary {
        primary: m,
        mean: Some(m),
        min: Some(fmin(v)),
        max: Some(fmax(v)),
        n: v.len(),
        ..Default::default()
    }
}

/// Reduces raw data the way the selected suite does.
pub fn apply_processing_scheme(scheme: ProcessingScheme, raw: &RawData) -> Result<SchemeSummary> {
    use ProcessingScheme::*;
    match (scheme, raw) {
        (Ps1, RawData::Timestamps { local_start, local_end, .. }) => {
            let lmax = sorted(&max_over_ranks(&local_durations(local_start, local_end)?));
            let n = lmax.len();
            let slice = &lmax[n / 4..n - n / 4];
            if slice.is_empty() {
                return Err(Error::InsufficientData("PS1 needs at least one central observation".into()));
            }
            let m = mean(slice);
            Ok(SchemeSummary { primary: m, mean: Some(m), stdev: Some(std_dev(slice)), n: slice.len(), ..Default::default() })
        }
        (Ps2, RawData::Timestamps { local_start, local_end, .. }) => {
            let lmax = max_over_ranks(&local_durations(local_start, local_end)?);
            Ok(mean_with_ci(&lmax))
        }
        (Ps4 { root }, RawData::Timestamps { global_start: Some(gs), global_end: Some(ge), .. }) => {
            let d = local_durations(gs, ge)?;
            if root >= d[0].len() {
                return Err(Error::InvalidArgument(format!("root {root} outside rank range")));
            }
            let exec: Vec<f64> = gs.iter().zip(ge).map(|(s, e)| fmax(e) - s[root]).collect();
            Ok(mean_with_ci(&exec))
        }
        (Ps5 { a }, RawData::Timestamps { global_start: Some(gs), global_end: Some(ge), .. }) => {
            let d = local_durations(gs, ge)?;
            let p = d[0].len();
            let mut all = Vec::with_capacity(p * d.len());
            for rank in 0..p {
                for row in &d {
                    all.push(row[rank]);
                }
            }
            let thresh = quantile(&sorted(&all), 0.99) * a;
            let kept: Vec<f64> = all.into_iter().filter(|&v| v <= thresh).collect();
            Ok(min_max_mean(&kept, kept.len() as f64))
        }
        (Ps6 { op }, RawData::Timestamps { local_start, local_end, .. }) => {
            let d = local_durations(local_start, local_end)?;
            let p = d[0].len();
            let per_rank: Vec<f64> = (0..p)
                .map(|rank| {
                    let v: Vec<f64> = d.iter().map(|row| row[rank]).collect();
                    match op {
                        LocalOp::Min => fmin(&v),
                        LocalOp::Max => fmax(&v),
                        LocalOp::Mean => mean(&v),
                        LocalOp::Median => median(&v),
                    }
                })
                .collect();
            let t = fmax(&per_rank);
            Ok(SchemeSummary { primary: t, max: Some(t), n: p, ..Default::default() })
        }
        (Ps3, RawData::PerRank(v)) if !v.is_empty() => {
            // The suite divides the summed per-rank latencies by the rank count.
            Ok(min_max_mean(v, v.len() as f64))
        }
        (Ps7, RawData::PerRank(v)) if !v.is_empty() => Ok(min_max_mean(v, v.len() as f64)),
        (Ps8, RawData::Repetitions(v)) if !v.is_empty() => {
            let m = fmin(v);
            Ok(SchemeSummary { primary: m, min: Some(m), n: v.len(), ..Default::default() })
        }
        (Ps1 | Ps2 | Ps6 { .. }, _) => Err(shape("per-observation per-rank local timestamps")),
        (Ps4 { .. } | Ps5 { .. }, _) => Err(shape("per-observation per-rank global timestamps")),
        (Ps3 | Ps7, _) => Err(shape("non-empty per-rank averages")),
        (Ps8, _) => Err(shape("non-empty per-repetition results")),
    }
}

fn mean_with_ci(v: &[f64]) -> SchemeSummary {
    let m = mean(v);
    let ci = mean_ci(v, 0.95).ok().map(|c| (c.lo, c.hi));
    SchemeSummary {
        primary: m,
        mean: Some(m),
        stdev: Some(std_dev(v)),
        ci,
        min: Some(fmin(v)),
        max: Some(fmax(v)),
        n: v.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stamps(durations: &[&[f64]]) -> RawData {
        let start: Vec<Vec<f64>> = durations.iter().map(|r| vec![0.0; r.len()]).collect();
        let end: Vec<Vec<f64>> = durations.iter().map(|r| r.to_vec()).collect();
        RawData::Timestamps {
            local_start: start.clone(),
            local_end: end.clone(),
            global_start: Some(start),
            global_end: Some(end),
        }
    }

    #[test]
    fn ps1_constant() {
        let rows: Vec<&[f64]> = vec![&[3.0, 3.0]; 12];
        let s = apply_processing_scheme(ProcessingScheme::Ps1, &stamps(&rows)).unwrap();
        assert_eq!(s.mean, Some(3.0));
        assert_eq!(s.stdev, Some(0.0));
        assert_eq!(s.n, 6);
    }

    #[test]
    fn ps1_trims_quartiles_with_floor_division() {
        let rows: Vec<Vec<f64>> = (1..=10).map(|i| vec![i as f64]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let s = apply_processing_scheme(ProcessingScheme::Ps1, &stamps(&refs)).unwrap();
        // nrep = 10: slice [2, 8) of the sorted maxima, i.e. 3..=8.
        assert_eq!(s.n, 6);
        assert_eq!(s.mean, Some(5.5));
    }

    #[test]
    fn ps2_takes_max_over_ranks() {
        let s = apply_processing_scheme(ProcessingScheme::Ps2, &stamps(&[&[1.0, 2.0], &[4.0, 3.0]])).unwrap();
        assert_eq!(s.mean, Some(3.0));
        assert_eq!((s.min, s.max), (Some(2.0), Some(4.0)));
    }

    #[test]
    fn ps4_matches_global_completion_when_starts_coincide() {
        let raw = RawData::Timestamps {
            local_start: vec![vec![0.0, 0.0]],
            local_end: vec![vec![4.0, 3.0]],
            global_start: Some(vec![vec![1.0, 1.0]]),
            global_end: Some(vec![vec![5.0, 3.0]]),
        };
        let s = apply_processing_scheme(ProcessingScheme::Ps4 { root: 0 }, &raw).unwrap();
        assert_eq!(s.primary, 4.0);
    }

    #[test]
    fn ps5_drops_values_above_threshold() {
        let mut rows: Vec<Vec<f64>> = (0..200).map(|i| vec![1.0 + (i % 5) as f64 * 0.01]).collect();
        rows[7][0] = 50.0;
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let s = apply_processing_scheme(ProcessingScheme::Ps5 { a: ProcessingScheme::PS5_DEFAULT_A }, &stamps(&refs))
            .unwrap();
        assert_eq!(s.n, 199);
        assert!(s.max.unwrap() < 2.0);
    }

    #[test]
    fn ps6_ops() {
        let raw = stamps(&[&[1.0, 5.0], &[3.0, 1.0], &[2.0, 3.0]]);
        let get = |op| apply_processing_scheme(ProcessingScheme::Ps6 { op }, &raw).unwrap().primary;
        assert_eq!(get(LocalOp::Min), 1.0);
        assert_eq!(get(LocalOp::Max), 5.0);
        assert_eq!(get(LocalOp::Mean), 3.0);
        assert_eq!(get(LocalOp::Median), 3.0);
    }

    #[test]
    fn per_rank_and_repetition_schemes() {
        let raw = RawData::PerRank(vec![2.0, 4.0, 6.0]);
        let s = apply_processing_scheme(ProcessingScheme::Ps3, &raw).unwrap();
        assert_eq!((s.min, s.max, s.mean), (Some(2.0), Some(6.0), Some(4.0)));
        let s = apply_processing_scheme(ProcessingScheme::Ps7, &raw).unwrap();
        assert_eq!(s.mean, Some(4.0));
        let s = apply_processing_scheme(ProcessingScheme::Ps8, &RawData::Repetitions(vec![5.0, 4.0, 6.0])).unwrap();
        assert_eq!(s.primary, 4.0);
    }

    #[test]
    fn shape_mismatch_names_topology() {
        let err = apply_processing_scheme(ProcessingScheme::Ps3, &stamps(&[&[1.0]])).unwrap_err();
        assert!(err.to_string().contains("per-rank averages"));
        let local_only = RawData::Timestamps {
            local_start: vec![vec![0.0]],
            local_end: vec![vec![1.0]],
            global_start: None,
            global_end: None,
        };
        let err = apply_processing_scheme(ProcessingScheme::Ps4 { root: 0 }, &local_only).unwrap_err();
        assert!(err.to_string().contains("global"));
    }
}
