use serde::{Deserialize, Serialize};

use super::model::{LinearModel, ModelInterval};
use crate::{Error, Result};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// One regression sample: `x` is a local timestamp, `y` the offset measured
/// at that time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub x: f64,
    pub y: f64,
}

/// Ordinary least squares with 95% bands on slope and intercept.
pub fn linear_fit(points: &[FitPoint]) -> Result<(LinearModel, ModelInterval)> {
    let n = points.len();
    if n < 2 {
        return Err(Error::DegenerateFit("fewer than two fitpoints"));
    }
    if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::DegenerateFit("non-finite fitpoint"));
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.x).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.y).sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for p in points {
        let dx = p.x - mx;
        sxx += dx * dx;
        sxy += dx * (p.y - my);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all fitpoints share one x"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;

    let (se_slope, se_intercept) = if n > 2 {
        let sse: f64 = points
            .iter()
            .map(|p| {
                let r = p.y - (slope * p.x + intercept);
                r * r
            })
            .sum();
        let s2 = sse / (nf - 2.0);
        ((s2 / sxx).sqrt(), (s2 * (1.0 / nf + mx * mx / sxx)).sqrt())
    } else {
        (0.0, 0.0)
    };
    let lm = LinearModel { slope, intercept };
    let ci = ModelInterval {
        slope_lo: slope - Z95 * se_slope,
        slope_hi: slope + Z95 * se_slope,
        intercept_lo: intercept - Z95 * se_intercept,
        intercept_hi: intercept + Z95 * se_intercept,
    };
    Ok((lm, ci))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn exact_line() {
        let pts: Vec<_> = (0..50)
            .map(|i| {
                let x = i as f64 * 0.1;
                FitPoint { x, y: 2e-6 * x + 1e-3 }
            })
            .collect();
        let (lm, ci) = linear_fit(&pts).unwrap();
        assert!((lm.slope - 2e-6).abs() < 1e-15);
        assert!((lm.intercept - 1e-3).abs() < 1e-15);
        assert!(ci.slope_hi - ci.slope_lo < 1e-15);
        assert!(ci.intercept_hi - ci.intercept_lo < 1e-15);
    }

    #[test]
    fn two_points() {
        let (lm, _) = linear_fit(&[FitPoint { x: 0.0, y: 1.0 }, FitPoint { x: 1.0, y: 1.0 }]).unwrap();
        assert_eq!(lm, LinearModel::new(0.0, 1.0));
    }

    #[test]
    fn degenerate_inputs() {
        let same = [FitPoint { x: 1.0, y: 0.0 }, FitPoint { x: 1.0, y: 2.0 }];
        assert!(matches!(linear_fit(&same), Err(Error::DegenerateFit(_))));
        assert!(linear_fit(&same[..1]).is_err());
    }

    #[test]
    fn slope_interval_coverage() {
        let noise = Normal::new(0.0, 1e-7).unwrap();
        let mut covered = 0;
        let trials = 200;
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<_> = (0..1000)
                .map(|i| {
                    let x = i as f64 * 0.01;
                    FitPoint { x, y: 3e-6 * x - 2e-4 + noise.sample(&mut rng) }
                })
                .collect();
            let (_, ci) = linear_fit(&pts).unwrap();
            if ci.slope_lo <= 3e-6 && 3e-6 <= ci.slope_hi {
                covered += 1;
            }
        }
        // Nominal 95%; the band is the 99.9% binomial range for 200 trials.
        assert!((178..=199).contains(&covered), "{covered}");
    }
}
