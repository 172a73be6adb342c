use statrs::distribution::{ContinuousCDF, Normal};

use super::{Alternative, TestMethod, TestResult};
use crate::dataproc::{mean, std_dev};
use crate::{Error, Result};

/// Asymptotic Kolmogorov survival function `P(K > x)`.
fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Dallal–Wilkinson approximation to the Lilliefors p-value, accurate
/// below 0.1.
fn dallal_wilkinson(d: f64, n: usize) -> f64 {
    let (kd, nd) = if n > 100 {
        (d * (n as f64 / 100.0).powf(0.49), 100.0)
    } else {
        (d, n as f64)
    };
    (-7.01256 * kd * kd * (nd + 2.78019) + 2.99587 * kd * (nd + 2.78019).sqrt() - 0.122119
        + 0.974598 / nd.sqrt()
        + 1.67997 / nd)
        .exp()
}

/// One-sample Kolmogorov–Smirnov test against a normal distribution whose
/// mean and variance are estimated from the sample.
///
/// Because the parameters are estimated, the plain Kolmogorov distribution
/// would be far too conservative. Small p-values use the Lilliefors
/// approximation; larger ones are reported as at least 0.1.
pub fn ks_normality(values: &[f64]) -> Result<TestResult> {
    let n = values.len();
    if n < 8 {
        return Err(Error::InsufficientData(format!("normality test needs n >= 8, got {n}")));
    }
    let sd = std_dev(values);
    if sd == 0.0 {
        return Err(Error::InvalidArgument("normality test on a constant sample".into()));
    }
    let dist = Normal::new(mean(values), sd).expect("positive sd");
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let nf = n as f64;
    let d = s
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = dist.cdf(x);
            (f - i as f64 / nf).max((i + 1) as f64 / nf - f)
        })
        .fold(0.0, f64::max);
    let p_dw = dallal_wilkinson(d, n);
    let p = if p_dw <= 0.1 {
        p_dw
    } else {
        kolmogorov_sf(nf.sqrt() * d).max(0.1)
    };
    Ok(TestResult {
        statistic: d,
        p_value: p.clamp(0.0, 1.0),
        alternative: Alternative::TwoSided,
        method: TestMethod::Lilliefors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Noise;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn kolmogorov_reference_values() {
        assert!((kolmogorov_sf(1.36) - 0.0494).abs() < 5e-4);
        assert!((kolmogorov_sf(1.0) - 0.2700).abs() < 5e-4);
    }

    #[test]
    fn normal_samples_rarely_rejected() {
        let mut rejected = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
            if ks_normality(&v).unwrap().p_value < 0.05 {
                rejected += 1;
            }
        }
        assert!(rejected < 10, "{rejected}");
    }

    #[test]
    fn uniform_samples_rejected() {
        let mut rejected = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let v: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
            if ks_normality(&v).unwrap().p_value < 0.05 {
                rejected += 1;
            }
        }
        assert!(rejected >= 95, "{rejected}");
    }

    #[test]
    fn bimodal_durations_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Noise::bimodal();
        let v: Vec<f64> = (0..1000).map(|_| 1e-4 + noise.sample_nonneg(&mut rng).0).collect();
        assert!(ks_normality(&v).unwrap().p_value < 0.001);
    }

    #[test]
    fn small_samples_rejected() {
        assert!(ks_normality(&[1.0, 2.0, 3.0]).is_err());
    }
}
