use crate::dataproc::mean;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrResult {
    /// `coefficients[h - 1]` is the coefficient at lag `h`.
    pub coefficients: Vec<f64>,
    /// Approximate 95% significance bound `1.96 / sqrt(n)`.
    pub bound: f64,
}

impl AutocorrResult {
    pub fn significant_lags(&self) -> Vec<usize> {
        (1..=self.coefficients.len())
            .filter(|&h| self.coefficients[h - 1].abs() > self.bound)
            .collect()
    }
}

/// Sample autocorrelation `C_h / C_0` for lags `1..=max_lag`.
pub fn autocorrelation(values: &[f64], max_lag: usize) -> Result<AutocorrResult> {
    let n = values.len();
    if max_lag < 1 || n <= max_lag {
        return Err(Error::InvalidArgument(format!("need n > max_lag >= 1 (n = {n}, max_lag = {max_lag})")));
    }
    let m = mean(values);
    let d: Vec<f64> = values.iter().map(|v| v - m).collect();
    let c0: f64 = d.iter().map(|x| x * x).sum();
    if c0 == 0.0 {
        return Err(Error::InvalidArgument("autocorrelation of a constant series".into()));
    }
    let coefficients = (1..=max_lag)
        .map(|h| d[..n - h].iter().zip(&d[h..]).map(|(a, b)| a * b).sum::<f64>() / c0)
        .collect();
    Ok(AutocorrResult { coefficients, bound: 1.96 / (n as f64).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn alternating_series() {
        for n in [10usize, 50, 100] {
            let v: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
            let r = autocorrelation(&v, 1).unwrap();
            let expected = -((n - 1) as f64) / n as f64;
            assert!((r.coefficients[0] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn bound_for_hundred() {
        let v: Vec<f64> = (0..100).map(|i| (i * 37 % 11) as f64).collect();
        assert!((autocorrelation(&v, 3).unwrap().bound - 0.196).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(autocorrelation(&[1.0; 10], 2).is_err());
        assert!(autocorrelation(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn iid_draws_rarely_exceed_bound() {
        let mut exceed = 0;
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
            let r = autocorrelation(&v, 20).unwrap();
            assert!(r.coefficients.iter().all(|c| c.abs() <= 1.0));
            exceed += r.significant_lags().len();
        }
        assert!(exceed as f64 / (50.0 * 20.0) <= 0.10, "{exceed}");
    }
}
