use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dataproc::{mean, std_dev};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCi {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub half_width: f64,
}

/// Student-t confidence interval for the mean.
pub fn mean_ci(values: &[f64], level: f64) -> Result<MeanCi> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("confidence interval needs n >= 2, got {n}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence level {level} outside (0, 1)")));
    }
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.5 + level / 2.0);
    let m = mean(values);
    let half_width = t * std_dev(values) / (n as f64).sqrt();
    Ok(MeanCi { mean: m, lo: m - half_width, hi: m + half_width, half_width })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn constant_sample() {
        let c = mean_ci(&[4.0; 5], 0.95).unwrap();
        assert_eq!((c.lo, c.mean, c.hi), (4.0, 4.0, 4.0));
    }

    #[test]
    fn textbook_three_values() {
        let c = mean_ci(&[1.0, 2.0, 3.0], 0.95).unwrap();
        assert_eq!(c.mean, 2.0);
        assert!((c.half_width - 4.302_652_729_911_275 / 3f64.sqrt()).abs() < 1e-9);
        assert!((c.half_width - 2.484).abs() < 1e-3);
    }

    #[test]
    fn rejects_single_value() {
        assert!(mean_ci(&[1.0], 0.95).is_err());
    }

    #[test]
    fn coverage() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut covered = 0;
        for _ in 0..1000 {
            let v: Vec<f64> = (0..30).map(|_| StandardNormal.sample(&mut rng)).collect();
            let c = mean_ci(&v, 0.95).unwrap();
            if c.lo <= 0.0 && 0.0 <= c.hi {
                covered += 1;
            }
        }
        assert!((930..=970).contains(&covered), "{covered}");
    }
}
