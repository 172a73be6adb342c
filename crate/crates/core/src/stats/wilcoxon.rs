use statrs::function::erf::erfc;

use super::rank::midranks;
use super::{Alternative, TestMethod, TestResult};
use crate::{Error, Result};

/// Largest combined size for which the exact null distribution is used.
const EXACT_MAX_N: usize = 14;

/// Number of `k`-subsets of `{1..=n}` with each possible rank sum.
fn rank_sum_counts(n: usize, k: usize) -> Vec<f64> {
    let max_sum = k * (2 * n - k + 1) / 2;
    // counts[j][s]: subsets of size j with sum s over the ranks seen so far.
    let mut counts = vec![vec![0.0f64; max_sum + 1]; k + 1];
    counts[0][0] = 1.0;
    for r in 1..=n {
        for j in (1..=k.min(r)).rev() {
            for s in (r..=max_sum).rev() {
                counts[j][s] += counts[j - 1][s - r];
            }
        }
    }
    counts.swap_remove(k)
}

fn lower_tail(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Wilcoxon–Mann–Whitney rank-sum test. The statistic is the rank sum of
/// `a`; `Less` tests whether `a` tends to be smaller than `b`.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64], alternative: Alternative) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample("rank-sum test needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("rank-sum test on non-finite values".into()));
    }
    let n = a.len();
    let m = b.len();
    let total = n + m;
    let combined: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&combined);
    let w: f64 = ranks[..n].iter().sum();

    let mut sorted = combined.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < total {
        let mut j = i;
        while j + 1 < total && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }

    if total <= EXACT_MAX_N && tie_term == 0.0 {
        let counts = rank_sum_counts(total, n);
        let all: f64 = counts.iter().sum();
        let w_int = w as usize;
        let le: f64 = counts[..=w_int.min(counts.len() - 1)].iter().sum();
        let ge: f64 = counts[w_int.min(counts.len())..].iter().sum();
        let (lo, hi) = (le / all, ge / all);
        let p = match alternative {
            Alternative::Less => lo,
            Alternative::Greater => hi,
            Alternative::TwoSided => (2.0 * lo.min(hi)).min(1.0),
        };
        return Ok(TestResult { statistic: w, p_value: p, alternative, method: TestMethod::Exact });
    }

    let (nf, mf, tf) = (n as f64, m as f64, total as f64);
    let mu = nf * (tf + 1.0) / 2.0;
    let var = nf * mf / 12.0 * ((tf + 1.0) - tie_term / (tf * (tf - 1.0)));
    let p = if var <= 0.0 {
        1.0
    } else {
        let sd = var.sqrt();
        let d = w - mu;
        match alternative {
            Alternative::Less => lower_tail((d + 0.5) / sd),
            Alternative::Greater => upper_tail((d - 0.5) / sd),
            Alternative::TwoSided => {
                let z = ((d.abs() - 0.5) / sd).max(0.0);
                (2.0 * upper_tail(z)).min(1.0)
            }
        }
    };
    Ok(TestResult { statistic: w, p_value: p.clamp(0.0, 1.0), alternative, method: TestMethod::NormalApprox })
}

/// Number of significance stars for a p-value.
pub fn stars(p: f64) -> u8 {
    if p <= 0.001 {
        3
    } else if p <= 0.01 {
        2
    } else if p <= 0.05 {
        1
    } else {
        0
    }
}

pub fn stars_str(p: f64) -> &'static str {
    ["", "*", "**", "***"][stars(p) as usize]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn smallest_one_sided_case() {
        let r = wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], Alternative::Less).unwrap();
        assert_eq!(r.method, TestMethod::Exact);
        assert_eq!(r.p_value, 0.05);
        assert_eq!(r.statistic, 6.0);
    }

    #[test]
    fn identical_samples() {
        let a = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let r = wilcoxon_rank_sum(&a, &a, Alternative::TwoSided).unwrap();
        assert!(r.p_value >= 0.99);
    }

    #[test]
    fn large_shift_is_highly_significant() {
        let a: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..30).map(|i| i as f64 + 100.0).collect();
        let r = wilcoxon_rank_sum(&a, &b, Alternative::Less).unwrap();
        assert_eq!(r.method, TestMethod::NormalApprox);
        assert!(r.p_value < 1e-9);
    }

    #[test]
    fn empty_sample_rejected() {
        assert!(wilcoxon_rank_sum(&[], &[1.0], Alternative::Less).is_err());
    }

    #[test]
    fn star_thresholds() {
        assert_eq!(stars_str(0.005), "**");
        assert_eq!(stars_str(0.05), "*");
        assert_eq!(stars_str(0.2), "");
        assert_eq!(stars(0.001), 3);
        assert_eq!(stars(0.01), 2);
    }

    #[test]
    fn counts_sum_to_binomial() {
        let c = rank_sum_counts(14, 7);
        assert_eq!(c.iter().sum::<f64>(), 3432.0);
    }

    #[test]
    fn exact_and_approximate_agree() {
        let mut worst: f64 = 0.0;
        for n in 4..=7usize {
            for shift in 0..=2 * n {
                let a: Vec<f64> = (0..n).map(|i| (2 * i) as f64).collect();
                let b: Vec<f64> = (0..n).map(|i| (2 * i + 2 * shift) as f64 + 1.0).collect();
                for alt in [Alternative::Less, Alternative::Greater, Alternative::TwoSided] {
                    let exact = wilcoxon_rank_sum(&a, &b, alt).unwrap();
                    let approx = approx_p(&a, &b, alt);
                    worst = worst.max((exact.p_value - approx).abs());
                }
            }
        }
        assert!(worst <= 0.03, "{worst}");
    }

    fn approx_p(a: &[f64], b: &[f64], alt: Alternative) -> f64 {
        let n = a.len() as f64;
        let m = b.len() as f64;
        let t = n + m;
        let combined: Vec<f64> = a.iter().chain(b).copied().collect();
        let w: f64 = midranks(&combined)[..a.len()].iter().sum();
        let mu = n * (t + 1.0) / 2.0;
        let sd = (n * m * (t + 1.0) / 12.0).sqrt();
        match alt {
            Alternative::Less => lower_tail((w - mu + 0.5) / sd),
            Alternative::Greater => upper_tail((w - mu - 0.5) / sd),
            Alternative::TwoSided => (2.0 * upper_tail(((w - mu).abs() - 0.5).max(0.0) / sd)).min(1.0),
        }
    }

    proptest! {
        #[test]
        fn swapping_samples_swaps_alternatives(
            a in proptest::collection::vec(-100.0f64..100.0, 1..25),
            b in proptest::collection::vec(-100.0f64..100.0, 1..25),
        ) {
            let l = wilcoxon_rank_sum(&a, &b, Alternative::Less).unwrap();
            let g = wilcoxon_rank_sum(&b, &a, Alternative::Greater).unwrap();
            prop_assert_eq!(l.p_value, g.p_value);
            let t = wilcoxon_rank_sum(&a, &b, Alternative::TwoSided).unwrap();
            prop_assert!((0.0..=1.0).contains(&t.p_value));
        }

        #[test]
        fn shifting_b_up_never_raises_less_p(
            a in proptest::collection::vec(0.0f64..1.0, 2..12),
            b in proptest::collection::vec(0.0f64..1.0, 2..12),
            shift in 0.0f64..0.5,
        ) {
            let b2: Vec<f64> = b.iter().map(|v| v + shift).collect();
            let overlap = a.iter().any(|x| b.contains(x) || b2.contains(x));
            prop_assume!(!overlap);
            let p0 = wilcoxon_rank_sum(&a, &b, Alternative::Less).unwrap().p_value;
            let p1 = wilcoxon_rank_sum(&a, &b2, Alternative::Less).unwrap().p_value;
            prop_assert!(p1 <= p0 + 1e-15);
        }

        #[test]
        fn stars_are_monotone(p in 0.0f64..1.0, q in 0.0f64..1.0) {
            let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
            prop_assert!(stars(lo) >= stars(hi));
        }
    }
}
