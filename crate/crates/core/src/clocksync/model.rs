use serde::{Deserialize, Serialize};

/// Drift model `offset(t) = slope * t + intercept`, where `t` is a client's
/// own clock and `offset` the difference between the client and its
/// reference.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinearModel {
    pub slope: f64,
    pub intercept: f64,
}

impl LinearModel {
    pub const IDENTITY: Self = Self { slope: 0.0, intercept: 0.0 };

    pub fn new(slope: f64, intercept: f64) -> Self {
        Self { slope, intercept }
    }

    pub fn offset_at(&self, t_local: f64) -> f64 {
        self.slope * t_local + self.intercept
    }

    pub fn to_vec(self) -> [f64; 2] {
        [self.slope, self.intercept]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self { slope: v[0], intercept: v[1] }
    }
}

/// Confidence box around a [`LinearModel`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelInterval {
    pub slope_lo: f64,
    pub slope_hi: f64,
    pub intercept_lo: f64,
    pub intercept_hi: f64,
}

impl ModelInterval {
    pub fn point(lm: LinearModel) -> Self {
        Self {
            slope_lo: lm.slope,
            slope_hi: lm.slope,
            intercept_lo: lm.intercept,
            intercept_hi: lm.intercept,
        }
    }

    pub fn contains(&self, lm: LinearModel, tol: f64) -> bool {
        lm.slope >= self.slope_lo - tol
            && lm.slope <= self.slope_hi + tol
            && lm.intercept >= self.intercept_lo - tol
            && lm.intercept <= self.intercept_hi + tol
    }

    /// The four (slope, intercept) corners.
    pub fn corners(&self) -> [LinearModel; 4] {
        [
            LinearModel::new(self.slope_lo, self.intercept_lo),
            LinearModel::new(self.slope_lo, self.intercept_hi),
            LinearModel::new(self.slope_hi, self.intercept_lo),
            LinearModel::new(self.slope_hi, self.intercept_hi),
        ]
    }
}

/// Chains two models. `lm1` maps an intermediate clock `m` onto its
/// reference `r`; `lm2` maps a client `c` onto `m`. The result maps `c`
/// onto `r`. Each model is expressed in its client's own time.
pub fn merge_lms(lm1: LinearModel, lm2: LinearModel) -> LinearModel {
    LinearModel {
        slope: lm1.slope + lm2.slope - lm1.slope * lm2.slope,
        intercept: lm1.intercept + lm2.intercept - lm2.intercept * lm1.slope,
    }
}

fn products(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let p = [a.0 * b.0, a.0 * b.1, a.1 * b.0, a.1 * b.1];
    let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Interval form of [`merge_lms`]: each bilinear product term is bounded by
/// its extreme corner values.
pub fn merge_model_intervals(a: ModelInterval, b: ModelInterval) -> ModelInterval {
    let (ss_lo, ss_hi) = products((a.slope_lo, a.slope_hi), (b.slope_lo, b.slope_hi));
    let (is_lo, is_hi) = products((b.intercept_lo, b.intercept_hi), (a.slope_lo, a.slope_hi));
    ModelInterval {
        slope_lo: a.slope_lo + b.slope_lo - ss_hi,
        slope_hi: a.slope_hi + b.slope_hi - ss_lo,
        intercept_lo: a.intercept_lo + b.intercept_lo - is_hi,
        intercept_hi: a.intercept_hi + b.intercept_hi - is_lo,
    }
}

/// Maps a local timestamp onto the reference clock's time base.
pub fn normalize_time(lm: LinearModel, t_local: f64) -> f64 {
    t_local - (t_local * lm.slope + lm.intercept)
}

/// A rank's view of global time: local readings are shifted by `origin`
/// and then normalized with `model`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GlobalClock {
    pub origin: f64,
    pub model: LinearModel,
}

impl GlobalClock {
    /// Clock defined by a constant offset `local - global`.
    pub fn from_offset(offset: f64) -> Self {
        Self { origin: 0.0, model: LinearModel::new(0.0, offset) }
    }

    pub fn global(&self, t_local: f64) -> f64 {
        normalize_time(self.model, t_local - self.origin)
    }

    /// Local reading at which [`GlobalClock::global`] equals `g`.
    pub fn local_for(&self, g: f64) -> f64 {
        self.origin + (g + self.model.intercept) / (1.0 - self.model.slope)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_is_two_sided() {
        let m = LinearModel::new(3e-6, -0.25);
        assert_eq!(merge_lms(LinearModel::IDENTITY, m), m);
        assert_eq!(merge_lms(m, LinearModel::IDENTITY), m);
    }

    #[test]
    fn direct_substitution() {
        let m = merge_lms(LinearModel::new(0.5, 1.0), LinearModel::new(0.5, 2.0));
        assert_eq!(m, LinearModel::new(0.75, 2.0));
    }

    #[test]
    fn point_intervals_reduce_to_merge() {
        let a = LinearModel::new(1e-5, 0.3);
        let b = LinearModel::new(-4e-6, -0.1);
        let m = merge_model_intervals(ModelInterval::point(a), ModelInterval::point(b));
        let expected = merge_lms(a, b);
        assert_eq!(m.slope_lo, expected.slope);
        assert_eq!(m.slope_hi, expected.slope);
        assert!((m.intercept_lo - expected.intercept).abs() < 1e-15);
        assert!((m.intercept_hi - expected.intercept).abs() < 1e-15);
    }

    #[test]
    fn zero_slope_intervals_add_intercepts() {
        let a = ModelInterval { slope_lo: 0.0, slope_hi: 0.0, intercept_lo: 1.0, intercept_hi: 2.0 };
        let b = ModelInterval { slope_lo: 0.0, slope_hi: 0.0, intercept_lo: 3.0, intercept_hi: 4.0 };
        let m = merge_model_intervals(a, b);
        assert_eq!((m.intercept_lo, m.intercept_hi), (4.0, 6.0));
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_time(LinearModel::IDENTITY, 10.0), 10.0);
        let v = normalize_time(LinearModel::new(1e-6, 0.5), 100.0);
        assert!((v - 99.4999).abs() < 1e-12);
    }

    #[test]
    fn global_clock_inverse() {
        let g = GlobalClock { origin: 12.5, model: LinearModel::new(3e-6, 1e-4) };
        for t in [12.5, 13.0, 100.0] {
            assert!((g.local_for(g.global(t)) - t).abs() < 1e-12);
        }
    }

    fn interval() -> impl Strategy<Value = ModelInterval> {
        (-1e-4f64..1e-4, 0.0f64..1e-5, -1.0f64..1.0, 0.0f64..1e-3).prop_map(|(s, ds, i, di)| {
            ModelInterval { slope_lo: s, slope_hi: s + ds, intercept_lo: i, intercept_hi: i + di }
        })
    }

    proptest! {
        #[test]
        fn interval_merge_is_sound(a in interval(), b in interval()) {
            let m = merge_model_intervals(a, b);
            for x in a.corners() {
                for y in b.corners() {
                    prop_assert!(m.contains(merge_lms(x, y), 1e-15));
                }
            }
        }

        #[test]
        fn exact_chains_are_associative(
            s in proptest::collection::vec(-1e-4f64..1e-4, 3),
            i in proptest::collection::vec(-1.0f64..1.0, 3),
        ) {
            let m: Vec<_> = (0..3).map(|k| LinearModel::new(s[k], i[k])).collect();
            let left = merge_lms(merge_lms(m[0], m[1]), m[2]);
            let right = merge_lms(m[0], merge_lms(m[1], m[2]));
            prop_assert!((left.slope - right.slope).abs() <= 1e-9 * left.slope.abs().max(1e-12));
            prop_assert!((left.intercept - right.intercept).abs() <= 1e-9 * left.intercept.abs().max(1e-9));
        }
    }
}
