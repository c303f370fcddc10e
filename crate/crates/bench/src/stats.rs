//! Sample statistics, generic over the sample's numeric type.

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("no samples")]
    EmptySamples,
    #[error("sample {0} is not comparable (NaN?)")]
    NotComparable(usize),
}

/// `mean` is exact arithmetic mean; the order statistics use lower
/// interpolation, so they are always actual samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats<T> {
    pub n: usize,
    pub mean: f64,
    pub median: T,
    pub p95: T,
    pub min: T,
    pub max: T,
}

impl<T: Copy> LatencyStats<T> {
    pub fn map<U>(&self, f: impl Fn(T) -> U, mean: impl Fn(f64) -> f64) -> LatencyStats<U> {
        LatencyStats {
            n: self.n,
            mean: mean(self.mean),
            median: f(self.median),
            p95: f(self.p95),
            min: f(self.min),
            max: f(self.max),
        }
    }
}

/// `sorted[floor(q * (n - 1))]`.
pub fn percentile_lower<T: Copy>(sorted: &[T], q: f64) -> Option<T> {
    if sorted.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let idx = (q * (sorted.len() - 1) as f64).floor() as usize;
    sorted.get(idx).copied()
}

pub fn summarize<T>(samples: &[T]) -> Result<LatencyStats<T>, StatsError>
where
    T: Copy + PartialOrd + ToPrimitive,
{
    if samples.is_empty() {
        return Err(StatsError::EmptySamples);
    }
    if let Some(i) = samples.iter().position(|x| x.partial_cmp(x).is_none()) {
        return Err(StatsError::NotComparable(i));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("checked above"));
    let sum: f64 = samples.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).sum();
    let p = |q| percentile_lower(&sorted, q).expect("non-empty");
    Ok(LatencyStats {
        n: samples.len(),
        mean: sum / samples.len() as f64,
        median: p(0.5),
        p95: p(0.95),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_cases() {
        let s = summarize(&[1u64, 2, 3]).unwrap();
        assert_eq!((s.mean, s.median), (2.0, 2));
        let s = summarize(&[1u64, 1, 1, 100]).unwrap();
        assert_eq!((s.mean, s.median, s.max), (25.75, 1, 100));
        assert_eq!(summarize::<u64>(&[]), Err(StatsError::EmptySamples));
        assert_eq!(summarize(&[1.0, f64::NAN]), Err(StatsError::NotComparable(1)));
    }

    #[test]
    fn lower_interpolation() {
        let v: Vec<u32> = (1..=20).collect();
        assert_eq!(percentile_lower(&v, 0.5), Some(10));
        assert_eq!(percentile_lower(&v, 0.95), Some(19));
        assert_eq!(percentile_lower(&v, 1.0), Some(20));
        let s = summarize(&[4.0f32, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.median, 2.0);
    }

    proptest! {
        #[test]
        fn ordering_invariants(v in proptest::collection::vec(0u64..1_000_000, 1..200)) {
            let s = summarize(&v).unwrap();
            prop_assert_eq!(s.n, v.len());
            prop_assert!(s.min <= s.median && s.median <= s.p95 && s.p95 <= s.max);
            prop_assert!(s.mean >= s.min as f64 && s.mean <= s.max as f64);
            prop_assert!(v.contains(&s.median));
        }
    }
}
