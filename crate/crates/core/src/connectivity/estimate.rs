use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::Explorer;
use crate::error::{Error, Result};
use crate::lattice::BallGraph;
use crate::params::{EdgeParams, UniformStream};

/// Monte Carlo estimate of a probability with a Wilson score interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub count: u64,
    pub samples: u64,
    pub seed: u64,
    pub level: f64,
}

impl Estimate {
    pub fn from_counts(count: u64, samples: u64, seed: u64, level: f64) -> Result<Self> {
        let (ci_low, ci_high) = wilson_interval(count, samples, level)?;
        Ok(Self {
            value: count as f64 / samples as f64,
            ci_low,
            ci_high,
            count,
            samples,
            seed,
            level,
        })
    }

    /// Estimate of the complementary event, interval flipped.
    pub fn complement(&self) -> Self {
        Self {
            value: 1.0 - self.value,
            ci_low: 1.0 - self.ci_high,
            ci_high: 1.0 - self.ci_low,
            count: self.samples - self.count,
            ..*self
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "confidence level {level} must lie in (0, 1)"
        )))
    }
}

fn normal_quantile(q: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(q)
}

/// Wilson score interval for `count` successes in `samples` trials.
///
/// When the count is 0 or `samples`, the degenerate side is pinned to 0 or 1
/// and the other side is the one-sided Wilson bound at `level`.
pub fn wilson_interval(count: u64, samples: u64, level: f64) -> Result<(f64, f64)> {
    check_level(level)?;
    if samples == 0 {
        return Err(Error::InvalidArgument(
            "at least one sample is required".into(),
        ));
    }
    if count > samples {
        return Err(Error::InvalidArgument("count exceeds samples".into()));
    }
    let n = samples as f64;
    if count == 0 || count == samples {
        let z = normal_quantile(level);
        let bound = z * z / (n + z * z);
        return Ok(if count == 0 {
            (0.0, bound)
        } else {
            (1.0 - bound, 1.0)
        });
    }
    let z = normal_quantile(0.5 + 0.5 * level);
    let phat = count as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z / denom * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    Ok(((center - half).max(0.0), (center + half).min(1.0)))
}

/// Estimates `P[source <-> S_n]` over sample streams `0..samples` of `seed`.
pub fn estimate_reach(
    g: &BallGraph,
    params: &EdgeParams,
    source: usize,
    n: usize,
    samples: u64,
    seed: u64,
    level: f64,
) -> Result<Estimate> {
    g.sphere_range(n)?;
    if params.len() != g.num_edges() {
        return Err(Error::LengthMismatch {
            expected: g.num_edges(),
            got: params.len(),
        });
    }
    if samples == 0 {
        return Err(Error::InvalidArgument(
            "at least one sample is required".into(),
        ));
    }
    check_level(level)?;
    let probs = params.as_slice();
    let count: u64 = (0..samples)
        .into_par_iter()
        .map_init(
            || (Explorer::new(g), UniformStream::new(seed, 0)),
            |(explorer, stream), index| {
                stream.reset(seed, index);
                explorer.reaches(g, source, n, |e| stream.get(e) <= probs[e]) as u64
            },
        )
        .sum();
    Estimate::from_counts(count, samples, seed, level)
}

/// Estimates `theta_n = P[0 <-> S_n]`; `pi_n` is [`Estimate::complement`].
pub fn estimate_theta(
    g: &BallGraph,
    params: &EdgeParams,
    n: usize,
    samples: u64,
    seed: u64,
    level: f64,
) -> Result<Estimate> {
    estimate_reach(g, params, g.origin(), n, samples, seed, level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_ball, Family};
    use crate::params::homogeneous;

    #[test]
    fn certain_event() {
        let g = build_ball(Family::Hypercubic, 2, 3).unwrap();
        let est = estimate_theta(&g, &homogeneous(&g, 1.0).unwrap(), 3, 1000, 1, 0.99).unwrap();
        assert_eq!(est.value, 1.0);
        assert!(est.ci_low < 1.0 && est.ci_high == 1.0);
    }

    #[test]
    fn line_closed_form() {
        let g = build_ball(Family::Hypercubic, 1, 6).unwrap();
        let est =
            estimate_theta(&g, &homogeneous(&g, 0.5).unwrap(), 2, 1_000_000, 2, 0.99).unwrap();
        assert!((est.value - 0.4375).abs() < 0.002, "{est:?}");
    }

    #[test]
    fn star_closed_form() {
        let g = build_ball(Family::Hypercubic, 2, 1).unwrap();
        let est =
            estimate_theta(&g, &homogeneous(&g, 0.5).unwrap(), 1, 1_000_000, 3, 0.99).unwrap();
        assert!((est.value - 0.9375).abs() < 0.002, "{est:?}");
    }

    #[test]
    fn wilson_edges() {
        let (lo, hi) = wilson_interval(0, 100, 0.99).unwrap();
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.1);
        let (lo, hi) = wilson_interval(100, 100, 0.99).unwrap();
        assert_eq!(hi, 1.0);
        assert!(lo > 0.9);
        let (lo, hi) = wilson_interval(50, 100, 0.95).unwrap();
        assert!(lo < 0.5 && hi > 0.5);
        // Textbook value: 50/100 at 95% gives roughly [0.4038, 0.5962].
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
        assert!(wilson_interval(1, 0, 0.9).is_err());
        assert!(wilson_interval(1, 10, 1.0).is_err());
    }

    #[test]
    fn complement_flips() {
        let e = Estimate::from_counts(30, 100, 0, 0.99).unwrap();
        let c = e.complement();
        assert!((c.value - 0.7).abs() < 1e-15);
        assert!((c.ci_low - (1.0 - e.ci_high)).abs() < 1e-15);
        assert!(c.ci_low <= c.value && c.value <= c.ci_high);
    }

    #[test]
    fn monotone_in_radius_with_common_numbers() {
        let g = build_ball(Family::Hypercubic, 2, 8).unwrap();
        let params = homogeneous(&g, 0.5).unwrap();
        let mut last = u64::MAX;
        for n in 1..=8 {
            let est = estimate_theta(&g, &params, n, 5000, 4, 0.99).unwrap();
            assert!(est.count <= last);
            last = est.count;
        }
    }

    #[test]
    fn thread_count_does_not_change_counts() {
        let g = build_ball(Family::Hypercubic, 2, 6).unwrap();
        let params = homogeneous(&g, 0.5).unwrap();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap();
        let a = one.install(|| estimate_theta(&g, &params, 6, 20_000, 17, 0.99).unwrap());
        let b = many.install(|| estimate_theta(&g, &params, 6, 20_000, 17, 0.99).unwrap());
        assert_eq!(a, b);
    }
}
