//! Seeded randomness, multinomial shot noise and stratified bootstrap.
//!
//! Every random stream is a ChaCha20 generator seeded from a [`Seed`]. Bootstrap
//! resample `k` draws from stream `k` of the same key, so results do not depend
//! on how resamples are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tomography::CountsRecord;

/// Default number of bootstrap resamples.
pub const DEFAULT_RESAMPLES: usize = 500;

/// Largest fraction of failed resamples a report tolerates.
pub const MAX_FAILURE_FRACTION: f64 = 0.05;

/// Explicit 64-bit seed for a deterministic ChaCha20 stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u64);

impl Seed {
    pub fn rng(self) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(self.0)
    }

    /// Independent stream `index` under the same key.
    pub fn substream(self, index: u64) -> ChaCha20Rng {
        let mut rng = self.rng();
        rng.set_stream(index);
        rng
    }

    /// A different seed derived from this one, for chaining pipeline stages.
    pub fn derive(self, tag: u64) -> Seed {
        Seed(self.substream(tag.wrapping_add(1 << 32)).random())
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

/// Draws `n` shots from a categorical distribution by sequential conditional binomials.
pub fn multinomial_sample<R: Rng + ?Sized>(probabilities: &[f64], n: u64, rng: &mut R) -> Result<Vec<u64>> {
    if probabilities.is_empty() {
        return Err(Error::Probabilities("empty probability vector".into()));
    }
    if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::Probabilities(format!("{probabilities:?} has negative entries")));
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Probabilities(format!("probabilities sum to {total}")));
    }
    let mut counts = vec![0u64; probabilities.len()];
    let mut remaining = n;
    let mut mass = 1.0;
    let last = probabilities.len() - 1;
    for (k, &p) in probabilities.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k == last {
            counts[k] = remaining;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = if q >= 1.0 {
            remaining
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining, q)
                .map_err(|e| Error::Probabilities(e.to_string()))?
                .sample(rng)
        };
        counts[k] = draw;
        remaining -= draw;
        mass -= p;
    }
    Ok(counts)
}

/// Summary of a bootstrap distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub statistic: String,
    pub point_estimate: f64,
    pub resamples: usize,
    pub failures: usize,
    pub mean: f64,
    pub median: f64,
    pub standard_error: f64,
    /// 2.5% and 97.5% percentiles.
    pub interval: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub values: Option<Vec<f64>>,
}

/// Resamples each setting's shots with replacement, keeping the shot count.
pub fn resample_records<R: Rng + ?Sized>(records: &[CountsRecord], rng: &mut R) -> Vec<CountsRecord> {
    records
        .iter()
        .map(|rec| {
            let mut counts = vec![0u64; rec.counts.len()];
            for _ in 0..rec.shots() {
                let mut pick = rng.random_range(0..rec.shots());
                for (k, &c) in rec.counts.iter().enumerate() {
                    if pick < c {
                        counts[k] += 1;
                        break;
                    }
                    pick -= c;
                }
            }
            CountsRecord {
                setting: rec.setting,
                counts,
            }
        })
        .collect()
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Bootstraps `statistic` over stratified resamples of `records`.
///
/// Failed evaluations are dropped; more than 5% failures is an error.
pub fn bootstrap<F>(
    name: &str,
    records: &[CountsRecord],
    n_resamples: usize,
    statistic: F,
    seed: Seed,
    keep_values: bool,
) -> Result<BootstrapReport>
where
    F: Fn(&[CountsRecord]) -> Result<f64> + Sync,
{
    if n_resamples < 100 {
        return Err(crate::error::invalid("n_resamples", format!("{n_resamples} < 100")));
    }
    let point_estimate = statistic(records)?;
    let outcomes: Vec<Option<f64>> = (0..n_resamples as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = seed.substream(k);
            let sample = resample_records(records, &mut rng);
            statistic(&sample).ok().filter(|v| v.is_finite())
        })
        .collect();
    let mut values: Vec<f64> = outcomes.iter().flatten().copied().collect();
    let failures = n_resamples - values.len();
    if failures as f64 > MAX_FAILURE_FRACTION * n_resamples as f64 || values.len() < 2 {
        return Err(Error::Bootstrap {
            failed: failures,
            total: n_resamples,
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let report = BootstrapReport {
        statistic: name.to_string(),
        point_estimate,
        resamples: n_resamples,
        failures,
        mean,
        median: percentile(&sorted, 0.5),
        standard_error: var.sqrt(),
        interval: [percentile(&sorted, 0.025), percentile(&sorted, 0.975)],
        values: keep_values.then(|| std::mem::take(&mut values)),
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tomography::MeasurementSetting;

    fn record(counts: [u64; 4]) -> CountsRecord {
        CountsRecord {
            setting: MeasurementSetting::ZZ,
            counts: counts.to_vec(),
        }
    }

    fn first_frequency(r: &[CountsRecord]) -> Result<f64> {
        Ok(r[0].counts[0] as f64 / r[0].shots() as f64)
    }

    #[test]
    fn deterministic_outcome() {
        let mut rng = Seed(1).rng();
        assert_eq!(multinomial_sample(&[1.0, 0.0, 0.0, 0.0], 200, &mut rng).unwrap(), vec![200, 0, 0, 0]);
    }

    #[test]
    fn uniform_large_sample_within_four_sigma() {
        let mut rng = Seed(2).rng();
        let n = 1_000_000;
        let c = multinomial_sample(&[0.25; 4], n, &mut rng).unwrap();
        assert_eq!(c.iter().sum::<u64>(), n);
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        for k in c {
            assert!((k as f64 - 250_000.0).abs() < 4.0 * sigma);
        }
    }

    #[test]
    fn same_seed_same_counts() {
        let p = [0.1, 0.2, 0.3, 0.4];
        let a = multinomial_sample(&p, 500, &mut Seed(9).rng()).unwrap();
        let b = multinomial_sample(&p, 500, &mut Seed(9).rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_probabilities() {
        let mut rng = Seed(0).rng();
        assert!(multinomial_sample(&[0.5, 0.6], 10, &mut rng).is_err());
        assert!(multinomial_sample(&[1.5, -0.5], 10, &mut rng).is_err());
        assert!(multinomial_sample(&[], 10, &mut rng).is_err());
    }

    #[test]
    fn zero_variance_data() {
        let recs = [record([200, 0, 0, 0])];
        let r = bootstrap("p_uu", &recs, 200, first_frequency, Seed(3), false).unwrap();
        assert_eq!(r.standard_error, 0.0);
        assert_eq!(r.interval, [1.0, 1.0]);
    }

    #[test]
    fn linear_statistic_matches_binomial_error() {
        let recs = [record([100, 50, 0, 50])];
        let r = bootstrap("p_uu", &recs, 4000, first_frequency, Seed(4), false).unwrap();
        let analytic = (0.5f64 * 0.5 / 200.0).sqrt();
        assert!((r.standard_error / analytic - 1.0).abs() < 0.15, "{}", r.standard_error);
        assert!(r.interval[0] <= r.median && r.median <= r.interval[1]);
    }

    #[test]
    fn resampled_marginals_match_empirical() {
        let recs = [record([60, 40, 70, 30])];
        let mut rng = Seed(5).rng();
        let n = 1000;
        let mut sums = [0.0; 4];
        for _ in 0..n {
            let s = resample_records(&recs, &mut rng);
            assert_eq!(s[0].shots(), 200);
            for k in 0..4 {
                sums[k] += s[0].counts[k] as f64 / 200.0;
            }
        }
        for (k, &c) in recs[0].counts.iter().enumerate() {
            let p = c as f64 / 200.0;
            let se = (p * (1.0 - p) / 200.0 / n as f64).sqrt();
            assert!((sums[k] / n as f64 - p).abs() < 3.0 * se);
        }
    }

    #[test]
    fn bootstrap_is_reproducible() {
        let recs = [record([80, 40, 30, 50])];
        let a = bootstrap("p", &recs, 300, first_frequency, Seed(6), true).unwrap();
        let b = bootstrap("p", &recs, 300, first_frequency, Seed(6), true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_many_failures_invalidate() {
        let recs = [record([80, 40, 30, 50])];
        let flaky = |r: &[CountsRecord]| {
            if r[0].counts[0] % 2 == 0 {
                Err(Error::Numerical("odd".into()))
            } else {
                Ok(1.0)
            }
        };
        // the point estimate (80 counts) fails first
        assert!(bootstrap("x", &recs, 200, flaky, Seed(1), false).is_err());
        let recs = [record([81, 40, 30, 49])];
        assert!(matches!(
            bootstrap("x", &recs, 200, flaky, Seed(1), false),
            Err(Error::Bootstrap { .. })
        ));
    }

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 1.0), 4.0);
        assert!((percentile(&v, 0.5) - 2.5).abs() < 1e-15);
    }
}
