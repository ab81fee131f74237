//! Spacings entropy estimators.
//!
//! All four estimators average `log(n * spacing / (w_i * m))` over the
//! ordered sample, where `spacing = x(i+m) - x(i-m)` with indices clamped to
//! `[1, n]`. Vasicek uses a constant weight `w_i = 2`; the Ebrahimi correction
//! shrinks the weight near the ends where the clamped window is shorter.
//! The RSS estimators apply the corrected form either to the pooled ordered
//! sample ([`h1`]) or to every cycle separately ([`h2`]).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{sort_f64, RankedSetSample, SimpleSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Vasicek,
    Ebrahimi,
    /// Corrected estimator on the pooled, fully ordered RSS sample.
    #[serde(rename = "h1")]
    RssPooledH1,
    /// Corrected estimator on each cycle ordered separately.
    #[serde(rename = "h2")]
    RssPerCycleH2,
}

impl Estimator {
    pub fn is_rss(self) -> bool {
        matches!(self, Estimator::RssPooledH1 | Estimator::RssPerCycleH2)
    }

    /// Largest admissible window for an RSS design with set size `k` and
    /// `r` cycles (SRS estimators use `n = k * r`).
    pub fn max_window(self, k: usize, r: usize) -> usize {
        match self {
            Estimator::RssPerCycleH2 => k / 2,
            _ => k * r / 2,
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Vasicek => "vasicek",
            Estimator::Ebrahimi => "ebrahimi",
            Estimator::RssPooledH1 => "h1",
            Estimator::RssPerCycleH2 => "h2",
        })
    }
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vasicek" => Ok(Estimator::Vasicek),
            "ebrahimi" => Ok(Estimator::Ebrahimi),
            "h1" => Ok(Estimator::RssPooledH1),
            "h2" => Ok(Estimator::RssPerCycleH2),
            other => Err(Error::InvalidParameter(format!(
                "unknown estimator `{other}` (expected vasicek, ebrahimi, h1 or h2)"
            ))),
        }
    }
}

/// Spacing half-width `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WindowSpec(usize);

impl WindowSpec {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidWindow { m, max: 0 });
        }
        Ok(WindowSpec(m))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Checks `m <= floor(n / 2)` for an ordered sample of size `n`.
    pub fn check(self, n: usize) -> Result<usize> {
        if self.0 > n / 2 {
            return Err(Error::InvalidWindow { m: self.0, max: n / 2 });
        }
        Ok(self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyEstimate {
    pub value: f64,
    pub estimator: Estimator,
    pub n: usize,
    pub m: usize,
}

/// Ebrahimi weight `c_i` for one-based index `i`.
#[inline]
fn corrected_weight(i: usize, n: usize, m: usize) -> f64 {
    if i <= m {
        1.0 + (i - 1) as f64 / m as f64
    } else if i <= n - m {
        2.0
    } else {
        1.0 + (n - i) as f64 / m as f64
    }
}

/// The weights `c_1..c_n` of the corrected estimator.
pub fn ebrahimi_weights(n: usize, m: usize) -> Vec<f64> {
    (1..=n).map(|i| corrected_weight(i, n, m)).collect()
}

/// Sum over `i` of `log(n * (x(i+m) - x(i-m)) / (w_i * m))`.
fn log_spacing_sum(sorted: &[f64], m: usize, corrected: bool) -> Result<f64> {
    let n = sorted.len();
    let scale = n as f64 / m as f64;
    let mut sum = 0.0;
    for i in 0..n {
        let hi = sorted[(i + m).min(n - 1)];
        let lo = sorted[i.saturating_sub(m)];
        let spacing = hi - lo;
        if !(spacing > 0.0) {
            return Err(Error::DegenerateSpacing { index: i + 1 });
        }
        let w = if corrected { corrected_weight(i + 1, n, m) } else { 2.0 };
        sum += (scale * spacing / w).ln();
    }
    Ok(sum)
}

fn check_sorted_input(sorted: &[f64], m: usize) -> Result<()> {
    if sorted.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: sorted.len() });
    }
    WindowSpec::new(m)?.check(sorted.len())?;
    Ok(())
}

/// Vasicek estimate on an ascending slice.
pub fn vasicek_sorted(sorted: &[f64], m: usize) -> Result<f64> {
    check_sorted_input(sorted, m)?;
    Ok(log_spacing_sum(sorted, m, false)? / sorted.len() as f64)
}

/// Ebrahimi estimate on an ascending slice.
pub fn ebrahimi_sorted(sorted: &[f64], m: usize) -> Result<f64> {
    check_sorted_input(sorted, m)?;
    Ok(log_spacing_sum(sorted, m, true)? / sorted.len() as f64)
}

/// Per-cycle estimate: each element of `cycles` is one ascending cycle of
/// length `k`. The result is the mean of all `r * k` log terms.
pub fn per_cycle_sorted<'a, I>(cycles: I, m: usize) -> Result<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut total = 0.0;
    let mut count = 0usize;
    for cycle in cycles {
        check_sorted_input(cycle, m)?;
        total += log_spacing_sum(cycle, m, true)?;
        count += cycle.len();
    }
    if count == 0 {
        return Err(Error::InsufficientData { needed: 2, got: 0 });
    }
    Ok(total / count as f64)
}

pub fn vasicek(sample: &SimpleSample, m: WindowSpec) -> Result<EntropyEstimate> {
    let value = vasicek_sorted(&sample.sorted_values(), m.get())?;
    Ok(EntropyEstimate { value, estimator: Estimator::Vasicek, n: sample.len(), m: m.get() })
}

pub fn ebrahimi(sample: &SimpleSample, m: WindowSpec) -> Result<EntropyEstimate> {
    let value = ebrahimi_sorted(&sample.sorted_values(), m.get())?;
    Ok(EntropyEstimate { value, estimator: Estimator::Ebrahimi, n: sample.len(), m: m.get() })
}

/// Corrected estimator on the pooled ordered RSS sample of size `r * k`.
pub fn h1(rss: &RankedSetSample, m: WindowSpec) -> Result<EntropyEstimate> {
    let mut pooled = rss.pooled().to_vec();
    sort_f64(&mut pooled);
    let value = ebrahimi_sorted(&pooled, m.get())?;
    Ok(EntropyEstimate { value, estimator: Estimator::RssPooledH1, n: rss.n(), m: m.get() })
}

/// Corrected estimator with each cycle ordered separately (window bound
/// `m <= k / 2`).
pub fn h2(rss: &RankedSetSample, m: WindowSpec) -> Result<EntropyEstimate> {
    let mut buf = rss.pooled().to_vec();
    for cycle in buf.chunks_exact_mut(rss.k()) {
        sort_f64(cycle);
    }
    let value = per_cycle_sorted(buf.chunks_exact(rss.k()), m.get())?;
    Ok(EntropyEstimate { value, estimator: Estimator::RssPerCycleH2, n: rss.n(), m: m.get() })
}

/// Dispatches an RSS dataset to `h1`/`h2`, or the SRS estimators applied to
/// the pooled values.
pub fn estimate_rss(rss: &RankedSetSample, estimator: Estimator, m: WindowSpec) -> Result<EntropyEstimate> {
    match estimator {
        Estimator::RssPooledH1 => h1(rss, m),
        Estimator::RssPerCycleH2 => h2(rss, m),
        Estimator::Vasicek => vasicek(&SimpleSample::new(rss.pooled().to_vec())?, m),
        Estimator::Ebrahimi => ebrahimi(&SimpleSample::new(rss.pooled().to_vec())?, m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn w(m: usize) -> WindowSpec {
        WindowSpec::new(m).unwrap()
    }

    fn s(v: &[f64]) -> SimpleSample {
        SimpleSample::new(v.to_vec()).unwrap()
    }

    #[test]
    fn weights_n4_m1() {
        assert_eq!(ebrahimi_weights(4, 1), vec![1.0, 2.0, 2.0, 1.0]);
        let expected = [1.0, 4.0 / 3.0, 5.0 / 3.0, 5.0 / 3.0, 4.0 / 3.0, 1.0];
        for (c, e) in ebrahimi_weights(6, 3).iter().zip(expected) {
            assert_relative_eq!(*c, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn hand_values() {
        let x = s(&[1.0, 2.0, 3.0, 4.0]);
        assert_relative_eq!(vasicek(&x, w(1)).unwrap().value, 1.5 * 2f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(ebrahimi(&x, w(1)).unwrap().value, 4f64.ln(), epsilon = 1e-14);
        let doubled = s(&[2.0, 4.0, 6.0, 8.0]);
        assert_relative_eq!(
            vasicek(&doubled, w(1)).unwrap().value,
            1.5 * 2f64.ln() + 2f64.ln(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn unsorted_input_is_sorted_first() {
        let a = ebrahimi(&s(&[4.0, 1.0, 3.0, 2.0]), w(1)).unwrap().value;
        assert_relative_eq!(a, 4f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn ties_and_windows() {
        assert_eq!(
            vasicek(&s(&[1.0, 1.0, 1.0, 1.0]), w(1)),
            Err(Error::DegenerateSpacing { index: 1 })
        );
        assert_eq!(vasicek(&s(&[1.0, 2.0, 3.0, 4.0]), w(3)), Err(Error::InvalidWindow { m: 3, max: 2 }));
        assert!(WindowSpec::new(0).is_err());
        assert!(matches!(vasicek(&s(&[1.0]), w(1)), Err(Error::InsufficientData { .. })));
        // a single tie inside a window of width 2 is fine
        assert!(vasicek(&s(&[1.0, 2.0, 2.0, 3.0]), w(1)).is_ok());
    }

    #[test]
    fn rss_reductions() {
        let rss = RankedSetSample::from_rows(vec![vec![0.3, 1.2, 0.7, 2.5, 1.9, 0.1]]).unwrap();
        let sorted = SimpleSample::new(rss.pooled().to_vec()).unwrap();
        for m in 1..=3 {
            let e = ebrahimi(&sorted, w(m)).unwrap().value;
            assert_relative_eq!(h1(&rss, w(m)).unwrap().value, e, epsilon = 1e-12);
            assert_relative_eq!(h2(&rss, w(m)).unwrap().value, e, epsilon = 1e-12);
        }
        let twice = RankedSetSample::from_rows(vec![rss.cycle(0).to_vec(), rss.cycle(0).to_vec()]).unwrap();
        assert_relative_eq!(
            h2(&twice, w(2)).unwrap().value,
            h2(&rss, w(2)).unwrap().value,
            epsilon = 1e-12
        );
        // h2 windows are bounded by k/2, not rk/2
        assert!(matches!(h2(&twice, w(4)), Err(Error::InvalidWindow { m: 4, max: 3 })));
        assert!(h1(&twice, w(4)).is_ok());
    }

    #[test]
    fn estimator_names_round_trip() {
        for e in [Estimator::Vasicek, Estimator::Ebrahimi, Estimator::RssPooledH1, Estimator::RssPerCycleH2] {
            assert_eq!(e.to_string().parse::<Estimator>().unwrap(), e);
        }
        assert!("kde".parse::<Estimator>().is_err());
    }
}
