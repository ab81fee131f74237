//! Moment estimators: the RSS mean, Stokes and MacEachern variances, and the
//! Park breakpoint construction with the moments of its piecewise-uniform
//! density (used by the SRS baseline statistics).

use crate::error::{Error, Result};
use crate::sampling::{RankedSetSample, SimpleSample};

/// All RSS moment estimates computed in one pass.
#[derive(Debug, Clone, PartialEq)]
pub struct RssMoments {
    pub mean: f64,
    pub stokes_var: f64,
    /// `None` when `r < 2` or `k < 2`.
    pub maceachern_var: Option<f64>,
    pub mst: f64,
    pub mse: f64,
    pub per_rank_means: Vec<f64>,
}

impl RssMoments {
    pub fn compute(rss: &RankedSetSample) -> Result<Self> {
        let (k, r, n) = (rss.k(), rss.r(), rss.n());
        if n < 2 {
            return Err(Error::InsufficientData { needed: 2, got: n });
        }
        let mean = rss_mean(rss);
        let per_rank_means: Vec<f64> = (0..k)
            .map(|j| (0..r).map(|i| rss.get(i, j)).sum::<f64>() / r as f64)
            .collect();
        let total_ss: f64 = rss.pooled().iter().map(|x| (x - mean).powi(2)).sum();
        let within_ss: f64 = rss
            .cycles()
            .map(|c| c.iter().zip(&per_rank_means).map(|(x, m)| (x - m).powi(2)).sum::<f64>())
            .sum();
        let stokes_var = total_ss / (n - 1) as f64;
        let (mst, mse, maceachern_var) = if k >= 2 && r >= 2 {
            let mst = (total_ss - within_ss) / (k - 1) as f64;
            let mse = within_ss / (k * (r - 1)) as f64;
            let var = ((k - 1) as f64 * mst + (n - k + 1) as f64 * mse) / n as f64;
            (mst, mse, Some(var))
        } else {
            (f64::NAN, f64::NAN, None)
        };
        Ok(RssMoments { mean, stokes_var, maceachern_var, mst, mse, per_rank_means })
    }
}

/// Grand mean of all `r * k` measurements.
pub fn rss_mean(rss: &RankedSetSample) -> f64 {
    rss.pooled().iter().sum::<f64>() / rss.n() as f64
}

/// Pooled sample variance with divisor `rk - 1`.
pub fn stokes_variance(rss: &RankedSetSample) -> Result<f64> {
    let n = rss.n();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let mean = rss_mean(rss);
    Ok(rss.pooled().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64)
}

/// Unbiased variance `((k-1) MST + (rk-k+1) MSE) / rk`.
///
/// Can be negative in finite samples.
pub fn maceachern_variance(rss: &RankedSetSample) -> Result<f64> {
    if rss.k() < 2 {
        return Err(Error::InsufficientSetSize(rss.k()));
    }
    if rss.r() < 2 {
        return Err(Error::InsufficientCycles(rss.r()));
    }
    Ok(RssMoments::compute(rss)?.maceachern_var.expect("k, r >= 2"))
}

/// Breakpoints `eta_1 < ... < eta_{n+1}` of the piecewise-uniform density
/// that puts mass `1/n` on each interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ParkBreakpoints {
    pub eta: Vec<f64>,
    pub m: usize,
    pub n: usize,
}

/// Builds breakpoints from an ascending slice.
pub fn park_breakpoints_sorted(x: &[f64], m: usize) -> Result<ParkBreakpoints> {
    let n = x.len();
    if m == 0 || n < 2 * m {
        return Err(Error::InvalidWindow { m, max: n / 2 });
    }
    // one-based order statistic
    let xo = |i: usize| x[i - 1];
    let mut eta = vec![0.0; n + 1];
    let two_m = (2 * m) as f64;

    // interior: i = m+1 ..= n-m+1, running window sum of x(i-m) ..= x(i+m-1)
    let mut window: f64 = (1..=2 * m).map(xo).sum();
    eta[m] = window / two_m;
    for i in m + 2..=n - m + 1 {
        window += xo(i + m - 1) - xo(i - m - 1);
        eta[i - 1] = window / two_m;
    }

    // lower tail: eta_i = eta_{m+1} - sum_{j=i}^{m} (x(m+j) - x(1)) / (m+j-1)
    let mut acc = 0.0;
    for i in (1..=m).rev() {
        acc += (xo(m + i) - xo(1)) / (m + i - 1) as f64;
        eta[i - 1] = eta[m] - acc;
    }

    // upper tail: eta_i = eta_{n-m+1} + sum_{j=n-m+2}^{i} (x(n) - x(j-m-1)) / (n+m-j+1)
    let anchor = eta[n - m];
    let mut acc = 0.0;
    for i in n - m + 2..=n + 1 {
        acc += (xo(n) - xo(i - m - 1)) / (n + m - i + 1) as f64;
        eta[i - 1] = anchor + acc;
    }

    if let Some(idx) = eta.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::DegenerateBreakpoints { index: idx + 1 });
    }
    Ok(ParkBreakpoints { eta, m, n })
}

pub fn park_breakpoints(sample: &SimpleSample, m: usize) -> Result<ParkBreakpoints> {
    park_breakpoints_sorted(&sample.sorted_values(), m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectedMoments {
    pub mean: f64,
    pub variance: f64,
}

/// Mean and variance of the density with mass `1/n` spread uniformly over
/// each interval `(eta_i, eta_{i+1}]`.
pub fn corrected_moments(bp: &ParkBreakpoints) -> Result<CorrectedMoments> {
    let eta = &bp.eta;
    if eta.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: eta.len() });
    }
    if let Some(idx) = eta.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::DegenerateBreakpoints { index: idx + 1 });
    }
    let intervals = (eta.len() - 1) as f64;
    let mut first = 0.0;
    let mut second = 0.0;
    for w in eta.windows(2) {
        let (a, b) = (w[0], w[1]);
        first += 0.5 * (a + b);
        // (b^3 - a^3) / (3 (b - a)) without the cancellation
        second += (a * a + a * b + b * b) / 3.0;
    }
    let mean = first / intervals;
    let variance = (second / intervals - mean * mean).max(0.0);
    Ok(CorrectedMoments { mean, variance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rss(rows: &[&[f64]]) -> RankedSetSample {
        RankedSetSample::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn rss_mean_values() {
        assert_eq!(rss_mean(&rss(&[&[5.0, 5.0], &[5.0, 5.0]])), 5.0);
        assert_eq!(rss_mean(&rss(&[&[1.0, 2.0], &[3.0, 4.0]])), 2.5);
    }

    #[test]
    fn stokes_values() {
        assert_eq!(stokes_variance(&rss(&[&[3.0, 3.0], &[3.0, 3.0]])).unwrap(), 0.0);
        assert_relative_eq!(stokes_variance(&rss(&[&[0.0, 2.0], &[0.0, 2.0]])).unwrap(), 4.0 / 3.0);
        assert!(stokes_variance(&RankedSetSample::from_rows(vec![vec![1.0]]).unwrap()).is_err());
    }

    #[test]
    fn maceachern_values() {
        let x = rss(&[&[0.0, 2.0], &[0.0, 2.0]]);
        let mo = RssMoments::compute(&x).unwrap();
        assert_relative_eq!(mo.mst, 4.0);
        assert_relative_eq!(mo.mse, 0.0);
        assert_relative_eq!(maceachern_variance(&x).unwrap(), 1.0);
        assert_eq!(mo.per_rank_means, vec![0.0, 2.0]);
        assert_eq!(maceachern_variance(&rss(&[&[1.0, 1.0], &[1.0, 1.0]])).unwrap(), 0.0);
        assert_eq!(maceachern_variance(&rss(&[&[0.0, 2.0]])), Err(Error::InsufficientCycles(1)));
        assert_eq!(maceachern_variance(&rss(&[&[0.0], &[2.0]])), Err(Error::InsufficientSetSize(1)));
    }

    #[test]
    fn breakpoints_hand_oracle() {
        let bp = park_breakpoints_sorted(&[1.0, 2.0, 3.0, 4.0], 1).unwrap();
        assert_eq!(bp.eta, vec![0.5, 1.5, 2.5, 3.5, 4.5]);
        let mo = corrected_moments(&bp).unwrap();
        assert_relative_eq!(mo.mean, 2.5, epsilon = 1e-14);
        assert_relative_eq!(mo.variance, 4.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn breakpoints_length_and_shift() {
        let x: Vec<f64> = (1..=10).map(|i| (i as f64).sqrt()).collect();
        let bp = park_breakpoints_sorted(&x, 3).unwrap();
        assert_eq!(bp.eta.len(), 11);
        let shifted: Vec<f64> = x.iter().map(|v| v + 7.25).collect();
        let bp2 = park_breakpoints_sorted(&shifted, 3).unwrap();
        for (a, b) in bp.eta.iter().zip(&bp2.eta) {
            assert_relative_eq!(a + 7.25, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_interval_is_uniform() {
        let bp = ParkBreakpoints { eta: vec![0.0, 1.0], m: 1, n: 1 };
        let mo = corrected_moments(&bp).unwrap();
        assert_relative_eq!(mo.mean, 0.5);
        assert_relative_eq!(mo.variance, 1.0 / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn ties_break_breakpoints() {
        assert!(matches!(
            park_breakpoints_sorted(&[1.0, 1.0, 1.0, 1.0], 1),
            Err(Error::DegenerateBreakpoints { .. })
        ));
        assert!(matches!(park_breakpoints_sorted(&[1.0, 2.0, 3.0], 2), Err(Error::InvalidWindow { .. })));
    }
}
