//! Kullback–Leibler goodness-of-fit statistics for exponentiality and
//! normality.
//!
//! Each statistic is a plug-in estimate of `I(f; f0) = -H(f) - E_f[log f0]`
//! with the parametric part estimated by moments and `H(f)` by a spacings
//! estimator. Large values reject the null.
//!
//! | test            | variant | data | moments                 | entropy  |
//! |-----------------|---------|------|-------------------------|----------|
//! | exponentiality  | `tc`    | SRS  | corrected mean          | Ebrahimi |
//! | exponentiality  | `kl1`   | RSS  | RSS mean                | h1 / h2  |
//! | normality       | `tc`    | SRS  | corrected variance      | Ebrahimi |
//! | normality       | `kl1`   | RSS  | Stokes variance         | h1 / h2  |
//! | normality       | `kl2`   | RSS  | MacEachern variance     | h1 / h2  |

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::entropy::{self, Estimator, WindowSpec};
use crate::error::{Error, Result};
use crate::moments::{corrected_moments, park_breakpoints_sorted, RssMoments};
use crate::sampling::{sort_f64, RankedSetSample, SimpleSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TestKind {
    #[serde(rename = "exp")]
    Exponentiality,
    #[serde(rename = "norm")]
    Normality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Srs,
    Rss,
}

/// Which moment estimators enter the statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// SRS statistic with Park-corrected moments.
    Tc,
    /// RSS mean (exponentiality) or Stokes variance (normality).
    Kl1,
    /// MacEachern variance; normality only, needs `r >= 2`.
    Kl2,
}

impl Variant {
    pub fn scheme(self) -> Scheme {
        match self {
            Variant::Tc => Scheme::Srs,
            Variant::Kl1 | Variant::Kl2 => Scheme::Rss,
        }
    }
}

macro_rules! name_enum {
    ($ty:ty, $what:literal, $( $variant:path => $name:literal $(| $alias:literal)* ),+ $(,)?) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $( $variant => $name ),+ })
            }
        }
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $( $name $(| $alias)* => Ok($variant), )+
                    other => Err(Error::InvalidParameter(format!(concat!("unknown ", $what, " `{}`"), other))),
                }
            }
        }
    };
}

name_enum!(TestKind, "test", TestKind::Exponentiality => "exp" | "exponentiality", TestKind::Normality => "norm" | "normality");
name_enum!(Scheme, "scheme", Scheme::Srs => "srs", Scheme::Rss => "rss");
name_enum!(Variant, "variant", Variant::Tc => "tc", Variant::Kl1 => "kl1", Variant::Kl2 => "kl2");

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GofStatistic {
    pub test: TestKind,
    pub scheme: Scheme,
    pub variant: Variant,
    pub entropy: Estimator,
    pub value: f64,
    pub n: usize,
    pub m: usize,
}

/// Test, moment variant and entropy estimator; fully determines a statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StatisticSpec {
    pub test: TestKind,
    pub variant: Variant,
    pub entropy: Estimator,
}

impl StatisticSpec {
    pub fn new(test: TestKind, variant: Variant, entropy: Estimator) -> Result<Self> {
        let spec = StatisticSpec { test, variant, entropy };
        match (variant, entropy) {
            (Variant::Tc, Estimator::Ebrahimi) => {}
            (Variant::Tc, _) => {
                return Err(Error::InvalidParameter("the tc variant uses the ebrahimi estimator".into()))
            }
            (_, Estimator::RssPooledH1 | Estimator::RssPerCycleH2) => {}
            (_, e) => {
                return Err(Error::InvalidParameter(format!(
                    "RSS statistics need the h1 or h2 estimator, got {e}"
                )))
            }
        }
        if test == TestKind::Exponentiality && variant == Variant::Kl2 {
            return Err(Error::InvalidParameter("kl2 is defined for the normality test only".into()));
        }
        Ok(spec)
    }

    /// RSS statistic with the pooled estimator `h1`.
    pub fn rss(test: TestKind, variant: Variant) -> Result<Self> {
        Self::new(test, variant, Estimator::RssPooledH1)
    }

    pub fn srs(test: TestKind) -> Self {
        StatisticSpec { test, variant: Variant::Tc, entropy: Estimator::Ebrahimi }
    }

    pub fn scheme(&self) -> Scheme {
        self.variant.scheme()
    }

    /// Largest admissible window for design `(k, r)`.
    pub fn max_window(&self, k: usize, r: usize) -> usize {
        self.entropy.max_window(k, r)
    }

    /// Whether the statistic is defined for `r` cycles.
    pub fn available(&self, r: usize) -> bool {
        !(self.variant == Variant::Kl2 && r < 2)
    }

    pub fn evaluate(&self, data: &Dataset, m: WindowSpec) -> Result<GofStatistic> {
        let prepared = self.prepare(data)?;
        let value = prepared.evaluate(m.get())?;
        Ok(GofStatistic {
            test: self.test,
            scheme: self.scheme(),
            variant: self.variant,
            entropy: self.entropy,
            value,
            n: data.n(),
            m: m.get(),
        })
    }

    /// Precomputes orderings and moments so that the statistic can be
    /// evaluated for many windows on the same dataset.
    pub fn prepare(&self, data: &Dataset) -> Result<Prepared> {
        match (self.scheme(), data) {
            (Scheme::Srs, Dataset::Srs(s)) => Ok(Prepared::srs(*self, s.values().to_vec())),
            (Scheme::Srs, Dataset::Rss(r)) => Ok(Prepared::srs(*self, r.pooled().to_vec())),
            (Scheme::Rss, Dataset::Rss(r)) => Prepared::rss(*self, r),
            (Scheme::Rss, Dataset::Srs(_)) => Err(Error::InvalidParameter(format!(
                "variant {} needs ranked set data",
                self.variant
            ))),
        }
    }
}

impl fmt::Display for StatisticSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.test, self.variant, self.entropy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Srs(SimpleSample),
    Rss(RankedSetSample),
}

impl Dataset {
    pub fn n(&self) -> usize {
        match self {
            Dataset::Srs(s) => s.len(),
            Dataset::Rss(r) => r.n(),
        }
    }
}

/// A dataset reduced to what a statistic needs.
#[derive(Debug, Clone)]
pub struct Prepared {
    spec: StatisticSpec,
    sorted: Vec<f64>,
    /// Per-cycle sorted buffer (h2 only) and its set size.
    cycles: Option<(Vec<f64>, usize)>,
    moments: Option<RssMoments>,
}

impl Prepared {
    fn srs(spec: StatisticSpec, mut values: Vec<f64>) -> Self {
        sort_f64(&mut values);
        Prepared { spec, sorted: values, cycles: None, moments: None }
    }

    fn rss(spec: StatisticSpec, rss: &RankedSetSample) -> Result<Self> {
        let moments = RssMoments::compute(rss)?;
        let mut sorted = rss.pooled().to_vec();
        sort_f64(&mut sorted);
        let cycles = (spec.entropy == Estimator::RssPerCycleH2).then(|| {
            let mut buf = rss.pooled().to_vec();
            buf.chunks_exact_mut(rss.k()).for_each(sort_f64);
            (buf, rss.k())
        });
        if spec.variant == Variant::Kl2 && rss.r() < 2 {
            return Err(Error::InsufficientCycles(rss.r()));
        }
        Ok(Prepared { spec, sorted, cycles, moments: Some(moments) })
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    fn entropy(&self, m: usize) -> Result<f64> {
        match (&self.cycles, self.spec.entropy) {
            (Some((buf, k)), _) => entropy::per_cycle_sorted(buf.chunks_exact(*k), m),
            (None, Estimator::Vasicek) => entropy::vasicek_sorted(&self.sorted, m),
            (None, _) => entropy::ebrahimi_sorted(&self.sorted, m),
        }
    }

    /// Statistic value for window `m`.
    pub fn evaluate(&self, m: usize) -> Result<f64> {
        let h = self.entropy(m)?;
        let n = self.n() as f64;
        let value = match (self.spec.test, self.spec.variant, &self.moments) {
            (TestKind::Exponentiality, Variant::Tc, _) => {
                let mean = corrected_moments(&park_breakpoints_sorted(&self.sorted, m)?)?.mean;
                exp_form(mean, h)?
            }
            (TestKind::Normality, Variant::Tc, _) => {
                let var = corrected_moments(&park_breakpoints_sorted(&self.sorted, m)?)?.variance;
                normal_form(var, h)?
            }
            (TestKind::Exponentiality, _, Some(mo)) => exp_form(mo.mean, h)?,
            (TestKind::Normality, Variant::Kl1, Some(mo)) => normal_form(mo.stokes_var, h)?,
            (TestKind::Normality, Variant::Kl2, Some(mo)) => {
                let var = mo.maceachern_var.ok_or(Error::InsufficientCycles(1))?;
                check_variance(var)?;
                // sum of squared deviations is (n - 1) times the Stokes variance
                let quad = (n - 1.0) * mo.stokes_var / (2.0 * n * var);
                0.5 * (2.0 * PI * var).ln() + quad - h
            }
            _ => unreachable!("RSS variants always carry moments"),
        };
        Ok(value)
    }
}

fn exp_form(mean: f64, h: f64) -> Result<f64> {
    if !(mean > 0.0) {
        return Err(Error::InvalidScale { value: mean });
    }
    Ok(1.0 + mean.ln() - h)
}

fn check_variance(var: f64) -> Result<()> {
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::DegenerateVariance { value: var });
    }
    Ok(())
}

fn normal_form(var: f64, h: f64) -> Result<f64> {
    check_variance(var)?;
    Ok(0.5 * (2.0 * PI * var).ln() + 0.5 - h)
}

/// `T_c = 1 + log(mean_c) - H_c(n, m)` with the Park-corrected mean.
pub fn exp_statistic_srs(sample: &SimpleSample, m: WindowSpec) -> Result<GofStatistic> {
    StatisticSpec::srs(TestKind::Exponentiality).evaluate(&Dataset::Srs(sample.clone()), m)
}

/// `1 + log(rss_mean) - h1`.
pub fn exp_statistic_rss(rss: &RankedSetSample, m: WindowSpec) -> Result<GofStatistic> {
    StatisticSpec::rss(TestKind::Exponentiality, Variant::Kl1)?.evaluate(&Dataset::Rss(rss.clone()), m)
}

/// `log(sqrt(2 pi var_c)) + 0.5 - H_c(n, m)` with the Park-corrected variance.
pub fn norm_statistic_srs(sample: &SimpleSample, m: WindowSpec) -> Result<GofStatistic> {
    StatisticSpec::srs(TestKind::Normality).evaluate(&Dataset::Srs(sample.clone()), m)
}

/// `log(sqrt(2 pi stokes_var)) + 0.5 - H` where `H` is `h1` or `h2`.
pub fn kl1(rss: &RankedSetSample, m: WindowSpec, entropy: Estimator) -> Result<GofStatistic> {
    StatisticSpec::new(TestKind::Normality, Variant::Kl1, entropy)?.evaluate(&Dataset::Rss(rss.clone()), m)
}

/// `log(sqrt(2 pi var)) + (1/2n) sum((x - mean)/sd)^2 - H` with the
/// MacEachern variance.
pub fn kl2(rss: &RankedSetSample, m: WindowSpec, entropy: Estimator) -> Result<GofStatistic> {
    StatisticSpec::new(TestKind::Normality, Variant::Kl2, entropy)?.evaluate(&Dataset::Rss(rss.clone()), m)
}

fn known_normal_form(values: &[f64], mu: f64, sigma: f64, h: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let n = values.len() as f64;
    let quad: f64 = values.iter().map(|x| ((x - mu) / sigma).powi(2)).sum::<f64>() / (2.0 * n);
    Ok(0.5 * (2.0 * PI * sigma * sigma).ln() + quad - h)
}

/// KL estimate against a normal law with known `mu`, `sigma`, using the
/// Vasicek estimator on a simple random sample.
pub fn i_mn(sample: &SimpleSample, mu: f64, sigma: f64, m: WindowSpec) -> Result<f64> {
    let h = entropy::vasicek(sample, m)?.value;
    known_normal_form(sample.values(), mu, sigma, h)
}

/// KL estimate against a normal law with known `mu`, `sigma` on RSS data.
pub fn k_mn(rss: &RankedSetSample, mu: f64, sigma: f64, m: WindowSpec, entropy: Estimator) -> Result<f64> {
    let h = entropy::estimate_rss(rss, entropy, m)?.value;
    known_normal_form(rss.pooled(), mu, sigma, h)
}

/// Identifies a calibrated critical value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalKey {
    pub test: TestKind,
    pub variant: Variant,
    pub entropy: Estimator,
    /// Set size; for SRS statistics this is the sample size with `r = 1`.
    pub k: usize,
    pub r: usize,
    pub m: usize,
    pub alpha: f64,
    pub reps: usize,
}

impl CriticalKey {
    pub fn spec(&self) -> StatisticSpec {
        StatisticSpec { test: self.test, variant: self.variant, entropy: self.entropy }
    }

    pub fn n(&self) -> usize {
        self.k * self.r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalValue {
    pub key: CriticalKey,
    pub value: f64,
    pub stderr: f64,
}

/// Upper-tail rejection: `value > critical`.
pub fn rejects(value: f64, critical: f64) -> bool {
    value > critical
}

/// Rejects the null iff the statistic exceeds a critical value calibrated
/// for the same test, variant, estimator, sample size and window.
pub fn decide(stat: &GofStatistic, critical: &CriticalValue) -> Result<bool> {
    let key = &critical.key;
    let mismatch = |what: &str, got: String, want: String| {
        Err(Error::KeyMismatch(format!("{what}: statistic has {got}, critical value has {want}")))
    };
    if key.test != stat.test {
        return mismatch("test", stat.test.to_string(), key.test.to_string());
    }
    if key.variant != stat.variant {
        return mismatch("variant", stat.variant.to_string(), key.variant.to_string());
    }
    if key.entropy != stat.entropy {
        return mismatch("estimator", stat.entropy.to_string(), key.entropy.to_string());
    }
    if key.n() != stat.n {
        return mismatch("n", stat.n.to_string(), key.n().to_string());
    }
    if key.m != stat.m {
        return mismatch("m", stat.m.to_string(), key.m.to_string());
    }
    Ok(rejects(stat.value, critical.value))
}
