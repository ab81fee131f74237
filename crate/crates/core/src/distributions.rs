//! Continuous laws used as nulls and alternatives.
//!
//! Every family is fixed at the parameterization used by the power study:
//! gamma and Weibull have unit scale, the lognormal has zero log-mean and
//! the exponential is written with a rate, `f(x) = λ exp(-λx)`.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{ChiSquared, Exp, Gamma, LogNormal, Normal, StudentT, Weibull};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};

/// Parameters of a supported family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Uniform01,
    Exponential { rate: f64 },
    Normal { mean: f64, sd: f64 },
    Gamma { shape: f64 },
    Weibull { shape: f64 },
    Lognormal { sigma: f64 },
    ChiSquare { df: u32 },
    StudentT { df: u32 },
}

#[derive(Debug, Clone)]
enum Sampler {
    Uniform,
    Exp(Exp<f64>),
    Normal(Normal<f64>),
    Gamma(Gamma<f64>),
    Weibull(Weibull<f64>),
    Lognormal(LogNormal<f64>),
    ChiSquare(ChiSquared<f64>),
    StudentT(StudentT<f64>),
}

/// A validated distribution with a ready-to-use sampler.
///
/// Implements [`rand::distr::Distribution<f64>`], so `rng.sample(&dist)` draws
/// one variate.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Distribution {
    family: Family,
    sampler: Sampler,
}

impl PartialEq for Distribution {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be a positive finite number, got {v}"
        )))
    }
}

impl Distribution {
    pub fn new(family: Family) -> Result<Self> {
        let bad = |e: &dyn fmt::Display| Error::InvalidParameter(e.to_string());
        let sampler = match family {
            Family::Uniform01 => Sampler::Uniform,
            Family::Exponential { rate } => {
                Sampler::Exp(Exp::new(positive("rate", rate)?).map_err(|e| bad(&e))?)
            }
            Family::Normal { mean, sd } => {
                if !mean.is_finite() {
                    return Err(Error::InvalidParameter(format!("mean must be finite, got {mean}")));
                }
                Sampler::Normal(Normal::new(mean, positive("sd", sd)?).map_err(|e| bad(&e))?)
            }
            Family::Gamma { shape } => {
                Sampler::Gamma(Gamma::new(positive("shape", shape)?, 1.0).map_err(|e| bad(&e))?)
            }
            Family::Weibull { shape } => {
                Sampler::Weibull(Weibull::new(1.0, positive("shape", shape)?).map_err(|e| bad(&e))?)
            }
            Family::Lognormal { sigma } => Sampler::Lognormal(
                LogNormal::new(0.0, positive("sigma", sigma)?).map_err(|e| bad(&e))?,
            ),
            Family::ChiSquare { df } => {
                if df == 0 {
                    return Err(Error::InvalidParameter("chi-square df must be >= 1".into()));
                }
                Sampler::ChiSquare(ChiSquared::new(df as f64).map_err(|e| bad(&e))?)
            }
            Family::StudentT { df } => {
                if df <= 2 {
                    return Err(Error::InvalidParameter(format!(
                        "student t requires df > 2, got {df}"
                    )));
                }
                Sampler::StudentT(StudentT::new(df as f64).map_err(|e| bad(&e))?)
            }
        };
        Ok(Distribution { family, sampler })
    }

    pub fn uniform() -> Self {
        Self::new(Family::Uniform01).unwrap()
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(Family::Exponential { rate })
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        Self::new(Family::Normal { mean, sd })
    }

    pub fn standard_normal() -> Self {
        Self::normal(0.0, 1.0).unwrap()
    }

    pub fn standard_exponential() -> Self {
        Self::exponential(1.0).unwrap()
    }

    pub fn gamma(shape: f64) -> Result<Self> {
        Self::new(Family::Gamma { shape })
    }

    pub fn weibull(shape: f64) -> Result<Self> {
        Self::new(Family::Weibull { shape })
    }

    pub fn lognormal(sigma: f64) -> Result<Self> {
        Self::new(Family::Lognormal { sigma })
    }

    pub fn chi_square(df: u32) -> Result<Self> {
        Self::new(Family::ChiSquare { df })
    }

    pub fn student_t(df: u32) -> Result<Self> {
        Self::new(Family::StudentT { df })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Density at `x`; zero outside the support.
    pub fn pdf(&self, x: f64) -> f64 {
        match self.family {
            Family::Uniform01 => {
                if x > 0.0 && x < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Family::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            Family::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
            }
            Family::Gamma { shape } => {
                if x <= 0.0 {
                    0.0
                } else {
                    ((shape - 1.0) * x.ln() - x - ln_gamma(shape)).exp()
                }
            }
            Family::Weibull { shape } => {
                if x <= 0.0 {
                    0.0
                } else {
                    shape * x.powf(shape - 1.0) * (-x.powf(shape)).exp()
                }
            }
            Family::Lognormal { sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let l = x.ln();
                    (-l * l / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt() * x)
                }
            }
            Family::ChiSquare { df } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let h = df as f64 / 2.0;
                    ((h - 1.0) * x.ln() - 0.5 * x - h * 2f64.ln() - ln_gamma(h)).exp()
                }
            }
            Family::StudentT { df } => {
                let nu = df as f64;
                let log_c = ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * (nu * PI).ln();
                (log_c - (nu + 1.0) / 2.0 * (1.0 + x * x / nu).ln()).exp()
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self.family {
            Family::Uniform01 => 0.5,
            Family::Exponential { rate } => 1.0 / rate,
            Family::Normal { mean, .. } => mean,
            Family::Gamma { shape } => shape,
            Family::Weibull { shape } => gamma(1.0 + 1.0 / shape),
            Family::Lognormal { sigma } => (sigma * sigma / 2.0).exp(),
            Family::ChiSquare { df } => df as f64,
            Family::StudentT { .. } => 0.0,
        }
    }

    pub fn variance(&self) -> f64 {
        match self.family {
            Family::Uniform01 => 1.0 / 12.0,
            Family::Exponential { rate } => 1.0 / (rate * rate),
            Family::Normal { sd, .. } => sd * sd,
            Family::Gamma { shape } => shape,
            Family::Weibull { shape } => {
                let g1 = gamma(1.0 + 1.0 / shape);
                gamma(1.0 + 2.0 / shape) - g1 * g1
            }
            Family::Lognormal { sigma } => {
                let s2 = sigma * sigma;
                (s2.exp() - 1.0) * s2.exp()
            }
            Family::ChiSquare { df } => 2.0 * df as f64,
            Family::StudentT { df } => df as f64 / (df as f64 - 2.0),
        }
    }

    /// Exact differential entropy in nats.
    ///
    /// Only the uniform, exponential and normal laws are supported.
    pub fn true_entropy(&self) -> Result<f64> {
        match self.family {
            Family::Uniform01 => Ok(0.0),
            Family::Exponential { rate } => Ok(1.0 - rate.ln()),
            Family::Normal { sd, .. } => Ok(0.5 * (2.0 * PI * E * sd * sd).ln()),
            _ => Err(Error::UnsupportedDistribution(self.to_string())),
        }
    }

    /// Support as a closed interval (possibly infinite).
    pub fn support(&self) -> (f64, f64) {
        match self.family {
            Family::Uniform01 => (0.0, 1.0),
            Family::Normal { .. } | Family::StudentT { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            _ => (0.0, f64::INFINITY),
        }
    }
}

impl rand::distr::Distribution<f64> for Distribution {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.sampler {
            Sampler::Uniform => rng.random::<f64>(),
            Sampler::Exp(d) => rng.sample(d),
            Sampler::Normal(d) => rng.sample(d),
            Sampler::Gamma(d) => rng.sample(d),
            Sampler::Weibull(d) => rng.sample(d),
            Sampler::Lognormal(d) => rng.sample(d),
            Sampler::ChiSquare(d) => rng.sample(d),
            Sampler::StudentT(d) => rng.sample(d),
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Uniform01 => write!(f, "uniform"),
            Family::Exponential { rate } => write!(f, "exp({rate})"),
            Family::Normal { mean, sd } => write!(f, "normal({mean},{sd})"),
            Family::Gamma { shape } => write!(f, "gamma({shape})"),
            Family::Weibull { shape } => write!(f, "weibull({shape})"),
            Family::Lognormal { sigma } => write!(f, "lognormal({sigma})"),
            Family::ChiSquare { df } => write!(f, "chisq({df})"),
            Family::StudentT { df } => write!(f, "t({df})"),
        }
    }
}

impl FromStr for Distribution {
    type Err = Error;

    /// Parses `name(params)`, e.g. `gamma(1.5)`, `t(5)`, `uniform`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |msg: &str| Error::InvalidParameter(format!("distribution `{s}`: {msg}"));
        let (name, args) = match s.find('(') {
            Some(open) => {
                let inner = s[open + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| bad("missing closing parenthesis"))?;
                let args = if inner.trim().is_empty() {
                    Vec::new()
                } else {
                    inner
                        .split(',')
                        .map(|a| a.trim().parse::<f64>().map_err(|_| bad("non-numeric parameter")))
                        .collect::<Result<Vec<_>>>()?
                };
                (s[..open].trim().to_ascii_lowercase(), args)
            }
            None => (s.to_ascii_lowercase(), Vec::new()),
        };
        let one = |args: &[f64]| match args {
            [a] => Ok(*a),
            _ => Err(bad("expected exactly one parameter")),
        };
        let int = |v: f64| {
            if v.fract() == 0.0 && v >= 0.0 && v <= u32::MAX as f64 {
                Ok(v as u32)
            } else {
                Err(bad("degrees of freedom must be an integer"))
            }
        };
        match name.as_str() {
            "uniform" | "u" | "unif" => match args.as_slice() {
                [] | [0.0, 1.0] => Ok(Distribution::uniform()),
                _ => Err(bad("only the unit interval is supported")),
            },
            "exp" | "exponential" | "e" => match args.as_slice() {
                [] => Distribution::exponential(1.0),
                [rate] => Distribution::exponential(*rate),
                _ => Err(bad("expected at most one parameter")),
            },
            "normal" | "norm" | "n" => match args.as_slice() {
                [] => Distribution::normal(0.0, 1.0),
                [mean, sd] => Distribution::normal(*mean, *sd),
                _ => Err(bad("expected (mean, sd)")),
            },
            "gamma" => Distribution::gamma(one(&args)?),
            "weibull" => Distribution::weibull(one(&args)?),
            "lognormal" | "lnorm" => Distribution::lognormal(one(&args)?),
            "chisq" | "chi2" | "chisquare" => Distribution::chi_square(int(one(&args)?)?),
            "t" | "student" | "studentt" => Distribution::student_t(int(one(&args)?)?),
            _ => Err(bad("unknown distribution name")),
        }
    }
}

impl TryFrom<String> for Distribution {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Distribution> for String {
    fn from(d: Distribution) -> String {
        d.to_string()
    }
}
