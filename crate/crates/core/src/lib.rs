//! Entropy estimation and Kullback–Leibler goodness-of-fit testing under
//! simple random sampling (SRS) and balanced ranked set sampling (RSS).
//!
//! * [`entropy`]: Vasicek and Ebrahimi spacings estimators and the two RSS
//!   variants (pooled `h1`, per-cycle `h2`).
//! * [`moments`]: RSS mean, Stokes and MacEachern variances, Park breakpoints.
//! * [`gof`]: exponentiality and normality statistics and the decision rule.
//! * [`montecarlo`]: bias/RMSE, critical values, power and window selection.
//! * [`io`], [`store`], [`cli`]: data files, the critical-value store and the
//!   command-line front end.

pub mod cli;
pub mod distributions;
pub mod entropy;
pub mod error;
pub mod gof;
pub mod io;
pub mod moments;
pub mod montecarlo;
pub mod sampling;
pub mod store;

pub use distributions::{Distribution, Family};
pub use entropy::{EntropyEstimate, Estimator, WindowSpec};
pub use error::{Error, Result};
pub use gof::{CriticalKey, CriticalValue, Dataset, GofStatistic, Scheme, StatisticSpec, TestKind, Variant};
pub use montecarlo::{MonteCarloConfig, MonteCarloReport};
pub use sampling::{RandomStream, RankedSetSample, SimpleSample};
