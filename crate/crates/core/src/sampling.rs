//! Simple random samples, balanced ranked set samples with perfect ranking,
//! and the two orderings used by the RSS entropy estimators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distributions::Distribution;
use crate::error::{Error, Result};

/// Random number stream used throughout the crate.
pub type RandomStream = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for `(master_seed, tag, index)`.
///
/// `tag` separates unrelated uses of the same master seed (null draws versus
/// each alternative); `index` is the replication number. The stream depends
/// only on these three values, never on scheduling.
pub fn substream(master_seed: u64, tag: u64, index: u64) -> RandomStream {
    let mut rng = RandomStream::seed_from_u64(splitmix64(master_seed ^ splitmix64(tag)));
    rng.set_stream(index);
    rng
}

/// Stable tag derived from a label such as a distribution name.
pub fn stream_tag(label: &str) -> u64 {
    // FNV-1a
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

pub(crate) fn sort_f64(v: &mut [f64]) {
    v.sort_unstable_by(f64::total_cmp);
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimpleSample {
    values: Vec<f64>,
    sorted: bool,
}

impl SimpleSample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite observation {v}")));
        }
        Ok(SimpleSample { values, sorted: false })
    }

    /// Wraps values already in nondecreasing order.
    pub fn from_sorted(values: Vec<f64>) -> Result<Self> {
        let mut s = Self::new(values)?;
        if s.values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter("values are not sorted".into()));
        }
        s.sorted = true;
        Ok(s)
    }

    pub fn into_sorted(mut self) -> Self {
        if !self.sorted {
            sort_f64(&mut self.values);
            self.sorted = true;
        }
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_sorted(&self) -> bool {
        self.sorted
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sorted view, copying only when the sample is unsorted.
    pub(crate) fn sorted_values(&self) -> std::borrow::Cow<'_, [f64]> {
        if self.sorted {
            std::borrow::Cow::Borrowed(&self.values)
        } else {
            let mut v = self.values.clone();
            sort_f64(&mut v);
            std::borrow::Cow::Owned(v)
        }
    }
}

/// Balanced ranked set sample: `r` cycles of `k` ranks.
///
/// Stored row-major; `get(i, j)` is the rank-`j` measurement of cycle `i`
/// (both zero-based).
#[derive(Debug, Clone, PartialEq)]
pub struct RankedSetSample {
    k: usize,
    r: usize,
    values: Vec<f64>,
}

impl RankedSetSample {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let k = rows[0].len();
        if k == 0 {
            return Err(Error::InvalidParameter("set size k must be positive".into()));
        }
        let mut values = Vec::with_capacity(r * k);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidParameter(format!(
                    "cycle {} has {} values, expected {k}",
                    i + 1,
                    row.len()
                )));
            }
            values.extend(row);
        }
        Self::from_flat(k, r, values)
    }

    pub fn from_flat(k: usize, r: usize, values: Vec<f64>) -> Result<Self> {
        if k == 0 || r == 0 {
            return Err(Error::InvalidParameter(format!("invalid dimensions r={r}, k={k}")));
        }
        if values.len() != k * r {
            return Err(Error::InvalidParameter(format!(
                "expected {} values for r={r}, k={k}, got {}",
                k * r,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite observation {v}")));
        }
        Ok(RankedSetSample { k, r, values })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Pooled size `r * k`.
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, cycle: usize, rank: usize) -> f64 {
        self.values[cycle * self.k + rank]
    }

    pub fn cycle(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn cycles(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.k)
    }

    /// All values, cycle by cycle.
    pub fn pooled(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.cycles().map(<[f64]>::to_vec).collect()
    }
}

pub fn draw_srs<R: Rng + ?Sized>(dist: &Distribution, n: usize, rng: &mut R) -> SimpleSample {
    assert!(n >= 1, "sample size must be positive");
    let values = (0..n).map(|_| rng.sample(dist)).collect();
    SimpleSample { values, sorted: false }
}

/// Balanced RSS under perfect ranking: for every cycle and rank `j`, draw a
/// fresh set of `k` units, sort it and keep the `j`-th smallest.
pub fn draw_rss<R: Rng + ?Sized>(
    dist: &Distribution,
    k: usize,
    r: usize,
    rng: &mut R,
) -> RankedSetSample {
    assert!(k >= 2 && r >= 1, "RSS requires k >= 2 and r >= 1");
    let mut set = vec![0.0; k];
    let mut values = Vec::with_capacity(r * k);
    for _ in 0..r {
        for j in 0..k {
            for slot in set.iter_mut() {
                *slot = rng.sample(dist);
            }
            // only the j-th order statistic is needed
            let (_, nth, _) = set.select_nth_unstable_by(j, f64::total_cmp);
            values.push(*nth);
        }
    }
    RankedSetSample { k, r, values }
}

pub fn pool_and_sort(rss: &RankedSetSample) -> SimpleSample {
    let mut values = rss.values.clone();
    sort_f64(&mut values);
    SimpleSample { values, sorted: true }
}

pub fn sort_within_cycles(rss: &RankedSetSample) -> Vec<SimpleSample> {
    rss.cycles()
        .map(|c| {
            let mut values = c.to_vec();
            sort_f64(&mut values);
            SimpleSample { values, sorted: true }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rss(rows: &[&[f64]]) -> RankedSetSample {
        RankedSetSample::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn pooling() {
        assert_eq!(pool_and_sort(&rss(&[&[3.0, 1.0]])).values(), &[1.0, 3.0]);
        assert_eq!(pool_and_sort(&rss(&[&[2.0, 4.0], &[1.0, 3.0]])).values(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn per_cycle_sort() {
        let out = sort_within_cycles(&rss(&[&[3.0, 1.0]]));
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].values(), &[1.0, 3.0]);
        let out = sort_within_cycles(&rss(&[&[2.0, 4.0], &[3.0, 1.0]]));
        assert_eq!(out[0].values(), &[2.0, 4.0]);
        assert_eq!(out[1].values(), &[1.0, 3.0]);
    }

    #[test]
    fn rss_shape_and_lengths() {
        let d = Distribution::standard_normal();
        let mut rng = substream(7, 0, 0);
        let s = draw_rss(&d, 4, 3, &mut rng);
        assert_eq!((s.k(), s.r(), s.n()), (4, 3, 12));
        assert_eq!(pool_and_sort(&s).len(), 12);
        assert_eq!(draw_srs(&d, 1, &mut rng).len(), 1);
    }

    #[test]
    fn determinism() {
        let d = Distribution::standard_exponential();
        let a = draw_rss(&d, 5, 2, &mut substream(42, 1, 9));
        let b = draw_rss(&d, 5, 2, &mut substream(42, 1, 9));
        assert_eq!(a, b);
        let c = draw_srs(&d, 10, &mut substream(42, 1, 9));
        let e = draw_srs(&d, 10, &mut substream(42, 1, 9));
        assert_eq!(c, e);
        let f = draw_srs(&d, 10, &mut substream(42, 1, 10));
        assert_ne!(c, f);
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(RankedSetSample::from_rows(vec![vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(RankedSetSample::from_rows(vec![]).is_err());
        assert!(RankedSetSample::from_rows(vec![vec![1.0, f64::NAN]]).is_err());
        assert!(SimpleSample::from_sorted(vec![2.0, 1.0]).is_err());
    }
}
