//! Summary statistics over ordered samples.
//!
//! Reductions walk the sample in index order with a fixed pairwise tree, so a
//! result depends only on the values and never on how they were produced.

use serde::{Deserialize, Serialize};

const PAIRWISE_BLOCK: usize = 16;

/// Pairwise (cascade) summation in a fixed tree over the slice order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Population variance (divides by n).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / xs.len() as f64
}

/// Unbiased sample variance (divides by n - 1).
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    variance(xs) * xs.len() as f64 / (xs.len() - 1) as f64
}

/// Standard error of the mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    (sample_variance(xs) / xs.len() as f64).sqrt()
}

/// Linear-interpolation quantile of an ascending-sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let q = q.clamp(0.0, 1.0);
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Box-whisker statistics of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub stdev: f64,
    pub min: f64,
    pub q05: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q95: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Summary {
        let s = sorted(xs);
        Summary {
            count: xs.len(),
            mean: mean(xs),
            stdev: sample_variance(xs).sqrt(),
            min: s[0],
            q05: quantile_sorted(&s, 0.05),
            q25: quantile_sorted(&s, 0.25),
            median: quantile_sorted(&s, 0.5),
            q75: quantile_sorted(&s, 0.75),
            q95: quantile_sorted(&s, 0.95),
            max: s[s.len() - 1],
        }
    }

    pub fn iqr(&self) -> f64 {
        self.q75 - self.q25
    }
}

/// Equal-width histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(xs: &[f64], lo: f64, hi: f64, bins: usize) -> Histogram {
        assert!(bins > 0);
        let mut counts = vec![0; bins];
        let width = (hi - lo) / bins as f64;
        for &x in xs {
            if !(lo..=hi).contains(&x) {
                continue;
            }
            let b = if width > 0.0 {
                (((x - lo) / width) as usize).min(bins - 1)
            } else {
                0
            };
            counts[b] += 1;
        }
        Histogram { lo, hi, counts }
    }

    /// Histogram over the full sample range.
    pub fn spanning(xs: &[f64], bins: usize) -> Histogram {
        let s = sorted(xs);
        Histogram::new(xs, s[0], s[s.len() - 1], bins)
    }

    pub fn bin_center(&self, b: usize) -> f64 {
        let width = (self.hi - self.lo) / self.counts.len() as f64;
        self.lo + (b as f64 + 0.5) * width
    }

    /// Troughs lying at most `depth` times below the highest bins on both
    /// sides, e.g. `depth = 0.8` for a trough 20% below both peaks. Peaks
    /// holding less than `min_share` of the sample are ignored. Returns
    /// `(left_peak, trough, right_peak)` bin indices, deepest trough first.
    pub fn separated_modes(&self, depth: f64, min_share: f64) -> Vec<(usize, usize, usize)> {
        let c = &self.counts;
        let floor = min_share * c.iter().sum::<usize>() as f64;
        let mut out = Vec::new();
        for k in 1..c.len().saturating_sub(1) {
            let (l, lmax) = argmax(&c[..k]);
            let (r, rmax) = argmax(&c[k + 1..]);
            let peak = lmax.min(rmax) as f64;
            if peak > 0.0 && peak >= floor && c[k] as f64 <= depth * peak {
                out.push((l, k, k + 1 + r, c[k] as f64 / peak));
            }
        }
        out.sort_by(|a, b| a.3.total_cmp(&b.3));
        out.into_iter().map(|(l, k, r, _)| (l, k, r)).collect()
    }

    pub fn is_multimodal(&self, depth: f64, min_share: f64) -> bool {
        !self.separated_modes(depth, min_share).is_empty()
    }
}

fn argmax(c: &[usize]) -> (usize, usize) {
    let mut best = (0, 0);
    for (i, &v) in c.iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}
