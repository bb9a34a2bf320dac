//! Small statistics helpers shared by the analyses.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Nearest-rank quantile of an ascending slice: the value at rank
/// `ceil(p·n)` (1-based), clamped to `[1, n]`.
pub fn nearest_rank(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    Some(sorted[rank - 1])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

/// Nearest-rank quartiles; `None` for an empty sample.
pub fn quartiles(values: &[f64]) -> Option<Quartiles> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(Quartiles {
        q1: nearest_rank(&v, 0.25)?,
        median: nearest_rank(&v, 0.5)?,
        q3: nearest_rank(&v, 0.75)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HistogramPoint {
    pub value: u64,
    pub count: u64,
    /// Fraction of observations `>= value`.
    pub ccdf: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Histogram {
    pub total: u64,
    pub points: Vec<HistogramPoint>,
}

impl Histogram {
    pub fn from_values(values: impl IntoIterator<Item = u64>) -> Self {
        let mut counts = std::collections::BTreeMap::<u64, u64>::new();
        for v in values {
            *counts.entry(v).or_default() += 1;
        }
        let total: u64 = counts.values().sum();
        let mut at_least = total;
        let points = counts
            .into_iter()
            .map(|(value, count)| {
                let p = HistogramPoint {
                    value,
                    count,
                    ccdf: at_least as f64 / total as f64,
                };
                at_least -= count;
                p
            })
            .collect();
        Histogram { total, points }
    }

    /// Fraction of observations `<= threshold`.
    pub fn fraction_at_most(&self, threshold: u64) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let n: u64 = self.points.iter().filter(|p| p.value <= threshold).map(|p| p.count).sum();
        n as f64 / self.total as f64
    }

    pub fn ccdf_at(&self, value: u64) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let n: u64 = self.points.iter().filter(|p| p.value >= value).map(|p| p.count).sum();
        n as f64 / self.total as f64
    }

    pub fn mean(&self) -> Option<f64> {
        (self.total > 0).then(|| {
            self.points.iter().map(|p| p.value as f64 * p.count as f64).sum::<f64>() / self.total as f64
        })
    }

    /// Nearest-rank median.
    pub fn median(&self) -> Option<u64> {
        if self.total == 0 {
            return None;
        }
        let rank = self.total.div_ceil(2);
        let mut seen = 0;
        for p in &self.points {
            seen += p.count;
            if seen >= rank {
                return Some(p.value);
            }
        }
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Regression {
    pub n: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Two-sided p-value of the slope's t statistic with `n − 2` dof.
    pub p_value: f64,
}

/// Ordinary least squares of `ys` on `xs`. `None` with fewer than three
/// points or no spread in `xs`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Option<Regression> {
    let n = xs.len();
    if n < 3 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 0.0 };
    let dof = nf - 2.0;
    let se = (sse / dof / sxx).sqrt();
    let p_value = if se == 0.0 || !se.is_finite() {
        if slope == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        let t = (slope / se).abs();
        let dist = StudentsT::new(0.0, 1.0, dof).expect("dof >= 1");
        (2.0 * (1.0 - dist.cdf(t))).clamp(0.0, 1.0)
    };
    Some(Regression {
        n,
        slope,
        intercept,
        r_squared,
        p_value,
    })
}
