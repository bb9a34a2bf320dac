use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::stats::{quartiles, Quartiles};

use super::{GrowthSeries, Termination};

/// Inclusive value range with a display label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Bucket {
    pub label: String,
    pub lo: u64,
    pub hi: Option<u64>,
}

impl Bucket {
    pub fn contains(&self, v: u64) -> bool {
        v >= self.lo && self.hi.is_none_or(|h| v <= h)
    }
}

/// Ordered, non-overlapping buckets, e.g. `1,2,3,4-9,10+`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Buckets(pub Vec<Bucket>);

impl Buckets {
    pub fn team_sizes() -> Self {
        "1,2,3,4-9,10+".parse().unwrap()
    }

    /// Stack Overflow mention counts: none, 1–100, 101–1000, more.
    pub fn so_posts() -> Self {
        "0,1-100,101-1000,1001+".parse().unwrap()
    }

    pub fn index_of(&self, v: u64) -> Option<usize> {
        self.0.iter().position(|b| b.contains(v))
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|b| b.label.as_str())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromStr for Buckets {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut out: Vec<Bucket> = Vec::new();
        for part in s.split(',').map(str::trim) {
            let bad = || format!("bad bucket {part:?}");
            let (lo, hi) = if let Some(lo) = part.strip_suffix('+') {
                (lo.parse().map_err(|_| bad())?, None)
            } else if let Some((a, b)) = part.split_once('-') {
                (a.parse().map_err(|_| bad())?, Some(b.parse().map_err(|_| bad())?))
            } else {
                let v = part.parse().map_err(|_| bad())?;
                (v, Some(v))
            };
            if hi.is_some_and(|h| h < lo) {
                return Err(bad());
            }
            if let Some(prev) = out.last() {
                if prev.hi.is_none_or(|h| h >= lo) {
                    return Err(format!("bucket {part:?} overlaps or is out of order"));
                }
            }
            out.push(Bucket {
                label: part.to_owned(),
                lo,
                hi,
            });
        }
        if out.is_empty() {
            return Err("no buckets".into());
        }
        Ok(Buckets(out))
    }
}

impl fmt::Display for Buckets {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<&str> = self.labels().collect();
        f.write_str(&labels.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub x: usize,
    /// Series with a value at `x`.
    pub alive: usize,
    /// Series that ended by extinction at or before `x`.
    pub extinguished: usize,
    pub quartiles: Quartiles,
}

/// Quartile curves of one group. An empty `points` list means the group had
/// no series at all.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupCurve {
    pub label: String,
    pub series: usize,
    pub points: Vec<CurvePoint>,
}

/// Nearest-rank Q1/median/Q3 at every `x`, over the series of each group
/// that are still alive at `x`. `members` pairs a bucket index with a series.
pub fn aggregate_growth<'a>(
    buckets: &Buckets,
    members: impl IntoIterator<Item = (usize, &'a GrowthSeries)>,
) -> Vec<GroupCurve> {
    let mut groups: Vec<Vec<&GrowthSeries>> = vec![Vec::new(); buckets.len()];
    for (i, s) in members {
        groups[i].push(s);
    }
    buckets
        .0
        .iter()
        .zip(groups)
        .map(|(bucket, series)| {
            let max_len = series.iter().map(|s| s.values.len()).max().unwrap_or(0);
            let points = (0..max_len)
                .map(|x| {
                    let alive: Vec<f64> = series.iter().filter_map(|s| s.values.get(x).copied()).collect();
                    let extinguished = series
                        .iter()
                        .filter(|s| s.termination == Termination::UsageExtinguished && s.values.len() <= x)
                        .count();
                    CurvePoint {
                        x,
                        alive: alive.len(),
                        extinguished,
                        quartiles: quartiles(&alive).expect("longest series is alive"),
                    }
                })
                .collect();
            GroupCurve {
                label: bucket.label.clone(),
                series: series.len(),
                points,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: &[f64]) -> GrowthSeries {
        GrowthSeries {
            repo_id: "p".into(),
            library: "l".into(),
            values: values.to_vec(),
            termination: Termination::HistoryEnded,
        }
    }

    #[test]
    fn bucket_parsing() {
        let b = Buckets::team_sizes();
        assert_eq!(b.index_of(1), Some(0));
        assert_eq!(b.index_of(5), Some(3));
        assert_eq!(b.index_of(10_000), Some(4));
        assert_eq!(b.index_of(0), None);
        let so = Buckets::so_posts();
        assert_eq!(so.index_of(0), Some(0));
        assert_eq!(so.index_of(100), Some(1));
        assert_eq!(so.index_of(101), Some(2));
        assert_eq!(so.index_of(1001), Some(3));
        assert!("3,1".parse::<Buckets>().is_err());
        assert!("1-5,5+".parse::<Buckets>().is_err());
        assert_eq!(so.to_string(), "0,1-100,101-1000,1001+");
    }

    #[test]
    fn constant_series_have_unit_median() {
        let s: Vec<_> = (0..3).map(|_| series(&[1.0, 1.0, 1.0])).collect();
        let g = aggregate_growth(&Buckets::team_sizes(), s.iter().map(|s| (0, s)));
        assert!(g[0].points.iter().all(|p| p.quartiles.median == 1.0));
    }

    #[test]
    fn quartiles_at_each_x() {
        let s = [series(&[1.0, 2.0]), series(&[1.0, 4.0]), series(&[1.0, 6.0])];
        let g = aggregate_growth(&Buckets::team_sizes(), s.iter().map(|s| (1, s)));
        let q = g[1].points[1].quartiles;
        assert_eq!((q.q1, q.median, q.q3), (2.0, 4.0, 6.0));
        assert!(g[0].points.is_empty());
        assert_eq!(g[0].series, 0);
    }

    #[test]
    fn survivors_only() {
        let mut dead = series(&[1.0]);
        dead.termination = Termination::UsageExtinguished;
        let s = [dead, series(&[1.0, 3.0])];
        let g = aggregate_growth(&Buckets::team_sizes(), s.iter().map(|s| (0, s)));
        assert_eq!(g[0].points[1].alive, 1);
        assert_eq!(g[0].points[1].extinguished, 1);
        assert_eq!(g[0].points[1].quartiles.median, 3.0);
    }
}
