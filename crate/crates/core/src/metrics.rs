//! Observables computed from traces and ensembles: inequality, quality/share
//! alignment and peak statistics.
//!
//! Cumulative shares never decrease, so a "rise then fall" in popularity only
//! shows up in the per-round consumption rate (first differences of the
//! share series). [`consumption_rate`] produces that series and
//! [`peak_stats`] works on either.

use serde::Serialize;

use crate::engine::Trace;
use crate::error::{Error, Result};
use crate::model::ItemId;

/// Gini coefficient `sum_ij |x_i - x_j| / (2 m sum_i x_i)`.
///
/// Computed from the sorted values as
/// `sum_i (2i - m - 1) x_(i) / (m sum x)` with 1-based ranks, pairing rank
/// `i` with rank `m + 1 - i` so that equal values cancel exactly.
pub fn gini(values: &[f64]) -> Result<f64> {
    if values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::domain("values", "gini needs finite nonnegative values"));
    }
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return Err(Error::Undefined("gini of an all-zero sequence"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let weighted: f64 = (0..m / 2)
        .map(|i| (m - 1 - 2 * i) as f64 * (sorted[m - 1 - i] - sorted[i]))
        .sum();
    Ok(weighted / (m as f64 * total))
}

/// Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::domain("values", "correlation inputs differ in length"));
    }
    if xs.len() < 2 {
        return Err(Error::Undefined("correlation needs at least two points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation of a zero-variance sequence"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Correlation between item quality and final market share.
pub fn quality_share_correlation(trace: &Trace) -> Result<f64> {
    pearson(&trace.qualities, trace.final_shares())
}

/// Share path of one item, starting from the round it became available.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShareSeries {
    pub item: ItemId,
    pub advertisement: f64,
    pub points: Vec<(u32, f64)>,
}

impl ShareSeries {
    /// Share series of `item` from a single run.
    pub fn from_trace(trace: &Trace, item: ItemId) -> Result<Self> {
        let info = trace.items.get(item).ok_or(Error::ItemOutOfRange {
            id: item,
            count: trace.items.len(),
        })?;
        let points = trace
            .rounds
            .iter()
            .filter(|r| r.round > info.intro_round)
            .map(|r| (r.round, r.shares[item]))
            .collect();
        Ok(ShareSeries {
            item,
            advertisement: info.advertisement,
            points,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakStats {
    pub peak: f64,
    /// First round attaining the peak.
    pub peak_round: u32,
    pub last: f64,
}

/// Peak value, the first round attaining it and the final value.
pub fn peak_stats(points: &[(u32, f64)]) -> Result<PeakStats> {
    let (&(first_round, first), rest) = points
        .split_first()
        .ok_or(Error::Undefined("peak of an empty series"))?;
    let (peak_round, peak) = rest
        .iter()
        .fold((first_round, first), |(br, bv), &(r, v)| if v > bv { (r, v) } else { (br, bv) });
    Ok(PeakStats {
        peak,
        peak_round,
        last: points[points.len() - 1].1,
    })
}

/// First differences of a share series: share gained in each round. The
/// first point is measured against a share of 0 at introduction.
pub fn consumption_rate(points: &[(u32, f64)]) -> Vec<(u32, f64)> {
    let mut prev = 0.0;
    points
        .iter()
        .map(|&(r, v)| {
            let d = v - prev;
            prev = v;
            (r, d)
        })
        .collect()
}

/// Sum of the share over the recorded rounds.
pub fn integrated_share(points: &[(u32, f64)]) -> f64 {
    points.iter().map(|p| p.1).sum()
}
