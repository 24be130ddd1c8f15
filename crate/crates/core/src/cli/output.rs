//! CSV and JSON emitters.
//!
//! Floating-point CSV fields use C's `%.17g` format: 17 significant digits,
//! trailing zeros removed, exponent form below 1e-4 or from 1e17 up. The
//! output round-trips to the same `f64` and is identical across reruns.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;

use crate::engine::{EnsembleResult, ItemInfo, Trace};
use crate::metrics::{self, PeakStats};
use crate::sweep::{Optimum, SweepParam, SweepTable};

pub const TRACE_HEADER: &str =
    "round,item_id,advertisement,intro_round,share_mean,share_std,consumption_rate_mean";

/// `%.17g`.
pub fn fmt_g17(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let fixed = format!("{:.*}", (16 - exp) as usize, v);
        strip_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", strip_zeros(mantissa), sign, exp.abs())
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One line of a trace table.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub round: u32,
    pub item: ItemInfo,
    pub share_mean: f64,
    pub share_std: f64,
    pub rate_mean: f64,
}

/// Rows of a single run: one per (round, item present in that round).
pub fn trace_rows(trace: &Trace) -> Vec<TraceRow> {
    let mut rows = Vec::new();
    let mut prev = vec![0.0; trace.items.len()];
    for r in &trace.rounds {
        for (id, &share) in r.shares.iter().enumerate() {
            rows.push(TraceRow {
                round: r.round,
                item: trace.items[id].clone(),
                share_mean: share,
                share_std: 0.0,
                rate_mean: share - prev[id],
            });
            prev[id] = share;
        }
    }
    rows
}

/// Rows of an ensemble: one per (round, item present in that round).
pub fn ensemble_rows(result: &EnsembleResult) -> Vec<TraceRow> {
    result
        .rounds
        .iter()
        .flat_map(|r| {
            result
                .items
                .iter()
                .filter(move |it| it.intro_round < r.round)
                .map(move |it| TraceRow {
                    round: r.round,
                    item: it.clone(),
                    share_mean: r.share_mean[it.id],
                    share_std: r.share_std[it.id],
                    rate_mean: r.rate_mean[it.id],
                })
        })
        .collect()
}

fn write_row<W: Write>(w: &mut W, prefix: Option<f64>, row: &TraceRow) -> io::Result<()> {
    if let Some(p) = prefix {
        write!(w, "{},", fmt_g17(p))?;
    }
    writeln!(
        w,
        "{},{},{},{},{},{},{}",
        row.round,
        row.item.id,
        fmt_g17(row.item.advertisement),
        row.item.intro_round,
        fmt_g17(row.share_mean),
        fmt_g17(row.share_std),
        fmt_g17(row.rate_mean),
    )
}

pub fn write_trace_csv<W: Write>(w: &mut W, rows: &[TraceRow]) -> io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    rows.iter().try_for_each(|r| write_row(w, None, r))
}

/// Trace table with a leading `grid_value` column, one block per grid point.
pub fn write_sweep_csv<W: Write>(w: &mut W, table: &SweepTable) -> io::Result<()> {
    writeln!(w, "grid_value,{TRACE_HEADER}")?;
    for point in &table.points {
        for row in ensemble_rows(&point.result) {
            write_row(w, Some(point.value), &row)?;
        }
    }
    Ok(())
}

pub fn write_objective_csv<W: Write>(w: &mut W, opt: &Optimum) -> io::Result<()> {
    writeln!(w, "advertisement,objective_mean,objective_std_err")?;
    for row in &opt.table {
        writeln!(
            w,
            "{},{},{}",
            fmt_g17(row.advertisement),
            fmt_g17(row.mean),
            fmt_g17(row.std_err)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ItemSummary {
    pub id: usize,
    pub advertisement: f64,
    pub intro_round: u32,
    pub final_share: f64,
    pub final_share_std: f64,
    /// Peak of the (cumulative) share series; always equals the final share.
    pub share_peak: PeakStats,
    /// Peak of the per-round consumption rate.
    pub rate_peak: PeakStats,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub runs: usize,
    pub rounds: usize,
    pub tracked_item: Option<usize>,
    /// Gini coefficient of the (mean) final shares; null when all are zero.
    pub gini: Option<f64>,
    /// Quality/final-share correlation, averaged over runs where defined.
    pub quality_share_correlation: Option<f64>,
    pub correlation_runs: usize,
    pub items: Vec<ItemSummary>,
}

fn summarize_rows(rows: &[TraceRow], items: &[ItemInfo]) -> Vec<ItemSummary> {
    items
        .iter()
        .map(|it| {
            let mine: Vec<&TraceRow> = rows.iter().filter(|r| r.item.id == it.id).collect();
            let shares: Vec<(u32, f64)> = mine.iter().map(|r| (r.round, r.share_mean)).collect();
            let rates: Vec<(u32, f64)> = mine.iter().map(|r| (r.round, r.rate_mean)).collect();
            let last = mine.last().expect("item appears in at least one round");
            ItemSummary {
                id: it.id,
                advertisement: it.advertisement,
                intro_round: it.intro_round,
                final_share: last.share_mean,
                final_share_std: last.share_std,
                share_peak: metrics::peak_stats(&shares).expect("non-empty"),
                rate_peak: metrics::peak_stats(&rates).expect("non-empty"),
            }
        })
        .collect()
}

pub fn trace_summary(trace: &Trace) -> Summary {
    let rows = trace_rows(trace);
    let corr = metrics::quality_share_correlation(trace).ok();
    Summary {
        runs: 1,
        rounds: trace.rounds.len(),
        tracked_item: trace.config.tracked_item(),
        gini: metrics::gini(trace.final_shares()).ok(),
        quality_share_correlation: corr,
        correlation_runs: usize::from(corr.is_some()),
        items: summarize_rows(&rows, &trace.items),
    }
}

pub fn ensemble_summary(result: &EnsembleResult, tracked_item: Option<usize>) -> Summary {
    let rows = ensemble_rows(result);
    let finals: Vec<f64> = result
        .items
        .iter()
        .map(|it| result.final_mean(it.id))
        .collect();
    let corrs: Vec<f64> = result
        .qualities
        .iter()
        .zip(&result.final_shares)
        .filter_map(|(q, s)| metrics::pearson(q, s).ok())
        .collect();
    let corr = (!corrs.is_empty()).then(|| corrs.iter().sum::<f64>() / corrs.len() as f64);
    Summary {
        runs: result.runs,
        rounds: result.rounds.len(),
        tracked_item,
        gini: metrics::gini(&finals).ok(),
        quality_share_correlation: corr,
        correlation_runs: corrs.len(),
        items: summarize_rows(&rows, &result.items),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPointSummary {
    pub value: f64,
    pub summary: Summary,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub param: SweepParam,
    pub points: Vec<SweepPointSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimum: Option<Optimum>,
}

pub fn sweep_summary(table: &SweepTable, tracked_item: Option<usize>, optimum: Option<Optimum>) -> SweepSummary {
    SweepSummary {
        param: table.param,
        points: table
            .points
            .iter()
            .map(|p| SweepPointSummary {
                value: p.value,
                summary: ensemble_summary(&p.result, tracked_item),
            })
            .collect(),
        optimum,
    }
}

/// Everything needed to repeat an invocation on the same build.
#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub master_seed: u64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// Every config key with its resolved value.
    pub config: BTreeMap<String, String>,
}

pub fn write_json<W: Write, T: Serialize>(w: &mut W, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)
}
