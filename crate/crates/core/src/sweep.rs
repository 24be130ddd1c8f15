//! Parameter sweeps over ensembles and the grid-search optimizer for the
//! advertisement strategy of the tracked item.
//!
//! Every grid point reuses the base master seed, so the runs at different
//! grid values share their random graphs, likings and tolerances and differ
//! only in the swept parameter. A point's result therefore does not depend
//! on where it sits in the grid.

use serde::{Deserialize, Serialize};

use crate::engine::{run_ensemble, EnsembleResult, SimulationConfig};
use crate::error::{Error, Result};
use crate::model::ItemId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    /// Advertisement of the tracked (first introduced) item.
    Advertisement,
    Beta,
    Gamma,
    Agents,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Advertisement => "advertisement",
            SweepParam::Beta => "beta",
            SweepParam::Gamma => "gamma",
            SweepParam::Agents => "agents",
        }
    }

    /// Copy of `base` with this parameter set to `value`, validated.
    pub fn apply(self, base: &SimulationConfig, value: f64) -> Result<SimulationConfig> {
        let mut cfg = base.clone();
        match self {
            SweepParam::Advertisement => cfg.tracked_ad = Some(value),
            SweepParam::Beta => cfg.params.beta = value,
            SweepParam::Gamma => cfg.params.gamma = value,
            SweepParam::Agents => {
                if value.fract() != 0.0 || value < 0.0 {
                    return Err(Error::domain("agents", format!("must be a whole number, got {value}")));
                }
                cfg.n_agents = value as usize;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: SimulationConfig,
    pub param: SweepParam,
    pub grid: Vec<f64>,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub result: EnsembleResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub param: SweepParam,
    pub points: Vec<SweepPoint>,
}

/// One ensemble per grid value with only the swept parameter changed.
pub fn sweep(spec: &SweepSpec) -> Result<SweepTable> {
    if spec.grid.is_empty() {
        return Err(Error::domain("grid", "needs at least one value"));
    }
    if spec.param == SweepParam::Advertisement && spec.base.tracked_item().is_none() {
        return Err(no_tracked_item());
    }
    let configs = spec
        .grid
        .iter()
        .map(|&v| spec.param.apply(&spec.base, v))
        .collect::<Result<Vec<_>>>()?;
    let points = spec
        .grid
        .iter()
        .zip(&configs)
        .map(|(&value, cfg)| {
            Ok(SweepPoint {
                value,
                result: run_ensemble(cfg, spec.runs)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepTable {
        param: spec.param,
        points,
    })
}

fn no_tracked_item() -> Error {
    Error::domain(
        "rounds",
        "no item is introduced within the horizon (needs fashion mode and rounds > intro_period)",
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Share of the tracked item after the last round.
    FinalShare,
    /// Sum of the tracked item's share over all rounds.
    IntegratedShare,
}

impl Objective {
    pub fn as_str(self) -> &'static str {
        match self {
            Objective::FinalShare => "final",
            Objective::IntegratedShare => "integrated",
        }
    }

    /// Per-run objective values for `item`.
    pub fn per_run(self, result: &EnsembleResult, item: ItemId) -> Vec<f64> {
        let rows = match self {
            Objective::FinalShare => &result.final_shares,
            Objective::IntegratedShare => &result.integrated_shares,
        };
        rows.iter().map(|r| r[item]).collect()
    }
}

impl std::str::FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "final" | "final_share" => Ok(Objective::FinalShare),
            "integrated" | "integrated_share" => Ok(Objective::IntegratedShare),
            other => Err(format!("unknown objective '{other}' (expected final|integrated)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectiveRow {
    pub advertisement: f64,
    pub mean: f64,
    /// Standard error of the mean over runs.
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Optimum {
    pub best: f64,
    pub objective: Objective,
    pub table: Vec<ObjectiveRow>,
}

/// Mean and standard error (sample standard deviation over `sqrt(runs)`).
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Objective table of the tracked item from an advertisement sweep.
pub fn objective_table(table: &SweepTable, item: ItemId, objective: Objective) -> Vec<ObjectiveRow> {
    table
        .points
        .iter()
        .map(|p| {
            let (mean, std_err) = mean_and_stderr(&objective.per_run(&p.result, item));
            ObjectiveRow {
                advertisement: p.value,
                mean,
                std_err,
            }
        })
        .collect()
}

/// Advertisement with the highest mean objective; ties go to the smaller
/// advertisement.
pub fn best_advertisement(rows: &[ObjectiveRow]) -> Option<f64> {
    rows.iter()
        .fold(None::<&ObjectiveRow>, |best, row| match best {
            Some(b)
                if b.mean > row.mean || (b.mean == row.mean && b.advertisement <= row.advertisement) =>
            {
                Some(b)
            }
            _ => Some(row),
        })
        .map(|r| r.advertisement)
}

/// Grid search over the tracked item's advertisement.
pub fn optimize_advertisement(
    base: &SimulationConfig,
    grid: &[f64],
    objective: Objective,
    runs: usize,
) -> Result<(Optimum, SweepTable)> {
    let item = base.tracked_item().ok_or_else(no_tracked_item)?;
    let table = sweep(&SweepSpec {
        base: base.clone(),
        param: SweepParam::Advertisement,
        grid: grid.to_vec(),
        runs,
    })?;
    let rows = objective_table(&table, item, objective);
    let best = best_advertisement(&rows).expect("non-empty grid");
    Ok((
        Optimum {
            best,
            objective,
            table: rows,
        },
        table,
    ))
}
