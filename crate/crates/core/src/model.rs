//! Per-round quantities of the cultural and fashion market models.
//!
//! Everything here is a pure function of a [`MarketState`]: social pressure,
//! opinion, marketing effect, sigmoid penalty, utility, quality and market
//! share. The engine drives the state forward; this module only reads it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AgentId, SocialGraph};

pub type ItemId = usize;

/// Which ranking score agents maximize each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarketMode {
    /// Fixed catalog, agents rank by opinion.
    Cultural,
    /// Periodic introductions, agents rank by utility.
    Fashion,
}

/// The second term of the utility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SocialBlend {
    /// `C_ia`, the consumption indicator. Always 0 for items still on offer.
    LiteralConsumption,
    /// `L_ia`, the agent's liking, as in the opinion formula.
    Liking,
}

/// How liking values are assigned to items introduced mid-run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NewItemLiking {
    Zero,
    Uniform,
}

macro_rules! keyword_enum {
    ($ty:ty, $( $text:literal => $variant:expr ),+ $(,)?) => {
        impl std::str::FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
                match s {
                    $( $text => Ok($variant), )+
                    other => Err(format!(
                        "unknown value '{}' (expected {})",
                        other,
                        [$( $text ),+].join("|")
                    )),
                }
            }
        }
    };
}

keyword_enum!(MarketMode, "cultural" => MarketMode::Cultural, "fashion" => MarketMode::Fashion);
keyword_enum!(
    SocialBlend,
    "liking" => SocialBlend::Liking,
    "literal" => SocialBlend::LiteralConsumption,
);
keyword_enum!(NewItemLiking, "zero" => NewItemLiking::Zero, "uniform" => NewItemLiking::Uniform);

impl MarketMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MarketMode::Cultural => "cultural",
            MarketMode::Fashion => "fashion",
        }
    }
}

impl SocialBlend {
    pub fn as_str(self) -> &'static str {
        match self {
            SocialBlend::Liking => "liking",
            SocialBlend::LiteralConsumption => "literal",
        }
    }
}

impl NewItemLiking {
    pub fn as_str(self) -> &'static str {
        match self {
            NewItemLiking::Zero => "zero",
            NewItemLiking::Uniform => "uniform",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    pub mode: MarketMode,
    /// Weight of social pressure against the individual term.
    pub gamma: f64,
    /// Sigmoid sharpness.
    pub beta: f64,
    /// Market share at which the sigmoid equals 1/2.
    pub sigmoid_center: f64,
    /// Completed rounds between item introductions.
    pub intro_period: u32,
    /// Items added per introduction.
    pub intro_batch: usize,
    pub utility_social_blend: SocialBlend,
    pub new_item_liking: NewItemLiking,
    /// When false the penalty term is dropped from the utility.
    pub penalty_enabled: bool,
    /// Agents whose best score is below this abstain for the round.
    pub min_utility: Option<f64>,
}

impl Default for MarketParams {
    fn default() -> Self {
        MarketParams {
            mode: MarketMode::Fashion,
            gamma: 0.95,
            beta: 1.0,
            sigmoid_center: 0.5,
            intro_period: 6,
            intro_batch: 1,
            utility_social_blend: SocialBlend::Liking,
            new_item_liking: NewItemLiking::Zero,
            penalty_enabled: true,
            min_utility: None,
        }
    }
}

impl MarketParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::domain("gamma", format!("must lie in [0, 1], got {}", self.gamma)));
        }
        check_beta(self.beta)?;
        if !(0.0..=1.0).contains(&self.sigmoid_center) {
            return Err(Error::domain(
                "sigmoid_center",
                format!("must lie in [0, 1], got {}", self.sigmoid_center),
            ));
        }
        if self.intro_period == 0 {
            return Err(Error::domain("intro_period", "must be at least 1"));
        }
        if self.intro_batch == 0 {
            return Err(Error::domain("intro_batch", "must be at least 1"));
        }
        if let Some(t) = self.min_utility {
            if !t.is_finite() {
                return Err(Error::domain("min_utility", format!("must be finite, got {t}")));
            }
        }
        Ok(())
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("beta", format!("must be a finite value > 0, got {beta}")))
    }
}

pub(crate) fn check_advertisement(a: f64) -> Result<()> {
    if (0.0..=1.0).contains(&a) {
        Ok(())
    } else {
        Err(Error::domain("advertisement", format!("must lie in [0, 1], got {a}")))
    }
}

fn check_tolerance(t: f64) -> Result<()> {
    if t > 0.0 && t <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain("tolerance", format!("must lie in (0, 1], got {t}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: AgentId,
    /// Susceptibility to advertisement, in (0, 1].
    pub tolerance: f64,
    /// Liking per item, indexed by item id.
    pub liking: Vec<f64>,
    /// Round (1-based) in which each item was consumed, indexed by item id.
    pub consumed: Vec<Option<u32>>,
    /// Consumed item ids in consumption order.
    pub history: Vec<ItemId>,
}

impl Agent {
    pub fn new(id: AgentId, tolerance: f64, liking: Vec<f64>) -> Self {
        let m = liking.len();
        Agent {
            id,
            tolerance,
            liking,
            consumed: vec![None; m],
            history: Vec::new(),
        }
    }

    pub fn has_consumed(&self, item: ItemId) -> bool {
        matches!(self.consumed.get(item), Some(Some(_)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: ItemId,
    pub advertisement: f64,
    /// Number of completed rounds when the item entered; 0 for the catalog.
    pub intro_round: u32,
    pub consumption_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    pub params: MarketParams,
    pub graph: SocialGraph,
    pub agents: Vec<Agent>,
    pub items: Vec<Item>,
    /// Completed rounds.
    pub round: u32,
}

impl MarketState {
    /// Assembles a state from explicit parts, checking that shapes and value
    /// domains agree. Consumption records start empty.
    pub fn new(
        params: MarketParams,
        graph: SocialGraph,
        tolerances: &[f64],
        likings: Vec<Vec<f64>>,
        advertisements: &[f64],
    ) -> Result<Self> {
        params.validate()?;
        let n = graph.n();
        if tolerances.len() != n || likings.len() != n {
            return Err(Error::domain(
                "agents",
                format!(
                    "graph has {n} agents but {} tolerances and {} liking rows were given",
                    tolerances.len(),
                    likings.len()
                ),
            ));
        }
        let m = advertisements.len();
        for &a in advertisements {
            check_advertisement(a)?;
        }
        let mut agents = Vec::with_capacity(n);
        for (id, (row, &t)) in likings.into_iter().zip(tolerances).enumerate() {
            check_tolerance(t)?;
            if row.len() != m {
                return Err(Error::domain(
                    "liking",
                    format!("agent {id} has {} liking values for {m} items", row.len()),
                ));
            }
            if let Some(bad) = row.iter().find(|l| !(0.0..=1.0).contains(*l)) {
                return Err(Error::domain("liking", format!("must lie in [0, 1], got {bad}")));
            }
            agents.push(Agent::new(id, t, row));
        }
        let items = advertisements
            .iter()
            .enumerate()
            .map(|(id, &advertisement)| Item {
                id,
                advertisement,
                intro_round: 0,
                consumption_count: 0,
            })
            .collect();
        Ok(MarketState {
            params,
            graph,
            agents,
            items,
            round: 0,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    fn check_agent(&self, i: AgentId) -> Result<()> {
        if i < self.agents.len() {
            Ok(())
        } else {
            Err(Error::AgentOutOfRange {
                id: i,
                n: self.agents.len(),
            })
        }
    }

    fn check_item(&self, a: ItemId) -> Result<()> {
        if a < self.items.len() {
            Ok(())
        } else {
            Err(Error::ItemOutOfRange {
                id: a,
                count: self.items.len(),
            })
        }
    }

    /// Fraction of agent `i`'s neighbors who have consumed `item`; 0 for an
    /// isolated agent.
    pub fn social_pressure(&self, i: AgentId, item: ItemId) -> Result<f64> {
        self.check_agent(i)?;
        self.check_item(item)?;
        let nb = self.graph.neighbors_of(i);
        let hits = nb
            .iter()
            .filter(|&&j| self.agents[j].has_consumed(item))
            .count();
        Ok(pressure_ratio(hits, nb.len()))
    }

    /// `gamma * S + (1 - gamma) * L`.
    pub fn opinion(&self, i: AgentId, item: ItemId) -> Result<f64> {
        let s = self.social_pressure(i, item)?;
        Ok(opinion_score(self.params.gamma, s, self.agents[i].liking[item]))
    }

    /// Penalty of `item` for the current round, shared by every agent.
    pub fn item_penalty(&self, item: ItemId) -> Result<f64> {
        self.check_item(item)?;
        let share = self.market_share(item)?;
        if !self.params.penalty_enabled {
            return Ok(0.0);
        }
        penalty(
            share,
            self.items[item].advertisement,
            self.params.beta,
            self.params.sigmoid_center,
        )
    }

    /// `gamma * S + (1 - gamma) * B + A * T - P`; may be negative.
    pub fn utility(&self, i: AgentId, item: ItemId) -> Result<f64> {
        let s = self.social_pressure(i, item)?;
        let agent = &self.agents[i];
        let blend = blend_term(self.params.utility_social_blend, agent, item);
        let m = marketing_effect(self.items[item].advertisement, agent.tolerance)?;
        let p = self.item_penalty(item)?;
        Ok(utility_score(self.params.gamma, s, blend, m, p))
    }

    /// Mean liking of `item` over all agents.
    pub fn quality(&self, item: ItemId) -> Result<f64> {
        self.check_item(item)?;
        if self.agents.is_empty() {
            return Ok(0.0);
        }
        let sum: f64 = self.agents.iter().map(|a| a.liking[item]).sum();
        Ok(sum / self.agents.len() as f64)
    }

    /// Fraction of agents who have consumed `item`.
    pub fn market_share(&self, item: ItemId) -> Result<f64> {
        self.check_item(item)?;
        if self.agents.is_empty() {
            return Ok(0.0);
        }
        Ok(self.items[item].consumption_count as f64 / self.agents.len() as f64)
    }

    /// Checks that every item's consumption count matches the agents'
    /// consumption records and that each agent's history agrees with its
    /// per-item record.
    pub fn check_consistency(&self) -> std::result::Result<(), String> {
        let m = self.items.len();
        let mut counts = vec![0usize; m];
        for agent in &self.agents {
            if agent.liking.len() != m || agent.consumed.len() != m {
                return Err(format!("agent {} does not cover all {m} items", agent.id));
            }
            let recorded = agent.consumed.iter().filter(|c| c.is_some()).count();
            if recorded != agent.history.len() {
                return Err(format!("agent {} history length mismatch", agent.id));
            }
            for &item in &agent.history {
                if agent.consumed[item].is_none() {
                    return Err(format!("agent {} history lists unconsumed item {item}", agent.id));
                }
                counts[item] += 1;
            }
        }
        for (item, &c) in self.items.iter().zip(&counts) {
            if item.consumption_count != c {
                return Err(format!(
                    "item {} count {} but {} agents consumed it",
                    item.id, item.consumption_count, c
                ));
            }
        }
        Ok(())
    }
}

pub(crate) fn pressure_ratio(hits: usize, degree: usize) -> f64 {
    if degree == 0 {
        0.0
    } else {
        hits as f64 / degree as f64
    }
}

pub(crate) fn blend_term(mode: SocialBlend, agent: &Agent, item: ItemId) -> f64 {
    match mode {
        SocialBlend::Liking => agent.liking[item],
        SocialBlend::LiteralConsumption => {
            if agent.has_consumed(item) {
                1.0
            } else {
                0.0
            }
        }
    }
}

#[inline]
pub(crate) fn opinion_score(gamma: f64, social: f64, liking: f64) -> f64 {
    gamma * social + (1.0 - gamma) * liking
}

#[inline]
pub(crate) fn utility_score(gamma: f64, social: f64, blend: f64, marketing: f64, penalty: f64) -> f64 {
    gamma * social + (1.0 - gamma) * blend + marketing - penalty
}

/// Pull of an advertisement of intensity `a` on an agent with tolerance `t`.
pub fn marketing_effect(a: f64, t: f64) -> Result<f64> {
    check_advertisement(a)?;
    check_tolerance(t)?;
    Ok(a * t)
}

/// Logistic curve `1 / (1 + exp(-beta * (x - center)))`.
pub fn sigmoid(x: f64, beta: f64, center: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(1.0 / (1.0 + (-beta * (x - center)).exp()))
}

/// Over-commercialization penalty: `sigmoid(share) * a`.
pub fn penalty(share: f64, a: f64, beta: f64, center: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&share) {
        return Err(Error::domain("share", format!("must lie in [0, 1], got {share}")));
    }
    check_advertisement(a)?;
    Ok(sigmoid(share, beta, center)? * a)
}
