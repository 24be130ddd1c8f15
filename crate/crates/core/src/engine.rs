//! Round-by-round driver: market initialization, synchronous consumption
//! decisions, periodic item introduction, traces and seeded ensembles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AgentId, TopologySpec};
use crate::model::{
    self, blend_term, check_advertisement, opinion_score, pressure_ratio, utility_score, Agent,
    Item, ItemId, MarketMode, MarketParams, MarketState, NewItemLiking,
};

/// Deterministic generator used for every random draw in a run.
pub type SimRng = ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 0x5EED_FA5E_2024_0001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_agents: usize,
    pub m_initial: usize,
    pub rounds: u32,
    pub topology: TopologySpec,
    pub params: MarketParams,
    /// Advertisement values for introduced items, used cyclically.
    pub intro_ads: Vec<f64>,
    /// Advertisement value of every initial catalog item.
    pub catalog_ads: f64,
    /// Overrides the advertisement of the first introduced item.
    pub tracked_ad: Option<f64>,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            n_agents: 100,
            m_initial: 50,
            rounds: 30,
            topology: TopologySpec::default(),
            params: MarketParams::default(),
            intro_ads: vec![0.7],
            catalog_ads: 0.0,
            tracked_ad: None,
            seed: DEFAULT_SEED,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents < 2 {
            return Err(Error::domain("agents", format!("must be at least 2, got {}", self.n_agents)));
        }
        if self.m_initial < 1 {
            return Err(Error::domain("items", "must be at least 1"));
        }
        if self.rounds < 1 {
            return Err(Error::domain("rounds", "must be at least 1"));
        }
        self.topology.validate(self.n_agents).map_err(|e| match e {
            Error::Topology(reason) => Error::Domain { name: "topology", reason },
            other => other,
        })?;
        self.params.validate()?;
        if self.intro_ads.is_empty() {
            return Err(Error::domain("intro_ads", "needs at least one value"));
        }
        for &a in &self.intro_ads {
            check_advertisement(a).map_err(|_| {
                Error::domain("intro_ads", format!("values must lie in [0, 1], got {a}"))
            })?;
        }
        check_advertisement(self.catalog_ads)
            .map_err(|_| Error::domain("catalog_ads", format!("must lie in [0, 1], got {}", self.catalog_ads)))?;
        if let Some(a) = self.tracked_ad {
            check_advertisement(a)
                .map_err(|_| Error::domain("tracked_ad", format!("must lie in [0, 1], got {a}")))?;
        }
        Ok(())
    }

    /// Id of the first introduced item, if any introduction happens within
    /// the horizon.
    pub fn tracked_item(&self) -> Option<ItemId> {
        let due = self.params.mode == MarketMode::Fashion && self.rounds > self.params.intro_period;
        due.then_some(self.m_initial)
    }

    /// Advertisement of the `k`-th introduced item (0-based).
    fn intro_ad(&self, k: usize) -> f64 {
        match (k, self.tracked_ad) {
            (0, Some(a)) => a,
            _ => self.intro_ads[k % self.intro_ads.len()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsumptionEvent {
    pub agent: AgentId,
    pub item: ItemId,
    /// 1-based round in which the item was consumed.
    pub round: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemInfo {
    pub id: ItemId,
    pub advertisement: f64,
    pub intro_round: u32,
}

impl From<&Item> for ItemInfo {
    fn from(item: &Item) -> Self {
        ItemInfo {
            id: item.id,
            advertisement: item.advertisement,
            intro_round: item.intro_round,
        }
    }
}

/// State of the market after one completed round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    /// Share of every item present this round, indexed by item id.
    pub shares: Vec<f64>,
    pub counts: Vec<usize>,
    pub events: Vec<ConsumptionEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub config: SimulationConfig,
    pub items: Vec<ItemInfo>,
    pub rounds: Vec<RoundRecord>,
    /// Quality of every item at the end of the run.
    pub qualities: Vec<f64>,
}

impl Trace {
    pub fn final_shares(&self) -> &[f64] {
        self.rounds.last().map(|r| r.shares.as_slice()).unwrap_or(&[])
    }

    pub fn events(&self) -> impl Iterator<Item = &ConsumptionEvent> {
        self.rounds.iter().flat_map(|r| r.events.iter())
    }

    /// Share of `item` after every round; 0 before the item exists.
    pub fn share_path(&self, item: ItemId) -> Vec<f64> {
        self.rounds
            .iter()
            .map(|r| r.shares.get(item).copied().unwrap_or(0.0))
            .collect()
    }
}

/// Builds the initial market: graph, uniform likings on `[0, 1)`, uniform
/// tolerances on `(0, 1]`.
///
/// Draw order: graph, then likings agent by agent, then tolerances.
pub fn init_market<R: Rng + ?Sized>(config: &SimulationConfig, rng: &mut R) -> Result<MarketState> {
    config.validate()?;
    let graph = config.topology.build(config.n_agents, rng)?;
    let likings: Vec<Vec<f64>> = (0..config.n_agents)
        .map(|_| (0..config.m_initial).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let tolerances: Vec<f64> = (0..config.n_agents).map(|_| 1.0 - rng.gen::<f64>()).collect();
    let ads = vec![config.catalog_ads; config.m_initial];
    MarketState::new(config.params.clone(), graph, &tolerances, likings, &ads)
}

/// Whether items are due at the top of the current round.
pub fn introduction_due(state: &MarketState) -> bool {
    state.params.mode == MarketMode::Fashion
        && state.round > 0
        && state.round.is_multiple_of(state.params.intro_period)
}

/// Appends `intro_batch` items. Advertisement values cycle through
/// `config.intro_ads`, continuing across introductions.
pub fn introduce_items<R: Rng + ?Sized>(
    state: &mut MarketState,
    config: &SimulationConfig,
    rng: &mut R,
) -> Vec<ItemId> {
    let already = state.items.iter().filter(|it| it.intro_round > 0).count();
    let mut added = Vec::with_capacity(state.params.intro_batch);
    for b in 0..state.params.intro_batch {
        let id = state.items.len();
        state.items.push(Item {
            id,
            advertisement: config.intro_ad(already + b),
            intro_round: state.round,
            consumption_count: 0,
        });
        for agent in &mut state.agents {
            let liking = match state.params.new_item_liking {
                NewItemLiking::Zero => 0.0,
                NewItemLiking::Uniform => rng.gen::<f64>(),
            };
            agent.liking.push(liking);
            agent.consumed.push(None);
        }
        added.push(id);
    }
    added
}

/// Score each agent maximizes; opinion in the cultural market, utility in
/// the fashion market.
struct Scorer {
    gamma: f64,
    mode: MarketMode,
    blend: model::SocialBlend,
    /// Per-item penalty for the round, frozen at round start.
    penalties: Vec<f64>,
    ads: Vec<f64>,
}

impl Scorer {
    fn new(state: &MarketState) -> Self {
        let p = &state.params;
        let penalties = (0..state.n_items())
            .map(|a| state.item_penalty(a).expect("valid item"))
            .collect();
        Scorer {
            gamma: p.gamma,
            mode: p.mode,
            blend: p.utility_social_blend,
            penalties,
            ads: state.items.iter().map(|it| it.advertisement).collect(),
        }
    }

    fn score(&self, agent: &Agent, item: ItemId, social: f64) -> f64 {
        match self.mode {
            MarketMode::Cultural => opinion_score(self.gamma, social, agent.liking[item]),
            MarketMode::Fashion => utility_score(
                self.gamma,
                social,
                blend_term(self.blend, agent, item),
                self.ads[item] * agent.tolerance,
                self.penalties[item],
            ),
        }
    }
}

/// Item agent `i` would consume this round, or `None` when it abstains.
fn choose(state: &MarketState, scorer: &Scorer, i: AgentId, hits: &mut [usize]) -> Option<ItemId> {
    let agent = &state.agents[i];
    let nb = state.graph.neighbors_of(i);
    hits.iter_mut().for_each(|h| *h = 0);
    for &j in nb {
        for &item in &state.agents[j].history {
            hits[item] += 1;
        }
    }
    let mut best: Option<(ItemId, f64)> = None;
    for (item, &h) in hits.iter().enumerate() {
        if agent.consumed[item].is_some() {
            continue;
        }
        let s = scorer.score(agent, item, pressure_ratio(h, nb.len()));
        // strict comparison keeps the lowest id on ties
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((item, s));
        }
    }
    match (best, state.params.min_utility) {
        (Some((_, s)), Some(t)) if s < t => None,
        (b, _) => b.map(|(item, _)| item),
    }
}

/// One synchronous round. Every agent picks its best unconsumed item against
/// the state at round start; all picks are then committed together and the
/// round counter advances.
pub fn step(state: &mut MarketState) -> Vec<ConsumptionEvent> {
    let scorer = Scorer::new(state);
    let mut hits = vec![0usize; state.n_items()];
    let round = state.round + 1;
    let events: Vec<ConsumptionEvent> = (0..state.n_agents())
        .filter_map(|i| {
            choose(state, &scorer, i, &mut hits).map(|item| ConsumptionEvent {
                agent: i,
                item,
                round,
            })
        })
        .collect();
    for ev in &events {
        let agent = &mut state.agents[ev.agent];
        agent.consumed[ev.item] = Some(round);
        agent.history.push(ev.item);
        state.items[ev.item].consumption_count += 1;
    }
    state.round = round;
    events
}

fn record(state: &MarketState, events: Vec<ConsumptionEvent>) -> RoundRecord {
    let n = state.n_agents() as f64;
    RoundRecord {
        round: state.round,
        shares: state
            .items
            .iter()
            .map(|it| it.consumption_count as f64 / n)
            .collect(),
        counts: state.items.iter().map(|it| it.consumption_count).collect(),
        events,
    }
}

/// Advances `state` through the configured horizon, introducing items when
/// due at the top of a round.
pub fn run_from_state<R: Rng + ?Sized>(
    config: &SimulationConfig,
    mut state: MarketState,
    rng: &mut R,
) -> Trace {
    let mut rounds = Vec::with_capacity(config.rounds as usize);
    for _ in 0..config.rounds {
        if introduction_due(&state) {
            introduce_items(&mut state, config, rng);
        }
        let events = step(&mut state);
        rounds.push(record(&state, events));
    }
    let qualities = (0..state.n_items())
        .map(|a| state.quality(a).expect("valid item"))
        .collect();
    Trace {
        config: config.clone(),
        items: state.items.iter().map(ItemInfo::from).collect(),
        rounds,
        qualities,
    }
}

/// Full run seeded by `config.seed`.
pub fn run(config: &SimulationConfig) -> Result<Trace> {
    let mut rng = SimRng::seed_from_u64(config.seed);
    let state = init_market(config, &mut rng)?;
    Ok(run_from_state(config, state, &mut rng))
}

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `index` in an ensemble: the `index + 1`-th output of a
/// SplitMix64 stream started at `master`.
pub fn run_seed(master: u64, index: usize) -> u64 {
    mix64(master.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// Per-round mean over an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRound {
    pub round: u32,
    pub share_mean: Vec<f64>,
    /// Population standard deviation over runs.
    pub share_std: Vec<f64>,
    /// Mean of the per-run share increase during this round.
    pub rate_mean: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub runs: usize,
    pub items: Vec<ItemInfo>,
    pub rounds: Vec<EnsembleRound>,
    /// `[run][item]` share after the last round.
    pub final_shares: Vec<Vec<f64>>,
    /// `[run][item]` sum of shares over all rounds.
    pub integrated_shares: Vec<Vec<f64>>,
    /// `[run][item]` quality at the end of the run.
    pub qualities: Vec<Vec<f64>>,
}

/// Shares of one run, without the event log.
struct RunSummary {
    items: Vec<ItemInfo>,
    shares: Vec<Vec<f64>>,
    qualities: Vec<f64>,
}

fn summarize(trace: Trace) -> RunSummary {
    let m = trace.items.len();
    let shares = trace
        .rounds
        .into_iter()
        .map(|r| {
            let mut s = r.shares;
            s.resize(m, 0.0);
            s
        })
        .collect();
    RunSummary {
        items: trace.items,
        shares,
        qualities: trace.qualities,
    }
}

/// `runs` independent runs seeded with [`run_seed`], executed on the current
/// rayon pool and reduced in run-index order, so the result does not depend
/// on the number of worker threads.
pub fn run_ensemble(config: &SimulationConfig, runs: usize) -> Result<EnsembleResult> {
    if runs == 0 {
        return Err(Error::domain("runs", "must be at least 1"));
    }
    config.validate()?;
    let summaries: Vec<RunSummary> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let mut cfg = config.clone();
            cfg.seed = run_seed(config.seed, r);
            run(&cfg).map(summarize)
        })
        .collect::<Result<_>>()?;
    Ok(aggregate(&summaries))
}

fn aggregate(summaries: &[RunSummary]) -> EnsembleResult {
    let runs = summaries.len();
    let first = &summaries[0];
    let m = first.items.len();
    let horizon = first.shares.len();
    let inv = 1.0 / runs as f64;

    let rounds = (0..horizon)
        .map(|t| {
            let mut mean = vec![0.0; m];
            let mut rate = vec![0.0; m];
            for s in summaries {
                for a in 0..m {
                    mean[a] += s.shares[t][a];
                    let prev = if t == 0 { 0.0 } else { s.shares[t - 1][a] };
                    rate[a] += s.shares[t][a] - prev;
                }
            }
            mean.iter_mut().chain(rate.iter_mut()).for_each(|v| *v *= inv);
            let mut var = vec![0.0; m];
            for s in summaries {
                for a in 0..m {
                    let d = s.shares[t][a] - mean[a];
                    var[a] += d * d;
                }
            }
            EnsembleRound {
                round: t as u32 + 1,
                share_mean: mean,
                share_std: var.into_iter().map(|v| (v * inv).sqrt()).collect(),
                rate_mean: rate,
            }
        })
        .collect();

    EnsembleResult {
        runs,
        items: first.items.clone(),
        rounds,
        final_shares: summaries
            .iter()
            .map(|s| s.shares.last().cloned().unwrap_or_default())
            .collect(),
        integrated_shares: summaries
            .iter()
            .map(|s| {
                (0..m)
                    .map(|a| s.shares.iter().map(|row| row[a]).sum())
                    .collect()
            })
            .collect(),
        qualities: summaries.iter().map(|s| s.qualities.clone()).collect(),
    }
}

impl EnsembleResult {
    /// Mean share of `item` after the last round.
    pub fn final_mean(&self, item: ItemId) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.share_mean[item])
    }

    /// Mean per-round consumption rate of `item`.
    pub fn rate_series(&self, item: ItemId) -> Vec<f64> {
        self.rounds.iter().map(|r| r.rate_mean[item]).collect()
    }

    pub fn mean_series(&self, item: ItemId) -> Vec<f64> {
        self.rounds.iter().map(|r| r.share_mean[item]).collect()
    }
}
