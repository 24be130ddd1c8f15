#![allow(dead_code)]

use fashsim::engine::{init_market, introduce_items, introduction_due, step, SimRng, SimulationConfig, Trace};
use fashsim::graph::{SocialGraph, TopologyKind, TopologySpec};
use fashsim::model::{MarketMode, MarketParams, MarketState, NewItemLiking, SocialBlend};
use rand::{Rng, SeedableRng};

/// Triangle scenario from docs/oracles.md.
pub fn three_agent_state() -> MarketState {
    let mut params = MarketParams::default();
    params.mode = MarketMode::Cultural;
    params.gamma = 0.5;
    MarketState::new(
        params,
        SocialGraph::ring(3, 2).unwrap(),
        &[1.0; 3],
        vec![
            vec![0.9, 0.5, 0.1],
            vec![0.3, 0.8, 0.6],
            vec![0.7, 0.2, 0.65],
        ],
        &[0.0; 3],
    )
    .unwrap()
}

/// Two-agent scenario from docs/oracles.md.
pub fn two_agent_state() -> MarketState {
    let mut params = MarketParams::default();
    params.mode = MarketMode::Cultural;
    params.gamma = 0.0;
    MarketState::new(
        params,
        SocialGraph::from_edges(2, &[(0, 1)]).unwrap(),
        &[1.0; 2],
        vec![vec![0.9, 0.1], vec![0.2, 0.8]],
        &[0.0; 2],
    )
    .unwrap()
}

/// Random small configuration: n <= 20, m <= 10, rounds <= 15.
pub fn random_small_config(rng: &mut SimRng) -> SimulationConfig {
    let n = rng.gen_range(3..=20usize);
    let max_half = (n - 1) / 2;
    let k = 2 * rng.gen_range(1..=max_half.clamp(1, 3));
    let kind = match rng.gen_range(0..3) {
        0 => TopologyKind::Ring,
        1 => TopologyKind::Random,
        _ => TopologyKind::SmallWorld,
    };
    let mut params = MarketParams::default();
    params.mode = if rng.gen_bool(0.5) { MarketMode::Fashion } else { MarketMode::Cultural };
    params.gamma = rng.gen();
    params.beta = rng.gen_range(0.1..20.0);
    params.sigmoid_center = rng.gen();
    params.intro_period = rng.gen_range(1..=6);
    params.intro_batch = rng.gen_range(1..=2);
    params.utility_social_blend = if rng.gen_bool(0.5) { SocialBlend::Liking } else { SocialBlend::LiteralConsumption };
    params.new_item_liking = if rng.gen_bool(0.5) { NewItemLiking::Zero } else { NewItemLiking::Uniform };
    params.penalty_enabled = rng.gen_bool(0.8);
    params.min_utility = if rng.gen_bool(0.2) { Some(rng.gen_range(-0.5..0.5)) } else { None };
    SimulationConfig {
        n_agents: n,
        m_initial: rng.gen_range(1..=10),
        rounds: rng.gen_range(1..=15),
        topology: TopologySpec { kind, k, p: rng.gen() },
        params,
        intro_ads: (0..rng.gen_range(1..4)).map(|_| rng.gen()).collect(),
        catalog_ads: if rng.gen_bool(0.5) { 0.0 } else { rng.gen() },
        tracked_ad: if rng.gen_bool(0.3) { Some(rng.gen()) } else { None },
        seed: rng.gen(),
    }
}

/// Steps a market by hand, checking state consistency after every round,
/// and returns the final state alongside the per-round events.
pub fn stepped_run(config: &SimulationConfig) -> Result<MarketState, String> {
    let mut rng = SimRng::seed_from_u64(config.seed);
    let mut state = init_market(config, &mut rng).map_err(|e| e.to_string())?;
    let mut sizes: Vec<usize> = vec![0; state.n_agents()];
    for _ in 0..config.rounds {
        if introduction_due(&state) {
            introduce_items(&mut state, config, &mut rng);
        }
        let before: Vec<usize> = state.items.iter().map(|it| it.consumption_count).collect();
        step(&mut state);
        state.check_consistency()?;
        for (b, it) in before.iter().zip(&state.items) {
            if it.consumption_count < *b {
                return Err(format!("item {} count decreased", it.id));
            }
        }
        for (a, s) in state.agents.iter().zip(sizes.iter_mut()) {
            if a.history.len() > *s + 1 || a.history.len() < *s {
                return Err(format!("agent {} consumed set grew by more than one", a.id));
            }
            *s = a.history.len();
        }
    }
    Ok(state)
}

/// Checks the invariants a trace must satisfy.
pub fn check_trace(trace: &Trace) -> Result<(), String> {
    let n = trace.config.n_agents;
    let mut seen = std::collections::HashSet::new();
    let mut counts = vec![0usize; trace.items.len()];
    let mut prev_shares: Vec<f64> = Vec::new();
    for r in &trace.rounds {
        let mut agents = std::collections::HashSet::new();
        for ev in &r.events {
            if ev.round != r.round {
                return Err(format!("event round {} in record {}", ev.round, r.round));
            }
            if !agents.insert(ev.agent) {
                return Err(format!("agent {} consumed twice in round {}", ev.agent, r.round));
            }
            if !seen.insert((ev.agent, ev.item)) {
                return Err(format!("agent {} consumed item {} twice", ev.agent, ev.item));
            }
            counts[ev.item] += 1;
        }
        for (id, (&share, &count)) in r.shares.iter().zip(&r.counts).enumerate() {
            if count != counts[id] {
                return Err(format!("round {} item {id}: count {count} vs events {}", r.round, counts[id]));
            }
            if share * n as f64 != count as f64 {
                return Err(format!("share {share} * n != count {count}"));
            }
            if !(0.0..=1.0).contains(&share) {
                return Err(format!("share {share} outside [0, 1]"));
            }
            if let Some(&p) = prev_shares.get(id) {
                if share < p {
                    return Err(format!("share of item {id} decreased in round {}", r.round));
                }
            }
        }
        prev_shares = r.shares.clone();
    }
    Ok(())
}
