//! Undirected social topologies: ring lattice, Erdős–Rényi random graph and
//! Watts–Strogatz small world.
//!
//! Graphs are immutable once built. Neighbor lists are kept sorted so that
//! iteration order (and therefore every downstream floating-point sum) is
//! deterministic.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type AgentId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKind {
    Ring,
    Random,
    SmallWorld,
}

impl TopologyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TopologyKind::Ring => "ring",
            TopologyKind::Random => "random",
            TopologyKind::SmallWorld => "small-world",
        }
    }
}

impl std::str::FromStr for TopologyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "ring" => Ok(TopologyKind::Ring),
            "random" => Ok(TopologyKind::Random),
            "small-world" | "small_world" | "smallworld" => Ok(TopologyKind::SmallWorld),
            other => Err(format!("unknown topology '{other}' (expected ring|random|small-world)")),
        }
    }
}

/// Which topology to build and with what parameters.
///
/// `k` is used by ring and small-world, `p` by random (edge probability) and
/// small-world (rewiring probability).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    pub k: usize,
    pub p: f64,
}

impl Default for TopologySpec {
    fn default() -> Self {
        TopologySpec {
            kind: TopologyKind::Ring,
            k: 4,
            p: 0.1,
        }
    }
}

impl TopologySpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        match self.kind {
            TopologyKind::Ring => check_lattice(n, self.k),
            TopologyKind::SmallWorld => {
                check_lattice(n, self.k)?;
                check_probability(self.p)
            }
            TopologyKind::Random => {
                if n < 2 {
                    return Err(Error::Topology(format!("random graph needs n >= 2, got {n}")));
                }
                check_probability(self.p)
            }
        }
    }

    pub fn build<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<SocialGraph> {
        match self.kind {
            TopologyKind::Ring => SocialGraph::ring(n, self.k),
            TopologyKind::Random => SocialGraph::random(n, self.p, rng),
            TopologyKind::SmallWorld => SocialGraph::small_world(n, self.k, self.p, rng),
        }
    }
}

fn check_lattice(n: usize, k: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::Topology(format!("ring needs n >= 3, got {n}")));
    }
    if k == 0 || !k.is_multiple_of(2) {
        return Err(Error::Topology(format!("k must be a positive even integer, got {k}")));
    }
    if k >= n {
        return Err(Error::Topology(format!("k must be below n, got k = {k}, n = {n}")));
    }
    Ok(())
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Topology(format!("probability must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// Undirected simple graph over agents `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialGraph {
    adjacency: Vec<Vec<AgentId>>,
}

impl SocialGraph {
    /// Graph with `n` agents and no edges.
    pub fn empty(n: usize) -> Self {
        SocialGraph {
            adjacency: vec![Vec::new(); n],
        }
    }

    /// Builds a graph from an undirected edge list. Duplicate edges are
    /// merged; self-loops and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: &[(AgentId, AgentId)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::AgentOutOfRange { id: a.max(b), n });
            }
            if a == b {
                return Err(Error::Topology(format!("self-loop on agent {a}")));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        Ok(Self::normalized(adjacency))
    }

    fn normalized(mut adjacency: Vec<Vec<AgentId>>) -> Self {
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        SocialGraph { adjacency }
    }

    /// Ring lattice: every agent linked to the `k / 2` nearest ids on each side.
    pub fn ring(n: usize, k: usize) -> Result<Self> {
        check_lattice(n, k)?;
        let half = k / 2;
        let adjacency = (0..n)
            .map(|i| {
                (1..=half)
                    .flat_map(|d| [(i + d) % n, (i + n - d) % n])
                    .collect()
            })
            .collect();
        Ok(Self::normalized(adjacency))
    }

    /// G(n, p): each unordered pair is an edge independently with probability `p`.
    pub fn random<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Self> {
        if n < 2 {
            return Err(Error::Topology(format!("random graph needs n >= 2, got {n}")));
        }
        check_probability(p)?;
        let mut adjacency = vec![Vec::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_bool(p) {
                    adjacency[i].push(j);
                    adjacency[j].push(i);
                }
            }
        }
        Ok(Self::normalized(adjacency))
    }

    /// Watts–Strogatz small world.
    ///
    /// Starts from `ring(n, k)` and visits the clockwise edges `(i, i + d)` for
    /// `d = 1..=k/2`, node by node. Each one is rewired with probability `p` to
    /// `(i, t)` where `t` is drawn uniformly from the agents that are neither
    /// `i` nor already adjacent to `i`. When no such agent exists the edge is
    /// kept. The edge count stays at `n * k / 2`.
    pub fn small_world<R: Rng + ?Sized>(n: usize, k: usize, p: f64, rng: &mut R) -> Result<Self> {
        check_lattice(n, k)?;
        check_probability(p)?;
        let mut graph = Self::ring(n, k)?;
        if p == 0.0 {
            return Ok(graph);
        }
        for d in 1..=k / 2 {
            for i in 0..n {
                let j = (i + d) % n;
                // an earlier rewiring may already have removed this edge
                if !graph.has_edge(i, j) || !rng.gen_bool(p) {
                    continue;
                }
                let candidates: Vec<AgentId> = (0..n)
                    .filter(|&t| t != i && !graph.has_edge(i, t))
                    .collect();
                if candidates.is_empty() {
                    continue;
                }
                let t = candidates[rng.gen_range(0..candidates.len())];
                graph.remove_edge(i, j);
                graph.insert_edge(i, t);
            }
        }
        Ok(graph)
    }

    fn has_edge(&self, a: AgentId, b: AgentId) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    fn insert_edge(&mut self, a: AgentId, b: AgentId) {
        for (x, y) in [(a, b), (b, a)] {
            if let Err(pos) = self.adjacency[x].binary_search(&y) {
                self.adjacency[x].insert(pos, y);
            }
        }
    }

    fn remove_edge(&mut self, a: AgentId, b: AgentId) {
        for (x, y) in [(a, b), (b, a)] {
            if let Ok(pos) = self.adjacency[x].binary_search(&y) {
                self.adjacency[x].remove(pos);
            }
        }
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    /// Sorted neighbor ids of agent `i`.
    pub fn neighbors(&self, i: AgentId) -> Result<&[AgentId]> {
        self.adjacency
            .get(i)
            .map(Vec::as_slice)
            .ok_or(Error::AgentOutOfRange { id: i, n: self.n() })
    }

    /// Unchecked variant for hot loops where `i` is known valid.
    pub(crate) fn neighbors_of(&self, i: AgentId) -> &[AgentId] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: AgentId) -> Result<usize> {
        self.neighbors(i).map(<[AgentId]>::len)
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(a, b)` with `a < b`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (AgentId, AgentId)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, list)| list.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
    }

    /// Mean local clustering coefficient. Agents with degree < 2 count as 0.
    pub fn mean_clustering(&self) -> f64 {
        let n = self.n();
        if n == 0 {
            return 0.0;
        }
        let total: f64 = (0..n)
            .map(|i| {
                let nb = &self.adjacency[i];
                let d = nb.len();
                if d < 2 {
                    return 0.0;
                }
                let mut links = 0usize;
                for (x, &a) in nb.iter().enumerate() {
                    for &b in &nb[x + 1..] {
                        if self.has_edge(a, b) {
                            links += 1;
                        }
                    }
                }
                2.0 * links as f64 / (d * (d - 1)) as f64
            })
            .sum();
        total / n as f64
    }

    /// Applies an agent relabeling: agent `i` becomes `perm[i]`.
    pub fn relabeled(&self, perm: &[AgentId]) -> Self {
        let mut adjacency = vec![Vec::new(); self.n()];
        for (i, list) in self.adjacency.iter().enumerate() {
            adjacency[perm[i]] = list.iter().map(|&j| perm[j]).collect();
        }
        Self::normalized(adjacency)
    }
}
