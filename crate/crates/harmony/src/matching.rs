//! Exact combinatorial routines on bipartite demand graphs: maximum
//! matching, Hall-condition witnesses, capacitated one-to-many matching, and
//! transportation feasibility with prescribed marginals.
//!
//! Everything runs in exact rational arithmetic. Graphs here have at most a
//! few dozen nodes, so repeated augmenting paths are all that is needed.

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::Rat;

/// Bipartite agent-room graph, optionally weighted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemandGraph {
    pub agent_count: usize,
    pub room_count: usize,
    /// `(agent, room)` pairs, sorted and deduplicated.
    pub edges: Vec<(usize, usize)>,
}

impl DemandGraph {
    pub fn new(
        agent_count: usize,
        room_count: usize,
        mut edges: Vec<(usize, usize)>,
    ) -> Result<Self, MatchingError> {
        edges.sort_unstable();
        edges.dedup();
        for &(i, j) in &edges {
            if i >= agent_count || j >= room_count {
                return Err(MatchingError::BadEdge { agent: i, room: j });
            }
        }
        Ok(DemandGraph {
            agent_count,
            room_count,
            edges,
        })
    }

    pub fn neighbors_of_agent(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .filter(move |&&(a, _)| a == i)
            .map(|&(_, j)| j)
    }

    /// Graph with one room removed (edges dropped, indices preserved).
    pub fn without_room(&self, room: usize) -> DemandGraph {
        DemandGraph {
            agent_count: self.agent_count,
            room_count: self.room_count,
            edges: self
                .edges
                .iter()
                .filter(|&&(_, j)| j != room)
                .cloned()
                .collect(),
        }
    }

    /// Graph with one agent removed (edges dropped, indices preserved).
    pub fn without_agent(&self, agent: usize) -> DemandGraph {
        DemandGraph {
            agent_count: self.agent_count,
            room_count: self.room_count,
            edges: self
                .edges
                .iter()
                .filter(|&&(i, _)| i != agent)
                .cloned()
                .collect(),
        }
    }
}

/// Target row/column sums for a transportation weight function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarginalPair {
    /// One entry per agent; nonnegative, sums to 1.
    pub agent_marginals: Vec<Rat>,
    /// One entry per room; nonnegative, sums to 1.
    pub room_marginals: Vec<Rat>,
}

impl MarginalPair {
    pub fn new(agent_marginals: Vec<Rat>, room_marginals: Vec<Rat>) -> Result<Self, MatchingError> {
        if agent_marginals.iter().any(Rat::is_negative)
            || room_marginals.iter().any(Rat::is_negative)
        {
            return Err(MatchingError::NegativeMarginal);
        }
        let sa: Rat = agent_marginals.iter().cloned().sum();
        let sb: Rat = room_marginals.iter().cloned().sum();
        if sa != sb {
            return Err(MatchingError::MarginalSumMismatch);
        }
        Ok(MarginalPair {
            agent_marginals,
            room_marginals,
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatchingError {
    #[error("edge references invalid index (agent {agent}, room {room})")]
    BadEdge { agent: usize, room: usize },
    #[error("marginal vectors have different sums")]
    MarginalSumMismatch,
    #[error("negative marginal entry")]
    NegativeMarginal,
    #[error("capacity sum does not equal agent count")]
    CapacitySumMismatch,
}

/// Side of the bipartition a Hall check is run from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Agents,
    Rooms,
}

// --- exact rational max flow ------------------------------------------------

#[derive(Clone)]
struct FlowEdge {
    to: usize,
    cap: Option<Rat>, // None = unbounded
    flow: Rat,
    rev: usize,
}

struct FlowNet {
    adj: Vec<Vec<FlowEdge>>,
}

impl FlowNet {
    fn new(nodes: usize) -> Self {
        FlowNet {
            adj: vec![Vec::new(); nodes],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: Option<Rat>) -> (usize, usize) {
        let fwd = self.adj[from].len();
        let bwd = self.adj[to].len();
        self.adj[from].push(FlowEdge {
            to,
            cap,
            flow: Rat::zero(),
            rev: bwd,
        });
        self.adj[to].push(FlowEdge {
            to: from,
            cap: Some(Rat::zero()),
            flow: Rat::zero(),
            rev: fwd,
        });
        (from, fwd)
    }

    fn residual(&self, from: usize, idx: usize) -> Option<Rat> {
        let e = &self.adj[from][idx];
        e.cap.as_ref().map(|c| c - &e.flow)
    }

    /// BFS augmenting paths (Edmonds-Karp), scanning edges in insertion
    /// order so results are deterministic.
    fn max_flow(&mut self, source: usize, sink: usize) -> Rat {
        let mut total = Rat::zero();
        loop {
            let n = self.adj.len();
            let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
            let mut seen = vec![false; n];
            let mut queue = std::collections::VecDeque::new();
            seen[source] = true;
            queue.push_back(source);
            'bfs: while let Some(u) = queue.pop_front() {
                for idx in 0..self.adj[u].len() {
                    let to = self.adj[u][idx].to;
                    if seen[to] {
                        continue;
                    }
                    let usable = match self.residual(u, idx) {
                        None => true,
                        Some(r) => r.is_positive(),
                    };
                    if !usable {
                        continue;
                    }
                    seen[to] = true;
                    prev[to] = Some((u, idx));
                    if to == sink {
                        break 'bfs;
                    }
                    queue.push_back(to);
                }
            }
            if !seen[sink] {
                return total;
            }
            // bottleneck along the path
            let mut bottleneck: Option<Rat> = None;
            let mut v = sink;
            while v != source {
                let (u, idx) = prev[v].expect("path exists");
                if let Some(r) = self.residual(u, idx) {
                    bottleneck = Some(match bottleneck {
                        None => r,
                        Some(b) if r < b => r,
                        Some(b) => b,
                    });
                }
                v = u;
            }
            let push = bottleneck.expect("source and sink edges are capacitated");
            debug_assert!(push.is_positive());
            let mut v = sink;
            while v != source {
                let (u, idx) = prev[v].expect("path exists");
                self.adj[u][idx].flow += &push;
                let rev = self.adj[u][idx].rev;
                self.adj[v][rev].flow -= &push;
                v = u;
            }
            total += push;
        }
    }

    /// Nodes reachable from `source` in the residual network.
    fn residual_reachable(&self, source: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        let mut queue = std::collections::VecDeque::new();
        seen[source] = true;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for idx in 0..self.adj[u].len() {
                let to = self.adj[u][idx].to;
                if seen[to] {
                    continue;
                }
                let usable = match self.residual(u, idx) {
                    None => true,
                    Some(r) => r.is_positive(),
                };
                if usable {
                    seen[to] = true;
                    queue.push_back(to);
                }
            }
        }
        seen
    }
}

/// Decide whether nonnegative edge weights with the prescribed marginals
/// exist; if so return them, one weight per edge of `g` (in `g.edges`
/// order). Decided by exact rational max flow.
pub fn transportation_feasible(
    g: &DemandGraph,
    marg: &MarginalPair,
) -> Result<Option<Vec<Rat>>, MatchingError> {
    if marg.agent_marginals.len() != g.agent_count
        || marg.room_marginals.len() != g.room_count
    {
        return Err(MatchingError::MarginalSumMismatch);
    }
    let total: Rat = marg.agent_marginals.iter().cloned().sum();
    let n = g.agent_count;
    let m = g.room_count;
    let source = 0;
    let sink = n + m + 1;
    let mut net = FlowNet::new(n + m + 2);
    for (i, b) in marg.agent_marginals.iter().enumerate() {
        net.add_edge(source, 1 + i, Some(b.clone()));
    }
    let mut edge_refs = Vec::with_capacity(g.edges.len());
    for &(i, j) in &g.edges {
        edge_refs.push(net.add_edge(1 + i, 1 + n + j, None));
    }
    for (j, a) in marg.room_marginals.iter().enumerate() {
        net.add_edge(1 + n + j, sink, Some(a.clone()));
    }
    let flow = net.max_flow(source, sink);
    if flow != total {
        return Ok(None);
    }
    let weights = edge_refs
        .iter()
        .map(|&(from, idx)| net.adj[from][idx].flow.clone())
        .collect();
    Ok(Some(weights))
}

/// Maximum matching by augmenting paths, agents scanned in index order.
pub fn max_matching(g: &DemandGraph) -> Vec<(usize, usize)> {
    let mut room_mate: Vec<Option<usize>> = vec![None; g.room_count];
    let adj: Vec<Vec<usize>> = (0..g.agent_count)
        .map(|i| g.neighbors_of_agent(i).collect())
        .collect();

    fn try_augment(
        i: usize,
        adj: &[Vec<usize>],
        room_mate: &mut [Option<usize>],
        visited: &mut [bool],
    ) -> bool {
        for &j in &adj[i] {
            if visited[j] {
                continue;
            }
            visited[j] = true;
            let free = match room_mate[j] {
                None => true,
                Some(other) => try_augment(other, adj, room_mate, visited),
            };
            if free {
                room_mate[j] = Some(i);
                return true;
            }
        }
        false
    }

    for i in 0..g.agent_count {
        let mut visited = vec![false; g.room_count];
        try_augment(i, &adj, &mut room_mate, &mut visited);
    }
    let mut matching: Vec<(usize, usize)> = room_mate
        .iter()
        .enumerate()
        .filter_map(|(j, mate)| mate.map(|i| (i, j)))
        .collect();
    matching.sort_unstable();
    matching
}

/// Check the capacitated Hall condition from the chosen side; return a
/// violating subset (its neighborhood is too small for its demand) or `None`.
///
/// `room_capacities` gives each room's capacity; agents always demand 1.
pub fn hall_violation(
    g: &DemandGraph,
    room_capacities: &[u64],
    side: Side,
) -> Option<Vec<usize>> {
    assert_eq!(room_capacities.len(), g.room_count);
    let n = g.agent_count;
    let m = g.room_count;
    let source = 0;
    let sink = n + m + 1;
    let mut net = FlowNet::new(n + m + 2);
    match side {
        Side::Agents => {
            // demand: 1 per agent; supply: capacity per room
            for i in 0..n {
                net.add_edge(source, 1 + i, Some(Rat::one()));
            }
            for &(i, j) in &g.edges {
                net.add_edge(1 + i, 1 + n + j, None);
            }
            for (j, &c) in room_capacities.iter().enumerate() {
                net.add_edge(1 + n + j, sink, Some(Rat::from_integer((c as i64).into())));
            }
            let flow = net.max_flow(source, sink);
            if flow == Rat::from_integer((n as i64).into()) {
                return None;
            }
            let reach = net.residual_reachable(source);
            Some((0..n).filter(|&i| reach[1 + i]).collect())
        }
        Side::Rooms => {
            // demand: capacity per room; supply: 1 per agent
            for (j, &c) in room_capacities.iter().enumerate() {
                net.add_edge(source, 1 + j, Some(Rat::from_integer((c as i64).into())));
            }
            for &(i, j) in &g.edges {
                net.add_edge(1 + j, 1 + m + i, None);
            }
            for i in 0..n {
                net.add_edge(1 + m + i, sink, Some(Rat::one()));
            }
            let total: u64 = room_capacities.iter().sum();
            let flow = net.max_flow(source, sink);
            if flow == Rat::from_integer((total as i64).into()) {
                return None;
            }
            let reach = net.residual_reachable(source);
            Some((0..m).filter(|&j| reach[1 + j]).collect())
        }
    }
}

/// Outcome of a capacitated matching attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CapacityMatching {
    /// `assignment[j]` lists the agents matched to room `j`.
    Feasible(Vec<Vec<usize>>),
    /// A set of agents whose joint neighborhood capacity is too small.
    Infeasible { violating_agents: Vec<usize> },
}

/// One-to-many matching filling each room to capacity and saturating all
/// agents, or an explicit Hall violation witness.
pub fn capacity_matching(
    g: &DemandGraph,
    capacities: &[u32],
) -> Result<CapacityMatching, MatchingError> {
    assert_eq!(capacities.len(), g.room_count);
    let cap_sum: u64 = capacities.iter().map(|&c| c as u64).sum();
    if cap_sum != g.agent_count as u64 {
        return Err(MatchingError::CapacitySumMismatch);
    }
    let n = g.agent_count;
    let m = g.room_count;
    let source = 0;
    let sink = n + m + 1;
    let mut net = FlowNet::new(n + m + 2);
    for i in 0..n {
        net.add_edge(source, 1 + i, Some(Rat::one()));
    }
    let mut edge_refs = Vec::with_capacity(g.edges.len());
    for &(i, j) in &g.edges {
        edge_refs.push(net.add_edge(1 + i, 1 + n + j, Some(Rat::one())));
    }
    for (j, &c) in capacities.iter().enumerate() {
        net.add_edge(1 + n + j, sink, Some(Rat::from_integer((c as i64).into())));
    }
    let flow = net.max_flow(source, sink);
    if flow != Rat::from_integer((n as i64).into()) {
        let reach = net.residual_reachable(source);
        return Ok(CapacityMatching::Infeasible {
            violating_agents: (0..n).filter(|&i| reach[1 + i]).collect(),
        });
    }
    // integral caps + augmenting paths give an integral flow
    let mut assignment = vec![Vec::new(); m];
    for (&(from, idx), &(i, j)) in edge_refs.iter().zip(&g.edges) {
        if net.adj[from][idx].flow.is_one() {
            assignment[j].push(i);
        }
    }
    for set in assignment.iter_mut() {
        set.sort_unstable();
    }
    Ok(CapacityMatching::Feasible(assignment))
}
