//! The simplicial solver: label grid vertices with best rooms, scan Kuhn
//! cells for demand graphs that admit the mode's target marginals, refine
//! the mesh around hits, and extract an epsilon-envy-free solution at the
//! accepted cell's centroid prices.
//!
//! One engine serves all four modes; only the target marginals and the
//! extraction step differ. Prices are exact rationals from the compensable
//! price map, so `sum(p) = R` holds exactly in every output.

use std::collections::HashMap;
use std::time::Instant;

use num_traits::Zero;
use thiserror::Error;

use crate::domain::{Allocation, Certificate, Instance, Mode, PriceVector};
use crate::matching::{
    capacity_matching, max_matching, transportation_feasible, CapacityMatching, DemandGraph,
    MarginalPair,
};
use crate::mesh::{cell_geometry, cells, cells_in_box, Cell, GridPoint, PriceMap};
use crate::preferences::{OracleError, Utility};
use crate::rational::{format_rat, rat, Rat};

/// Per-round extraction attempts before refining.
const MAX_EXTRACTION_ATTEMPTS: usize = 64;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub k0: u64,
    pub growth: u64,
    /// Price-diameter target. Extraction is attempted at every feasible cell
    /// and independently verified, so this is accepted for configuration
    /// compatibility but does not gate extraction.
    pub tol_p: Option<Rat>,
    /// Envy tolerance; defaults to `1e-6 * max(R, T)`.
    pub epsilon: Option<Rat>,
    pub max_rounds: u32,
    /// Localization radius, in cells at the previous resolution.
    pub localization_radius: u64,
    /// Recorded in diagnostics; the scan itself is sequential and its result
    /// does not depend on this value.
    pub workers: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            k0: 4,
            growth: 2,
            tol_p: None,
            epsilon: None,
            max_rounds: 32,
            localization_radius: 2,
            workers: 1,
        }
    }
}

impl SolverConfig {
    pub fn resolved_epsilon(&self, instance: &Instance) -> Rat {
        match &self.epsilon {
            Some(e) => e.clone(),
            None => {
                let scale = instance
                    .compensation_bound
                    .clone()
                    .max(instance.total_rent.clone());
                scale * rat(1, 1_000_000)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Diagnostics {
    pub rounds: u32,
    pub final_k: u64,
    pub cells_scanned: u64,
    pub oracle_calls: u64,
    pub wall_time_ms: u64,
}

/// One per-scenario matching for the secretive / extra modes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    /// The room picked by the secret agent, or the agent who leaves.
    pub excluded: usize,
    /// `(agent, room)` pairs covering every participating agent.
    pub assignment: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolutionPayload {
    /// Classic and roommates modes: one allocation.
    Allocation(Allocation),
    /// Secretive mode: one matching per possible secret pick.
    SecretiveScenarios(Vec<Scenario>),
    /// Extra mode: one matching per possible leaver.
    ExtraScenarios(Vec<Scenario>),
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// Finite exact prices summing to the total rent.
    pub prices: Vec<Rat>,
    pub payload: SolutionPayload,
    /// One certificate for allocation payloads, one per scenario otherwise.
    pub certificates: Vec<Certificate>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("assumption violation: agent {agent} has no best room off the boundary at prices {prices}; the oracle is not compensable with this T")]
    AssumptionViolation { agent: usize, prices: String },
    #[error("no feasible cell in a global scan at k = {k}; this falsifies the compensability of some oracle (or the triangulation assumption) and should not happen for validated instances")]
    NoFeasibleCell { k: u64 },
    #[error("max refinement rounds exceeded (reached k = {final_k} in {rounds} rounds)")]
    MaxRoundsExceeded {
        rounds: u32,
        final_k: u64,
        diagnostics: Diagnostics,
    },
    #[error("oracle error: {0}")]
    Oracle(#[from] OracleError),
}

/// Target marginals per mode (uniform over agents; room side scaled by
/// capacity in roommates mode).
pub fn mode_marginals(instance: &Instance) -> MarginalPair {
    let n = instance.agent_count() as i64;
    let m = instance.room_count() as i64;
    let (b, a) = match instance.mode {
        Mode::Classic => (vec![rat(1, n); n as usize], vec![rat(1, m); m as usize]),
        Mode::Roommates => (
            vec![rat(1, n); n as usize],
            instance
                .rooms
                .iter()
                .map(|room| rat(room.capacity as i64, n))
                .collect(),
        ),
        Mode::Secretive => (vec![rat(1, n); n as usize], vec![rat(1, m); m as usize]),
        Mode::Extra => (vec![rat(1, n); n as usize], vec![rat(1, m); m as usize]),
    };
    MarginalPair::new(b, a).expect("uniform marginals always consistent")
}

/// Shared per-resolution labeling state: memoized labels and oracle-call
/// accounting.
pub struct LabelContext<'a> {
    pub instance: &'a Instance,
    pub map: PriceMap,
    cache: HashMap<(usize, Vec<u64>), usize>,
    pub oracle_calls: u64,
}

impl<'a> LabelContext<'a> {
    pub fn new(instance: &'a Instance, map: PriceMap) -> Self {
        LabelContext {
            instance,
            map,
            cache: HashMap::new(),
            oracle_calls: 0,
        }
    }

    fn clear(&mut self) {
        self.cache.clear();
    }
}

/// Label one vertex for one agent: the lowest-index best room that keeps
/// Sperner's boundary condition (`x_label > 0` on boundary vertices).
pub fn label_vertex(
    ctx: &mut LabelContext,
    agent: usize,
    point: &GridPoint,
) -> Result<usize, EngineError> {
    if let Some(&label) = ctx.cache.get(&(agent, point.y.clone())) {
        return Ok(label);
    }
    let prices = ctx.map.price(&point.barycentric());
    ctx.oracle_calls += 1;
    let best = ctx.instance.agents[agent].oracle.best_rooms(&prices)?;
    let label = if point.is_boundary() {
        match best.iter().find(|&&j| point.y[j] > 0) {
            Some(&j) => j,
            None => {
                return Err(EngineError::AssumptionViolation {
                    agent,
                    prices: describe_prices(&prices),
                })
            }
        }
    } else {
        best[0]
    };
    debug_assert!(point.y[label] > 0, "Sperner boundary condition");
    ctx.cache.insert((agent, point.y.clone()), label);
    Ok(label)
}

fn describe_prices(p: &PriceVector) -> String {
    let parts: Vec<String> = p
        .0
        .iter()
        .map(|e| match e.as_finite() {
            Some(r) => format_rat(r),
            None => "inf".to_string(),
        })
        .collect();
    format!("({})", parts.join(", "))
}

/// Bipartite graph of labels used anywhere on the cell.
pub fn cell_demand_graph(ctx: &mut LabelContext, cell: &Cell) -> Result<DemandGraph, EngineError> {
    let n = ctx.instance.agent_count();
    let m = ctx.instance.room_count();
    let verts = cell.vertices();
    let mut edges = Vec::new();
    for agent in 0..n {
        for v in &verts {
            edges.push((agent, label_vertex(ctx, agent, v)?));
        }
    }
    Ok(DemandGraph::new(n, m, edges).expect("labels are valid room indices"))
}

/// First cell (in deterministic scan order) whose demand graph admits the
/// target marginals, with its transportation witness. `region` restricts the
/// scan to a base-coordinate box.
pub fn find_feasible_cell(
    ctx: &mut LabelContext,
    k: u64,
    marginals: &MarginalPair,
    region: Option<(&[u64], &[u64])>,
    cells_scanned: &mut u64,
) -> Result<Option<(Cell, DemandGraph, Vec<Rat>)>, EngineError> {
    let m = ctx.instance.room_count();
    let iter = match region {
        Some((lo, hi)) => cells_in_box(m, k, lo, hi),
        None => cells(m, k),
    }
    .expect("parameters validated upstream");
    for cell in iter {
        *cells_scanned += 1;
        let graph = cell_demand_graph(ctx, &cell)?;
        if let Some(w) = transportation_feasible(&graph, marginals).expect("marginals consistent") {
            return Ok(Some((cell, graph, w)));
        }
    }
    Ok(None)
}

/// Uniform shift making a finite price vector sum to `total` exactly.
pub fn shift_to_sum(p: &PriceVector, total: &Rat) -> Result<Vec<Rat>, OracleError> {
    let entries = p.finite_entries().ok_or(OracleError::AllInfinite)?;
    let m = entries.len() as i64;
    let sum: Rat = entries.iter().cloned().sum();
    let shift = (total - sum) / rat(m, 1);
    Ok(entries.into_iter().map(|e| e + &shift).collect())
}

/// Agent-room edges within `epsilon` of each agent's best utility at `p`
/// (exact best-room sets for ordinal oracles).
fn relaxed_demand_graph(
    instance: &Instance,
    p: &PriceVector,
    epsilon: &Rat,
) -> Result<DemandGraph, OracleError> {
    let n = instance.agent_count();
    let m = instance.room_count();
    let mut edges = Vec::new();
    for (i, agent) in instance.agents.iter().enumerate() {
        if agent.oracle.is_cardinal(p) {
            let utils: Vec<Utility> = (0..m)
                .map(|j| agent.oracle.utility(j, p))
                .collect::<Result<_, _>>()?;
            let best = utils.iter().max().expect("rooms nonempty").clone();
            for (j, u) in utils.iter().enumerate() {
                let close = match (&best, u) {
                    (Utility::Finite(b), Utility::Finite(u)) => b - u <= *epsilon,
                    (Utility::NegInfinite, Utility::NegInfinite) => true,
                    _ => false,
                };
                if close {
                    edges.push((i, j));
                }
            }
        } else {
            for j in agent.oracle.best_rooms(p)? {
                edges.push((i, j));
            }
        }
    }
    DemandGraph::new(n, m, edges).map_err(|_| OracleError::BadCustomAnswer)
}

fn extract_payload(
    instance: &Instance,
    graph: &DemandGraph,
    prices: &[Rat],
) -> Option<SolutionPayload> {
    let n = instance.agent_count();
    let m = instance.room_count();
    match instance.mode {
        Mode::Classic => {
            let matching = max_matching(graph);
            if matching.len() != n {
                return None;
            }
            let mut assignment = vec![Vec::new(); m];
            for &(i, j) in &matching {
                assignment[j].push(i);
            }
            Some(SolutionPayload::Allocation(Allocation {
                assignment,
                prices: prices.to_vec(),
            }))
        }
        Mode::Roommates => {
            let caps = instance.capacities();
            match capacity_matching(graph, &caps).ok()? {
                CapacityMatching::Feasible(assignment) => {
                    Some(SolutionPayload::Allocation(Allocation {
                        assignment,
                        prices: prices.to_vec(),
                    }))
                }
                CapacityMatching::Infeasible { .. } => None,
            }
        }
        Mode::Secretive => {
            let mut scenarios = Vec::with_capacity(m);
            for picked in 0..m {
                let reduced = graph.without_room(picked);
                let matching = max_matching(&reduced);
                if matching.len() != n {
                    return None;
                }
                scenarios.push(Scenario {
                    excluded: picked,
                    assignment: matching,
                });
            }
            Some(SolutionPayload::SecretiveScenarios(scenarios))
        }
        Mode::Extra => {
            let mut scenarios = Vec::with_capacity(n);
            for leaver in 0..n {
                let reduced = graph.without_agent(leaver);
                let matching = max_matching(&reduced);
                if matching.len() != m {
                    return None;
                }
                scenarios.push(Scenario {
                    excluded: leaver,
                    assignment: matching,
                });
            }
            Some(SolutionPayload::ExtraScenarios(scenarios))
        }
    }
}

/// Solve by refinement: scan, extract, refine around the hit, repeat.
pub fn solve(instance: &Instance, config: &SolverConfig) -> Result<Solution, EngineError> {
    let start = Instant::now();
    let epsilon = config.resolved_epsilon(instance);
    let marginals = mode_marginals(instance);
    let map = PriceMap::compensable(
        instance.compensation_bound.clone(),
        instance.total_rent.clone(),
    )
    .expect("instance guarantees T >= R");
    let mut ctx = LabelContext::new(instance, map);
    let m = instance.room_count();
    let radius = config.localization_radius.max(1);

    let mut diagnostics = Diagnostics::default();
    let mut k = config.k0.max(1);
    let mut prev_hit: Option<Vec<u64>> = None;

    for round in 1..=config.max_rounds {
        diagnostics.rounds = round;
        diagnostics.final_k = k;
        ctx.clear();

        let region = prev_hit.as_ref().map(|base| {
            let lo: Vec<u64> = base
                .iter()
                .map(|&z| (z * config.growth).saturating_sub(radius * config.growth))
                .collect();
            let hi: Vec<u64> = base
                .iter()
                .map(|&z| z * config.growth + config.growth + radius * config.growth)
                .collect();
            (lo, hi)
        });

        let mut round_hit: Option<Vec<u64>> = None;
        let mut result: Option<Solution> = None;
        let scans: Vec<Option<(Vec<u64>, Vec<u64>)>> = match &region {
            Some(r) => vec![Some(r.clone()), None],
            None => vec![None],
        };
        let mut scanned_global = false;
        for scan in scans {
            let scan_is_global = scan.is_none();
            scanned_global |= scan_is_global;
            let iter = match &scan {
                Some((lo, hi)) => cells_in_box(m, k, lo, hi),
                None => cells(m, k),
            }
            .expect("k >= 1, m >= 1");
            let mut attempts = 0usize;
            for cell in iter {
                diagnostics.cells_scanned += 1;
                let graph = cell_demand_graph(&mut ctx, &cell)?;
                let witness =
                    transportation_feasible(&graph, &marginals).expect("marginals consistent");
                if witness.is_none() {
                    continue;
                }
                if round_hit.is_none() {
                    round_hit = Some(cell.base.clone());
                }
                if attempts >= MAX_EXTRACTION_ATTEMPTS {
                    break;
                }
                attempts += 1;
                let (centroid, _diam) = cell_geometry(&cell, &ctx.map);
                let prices = ctx
                    .map
                    .price(&centroid)
                    .finite_entries()
                    .expect("compensable map is finite");
                let relaxed = relaxed_demand_graph(instance, &PriceVector::finite(prices.clone()), &epsilon)?;
                if let Some(payload) = extract_payload(instance, &relaxed, &prices) {
                    let mut solution = Solution {
                        prices,
                        payload,
                        certificates: Vec::new(),
                        diagnostics: diagnostics.clone(),
                    };
                    let certificates = verify(instance, &solution, &epsilon)?;
                    if certificates.iter().all(|c| c.envy_free) {
                        diagnostics.oracle_calls = ctx.oracle_calls;
                        diagnostics.wall_time_ms = start.elapsed().as_millis() as u64;
                        solution.certificates = certificates;
                        solution.diagnostics = diagnostics.clone();
                        result = Some(solution);
                    }
                }
                if result.is_some() {
                    break;
                }
            }
            if result.is_some() || round_hit.is_some() {
                break;
            }
        }
        if let Some(solution) = result {
            return Ok(solution);
        }
        match round_hit {
            Some(base) => prev_hit = Some(base),
            None => {
                if scanned_global {
                    return Err(EngineError::NoFeasibleCell { k });
                }
            }
        }
        // refine; a hit whose extraction failed needs a finer mesh
        k = k.checked_mul(config.growth.max(2)).unwrap_or(k);
    }
    diagnostics.oracle_calls = ctx.oracle_calls;
    diagnostics.wall_time_ms = start.elapsed().as_millis() as u64;
    Err(EngineError::MaxRoundsExceeded {
        rounds: diagnostics.rounds,
        final_k: diagnostics.final_k,
        diagnostics,
    })
}

/// Independent envy check: re-query every oracle at the solution prices and
/// test each stored assignment. No mesh machinery is involved.
pub fn verify(
    instance: &Instance,
    solution: &Solution,
    epsilon: &Rat,
) -> Result<Vec<Certificate>, EngineError> {
    let prices = PriceVector::finite(solution.prices.clone());
    match &solution.payload {
        SolutionPayload::Allocation(alloc) => {
            let pairs: Vec<(usize, usize)> = (0..instance.agent_count())
                .filter_map(|i| alloc.room_of(i).map(|j| (i, j)))
                .collect();
            let mut cert = check_assignment(instance, &pairs, &prices, epsilon, None)?;
            if let Err(msg) =
                alloc.check_partition(instance.agent_count(), &instance.capacities())
            {
                cert.envy_free = false;
                cert.failures.push(format!("partition violated: {msg}"));
            }
            Ok(vec![cert])
        }
        SolutionPayload::SecretiveScenarios(scenarios) => {
            let mut certs = Vec::with_capacity(scenarios.len());
            for s in scenarios {
                certs.push(check_assignment(
                    instance,
                    &s.assignment,
                    &prices,
                    epsilon,
                    Some(("room", s.excluded)),
                )?);
            }
            Ok(certs)
        }
        SolutionPayload::ExtraScenarios(scenarios) => {
            let mut certs = Vec::with_capacity(scenarios.len());
            for s in scenarios {
                certs.push(check_assignment(
                    instance,
                    &s.assignment,
                    &prices,
                    epsilon,
                    Some(("agent", s.excluded)),
                )?);
            }
            Ok(certs)
        }
    }
}

/// Check that every listed agent holds an epsilon-best room; returns the
/// certificate with per-agent regrets folded into `max_regret`.
fn check_assignment(
    instance: &Instance,
    pairs: &[(usize, usize)],
    prices: &PriceVector,
    epsilon: &Rat,
    excluded: Option<(&str, usize)>,
) -> Result<Certificate, EngineError> {
    let m = instance.room_count();
    let mut envy_free = true;
    let mut max_regret: Option<Rat> = Some(Rat::zero());
    let mut failures = Vec::new();

    // structural checks for scenario assignments
    if let Some((kind, excluded_idx)) = excluded {
        let mut rooms_used = std::collections::HashSet::new();
        let mut agents_seen = std::collections::HashSet::new();
        for &(i, j) in pairs {
            if kind == "room" && j == excluded_idx {
                envy_free = false;
                failures.push(format!("scenario assigns the excluded room {j}"));
            }
            if kind == "agent" && i == excluded_idx {
                envy_free = false;
                failures.push(format!("scenario assigns the excluded agent {i}"));
            }
            if !rooms_used.insert(j) {
                envy_free = false;
                failures.push(format!("room {j} assigned twice"));
            }
            if !agents_seen.insert(i) {
                envy_free = false;
                failures.push(format!("agent {i} assigned twice"));
            }
        }
        let expected = match kind {
            "room" => instance.agent_count(),
            _ => instance.agent_count() - 1,
        };
        if pairs.len() != expected {
            envy_free = false;
            failures.push(format!(
                "scenario covers {} agents, expected {expected}",
                pairs.len()
            ));
        }
    }

    for &(i, room) in pairs {
        let oracle = &instance.agents[i].oracle;
        if oracle.is_cardinal(prices) {
            let own = oracle.utility(room, prices)?;
            let mut best = own.clone();
            for j in 0..m {
                let u = oracle.utility(j, prices)?;
                if u > best {
                    best = u;
                }
            }
            let regret = match (&best, &own) {
                (Utility::Finite(b), Utility::Finite(o)) => b - o,
                _ => Rat::zero(),
            };
            if regret > *epsilon {
                envy_free = false;
                failures.push(format!(
                    "agent {i} ({}) regrets {} at room {room}",
                    instance.agents[i].name,
                    format_rat(&regret)
                ));
            }
            max_regret = max_regret.map(|cur| if regret > cur { regret } else { cur });
        } else {
            let best = oracle.best_rooms(prices)?;
            if !best.contains(&room) {
                envy_free = false;
                failures.push(format!(
                    "agent {i} ({})'s room {room} is not in their best-room set",
                    instance.agents[i].name
                ));
            }
            max_regret = None;
        }
    }
    Ok(Certificate {
        envy_free,
        max_regret,
        epsilon: epsilon.clone(),
        failures,
    })
}
