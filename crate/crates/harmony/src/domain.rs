//! Core data model: instances, price vectors, allocations, and envy
//! certificates. Everything here is immutable after construction and shared
//! freely between modules.

use std::collections::HashSet;

use thiserror::Error;

use crate::preferences::DemandOracle;
use crate::rational::Rat;

/// Which variant of the rent-division problem an instance encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// n agents, n rooms, all capacities 1.
    Classic,
    /// Room capacities sum to the agent count; rooms may hold several agents.
    Roommates,
    /// n rooms, n-1 present agents; the missing agent picks a room later.
    Secretive,
    /// n rooms, n+1 agents; any one agent may leave.
    Extra,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Classic => "classic",
            Mode::Roommates => "roommates",
            Mode::Secretive => "secretive",
            Mode::Extra => "extra",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RoomSpec {
    pub name: String,
    pub capacity: u32,
}

#[derive(Clone)]
pub struct AgentSpec {
    pub name: String,
    pub oracle: DemandOracle,
}

impl std::fmt::Debug for AgentSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AgentSpec")
            .field("name", &self.name)
            .field("oracle", &self.oracle.kind_name())
            .finish()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DomainError {
    #[error("agent list is empty")]
    NoAgents,
    #[error("room list is empty")]
    NoRooms,
    #[error("duplicate {kind} name {name:?}")]
    DuplicateName { kind: &'static str, name: String },
    #[error("room {name:?} has nonpositive capacity")]
    NonpositiveCapacity { name: String },
    #[error("compensation bound T = {t} is below the total rent R = {r}; T >= R is required")]
    BoundBelowRent { t: String, r: String },
    #[error("no compensation bound given and not all oracles are quasilinear; T must be supplied explicitly")]
    BoundRequired,
    #[error("{0}")]
    ModeMismatch(String),
}

/// A validated problem instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub mode: Mode,
    pub agents: Vec<AgentSpec>,
    pub rooms: Vec<RoomSpec>,
    pub total_rent: Rat,
    pub compensation_bound: Rat,
}

impl Instance {
    /// Validate and build an instance. `compensation_bound = None` is allowed
    /// only when every oracle is quasilinear, in which case the default
    /// `T = max(R, largest per-agent value spread)` is used.
    pub fn new(
        mode: Mode,
        agents: Vec<AgentSpec>,
        rooms: Vec<RoomSpec>,
        total_rent: Rat,
        compensation_bound: Option<Rat>,
    ) -> Result<Self, DomainError> {
        if agents.is_empty() {
            return Err(DomainError::NoAgents);
        }
        if rooms.is_empty() {
            return Err(DomainError::NoRooms);
        }
        let mut seen = HashSet::new();
        for a in &agents {
            if !seen.insert(a.name.clone()) {
                return Err(DomainError::DuplicateName {
                    kind: "agent",
                    name: a.name.clone(),
                });
            }
        }
        let mut seen = HashSet::new();
        for r in &rooms {
            if !seen.insert(r.name.clone()) {
                return Err(DomainError::DuplicateName {
                    kind: "room",
                    name: r.name.clone(),
                });
            }
            if r.capacity == 0 {
                return Err(DomainError::NonpositiveCapacity {
                    name: r.name.clone(),
                });
            }
        }
        let n = agents.len();
        let m = rooms.len();
        let cap_sum: u64 = rooms.iter().map(|r| r.capacity as u64).sum();
        match mode {
            Mode::Classic => {
                if n != m {
                    return Err(DomainError::ModeMismatch(format!(
                        "classic mode needs equal counts, got {n} agents and {m} rooms"
                    )));
                }
                if rooms.iter().any(|r| r.capacity != 1) {
                    return Err(DomainError::ModeMismatch(
                        "classic mode needs all capacities 1".to_string(),
                    ));
                }
            }
            Mode::Roommates => {
                if cap_sum != n as u64 {
                    return Err(DomainError::ModeMismatch(format!(
                        "capacity sum {cap_sum} \u{2260} agent count {n}"
                    )));
                }
                if m > n {
                    return Err(DomainError::ModeMismatch(format!(
                        "roommates mode needs at most as many rooms as agents, got {m} > {n}"
                    )));
                }
            }
            Mode::Secretive => {
                if m < 2 {
                    return Err(DomainError::ModeMismatch(
                        "secretive mode needs at least 2 rooms".to_string(),
                    ));
                }
                if n != m - 1 {
                    return Err(DomainError::ModeMismatch(format!(
                        "secretive mode needs rooms - 1 agents, got {n} agents for {m} rooms"
                    )));
                }
                if rooms.iter().any(|r| r.capacity != 1) {
                    return Err(DomainError::ModeMismatch(
                        "secretive mode needs all capacities 1".to_string(),
                    ));
                }
            }
            Mode::Extra => {
                if n != m + 1 {
                    return Err(DomainError::ModeMismatch(format!(
                        "extra mode needs rooms + 1 agents, got {n} agents for {m} rooms"
                    )));
                }
                if rooms.iter().any(|r| r.capacity != 1) {
                    return Err(DomainError::ModeMismatch(
                        "extra mode needs all capacities 1".to_string(),
                    ));
                }
            }
        }
        let t = match compensation_bound {
            Some(t) => t,
            None => {
                let mut spread: Option<Rat> = None;
                for a in &agents {
                    match a.oracle.quasilinear_spread() {
                        Some(s) => {
                            spread = Some(match spread {
                                Some(cur) if cur >= s => cur,
                                _ => s,
                            });
                        }
                        None => return Err(DomainError::BoundRequired),
                    }
                }
                let spread = spread.expect("agents nonempty");
                if spread > total_rent {
                    spread
                } else {
                    total_rent.clone()
                }
            }
        };
        if t < total_rent {
            return Err(DomainError::BoundBelowRent {
                t: crate::rational::format_rat(&t),
                r: crate::rational::format_rat(&total_rent),
            });
        }
        Ok(Instance {
            mode,
            agents,
            rooms,
            total_rent,
            compensation_bound: t,
        })
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn room_count(&self) -> usize {
        self.rooms.len()
    }

    pub fn capacities(&self) -> Vec<u32> {
        self.rooms.iter().map(|r| r.capacity).collect()
    }
}

/// A per-room price over the extended nonnegative reals during the mesh
/// phase; plain (possibly negative) rationals after shifting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Price {
    Finite(Rat),
    Infinite,
}

impl Price {
    pub fn as_finite(&self) -> Option<&Rat> {
        match self {
            Price::Finite(r) => Some(r),
            Price::Infinite => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Price::Finite(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriceVector(pub Vec<Price>);

impl PriceVector {
    pub fn finite(prices: Vec<Rat>) -> Self {
        PriceVector(prices.into_iter().map(Price::Finite).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, j: usize) -> &Price {
        &self.0[j]
    }

    pub fn any_finite(&self) -> bool {
        self.0.iter().any(Price::is_finite)
    }

    /// All entries, which must be finite.
    pub fn finite_entries(&self) -> Option<Vec<Rat>> {
        self.0
            .iter()
            .map(|p| p.as_finite().cloned())
            .collect::<Option<Vec<_>>>()
    }

    /// Largest finite entry, if any.
    pub fn max_finite(&self) -> Option<Rat> {
        self.0
            .iter()
            .filter_map(Price::as_finite)
            .max()
            .cloned()
    }

    pub fn min_finite(&self) -> Option<Rat> {
        self.0
            .iter()
            .filter_map(Price::as_finite)
            .min()
            .cloned()
    }
}

/// Rooms to agent sets, plus the prices that support the assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    /// `assignment[j]` is the set of agents living in room `j`.
    pub assignment: Vec<Vec<usize>>,
    pub prices: Vec<Rat>,
}

impl Allocation {
    /// Check the partition invariant: each agent in exactly one room and each
    /// room filled to its capacity.
    pub fn check_partition(&self, agent_count: usize, capacities: &[u32]) -> Result<(), String> {
        if self.assignment.len() != capacities.len() {
            return Err(format!(
                "assignment covers {} rooms, instance has {}",
                self.assignment.len(),
                capacities.len()
            ));
        }
        let mut seen = vec![false; agent_count];
        for (j, set) in self.assignment.iter().enumerate() {
            if set.len() != capacities[j] as usize {
                return Err(format!(
                    "room {j} holds {} agents, capacity is {}",
                    set.len(),
                    capacities[j]
                ));
            }
            for &i in set {
                if i >= agent_count {
                    return Err(format!("unknown agent index {i}"));
                }
                if seen[i] {
                    return Err(format!("agent {i} assigned twice"));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(format!("agent {i} unassigned"));
        }
        Ok(())
    }

    /// Room index assigned to an agent.
    pub fn room_of(&self, agent: usize) -> Option<usize> {
        self.assignment
            .iter()
            .position(|set| set.contains(&agent))
    }
}

/// Outcome of the independent envy check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    /// Every agent's room is in their best-room set within the tolerance.
    pub envy_free: bool,
    /// Max over agents of (best utility - own utility); `None` when some
    /// oracle is ordinal-only.
    pub max_regret: Option<Rat>,
    pub epsilon: Rat,
    /// Human-readable descriptions of any detected envy.
    pub failures: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preferences::DemandOracle;
    use crate::rational::rat_int;

    fn agents(n: usize, m: usize) -> Vec<AgentSpec> {
        (0..n)
            .map(|i| AgentSpec {
                name: format!("a{i}"),
                oracle: DemandOracle::quasilinear(vec![rat_int(0); m]),
            })
            .collect()
    }

    fn rooms(caps: &[u32]) -> Vec<RoomSpec> {
        caps.iter()
            .enumerate()
            .map(|(j, &c)| RoomSpec {
                name: format!("r{j}"),
                capacity: c,
            })
            .collect()
    }

    #[test]
    fn classic_instance_validates() {
        let inst = Instance::new(
            Mode::Classic,
            agents(3, 3),
            rooms(&[1, 1, 1]),
            rat_int(1000),
            Some(rat_int(1000)),
        )
        .unwrap();
        assert_eq!(inst.agent_count(), 3);
    }

    #[test]
    fn roommates_capacity_sum_checked() {
        let err = Instance::new(
            Mode::Roommates,
            agents(3, 2),
            rooms(&[2, 2]),
            rat_int(100),
            Some(rat_int(100)),
        )
        .unwrap_err();
        match err {
            DomainError::ModeMismatch(msg) => {
                assert!(msg.contains("capacity sum 4"), "{msg}");
                assert!(msg.contains("agent count 3"), "{msg}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn secretive_needs_one_less_agent() {
        assert!(Instance::new(
            Mode::Secretive,
            agents(2, 3),
            rooms(&[1, 1, 1]),
            rat_int(100),
            Some(rat_int(100)),
        )
        .is_ok());
        assert!(Instance::new(
            Mode::Secretive,
            agents(3, 3),
            rooms(&[1, 1, 1]),
            rat_int(100),
            Some(rat_int(100)),
        )
        .is_err());
    }

    #[test]
    fn bound_below_rent_rejected() {
        let err = Instance::new(
            Mode::Classic,
            agents(2, 2),
            rooms(&[1, 1]),
            rat_int(100),
            Some(rat_int(99)),
        )
        .unwrap_err();
        assert!(matches!(err, DomainError::BoundBelowRent { .. }));
    }

    #[test]
    fn default_bound_uses_value_spread() {
        let specs = vec![
            AgentSpec {
                name: "a".into(),
                oracle: DemandOracle::quasilinear(vec![rat_int(800), rat_int(100)]),
            },
            AgentSpec {
                name: "b".into(),
                oracle: DemandOracle::quasilinear(vec![rat_int(0), rat_int(50)]),
            },
        ];
        let inst = Instance::new(Mode::Classic, specs, rooms(&[1, 1]), rat_int(100), None).unwrap();
        assert_eq!(inst.compensation_bound, rat_int(700));
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut a = agents(2, 2);
        a[1].name = a[0].name.clone();
        let err = Instance::new(
            Mode::Classic,
            a,
            rooms(&[1, 1]),
            rat_int(100),
            Some(rat_int(100)),
        )
        .unwrap_err();
        assert!(matches!(err, DomainError::DuplicateName { kind: "agent", .. }));
    }

    #[test]
    fn partition_invariant() {
        let alloc = Allocation {
            assignment: vec![vec![0, 2], vec![1]],
            prices: vec![rat_int(50), rat_int(50)],
        };
        alloc.check_partition(3, &[2, 1]).unwrap();
        assert!(alloc.check_partition(3, &[1, 2]).is_err());
        assert_eq!(alloc.room_of(2), Some(0));
    }
}
