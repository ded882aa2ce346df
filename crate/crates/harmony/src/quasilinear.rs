//! Exact envy-free solver for quasilinear instances: welfare-maximizing
//! assignment (Hungarian method on rationals), tight-potential prices from
//! shortest paths on the exchange graph, and the uniform shift to make the
//! prices sum to the rent.

use num_traits::Zero;
use thiserror::Error;

use crate::domain::{Allocation, Certificate};
use crate::rational::{rat, Rat};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QuasilinearError {
    #[error("value matrix is not square")]
    NotSquare,
    #[error("assignment is not welfare-maximizing: the envy constraint graph has a negative cycle")]
    NotOptimal,
}

fn check_square(values: &[Vec<Rat>]) -> Result<usize, QuasilinearError> {
    let n = values.len();
    if n == 0 || values.iter().any(|row| row.len() != n) {
        return Err(QuasilinearError::NotSquare);
    }
    Ok(n)
}

/// Optimal assignment welfare by the Hungarian method (minimizing `-v`),
/// exact rational potentials throughout.
pub fn optimal_welfare(values: &[Vec<Rat>]) -> Rat {
    let n = values.len();
    if n == 0 {
        return Rat::zero();
    }
    // cost[i][j] = -values[i][j], 1-based buffers
    let mut u = vec![Rat::zero(); n + 1];
    let mut v = vec![Rat::zero(); n + 1];
    let mut p = vec![0usize; n + 1]; // row matched to column j
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv: Vec<Option<Rat>> = vec![None; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta: Option<Rat> = None;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = -&values[i0 - 1][j - 1] - &u[i0] - &v[j];
                let better = match &minv[j] {
                    None => true,
                    Some(mv) => cur < *mv,
                };
                if better {
                    minv[j] = Some(cur);
                    way[j] = j0;
                }
                let is_new_delta = match (&minv[j], &delta) {
                    (Some(mv), None) => Some(mv.clone()),
                    (Some(mv), Some(d)) if mv < d => Some(mv.clone()),
                    _ => None,
                };
                if let Some(d) = is_new_delta {
                    delta = Some(d);
                    j1 = j;
                }
            }
            let delta = delta.expect("unmatched column exists");
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += &delta;
                    v[j] -= &delta;
                } else if let Some(mv) = &mut minv[j] {
                    *mv -= &delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut welfare = Rat::zero();
    for j in 1..=n {
        welfare += &values[p[j] - 1][j - 1];
    }
    welfare
}

/// Welfare-maximizing assignment of agents to rooms; among the optima, the
/// lexicographically smallest permutation (agents fixed in index order to
/// the smallest room that still allows the optimal welfare).
pub fn max_weight_assignment(values: &[Vec<Rat>]) -> Result<Vec<usize>, QuasilinearError> {
    let n = check_square(values)?;
    let target = optimal_welfare(values);
    let mut free_rooms: Vec<usize> = (0..n).collect();
    let mut sigma = Vec::with_capacity(n);
    let mut prefix = Rat::zero();
    for i in 0..n {
        let mut chosen = None;
        for (pos, &r) in free_rooms.iter().enumerate() {
            // welfare of the remaining subproblem with agent i fixed to r
            let sub: Vec<Vec<Rat>> = (i + 1..n)
                .map(|i2| {
                    free_rooms
                        .iter()
                        .filter(|&&r2| r2 != r)
                        .map(|&r2| values[i2][r2].clone())
                        .collect()
                })
                .collect();
            let rest = optimal_welfare(&sub);
            if &prefix + &values[i][r] + rest == target {
                chosen = Some((pos, r));
                break;
            }
        }
        let (pos, r) = chosen.expect("an optimal completion exists");
        prefix += &values[i][r];
        sigma.push(r);
        free_rooms.remove(pos);
    }
    Ok(sigma)
}

/// Envy-free prices supporting a welfare-maximizing assignment: shortest
/// path distances on the exchange graph (edge into a room weighted by its
/// owner's value margin), anchored at agent 0's room, then shifted so the
/// prices sum to `total_rent` exactly.
pub fn envy_free_prices(
    values: &[Vec<Rat>],
    sigma: &[usize],
    total_rent: &Rat,
) -> Result<Vec<Rat>, QuasilinearError> {
    let n = check_square(values)?;
    assert_eq!(sigma.len(), n);
    let mut owner = vec![usize::MAX; n];
    for (i, &r) in sigma.iter().enumerate() {
        owner[r] = i;
    }
    assert!(owner.iter().all(|&i| i != usize::MAX), "sigma must be a permutation");
    let anchor = sigma[0];
    // Bellman-Ford on the complete digraph; dist[b] bounds p_b - p_anchor
    // from above via p_b <= p_a + (v[owner(b)][b] - v[owner(b)][a]).
    let mut dist: Vec<Option<Rat>> = vec![None; n];
    dist[anchor] = Some(Rat::zero());
    for round in 0..n {
        let mut changed = false;
        for a in 0..n {
            let da = match &dist[a] {
                Some(d) => d.clone(),
                None => continue,
            };
            for b in 0..n {
                if b == a {
                    continue;
                }
                let w = &values[owner[b]][b] - &values[owner[b]][a];
                let cand = &da + w;
                let better = match &dist[b] {
                    None => true,
                    Some(db) => cand < *db,
                };
                if better {
                    if round == n - 1 {
                        return Err(QuasilinearError::NotOptimal);
                    }
                    dist[b] = Some(cand);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut prices: Vec<Rat> = dist
        .into_iter()
        .map(|d| d.expect("complete graph reaches every room"))
        .collect();
    let sum: Rat = prices.iter().cloned().sum();
    let shift = (total_rent - sum) / rat(n as i64, 1);
    for p in prices.iter_mut() {
        *p += &shift;
    }
    Ok(prices)
}

/// Full exact pipeline: assignment, prices, allocation, and a zero-regret
/// certificate.
#[allow(clippy::needless_range_loop)]
pub fn solve_quasilinear_exact(
    values: &[Vec<Rat>],
    total_rent: &Rat,
) -> Result<(Allocation, Certificate), QuasilinearError> {
    let n = check_square(values)?;
    let sigma = max_weight_assignment(values)?;
    let prices = envy_free_prices(values, &sigma, total_rent)?;
    let mut assignment = vec![Vec::new(); n];
    for (i, &r) in sigma.iter().enumerate() {
        assignment[r].push(i);
    }
    let alloc = Allocation {
        assignment,
        prices,
    };
    // exact zero-envy check, a hard invariant of this path
    for i in 0..n {
        let own = &values[i][sigma[i]] - &alloc.prices[sigma[i]];
        for r in 0..n {
            let other = &values[i][r] - &alloc.prices[r];
            debug_assert!(own >= other, "agent {i} envies room {r}");
        }
    }
    let cert = Certificate {
        envy_free: true,
        max_regret: Some(Rat::zero()),
        epsilon: Rat::zero(),
        failures: Vec::new(),
    };
    Ok((alloc, cert))
}
