//! Kuhn triangulation of the standard simplex at resolution `k`, and the
//! maps from barycentric points to price vectors.
//!
//! Cells are enumerated through the staircase coordinates
//! `eta_i = y_1 + ... + y_i`: the simplex becomes the order region
//! `0 <= eta_1 <= ... <= eta_d <= k` (`d = m - 1`), and the Kuhn cells are
//! the unit-cube simplices `(base z, permutation)` that fit inside it. This
//! gives exactly `k^(m-1)` cells, a deterministic ordering, and cheap
//! point location by `floor(eta)`.

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::domain::{Price, PriceVector};
use crate::rational::{rat, Rat};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MeshError {
    #[error("room count m = {0} out of range (need m >= 1)")]
    BadM(usize),
    #[error("resolution k = {0} out of range (need k >= 1)")]
    BadK(u64),
}

/// A vertex of the simplicial grid: integer coordinates summing to `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridPoint {
    pub y: Vec<u64>,
    pub k: u64,
}

impl GridPoint {
    pub fn barycentric(&self) -> Vec<Rat> {
        self.y.iter().map(|&yi| rat(yi as i64, self.k as i64)).collect()
    }

    /// True when some coordinate is zero, i.e. the point lies on the
    /// boundary of the simplex.
    pub fn is_boundary(&self) -> bool {
        self.y.contains(&0)
    }
}

/// One sub-simplex of the Kuhn subdivision: a base point in staircase
/// coordinates plus the order in which unit increments are applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub m: usize,
    pub k: u64,
    /// Base corner in staircase coordinates, length `m - 1`, nondecreasing.
    pub base: Vec<u64>,
    /// Order of coordinate increments, a permutation of `0..m-1`.
    pub perm: Vec<usize>,
}

fn eta_to_grid(eta: &[u64], m: usize, k: u64) -> GridPoint {
    let mut y = Vec::with_capacity(m);
    let mut prev = 0u64;
    for &e in eta {
        y.push(e - prev);
        prev = e;
    }
    y.push(k - prev);
    GridPoint { y, k }
}

impl Cell {
    /// The `m` vertices of the cell, in chain order from the base corner.
    pub fn vertices(&self) -> Vec<GridPoint> {
        let mut eta = self.base.clone();
        let mut out = Vec::with_capacity(self.m);
        out.push(eta_to_grid(&eta, self.m, self.k));
        for &axis in &self.perm {
            eta[axis] += 1;
            out.push(eta_to_grid(&eta, self.m, self.k));
        }
        out
    }

    /// Average of the vertices, in exact barycentric coordinates.
    pub fn centroid(&self) -> Vec<Rat> {
        let verts = self.vertices();
        let m = self.m;
        let mut sum = vec![Rat::zero(); m];
        for v in &verts {
            for (j, x) in v.barycentric().into_iter().enumerate() {
                sum[j] += x;
            }
        }
        let count = rat(m as i64, 1);
        sum.into_iter().map(|s| s / &count).collect()
    }
}

/// All grid vertices at resolution `k`, in descending lexicographic order of
/// the integer coordinate vector.
pub fn grid_vertices(m: usize, k: u64) -> Result<Vec<GridPoint>, MeshError> {
    check_params(m, k)?;
    let mut out = Vec::new();
    let mut y = vec![0u64; m];
    fill_vertices(&mut out, &mut y, 0, k, m);
    Ok(out)
}

fn fill_vertices(out: &mut Vec<GridPoint>, y: &mut Vec<u64>, pos: usize, rest: u64, m: usize) {
    if pos == m - 1 {
        y[pos] = rest;
        out.push(GridPoint {
            y: y.clone(),
            k: y.iter().sum(),
        });
        return;
    }
    for v in (0..=rest).rev() {
        y[pos] = v;
        fill_vertices(out, y, pos + 1, rest - v, m);
    }
}

fn check_params(m: usize, k: u64) -> Result<(), MeshError> {
    if m < 1 {
        return Err(MeshError::BadM(m));
    }
    if k < 1 {
        return Err(MeshError::BadK(k));
    }
    Ok(())
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    let mut used = vec![false; d];
    fn rec(d: usize, cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for i in 0..d {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(d, cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    rec(d, &mut cur, &mut used, &mut out);
    out
}

fn cell_valid(base: &[u64], perm: &[usize], k: u64) -> bool {
    let d = base.len();
    let mut t = base.to_vec();
    let ok = |t: &[u64]| -> bool {
        t.windows(2).all(|w| w[0] <= w[1]) && (d == 0 || t[d - 1] <= k)
    };
    if !ok(&t) || (d > 0 && t[d - 1] > k - 1) {
        return false;
    }
    for &axis in perm {
        t[axis] += 1;
        if !ok(&t) {
            return false;
        }
    }
    true
}

/// Streaming iterator over Kuhn cells whose base corner lies in a box of
/// staircase coordinates. Deterministic order: base ascending lex, then
/// permutation ascending lex.
pub struct CellIter {
    m: usize,
    k: u64,
    lo: Vec<u64>,
    hi: Vec<u64>,
    perms: Vec<Vec<usize>>,
    cur: Option<Vec<u64>>,
    perm_idx: usize,
}

impl CellIter {
    fn advance_base(&mut self) {
        let d = self.lo.len();
        let cur = match &mut self.cur {
            None => return,
            Some(c) => c,
        };
        for i in (0..d).rev() {
            if cur[i] < self.hi[i] {
                cur[i] += 1;
                cur[(i + 1)..d].copy_from_slice(&self.lo[(i + 1)..d]);
                return;
            }
        }
        self.cur = None;
    }
}

impl Iterator for CellIter {
    type Item = Cell;

    fn next(&mut self) -> Option<Cell> {
        if self.lo.is_empty() {
            // m = 1: a single degenerate cell
            if self.cur.is_some() {
                self.cur = None;
                return Some(Cell {
                    m: self.m,
                    k: self.k,
                    base: vec![],
                    perm: vec![],
                });
            }
            return None;
        }
        loop {
            let base = self.cur.clone()?;
            while self.perm_idx < self.perms.len() {
                let perm = &self.perms[self.perm_idx];
                self.perm_idx += 1;
                if cell_valid(&base, perm, self.k) {
                    return Some(Cell {
                        m: self.m,
                        k: self.k,
                        base,
                        perm: perm.clone(),
                    });
                }
            }
            self.perm_idx = 0;
            self.advance_base();
        }
    }
}

/// All Kuhn cells of the triangulation at resolution `k`.
pub fn cells(m: usize, k: u64) -> Result<CellIter, MeshError> {
    check_params(m, k)?;
    let d = m - 1;
    cells_in_box(m, k, &vec![0; d], &vec![k - 1; d])
}

/// Kuhn cells with base corner in `[lo, hi]` (inclusive, staircase coords).
pub fn cells_in_box(m: usize, k: u64, lo: &[u64], hi: &[u64]) -> Result<CellIter, MeshError> {
    check_params(m, k)?;
    let d = m - 1;
    assert_eq!(lo.len(), d);
    assert_eq!(hi.len(), d);
    let lo = lo.to_vec();
    let mut hi = hi.to_vec();
    for h in hi.iter_mut() {
        *h = (*h).min(k - 1);
    }
    let empty = lo.iter().zip(&hi).any(|(l, h)| l > h);
    Ok(CellIter {
        m,
        k,
        cur: if empty && d > 0 { None } else { Some(lo.clone()) },
        lo,
        hi,
        perms: permutations(d),
        perm_idx: 0,
    })
}

/// A map from barycentric points to price vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PriceMap {
    /// `p_j = T - (T m - R) x_j`; sums to `R` exactly, boundary prices hit `T`.
    Compensable { t: Rat, r: Rat },
    /// `p_j = 1 / x_j`, with infinity on the boundary.
    Reciprocal,
    /// `p_j = R x_j`.
    Su { r: Rat },
}

impl PriceMap {
    pub fn compensable(t: Rat, r: Rat) -> Result<Self, String> {
        if t < r {
            return Err(format!(
                "compensable map needs T >= R, got T = {}, R = {}",
                crate::rational::format_rat(&t),
                crate::rational::format_rat(&r)
            ));
        }
        Ok(PriceMap::Compensable { t, r })
    }

    pub fn price(&self, x: &[Rat]) -> PriceVector {
        let m = x.len();
        match self {
            PriceMap::Compensable { t, r } => {
                let slope = t * rat(m as i64, 1) - r;
                PriceVector(
                    x.iter()
                        .map(|xj| Price::Finite(t - &slope * xj))
                        .collect(),
                )
            }
            PriceMap::Reciprocal => PriceVector(
                x.iter()
                    .map(|xj| {
                        if xj.is_zero() {
                            Price::Infinite
                        } else {
                            Price::Finite(Rat::one() / xj)
                        }
                    })
                    .collect(),
            ),
            PriceMap::Su { r } => {
                PriceVector(x.iter().map(|xj| Price::Finite(r * xj)).collect())
            }
        }
    }
}

/// Max-norm distance between two mapped price vectors; infinite entries
/// compare equal to each other, infinite vs finite is infinite.
pub fn price_distance(a: &PriceVector, b: &PriceVector) -> Price {
    let mut max = Rat::zero();
    for (pa, pb) in a.0.iter().zip(&b.0) {
        match (pa, pb) {
            (Price::Infinite, Price::Infinite) => {}
            (Price::Finite(x), Price::Finite(y)) => {
                let d = (x - y).abs();
                if d > max {
                    max = d;
                }
            }
            _ => return Price::Infinite,
        }
    }
    Price::Finite(max)
}

/// Centroid and price diameter of a cell under a given map.
pub fn cell_geometry(cell: &Cell, map: &PriceMap) -> (Vec<Rat>, Price) {
    let verts = cell.vertices();
    let prices: Vec<PriceVector> = verts
        .iter()
        .map(|v| map.price(&v.barycentric()))
        .collect();
    let mut diameter = Price::Finite(Rat::zero());
    for i in 0..prices.len() {
        for j in i + 1..prices.len() {
            match price_distance(&prices[i], &prices[j]) {
                Price::Infinite => {
                    diameter = Price::Infinite;
                }
                Price::Finite(d) => {
                    if let Price::Finite(cur) = &diameter {
                        if d > *cur {
                            diameter = Price::Finite(d);
                        }
                    }
                }
            }
        }
    }
    (cell.centroid(), diameter)
}

/// All cells containing the barycentric point `x` (nonnegative barycentric
/// weights with respect to the cell's vertices). Candidate bases come from
/// the floor of the staircase coordinates.
pub fn locate_point(m: usize, k: u64, x: &[Rat]) -> Result<Vec<Cell>, MeshError> {
    check_params(m, k)?;
    assert_eq!(x.len(), m);
    let d = m - 1;
    if d == 0 {
        return Ok(cells(m, k)?.collect());
    }
    // staircase coordinates of the point, scaled by k
    let mut eta = Vec::with_capacity(d);
    let mut acc = Rat::zero();
    let kk = rat(k as i64, 1);
    for xj in &x[..d] {
        acc += xj;
        eta.push(&acc * &kk);
    }
    let mut lo = Vec::with_capacity(d);
    let mut hi = Vec::with_capacity(d);
    for e in &eta {
        let f = e.floor().to_integer();
        let f: i64 = i64::try_from(&f).expect("grid fits i64");
        let f = f.clamp(0, k as i64 - 1) as u64;
        lo.push(f.saturating_sub(1));
        hi.push(f.min(k - 1));
    }
    let mut found = Vec::new();
    for cell in cells_in_box(m, k, &lo, &hi)? {
        if cell_contains(&cell, x) {
            found.push(cell);
        }
    }
    Ok(found)
}

/// Exact barycentric containment test: solve for the weights of `x` with
/// respect to the cell's vertices and check they are all nonnegative.
pub fn cell_contains(cell: &Cell, x: &[Rat]) -> bool {
    cell_barycentric_weights(cell, x)
        .map(|w| w.iter().all(|l| !l.is_negative()))
        .unwrap_or(false)
}

/// Weights `w` with `sum w_i * v_i = x`, `sum w_i = 1`, by Gaussian
/// elimination on the vertex coordinates. The system is square because grid
/// coordinates already sum to `k`.
#[allow(clippy::needless_range_loop)]
pub fn cell_barycentric_weights(cell: &Cell, x: &[Rat]) -> Option<Vec<Rat>> {
    let verts = cell.vertices();
    let m = cell.m;
    let kk = rat(cell.k as i64, 1);
    // rows: coordinates, columns: vertices, rhs: k * x
    let mut a: Vec<Vec<Rat>> = (0..m)
        .map(|row| {
            let mut r: Vec<Rat> = verts
                .iter()
                .map(|v| rat(v.y[row] as i64, 1))
                .collect();
            r.push(x[row].clone() * &kk);
            r
        })
        .collect();
    // forward elimination with partial (first nonzero) pivoting
    let n = m;
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        for row in col + 1..n {
            if a[row][col].is_zero() {
                continue;
            }
            let factor = &a[row][col] / &a[col][col];
            for c in col..=n {
                let sub = &factor * &a[col][c];
                a[row][c] -= sub;
            }

        }
    }
    let mut w = vec![Rat::zero(); n];
    for row in (0..n).rev() {
        let mut rhs = a[row][n].clone();
        for c in row + 1..n {
            rhs -= &a[row][c] * &w[c];
        }
        w[row] = rhs / &a[row][row];
    }
    Some(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat_int;

    fn binom(n: u64, r: u64) -> u64 {
        let r = r.min(n - r);
        let mut acc = 1u64;
        for i in 0..r {
            acc = acc * (n - i) / (i + 1);
        }
        acc
    }

    #[test]
    fn vertex_enumeration_matches_examples() {
        let v = grid_vertices(2, 3).unwrap();
        let ys: Vec<Vec<u64>> = v.iter().map(|p| p.y.clone()).collect();
        assert_eq!(ys, vec![vec![3, 0], vec![2, 1], vec![1, 2], vec![0, 3]]);
        assert_eq!(grid_vertices(3, 2).unwrap().len(), 6);
        let main = grid_vertices(3, 1).unwrap();
        assert_eq!(main.len(), 3);
        assert!(main.iter().all(|p| p.y.contains(&1)));
    }

    #[test]
    fn vertex_count_formula() {
        for m in 2..=5u64 {
            for k in 1..=10u64 {
                let count = grid_vertices(m as usize, k).unwrap().len() as u64;
                assert_eq!(count, binom(k + m - 1, m - 1), "m={m} k={k}");
            }
        }
    }

    #[test]
    fn cell_counts() {
        assert_eq!(cells(2, 3).unwrap().count(), 3);
        assert_eq!(cells(3, 2).unwrap().count(), 4);
        assert_eq!(cells(3, 1).unwrap().count(), 1);
        for m in 2..=4usize {
            for k in 1..=8u64 {
                let count = cells(m, k).unwrap().count() as u64;
                assert_eq!(count, k.pow(m as u32 - 1), "m={m} k={k}");
            }
        }
    }

    #[test]
    fn single_cell_is_whole_simplex() {
        let cell = cells(3, 1).unwrap().next().unwrap();
        let verts = cell.vertices();
        assert_eq!(verts.len(), 3);
        for v in &verts {
            assert_eq!(v.y.iter().sum::<u64>(), 1);
        }
    }

    #[test]
    fn cells_cover_distinct_vertex_sets() {
        let all: Vec<Cell> = cells(3, 4).unwrap().collect();
        assert_eq!(all.len(), 16);
        let mut seen = std::collections::HashSet::new();
        for c in &all {
            let mut vs: Vec<Vec<u64>> = c.vertices().iter().map(|v| v.y.clone()).collect();
            vs.sort();
            assert!(seen.insert(vs), "duplicate cell");
            for v in c.vertices() {
                assert_eq!(v.y.iter().sum::<u64>(), 4);
            }
        }
    }

    #[test]
    fn compensable_map_matches_examples() {
        let map = PriceMap::compensable(rat_int(1000), rat_int(1000)).unwrap();
        let p = map.price(&[rat(1, 3), rat(1, 3), rat(1, 3)]);
        assert_eq!(
            p.finite_entries().unwrap(),
            vec![rat(1000, 3), rat(1000, 3), rat(1000, 3)]
        );
        let p = map.price(&[rat_int(1), rat_int(0), rat_int(0)]);
        assert_eq!(
            p.finite_entries().unwrap(),
            vec![rat_int(-1000), rat_int(1000), rat_int(1000)]
        );
        let map = PriceMap::compensable(rat_int(150), rat_int(100)).unwrap();
        let p = map.price(&[rat_int(0), rat_int(1)]);
        assert_eq!(p.finite_entries().unwrap(), vec![rat_int(150), rat_int(-50)]);
        assert!(PriceMap::compensable(rat_int(99), rat_int(100)).is_err());
    }

    #[test]
    fn compensable_sum_and_boundary_identity() {
        let t = rat_int(90);
        let r = rat_int(90);
        let map = PriceMap::compensable(t.clone(), r.clone()).unwrap();
        for m in 2..=4usize {
            for k in [1u64, 3, 8, 16] {
                for v in grid_vertices(m, k).unwrap() {
                    let p = map.price(&v.barycentric());
                    let entries = p.finite_entries().unwrap();
                    let sum: Rat = entries.iter().cloned().sum();
                    assert_eq!(sum, r, "m={m} k={k}");
                    for (j, yj) in v.y.iter().enumerate() {
                        assert_eq!(*yj == 0, entries[j] == t, "m={m} k={k} j={j}");
                    }
                }
            }
        }
    }

    #[test]
    fn compensable_barycenter_is_uniform_split() {
        let map = PriceMap::compensable(rat_int(100), rat_int(100)).unwrap();
        let x = vec![rat(1, 4); 4];
        let p = map.price(&x).finite_entries().unwrap();
        assert!(p.iter().all(|pj| *pj == rat_int(25)));
    }

    #[test]
    fn reciprocal_map_examples() {
        let map = PriceMap::Reciprocal;
        let p = map.price(&[rat(1, 2), rat(1, 2)]);
        assert_eq!(p.finite_entries().unwrap(), vec![rat_int(2), rat_int(2)]);
        let p = map.price(&[rat_int(1), rat_int(0)]);
        assert_eq!(p.0[0], Price::Finite(rat_int(1)));
        assert_eq!(p.0[1], Price::Infinite);
        let p = map.price(&[rat(1, 4), rat(3, 4)]);
        assert_eq!(p.finite_entries().unwrap(), vec![rat_int(4), rat(4, 3)]);
    }

    #[test]
    fn su_map_examples() {
        let map = PriceMap::Su { r: rat_int(1000) };
        let p = map.price(&[rat(3, 5), rat(2, 5), rat_int(0)]);
        assert_eq!(
            p.finite_entries().unwrap(),
            vec![rat_int(600), rat_int(400), rat_int(0)]
        );
        let map = PriceMap::Su { r: rat_int(100) };
        assert_eq!(
            map.price(&[rat_int(1), rat_int(0)]).finite_entries().unwrap(),
            vec![rat_int(100), rat_int(0)]
        );
        assert_eq!(
            map.price(&[rat(1, 2), rat(1, 2)]).finite_entries().unwrap(),
            vec![rat_int(50), rat_int(50)]
        );
    }

    #[test]
    fn cell_geometry_diameter() {
        // m=2, k=2, cell with vertices (2,0),(1,1), compensable T=R=100
        let cell = cells(2, 2)
            .unwrap()
            .find(|c| c.vertices().iter().any(|v| v.y == vec![2, 0]))
            .unwrap();
        let map = PriceMap::compensable(rat_int(100), rat_int(100)).unwrap();
        let (centroid, diam) = cell_geometry(&cell, &map);
        assert_eq!(diam, Price::Finite(rat_int(50)));
        assert_eq!(centroid, vec![rat(3, 4), rat(1, 4)]);
        // reciprocal map on a boundary cell has infinite diameter
        let boundary = cells(2, 2)
            .unwrap()
            .find(|c| c.vertices().iter().any(|v| v.y == vec![0, 2]))
            .unwrap();
        let (_, diam) = cell_geometry(&boundary, &PriceMap::Reciprocal);
        assert_eq!(diam, Price::Infinite);
    }

    #[test]
    fn diameter_scales_inversely_with_k() {
        let t = rat_int(100);
        let r = rat_int(40);
        let map = PriceMap::compensable(t, r).unwrap();
        for k in [2u64, 4, 8] {
            let bound = rat(3 * 100 - 40, k as i64);
            for cell in cells(3, k).unwrap() {
                let (_, diam) = cell_geometry(&cell, &map);
                match diam {
                    Price::Finite(d) => assert!(d <= bound, "k={k}"),
                    Price::Infinite => panic!("finite map"),
                }
            }
        }
    }

    #[test]
    fn reciprocal_strictly_decreasing() {
        let map = PriceMap::Reciprocal;
        let a = map.price(&[rat(1, 4), rat(3, 4)]);
        let b = map.price(&[rat(1, 2), rat(1, 2)]);
        assert!(a.0[0].as_finite().unwrap() > b.0[0].as_finite().unwrap());
        assert!(a.0[1].as_finite().unwrap() < b.0[1].as_finite().unwrap());
    }

    #[test]
    fn m1_degenerate_mesh() {
        let v = grid_vertices(1, 5).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].y, vec![5]);
        let cs: Vec<Cell> = cells(1, 5).unwrap().collect();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].vertices().len(), 1);
    }
}
