//! Demand oracles for the supported tenant classes, and sampling-based
//! validators for the miserly / weak-miserly / Archimedean / compensable
//! assumptions.
//!
//! All built-in oracles evaluate in exact rational arithmetic, so best-room
//! ties are decided exactly (no tie tolerance is needed on this path).
//! Continuity of custom oracles is assumed, not checked; the validator
//! report carries that caveat.

use std::sync::Arc;

use num_traits::{Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::domain::{Price, PriceVector};
use crate::rational::{format_rat, rat, Rat};

/// Utility over the extended reals; rooms at infinite price are never
/// preferred while a finite-price room exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Utility {
    NegInfinite,
    Finite(Rat),
}

impl PartialOrd for Utility {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Utility {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use Utility::*;
        match (self, other) {
            (NegInfinite, NegInfinite) => std::cmp::Ordering::Equal,
            (NegInfinite, Finite(_)) => std::cmp::Ordering::Less,
            (Finite(_), NegInfinite) => std::cmp::Ordering::Greater,
            (Finite(a), Finite(b)) => a.cmp(b),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("all prices are infinite: inadmissible price vector")]
    AllInfinite,
    #[error("price vector has length {got}, oracle expects {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("oracle is ordinal-only and has no cardinal utility")]
    NotCardinal,
    #[error("custom oracle returned an empty or out-of-range best-room set")]
    BadCustomAnswer,
}

/// A continuous nonincreasing piecewise-linear utility-of-price curve, given
/// as breakpoints `(price, utility)` with strictly increasing prices.
/// Evaluation extends the first and last values as constants beyond the ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Curve {
    pub breakpoints: Vec<(Rat, Rat)>,
}

impl Curve {
    pub fn new(breakpoints: Vec<(Rat, Rat)>) -> Result<Self, String> {
        if breakpoints.is_empty() {
            return Err("curve needs at least one breakpoint".to_string());
        }
        for w in breakpoints.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(format!(
                    "curve breakpoints must have strictly increasing prices, got {} then {}",
                    format_rat(&w[0].0),
                    format_rat(&w[1].0)
                ));
            }
            if w[1].1 > w[0].1 {
                return Err(format!(
                    "curve values must be nonincreasing, got {} then {}",
                    format_rat(&w[0].1),
                    format_rat(&w[1].1)
                ));
            }
        }
        Ok(Curve { breakpoints })
    }

    pub fn eval(&self, price: &Rat) -> Rat {
        let pts = &self.breakpoints;
        if *price <= pts[0].0 {
            return pts[0].1.clone();
        }
        if *price >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1.clone();
        }
        for w in pts.windows(2) {
            if *price <= w[1].0 {
                let dx = &w[1].0 - &w[0].0;
                let dy = &w[1].1 - &w[0].1;
                return &w[0].1 + dy * (price - &w[0].0) / dx;
            }
        }
        unreachable!("breakpoints cover the interval")
    }
}

/// A custom demand function supplied as code. Must be effect-free and
/// deterministic; the engine calls it from a single thread but the contract
/// allows concurrent use.
pub trait CustomDemand: Send + Sync {
    /// Nonempty set of best rooms at the given prices.
    fn best_rooms(&self, p: &PriceVector) -> Vec<usize>;
    /// Cardinal utility, when available.
    fn utility(&self, j: usize, p: &PriceVector) -> Option<Utility> {
        let _ = (j, p);
        None
    }
}

#[derive(Clone)]
pub enum DemandOracle {
    Quasilinear {
        values: Vec<Rat>,
    },
    ArchimedeanCurve {
        curves: Vec<Curve>,
    },
    AffineExternality {
        values: Vec<Rat>,
        betas: Vec<Rat>,
    },
    Custom(Arc<dyn CustomDemand>),
}

impl DemandOracle {
    pub fn quasilinear(values: Vec<Rat>) -> Self {
        DemandOracle::Quasilinear { values }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DemandOracle::Quasilinear { .. } => "quasilinear",
            DemandOracle::ArchimedeanCurve { .. } => "archimedean-curve",
            DemandOracle::AffineExternality { .. } => "affine-externality",
            DemandOracle::Custom(_) => "custom",
        }
    }

    pub fn room_count(&self) -> Option<usize> {
        match self {
            DemandOracle::Quasilinear { values } => Some(values.len()),
            DemandOracle::ArchimedeanCurve { curves } => Some(curves.len()),
            DemandOracle::AffineExternality { values, .. } => Some(values.len()),
            DemandOracle::Custom(_) => None,
        }
    }

    pub fn is_cardinal(&self, p: &PriceVector) -> bool {
        match self {
            DemandOracle::Custom(c) => c.utility(0, p).is_some(),
            _ => true,
        }
    }

    /// Largest value difference between two rooms, for quasilinear oracles.
    pub fn quasilinear_spread(&self) -> Option<Rat> {
        match self {
            DemandOracle::Quasilinear { values } => {
                let max = values.iter().max()?;
                let min = values.iter().min()?;
                Some(max - min)
            }
            _ => None,
        }
    }

    fn check_len(&self, p: &PriceVector) -> Result<(), OracleError> {
        if let Some(m) = self.room_count() {
            if p.len() != m {
                return Err(OracleError::LengthMismatch {
                    got: p.len(),
                    want: m,
                });
            }
        }
        Ok(())
    }

    /// Cardinal utility of room `j` at prices `p`.
    pub fn utility(&self, j: usize, p: &PriceVector) -> Result<Utility, OracleError> {
        self.check_len(p)?;
        match self {
            DemandOracle::Quasilinear { values } => Ok(match p.get(j) {
                Price::Infinite => Utility::NegInfinite,
                Price::Finite(pj) => Utility::Finite(&values[j] - pj),
            }),
            DemandOracle::ArchimedeanCurve { curves } => Ok(match p.get(j) {
                Price::Infinite => Utility::NegInfinite,
                Price::Finite(pj) => Utility::Finite(curves[j].eval(pj)),
            }),
            DemandOracle::AffineExternality { values, betas } => match p.get(j) {
                Price::Infinite => Ok(Utility::NegInfinite),
                Price::Finite(pj) => {
                    let max = p.max_finite().ok_or(OracleError::AllInfinite)?;
                    Ok(Utility::Finite(&values[j] - pj + &betas[j] * max))
                }
            },
            DemandOracle::Custom(c) => c.utility(j, p).ok_or(OracleError::NotCardinal),
        }
    }

    /// Nonempty set of best rooms at prices `p`, sorted ascending.
    pub fn best_rooms(&self, p: &PriceVector) -> Result<Vec<usize>, OracleError> {
        self.check_len(p)?;
        if !p.any_finite() {
            return Err(OracleError::AllInfinite);
        }
        if let DemandOracle::Custom(c) = self {
            let mut rooms = c.best_rooms(p);
            rooms.sort_unstable();
            rooms.dedup();
            if rooms.is_empty() || rooms.iter().any(|&j| j >= p.len()) {
                return Err(OracleError::BadCustomAnswer);
            }
            return Ok(rooms);
        }
        let utils: Vec<Utility> = (0..p.len())
            .map(|j| self.utility(j, p))
            .collect::<Result<_, _>>()?;
        let best = utils.iter().max().expect("nonempty").clone();
        Ok((0..p.len()).filter(|&j| utils[j] == best).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssumptionKind {
    Miserly,
    WeakMiserly,
    Archimedean,
    Compensable,
}

impl AssumptionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AssumptionKind::Miserly => "miserly",
            AssumptionKind::WeakMiserly => "weak-miserly",
            AssumptionKind::Archimedean => "archimedean",
            AssumptionKind::Compensable => "compensable",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "miserly" => Some(AssumptionKind::Miserly),
            "weak-miserly" => Some(AssumptionKind::WeakMiserly),
            "archimedean" => Some(AssumptionKind::Archimedean),
            "compensable" => Some(AssumptionKind::Compensable),
            _ => None,
        }
    }
}

/// Result of sampling one assumption's trigger region. A pass is evidence,
/// not proof.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub kind: AssumptionKind,
    pub samples: usize,
    pub passed: bool,
    /// First price vector at which the assumption failed, if any.
    pub counterexample: Option<PriceVector>,
    pub note: &'static str,
}

const SAMPLE_RESOLUTION: i64 = 1000;

fn sample_coord(rng: &mut ChaCha8Rng, t: &Rat) -> Rat {
    // uniform over { t * i / RES : i in [-RES, RES] }
    let i = rng.gen_range(-SAMPLE_RESOLUTION..=SAMPLE_RESOLUTION);
    t * rat(i, SAMPLE_RESOLUTION)
}

fn sample_nonpositive(rng: &mut ChaCha8Rng, t: &Rat) -> Rat {
    let i = rng.gen_range(-SAMPLE_RESOLUTION..=0);
    t * rat(i, SAMPLE_RESOLUTION)
}

/// Sample `sample_count` price vectors from the assumption's trigger region
/// and check the assumption at each. Deterministic for a fixed seed.
pub fn validate_assumption(
    oracle: &DemandOracle,
    kind: AssumptionKind,
    m: usize,
    t: &Rat,
    _r: &Rat,
    sample_count: usize,
    seed: u64,
) -> ValidationReport {
    assert!(sample_count >= 1, "sample_count must be at least 1");
    assert!(m >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let note = "pass is sampling evidence, not proof; continuity of the demand function is assumed, not checked";
    let fail = |counterexample: PriceVector, samples: usize| ValidationReport {
        kind,
        samples,
        passed: false,
        counterexample: Some(counterexample),
        note,
    };
    for s in 0..sample_count {
        let mut coords: Vec<Rat> = (0..m).map(|_| sample_coord(&mut rng, t)).collect();
        match kind {
            AssumptionKind::Miserly | AssumptionKind::WeakMiserly => {
                // trigger region: min p <= 0
                let j0 = rng.gen_range(0..m);
                coords[j0] = sample_nonpositive(&mut rng, t);
                let p = PriceVector::finite(coords);
                let best = match oracle.best_rooms(&p) {
                    Ok(b) => b,
                    Err(_) => return fail(p, s + 1),
                };
                let ok = match kind {
                    AssumptionKind::Miserly => best
                        .iter()
                        .any(|&j| p.get(j).as_finite().is_some_and(|v| !v.is_positive())),
                    _ => {
                        let max = p.max_finite().expect("finite vector");
                        best.iter()
                            .any(|&j| p.get(j).as_finite().is_some_and(|v| *v < max))
                    }
                };
                if !ok {
                    return fail(p, s + 1);
                }
            }
            AssumptionKind::Compensable => {
                // trigger region: min p <= 0 and max p = T
                let j0 = rng.gen_range(0..m);
                let mut j1 = rng.gen_range(0..m);
                if m > 1 {
                    while j1 == j0 {
                        j1 = rng.gen_range(0..m);
                    }
                }
                for c in coords.iter_mut() {
                    if *c > *t {
                        *c = t.clone();
                    }
                }
                coords[j0] = sample_nonpositive(&mut rng, t);
                coords[j1] = t.clone();
                let p = PriceVector::finite(coords);
                let best = match oracle.best_rooms(&p) {
                    Ok(b) => b,
                    Err(_) => return fail(p, s + 1),
                };
                let ok = best
                    .iter()
                    .any(|&j| p.get(j).as_finite().is_some_and(|v| *v < *t));
                if !ok {
                    return fail(p, s + 1);
                }
            }
            AssumptionKind::Archimedean => {
                // check (j, 0) vs (j', T) for every ordered pair in a sampled context
                for j in 0..m {
                    for j2 in 0..m {
                        if j == j2 {
                            continue;
                        }
                        let mut c = coords.clone();
                        c[j] = Rat::zero();
                        c[j2] = t.clone();
                        let p = PriceVector::finite(c);
                        let ok = if oracle.is_cardinal(&p) {
                            match (oracle.utility(j, &p), oracle.utility(j2, &p)) {
                                (Ok(uj), Ok(uj2)) => uj >= uj2,
                                _ => false,
                            }
                        } else {
                            // ordinal fallback: if the T-priced room is best,
                            // the free room must be best too
                            match oracle.best_rooms(&p) {
                                Ok(best) => !best.contains(&j2) || best.contains(&j),
                                Err(_) => false,
                            }
                        };
                        if !ok {
                            return fail(p, s + 1);
                        }
                    }
                }
            }
        }
    }
    ValidationReport {
        kind,
        samples: sample_count,
        passed: true,
        counterexample: None,
        note,
    }
}
