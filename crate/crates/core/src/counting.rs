//! Projected model counting.
//!
//! `count_exact` enumerates with blocking clauses. `count_approx` cuts the
//! solution space with random parity constraints until a cell is small
//! enough to enumerate, then scales back up; the median over several
//! independent rounds is reported.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::cnf::{CnfFormula, Var};
use crate::rng;
use crate::sat::{enumerate_in, open_session, SatError, SolverConfig};

/// Largest projection `count_exact` accepts.
pub const MAX_EXACT_PROJECTION: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CountError {
    #[error("exact counting limited to {MAX_EXACT_PROJECTION} projected variables, got {0}")]
    ProjectionTooLarge(usize),
    #[error("epsilon must be positive and delta in (0, 1), got ({0}, {1})")]
    BadParams(String, String),
    #[error(transparent)]
    Sat(#[from] SatError),
}

/// A random parity constraint over a subset of the projection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashConstraint {
    pub vars: Vec<Var>,
    pub rhs: bool,
}

impl HashConstraint {
    pub fn add_to(&self, f: &mut CnfFormula) {
        f.add_xor(self.vars.clone(), self.rhs);
    }
}

/// Includes each projection variable with probability 1/2; uniform rhs.
pub fn sample_hash(projection: &[Var], rng: &mut impl Rng) -> HashConstraint {
    let vars = projection.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
    HashConstraint { vars, rhs: rng.gen() }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountEstimate {
    #[serde(serialize_with = "ser_big")]
    pub count: BigUint,
    pub epsilon: f64,
    pub delta: f64,
    pub exact: bool,
}

fn ser_big<S: serde::Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

impl CountEstimate {
    pub fn exact(count: impl Into<BigUint>) -> Self {
        CountEstimate {
            count: count.into(),
            epsilon: 0.0,
            delta: 0.0,
            exact: true,
        }
    }

    pub fn as_f64(&self) -> f64 {
        self.count.to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn log2(&self) -> f64 {
        if self.count.is_zero() {
            f64::NEG_INFINITY
        } else {
            let bits = self.count.bits();
            if bits <= 1000 {
                self.as_f64().log2()
            } else {
                let shift = bits - 64;
                (&self.count >> shift).to_f64().unwrap().log2() + shift as f64
            }
        }
    }

    /// Largest true count consistent with the estimate's tolerance.
    pub fn upper_bound(&self) -> BigUint {
        if self.exact {
            self.count.clone()
        } else {
            let scaled = self.as_f64() * (1.0 + self.epsilon);
            if scaled.is_finite() {
                BigUint::from(scaled.ceil() as u128)
            } else {
                &self.count * 2u32
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxParams {
    pub epsilon: f64,
    pub delta: f64,
}

impl Default for ApproxParams {
    fn default() -> Self {
        ApproxParams {
            epsilon: 0.8,
            delta: 0.2,
        }
    }
}

impl ApproxParams {
    pub fn validate(&self) -> Result<(), CountError> {
        if self.epsilon > 0.0 && self.delta > 0.0 && self.delta < 1.0 {
            Ok(())
        } else {
            Err(CountError::BadParams(self.epsilon.to_string(), self.delta.to_string()))
        }
    }

    /// Cell-size threshold below which a cell is enumerated outright.
    pub fn pivot(&self) -> usize {
        let e = self.epsilon;
        (1.0 + 9.84 * (1.0 + e / (1.0 + e)) * (1.0 + 1.0 / e).powi(2)).ceil() as usize
    }

    /// Independent rounds whose median is reported; kept odd.
    pub fn rounds(&self) -> usize {
        let r = (ROUND_FACTOR * (1.0 / self.delta).ln()).ceil().max(1.0) as usize;
        r | 1
    }
}

/// Rounds per unit of `ln(1/delta)`.
pub const ROUND_FACTOR: f64 = 3.0;

pub fn count_exact(formula: &CnfFormula, projection: &[Var], cfg: &SolverConfig) -> Result<CountEstimate, CountError> {
    if projection.len() > MAX_EXACT_PROJECTION {
        return Err(CountError::ProjectionTooLarge(projection.len()));
    }
    let mut s = open_session(formula, cfg)?;
    let models = enumerate_in(s.as_mut(), projection, usize::MAX, &[])?;
    Ok(CountEstimate::exact(models.len() as u64))
}

/// Number of projected solutions of `formula` plus `hashes`, stopping at
/// `cap + 1`.
fn cell_count(
    formula: &CnfFormula,
    projection: &[Var],
    hashes: &[HashConstraint],
    cap: usize,
    cfg: &SolverConfig,
) -> Result<usize, CountError> {
    let mut f = formula.clone();
    for h in hashes {
        h.add_to(&mut f);
    }
    let mut s = open_session(&f, cfg)?;
    Ok(enumerate_in(s.as_mut(), projection, cap + 1, &[])?.len())
}

pub fn count_approx(
    formula: &CnfFormula,
    projection: &[Var],
    params: ApproxParams,
    cfg: &SolverConfig,
) -> Result<CountEstimate, CountError> {
    params.validate()?;
    let pivot = params.pivot();
    let small = cell_count(formula, projection, &[], pivot, cfg)?;
    if small <= pivot {
        return Ok(CountEstimate::exact(small as u64));
    }
    let n = projection.len();
    let mut estimates: Vec<BigUint> = Vec::new();
    let mut hint = 1usize;
    for round in 0..params.rounds() {
        let mut rng = rng::stream(cfg.seed, "approx-round", round as u64);
        let hashes: Vec<HashConstraint> = (0..n).map(|_| sample_hash(projection, &mut rng)).collect();
        let round_cfg = cfg.with_seed(rng::derive_seed(cfg.seed, "approx-solver", round as u64));
        let mut cache: BTreeMap<usize, usize> = BTreeMap::new();
        cache.insert(0, pivot + 1);
        let cell = |m: usize, cache: &mut BTreeMap<usize, usize>| -> Result<usize, CountError> {
            if let Some(&c) = cache.get(&m) {
                return Ok(c);
            }
            let c = cell_count(formula, projection, &hashes[..m], pivot, &round_cfg)?;
            cache.insert(m, c);
            Ok(c)
        };
        // gallop from the previous round's answer, then bisect; cell(lo) is
        // always above the pivot and cell(hi) at or below it
        let (mut lo, mut hi) = (0usize, None::<usize>);
        let start = hint.clamp(1, n);
        let mut step = 1;
        if cell(start, &mut cache)? <= pivot {
            hi = Some(start);
            let mut h = start;
            while h > lo + 1 {
                let probe = h.saturating_sub(step).max(lo + 1);
                if cell(probe, &mut cache)? <= pivot {
                    h = probe;
                    hi = Some(h);
                    step *= 2;
                } else {
                    lo = probe;
                    break;
                }
            }
        } else {
            lo = start;
            while lo < n {
                let probe = (lo + step).min(n);
                if cell(probe, &mut cache)? <= pivot {
                    hi = Some(probe);
                    break;
                }
                lo = probe;
                step *= 2;
            }
        }
        while let Some(h) = hi {
            if h - lo <= 1 {
                break;
            }
            let mid = lo + (h - lo) / 2;
            if cell(mid, &mut cache)? <= pivot {
                hi = Some(mid);
            } else {
                lo = mid;
            }
        }
        let est = match hi {
            Some(h) => {
                hint = h;
                BigUint::from(cache[&h]) << h
            }
            // even n hashes leave a big cell (rank-deficient draw)
            None => BigUint::from(cache[&n]) << n,
        };
        estimates.push(est);
    }
    estimates.sort();
    Ok(CountEstimate {
        count: estimates[estimates.len() / 2].clone(),
        epsilon: params.epsilon,
        delta: params.delta,
        exact: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn v(i: u32) -> Var {
        Var::new(i)
    }

    #[test]
    fn pivot_and_rounds_at_defaults() {
        let p = ApproxParams::default();
        assert_eq!(p.pivot(), 73);
        assert_eq!(p.rounds(), 5);
    }

    #[test]
    fn exact_small_cases() {
        let cfg = SolverConfig::default();
        let f = CnfFormula::new(4);
        let proj: Vec<Var> = (1..=4).map(v).collect();
        assert_eq!(count_exact(&f, &proj, &cfg).unwrap().count, BigUint::from(16u32));
        let mut g = CnfFormula::new(2);
        g.add_clause(vec![v(1).pos(), v(2).pos()]);
        assert_eq!(count_exact(&g, &[v(1), v(2)], &cfg).unwrap().count, BigUint::from(3u32));
    }

    #[test]
    fn empty_projection_counts_satisfiability() {
        let cfg = SolverConfig::default();
        let mut f = CnfFormula::new(1);
        assert_eq!(count_exact(&f, &[], &cfg).unwrap().count, BigUint::from(1u32));
        f.add_clause(vec![v(1).pos()]);
        f.add_clause(vec![v(1).neg()]);
        assert_eq!(count_exact(&f, &[], &cfg).unwrap().count, BigUint::from(0u32));
        let est = count_approx(&f, &[v(1)], ApproxParams::default(), &cfg).unwrap();
        assert_eq!(est.count, BigUint::from(0u32));
    }

    #[test]
    fn exact_guard() {
        let f = CnfFormula::new(30);
        let proj: Vec<Var> = (1..=25).map(v).collect();
        assert!(matches!(
            count_exact(&f, &proj, &SolverConfig::default()),
            Err(CountError::ProjectionTooLarge(25))
        ));
    }

    #[test]
    fn hash_on_one_var_family() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let mut seen = std::collections::BTreeMap::new();
        for _ in 0..4000 {
            let h = sample_hash(&[v(1)], &mut rng);
            *seen.entry((h.vars.len(), h.rhs)).or_insert(0) += 1;
        }
        assert_eq!(seen.len(), 4);
        assert!(seen.values().all(|&c| (900..1100).contains(&c)));
    }

    #[test]
    fn bad_params_rejected() {
        let f = CnfFormula::new(1);
        let bad = ApproxParams {
            epsilon: 0.0,
            delta: 0.2,
        };
        assert!(count_approx(&f, &[v(1)], bad, &SolverConfig::default()).is_err());
    }
}
