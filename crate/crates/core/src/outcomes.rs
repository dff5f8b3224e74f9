//! Reachable outputs and the choice of which of them a query should try to
//! separate.

use num_bigint::BigUint;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::Circuit;
use crate::cnf::{bits_to_biguint, tseitin_compile, Bit, CnfError, CnfFormula, Var};
use crate::counting::{count_approx, ApproxParams, CountError, CountEstimate};
use crate::history::{constrain_one, History};
use crate::maxquery::{instantiate_copies, MaxQueryError};
use crate::rng;
use crate::sat::{enumerate_models, solve, SatError, SolverConfig};

#[derive(Debug, Error)]
pub enum OutcomeError {
    #[error("outcome cap must be at least 2")]
    BadCap,
    #[error("no live outcomes")]
    NoneLive,
    #[error(transparent)]
    Cnf(#[from] CnfError),
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Copies(#[from] MaxQueryError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outcome {
    #[serde(serialize_with = "ser_big")]
    pub value: BigUint,
    pub approx_count: Option<CountEstimate>,
    pub alive: bool,
}

fn ser_big<S: serde::Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutcomeSet {
    pub outcomes: Vec<Outcome>,
    pub complete: bool,
}

impl OutcomeSet {
    pub fn values(&self) -> Vec<BigUint> {
        self.outcomes.iter().map(|o| o.value.clone()).collect()
    }

    pub fn live(&self) -> impl Iterator<Item = &Outcome> {
        self.outcomes.iter().filter(|o| o.alive)
    }
}

pub const DEFAULT_OUTCOME_CAP: usize = 4096;

/// Enumerates up to `cap` reachable output values, sorted ascending.
pub fn derive_outcomes(circuit: &Circuit, cap: usize, cfg: &SolverConfig) -> Result<OutcomeSet, OutcomeError> {
    if cap < 2 {
        return Err(OutcomeError::BadCap);
    }
    let f = tseitin_compile(circuit)?;
    let mut found = enumerate_models(&f, &f.bitmap.output, cap + 1, cfg)?;
    let complete = found.len() <= cap;
    found.truncate(cap);
    let mut values: Vec<BigUint> = found.iter().map(|m| bits_to_biguint(m)).collect();
    values.sort();
    Ok(OutcomeSet {
        outcomes: values
            .into_iter()
            .map(|value| Outcome {
                value,
                approx_count: None,
                alive: true,
            })
            .collect(),
        complete,
    })
}

/// Candidates `t` (under the history) for which some chosen input yields
/// `value`.
fn outcome_formula(circuit: &Circuit, history: &History, value: &BigUint) -> (CnfFormula, Vec<Var>) {
    let (mut f, target) = history.candidates(circuit);
    let chosen = f.new_vars(circuit.chosen_width().bits());
    constrain_one(circuit, &mut f, &Bit::vars(&chosen), &Bit::vars(&target), value);
    (f, target)
}

#[derive(Clone, Debug)]
pub struct SelectParams {
    pub solver: SolverConfig,
    pub approx: ApproxParams,
    pub workers: usize,
}

#[derive(Clone, Debug)]
pub struct Selection {
    /// Ascending by (count, value).
    pub selected: Vec<Outcome>,
    pub dropped: Vec<Outcome>,
    /// Distinct candidates demanded per class by the co-satisfiability test.
    pub distinct: usize,
}

/// Counts each live outcome, marks empty ones dead, then drops the
/// smallest-count outcomes until the rest can all occur under one chosen
/// input.
///
/// The co-satisfiability test first asks for two different candidates per
/// class, so a class that a query can only keep as a singleton does not
/// block larger splits; if that leaves at most one outcome the test is
/// repeated with one candidate per class.
pub fn select_outcomes(
    circuit: &Circuit,
    history: &History,
    set: &mut OutcomeSet,
    params: &SelectParams,
) -> Result<Selection, OutcomeError> {
    let live: Vec<usize> = (0..set.outcomes.len()).filter(|&i| set.outcomes[i].alive).collect();
    if live.is_empty() {
        return Err(OutcomeError::NoneLive);
    }
    let count_one = |i: &usize| -> Result<CountEstimate, OutcomeError> {
        let (f, t) = outcome_formula(circuit, history, &set.outcomes[*i].value);
        let cfg = params
            .solver
            .with_seed(rng::derive_seed(params.solver.seed, "select-count", *i as u64));
        Ok(count_approx(&f, &t, params.approx, &cfg)?)
    };
    let counts: Vec<CountEstimate> = if params.workers > 1 {
        live.par_iter().map(count_one).collect::<Result<_, _>>()?
    } else {
        live.iter().map(count_one).collect::<Result<_, _>>()?
    };
    for (&i, c) in live.iter().zip(counts) {
        let o = &mut set.outcomes[i];
        o.alive = !c.count.is_zero();
        o.approx_count = Some(c);
    }
    let mut order: Vec<Outcome> = set.live().cloned().collect();
    if order.is_empty() {
        return Err(OutcomeError::NoneLive);
    }
    order.sort_by(|a, b| {
        let ca = &a.approx_count.as_ref().unwrap().count;
        let cb = &b.approx_count.as_ref().unwrap().count;
        ca.cmp(cb).then_with(|| a.value.cmp(&b.value))
    });

    // exact candidate total when it is small enough to matter for the
    // cardinality bound below
    let (cand, t) = history.candidates(circuit);
    let probe = 2 * order.len();
    let found = enumerate_models(&cand, &t, probe + 1, &params.solver)?.len();
    let total = (found <= probe).then_some(found);

    let mut drop = drop_prefix(circuit, history, &order, 2, total, &params.solver)?;
    let mut distinct = 2;
    if order.len() - drop <= 1 {
        drop = drop_prefix(circuit, history, &order, 1, total, &params.solver)?;
        distinct = 1;
    }
    let selected = order.split_off(drop);
    Ok(Selection {
        selected,
        dropped: order,
        distinct,
    })
}

/// Whether the outcomes can all occur for one chosen input, each with
/// `distinct` different candidates.
pub fn co_satisfiable(
    circuit: &Circuit,
    history: &History,
    values: &[BigUint],
    distinct: usize,
    cfg: &SolverConfig,
) -> Result<bool, OutcomeError> {
    let inst = instantiate_copies(circuit, history, values, distinct, true)?;
    Ok(solve(&inst.formula, &[], cfg)?.known()?.is_sat())
}

/// Number of leading outcomes the ascending drop loop would remove. The
/// test is monotone under taking subsets, so the first co-satisfiable
/// suffix can be found by bisection.
///
/// Suffixes that cannot hold `distinct` candidates per class by counting
/// alone are rejected without a solver call; those refutations are
/// pigeonhole arguments that CDCL handles badly.
fn drop_prefix(
    circuit: &Circuit,
    history: &History,
    order: &[Outcome],
    distinct: usize,
    total: Option<usize>,
    cfg: &SolverConfig,
) -> Result<usize, OutcomeError> {
    let n = order.len();
    if n <= 1 {
        return Ok(0);
    }
    let values: Vec<BigUint> = order.iter().map(|o| o.value.clone()).collect();
    let too_small = |o: &Outcome| {
        let c = o.approx_count.as_ref().expect("counted");
        c.exact && c.count < BigUint::from(distinct)
    };
    let ok = |i: usize| -> Result<bool, OutcomeError> {
        if order[i..].iter().any(too_small) || total.is_some_and(|r| distinct * (n - i) > r) {
            return Ok(false);
        }
        co_satisfiable(circuit, history, &values[i..], distinct, cfg)
    };
    // a suffix of length one never blocks: the loop stops there anyway
    let (mut lo, mut hi) = (0usize, n - 1);
    if ok(0)? {
        return Ok(0);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionalities::{constant, mean_average, millionaires};

    fn b(v: u32) -> BigUint {
        BigUint::from(v)
    }

    fn params() -> SelectParams {
        SelectParams {
            solver: SolverConfig::default(),
            approx: ApproxParams::default(),
            workers: 1,
        }
    }

    #[test]
    fn derive_small_cases() {
        let cfg = SolverConfig::default();
        let m = derive_outcomes(millionaires(8).unwrap().circuit(), 16, &cfg).unwrap();
        assert_eq!(m.values(), vec![b(0), b(1)]);
        assert!(m.complete);
        let mean = derive_outcomes(mean_average(2).unwrap().circuit(), 16, &cfg).unwrap();
        assert_eq!(mean.values(), vec![b(0), b(1), b(2), b(3)]);
        let c = derive_outcomes(constant(3, 5).unwrap().circuit(), 16, &cfg).unwrap();
        assert_eq!(c.values(), vec![b(5)]);
        let capped = derive_outcomes(mean_average(4).unwrap().circuit(), 3, &cfg).unwrap();
        assert_eq!(capped.outcomes.len(), 3);
        assert!(!capped.complete);
        assert!(derive_outcomes(millionaires(2).unwrap().circuit(), 1, &cfg).is_err());
    }

    #[test]
    fn mean_two_bits_drops_extremes() {
        let f = mean_average(2).unwrap();
        let mut set = derive_outcomes(f.circuit(), 16, &SolverConfig::default()).unwrap();
        let sel = select_outcomes(f.circuit(), &History::new(), &mut set, &params()).unwrap();
        let mut kept: Vec<BigUint> = sel.selected.iter().map(|o| o.value.clone()).collect();
        kept.sort();
        assert_eq!(kept, vec![b(1), b(2)]);
        let mut gone: Vec<BigUint> = sel.dropped.iter().map(|o| o.value.clone()).collect();
        gone.sort();
        assert_eq!(gone, vec![b(0), b(3)]);
    }

    #[test]
    fn millionaires_keeps_both() {
        let f = millionaires(6).unwrap();
        let mut set = derive_outcomes(f.circuit(), 16, &SolverConfig::default()).unwrap();
        let sel = select_outcomes(f.circuit(), &History::new(), &mut set, &params()).unwrap();
        assert_eq!(sel.selected.len(), 2);
        assert!(sel.dropped.is_empty());
    }

    #[test]
    fn constant_output_is_singleton() {
        let f = constant(3, 6).unwrap();
        let mut set = derive_outcomes(f.circuit(), 16, &SolverConfig::default()).unwrap();
        let sel = select_outcomes(f.circuit(), &History::new(), &mut set, &params()).unwrap();
        assert_eq!(sel.selected.len(), 1);
        assert_eq!(sel.selected[0].value, b(6));
    }

    #[test]
    fn history_kills_outcomes() {
        let f = millionaires(4).unwrap();
        let mut h = History::new();
        // t >= 15: no chosen input exceeds it
        h.push(b(15), b(0));
        h.push(b(14), b(0));
        let mut set = derive_outcomes(f.circuit(), 16, &SolverConfig::default()).unwrap();
        let sel = select_outcomes(f.circuit(), &h, &mut set, &params()).unwrap();
        assert_eq!(sel.selected.len(), 1);
        let dead: Vec<&Outcome> = set.outcomes.iter().filter(|o| !o.alive).collect();
        assert_eq!(dead.len(), 1);
        assert_eq!(dead[0].value, b(1));
    }
}
