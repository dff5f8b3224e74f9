//! Query synthesis: pick a chosen input for which every selected outcome
//! class stays as large as possible.
//!
//! Each selected outcome gets one or more copies of the circuit over fresh
//! target blocks that share the chosen bits. Adding `k` random parity
//! constraints to every copy and asking for satisfiability is a coarse test
//! that each class holds around `2^k` candidates; the largest satisfiable
//! `k` is searched for and the chosen bits of its model become the query.
//!
//! At small class sizes that test is noisy, so optionally several chosen
//! values satisfying the final level are collected and the one whose
//! smallest class has the largest estimated count wins.

use num_bigint::BigUint;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::Circuit;
use crate::cnf::{bits_to_biguint, project, Bit, CnfError, CnfFormula, Encoder, Var};
use crate::counting::{count_approx, sample_hash, ApproxParams, CountError, CountEstimate, HashConstraint};
use crate::history::{constrain_one, History};
use crate::rng;
use crate::sat::{enumerate_models, solve, SatError, SolverConfig};

#[derive(Debug, Error)]
pub enum MaxQueryError {
    #[error("no outcomes to instantiate")]
    Empty,
    #[error("outcome {0} listed twice")]
    Duplicate(BigUint),
    #[error("selected outcomes are not simultaneously satisfiable")]
    Unsat,
    #[error(transparent)]
    Cnf(#[from] CnfError),
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error(transparent)]
    Count(#[from] CountError),
}

#[derive(Clone, Debug)]
pub struct OutcomeCopy {
    pub outcome: BigUint,
    pub target: Vec<Var>,
    pub hashes: Vec<HashConstraint>,
}

#[derive(Clone, Debug)]
pub struct CopyInstance {
    pub formula: CnfFormula,
    pub chosen: Vec<Var>,
    pub copies: Vec<OutcomeCopy>,
}

impl CopyInstance {
    /// The instance with the first `k` hashes of every copy added.
    pub fn with_hashes(&self, k: usize) -> CnfFormula {
        let draw: Vec<&[HashConstraint]> = self.copies.iter().map(|c| c.hashes.as_slice()).collect();
        self.with_draw(&draw, k)
    }

    /// As [`with_hashes`](Self::with_hashes) with per-copy hash lists
    /// supplied by the caller.
    pub fn with_draw(&self, draw: &[&[HashConstraint]], k: usize) -> CnfFormula {
        let mut f = self.formula.clone();
        for hashes in draw {
            for h in hashes.iter().take(k) {
                h.add_to(&mut f);
            }
        }
        f
    }
}

/// Builds `per_outcome` circuit copies per outcome, each over a fresh target
/// block carrying the full history. With `distinct`, copies of the same
/// outcome must take pairwise different targets.
pub fn instantiate_copies(
    circuit: &Circuit,
    history: &History,
    outcomes: &[BigUint],
    per_outcome: usize,
    distinct: bool,
) -> Result<CopyInstance, MaxQueryError> {
    if outcomes.is_empty() || per_outcome == 0 {
        return Err(MaxQueryError::Empty);
    }
    for (i, o) in outcomes.iter().enumerate() {
        if outcomes[..i].contains(o) {
            return Err(MaxQueryError::Duplicate(o.clone()));
        }
    }
    let cw = circuit.chosen_width().bits();
    let tw = circuit.target_width().bits();
    let mut f = CnfFormula::new(cw);
    let chosen: Vec<Var> = (1..=cw).map(Var::new).collect();
    f.bitmap.chosen = chosen.clone();
    let chosen_bits = Bit::vars(&chosen);
    let mut copies = Vec::with_capacity(outcomes.len() * per_outcome);
    for o in outcomes {
        let first = copies.len();
        for _ in 0..per_outcome {
            let target = f.new_vars(tw);
            history.constrain(circuit, &mut f, &target);
            constrain_one(circuit, &mut f, &chosen_bits, &Bit::vars(&target), o);
            f.bitmap.target.extend(&target);
            copies.push(OutcomeCopy {
                outcome: o.clone(),
                target,
                hashes: Vec::new(),
            });
        }
        if distinct {
            for i in first..copies.len() {
                for j in first..i {
                    let a = Bit::vars(&copies[i].target);
                    let b = Bit::vars(&copies[j].target);
                    let mut enc = Encoder::new(&mut f);
                    let same = enc.eq(&a, &b);
                    enc.assert_true(!same);
                }
            }
        }
        f.check_capacity()?;
    }
    Ok(CopyInstance {
        formula: f,
        chosen,
        copies,
    })
}

#[derive(Clone, Debug)]
pub struct SynthesisParams {
    /// Seed is taken from here; callers vary it per synthesis.
    pub solver: SolverConfig,
    /// Copies per selected outcome, each with its own hash draws.
    pub replicas: usize,
    pub workers: usize,
    /// Independent hash draws tried per level.
    pub trials: usize,
    /// Chosen values scored at the final level; 1 keeps the first model.
    pub rescore: usize,
    pub approx: ApproxParams,
}

impl Default for SynthesisParams {
    fn default() -> Self {
        SynthesisParams {
            solver: SolverConfig::default(),
            replicas: DEFAULT_REPLICAS,
            workers: 1,
            trials: DEFAULT_TRIALS,
            rescore: DEFAULT_RESCORE,
            approx: ApproxParams::default(),
        }
    }
}

pub const DEFAULT_REPLICAS: usize = 1;
pub const DEFAULT_RESCORE: usize = 8;
pub const DEFAULT_TRIALS: usize = 3;

#[derive(Clone, Debug)]
pub struct QuerySynthesis {
    pub chosen_value: BigUint,
    /// Estimated size of the smallest selected class, when scored.
    pub min_class: Option<CountEstimate>,
    pub k_max: u32,
    pub copies: Vec<OutcomeCopy>,
    /// The satisfiable instance at `k_max`.
    pub instance: CnfFormula,
}

/// Largest hash count worth trying when `remaining` candidates are split
/// over `classes` outcomes.
pub fn k_cap(remaining: &BigUint, classes: usize, target_width: u32) -> u32 {
    let per = remaining / BigUint::from(classes.max(1));
    if per == BigUint::default() {
        return 0;
    }
    ((per.bits() - 1) as u32).min(target_width)
}

pub fn maximize_query(
    circuit: &Circuit,
    history: &History,
    selected: &[BigUint],
    k_cap: u32,
    params: &SynthesisParams,
) -> Result<QuerySynthesis, MaxQueryError> {
    let mut inst = instantiate_copies(circuit, history, selected, params.replicas.max(1), false)?;
    let seed = params.solver.seed;
    let k_cap = k_cap.min(circuit.target_width().bits());
    let trials = params.trials.max(1);
    let n = inst.copies.len();
    let draws: Vec<Vec<Vec<HashConstraint>>> = (0..trials)
        .map(|d| {
            inst.copies
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    let mut r = rng::stream(seed, "maxquery-hash", (d * n + j) as u64);
                    independent_hashes(&c.target, k_cap as usize, &mut r)
                })
                .collect()
        })
        .collect();
    let draw_refs: Vec<Vec<&[HashConstraint]>> = draws.iter().map(|d| d.iter().map(Vec::as_slice).collect()).collect();
    // a level passes if any of the independent draws is satisfiable
    let attempt = |k: u32| -> Result<Option<(usize, Vec<bool>)>, MaxQueryError> {
        for (d, draw) in draw_refs.iter().enumerate() {
            let f = inst.with_draw(draw, k as usize);
            let tag = k as u64 + (d * (k_cap as usize + 1)) as u64;
            let cfg = params.solver.with_seed(rng::derive_seed(seed, "maxquery-solve", tag));
            if let Some(m) = solve(&f, &[], &cfg)?.known()?.model {
                return Ok(Some((d, m)));
            }
        }
        Ok(None)
    };

    let levels = k_cap as usize + 1;
    let (k_max, (draw, model)) = if params.workers > 1 && params.workers >= levels {
        let results: Vec<Option<(usize, Vec<bool>)>> =
            (0..=k_cap).into_par_iter().map(attempt).collect::<Result<_, _>>()?;
        match results
            .into_iter()
            .enumerate()
            .rev()
            .find_map(|(k, m)| m.map(|m| (k as u32, m)))
        {
            Some(found) => found,
            None => return Err(MaxQueryError::Unsat),
        }
    } else {
        search_down(k_cap, attempt)?
    };

    let first = bits_to_biguint(&project(&model, &inst.chosen));
    let (chosen_value, min_class, draw) = if params.rescore > 1 && selected.len() > 1 {
        // candidates from every draw that passes the final level, tagged
        // with the draw that admits them
        let mut pool = vec![(first, draw)];
        for (d, refs) in draw_refs.iter().enumerate() {
            let f = inst.with_draw(refs, k_max as usize);
            let cfg = params
                .solver
                .with_seed(rng::derive_seed(seed, "maxquery-pool", d as u64));
            for m in enumerate_models(&f, &inst.chosen, params.rescore, &cfg)? {
                let c = bits_to_biguint(&m);
                if !pool.iter().any(|(p, _)| *p == c) {
                    pool.push((c, d));
                }
            }
        }
        let mut best: Option<(BigUint, CountEstimate, usize)> = None;
        for (i, (c, d)) in pool.into_iter().enumerate() {
            let score = smallest_class(circuit, history, &c, selected, params, i)?;
            log::debug!("k={k_max} candidate {c} (draw {d}): smallest class ~{}", score.count);
            if best.as_ref().is_none_or(|(_, b, _)| score.count > b.count) {
                best = Some((c, score, d));
            }
        }
        let (c, s, d) = best.expect("pool holds the first model");
        (c, Some(s), d)
    } else {
        (first, None, draw)
    };
    let instance = inst.with_draw(&draw_refs[draw], k_max as usize);
    for (c, h) in inst.copies.iter_mut().zip(&draws[draw]) {
        c.hashes = h[..k_max as usize].to_vec();
    }

    Ok(QuerySynthesis {
        chosen_value,
        min_class,
        k_max,
        copies: inst.copies,
        instance,
    })
}

/// Smallest estimated class `{t : F(chosen, t) = o}` over the selected `o`.
fn smallest_class(
    circuit: &Circuit,
    history: &History,
    chosen: &BigUint,
    selected: &[BigUint],
    params: &SynthesisParams,
    index: usize,
) -> Result<CountEstimate, MaxQueryError> {
    let cw = circuit.chosen_width().bits();
    let mut best: Option<CountEstimate> = None;
    for (j, o) in selected.iter().enumerate() {
        let (mut f, t) = history.candidates(circuit);
        constrain_one(circuit, &mut f, &Bit::constants(chosen, cw), &Bit::vars(&t), o);
        let tag = (index * selected.len() + j) as u64;
        let cfg = params
            .solver
            .with_seed(rng::derive_seed(params.solver.seed, "maxquery-score", tag));
        let c = count_approx(&f, &t, params.approx, &cfg)?;
        if best.as_ref().is_none_or(|b| c.count < b.count) {
            best = Some(c);
        }
    }
    Ok(best.expect("selected is nonempty"))
}

/// `k` hashes over `vars` whose variable sets are linearly independent, so
/// no copy is made unsatisfiable by the draw alone. `k` must not exceed
/// `vars.len()`.
pub fn independent_hashes(vars: &[Var], k: usize, rng: &mut impl Rng) -> Vec<HashConstraint> {
    assert!(k <= vars.len());
    let words = vars.len().div_ceil(64);
    // reduced rows keyed by their leading bit
    let mut basis: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let h = sample_hash(vars, rng);
        let mut row = vec![0u64; words];
        for v in &h.vars {
            let i = vars.iter().position(|x| x == v).expect("hash over vars");
            row[i / 64] ^= 1 << (i % 64);
        }
        for (lead, b) in &basis {
            if row[lead / 64] >> (lead % 64) & 1 == 1 {
                for (x, y) in row.iter_mut().zip(b) {
                    *x ^= y;
                }
            }
        }
        let Some(lead) = (0..vars.len()).find(|&i| row[i / 64] >> (i % 64) & 1 == 1) else {
            continue;
        };
        for (l, b) in basis.iter_mut() {
            if b[lead / 64] >> (lead % 64) & 1 == 1 {
                for (x, y) in b.iter_mut().zip(&row) {
                    *x ^= y;
                }
            }
            debug_assert!(row[*l / 64] >> (*l % 64) & 1 == 0);
        }
        basis.push((lead, row));
        out.push(h);
    }
    out
}

/// Galloping down from `cap`, then bisecting between the last unsatisfiable
/// and first satisfiable level.
fn search_down<T>(
    cap: u32,
    mut attempt: impl FnMut(u32) -> Result<Option<T>, MaxQueryError>,
) -> Result<(u32, T), MaxQueryError> {
    if let Some(m) = attempt(cap)? {
        return Ok((cap, m));
    }
    let mut unsat = cap;
    let mut step = 1;
    let (mut sat, mut model) = loop {
        if unsat == 0 {
            return Err(MaxQueryError::Unsat);
        }
        let probe = unsat.saturating_sub(step);
        match attempt(probe)? {
            Some(m) => break (probe, m),
            None => {
                unsat = probe;
                step *= 2;
            }
        }
    };
    while unsat - sat > 1 {
        let mid = sat + (unsat - sat) / 2;
        match attempt(mid)? {
            Some(m) => {
                sat = mid;
                model = m;
            }
            None => unsat = mid,
        }
    }
    Ok((sat, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionalities::{and_gate, mean_average, millionaires};
    use crate::sat::SolveStatus;

    fn b(v: u32) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn cap_from_remaining() {
        assert_eq!(k_cap(&b(16), 2, 4), 3);
        assert_eq!(k_cap(&b(17), 2, 4), 3);
        assert_eq!(k_cap(&b(2), 2, 1), 0);
        assert_eq!(k_cap(&b(1), 2, 4), 0);
        assert_eq!(k_cap(&b(1 << 20), 1, 8), 8);
    }

    #[test]
    fn hashes_are_independent() {
        use rand::SeedableRng;
        let vars: Vec<Var> = (1..=6).map(Var::new).collect();
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let hs = independent_hashes(&vars, 6, &mut r);
            // full rank: exactly one solution
            let mut f = CnfFormula::new(6);
            for h in &hs {
                h.add_to(&mut f);
            }
            let n = (0u32..64)
                .filter(|m| f.is_satisfied_by(&(0..6).map(|i| m >> i & 1 == 1).collect::<Vec<_>>()))
                .count();
            assert_eq!(n, 1);
        }
    }

    #[test]
    fn search_down_finds_frontier() {
        for frontier in 0..=9u32 {
            let mut calls = Vec::new();
            let (k, _) = search_down(9, |k| {
                calls.push(k);
                Ok((k <= frontier).then_some(()))
            })
            .unwrap();
            assert_eq!(k, frontier);
            assert!(calls.len() <= 8, "{calls:?}");
        }
        assert!(matches!(search_down(3, |_| Ok(None::<()>)), Err(MaxQueryError::Unsat)));
    }

    #[test]
    fn mean_copies_conjunctions() {
        let f = mean_average(2).unwrap();
        let h = History::new();
        let cfg = SolverConfig::default();
        let ok = instantiate_copies(f.circuit(), &h, &[b(1), b(2)], 1, false).unwrap();
        assert_eq!(solve(&ok.formula, &[], &cfg).unwrap().status, SolveStatus::Sat);
        let bad = instantiate_copies(f.circuit(), &h, &[b(0), b(3)], 1, false).unwrap();
        assert_eq!(solve(&bad.formula, &[], &cfg).unwrap().status, SolveStatus::Unsat);
    }

    #[test]
    fn duplicates_rejected() {
        let f = and_gate().unwrap();
        let r = instantiate_copies(f.circuit(), &History::new(), &[b(1), b(1)], 1, false);
        assert!(matches!(r, Err(MaxQueryError::Duplicate(_))));
        let r = instantiate_copies(f.circuit(), &History::new(), &[], 1, false);
        assert!(matches!(r, Err(MaxQueryError::Empty)));
    }

    #[test]
    fn and_gate_query() {
        let f = and_gate().unwrap();
        let q = maximize_query(
            f.circuit(),
            &History::new(),
            &[b(0), b(1)],
            0,
            &SynthesisParams::default(),
        )
        .unwrap();
        assert_eq!(q.chosen_value, b(1));
        assert_eq!(q.k_max, 0);
    }

    #[test]
    fn parallel_and_sequential_agree_on_k() {
        let f = millionaires(6).unwrap();
        let mut p = SynthesisParams::default();
        for seed in 0..5 {
            p.solver.seed = seed;
            p.workers = 1;
            let a = maximize_query(f.circuit(), &History::new(), &[b(0), b(1)], 5, &p).unwrap();
            p.workers = 8;
            let c = maximize_query(f.circuit(), &History::new(), &[b(0), b(1)], 5, &p).unwrap();
            assert_eq!(a.k_max, c.k_max);
        }
    }
}
