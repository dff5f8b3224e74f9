//! The adaptive attack: repeatedly select outcomes, synthesize a query, ask
//! the oracle, and fold the answer back into the candidate formula.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::circuit::Circuit;
use crate::cnf::{bits_to_biguint, project, tseitin_compile, write_dimacs, Bit, CnfFormula, Encoder, Var};
use crate::counting::{count_approx, count_exact, ApproxParams, CountError, CountEstimate, MAX_EXACT_PROJECTION};
use crate::functionalities::Functionality;
use crate::history::{exclude_one, History};
use crate::maxquery::{
    k_cap, maximize_query, MaxQueryError, SynthesisParams, DEFAULT_REPLICAS, DEFAULT_RESCORE, DEFAULT_TRIALS,
};
use crate::oracle::{Oracle, OracleError};
use crate::outcomes::{derive_outcomes, select_outcomes, OutcomeError, OutcomeSet, SelectParams, DEFAULT_OUTCOME_CAP};
use crate::rng;
use crate::sat::{open_session, solve, SatError, SolverConfig};

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("history is contradictory: no target is consistent with the oracle's answers")]
    Inconsistent,
    #[error("oracle returned {result}, which the circuit cannot produce")]
    BadResult { result: BigUint },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Outcome(#[from] OutcomeError),
    #[error(transparent)]
    Query(#[from] MaxQueryError),
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Running,
    Unique,
    BruteForce,
    Exhausted,
    Aborted,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Running => "RUNNING",
            Status::Unique => "UNIQUE",
            Status::BruteForce => "BRUTE_FORCE",
            Status::Exhausted => "EXHAUSTED",
            Status::Aborted => "ABORTED",
        })
    }
}

/// What to do once no two outcomes can be separated by a synthesized query.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BruteForcePolicy {
    /// Defer to the caller's hook; stop if there is none.
    Ask,
    /// Keep going with any query that still splits the candidates.
    Continue,
    Stop,
}

impl FromStr for BruteForcePolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ask" => Ok(BruteForcePolicy::Ask),
            "continue" => Ok(BruteForcePolicy::Continue),
            "stop" => Ok(BruteForcePolicy::Stop),
            _ => Err(format!("expected ask, continue or stop, got {s:?}")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AttackConfig {
    pub solver: SolverConfig,
    pub approx: ApproxParams,
    pub workers: usize,
    pub replicas: usize,
    /// Independent hash draws per synthesis level.
    pub trials: usize,
    /// Candidate queries compared by estimated smallest class; 1 disables.
    pub rescore: usize,
    pub outcome_cap: usize,
    /// Defaults to four times the target width.
    pub max_iters: Option<usize>,
    pub on_bruteforce: BruteForcePolicy,
    /// Count survivors exactly instead of approximately.
    pub exact_trace: bool,
    /// Record zero elapsed times so traces depend only on the seed.
    pub deterministic: bool,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            solver: SolverConfig::default(),
            approx: ApproxParams::default(),
            workers: 1,
            replicas: DEFAULT_REPLICAS,
            trials: DEFAULT_TRIALS,
            rescore: DEFAULT_RESCORE,
            outcome_cap: DEFAULT_OUTCOME_CAP,
            max_iters: None,
            on_bruteforce: BruteForcePolicy::Stop,
            exact_trace: false,
            deterministic: false,
        }
    }
}

impl AttackConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.solver.seed = seed;
        self
    }

    pub fn budget(&self, target_width: u32) -> usize {
        self.max_iters.unwrap_or(4 * target_width as usize)
    }

    pub fn validate(&self, target_width: u32) -> Result<(), AttackError> {
        self.approx.validate()?;
        self.solver.backend.validate()?;
        if self.workers == 0 {
            return Err(AttackError::Config("workers must be at least 1".into()));
        }
        if self.replicas == 0 {
            return Err(AttackError::Config("replicas must be at least 1".into()));
        }
        if self.rescore == 0 || self.trials == 0 {
            return Err(AttackError::Config("rescore and trials must be at least 1".into()));
        }
        if self.outcome_cap < 2 {
            return Err(AttackError::Config("outcome cap must be at least 2".into()));
        }
        if self.exact_trace && target_width as usize > MAX_EXACT_PROJECTION {
            return Err(AttackError::Config(format!(
                "exact trace needs target width <= {MAX_EXACT_PROJECTION}, got {target_width}"
            )));
        }
        Ok(())
    }

    fn solver_for(&self, tag: &str, iter: usize) -> SolverConfig {
        self.solver
            .with_seed(rng::derive_seed(self.solver.seed, tag, iter as u64))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryRecord {
    pub iter: usize,
    #[serde(serialize_with = "ser_big")]
    pub chosen: BigUint,
    #[serde(serialize_with = "ser_big")]
    pub result: BigUint,
    pub k_max: u32,
    pub remaining: CountEstimate,
    #[serde(serialize_with = "ser_big_list")]
    pub selected: Vec<BigUint>,
    pub elapsed_ms: u64,
}

fn ser_big<S: serde::Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn ser_big_list<S: serde::Serializer>(v: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}

#[derive(Clone, Debug)]
pub struct AttackState {
    pub name: String,
    pub circuit: Circuit,
    pub constraints: History,
    pub history: Vec<QueryRecord>,
    pub status: Status,
    pub witness: Option<BigUint>,
    pub outcomes: Option<OutcomeSet>,
    /// The satisfiable synthesis instance behind each query.
    pub instances: Vec<CnfFormula>,
    pub notices: Vec<String>,
    pub error: Option<String>,
}

impl AttackState {
    pub fn new(func: &Functionality) -> Self {
        AttackState {
            name: func.name.clone(),
            circuit: func.circuit().clone(),
            constraints: History::new(),
            history: Vec::new(),
            status: Status::Running,
            witness: None,
            outcomes: None,
            instances: Vec::new(),
            notices: Vec::new(),
            error: None,
        }
    }

    pub fn target_width(&self) -> u32 {
        self.circuit.target_width().bits()
    }

    /// Formula over target bits `1..=target_width` admitting exactly the
    /// surviving candidates.
    pub fn candidates(&self) -> (CnfFormula, Vec<Var>) {
        self.constraints.candidates(&self.circuit)
    }

    fn abort(&mut self, e: AttackError) {
        log::error!("attack aborted: {e}");
        self.status = Status::Aborted;
        self.error = Some(e.to_string());
    }
}

/// Solves for one candidate, blocks it and solves again. `Ok((true, w))`
/// means `w` is the only target left.
pub fn has_unique_target(
    circuit: &Circuit,
    history: &History,
    cfg: &SolverConfig,
) -> Result<(bool, Option<BigUint>), AttackError> {
    let (f, target) = history.candidates(circuit);
    let mut s = open_session(&f, cfg)?;
    let first = s.solve(&[])?.known()?;
    let Some(model) = first.model else {
        return Err(AttackError::Inconsistent);
    };
    let bits = project(&model, &target);
    let block: Vec<_> = target.iter().zip(&bits).map(|(v, &b)| v.lit(!b)).collect();
    s.add_clause(&block);
    if s.solve(&[])?.known()?.is_sat() {
        Ok((false, None))
    } else {
        Ok((true, Some(bits_to_biguint(&bits))))
    }
}

/// A chosen input on which two surviving candidates disagree, if any.
pub fn distinguishing_query(
    circuit: &Circuit,
    history: &History,
    cfg: &SolverConfig,
) -> Result<Option<(BigUint, CnfFormula)>, AttackError> {
    let cw = circuit.chosen_width().bits();
    let tw = circuit.target_width().bits();
    let mut f = CnfFormula::new(cw);
    let chosen: Vec<Var> = (1..=cw).map(Var::new).collect();
    f.bitmap.chosen = chosen.clone();
    let mut outs = Vec::new();
    for _ in 0..2 {
        let t = f.new_vars(tw);
        history.constrain(circuit, &mut f, &t);
        f.bitmap.target.extend(&t);
        let mut enc = Encoder::new(&mut f);
        outs.push(enc.encode_circuit(circuit, &Bit::vars(&chosen), &Bit::vars(&t)));
    }
    let mut enc = Encoder::new(&mut f);
    let same = enc.eq(&outs[0], &outs[1]);
    enc.assert_true(!same);
    let r = solve(&f, &[], cfg)?.known()?;
    Ok(r.model.map(|m| (bits_to_biguint(&project(&m, &chosen)), f)))
}

fn count_candidates(
    circuit: &Circuit,
    history: &History,
    cfg: &AttackConfig,
    solver: &SolverConfig,
) -> Result<CountEstimate, AttackError> {
    let (f, t) = history.candidates(circuit);
    Ok(if cfg.exact_trace {
        count_exact(&f, &t, solver)?
    } else {
        count_approx(&f, &t, cfg.approx, solver)?
    })
}

pub fn run_attack(
    func: &Functionality,
    oracle: &mut dyn Oracle,
    cfg: &AttackConfig,
) -> Result<AttackState, AttackError> {
    run_attack_with(func, oracle, cfg, &mut |_| false)
}

/// As [`run_attack`]; `ask` decides whether to continue when the policy is
/// [`BruteForcePolicy::Ask`] and selection has degenerated.
pub fn run_attack_with(
    func: &Functionality,
    oracle: &mut dyn Oracle,
    cfg: &AttackConfig,
    ask: &mut dyn FnMut(&AttackState) -> bool,
) -> Result<AttackState, AttackError> {
    let tw = func.target_width();
    cfg.validate(tw)?;
    let mut state = AttackState::new(func);
    if let Err(e) = attack_loop(&mut state, oracle, cfg, ask) {
        state.abort(e);
    }
    Ok(state)
}

fn attack_loop(
    state: &mut AttackState,
    oracle: &mut dyn Oracle,
    cfg: &AttackConfig,
    ask: &mut dyn FnMut(&AttackState) -> bool,
) -> Result<(), AttackError> {
    let tw = state.target_width();
    let ow = state.circuit.output_width().bits();
    let budget = cfg.budget(tw);
    let mut outcomes = derive_outcomes(&state.circuit, cfg.outcome_cap, &cfg.solver_for("derive", 0))?;
    let mut remaining = CountEstimate::exact(BigUint::one() << tw);
    for iter in 1.. {
        let (unique, witness) = has_unique_target(&state.circuit, &state.constraints, &cfg.solver_for("unique", iter))?;
        if unique {
            state.status = Status::Unique;
            state.witness = witness;
            break;
        }
        if iter > budget {
            state.status = Status::Exhausted;
            break;
        }
        let started = Instant::now();
        let selection = select_outcomes(
            &state.circuit,
            &state.constraints,
            &mut outcomes,
            &SelectParams {
                solver: cfg.solver_for("select", iter),
                approx: cfg.approx,
                workers: cfg.workers,
            },
        )?;
        state.outcomes = Some(outcomes.clone());
        log::debug!("iter {iter}: selection took {:?}", started.elapsed());
        let (chosen, k_max, selected, instance) = if selection.selected.len() <= 1 {
            let notice = format!(
                "iteration {iter}: no query separates the remaining candidates by outcome class; \
                 further progress is brute force"
            );
            log::warn!("{notice}");
            state.notices.push(notice);
            let go_on = match cfg.on_bruteforce {
                BruteForcePolicy::Stop => false,
                BruteForcePolicy::Continue => true,
                BruteForcePolicy::Ask => ask(state),
            };
            if !go_on {
                state.status = Status::BruteForce;
                break;
            }
            match distinguishing_query(&state.circuit, &state.constraints, &cfg.solver_for("distinguish", iter))? {
                Some((c, f)) => (c, 0, Vec::new(), f),
                None => {
                    state.notices.push(format!(
                        "iteration {iter}: surviving candidates are indistinguishable by any query"
                    ));
                    state.status = Status::BruteForce;
                    break;
                }
            }
        } else {
            let values: Vec<BigUint> = selection.selected.iter().map(|o| o.value.clone()).collect();
            let cap = k_cap(&remaining.upper_bound(), values.len(), tw);
            let q = maximize_query(
                &state.circuit,
                &state.constraints,
                &values,
                cap,
                &SynthesisParams {
                    solver: cfg.solver_for("maximize", iter),
                    replicas: cfg.replicas,
                    workers: cfg.workers,
                    trials: cfg.trials,
                    rescore: cfg.rescore,
                    approx: cfg.approx,
                },
            )?;
            let mut sorted = values;
            sorted.sort();
            (q.chosen_value, q.k_max, sorted, q.instance)
        };

        log::debug!("iter {iter}: synthesis done at {:?}", started.elapsed());
        let result = oracle.query(&chosen)?;
        if result.bits() > ow as u64 || (outcomes.complete && !outcomes.outcomes.iter().any(|o| o.value == result)) {
            return Err(AttackError::BadResult { result });
        }
        state.constraints.push(chosen.clone(), result.clone());
        remaining = count_candidates(
            &state.circuit,
            &state.constraints,
            cfg,
            &cfg.solver_for("remaining", iter),
        )?;
        if remaining.count.is_zero() {
            return Err(AttackError::Inconsistent);
        }
        log::debug!("iter {iter}: recount done at {:?}", started.elapsed());
        let elapsed_ms = if cfg.deterministic {
            0
        } else {
            started.elapsed().as_millis() as u64
        };
        log::info!(
            "iter {iter}: chosen={chosen} result={result} k_max={k_max} remaining={}",
            remaining.count
        );
        state.history.push(QueryRecord {
            iter,
            chosen,
            result,
            k_max,
            remaining: remaining.clone(),
            selected,
            elapsed_ms,
        });
        state.instances.push(instance);
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Leakage {
    #[serde(serialize_with = "ser_big")]
    pub outcome: BigUint,
    /// Candidates ruled out if the oracle answers `outcome`.
    pub eliminated: CountEstimate,
}

/// For each outcome, how many current candidates the answer `outcome` to
/// query `chosen` would rule out.
pub fn estimate_leakage(
    circuit: &Circuit,
    history: &History,
    chosen: &BigUint,
    outcomes: &[BigUint],
    approx: ApproxParams,
    cfg: &SolverConfig,
) -> Result<Vec<Leakage>, AttackError> {
    let cw = circuit.chosen_width().bits();
    outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let (mut f, t) = history.candidates(circuit);
            exclude_one(circuit, &mut f, &Bit::constants(chosen, cw), &Bit::vars(&t), o);
            let c = count_approx(
                &f,
                &t,
                approx,
                &cfg.with_seed(rng::derive_seed(cfg.seed, "leakage", i as u64)),
            )?;
            Ok(Leakage {
                outcome: o.clone(),
                eliminated: c,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct LeakageReport {
    pub outcomes: OutcomeSet,
    #[serde(serialize_with = "ser_big_list")]
    pub selected: Vec<BigUint>,
    #[serde(serialize_with = "ser_big_list")]
    pub dropped: Vec<BigUint>,
    #[serde(serialize_with = "ser_opt_big")]
    pub query: Option<BigUint>,
    pub k_max: Option<u32>,
    pub leakage: Vec<Leakage>,
}

fn ser_opt_big<S: serde::Serializer>(v: &Option<BigUint>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_some(&x.to_string()),
        None => s.serialize_none(),
    }
}

/// One iteration's worth of analysis without an oracle: what the first
/// query would be and what each answer would reveal.
pub fn first_query_leakage(func: &Functionality, cfg: &AttackConfig) -> Result<LeakageReport, AttackError> {
    let tw = func.target_width();
    cfg.validate(tw)?;
    let circuit = func.circuit();
    let history = History::new();
    let mut outcomes = derive_outcomes(circuit, cfg.outcome_cap, &cfg.solver_for("derive", 0))?;
    let sel = select_outcomes(
        circuit,
        &history,
        &mut outcomes,
        &SelectParams {
            solver: cfg.solver_for("select", 1),
            approx: cfg.approx,
            workers: cfg.workers,
        },
    )?;
    let selected: Vec<BigUint> = sel.selected.iter().map(|o| o.value.clone()).collect();
    let dropped: Vec<BigUint> = sel.dropped.iter().map(|o| o.value.clone()).collect();
    let mut report = LeakageReport {
        outcomes,
        selected: selected.clone(),
        dropped,
        query: None,
        k_max: None,
        leakage: Vec::new(),
    };
    if selected.len() <= 1 {
        return Ok(report);
    }
    let cap = k_cap(&(BigUint::one() << tw), selected.len(), tw);
    let q = maximize_query(
        circuit,
        &history,
        &selected,
        cap,
        &SynthesisParams {
            solver: cfg.solver_for("maximize", 1),
            replicas: cfg.replicas,
            workers: cfg.workers,
            trials: cfg.trials,
            rescore: cfg.rescore,
            approx: cfg.approx,
        },
    )?;
    report.leakage = estimate_leakage(circuit, &history, &q.chosen_value, &selected, cfg.approx, &cfg.solver)?;
    report.query = Some(q.chosen_value);
    report.k_max = Some(q.k_max);
    Ok(report)
}

pub const TRACE_HEADER: &str = "iter,chosen,result,k_max,remaining,selected,elapsed_ms";

pub fn trace_csv(state: &AttackState) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in &state.history {
        let sel: Vec<String> = r.selected.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.iter,
            r.chosen,
            r.result,
            r.k_max,
            r.remaining.count,
            sel.join(";"),
            r.elapsed_ms
        ));
    }
    out
}

#[derive(Serialize)]
struct TraceJson<'a> {
    name: &'a str,
    target_width: u32,
    status: Status,
    #[serde(serialize_with = "ser_opt_big")]
    witness: &'a Option<BigUint>,
    rows: &'a [QueryRecord],
}

pub fn trace_json(state: &AttackState) -> String {
    let doc = TraceJson {
        name: &state.name,
        target_width: state.target_width(),
        status: state.status,
        witness: &state.witness,
        rows: &state.history,
    };
    serde_json::to_string_pretty(&doc).expect("trace serializes") + "\n"
}

/// Two columns, iteration and surviving candidates, starting from the full
/// domain at iteration 0.
pub fn plot_data(state: &AttackState) -> String {
    let mut out = String::from("# iter remaining\n");
    out.push_str(&format!("0 {}\n", BigUint::one() << state.target_width()));
    for r in &state.history {
        out.push_str(&format!("{} {}\n", r.iter, r.remaining.count));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub name: String,
    pub width: u32,
    pub iter: usize,
    pub vars: u32,
    pub clauses: usize,
    pub xors: usize,
    /// Clauses in the plain circuit encoding, for size comparisons.
    pub base_clauses: usize,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes each iteration's synthesis instance as `<name>_<width>_<iter>.cnf`
/// plus a JSON manifest; returns the instance paths.
pub fn export_benchmarks(state: &AttackState, dir: &Path) -> Result<Vec<PathBuf>, AttackError> {
    std::fs::create_dir_all(dir)?;
    let width = state.target_width();
    let base = tseitin_compile(&state.circuit).map_err(|e| AttackError::Config(e.to_string()))?;
    let base_clauses = base.clauses.len() + base.xors.len();
    let mut files = Vec::new();
    let mut manifest = Vec::new();
    for (i, f) in state.instances.iter().enumerate() {
        let iter = i + 1;
        let file = format!("{}_{}_{}.cnf", state.name, width, iter);
        let path = dir.join(&file);
        std::fs::write(&path, write_dimacs(f))?;
        manifest.push(ManifestEntry {
            file,
            name: state.name.clone(),
            width,
            iter,
            vars: f.num_vars,
            clauses: f.clauses.len(),
            xors: f.xors.len(),
            base_clauses,
        });
        files.push(path);
    }
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(dir.join(MANIFEST_FILE), json + "\n")?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionalities::{and_gate, constant, mean_average, millionaires};
    use crate::oracle::LocalOracle;

    fn b(v: u32) -> BigUint {
        BigUint::from(v)
    }

    fn run(func: &Functionality, target: u32, cfg: &AttackConfig) -> AttackState {
        let mut o = LocalOracle::new(func.clone(), b(target));
        run_attack(func, &mut o, cfg).unwrap()
    }

    #[test]
    fn and_gate_one_query() {
        let f = and_gate().unwrap();
        for t in 0..2 {
            let s = run(&f, t, &AttackConfig::default());
            assert_eq!(s.status, Status::Unique);
            assert_eq!(s.history.len(), 1);
            assert_eq!(s.history[0].chosen, b(1));
            assert_eq!(s.witness, Some(b(t)));
        }
    }

    #[test]
    fn uniqueness_checks() {
        let f = millionaires(8).unwrap();
        let cfg = SolverConfig::default();
        let (u, _) = has_unique_target(f.circuit(), &History::new(), &cfg).unwrap();
        assert!(!u);
        let mut h = History::new();
        h.push(b(43), b(1));
        h.push(b(42), b(0));
        assert_eq!(has_unique_target(f.circuit(), &h, &cfg).unwrap(), (true, Some(b(42))));
        let mut two = History::new();
        two.push(b(5), b(1));
        two.push(b(3), b(0));
        assert!(!has_unique_target(f.circuit(), &two, &cfg).unwrap().0);
        two.push(b(2), b(1));
        assert!(matches!(
            has_unique_target(f.circuit(), &two, &cfg),
            Err(AttackError::Inconsistent)
        ));
    }

    #[test]
    fn leakage_of_halving_query() {
        let f = millionaires(8).unwrap();
        let l = estimate_leakage(
            f.circuit(),
            &History::new(),
            &b(128),
            &[b(0), b(1)],
            ApproxParams::default(),
            &SolverConfig::default(),
        )
        .unwrap();
        for x in &l {
            // approximate, but well inside the tolerance band
            let c = x.eliminated.as_f64();
            assert!((128.0 / 1.8..=128.0 * 1.8).contains(&c), "{c}");
        }
        let m = mean_average(2).unwrap();
        let l = estimate_leakage(
            m.circuit(),
            &History::new(),
            &b(2),
            &[b(1), b(2)],
            ApproxParams::default(),
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(l[0].eliminated.count, b(2));
        assert_eq!(l[1].eliminated.count, b(2));
        let k = constant(2, 1).unwrap();
        let l = estimate_leakage(
            k.circuit(),
            &History::new(),
            &b(0),
            &[b(1)],
            ApproxParams::default(),
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(l[0].eliminated.count, b(0));
    }

    #[test]
    fn constant_stops_with_brute_force() {
        let f = constant(3, 2).unwrap();
        let s = run(&f, 5, &AttackConfig::default());
        assert_eq!(s.status, Status::BruteForce);
        assert!(s.history.is_empty());
        assert!(!s.notices.is_empty());
        let cont = AttackConfig {
            on_bruteforce: BruteForcePolicy::Continue,
            ..Default::default()
        };
        assert_eq!(run(&f, 5, &cont).status, Status::BruteForce);
    }

    #[test]
    fn budget_exhausts() {
        let f = millionaires(6).unwrap();
        let cfg = AttackConfig {
            max_iters: Some(2),
            ..Default::default()
        };
        let s = run(&f, 17, &cfg);
        assert_eq!(s.status, Status::Exhausted);
        assert_eq!(s.history.len(), 2);
    }

    struct Liar;
    impl Oracle for Liar {
        fn query(&mut self, _: &BigUint) -> Result<BigUint, OracleError> {
            Ok(b(7))
        }
    }

    #[test]
    fn bad_oracle_aborts() {
        let f = millionaires(4).unwrap();
        let s = run_attack(&f, &mut Liar, &AttackConfig::default()).unwrap();
        assert_eq!(s.status, Status::Aborted);
        assert!(s.error.is_some());
    }

    #[test]
    fn trace_formats() {
        let f = millionaires(4).unwrap();
        let cfg = AttackConfig {
            deterministic: true,
            exact_trace: true,
            ..Default::default()
        };
        let s = run(&f, 9, &cfg);
        let csv = trace_csv(&s);
        assert!(csv.starts_with(TRACE_HEADER));
        assert_eq!(csv.lines().count(), s.history.len() + 1);
        let json: serde_json::Value = serde_json::from_str(&trace_json(&s)).unwrap();
        assert_eq!(json["status"], "UNIQUE");
        assert_eq!(json["rows"].as_array().unwrap().len(), s.history.len());
        let dat = plot_data(&s);
        assert!(dat.lines().nth(1).unwrap() == "0 16");
    }
}
