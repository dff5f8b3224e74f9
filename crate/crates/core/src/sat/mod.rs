//! SAT backends: the built-in CDCL solver and a subprocess adapter for any
//! solver reading extended DIMACS.

pub mod cdcl;
mod external;
pub mod gauss;

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::cnf::{project, CnfFormula, Lit, Var};

pub use external::ExternalSession;

/// Placeholder substituted with the CNF file path in external commands.
pub const CNF_PLACEHOLDER: &str = "{cnf_path}";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SatError {
    #[error("external solver template must contain {CNF_PLACEHOLDER}: {0:?}")]
    Template(String),
    #[error("failed to launch `{cmd}`: {reason}")]
    Launch { cmd: String, reason: String },
    #[error("unreadable solver output: {0}")]
    Output(String),
    #[error("solver returned a model violating the formula ({0})")]
    BadModel(String),
    #[error("variable {var} out of range (formula has {num_vars})")]
    VarRange { var: u32, num_vars: u32 },
    #[error("solver timed out")]
    Timeout,
    #[error("io: {0}")]
    Io(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Backend {
    Builtin,
    /// argv template; one element contains [`CNF_PLACEHOLDER`].
    External(Vec<String>),
}

impl Backend {
    /// Parses `builtin` or `ext:<command line>`.
    pub fn parse(spec: &str) -> Result<Backend, SatError> {
        if spec == "builtin" {
            return Ok(Backend::Builtin);
        }
        let Some(cmd) = spec.strip_prefix("ext:") else {
            return Err(SatError::Template(spec.to_string()));
        };
        let argv: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
        let b = Backend::External(argv);
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), SatError> {
        match self {
            Backend::Builtin => Ok(()),
            Backend::External(argv) => {
                if argv.is_empty() || !argv.iter().any(|a| a.contains(CNF_PLACEHOLDER)) {
                    Err(SatError::Template(argv.join(" ")))
                } else {
                    Ok(())
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub backend: Backend,
    pub seed: u64,
    pub timeout: Option<Duration>,
    pub xor_native: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            backend: Backend::Builtin,
            seed: 0,
            timeout: None,
            xor_native: true,
        }
    }
}

impl SolverConfig {
    pub fn with_seed(&self, seed: u64) -> SolverConfig {
        SolverConfig { seed, ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Present iff `status` is `Sat`; indexed by `var - 1`.
    pub model: Option<Vec<bool>>,
}

impl SolveResult {
    pub fn unsat() -> Self {
        SolveResult {
            status: SolveStatus::Unsat,
            model: None,
        }
    }
    pub fn unknown() -> Self {
        SolveResult {
            status: SolveStatus::Unknown,
            model: None,
        }
    }
    pub fn is_sat(&self) -> bool {
        self.status == SolveStatus::Sat
    }
    /// Turns `Unknown` into [`SatError::Timeout`].
    pub fn known(self) -> Result<SolveResult, SatError> {
        match self.status {
            SolveStatus::Unknown => Err(SatError::Timeout),
            _ => Ok(self),
        }
    }
}

/// An incremental solving context. Clauses only accumulate; use activation
/// literals and assumptions for anything that must be retracted.
pub trait Session: Send {
    fn num_vars(&self) -> u32;
    fn new_var(&mut self) -> Var;
    fn add_clause(&mut self, lits: &[Lit]);
    fn add_xor(&mut self, vars: &[Var], rhs: bool);
    fn solve(&mut self, assumptions: &[Lit]) -> Result<SolveResult, SatError>;
}

fn check_range(lits: &[Lit], num_vars: u32) -> Result<(), SatError> {
    match lits.iter().find(|l| l.var().index() > num_vars) {
        Some(l) => Err(SatError::VarRange {
            var: l.var().index(),
            num_vars,
        }),
        None => Ok(()),
    }
}

/// Re-checks a model against every clause and XOR before it leaves a backend.
pub fn check_model(f: &CnfFormula, model: &[bool]) -> Result<(), SatError> {
    if model.len() < f.num_vars as usize {
        return Err(SatError::BadModel(format!(
            "{} values for {} variables",
            model.len(),
            f.num_vars
        )));
    }
    if let Some(c) = f.clauses.iter().find(|c| !c.iter().any(|l| l.eval(model))) {
        return Err(SatError::BadModel(format!("clause {c:?} falsified")));
    }
    if let Some(x) = f.xors.iter().find(|x| !x.is_satisfied(model)) {
        return Err(SatError::BadModel(format!("xor over {:?} violated", x.vars)));
    }
    Ok(())
}

struct BuiltinSession {
    solver: cdcl::Solver,
    shadow: CnfFormula,
    timeout: Option<Duration>,
    xor_native: bool,
}

impl Session for BuiltinSession {
    fn num_vars(&self) -> u32 {
        self.shadow.num_vars
    }

    fn new_var(&mut self) -> Var {
        let v = self.shadow.new_var();
        let w = self.solver.new_var();
        debug_assert_eq!(v, w);
        v
    }

    fn add_clause(&mut self, lits: &[Lit]) {
        let max = lits.iter().map(|l| l.var().index()).max().unwrap_or(0);
        while self.shadow.num_vars < max {
            self.new_var();
        }
        self.shadow.clauses.push(lits.to_vec());
        self.solver.add_clause(lits);
    }

    fn add_xor(&mut self, vars: &[Var], rhs: bool) {
        let max = vars.iter().map(|v| v.index()).max().unwrap_or(0);
        while self.shadow.num_vars < max {
            self.new_var();
        }
        if self.xor_native {
            self.shadow.add_xor(vars.to_vec(), rhs);
            self.solver.add_xor(vars, rhs);
            return;
        }
        let mut tmp = CnfFormula::new(self.shadow.num_vars);
        tmp.add_xor(vars.to_vec(), rhs);
        let blasted = tmp.blast_xors();
        while self.shadow.num_vars < blasted.num_vars {
            self.new_var();
        }
        for c in &blasted.clauses {
            self.add_clause(c);
        }
    }

    fn solve(&mut self, assumptions: &[Lit]) -> Result<SolveResult, SatError> {
        check_range(assumptions, self.shadow.num_vars)?;
        let deadline = self.timeout.map(|t| Instant::now() + t);
        match self.solver.solve(assumptions, deadline) {
            cdcl::Status::Unsat => Ok(SolveResult::unsat()),
            cdcl::Status::Unknown => Ok(SolveResult::unknown()),
            cdcl::Status::Sat => {
                let model = self.solver.model()[..self.shadow.num_vars as usize].to_vec();
                check_model(&self.shadow, &model)?;
                if let Some(l) = assumptions.iter().find(|l| !l.eval(&model)) {
                    return Err(SatError::BadModel(format!("assumption {l} violated")));
                }
                Ok(SolveResult {
                    status: SolveStatus::Sat,
                    model: Some(model),
                })
            }
        }
    }
}

/// Opens an incremental session over `formula`.
pub fn open_session(formula: &CnfFormula, cfg: &SolverConfig) -> Result<Box<dyn Session>, SatError> {
    cfg.backend.validate()?;
    match &cfg.backend {
        Backend::Builtin => {
            let loaded = if cfg.xor_native {
                formula.clone()
            } else {
                formula.blast_xors()
            };
            Ok(Box::new(BuiltinSession {
                solver: cdcl::Solver::from_formula(&loaded, cfg.seed),
                shadow: loaded,
                timeout: cfg.timeout,
                xor_native: cfg.xor_native,
            }))
        }
        Backend::External(argv) => Ok(Box::new(ExternalSession::new(
            formula.clone(),
            argv.clone(),
            cfg.timeout,
            cfg.xor_native,
        ))),
    }
}

/// One-shot solve. Models are truncated to the formula's own variables.
pub fn solve(formula: &CnfFormula, assumptions: &[Lit], cfg: &SolverConfig) -> Result<SolveResult, SatError> {
    let mut s = open_session(formula, cfg)?;
    let mut r = s.solve(assumptions)?;
    if let Some(m) = r.model.as_mut() {
        m.truncate(formula.num_vars as usize);
    }
    Ok(r)
}

/// Up to `limit` distinct assignments to `projection`, found by solving and
/// blocking each projected model in turn.
pub fn enumerate_models(
    formula: &CnfFormula,
    projection: &[Var],
    limit: usize,
    cfg: &SolverConfig,
) -> Result<Vec<Vec<bool>>, SatError> {
    check_range(
        &projection.iter().map(|v| v.pos()).collect::<Vec<_>>(),
        formula.num_vars,
    )?;
    let mut s = open_session(formula, cfg)?;
    enumerate_in(s.as_mut(), projection, limit, &[])
}

/// Blocking-clause enumeration inside an existing session. When `guard` is
/// given, each blocking clause is `guard[0] ∨ ...` so it can be switched off
/// afterwards; assumptions must then include `¬guard[0]`.
pub fn enumerate_in(
    s: &mut dyn Session,
    projection: &[Var],
    limit: usize,
    assumptions: &[Lit],
) -> Result<Vec<Vec<bool>>, SatError> {
    let guard = assumptions.first().map(|&l| !l);
    let mut out = Vec::new();
    while out.len() < limit {
        let r = s.solve(assumptions)?.known()?;
        let Some(model) = r.model else { break };
        let proj = project(&model, projection);
        if projection.is_empty() {
            out.push(proj);
            break;
        }
        let mut block: Vec<Lit> = projection.iter().zip(&proj).map(|(v, &b)| v.lit(!b)).collect();
        if let Some(g) = guard {
            block.push(g);
        }
        s.add_clause(&block);
        out.push(proj);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: u32) -> Var {
        Var::new(i)
    }

    #[test]
    fn empty_formula_is_sat() {
        let r = solve(&CnfFormula::new(0), &[], &SolverConfig::default()).unwrap();
        assert!(r.is_sat());
    }

    #[test]
    fn contradiction_is_unsat() {
        let mut f = CnfFormula::new(1);
        f.add_clause(vec![v(1).pos()]);
        f.add_clause(vec![v(1).neg()]);
        let r = solve(&f, &[], &SolverConfig::default()).unwrap();
        assert_eq!(r, SolveResult::unsat());
    }

    #[test]
    fn enumeration_counts() {
        let f = CnfFormula::new(2);
        let all = enumerate_models(&f, &[v(1), v(2)], 10, &SolverConfig::default()).unwrap();
        assert_eq!(all.len(), 4);

        let mut g = CnfFormula::new(2);
        g.add_clause(vec![v(1).pos(), v(2).pos()]);
        let some = enumerate_models(&g, &[v(1), v(2)], 10, &SolverConfig::default()).unwrap();
        assert_eq!(some.len(), 3);
        let capped = enumerate_models(&g, &[v(1), v(2)], 2, &SolverConfig::default()).unwrap();
        assert_eq!(capped.len(), 2);
    }

    #[test]
    fn blasted_session_agrees() {
        let mut f = CnfFormula::new(6);
        f.add_xor((1..=6).map(v).collect(), true);
        f.add_clause(vec![v(1).pos()]);
        let native = enumerate_models(&f, &(1..=6).map(v).collect::<Vec<_>>(), 100, &SolverConfig::default()).unwrap();
        let cfg = SolverConfig {
            xor_native: false,
            ..Default::default()
        };
        let blasted = enumerate_models(&f, &(1..=6).map(v).collect::<Vec<_>>(), 100, &cfg).unwrap();
        assert_eq!(native.len(), 16);
        assert_eq!(blasted.len(), 16);
    }

    #[test]
    fn template_needs_placeholder() {
        assert!(Backend::parse("ext:minisat").is_err());
        assert!(Backend::parse("ext:minisat {cnf_path}").is_ok());
        assert!(Backend::parse("nonsense").is_err());
    }

    #[test]
    fn assumptions_out_of_range_rejected() {
        let f = CnfFormula::new(1);
        let e = solve(&f, &[v(3).pos()], &SolverConfig::default()).unwrap_err();
        assert!(matches!(e, SatError::VarRange { var: 3, .. }));
    }
}
