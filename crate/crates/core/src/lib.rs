//! Leakage analysis for two-party functionalities: how much of a target
//! input can an adversary learn by choosing its own input adaptively?

pub mod attack;
pub mod circuit;
pub mod cnf;
pub mod counting;
pub mod functionalities;
pub mod history;
pub mod maxquery;
pub mod oracle;
pub mod outcomes;
pub mod rng;
pub mod sat;
