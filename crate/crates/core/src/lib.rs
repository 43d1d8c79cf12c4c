//! Repair-bandwidth models and simulation for erasure-coded caching in a
//! cell backed by a base station.
//!
//! * [`code_model`]: parity-check matrices, array LDPC construction, alist
//!   I/O, recovery equations and systematic encoding.
//! * [`cost_models`]: closed-form per-node repair costs for RS, MBR, MSR and
//!   LDPC codes and their expectations over a repair window.
//! * [`greepair`]: the two-phase greedy node repair for LDPC codes.
//! * [`opt_search`]: exhaustive repair-plan search (optimum baselines).
//! * [`churn_sim`]: Monte-Carlo simulation of node churn and lazy repair.

pub mod code_model;
pub mod cost_models;
pub mod greepair;
pub mod opt_search;
pub mod churn_sim;
