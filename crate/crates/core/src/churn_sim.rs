//! Monte-Carlo simulation of a cell with node churn and lazy repair.
//!
//! `m` storage nodes each cache a contiguous block of `ceil(n/m)` coded
//! symbols. Nodes leave after exponential lifetimes; every `delta` time units
//! each lost storage node is rebuilt on an empty newcomer. RS, MBR and MSR
//! repairs are charged by their closed-form counting functions at the realised
//! number of lost symbols; LDPC repairs run Greepair on the actual loss
//! pattern. Costs are reported per lost node and normalised by the size of
//! one RS storage node.
//!
//! Every trial draws from its own ChaCha stream keyed by `(seed, delta)` and
//! the trial index, so results do not depend on the thread count. Scenarios
//! sharing `m` also share their loss patterns.

use std::ops::Range;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code_model::{CodeError, ParityCheckMatrix};
use crate::cost_models::{expected_cost, CodeScenario, CostError, CostParams};
use crate::greepair::{repair_node, GreepairError, RepairTask};
use crate::opt_search::{opt1, opt2, OptError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Repair(#[from] GreepairError),
    #[error(transparent)]
    Search(#[from] OptError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChurnMode {
    /// Every storage node independently survives a window with probability
    /// `exp(-mu * delta)`; each window starts from a fully repaired cell.
    #[default]
    BinomialSurvival,
    /// Event-driven M/M/inf population: Poisson arrivals at rate `N*lambda`,
    /// exponential lifetimes, unrepaired nodes carried into the next window.
    FullMmInf,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Initial population `N`.
    pub initial_nodes: usize,
    pub lambda: f64,
    pub mu: f64,
    pub delta: f64,
    /// Repair windows per trial.
    pub windows: usize,
    pub trials: usize,
    pub seed: u64,
    pub scenario: CodeScenario,
    /// Parity-check matrix; required for LDPC scenarios.
    pub matrix: Option<Arc<ParityCheckMatrix>>,
    pub prices: Vec<CostParams>,
    pub churn_mode: ChurnMode,
    /// Symbols held by one node of the reference RS code, `F n / (k m)`.
    pub reference_node_symbols: f64,
    /// Multiplier applied to every reported cost (e.g. `m_MSR / m_RS`).
    pub report_scale: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::Config(msg));
        self.scenario.validate()?;
        for p in &self.prices {
            p.validate()?;
        }
        if self.prices.is_empty() {
            return bad("at least one price pair is required".into());
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) || !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("rates must be positive, got lambda = {}, mu = {}", self.lambda, self.mu));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return bad(format!("delta must be non-negative, got {}", self.delta));
        }
        if self.trials == 0 || self.windows == 0 {
            return bad("trials and windows must be at least 1".into());
        }
        if self.initial_nodes < self.scenario.m() {
            return bad(format!(
                "population N = {} is smaller than m = {}",
                self.initial_nodes,
                self.scenario.m()
            ));
        }
        let positive = |x: f64| x > 0.0;
        if !positive(self.reference_node_symbols) || !positive(self.report_scale) {
            return bad("reference node size and report scale must be positive".into());
        }
        if let CodeScenario::Ldpc(p) = &self.scenario {
            let Some(h) = &self.matrix else {
                return bad("LDPC scenario needs a parity-check matrix".into());
            };
            if h.n() != p.n || h.k() != p.k {
                return bad(format!(
                    "matrix is ({}, {}) but scenario says ({}, {})",
                    h.n(),
                    h.k(),
                    p.n,
                    p.k
                ));
            }
        }
        Ok(())
    }

    fn survival(&self) -> f64 {
        (-self.mu * self.delta).exp()
    }
}

/// Contiguous symbol blocks: node `i` (0-based here) holds
/// `i*ceil(n/m)+1 ..= min((i+1)*ceil(n/m), n)`. Trailing nodes may be short
/// or empty.
pub fn place_symbols(n: usize, m: usize) -> Result<Vec<Range<usize>>, SimError> {
    if m == 0 || m > n {
        return Err(SimError::Config(format!("cannot place n = {n} symbols on m = {m} nodes")));
    }
    let per = n.div_ceil(m);
    Ok((0..m)
        .map(|i| {
            let start = (i * per + 1).min(n + 1);
            let end = ((i + 1) * per).min(n) + 1;
            start..end.max(start)
        })
        .collect())
}

/// Population state between windows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellState {
    /// Per storage node: is its content present in the cell.
    pub storage_alive: Vec<bool>,
    /// Present nodes holding nothing (candidate newcomers).
    pub idle: usize,
}

impl CellState {
    pub fn new(m: usize, initial_nodes: usize) -> Self {
        Self {
            storage_alive: vec![true; m],
            idle: initial_nodes.saturating_sub(m),
        }
    }

    pub fn population(&self) -> usize {
        self.storage_alive.iter().filter(|&&a| a).count() + self.idle
    }

    pub fn lost_nodes(&self) -> Vec<usize> {
        (0..self.storage_alive.len())
            .filter(|&i| !self.storage_alive[i])
            .collect()
    }
}

/// Applies the departures and arrivals of one window of length `delta`.
pub fn step_window<R: Rng>(state: &mut CellState, config: &SimConfig, rng: &mut R) {
    if config.delta == 0.0 {
        return;
    }
    let p = config.survival();
    match config.churn_mode {
        ChurnMode::BinomialSurvival => {
            for alive in state.storage_alive.iter_mut() {
                *alive = rng.random::<f64>() < p;
            }
        }
        ChurnMode::FullMmInf => {
            for alive in state.storage_alive.iter_mut().filter(|a| **a) {
                *alive = rng.random::<f64>() < p;
            }
            let stay = (0..state.idle).filter(|_| rng.random::<f64>() < p).count();
            let rate = config.initial_nodes as f64 * config.lambda * config.delta;
            let arrivals = if rate > 0.0 {
                Poisson::new(rate).map(|d| d.sample(rng) as usize).unwrap_or(0)
            } else {
                0
            };
            // An arrival at uniform time u stays to the end w.p. exp(-mu (delta - u)).
            let arrived = (0..arrivals)
                .filter(|_| {
                    let u = rng.random::<f64>() * config.delta;
                    rng.random::<f64>() < (-config.mu * (config.delta - u)).exp()
                })
                .count();
            state.idle = stay + arrived;
        }
    }
}

/// Per-window result, already normalised and scaled.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WindowMetrics {
    pub lost_nodes: usize,
    pub repaired_nodes: usize,
    /// Mean D2D download per repaired node, in RS-node units.
    pub tau: f64,
    /// Mean BS download per repaired node, in RS-node units.
    pub phi: f64,
    pub starved: bool,
}

impl WindowMetrics {
    pub fn gamma(&self, prices: &CostParams) -> f64 {
        prices.rho_d2d * self.tau + prices.rho_bs * self.phi
    }
}

struct Sim<'a> {
    config: &'a SimConfig,
    placement: Vec<Range<usize>>,
}

impl<'a> Sim<'a> {
    fn new(config: &'a SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let placement = place_symbols(config.scenario.n(), config.scenario.m())?;
        Ok(Self { config, placement })
    }

    fn unit(&self) -> f64 {
        self.config.report_scale / self.config.reference_node_symbols
    }

    /// Newcomers for this window, chosen uniformly among the lost nodes when
    /// there are not enough empty nodes.
    fn pick_repairs<R: Rng>(&self, state: &CellState, lost: &[usize], rng: &mut R) -> Vec<usize> {
        match self.config.churn_mode {
            ChurnMode::BinomialSurvival => lost.to_vec(),
            ChurnMode::FullMmInf if state.idle >= lost.len() => lost.to_vec(),
            ChurnMode::FullMmInf => {
                let mut pick = lost.to_vec();
                pick.shuffle(rng);
                pick.truncate(state.idle);
                pick.sort_unstable();
                pick
            }
        }
    }

    fn others(&self, lost: &[usize], node: usize) -> Vec<usize> {
        lost.iter()
            .filter(|&&o| o != node)
            .flat_map(|&o| self.placement[o].clone())
            .collect()
    }

    /// Repairs the chosen nodes and returns summed (tau, phi) in file symbols.
    fn repair_costs(&self, lost: &[usize], repaired: &[usize]) -> Result<(f64, f64), SimError> {
        let scenario = &self.config.scenario;
        match (scenario, &self.config.matrix) {
            (CodeScenario::Ldpc(p), Some(h)) => {
                let stripes = p.file_symbols / p.k as f64;
                let (mut tau, mut phi) = (0usize, 0usize);
                for &node in repaired {
                    let task = RepairTask::new(h, self.placement[node].clone(), self.others(lost, node))?;
                    let out = repair_node(&task)?;
                    tau += out.tau;
                    phi += out.phi;
                }
                Ok((tau as f64 * stripes, phi as f64 * stripes))
            }
            _ => {
                let c = scenario.node_cost(lost.len())?;
                let r = repaired.len() as f64;
                Ok((c.d2d_symbols * r, c.bs_symbols * r))
            }
        }
    }

    fn window<R: Rng>(&self, state: &mut CellState, rng: &mut R) -> Result<WindowMetrics, SimError> {
        step_window(state, self.config, rng);
        let lost = state.lost_nodes();
        let repaired = self.pick_repairs(state, &lost, rng);
        let mut metrics = WindowMetrics {
            lost_nodes: lost.len(),
            repaired_nodes: repaired.len(),
            starved: repaired.len() < lost.len(),
            ..WindowMetrics::default()
        };
        if !repaired.is_empty() {
            let (tau, phi) = self.repair_costs(&lost, &repaired)?;
            let per_node = self.unit() / repaired.len() as f64;
            metrics.tau = tau * per_node;
            metrics.phi = phi * per_node;
        }
        match self.config.churn_mode {
            ChurnMode::BinomialSurvival => state.storage_alive.fill(true),
            ChurnMode::FullMmInf => {
                for &node in &repaired {
                    state.storage_alive[node] = true;
                }
                state.idle -= repaired.len();
            }
        }
        Ok(metrics)
    }
}

/// RNG for one trial: key from `(seed, delta)`, stream from the trial index.
pub fn trial_rng(seed: u64, delta: f64, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut x = seed;
    for (i, chunk) in key.chunks_mut(8).enumerate() {
        x = splitmix64(x ^ delta.to_bits().rotate_left(17 * i as u32));
        chunk.copy_from_slice(&x.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial averages over its windows.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrialMetrics {
    pub tau: f64,
    pub phi: f64,
    pub lost_nodes: f64,
    pub starved_windows: usize,
}

/// Runs one trial and returns its per-window metrics.
pub fn run_trial(config: &SimConfig, trial: u64) -> Result<Vec<WindowMetrics>, SimError> {
    let sim = Sim::new(config)?;
    sim_trial(&sim, trial)
}

fn sim_trial(sim: &Sim<'_>, trial: u64) -> Result<Vec<WindowMetrics>, SimError> {
    let config = sim.config;
    let mut rng = trial_rng(config.seed, config.delta, trial);
    let mut state = CellState::new(config.scenario.m(), config.initial_nodes);
    (0..config.windows).map(|_| sim.window(&mut state, &mut rng)).collect()
}

fn summarize(windows: &[WindowMetrics]) -> TrialMetrics {
    let w = windows.len() as f64;
    TrialMetrics {
        tau: windows.iter().map(|m| m.tau).sum::<f64>() / w,
        phi: windows.iter().map(|m| m.phi).sum::<f64>() / w,
        lost_nodes: windows.iter().map(|m| m.lost_nodes as f64).sum::<f64>() / w,
        starved_windows: windows.iter().filter(|m| m.starved).count(),
    }
}

/// Mean and 95% normal-approximation half-width.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub mean: f64,
    pub ci95: f64,
}

impl Estimate {
    pub fn from_samples(xs: impl Iterator<Item = f64> + Clone) -> Self {
        let n = xs.clone().count() as f64;
        if n == 0.0 {
            return Self::default();
        }
        let mean = xs.clone().sum::<f64>() / n;
        if n < 2.0 {
            return Self { mean, ci95: 0.0 };
        }
        let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        Self {
            mean,
            ci95: 1.96 * (var / n).sqrt(),
        }
    }
}

/// One output row: a (scenario, delta, price pair) point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub family: &'static str,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub d: Option<usize>,
    pub dv: Option<usize>,
    pub dc: Option<usize>,
    pub delta: f64,
    pub prices: CostParams,
    pub tau: Estimate,
    pub phi: Estimate,
    pub gamma: Estimate,
    /// Closed-form expectation (an upper bound for LDPC).
    pub gamma_theory: f64,
    pub lost_nodes_mean: f64,
    pub starved_windows: usize,
}

fn code_degrees(config: &SimConfig) -> (Option<usize>, Option<usize>) {
    match &config.scenario {
        CodeScenario::Ldpc(p) => (Some(p.dv), Some(p.dc)),
        _ => (None, None),
    }
}

/// Analytic normalised cost for one price pair.
pub fn theory_gamma(config: &SimConfig, prices: &CostParams) -> Result<f64, SimError> {
    let c = expected_cost(&config.scenario, config.mu, config.delta)?;
    Ok(c.weighted(prices) * config.report_scale / config.reference_node_symbols)
}

fn base_row(config: &SimConfig, prices: CostParams) -> ExperimentRow {
    let (dv, dc) = code_degrees(config);
    let s = &config.scenario;
    ExperimentRow {
        family: s.family(),
        n: s.n(),
        k: s.k(),
        m: s.m(),
        d: s.d(),
        dv,
        dc,
        delta: config.delta,
        prices,
        tau: Estimate::default(),
        phi: Estimate::default(),
        gamma: Estimate::default(),
        gamma_theory: 0.0,
        lost_nodes_mean: 0.0,
        starved_windows: 0,
    }
}

/// Simulates `config.trials` trials in parallel and returns one row per
/// price pair.
pub fn run_experiment(config: &SimConfig) -> Result<Vec<ExperimentRow>, SimError> {
    let sim = Sim::new(config)?;
    let trials: Vec<TrialMetrics> = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| sim_trial(&sim, t).map(|w| summarize(&w)))
        .collect::<Result<_, _>>()?;
    let tau = Estimate::from_samples(trials.iter().map(|t| t.tau));
    let phi = Estimate::from_samples(trials.iter().map(|t| t.phi));
    let lost = trials.iter().map(|t| t.lost_nodes).sum::<f64>() / trials.len() as f64;
    let starved = trials.iter().map(|t| t.starved_windows).sum();
    config
        .prices
        .iter()
        .map(|prices| {
            let mut row = base_row(config, *prices);
            row.tau = tau;
            row.phi = phi;
            row.gamma = Estimate::from_samples(
                trials.iter().map(|t| prices.rho_d2d * t.tau + prices.rho_bs * t.phi),
            );
            row.gamma_theory = theory_gamma(config, prices)?;
            row.lost_nodes_mean = lost;
            row.starved_windows = starved;
            Ok(row)
        })
        .collect()
}

/// Greepair against the exhaustive optimum on the same loss patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct OptCompareRow {
    pub base: ExperimentRow,
    pub greepair_tau: f64,
    pub greepair_phi: f64,
    pub greepair_gamma: f64,
    pub opt1_tau: f64,
    pub opt1_phi: f64,
    pub opt2_gamma: f64,
    pub opt1_tau_improvement_pct: f64,
    pub opt1_phi_improvement_pct: f64,
    pub opt2_gamma_improvement_pct: f64,
}

/// Relative saving of `better` over `baseline`, in percent (0 when the
/// baseline is 0).
pub fn improvement_pct(baseline: f64, better: f64) -> f64 {
    if baseline > 0.0 {
        100.0 * (baseline - better) / baseline
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Default)]
struct CompareTrial {
    greepair: (f64, f64),
    opt1: (f64, f64),
    /// Opt-2 normalised cost per price pair.
    opt2: Vec<f64>,
    lost_nodes: f64,
    starved: usize,
}

fn compare_trial(sim: &Sim<'_>, trial: u64, cap: usize) -> Result<CompareTrial, SimError> {
    let config = sim.config;
    let (CodeScenario::Ldpc(p), Some(h)) = (&config.scenario, &config.matrix) else {
        return Err(SimError::Config("optimum comparison needs an LDPC scenario".into()));
    };
    let stripes = p.file_symbols / p.k as f64;
    let mut rng = trial_rng(config.seed, config.delta, trial);
    let mut state = CellState::new(config.scenario.m(), config.initial_nodes);
    let mut acc = CompareTrial {
        opt2: vec![0.0; config.prices.len()],
        ..CompareTrial::default()
    };
    for _ in 0..config.windows {
        step_window(&mut state, config, &mut rng);
        let lost = state.lost_nodes();
        let repaired = sim.pick_repairs(&state, &lost, &mut rng);
        acc.lost_nodes += lost.len() as f64;
        acc.starved += usize::from(repaired.len() < lost.len());
        if !repaired.is_empty() {
            let scale = stripes * sim.unit() / repaired.len() as f64;
            for &node in &repaired {
                let task = RepairTask::new(h, sim.placement[node].clone(), sim.others(&lost, node))?;
                let g = repair_node(&task)?;
                let o1 = opt1(&task, cap)?;
                acc.greepair.0 += g.tau as f64 * scale;
                acc.greepair.1 += g.phi as f64 * scale;
                acc.opt1.0 += o1.tau as f64 * scale;
                acc.opt1.1 += o1.phi as f64 * scale;
                for (slot, prices) in acc.opt2.iter_mut().zip(&config.prices) {
                    *slot += opt2(&task, prices, cap)?.weighted_cost(prices) * scale;
                }
            }
        }
        match config.churn_mode {
            ChurnMode::BinomialSurvival => state.storage_alive.fill(true),
            ChurnMode::FullMmInf => {
                for &node in &repaired {
                    state.storage_alive[node] = true;
                }
                state.idle -= repaired.len();
            }
        }
    }
    let w = config.windows as f64;
    acc.greepair = (acc.greepair.0 / w, acc.greepair.1 / w);
    acc.opt1 = (acc.opt1.0 / w, acc.opt1.1 / w);
    acc.opt2.iter_mut().for_each(|x| *x /= w);
    acc.lost_nodes /= w;
    Ok(acc)
}

/// Runs Greepair, Opt-1 and Opt-2 on every repaired node of every trial.
/// `cap` bounds the number of lost symbols per node the search accepts.
pub fn run_opt_compare(config: &SimConfig, cap: usize) -> Result<Vec<OptCompareRow>, SimError> {
    let sim = Sim::new(config)?;
    let trials: Vec<CompareTrial> = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| compare_trial(&sim, t, cap))
        .collect::<Result<_, _>>()?;
    let mean = |f: &dyn Fn(&CompareTrial) -> f64| trials.iter().map(f).sum::<f64>() / trials.len() as f64;
    let g_tau = mean(&|t| t.greepair.0);
    let g_phi = mean(&|t| t.greepair.1);
    let o1_tau = mean(&|t| t.opt1.0);
    let o1_phi = mean(&|t| t.opt1.1);
    let lost = mean(&|t| t.lost_nodes);
    let starved = trials.iter().map(|t| t.starved).sum();
    config
        .prices
        .iter()
        .enumerate()
        .map(|(i, prices)| {
            let mut base = base_row(config, *prices);
            base.tau = Estimate::from_samples(trials.iter().map(|t| t.greepair.0));
            base.phi = Estimate::from_samples(trials.iter().map(|t| t.greepair.1));
            base.gamma = Estimate::from_samples(
                trials
                    .iter()
                    .map(|t| prices.rho_d2d * t.greepair.0 + prices.rho_bs * t.greepair.1),
            );
            base.gamma_theory = theory_gamma(config, prices)?;
            base.lost_nodes_mean = lost;
            base.starved_windows = starved;
            let g_gamma = base.gamma.mean;
            let o2 = mean(&|t| t.opt2[i]);
            Ok(OptCompareRow {
                base,
                greepair_tau: g_tau,
                greepair_phi: g_phi,
                greepair_gamma: g_gamma,
                opt1_tau: o1_tau,
                opt1_phi: o1_phi,
                opt2_gamma: o2,
                opt1_tau_improvement_pct: improvement_pct(g_tau, o1_tau),
                opt1_phi_improvement_pct: improvement_pct(g_phi, o1_phi),
                opt2_gamma_improvement_pct: improvement_pct(g_gamma, o2),
            })
        })
        .collect()
}
