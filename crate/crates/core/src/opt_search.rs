//! Exhaustive repair-plan search: the optimum baselines Greepair is
//! measured against.
//!
//! A plan repairs every lost symbol of the node exactly once, either from one
//! of its recovery equations or by fetching it from the base station. Helpers
//! and repaired symbols are cached on the newcomer, so a plan's D2D count is
//! the number of distinct alive helpers it touches and its BS count is the
//! number of direct downloads. Neither depends on the order of the steps as
//! long as the order is feasible, which is what makes [`opt1`] and [`opt2`]
//! cheap: they search over per-symbol choices, `(d_v + 1)^|L|` of them, and
//! only need an acyclicity check to know that some feasible order exists.
//! [`enumerate_plans`] walks the full ordered space instead and serves as the
//! independent reference.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::code_model::{recovery_equations, CodeError};
use crate::cost_models::CostParams;
use crate::greepair::RepairTask;

/// Largest lost set searched by default.
pub const DEFAULT_CAP: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OptError {
    #[error("{lost} lost symbols exceed the search cap of {cap}")]
    CapExceeded { lost: usize, cap: usize },
    #[error("infeasible plan: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Code(#[from] CodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlanChoice {
    /// Rebuild from the recovery equation of check row `row`.
    Local { row: usize },
    BsDirect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PlanStep {
    pub target: usize,
    pub choice: PlanChoice,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct RepairPlan {
    pub steps: Vec<PlanStep>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub plan: RepairPlan,
    pub tau: usize,
    pub phi: usize,
}

impl OptResult {
    pub fn weighted_cost(&self, prices: &CostParams) -> f64 {
        prices.rho_d2d * self.tau as f64 + prices.rho_bs * self.phi as f64
    }
}

fn check_cap(task: &RepairTask<'_>, cap: usize) -> Result<(), OptError> {
    let lost = task.lost().len();
    if lost > cap {
        Err(OptError::CapExceeded { lost, cap })
    } else {
        Ok(())
    }
}

/// A repair option for one target with its helpers pre-split by kind.
#[derive(Debug, Clone)]
struct Candidate {
    choice: PlanChoice,
    /// Alive helpers (downloaded over D2D unless cached).
    alive: Vec<usize>,
    /// Positions in L of helpers that must be repaired first.
    deps: Vec<usize>,
}

/// Per target, the usable options: equations free of G, then BS-direct.
fn options(task: &RepairTask<'_>) -> Result<Vec<Vec<Candidate>>, OptError> {
    let lost = task.lost();
    let others = task.others();
    let mut all = Vec::with_capacity(lost.len());
    for &t in lost {
        let mut opts = Vec::new();
        for eq in recovery_equations(task.matrix(), t)? {
            if eq.helpers.iter().any(|s| others.binary_search(s).is_ok()) {
                continue;
            }
            let (mut alive, mut deps) = (Vec::new(), Vec::new());
            for &s in &eq.helpers {
                match lost.binary_search(&s) {
                    Ok(pos) => deps.push(pos),
                    Err(_) => alive.push(s),
                }
            }
            opts.push(Candidate {
                choice: PlanChoice::Local { row: eq.row },
                alive,
                deps,
            });
        }
        opts.push(Candidate {
            choice: PlanChoice::BsDirect,
            alive: Vec::new(),
            deps: Vec::new(),
        });
        all.push(opts);
    }
    Ok(all)
}

/// Feasible order for an assignment, smallest ready target first, or `None`
/// when the dependencies are cyclic.
fn schedule(lost: &[usize], chosen: &[&Candidate]) -> Option<RepairPlan> {
    let k = lost.len();
    let mut waiting: Vec<usize> = chosen.iter().map(|o| o.deps.len()).collect();
    let mut dependents = vec![Vec::new(); k];
    for (i, o) in chosen.iter().enumerate() {
        for &d in &o.deps {
            dependents[d].push(i);
        }
    }
    let mut ready: BTreeSet<usize> = (0..k).filter(|&i| waiting[i] == 0).collect();
    let mut steps = Vec::with_capacity(k);
    while let Some(i) = ready.pop_first() {
        steps.push(PlanStep {
            target: lost[i],
            choice: chosen[i].choice,
        });
        for &j in &dependents[i] {
            waiting[j] -= 1;
            if waiting[j] == 0 {
                ready.insert(j);
            }
        }
    }
    (steps.len() == k).then_some(RepairPlan { steps })
}

/// Visits every feasible per-symbol assignment in lexicographic option order
/// and keeps the first one minimising `key`.
fn best_assignment<K: PartialOrd>(
    task: &RepairTask<'_>,
    cap: usize,
    key: impl Fn(usize, usize) -> K,
) -> Result<OptResult, OptError> {
    check_cap(task, cap)?;
    let lost = task.lost();
    let opts = options(task)?;
    let k = lost.len();
    let mut idx = vec![0usize; k];
    let mut best: Option<(K, OptResult)> = None;
    let mut helpers = Vec::new();
    loop {
        let chosen: Vec<&Candidate> = idx.iter().zip(&opts).map(|(&i, o)| &o[i]).collect();
        helpers.clear();
        let mut phi = 0;
        for o in &chosen {
            if o.choice == PlanChoice::BsDirect {
                phi += 1;
            }
            helpers.extend_from_slice(&o.alive);
        }
        helpers.sort_unstable();
        helpers.dedup();
        let tau = helpers.len();
        let score = key(tau, phi);
        if best.as_ref().is_none_or(|(b, _)| score < *b) {
            if let Some(plan) = schedule(lost, &chosen) {
                best = Some((score, OptResult { plan, tau, phi }));
            }
        }
        // odometer, last target fastest
        let mut pos = k;
        loop {
            if pos == 0 {
                return Ok(best.expect("all-BS assignment is always feasible").1);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < opts[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Fewest BS downloads, then fewest D2D downloads.
pub fn opt1(task: &RepairTask<'_>, cap: usize) -> Result<OptResult, OptError> {
    best_assignment(task, cap, |tau, phi| (phi, tau))
}

/// Lowest weighted cost `rho_d2d * tau + rho_bs * phi`.
pub fn opt2(task: &RepairTask<'_>, prices: &CostParams, cap: usize) -> Result<OptResult, OptError> {
    let (d2d, bs) = (prices.rho_d2d, prices.rho_bs);
    best_assignment(task, cap, move |tau, phi| d2d * tau as f64 + bs * phi as f64)
}

/// Re-simulates `plan` step by step and returns its `(tau, phi)`.
pub fn evaluate_plan(task: &RepairTask<'_>, plan: &RepairPlan) -> Result<(usize, usize), OptError> {
    let lost = task.lost();
    let others = task.others();
    let mut done = vec![false; lost.len()];
    let mut cached = BTreeSet::new();
    let (mut tau, mut phi) = (0, 0);
    for step in &plan.steps {
        let pos = lost
            .binary_search(&step.target)
            .map_err(|_| OptError::Infeasible(format!("{} is not lost", step.target)))?;
        if done[pos] {
            return Err(OptError::Infeasible(format!("{} repaired twice", step.target)));
        }
        match step.choice {
            PlanChoice::BsDirect => phi += 1,
            PlanChoice::Local { row } => {
                let eq = recovery_equations(task.matrix(), step.target)?
                    .into_iter()
                    .find(|e| e.row == row)
                    .ok_or_else(|| {
                        OptError::Infeasible(format!("row {row} has no equation for {}", step.target))
                    })?;
                for &s in &eq.helpers {
                    if others.binary_search(&s).is_ok() {
                        return Err(OptError::Infeasible(format!("helper {s} is on a lost node")));
                    }
                    match lost.binary_search(&s) {
                        Ok(p) if !done[p] => {
                            return Err(OptError::Infeasible(format!("helper {s} not yet repaired")))
                        }
                        Ok(_) => {}
                        Err(_) => {
                            if cached.insert(s) {
                                tau += 1;
                            }
                        }
                    }
                }
            }
        }
        done[pos] = true;
    }
    if let Some(p) = done.iter().position(|d| !d) {
        return Err(OptError::Infeasible(format!("{} never repaired", lost[p])));
    }
    Ok((tau, phi))
}

/// Calls `visit(plan, tau, phi)` for every feasible ordered plan and returns
/// how many there were. Targets are tried in ascending order at each step,
/// equations before BS-direct.
pub fn enumerate_plans(
    task: &RepairTask<'_>,
    cap: usize,
    mut visit: impl FnMut(&RepairPlan, usize, usize),
) -> Result<u64, OptError> {
    check_cap(task, cap)?;
    let opts = options(task)?;
    let mut state = Walk {
        lost: task.lost(),
        opts: &opts,
        done: vec![false; opts.len()],
        cached: Vec::new(),
        plan: RepairPlan::default(),
        tau: 0,
        phi: 0,
        count: 0,
    };
    state.descend(&mut visit);
    Ok(state.count)
}

struct Walk<'a> {
    lost: &'a [usize],
    opts: &'a [Vec<Candidate>],
    done: Vec<bool>,
    cached: Vec<usize>,
    plan: RepairPlan,
    tau: usize,
    phi: usize,
    count: u64,
}

impl Walk<'_> {
    fn descend(&mut self, visit: &mut impl FnMut(&RepairPlan, usize, usize)) {
        if self.plan.steps.len() == self.lost.len() {
            self.count += 1;
            visit(&self.plan, self.tau, self.phi);
            return;
        }
        for i in 0..self.lost.len() {
            if self.done[i] {
                continue;
            }
            for o in &self.opts[i] {
                if o.deps.iter().any(|&d| !self.done[d]) {
                    continue;
                }
                let mark = self.cached.len();
                for &s in &o.alive {
                    if !self.cached.contains(&s) {
                        self.cached.push(s);
                    }
                }
                let fetched = self.cached.len() - mark;
                let bs = usize::from(o.choice == PlanChoice::BsDirect);
                self.tau += fetched;
                self.phi += bs;
                self.done[i] = true;
                self.plan.steps.push(PlanStep {
                    target: self.lost[i],
                    choice: o.choice,
                });
                self.descend(visit);
                self.plan.steps.pop();
                self.done[i] = false;
                self.phi -= bs;
                self.tau -= fetched;
                self.cached.truncate(mark);
            }
        }
    }
}
