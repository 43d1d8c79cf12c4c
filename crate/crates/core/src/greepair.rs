//! Greepair: two-phase greedy repair of one lost node of an LDPC-coded cache.
//!
//! The first phase repairs every lost symbol that can be rebuilt from local
//! nodes alone, always taking the recovery equation with the fewest remaining
//! helpers. The second phase handles what is left: it prefers equations with
//! the fewest lost helpers, and when every candidate is blocked it downloads
//! the lost symbol itself from the base station. Repaired symbols and fetched
//! helpers are cached on the newcomer and reused for free.
//!
//! All tie-breaks are total (cardinality, then target index, then row), so a
//! given task always produces the same outcome.

use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::code_model::{recovery_equations, CodeError, Codeword, ParityCheckMatrix, RecoveryEquation};
use crate::cost_models::CostParams;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GreepairError {
    #[error("invalid repair task: {0}")]
    InvalidTask(String),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("internal error: {0}")]
    Internal(String),
}

/// One node repair: the node's lost symbols `lost` (L) and the symbols of
/// every other node that is currently gone (G).
#[derive(Debug, Clone)]
pub struct RepairTask<'a> {
    h: &'a ParityCheckMatrix,
    lost: Vec<usize>,
    others: Vec<usize>,
    codeword: Option<&'a Codeword>,
}

impl<'a> RepairTask<'a> {
    pub fn new(
        h: &'a ParityCheckMatrix,
        lost: impl IntoIterator<Item = usize>,
        others: impl IntoIterator<Item = usize>,
    ) -> Result<Self, GreepairError> {
        let lost = sorted_unique(h, lost, "L")?;
        let others = sorted_unique(h, others, "G")?;
        if let Some(s) = lost.iter().find(|s| others.binary_search(s).is_ok()) {
            return Err(GreepairError::InvalidTask(format!(
                "symbol {s} is in both L and G"
            )));
        }
        Ok(Self {
            h,
            lost,
            others,
            codeword: None,
        })
    }

    /// Attaches the stored codeword so that the repair also computes values.
    pub fn with_codeword(mut self, codeword: &'a Codeword) -> Result<Self, GreepairError> {
        if codeword.len() != self.h.n() {
            return Err(GreepairError::InvalidTask(format!(
                "codeword has {} symbols, code has {}",
                codeword.len(),
                self.h.n()
            )));
        }
        self.codeword = Some(codeword);
        Ok(self)
    }

    pub fn matrix(&self) -> &'a ParityCheckMatrix {
        self.h
    }

    pub fn lost(&self) -> &[usize] {
        &self.lost
    }

    pub fn others(&self) -> &[usize] {
        &self.others
    }

    pub fn codeword(&self) -> Option<&'a Codeword> {
        self.codeword
    }
}

fn sorted_unique(
    h: &ParityCheckMatrix,
    symbols: impl IntoIterator<Item = usize>,
    what: &str,
) -> Result<Vec<usize>, GreepairError> {
    let mut v: Vec<usize> = symbols.into_iter().collect();
    v.sort_unstable();
    v.dedup();
    if let Some(&bad) = v.iter().find(|&&s| s == 0 || s > h.n()) {
        return Err(GreepairError::InvalidTask(format!(
            "{what} contains symbol {bad} outside 1..={}",
            h.n()
        )));
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RepairSource {
    /// Rebuilt from check row `row`; `downloaded` lists the helpers fetched
    /// over D2D for this step (cached ones are not repeated).
    Local { row: usize, downloaded: Vec<usize> },
    /// The lost symbol itself was fetched from the base station.
    BsDirect,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairAction {
    pub target: usize,
    pub source: RepairSource,
    /// Recovered bit, when the task carried a codeword.
    pub value: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RepairOutcome {
    pub actions: Vec<RepairAction>,
    /// Distinct symbols downloaded from local nodes.
    pub tau: usize,
    /// Symbols downloaded from the base station (BSScore).
    pub phi: usize,
}

impl RepairOutcome {
    pub fn weighted_cost(&self, prices: &CostParams) -> f64 {
        prices.rho_d2d * self.tau as f64 + prices.rho_bs * self.phi as f64
    }

    /// `(symbol, bit)` for every repaired symbol with a known value.
    pub fn recovered(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.actions
            .iter()
            .filter_map(|a| a.value.map(|v| (a.target, v)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Alive,
    /// In L, not yet repaired.
    Lost,
    /// In G.
    Other,
    Resolved,
    Cached,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    R1,
    R2,
    Gone,
}

#[derive(Debug, Clone)]
struct Pooled {
    eq: RecoveryEquation,
    /// Helpers not yet resolved or cached.
    reduced_len: usize,
    /// Helpers still in unresolved L or in G.
    blocked: usize,
    stage: Stage,
}

/// Recovery equations of the lost symbols, split into the no-BS pool (R1)
/// and the BS-needing pool (R2), plus the newcomer's cache state.
///
/// Each entry keeps its original equation; the reduced form is the original
/// minus everything already resolved or cached, tracked by counters.
#[derive(Debug, Clone)]
pub struct EquationPool<'a> {
    codeword: Option<&'a Codeword>,
    status: Vec<Status>,
    equations: Vec<Pooled>,
    /// `(helper, equation id)`, sorted.
    by_helper: Vec<(usize, usize)>,
    /// Equations are built target by target: `(target, first id, end id)`.
    by_target: Vec<(usize, usize, usize)>,
    /// R1 ordered by (reduced size, target, row).
    r1: BTreeSet<(usize, usize, usize, usize)>,
    /// Number of R2 equations that still contain a symbol, by `symbol - 1`.
    freq: Vec<usize>,
    unresolved: BTreeSet<usize>,
    recovered: HashMap<usize, bool>,
    unblocked: Vec<usize>,
}

impl<'a> EquationPool<'a> {
    fn build(task: &RepairTask<'a>) -> Result<Self, GreepairError> {
        let n = task.h.n();
        let mut status = vec![Status::Alive; n];
        for &s in &task.lost {
            status[s - 1] = Status::Lost;
        }
        for &s in &task.others {
            status[s - 1] = Status::Other;
        }
        let mut pool = Self {
            codeword: task.codeword,
            status,
            equations: Vec::new(),
            by_helper: Vec::new(),
            by_target: Vec::with_capacity(task.lost.len()),
            r1: BTreeSet::new(),
            freq: vec![0; n],
            unresolved: task.lost.iter().copied().collect(),
            recovered: HashMap::new(),
            unblocked: Vec::new(),
        };
        for &t in &task.lost {
            let first = pool.equations.len();
            for eq in recovery_equations(task.h, t)? {
                let id = pool.equations.len();
                let blocked = eq
                    .helpers
                    .iter()
                    .filter(|&&s| matches!(pool.status[s - 1], Status::Lost | Status::Other))
                    .count();
                let stage = if blocked == 0 { Stage::R1 } else { Stage::R2 };
                for &s in &eq.helpers {
                    pool.by_helper.push((s, id));
                    if stage == Stage::R2 {
                        pool.freq[s - 1] += 1;
                    }
                }
                if stage == Stage::R1 {
                    pool.r1.insert((eq.helpers.len(), t, eq.row, id));
                }
                pool.equations.push(Pooled {
                    reduced_len: eq.helpers.len(),
                    blocked,
                    stage,
                    eq,
                });
            }
            pool.by_target.push((t, first, pool.equations.len()));
        }
        pool.by_helper.sort_unstable();
        Ok(pool)
    }

    fn status(&self, s: usize) -> Status {
        self.status[s - 1]
    }

    fn r1_key(&self, id: usize) -> (usize, usize, usize, usize) {
        let p = &self.equations[id];
        (p.reduced_len, p.eq.target, p.eq.row, id)
    }

    fn leave_r2(&mut self, id: usize) {
        for &s in &self.equations[id].eq.helpers {
            self.freq[s - 1] -= 1;
        }
    }

    fn helped_by(&self, s: usize) -> std::ops::Range<usize> {
        let lo = self.by_helper.partition_point(|&(h, _)| h < s);
        let hi = lo + self.by_helper[lo..].partition_point(|&(h, _)| h == s);
        lo..hi
    }

    fn targeting(&self, t: usize) -> std::ops::Range<usize> {
        match self.by_target.binary_search_by_key(&t, |&(target, _, _)| target) {
            Ok(i) => self.by_target[i].1..self.by_target[i].2,
            Err(_) => 0..0,
        }
    }

    fn retire(&mut self, id: usize) {
        match self.equations[id].stage {
            Stage::R1 => {
                let key = self.r1_key(id);
                self.r1.remove(&key);
            }
            Stage::R2 => self.leave_r2(id),
            Stage::Gone => {}
        }
        self.equations[id].stage = Stage::Gone;
    }

    /// Removes `s` from the reduced form of every live equation.
    fn shrink(&mut self, s: usize, unblocks: bool) {
        for i in self.helped_by(s) {
            let id = self.by_helper[i].1;
            let stage = self.equations[id].stage;
            if stage == Stage::Gone {
                continue;
            }
            if stage == Stage::R1 {
                let key = self.r1_key(id);
                self.r1.remove(&key);
            }
            let p = &mut self.equations[id];
            p.reduced_len -= 1;
            if unblocks {
                p.blocked -= 1;
                if p.blocked == 0 && stage == Stage::R2 {
                    self.unblocked.push(id);
                }
            }
            if stage == Stage::R1 {
                let key = self.r1_key(id);
                self.r1.insert(key);
            }
        }
    }

    fn cache(&mut self, s: usize) {
        self.status[s - 1] = Status::Cached;
        self.shrink(s, false);
    }

    /// Marks `t` repaired and drops every remaining equation targeting it.
    fn resolve(&mut self, t: usize, value: Option<bool>) {
        self.status[t - 1] = Status::Resolved;
        self.unresolved.remove(&t);
        if let Some(v) = value {
            self.recovered.insert(t, v);
        }
        self.shrink(t, true);
        for id in self.targeting(t) {
            self.retire(id);
        }
    }

    fn read(&self, s: usize) -> Result<bool, GreepairError> {
        let word = self.codeword.expect("read only called with a codeword");
        match self.status(s) {
            Status::Alive | Status::Cached => Ok(word.bit(s)),
            Status::Resolved => Ok(self.recovered[&s]),
            Status::Lost | Status::Other => Err(GreepairError::Internal(format!(
                "helper {s} read while unavailable"
            ))),
        }
    }

    /// Local repair with equation `id`: fetch the uncached helpers, rebuild
    /// the target, update the pools.
    fn repair_locally(&mut self, id: usize, outcome: &mut RepairOutcome) -> Result<(), GreepairError> {
        let eq = self.equations[id].eq.clone();
        let mut downloaded = Vec::new();
        let mut value = false;
        for &s in &eq.helpers {
            match self.status(s) {
                Status::Alive => downloaded.push(s),
                Status::Cached | Status::Resolved => {}
                Status::Lost | Status::Other => {
                    return Err(GreepairError::Internal(format!(
                        "equation for {} (row {}) uses unavailable helper {s}",
                        eq.target, eq.row
                    )))
                }
            }
            if self.codeword.is_some() {
                value ^= self.read(s)?;
            }
        }
        self.retire(id);
        for &s in &downloaded {
            self.cache(s);
        }
        outcome.tau += downloaded.len();
        let value = self.codeword.map(|_| value);
        self.resolve(eq.target, value);
        outcome.actions.push(RepairAction {
            target: eq.target,
            source: RepairSource::Local {
                row: eq.row,
                downloaded,
            },
            value,
        });
        Ok(())
    }

    fn download_from_bs(&mut self, t: usize, outcome: &mut RepairOutcome) {
        let value = self.codeword.map(|w| w.bit(t));
        outcome.phi += 1;
        self.resolve(t, value);
        outcome.actions.push(RepairAction {
            target: t,
            source: RepairSource::BsDirect,
            value,
        });
    }

    /// Moves R2 equations that no longer touch lost symbols into R1, one per
    /// target, smallest reduced form first.
    fn promote(&mut self) {
        let mut ids: Vec<usize> = std::mem::take(&mut self.unblocked);
        ids.sort_by_key(|&id| self.r1_key(id));
        for id in ids {
            if self.equations[id].stage != Stage::R2 {
                continue;
            }
            self.leave_r2(id);
            self.equations[id].stage = Stage::R1;
            let key = self.r1_key(id);
            self.r1.insert(key);
            let target = self.equations[id].eq.target;
            for sib in self.targeting(target) {
                if sib != id && self.equations[sib].stage == Stage::R2 {
                    self.retire(sib);
                }
            }
        }
    }

    /// Reduced helper sets currently in R1, in selection order.
    pub fn r1(&self) -> Vec<(usize, Vec<usize>)> {
        self.r1
            .iter()
            .map(|&(_, _, _, id)| self.reduced(id))
            .collect()
    }

    /// Reduced helper sets currently in R2, in construction order.
    pub fn r2(&self) -> Vec<(usize, Vec<usize>)> {
        self.equations
            .iter()
            .enumerate()
            .filter(|(_, p)| p.stage == Stage::R2)
            .map(|(id, _)| self.reduced(id))
            .collect()
    }

    fn reduced(&self, id: usize) -> (usize, Vec<usize>) {
        let eq = &self.equations[id].eq;
        let helpers = eq
            .helpers
            .iter()
            .copied()
            .filter(|&s| !matches!(self.status(s), Status::Resolved | Status::Cached))
            .collect();
        (eq.target, helpers)
    }

    /// Lost symbols of the node not yet repaired.
    pub fn remaining(&self) -> Vec<usize> {
        self.unresolved.iter().copied().collect()
    }
}

/// First phase: repairs everything reachable without the base station.
pub fn phase1<'a>(task: &RepairTask<'a>) -> Result<(RepairOutcome, EquationPool<'a>), GreepairError> {
    let mut pool = EquationPool::build(task)?;
    let mut outcome = RepairOutcome::default();
    while let Some(&(_, _, _, id)) = pool.r1.first() {
        pool.repair_locally(id, &mut outcome)?;
        pool.promote();
    }
    Ok((outcome, pool))
}

/// Second phase: resolves the remaining lost symbols, using the base
/// station only where every remaining equation is blocked.
pub fn phase2(
    mut pool: EquationPool<'_>,
    mut outcome: RepairOutcome,
) -> Result<RepairOutcome, GreepairError> {
    let mut live: Vec<usize> = (0..pool.equations.len()).collect();
    while let Some(&first) = pool.unresolved.first() {
        live.retain(|&id| pool.equations[id].stage == Stage::R2);
        let best = live
            .iter()
            .map(|&id| (id, &pool.equations[id]))
            .min_by_key(|(_, p)| (p.blocked, Reverse(pool.freq[p.eq.target - 1]), p.eq.target, p.eq.row))
            .map(|(id, p)| (id, p.blocked, p.eq.target));
        match best {
            Some((id, 0, _)) => pool.repair_locally(id, &mut outcome)?,
            Some((_, _, target)) => pool.download_from_bs(target, &mut outcome),
            // A symbol with no usable check at all.
            None => pool.download_from_bs(first, &mut outcome),
        }
    }
    Ok(outcome)
}

/// Runs both phases.
pub fn repair_node(task: &RepairTask<'_>) -> Result<RepairOutcome, GreepairError> {
    let (outcome, pool) = phase1(task)?;
    phase2(pool, outcome)
}
