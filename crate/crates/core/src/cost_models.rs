//! Closed-form repair cost of one lost node for RS, MBR, MSR and LDPC codes.
//!
//! Every function returns a [`Cost`]: the number of symbols fetched from
//! local devices and from the base station. The weighted cost for given
//! per-symbol prices comes from [`Cost::weighted`]. `l` is always the total
//! number of lost symbols (or packets) in the system, including those of the
//! node under repair.

use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("invalid code parameters: {0}")]
    Scenario(String),
    #[error("invalid prices: {0}")]
    Prices(String),
    #[error("lost symbol count {l} exceeds n = {n}")]
    TooManyLost { l: f64, n: usize },
    #[error("invalid churn parameters: mu = {mu}, delta = {delta}")]
    Churn { mu: f64, delta: f64 },
}

/// Per-symbol download prices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub rho_d2d: f64,
    pub rho_bs: f64,
}

impl CostParams {
    pub fn new(rho_d2d: f64, rho_bs: f64) -> Result<Self, CostError> {
        let params = Self { rho_d2d, rho_bs };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), CostError> {
        if !(self.rho_d2d > 0.0 && self.rho_d2d.is_finite() && self.rho_bs.is_finite()) {
            return Err(CostError::Prices(format!(
                "prices must be positive and finite, got ({}, {})",
                self.rho_d2d, self.rho_bs
            )));
        }
        if self.rho_bs < self.rho_d2d {
            return Err(CostError::Prices(format!(
                "rho_bs = {} is below rho_d2d = {}",
                self.rho_bs, self.rho_d2d
            )));
        }
        Ok(())
    }

    pub fn ratio(&self) -> f64 {
        self.rho_bs / self.rho_d2d
    }
}

/// Symbols downloaded to repair one node.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Cost {
    pub d2d_symbols: f64,
    pub bs_symbols: f64,
}

impl Cost {
    pub const ZERO: Cost = Cost {
        d2d_symbols: 0.0,
        bs_symbols: 0.0,
    };

    pub fn new(d2d_symbols: f64, bs_symbols: f64) -> Self {
        Self {
            d2d_symbols,
            bs_symbols,
        }
    }

    pub fn weighted(&self, prices: &CostParams) -> f64 {
        prices.rho_d2d * self.d2d_symbols + prices.rho_bs * self.bs_symbols
    }
}

impl Add for Cost {
    type Output = Cost;

    fn add(self, rhs: Cost) -> Cost {
        Cost::new(
            self.d2d_symbols + rhs.d2d_symbols,
            self.bs_symbols + rhs.bs_symbols,
        )
    }
}

impl Mul<f64> for Cost {
    type Output = Cost;

    fn mul(self, rhs: f64) -> Cost {
        Cost::new(self.d2d_symbols * rhs, self.bs_symbols * rhs)
    }
}

/// Reed-Solomon `(n, k)` code over `m` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsParams {
    pub file_symbols: f64,
    pub n: usize,
    pub k: usize,
    pub m: usize,
}

/// Product-matrix MBR code with `beta = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MbrParams {
    pub file_symbols: f64,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub d: usize,
}

impl MbrParams {
    /// Message symbols per stripe, `k*d - C(k, 2)`.
    pub fn b1(&self) -> usize {
        self.k * self.d - self.k * (self.k - 1) / 2
    }
}

/// Low-rate product-matrix MSR code (`d >= 2k - 2`, `beta = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsrLowRateParams {
    pub file_symbols: f64,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub d: usize,
}

impl MsrLowRateParams {
    pub fn alpha(&self) -> usize {
        self.d - self.k + 1
    }

    pub fn b2(&self) -> usize {
        self.k * self.alpha()
    }
}

/// High-rate systematic MSR code with `n = (t+1)z + t`, one packet per node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsrHighRateParams {
    pub file_symbols: f64,
    pub t: usize,
    pub z: usize,
}

impl MsrHighRateParams {
    pub fn n(&self) -> usize {
        (self.t + 1) * self.z + self.t
    }

    pub fn k(&self) -> usize {
        (self.t + 1) * self.z
    }

    pub fn d(&self) -> usize {
        self.n() - 1
    }

    pub fn m(&self) -> usize {
        self.n()
    }

    pub fn alpha(&self) -> usize {
        self.t.pow(self.z as u32)
    }

    pub fn b2(&self) -> usize {
        self.k() * self.alpha()
    }
}

/// `(dv, dc)`-regular LDPC code; each node holds `ceil(n/m)` symbols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdpcParams {
    pub file_symbols: f64,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub dv: usize,
    pub dc: usize,
}

impl LdpcParams {
    pub fn symbols_per_node(&self) -> usize {
        self.n.div_ceil(self.m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Systematic,
    NonSystematic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CodeScenario {
    Rs(RsParams),
    Mbr(MbrParams),
    MsrLowRate(MsrLowRateParams),
    MsrHighRate(MsrHighRateParams),
    Ldpc(LdpcParams),
}

fn invalid(msg: impl Into<String>) -> CostError {
    CostError::Scenario(msg.into())
}

fn check_file(file_symbols: f64) -> Result<(), CostError> {
    if file_symbols > 0.0 && file_symbols.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("file size {file_symbols} must be positive")))
    }
}

fn check_layout(n: usize, k: usize, m: usize, divisible: bool) -> Result<(), CostError> {
    if k == 0 || k >= n {
        return Err(invalid(format!("need 1 <= k < n, got n = {n}, k = {k}")));
    }
    if m == 0 || m > n {
        return Err(invalid(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
    }
    if divisible && !n.is_multiple_of(m) {
        return Err(invalid(format!("m = {m} must divide n = {n}")));
    }
    Ok(())
}

fn check_repair_degree(n: usize, k: usize, m: usize, d: usize) -> Result<(), CostError> {
    if d < k || d >= n {
        return Err(invalid(format!("need k <= d <= n-1, got k = {k}, d = {d}, n = {n}")));
    }
    if d <= n / m {
        return Err(invalid(format!("need d > n/m, got d = {d}, n/m = {}", n / m)));
    }
    Ok(())
}

impl RsParams {
    pub fn validate(&self) -> Result<(), CostError> {
        check_file(self.file_symbols)?;
        check_layout(self.n, self.k, self.m, true)
    }
}

impl MbrParams {
    pub fn validate(&self) -> Result<(), CostError> {
        check_file(self.file_symbols)?;
        check_layout(self.n, self.k, self.m, true)?;
        check_repair_degree(self.n, self.k, self.m, self.d)
    }
}

impl MsrLowRateParams {
    pub fn validate(&self) -> Result<(), CostError> {
        check_file(self.file_symbols)?;
        check_layout(self.n, self.k, self.m, true)?;
        check_repair_degree(self.n, self.k, self.m, self.d)?;
        if self.d + 2 < 2 * self.k {
            return Err(invalid(format!(
                "low-rate MSR needs d >= 2k - 2, got d = {}, k = {}",
                self.d, self.k
            )));
        }
        Ok(())
    }
}

impl MsrHighRateParams {
    pub fn validate(&self) -> Result<(), CostError> {
        check_file(self.file_symbols)?;
        if self.t == 0 || self.z == 0 {
            return Err(invalid("high-rate MSR needs t, z >= 1"));
        }
        Ok(())
    }
}

impl LdpcParams {
    pub fn validate(&self) -> Result<(), CostError> {
        check_file(self.file_symbols)?;
        check_layout(self.n, self.k, self.m, false)?;
        if self.dv == 0 || self.dc < 2 {
            return Err(invalid(format!(
                "need dv >= 1 and dc >= 2, got dv = {}, dc = {}",
                self.dv, self.dc
            )));
        }
        Ok(())
    }
}

fn check_lost(l: usize, n: usize) -> Result<(), CostError> {
    if l > n {
        Err(CostError::TooManyLost { l: l as f64, n })
    } else {
        Ok(())
    }
}

/// Reed-Solomon repair of one node with `l` lost symbols in the system.
///
/// Decodes from `k` local symbols when enough survive, mixes local and BS
/// symbols when a few are missing, and otherwise downloads the node's `n/m`
/// symbols straight from the BS. `l = 0` means nothing to repair.
pub fn rs_node_cost(p: &RsParams, l: usize) -> Result<Cost, CostError> {
    p.validate()?;
    check_lost(l, p.n)?;
    if l == 0 {
        return Ok(Cost::ZERO);
    }
    let (n, k, per_node) = (p.n, p.k, p.n / p.m);
    let stripe = p.file_symbols / k as f64;
    let alive = n - l;
    Ok(if k <= alive {
        Cost::new(p.file_symbols, 0.0)
    } else if k < per_node + alive {
        Cost::new(stripe * alive as f64, stripe * (k - alive) as f64)
    } else {
        Cost::new(0.0, stripe * per_node as f64)
    })
}

/// MBR repair of the `n/m` packets of one node, reusing packets already
/// regenerated on the newcomer.
pub fn mbr_node_cost(p: &MbrParams, l: usize) -> Result<Cost, CostError> {
    p.validate()?;
    check_lost(l, p.n)?;
    let scale = p.file_symbols / p.b1() as f64;
    let (n, d) = (p.n, p.d);
    let alive = n - l;
    let mut cost = Cost::ZERO;
    for a in 0..n / p.m {
        cost = cost
            + if d > alive && a < d - alive {
                Cost::new(alive as f64, (d - alive - a) as f64)
            } else {
                Cost::new((d - a) as f64, 0.0)
            } * scale;
    }
    Ok(cost)
}

/// Low-rate MSR repair. A packet whose hybrid repair would need at least
/// `alpha = d-k+1` BS symbols is fetched whole from the BS instead.
pub fn msr_lr_node_cost(p: &MsrLowRateParams, l: usize) -> Result<Cost, CostError> {
    p.validate()?;
    check_lost(l, p.n)?;
    let scale = p.file_symbols / p.b2() as f64;
    let (n, d, alpha) = (p.n, p.d, p.alpha());
    let alive = n - l;
    let mut cost = Cost::ZERO;
    for a in 0..n / p.m {
        cost = cost
            + if d > alive && a < d - alive {
                let from_bs = d - alive - a;
                if from_bs < alpha {
                    Cost::new(alive as f64, from_bs as f64)
                } else {
                    Cost::new(0.0, alpha as f64)
                }
            } else {
                Cost::new((d - a) as f64, 0.0)
            } * scale;
    }
    Ok(cost)
}

/// High-rate MSR repair; `l` counts lost nodes (one packet each).
pub fn msr_hr_node_cost(
    p: &MsrHighRateParams,
    l: usize,
    kind: NodeKind,
) -> Result<Cost, CostError> {
    p.validate()?;
    let (n, d, t) = (p.n(), p.d(), p.t);
    check_lost(l, n)?;
    let scale = p.file_symbols / p.b2() as f64;
    let sub = t.pow(p.z as u32 - 1) as f64;
    let from_bs_only = Cost::new(0.0, p.alpha() as f64 * scale);
    if kind == NodeKind::NonSystematic {
        return Ok(from_bs_only);
    }
    let alive = n - l;
    Ok(if d <= alive {
        Cost::new(sub * d as f64 * scale, 0.0)
    } else if d - alive < t {
        Cost::new(sub * alive as f64 * scale, sub * (d - alive) as f64 * scale)
    } else {
        from_bs_only
    })
}

/// Expected high-rate MSR cost over the node population: systematic with
/// weight `k/n`, non-systematic with weight `t/n`.
pub fn msr_hr_mixed_node_cost(p: &MsrHighRateParams, l: usize) -> Result<Cost, CostError> {
    let n = p.n() as f64;
    let sys = msr_hr_node_cost(p, l, NodeKind::Systematic)?;
    let non = msr_hr_node_cost(p, l, NodeKind::NonSystematic)?;
    Ok(sys * (p.k() as f64 / n) + non * (p.t as f64 / n))
}

/// Upper bound on the expected LDPC repair cost of one node.
///
/// Symbol `a` of the node (counting already-repaired ones) is lost with
/// probability `q(a) = (l-a)/(n-a)`, floored at zero once `a > l`. The D2D
/// term keeps its loose `dv` multiplier, so it can exceed `dc - 1` symbols.
pub fn ldpc_node_cost_bound(p: &LdpcParams, l: f64) -> Result<Cost, CostError> {
    p.validate()?;
    if !(0.0..=p.n as f64).contains(&l) {
        return Err(CostError::TooManyLost { l, n: p.n });
    }
    let stripe = p.file_symbols / p.k as f64;
    let helpers = (p.dc - 1) as f64;
    let mut cost = Cost::ZERO;
    for a in 0..p.symbols_per_node() {
        let a = a as f64;
        let q = (l - a).max(0.0) / (p.n as f64 - a);
        let all_alive = (1.0 - q).powi(p.dc as i32 - 1);
        cost = cost
            + Cost::new(
                stripe * helpers * p.dv as f64 * all_alive,
                stripe * (1.0 - all_alive),
            );
    }
    Ok(cost)
}

/// Probability that a node stays in the cell for `delta`, `exp(-mu * delta)`.
pub fn survival_probability(mu: f64, delta: f64) -> Result<f64, CostError> {
    if !(mu > 0.0 && mu.is_finite() && delta >= 0.0 && delta.is_finite()) {
        return Err(CostError::Churn { mu, delta });
    }
    Ok((-mu * delta).exp())
}

/// `P(i of m nodes survive)` for `i = 0..=m`.
pub fn binomial_pmf(m: usize, p: f64) -> Vec<f64> {
    let mut coeff = 1.0;
    (0..=m)
        .map(|i| {
            if i > 0 {
                coeff = coeff * (m - i + 1) as f64 / i as f64;
            }
            coeff * p.powi(i as i32) * (1.0 - p).powi((m - i) as i32)
        })
        .collect()
}

impl CodeScenario {
    pub fn validate(&self) -> Result<(), CostError> {
        match self {
            CodeScenario::Rs(p) => p.validate(),
            CodeScenario::Mbr(p) => p.validate(),
            CodeScenario::MsrLowRate(p) => p.validate(),
            CodeScenario::MsrHighRate(p) => p.validate(),
            CodeScenario::Ldpc(p) => p.validate(),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            CodeScenario::Rs(_) => "rs",
            CodeScenario::Mbr(_) => "mbr",
            CodeScenario::MsrLowRate(_) => "msr-lr",
            CodeScenario::MsrHighRate(_) => "msr-hr",
            CodeScenario::Ldpc(_) => "ldpc",
        }
    }

    pub fn file_symbols(&self) -> f64 {
        match self {
            CodeScenario::Rs(p) => p.file_symbols,
            CodeScenario::Mbr(p) => p.file_symbols,
            CodeScenario::MsrLowRate(p) => p.file_symbols,
            CodeScenario::MsrHighRate(p) => p.file_symbols,
            CodeScenario::Ldpc(p) => p.file_symbols,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            CodeScenario::Rs(p) => p.n,
            CodeScenario::Mbr(p) => p.n,
            CodeScenario::MsrLowRate(p) => p.n,
            CodeScenario::MsrHighRate(p) => p.n(),
            CodeScenario::Ldpc(p) => p.n,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            CodeScenario::Rs(p) => p.k,
            CodeScenario::Mbr(p) => p.k,
            CodeScenario::MsrLowRate(p) => p.k,
            CodeScenario::MsrHighRate(p) => p.k(),
            CodeScenario::Ldpc(p) => p.k,
        }
    }

    /// Number of storage nodes.
    pub fn m(&self) -> usize {
        match self {
            CodeScenario::Rs(p) => p.m,
            CodeScenario::Mbr(p) => p.m,
            CodeScenario::MsrLowRate(p) => p.m,
            CodeScenario::MsrHighRate(p) => p.m(),
            CodeScenario::Ldpc(p) => p.m,
        }
    }

    /// Repair degree, where the family has one.
    pub fn d(&self) -> Option<usize> {
        match self {
            CodeScenario::Mbr(p) => Some(p.d),
            CodeScenario::MsrLowRate(p) => Some(p.d),
            CodeScenario::MsrHighRate(p) => Some(p.d()),
            CodeScenario::Rs(_) | CodeScenario::Ldpc(_) => None,
        }
    }

    /// Cost of repairing one node when `lost_nodes` storage nodes are gone.
    ///
    /// Lost symbols are `lost_nodes * n/m`; for LDPC the real-valued ratio
    /// is used, as in the analytic bound. High-rate MSR mixes systematic and
    /// non-systematic repairs by population weight.
    pub fn node_cost(&self, lost_nodes: usize) -> Result<Cost, CostError> {
        match self {
            CodeScenario::Rs(p) => rs_node_cost(p, lost_nodes * (p.n / p.m)),
            CodeScenario::Mbr(p) => mbr_node_cost(p, lost_nodes * (p.n / p.m)),
            CodeScenario::MsrLowRate(p) => msr_lr_node_cost(p, lost_nodes * (p.n / p.m)),
            CodeScenario::MsrHighRate(p) => msr_hr_mixed_node_cost(p, lost_nodes),
            CodeScenario::Ldpc(p) => {
                ldpc_node_cost_bound(p, lost_nodes as f64 * p.n as f64 / p.m as f64)
            }
        }
    }
}

/// Expected repair cost of a node over one lazy-repair window of length
/// `delta`, weighting each survivor count by its binomial probability. The
/// all-survive term contributes nothing. For LDPC this is an upper bound.
pub fn expected_cost(scenario: &CodeScenario, mu: f64, delta: f64) -> Result<Cost, CostError> {
    scenario.validate()?;
    let p = survival_probability(mu, delta)?;
    let m = scenario.m();
    let weights = binomial_pmf(m, p);
    let mut total = Cost::ZERO;
    for (survivors, &w) in weights.iter().enumerate().take(m) {
        if w > 0.0 {
            total = total + scenario.node_cost(m - survivors)? * w;
        }
    }
    Ok(total)
}
