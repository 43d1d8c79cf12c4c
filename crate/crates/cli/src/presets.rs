//! Built-in experiments reproducing the paper's comparisons.
//!
//! All presets share `mu = lambda = 1`, a cell of `N = 100` devices, a file
//! of 131072 symbols, binomial survival and ten-thousand trials per point.

use clap::ValueEnum;

use crate::config::{ArraySpec, ExperimentPreset, ReferenceCode, RunKind, ScenarioSpec};
use coachsim::churn_sim::ChurnMode;
use coachsim::opt_search::DEFAULT_CAP;

pub const FILE_SYMBOLS: f64 = 131_072.0;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_TRIALS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    RateHalf,
    RateThreeQuarters,
    BlocklengthSweep,
    OptCompare,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::RateHalf,
        Preset::RateThreeQuarters,
        Preset::BlocklengthSweep,
        Preset::OptCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::RateHalf => "rate-half",
            Preset::RateThreeQuarters => "rate-three-quarters",
            Preset::BlocklengthSweep => "blocklength-sweep",
            Preset::OptCompare => "opt-compare",
        }
    }

    pub fn experiment(self) -> ExperimentPreset {
        match self {
            Preset::RateHalf => rate_half(),
            Preset::RateThreeQuarters => rate_three_quarters(),
            Preset::BlocklengthSweep => blocklength_sweep(),
            Preset::OptCompare => opt_compare(),
        }
    }
}

/// `0.1, 0.2, ..., 1.0`.
pub fn delta_grid() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

fn base(name: &str, prices: &[[f64; 2]], reference: ReferenceCode, scenario: Vec<ScenarioSpec>) -> ExperimentPreset {
    ExperimentPreset {
        name: name.to_string(),
        kind: RunKind::Simulate,
        seed: DEFAULT_SEED,
        trials: DEFAULT_TRIALS,
        windows: 1,
        deltas: delta_grid(),
        prices: prices.to_vec(),
        mu: 1.0,
        lambda: 1.0,
        initial_nodes: 100,
        churn_mode: ChurnMode::BinomialSurvival,
        file_symbols: FILE_SYMBOLS,
        search_cap: DEFAULT_CAP,
        reference,
        scenario,
    }
}

fn ldpc(q: usize, kk: usize, m: usize) -> ScenarioSpec {
    ScenarioSpec::Ldpc {
        m,
        array: Some(ArraySpec { q, j: 2, kk }),
        alist: None,
        reference: None,
    }
}

pub fn rate_half() -> ExperimentPreset {
    let (n, k, m) = (24, 12, 24);
    base(
        "rate-half",
        &[[1.0, 1.2], [1.0, 12.0], [1.0, 17.0], [1.0, 26.0]],
        ReferenceCode { n, k, m },
        vec![
            ScenarioSpec::Rs { n, k, m, reference: None },
            ScenarioSpec::Mbr { n, k, m, d: 23, reference: None },
            ScenarioSpec::MsrLr { n, k, m, d: 23, reference: None },
            ldpc(227, 4, m),
        ],
    )
}

pub fn rate_three_quarters() -> ExperimentPreset {
    let (n, k, m) = (24, 18, 24);
    base(
        "rate-three-quarters",
        &[[1.0, 3.0], [1.0, 18.0], [1.0, 24.0], [1.0, 50.0]],
        ReferenceCode { n, k, m },
        vec![
            ScenarioSpec::Rs { n, k, m, reference: None },
            ScenarioSpec::Mbr { n, k, m, d: 23, reference: None },
            // (n, k) = (23, 18) on 23 nodes, scaled to the 24-node cell
            ScenarioSpec::MsrHr {
                t: 5,
                z: 3,
                report_scale: Some(23.0 / 24.0),
                reference: None,
            },
            ldpc(257, 8, m),
        ],
    )
}

pub fn blocklength_sweep() -> ExperimentPreset {
    // Every sweep code has rate 3/4, so one 25-node rate-3/4 reference
    // serves all of them.
    base(
        "blocklength-sweep",
        &[[1.0, 1.2], [1.0, 3.0], [1.0, 16.0]],
        ReferenceCode { n: 100, k: 75, m: 25 },
        [31, 53, 137, 271, 503].iter().map(|&q| ldpc(q, 8, 25)).collect(),
    )
}

pub fn opt_compare() -> ExperimentPreset {
    let code = |m: usize| ScenarioSpec::Ldpc {
        m,
        array: Some(ArraySpec { q: 23, j: 2, kk: 8 }),
        alist: None,
        reference: Some(ReferenceCode { n: 184, k: 138, m }),
    };
    let mut p = base(
        "opt-compare",
        &[[1.0, 10.0], [1.0, 20.0]],
        ReferenceCode { n: 184, k: 138, m: 62 },
        // ceil(184 / 62) = 3 and ceil(184 / 31) = 6 symbols per node
        vec![code(62), code(31)],
    );
    p.kind = RunKind::OptCompare;
    p.deltas = vec![0.1, 0.4, 0.7];
    p
}
