//! Experiment files: a TOML description of one run, and its expansion into
//! simulator configurations.
//!
//! Presets are ordinary [`ExperimentPreset`] values, so anything a preset can
//! express can also be written to disk and loaded back.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use coachsim::churn_sim::{ChurnMode, SimConfig};
use coachsim::code_model::{build_array_ldpc, load_alist, ArrayCodeSpec, ParityCheckMatrix};
use coachsim::cost_models::{
    CodeScenario, CostParams, LdpcParams, MbrParams, MsrHighRateParams, MsrLowRateParams, RsParams,
};
use coachsim::opt_search::DEFAULT_CAP;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::Spanned;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}, line {line}: {message}")]
    Invalid {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Preset(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// What a run measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunKind {
    /// Simulated and analytic cost for every scenario.
    #[default]
    Simulate,
    /// Greepair against the exhaustive optimum (LDPC scenarios only).
    OptCompare,
}

/// Code whose node size is the unit of every reported cost: one node holds
/// `file_symbols * n / (k * m)` symbols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceCode {
    pub n: usize,
    pub k: usize,
    pub m: usize,
}

impl ReferenceCode {
    pub fn node_symbols(&self, file_symbols: f64) -> f64 {
        file_symbols * self.n as f64 / (self.k * self.m) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySpec {
    pub q: usize,
    pub j: usize,
    pub kk: usize,
}

/// One code under test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScenarioSpec {
    Rs {
        n: usize,
        k: usize,
        m: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference: Option<ReferenceCode>,
    },
    Mbr {
        n: usize,
        k: usize,
        m: usize,
        d: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference: Option<ReferenceCode>,
    },
    MsrLr {
        n: usize,
        k: usize,
        m: usize,
        d: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference: Option<ReferenceCode>,
    },
    /// `n = (t+1) z + t`, `k = (t+1) z`, one node per code symbol.
    MsrHr {
        t: usize,
        z: usize,
        /// Multiplier on reported costs, e.g. `23/24` when a 23-node code
        /// is compared against 24-node ones.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        report_scale: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference: Option<ReferenceCode>,
    },
    /// Exactly one of `array` and `alist` must be given. A relative `alist`
    /// path is resolved against the experiment file's directory.
    Ldpc {
        m: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        array: Option<ArraySpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alist: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference: Option<ReferenceCode>,
    },
}

impl ScenarioSpec {
    fn reference(&self) -> Option<ReferenceCode> {
        match self {
            ScenarioSpec::Rs { reference, .. }
            | ScenarioSpec::Mbr { reference, .. }
            | ScenarioSpec::MsrLr { reference, .. }
            | ScenarioSpec::MsrHr { reference, .. }
            | ScenarioSpec::Ldpc { reference, .. } => *reference,
        }
    }
}

fn default_windows() -> usize {
    1
}
fn default_rate() -> f64 {
    1.0
}
fn default_population() -> usize {
    100
}
fn default_cap() -> usize {
    DEFAULT_CAP
}

/// A complete, self-contained experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPreset {
    pub name: String,
    #[serde(default)]
    pub kind: RunKind,
    pub seed: u64,
    pub trials: usize,
    #[serde(default = "default_windows")]
    pub windows: usize,
    /// Repair intervals to sweep.
    pub deltas: Vec<f64>,
    /// `[rho_d2d, rho_bs]` pairs.
    pub prices: Vec<[f64; 2]>,
    #[serde(default = "default_rate")]
    pub mu: f64,
    #[serde(default = "default_rate")]
    pub lambda: f64,
    #[serde(default = "default_population")]
    pub initial_nodes: usize,
    #[serde(default)]
    pub churn_mode: ChurnMode,
    pub file_symbols: f64,
    /// Largest per-node loss the exhaustive search accepts.
    #[serde(default = "default_cap")]
    pub search_cap: usize,
    pub reference: ReferenceCode,
    pub scenario: Vec<ScenarioSpec>,
}

/// Source positions of the entries that carry semantic constraints.
#[derive(Deserialize)]
struct Spans {
    #[serde(default)]
    scenario: Vec<Spanned<toml::Table>>,
    prices: Option<Spanned<toml::Value>>,
    deltas: Option<Spanned<toml::Value>>,
    reference: Option<Spanned<toml::Value>>,
}

/// Line numbers used when reporting invalid values.
#[derive(Debug, Clone, Default)]
pub struct Lines {
    pub scenario: Vec<usize>,
    pub prices: usize,
    pub deltas: usize,
    pub reference: usize,
    pub top: usize,
}

/// One simulator invocation produced by expanding an experiment.
#[derive(Debug, Clone)]
pub struct PlannedRun {
    pub scenario_index: usize,
    pub config: SimConfig,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

impl ExperimentPreset {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment presets always serialise")
    }

    /// Parses an experiment file without validating it.
    pub fn parse(text: &str, path: &str) -> Result<(Self, Lines), ConfigError> {
        let parse_err = |e: toml::de::Error| ConfigError::Parse {
            path: path.to_string(),
            message: e.to_string().trim_end().to_string(),
        };
        let preset: ExperimentPreset = toml::from_str(text).map_err(parse_err)?;
        let spans: Spans = toml::from_str(text).map_err(parse_err)?;
        let at = |s: &Option<Spanned<toml::Value>>| s.as_ref().map_or(1, |v| line_of(text, v.span().start));
        let lines = Lines {
            scenario: spans.scenario.iter().map(|s| line_of(text, s.span().start)).collect(),
            prices: at(&spans.prices),
            deltas: at(&spans.deltas),
            reference: at(&spans.reference),
            top: 1,
        };
        Ok((preset, lines))
    }

    /// Reads, parses and validates an experiment file.
    pub fn load(path: &Path) -> Result<(Self, Vec<PlannedRun>), ConfigError> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: display.clone(),
            source,
        })?;
        let (preset, lines) = Self::parse(&text, &display)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let runs = preset.expand(base, &lines, &display)?;
        Ok((preset, runs))
    }

    /// Validates the experiment and expands it into one simulator
    /// configuration per (scenario, delta), scenario-major.
    pub fn expand(&self, base_dir: &Path, lines: &Lines, path: &str) -> Result<Vec<PlannedRun>, ConfigError> {
        let invalid = |line: usize, message: String| ConfigError::Invalid {
            path: path.to_string(),
            line,
            message,
        };
        let prices = self
            .prices
            .iter()
            .map(|&[d2d, bs]| {
                CostParams::new(d2d, bs).map_err(|e| invalid(lines.prices, format!("price pair [{d2d}, {bs}]: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if prices.is_empty() {
            return Err(invalid(lines.prices, "at least one price pair is required".into()));
        }
        if self.deltas.is_empty() {
            return Err(invalid(lines.deltas, "at least one delta is required".into()));
        }
        if self.scenario.is_empty() {
            return Err(invalid(lines.top, "at least one [[scenario]] is required".into()));
        }
        let check_reference = |r: &ReferenceCode, line: usize| {
            if r.n == 0 || r.k == 0 || r.m == 0 || r.k > r.n {
                Err(invalid(line, format!("reference code ({}, {}, m = {}) is not valid", r.n, r.k, r.m)))
            } else {
                Ok(())
            }
        };
        check_reference(&self.reference, lines.reference)?;
        let mut runs = Vec::new();
        for (index, spec) in self.scenario.iter().enumerate() {
            let line = lines.scenario.get(index).copied().unwrap_or(lines.top);
            let reference = spec.reference().unwrap_or(self.reference);
            check_reference(&reference, line)?;
            let (scenario, matrix, report_scale) =
                self.build_scenario(spec, base_dir).map_err(|m| invalid(line, m))?;
            if self.kind == RunKind::OptCompare && matrix.is_none() {
                return Err(invalid(line, "opt-compare runs accept only LDPC scenarios".into()));
            }
            for &delta in &self.deltas {
                let config = SimConfig {
                    initial_nodes: self.initial_nodes,
                    lambda: self.lambda,
                    mu: self.mu,
                    delta,
                    windows: self.windows,
                    trials: self.trials,
                    seed: self.seed,
                    scenario,
                    matrix: matrix.clone(),
                    prices: prices.clone(),
                    churn_mode: self.churn_mode,
                    reference_node_symbols: reference.node_symbols(self.file_symbols),
                    report_scale,
                };
                let line = if delta.is_finite() && delta >= 0.0 { line } else { lines.deltas };
                config.validate().map_err(|e| invalid(line, e.to_string()))?;
                runs.push(PlannedRun {
                    scenario_index: index,
                    config,
                });
            }
        }
        Ok(runs)
    }

    fn build_scenario(
        &self,
        spec: &ScenarioSpec,
        base_dir: &Path,
    ) -> Result<(CodeScenario, Option<Arc<ParityCheckMatrix>>, f64), String> {
        let f = self.file_symbols;
        let scenario = match *spec {
            ScenarioSpec::Rs { n, k, m, .. } => CodeScenario::Rs(RsParams {
                file_symbols: f,
                n,
                k,
                m,
            }),
            ScenarioSpec::Mbr { n, k, m, d, .. } => CodeScenario::Mbr(MbrParams {
                file_symbols: f,
                n,
                k,
                m,
                d,
            }),
            ScenarioSpec::MsrLr { n, k, m, d, .. } => CodeScenario::MsrLowRate(MsrLowRateParams {
                file_symbols: f,
                n,
                k,
                m,
                d,
            }),
            ScenarioSpec::MsrHr { t, z, report_scale, .. } => {
                let s = CodeScenario::MsrHighRate(MsrHighRateParams { file_symbols: f, t, z });
                s.validate().map_err(|e| e.to_string())?;
                return Ok((s, None, report_scale.unwrap_or(1.0)));
            }
            ScenarioSpec::Ldpc {
                m,
                ref array,
                ref alist,
                ..
            } => {
                let h = match (array, alist) {
                    (Some(a), None) => ArrayCodeSpec::new(a.q, a.j, a.kk)
                        .and_then(build_array_ldpc)
                        .map_err(|e| e.to_string())?,
                    (None, Some(p)) => {
                        let full = base_dir.join(p);
                        let text = std::fs::read_to_string(&full)
                            .map_err(|e| format!("cannot read {}: {e}", full.display()))?;
                        load_alist(&text).map_err(|e| format!("{}: {e}", full.display()))?
                    }
                    _ => return Err("an LDPC scenario needs exactly one of `array` and `alist`".into()),
                };
                let s = CodeScenario::Ldpc(LdpcParams {
                    file_symbols: f,
                    n: h.n(),
                    k: h.k(),
                    m,
                    dv: h.max_col_degree(),
                    dc: h.max_row_degree(),
                });
                s.validate().map_err(|e| e.to_string())?;
                return Ok((s, Some(Arc::new(h)), 1.0));
            }
        };
        scenario.validate().map_err(|e| e.to_string())?;
        Ok((scenario, None, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
name = "small"
seed = 3
trials = 10
deltas = [0.1, 0.5]
prices = [[1.0, 2.0]]
file_symbols = 1200.0

[reference]
n = 24
k = 12
m = 24

[[scenario]]
family = "rs"
n = 24
k = 12
m = 24

[[scenario]]
family = "mbr"
n = 24
k = 12
m = 24
d = 23
"#;

    fn expand(text: &str) -> Result<Vec<PlannedRun>, ConfigError> {
        let (p, lines) = ExperimentPreset::parse(text, "test.toml")?;
        p.expand(Path::new("."), &lines, "test.toml")
    }

    #[test]
    fn small_file_expands_scenario_major() {
        let runs = expand(SMALL).unwrap();
        assert_eq!(runs.len(), 4);
        assert_eq!(runs[1].scenario_index, 0);
        assert_eq!(runs[1].config.delta, 0.5);
        assert_eq!(runs[2].config.scenario.family(), "mbr");
        assert_eq!(runs[0].config.windows, 1);
        assert_eq!(runs[0].config.initial_nodes, 100);
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let text = SMALL.replace("d = 23", "d = 23\ncolour = 1");
        let err = expand(&text).unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn mbr_with_small_repair_degree_is_rejected() {
        let err = expand(&SMALL.replace("d = 23", "d = 11")).unwrap_err();
        match err {
            // header of the offending [[scenario]] table
            ConfigError::Invalid { line, .. } => assert_eq!(line, 20),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn cheaper_base_station_is_rejected() {
        let err = expand(&SMALL.replace("[[1.0, 2.0]]", "[[2.0, 1.0]]")).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, ConfigError::Invalid { line: 6, .. }), "{msg}");
        assert!(msg.contains("price"), "{msg}");
    }

    #[test]
    fn ldpc_needs_one_matrix_source() {
        let text = format!("{SMALL}\n[[scenario]]\nfamily = \"ldpc\"\nm = 4\n");
        assert!(expand(&text).unwrap_err().to_string().contains("exactly one"));
        let text = format!("{SMALL}\n[[scenario]]\nfamily = \"ldpc\"\nm = 4\narray = {{ q = 5, j = 2, kk = 4 }}\n");
        let runs = expand(&text).unwrap();
        assert_eq!(runs[4].config.scenario.n(), 20);
        assert!(runs[4].config.matrix.is_some());
    }
}
