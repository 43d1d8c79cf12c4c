//! CSV emission. Every float is written with Rust's shortest round-trip
//! formatting, so identical runs produce byte-identical files.

use std::io::Write;

use coachsim::churn_sim::{ExperimentRow, OptCompareRow};

pub const BASE_COLUMNS: [&str; 20] = [
    "preset",
    "code_family",
    "n",
    "k",
    "m",
    "d",
    "dv",
    "dc",
    "delta",
    "rho_d2d",
    "rho_bs",
    "tau_mean",
    "tau_ci95",
    "phi_mean",
    "phi_ci95",
    "gamma_mean",
    "gamma_ci95",
    "gamma_theory",
    "lost_nodes_mean",
    "starved_windows",
];

pub const OPT_COLUMNS: [&str; 9] = [
    "greepair_tau",
    "greepair_phi",
    "greepair_gamma",
    "opt1_tau",
    "opt1_phi",
    "opt2_gamma",
    "opt1_tau_improvement_pct",
    "opt1_phi_improvement_pct",
    "opt2_gamma_improvement_pct",
];

/// Rows of one output file.
#[derive(Debug, Clone, PartialEq)]
pub enum Rows {
    Simulation(Vec<ExperimentRow>),
    OptCompare(Vec<OptCompareRow>),
}

fn opt(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn base_record(preset: &str, r: &ExperimentRow) -> Vec<String> {
    vec![
        preset.to_string(),
        r.family.to_string(),
        r.n.to_string(),
        r.k.to_string(),
        r.m.to_string(),
        opt(r.d),
        opt(r.dv),
        opt(r.dc),
        r.delta.to_string(),
        r.prices.rho_d2d.to_string(),
        r.prices.rho_bs.to_string(),
        r.tau.mean.to_string(),
        r.tau.ci95.to_string(),
        r.phi.mean.to_string(),
        r.phi.ci95.to_string(),
        r.gamma.mean.to_string(),
        r.gamma.ci95.to_string(),
        r.gamma_theory.to_string(),
        r.lost_nodes_mean.to_string(),
        r.starved_windows.to_string(),
    ]
}

pub fn write_csv<W: Write>(out: W, preset: &str, rows: &Rows) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match rows {
        Rows::Simulation(rows) => {
            w.write_record(BASE_COLUMNS)?;
            for r in rows {
                w.write_record(base_record(preset, r))?;
            }
        }
        Rows::OptCompare(rows) => {
            w.write_record(BASE_COLUMNS.iter().chain(OPT_COLUMNS.iter()))?;
            for r in rows {
                let mut rec = base_record(preset, &r.base);
                rec.extend(
                    [
                        r.greepair_tau,
                        r.greepair_phi,
                        r.greepair_gamma,
                        r.opt1_tau,
                        r.opt1_phi,
                        r.opt2_gamma,
                        r.opt1_tau_improvement_pct,
                        r.opt1_phi_improvement_pct,
                        r.opt2_gamma_improvement_pct,
                    ]
                    .iter()
                    .map(f64::to_string),
                );
                w.write_record(rec)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
