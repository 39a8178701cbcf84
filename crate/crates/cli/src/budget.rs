//! Link-budget reports for the legs listed in a scenario.

use std::fmt::Write as _;

use serde::Serialize;
use vsatlink_core::linkbudget::{combined_cn_db, compute_budget, LinkBudgetReport};

use crate::config::ScenarioConfig;
use crate::{at, CliError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetOutput {
    pub legs: Vec<LinkBudgetReport>,
    /// Cascade of the legs' C/N; not part of the per-leg balance.
    pub combined_cn_db: Option<f64>,
}

pub fn run_linkbudget(cfg: &ScenarioConfig) -> Result<BudgetOutput, CliError> {
    if cfg.budget_legs.is_empty() {
        return Err(CliError::Config("budget_legs: no legs configured".into()));
    }
    let legs = cfg
        .budget_legs
        .iter()
        .map(|leg| at("link budget", compute_budget(leg)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BudgetOutput {
        combined_cn_db: combined_cn_db(&legs),
        legs,
    })
}

/// Received power had the computed free-space loss been used.
pub fn rx_power_with_computed_loss_dbw(r: &LinkBudgetReport) -> f64 {
    r.rx_power_dbw + r.path_loss_db - r.path_loss_computed_db
}

/// Fixed-width text table, one block per leg.
pub fn render_table(out: &BudgetOutput) -> String {
    let mut s = String::new();
    let line = |s: &mut String, label: &str, v: f64, unit: &str, note: &str| {
        let _ = writeln!(s, "  {label:<30}{v:>10.2} {unit:<4}{note}");
    };
    for r in &out.legs {
        let _ = writeln!(s, "[{}]", r.name);
        line(&mut s, "Tx power", r.tx_power_dbw, "dBW", "");
        line(&mut s, "Tx antenna gain", r.tx_antenna_gain_db, "dB", "");
        line(&mut s, "Pointing loss", r.pointing_loss_db, "dB", "");
        line(&mut s, "EIRP", r.eirp_dbw, "dBW", "");
        match r.path_loss_override_db {
            Some(o) => {
                line(
                    &mut s,
                    "Path loss (computed)",
                    r.path_loss_computed_db,
                    "dB",
                    "",
                );
                line(&mut s, "Path loss (override)", o, "dB", " used");
            }
            None => line(
                &mut s,
                "Path loss (computed)",
                r.path_loss_computed_db,
                "dB",
                " used",
            ),
        }
        line(&mut s, "Rx antenna gain", r.rx_gain_db, "dB", "");
        line(&mut s, "Rx power", r.rx_power_dbw, "dBW", "");
        if r.path_loss_override_db.is_some() {
            line(
                &mut s,
                "Rx power (computed loss)",
                rx_power_with_computed_loss_dbw(r),
                "dBW",
                "",
            );
        }
        line(&mut s, "Noise power", r.noise_power_dbw, "dBW", "");
        line(&mut s, "C/N", r.cn_db, "dB", "");
        s.push('\n');
    }
    if let (Some(cn), true) = (out.combined_cn_db, out.legs.len() > 1) {
        let _ = writeln!(s, "Combined C/N over all legs (extension): {cn:.2} dB");
    }
    s
}
