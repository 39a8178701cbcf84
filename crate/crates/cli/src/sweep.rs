//! One-parameter sweeps over a scenario.
//!
//! The swept key is a dotted path into the fully defaulted configuration
//! (`target_es_n0_db`, `impairments.phase_offset_deg`, ...). Point `i` runs
//! with master seed `derive_seed(seed, i)`, so points are independent but the
//! whole sweep is reproducible. Points run in parallel; rows come back in
//! sweep order.

use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{Number, Value};

use crate::config::ScenarioConfig;
use crate::output::write_atomic;
use crate::pipeline;
use crate::{derive_seed, CliError};

/// Inclusive arithmetic range `start:stop:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl FromStr for SweepRange {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Config(format!("--values: expected start:stop:step, got {s:?}"));
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        if ![start, stop, step].iter().all(|v| v.is_finite()) {
            return Err(bad());
        }
        if step <= 0.0 {
            return Err(CliError::Config("--values: step must be positive".into()));
        }
        Ok(Self { start, stop, step })
    }
}

impl SweepRange {
    /// Points `start + i·step` up to `stop`, with a small tolerance so
    /// decimal steps reach the end point.
    pub fn values(&self) -> Vec<f64> {
        if self.stop < self.start {
            return Vec::new();
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub swept_value: f64,
    pub ber: f64,
    pub errors: u64,
    pub bits: u64,
}

/// Copy of `base` with the scalar at `key` set to `value`.
pub fn with_parameter(
    base: &ScenarioConfig,
    key: &str,
    value: f64,
) -> Result<ScenarioConfig, CliError> {
    let mut doc = serde_json::to_value(base).expect("config serialises");
    let mut slot = &mut doc;
    for part in key.split('.') {
        slot = slot
            .as_object_mut()
            .and_then(|m| m.get_mut(part))
            .ok_or_else(|| CliError::Config(format!("--param: unknown key {key:?}")))?;
    }
    let new = match slot {
        // Optional real-valued keys are null until set.
        Value::Null => Number::from_f64(value).map(Value::Number),
        Value::Number(n) if n.is_f64() => Number::from_f64(value).map(Value::Number),
        Value::Number(_) if value.fract() == 0.0 && value >= 0.0 => {
            Some(Value::Number(Number::from(value as u64)))
        }
        Value::Number(_) => {
            return Err(CliError::Config(format!(
                "--param: {key} takes non-negative integers, got {value}"
            )))
        }
        _ => {
            return Err(CliError::Config(format!(
                "--param: {key} is not a scalar numeric parameter"
            )))
        }
    };
    *slot = new.ok_or_else(|| CliError::Config(format!("--param: {value} is not finite")))?;
    ScenarioConfig::from_value(doc)
}

/// Runs every point and returns rows in sweep order.
pub fn run_sweep(
    base: &ScenarioConfig,
    key: &str,
    range: &SweepRange,
) -> Result<Vec<SweepRow>, CliError> {
    let values = range.values();
    if values.is_empty() {
        return Err(CliError::Config("--values: the sweep has no points".into()));
    }
    // Resolve every point up front so config errors surface before any work.
    let configs = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut cfg = with_parameter(base, key, v)?;
            cfg.seed = derive_seed(base.seed, i as u64);
            Ok((v, cfg))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    configs
        .par_iter()
        .map(|(v, cfg)| {
            let run = pipeline::run(cfg)?;
            let r = run.ber(cfg);
            Ok(SweepRow {
                swept_value: *v,
                ber: r.ber,
                errors: r.bit_errors,
                bits: r.bits_compared,
            })
        })
        .collect()
}

/// `swept_value,ber,errors,bits` CSV.
pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>, CliError> {
    let to_io = |e: csv::Error| CliError::Io {
        path: "<csv buffer>".into(),
        source: e.into(),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(to_io)?;
    }
    w.into_inner().map_err(|e| CliError::Io {
        path: "<csv buffer>".into(),
        source: e.into_error(),
    })
}

pub fn write_sweep(rows: &[SweepRow], path: &std::path::Path) -> Result<(), CliError> {
    write_atomic(path, &sweep_csv(rows)?)
}
