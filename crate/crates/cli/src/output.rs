//! Artifact files. Every file is written to a temporary sibling first and
//! renamed into place, so readers never see a partial artifact.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use vsatlink_core::analysis::{BerReport, SpectrumEstimate};

use crate::config::ScenarioConfig;
use crate::pipeline::{DerivedParameters, SimulationRun};
use crate::CliError;

pub const BER_FILE: &str = "ber.json";
pub const RUN_LOG_FILE: &str = "run_log.json";
pub const CONSTELLATION_TX_FILE: &str = "constellation_tx.csv";
pub const CONSTELLATION_PRE_FILE: &str = "constellation_rx_precorrection.csv";
pub const CONSTELLATION_POST_FILE: &str = "constellation_rx_postcorrection.csv";
pub const SPECTRUM_TX_FILE: &str = "spectrum_tx.csv";
pub const SPECTRUM_RX_FILE: &str = "spectrum_rx.csv";

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `bytes` to `path` via write-then-rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn csv_bytes<R: Serialize>(
    header: [&str; 2],
    rows: impl IntoIterator<Item = R>,
) -> Result<Vec<u8>, CliError> {
    let to_io = |e: csv::Error| CliError::Io {
        path: "<csv buffer>".into(),
        source: e.into(),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(to_io)?;
    for r in rows {
        w.serialize(r).map_err(to_io)?;
    }
    w.into_inner().map_err(|e| CliError::Io {
        path: "<csv buffer>".into(),
        source: e.into_error(),
    })
}

/// `re,im` rows.
pub fn constellation_csv(points: &[Complex64]) -> Result<Vec<u8>, CliError> {
    csv_bytes(["re", "im"], points.iter().map(|p| (p.re, p.im)))
}

/// `freq_hz,psd_w_per_hz` rows.
pub fn spectrum_csv(s: &SpectrumEstimate) -> Result<Vec<u8>, CliError> {
    csv_bytes(
        ["freq_hz", "psd_w_per_hz"],
        s.frequencies_hz
            .iter()
            .zip(&s.psd_w_per_hz)
            .map(|(f, p)| (*f, *p)),
    )
}

/// Contents of `ber.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerSummary {
    pub ber: f64,
    pub bit_errors: u64,
    pub bits_compared: u64,
    pub alignment_delay_bits: u64,
    pub compensated: bool,
    pub precorrection: BerReport,
    pub postcorrection: BerReport,
}

impl BerSummary {
    pub fn new(run: &SimulationRun, cfg: &ScenarioConfig) -> Self {
        let main = run.ber(cfg);
        Self {
            ber: main.ber,
            bit_errors: main.bit_errors,
            bits_compared: main.bits_compared,
            alignment_delay_bits: main.alignment_delay_bits,
            compensated: cfg.compensation.any(),
            precorrection: run.ber_precorrection.clone(),
            postcorrection: run.ber_postcorrection.clone(),
        }
    }
}

/// Contents of `run_log.json`: the fully defaulted configuration plus every
/// value resolved at run time. `config` alone reproduces the run.
#[derive(Debug, Clone, Serialize)]
pub struct RunLog<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: &'a ScenarioConfig,
    pub derived: &'a DerivedParameters,
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("plain data serialises");
    s.push(b'\n');
    s
}

/// Writes all artifacts of `run` into `dir`, creating it if needed.
/// Returns the written paths in a fixed order.
pub fn write_artifacts(
    run: &SimulationRun,
    cfg: &ScenarioConfig,
    dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let tx_points =
        &run.tx_symbols.samples()[..cfg.analysis.constellation_points.min(run.tx_symbols.len())];
    let files: Vec<(&str, Vec<u8>)> = vec![
        (BER_FILE, json_bytes(&BerSummary::new(run, cfg))),
        (CONSTELLATION_TX_FILE, constellation_csv(tx_points)?),
        (
            CONSTELLATION_PRE_FILE,
            constellation_csv(run.snapshot(&run.rx_symbols_precorrection, cfg))?,
        ),
        (
            CONSTELLATION_POST_FILE,
            constellation_csv(run.snapshot(&run.rx_symbols_postcorrection, cfg))?,
        ),
        (SPECTRUM_TX_FILE, spectrum_csv(&run.tx_spectrum(cfg)?)?),
        (SPECTRUM_RX_FILE, spectrum_csv(&run.rx_spectrum(cfg)?)?),
        (
            RUN_LOG_FILE,
            json_bytes(&RunLog {
                tool: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                config: cfg,
                derived: &run.derived,
            }),
        ),
    ];
    files
        .into_iter()
        .map(|(name, bytes)| {
            let path = dir.join(name);
            write_atomic(&path, &bytes)?;
            Ok(path)
        })
        .collect()
}
