//! modem → channel → receiver → analysis, end to end.

use serde::Serialize;
use vsatlink_core::analysis::{
    estimate_delay_symbols, estimate_psd, measure_ber, pipeline_delay_bits, BerReport,
    SpectrumEstimate,
};
use vsatlink_core::channel::{saleh_power_gain_db, Channel, PowerMode};
use vsatlink_core::modem::{
    generate_bits, qam_demodulate, qam_modulate, rx_match, tx_shape, BitFrame,
};
use vsatlink_core::receiver::{Agc, DcBlocker, PhaseFreqCorrector, Receiver};
use vsatlink_core::{ComplexFrame, Error};

use crate::config::{Mode, ScenarioConfig};
use crate::{at, derive_seed, CliError};

/// Seed stream indices below the scenario's master seed.
const BIT_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

/// Correlation block length for the delay cross-check, symbols.
const DELAY_BLOCK_SYMBOLS: usize = 64;

/// Values resolved while running, recorded next to the configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedParameters {
    pub bits_per_symbol: usize,
    pub symbol_rate_hz: f64,
    pub sample_rate_hz: f64,
    pub filter_taps: usize,
    pub mean_symbol_energy: f64,
    pub tx_waveform_power: f64,
    /// Mean TWTA power gain for this waveform; 0 dB without a TWTA.
    pub twta_power_gain_db: f64,
    /// Transponder gain in effect (physical mode only).
    pub transponder_gain_db: Option<f64>,
    pub transponder_gain_auto_closed: bool,
    pub agc_reference_power: f64,
    pub noise_variance_per_sample: f64,
    pub bit_seed: u64,
    pub noise_seed: u64,
    pub pipeline_delay_bits: usize,
    pub correlation_delay_symbols: Option<usize>,
    pub snapshot_skip_symbols: usize,
}

/// Everything a run produces in memory.
#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub tx_bits: BitFrame,
    pub tx_symbols: ComplexFrame,
    pub tx_waveform: ComplexFrame,
    /// Channel output, before any compensation.
    pub rx_waveform: ComplexFrame,
    /// Matched-filter outputs at symbol instants, pipeline delay included.
    pub rx_symbols_precorrection: ComplexFrame,
    pub rx_symbols_postcorrection: ComplexFrame,
    pub ber_precorrection: BerReport,
    pub ber_postcorrection: BerReport,
    pub derived: DerivedParameters,
}

impl SimulationRun {
    /// The headline BER: post-correction when any stage is enabled.
    pub fn ber(&self, cfg: &ScenarioConfig) -> &BerReport {
        if cfg.compensation.any() {
            &self.ber_postcorrection
        } else {
            &self.ber_precorrection
        }
    }

    pub fn tx_spectrum(&self, cfg: &ScenarioConfig) -> Result<SpectrumEstimate, CliError> {
        spectrum(&self.tx_waveform, cfg)
    }

    pub fn rx_spectrum(&self, cfg: &ScenarioConfig) -> Result<SpectrumEstimate, CliError> {
        spectrum(&self.rx_waveform, cfg)
    }

    /// Matched-filter points after the filter and loop transients.
    pub fn snapshot<'a>(
        &self,
        x: &'a ComplexFrame,
        cfg: &ScenarioConfig,
    ) -> &'a [num_complex::Complex64] {
        let skip = self.derived.snapshot_skip_symbols.min(x.len());
        let valid = &x.samples()[skip..];
        let n = cfg
            .analysis
            .constellation_points
            .min(self.tx_symbols.len().saturating_sub(skip))
            .min(valid.len());
        &valid[..n]
    }
}

fn spectrum(x: &ComplexFrame, cfg: &ScenarioConfig) -> Result<SpectrumEstimate, CliError> {
    at(
        "spectrum",
        estimate_psd(x, cfg.analysis.psd_segment_len, cfg.analysis.psd_overlap),
    )
}

/// Runs the whole chain for a validated scenario.
pub fn run(cfg: &ScenarioConfig) -> Result<SimulationRun, CliError> {
    cfg.validate()?;
    let modem = &cfg.modem;
    let bit_seed = derive_seed(cfg.seed, BIT_STREAM);
    let noise_seed = derive_seed(cfg.seed, NOISE_STREAM);

    let tx_bits = at("bit source", generate_bits(cfg.total_bits, 0.5, bit_seed))?;
    let tx_symbols = at("modulation", qam_modulate(&tx_bits, modem))?;
    let tx_waveform = at("pulse shaping", tx_shape(&tx_symbols, modem))?;
    if tx_symbols.len() <= 2 * modem.group_delay_symbols() {
        return Err(CliError::Pipeline {
            stage: "analysis",
            source: Error::InsufficientData {
                needed: 2 * modem.group_delay_symbols() + 1,
                got: tx_symbols.len(),
            },
        });
    }

    let twta_power_gain_db = match &cfg.saleh {
        Some(p) => at("TWTA", saleh_power_gain_db(&tx_waveform, p))?,
        None => 0.0,
    };
    let (gains, mode) = match cfg.mode {
        Mode::Physical => (cfg.gains.closed(twta_power_gain_db), PowerMode::Physical),
        Mode::Normalized => (
            cfg.gains.clone(),
            PowerMode::Normalized {
                es_n0_db: cfg.target_es_n0_db,
                samples_per_symbol: modem.samples_per_symbol,
            },
        ),
    };
    let transponder_gain_db = match cfg.mode {
        Mode::Physical => gains.transponder_amp_gain_db,
        Mode::Normalized => None,
    };
    let mut impairments = cfg.impairments.clone();
    impairments.seed = noise_seed;
    let mut channel = at("channel", Channel::new(gains, cfg.saleh, impairments, mode))?;
    let noise_variance = channel.noise_variance(modem.sample_rate_hz(), tx_waveform.mean_power());
    let rx_waveform = at("channel", channel.process(&tx_waveform))?;

    let agc_cfg = cfg.agc_config();
    let flags = cfg.compensation;
    let mut receiver = Receiver {
        dc: if flags.dc {
            Some(at(
                "DC removal",
                DcBlocker::new(cfg.receiver.dc_forgetting_factor),
            )?)
        } else {
            None
        },
        agc: if flags.agc {
            Some(at("AGC", Agc::new(agc_cfg))?)
        } else {
            None
        },
        corrector: flags.phase_freq.then(|| {
            PhaseFreqCorrector::new(
                cfg.impairments.phase_offset_deg,
                cfg.impairments.freq_offset_hz,
            )
        }),
    };
    let compensated = at("receiver", receiver.process(&rx_waveform))?;

    let rx_symbols_precorrection = at("matched filter", rx_match(&rx_waveform, modem))?;
    let rx_symbols_postcorrection = at("matched filter", rx_match(&compensated, modem))?;

    let delay_bits = pipeline_delay_bits(modem);
    let demod_ber = |y: &ComplexFrame| -> Result<BerReport, CliError> {
        let bits = at("demodulation", qam_demodulate(y, modem))?;
        at("BER", measure_ber(&tx_bits, &bits, delay_bits))
    };
    let ber_precorrection = demod_ber(&rx_symbols_precorrection)?;
    let ber_postcorrection = demod_ber(&rx_symbols_postcorrection)?;

    let correlation_delay_symbols = estimate_delay_symbols(
        tx_symbols.samples(),
        rx_symbols_postcorrection.samples(),
        4 * modem.group_delay_symbols(),
        DELAY_BLOCK_SYMBOLS,
    );
    let derived = DerivedParameters {
        bits_per_symbol: modem.bits_per_symbol(),
        symbol_rate_hz: modem.symbol_rate_hz(),
        sample_rate_hz: modem.sample_rate_hz(),
        filter_taps: modem.filter_span_symbols * modem.samples_per_symbol + 1,
        mean_symbol_energy: modem.mean_symbol_energy(),
        tx_waveform_power: tx_waveform.mean_power(),
        twta_power_gain_db,
        transponder_gain_db,
        transponder_gain_auto_closed: cfg.mode == Mode::Physical
            && cfg.gains.transponder_amp_gain_db.is_none(),
        agc_reference_power: agc_cfg.reference_power,
        noise_variance_per_sample: noise_variance,
        bit_seed,
        noise_seed,
        pipeline_delay_bits: delay_bits,
        correlation_delay_symbols,
        // One span of filter delay plus one span for the loops to settle.
        snapshot_skip_symbols: 2 * modem.group_delay_symbols(),
    };
    Ok(SimulationRun {
        tx_bits,
        tx_symbols,
        tx_waveform,
        rx_waveform,
        rx_symbols_precorrection,
        rx_symbols_postcorrection,
        ber_precorrection,
        ber_postcorrection,
        derived,
    })
}
