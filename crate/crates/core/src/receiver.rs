//! Receiver-side impairment compensation.
//!
//! Chain order: [`DcBlocker`] → [`Agc`] → [`PhaseFreqCorrector`]; the
//! matched filter ([`crate::modem::rx_match`]) follows.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::rotate;
use crate::{db_to_amplitude, ComplexFrame, Error, Result};

/// Default forgetting factor of the running DC estimate.
pub const DEFAULT_DC_FORGETTING: f64 = 0.999;

/// Removes a running exponentially weighted mean.
#[derive(Debug, Clone)]
pub struct DcBlocker {
    forgetting: f64,
    estimate: Complex64,
}

impl DcBlocker {
    pub fn new(forgetting: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&forgetting) {
            return Err(Error::param(
                "dc_forgetting_factor",
                format!("{forgetting} not in [0, 1)"),
            ));
        }
        Ok(Self {
            forgetting,
            estimate: Complex64::new(0.0, 0.0),
        })
    }

    pub fn estimate(&self) -> Complex64 {
        self.estimate
    }

    pub fn process(&mut self, x: &ComplexFrame) -> Result<ComplexFrame> {
        if x.is_empty() {
            return Err(Error::param("x", "DC removal needs a non-empty frame"));
        }
        let a = self.forgetting;
        Ok(x.map(|&s| {
            self.estimate = self.estimate * a + s * (1.0 - a);
            s - self.estimate
        }))
    }
}

/// One-shot DC removal with the default forgetting factor.
pub fn dc_offset_remove(x: &ComplexFrame) -> Result<ComplexFrame> {
    DcBlocker::new(DEFAULT_DC_FORGETTING)?.process(x)
}

/// Automatic gain control loop settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgcConfig {
    /// Target mean output power `|y|^2`.
    pub reference_power: f64,
    pub step_size: f64,
    /// Gain is held within ±`max_gain_db`.
    pub max_gain_db: f64,
}

impl Default for AgcConfig {
    fn default() -> Self {
        Self {
            reference_power: 10.0,
            step_size: 0.01,
            max_gain_db: 60.0,
        }
    }
}

impl AgcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.reference_power > 0.0 && self.reference_power.is_finite()) {
            return Err(Error::param("reference_power", "must be positive"));
        }
        if !(self.step_size > 0.0 && self.step_size <= 1.0) {
            return Err(Error::param("step_size", "must be in (0, 1]"));
        }
        if !(self.max_gain_db >= 0.0 && self.max_gain_db.is_finite()) {
            return Err(Error::param("max_gain_db", "must be >= 0"));
        }
        Ok(())
    }
}

/// Multiplicative proportional AGC.
///
/// Per sample: `y = g·x`, then `g ← g·(1 + μ(1 − |y|²/P_ref))`, with `g`
/// clamped to `[1/G_max, G_max]`.
#[derive(Debug, Clone)]
pub struct Agc {
    cfg: AgcConfig,
    gain: f64,
    max_gain: f64,
}

impl Agc {
    pub fn new(cfg: AgcConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            max_gain: db_to_amplitude(cfg.max_gain_db),
            gain: 1.0,
            cfg,
        })
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn process(&mut self, x: &ComplexFrame) -> ComplexFrame {
        let AgcConfig {
            reference_power,
            step_size,
            ..
        } = self.cfg;
        let (lo, hi) = (1.0 / self.max_gain, self.max_gain);
        x.map(|&s| {
            let y = s * self.gain;
            let err = 1.0 - y.norm_sqr() / reference_power;
            self.gain = (self.gain * (1.0 + step_size * err)).clamp(lo, hi);
            y
        })
    }
}

/// One-shot AGC starting from unit gain.
pub fn agc(x: &ComplexFrame, cfg: &AgcConfig) -> Result<ComplexFrame> {
    Ok(Agc::new(*cfg)?.process(x))
}

/// Inverse of [`crate::channel::phase_freq_offset`] starting at sample 0.
pub fn phase_freq_correct(x: &ComplexFrame, phase_deg: f64, freq_hz: f64) -> ComplexFrame {
    rotate(x, phase_deg.to_radians(), freq_hz, 0, -1.0)
}

/// Data-aided derotation with a persistent sample counter.
#[derive(Debug, Clone)]
pub struct PhaseFreqCorrector {
    phase_deg: f64,
    freq_hz: f64,
    counter: u64,
}

impl PhaseFreqCorrector {
    pub fn new(phase_deg: f64, freq_hz: f64) -> Self {
        Self {
            phase_deg,
            freq_hz,
            counter: 0,
        }
    }

    pub fn process(&mut self, x: &ComplexFrame) -> ComplexFrame {
        let out = rotate(
            x,
            self.phase_deg.to_radians(),
            self.freq_hz,
            self.counter,
            -1.0,
        );
        self.counter += x.len() as u64;
        out
    }
}

/// Compensation stages; `None` disables a stage.
#[derive(Debug, Clone, Default)]
pub struct Receiver {
    pub dc: Option<DcBlocker>,
    pub agc: Option<Agc>,
    pub corrector: Option<PhaseFreqCorrector>,
}

impl Receiver {
    pub fn process(&mut self, x: &ComplexFrame) -> Result<ComplexFrame> {
        let mut y = x.clone();
        if let Some(dc) = &mut self.dc {
            y = dc.process(&y)?;
        }
        if let Some(agc) = &mut self.agc {
            y = agc.process(&y);
        }
        if let Some(c) = &mut self.corrector {
            y = c.process(&y);
        }
        Ok(y)
    }
}
