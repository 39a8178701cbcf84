//! Transmit chain and RF impairments between the modulator and the receiver.
//!
//! [`Channel`] composes, in order: Saleh TWTA → Tx dish gain → uplink loss →
//! satellite Rx gain → transponder amplifier → satellite Tx gain → downlink
//! loss → phase/frequency offset → Rx dish gain → thermal noise → I/Q
//! imbalance and DC offset.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{db_to_amplitude, power_to_db, ComplexFrame, Error, Result, BOLTZMANN};

/// Saleh travelling-wave-tube amplifier model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SalehParams {
    pub input_scale_db: f64,
    pub amam_alpha: f64,
    pub amam_beta: f64,
    /// AM/PM numerator, radians.
    pub ampm_alpha: f64,
    pub ampm_beta: f64,
    pub output_scale_db: f64,
}

impl Default for SalehParams {
    fn default() -> Self {
        Self {
            input_scale_db: -16.1821,
            amam_alpha: 2.1587,
            amam_beta: 1.1517,
            ampm_alpha: 4.0033,
            ampm_beta: 9.1040,
            output_scale_db: 32.9118,
        }
    }
}

impl SalehParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.amam_beta > 0.0) {
            return Err(Error::param("amam_beta", "must be positive"));
        }
        if !(self.ampm_beta > 0.0) {
            return Err(Error::param("ampm_beta", "must be positive"));
        }
        Ok(())
    }

    /// Output amplitude for normalised input amplitude `r` (no scalings).
    pub fn am_am(&self, r: f64) -> f64 {
        self.amam_alpha * r / (1.0 + self.amam_beta * r * r)
    }

    /// Added phase in radians for normalised input amplitude `r`.
    pub fn am_pm(&self, r: f64) -> f64 {
        self.ampm_alpha * r * r / (1.0 + self.ampm_beta * r * r)
    }

    /// Input amplitude at which AM/AM saturates, `1/√β`.
    pub fn saturation_input(&self) -> f64 {
        1.0 / self.amam_beta.sqrt()
    }

    /// Peak of the AM/AM curve, `α/(2√β)`.
    pub fn saturation_output(&self) -> f64 {
        self.amam_alpha / (2.0 * self.amam_beta.sqrt())
    }

    /// Limit of the AM/PM curve as `r → ∞`, radians.
    pub fn ampm_limit(&self) -> f64 {
        self.ampm_alpha / self.ampm_beta
    }
}

/// Memoryless Saleh amplification of every sample.
pub fn saleh_amplify(x: &ComplexFrame, p: &SalehParams) -> ComplexFrame {
    let gin = db_to_amplitude(p.input_scale_db);
    let gout = db_to_amplitude(p.output_scale_db);
    x.map(|s| {
        let xs = s * gin;
        let r = xs.norm();
        if r == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let amp = p.am_am(r) * gout;
        let phase = xs.arg() + p.am_pm(r);
        Complex64::from_polar(amp, phase)
    })
}

/// Mean output power over mean input power of the TWTA for this waveform, dB.
pub fn saleh_power_gain_db(x: &ComplexFrame, p: &SalehParams) -> Result<f64> {
    let pin = x.mean_power();
    if !(pin > 0.0) {
        return Err(Error::param(
            "x",
            "TWTA gain undefined for a zero-power input",
        ));
    }
    Ok(power_to_db(saleh_amplify(x, p).mean_power() / pin))
}

/// Scales amplitude by `10^(gain_db/20)`.
pub fn apply_gain_db(x: &ComplexFrame, gain_db: f64) -> ComplexFrame {
    x.scaled(db_to_amplitude(gain_db))
}

/// Attenuates by a non-negative free-space loss in dB.
pub fn fspl_attenuate(x: &ComplexFrame, loss_db: f64) -> Result<ComplexFrame> {
    if !(loss_db >= 0.0) {
        return Err(Error::param("loss_db", format!("{loss_db} dB is negative")));
    }
    Ok(apply_gain_db(x, -loss_db))
}

/// Multiplies sample `n` by `exp(sign·j(2π f (start+n)/fs + φ))`.
pub(crate) fn rotate(
    x: &ComplexFrame,
    phase_rad: f64,
    freq_hz: f64,
    start: u64,
    sign: f64,
) -> ComplexFrame {
    let fs = x.sample_rate_hz();
    let samples = x
        .samples()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let n = (start + i as u64) as f64;
            // Reduce the ramp to one turn before scaling to radians.
            let cycles = (freq_hz * n / fs).fract();
            s * Complex64::from_polar(1.0, sign * (2.0 * PI * cycles + phase_rad))
        })
        .collect();
    ComplexFrame::from_parts(samples, fs)
}

/// Phase/Doppler rotation starting at sample 0.
pub fn phase_freq_offset(x: &ComplexFrame, phase_deg: f64, freq_hz: f64) -> ComplexFrame {
    rotate(x, phase_deg.to_radians(), freq_hz, 0, 1.0)
}

/// Phase/Doppler rotation whose sample counter persists across frames.
#[derive(Debug, Clone)]
pub struct PhaseFreqOffset {
    phase_deg: f64,
    freq_hz: f64,
    counter: u64,
}

impl PhaseFreqOffset {
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
            1.0,
        );
        self.counter += x.len() as u64;
        out
    }

    pub fn samples_processed(&self) -> u64 {
        self.counter
    }
}

/// Additive circular complex Gaussian noise with per-sample variance `sigma2`.
#[derive(Debug, Clone)]
pub struct AwgnSource {
    rng: ChaCha8Rng,
}

impl AwgnSource {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn add(&mut self, x: &ComplexFrame, sigma2: f64) -> ComplexFrame {
        if sigma2 == 0.0 {
            return x.clone();
        }
        let sd = (sigma2 / 2.0).sqrt();
        let rng = &mut self.rng;
        x.map(|s| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            s + Complex64::new(re * sd, im * sd)
        })
    }
}

/// Noise variance `k_B·T·fs` in watts (1 ohm reference).
pub fn thermal_noise_variance(temperature_k: f64, sample_rate_hz: f64) -> f64 {
    BOLTZMANN * temperature_k * sample_rate_hz
}

/// Adds receiver thermal noise at `temperature_k` over the full sample bandwidth.
pub fn thermal_noise(x: &ComplexFrame, temperature_k: f64, seed: u64) -> Result<ComplexFrame> {
    if !(temperature_k >= 0.0 && temperature_k.is_finite()) {
        return Err(Error::param(
            "temperature_k",
            format!("{temperature_k} K is not a valid temperature"),
        ));
    }
    let sigma2 = thermal_noise_variance(temperature_k, x.sample_rate_hz());
    Ok(AwgnSource::new(seed).add(x, sigma2))
}

/// Impairments injected along the link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImpairmentConfig {
    pub phase_offset_deg: f64,
    pub freq_offset_hz: f64,
    pub noise_temperature_k: f64,
    pub iq_amplitude_imbalance_db: f64,
    pub iq_phase_imbalance_deg: f64,
    pub dc_offset_i: f64,
    pub dc_offset_q: f64,
    pub seed: u64,
}

impl Default for ImpairmentConfig {
    fn default() -> Self {
        Self {
            phase_offset_deg: 15.0,
            freq_offset_hz: 2.0,
            noise_temperature_k: 45.0,
            iq_amplitude_imbalance_db: 0.0,
            iq_phase_imbalance_deg: 0.0,
            dc_offset_i: 0.0,
            dc_offset_q: 0.0,
            seed: 0,
        }
    }
}

impl ImpairmentConfig {
    /// No rotation, noise, imbalance or offset.
    pub fn none() -> Self {
        Self {
            phase_offset_deg: 0.0,
            freq_offset_hz: 0.0,
            noise_temperature_k: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_temperature_k >= 0.0 && self.noise_temperature_k.is_finite()) {
            return Err(Error::param("noise_temperature_k", "must be >= 0"));
        }
        let finite = [
            self.phase_offset_deg,
            self.freq_offset_hz,
            self.iq_amplitude_imbalance_db,
            self.iq_phase_imbalance_deg,
            self.dc_offset_i,
            self.dc_offset_q,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("impairments", "all values must be finite"));
        }
        Ok(())
    }
}

/// Receiver I/Q imbalance (split-phase, amplitude error on Q) plus DC offsets.
pub fn iq_imbalance(x: &ComplexFrame, cfg: &ImpairmentConfig) -> ComplexFrame {
    let g = db_to_amplitude(cfg.iq_amplitude_imbalance_db);
    let half = cfg.iq_phase_imbalance_deg.to_radians() / 2.0;
    let (s, c) = half.sin_cos();
    x.map(|v| {
        let i = v.re * c + v.im * g * s + cfg.dc_offset_i;
        let q = v.re * s + v.im * g * c + cfg.dc_offset_q;
        Complex64::new(i, q)
    })
}

/// Fixed gains and losses of the RF chain, dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkGains {
    pub tx_dish_gain_db: f64,
    pub sat_rx_gain_db: f64,
    /// `None` selects auto-closure, see [`LinkGains::closure_gain_db`].
    pub transponder_amp_gain_db: Option<f64>,
    pub sat_tx_gain_db: f64,
    pub rx_dish_gain_db: f64,
    pub uplink_loss_db: f64,
    pub downlink_loss_db: f64,
}

impl Default for LinkGains {
    fn default() -> Self {
        Self {
            tx_dish_gain_db: 52.48,
            sat_rx_gain_db: 38.2,
            transponder_amp_gain_db: None,
            sat_tx_gain_db: 31.0,
            rx_dish_gain_db: 36.85,
            uplink_loss_db: 221.0,
            downlink_loss_db: 217.0,
        }
    }
}

impl LinkGains {
    pub fn validate(&self) -> Result<()> {
        if !(self.uplink_loss_db >= 0.0) {
            return Err(Error::param("uplink_loss_db", "must be >= 0 dB"));
        }
        if !(self.downlink_loss_db >= 0.0) {
            return Err(Error::param("downlink_loss_db", "must be >= 0 dB"));
        }
        Ok(())
    }

    /// Sum of every dB term except the transponder amplifier.
    pub fn fixed_gain_db(&self) -> f64 {
        self.tx_dish_gain_db - self.uplink_loss_db + self.sat_rx_gain_db + self.sat_tx_gain_db
            - self.downlink_loss_db
            + self.rx_dish_gain_db
    }

    /// Transponder gain that makes the received pre-noise power equal the
    /// power entering the TWTA, given the TWTA's own power gain.
    pub fn closure_gain_db(&self, hpa_gain_db: f64) -> f64 {
        -self.fixed_gain_db() - hpa_gain_db
    }

    /// Copy with the transponder gain set to the closure value if unset.
    pub fn closed(&self, hpa_gain_db: f64) -> Self {
        Self {
            transponder_amp_gain_db: Some(
                self.transponder_amp_gain_db
                    .unwrap_or_else(|| self.closure_gain_db(hpa_gain_db)),
            ),
            ..self.clone()
        }
    }

    /// Net chain gain excluding the TWTA and noise.
    pub fn net_gain_db(&self) -> Result<f64> {
        Ok(self.fixed_gain_db() + transponder_gain(self)?)
    }
}

fn transponder_gain(g: &LinkGains) -> Result<f64> {
    g.transponder_amp_gain_db.ok_or_else(|| {
        Error::param(
            "transponder_amp_gain_db",
            "unresolved; close the link first",
        )
    })
}

/// How signal power and noise are set along the chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerMode {
    /// Full dB chain; noise from the receiver temperature.
    Physical,
    /// dB terms replaced by a renormalisation to the input power; noise set
    /// from a symbol-energy-to-noise-density ratio (`None` = noiseless).
    Normalized {
        es_n0_db: Option<f64>,
        samples_per_symbol: usize,
    },
}

/// Stateful RF channel: persistent rotation counter and noise stream.
#[derive(Debug, Clone)]
pub struct Channel {
    gains: LinkGains,
    saleh: Option<SalehParams>,
    impairments: ImpairmentConfig,
    mode: PowerMode,
    offset: PhaseFreqOffset,
    noise: AwgnSource,
}

impl Channel {
    /// In physical mode the transponder gain must already be resolved.
    pub fn new(
        gains: LinkGains,
        saleh: Option<SalehParams>,
        impairments: ImpairmentConfig,
        mode: PowerMode,
    ) -> Result<Self> {
        gains.validate()?;
        impairments.validate()?;
        if let Some(p) = &saleh {
            p.validate()?;
        }
        match mode {
            PowerMode::Physical => {
                gains.net_gain_db()?;
            }
            PowerMode::Normalized {
                samples_per_symbol: 0,
                ..
            } => {
                return Err(Error::param("samples_per_symbol", "must be positive"));
            }
            PowerMode::Normalized { .. } => {}
        }
        Ok(Self {
            offset: PhaseFreqOffset::new(impairments.phase_offset_deg, impairments.freq_offset_hz),
            noise: AwgnSource::new(impairments.seed),
            gains,
            saleh,
            impairments,
            mode,
        })
    }

    pub fn gains(&self) -> &LinkGains {
        &self.gains
    }

    /// Per-sample noise variance that will be injected for a frame at
    /// `sample_rate_hz` with mean channel-input power `input_power`.
    pub fn noise_variance(&self, sample_rate_hz: f64, input_power: f64) -> f64 {
        match self.mode {
            PowerMode::Physical => {
                thermal_noise_variance(self.impairments.noise_temperature_k, sample_rate_hz)
            }
            PowerMode::Normalized {
                es_n0_db: Some(es_n0_db),
                samples_per_symbol,
            } => input_power * samples_per_symbol as f64 / crate::db_to_power(es_n0_db),
            PowerMode::Normalized { es_n0_db: None, .. } => 0.0,
        }
    }

    pub fn process(&mut self, x: &ComplexFrame) -> Result<ComplexFrame> {
        let input_power = x.mean_power();
        let mut y = match &self.saleh {
            Some(p) => saleh_amplify(x, p),
            None => x.clone(),
        };
        let g = &self.gains;
        match self.mode {
            PowerMode::Physical => {
                y = apply_gain_db(&y, g.tx_dish_gain_db);
                y = fspl_attenuate(&y, g.uplink_loss_db)?;
                y = apply_gain_db(&y, g.sat_rx_gain_db);
                y = apply_gain_db(&y, transponder_gain(g)?);
                y = apply_gain_db(&y, g.sat_tx_gain_db);
                y = fspl_attenuate(&y, g.downlink_loss_db)?;
                y = self.offset.process(&y);
                y = apply_gain_db(&y, g.rx_dish_gain_db);
            }
            PowerMode::Normalized { .. } => {
                let p = y.mean_power();
                if p > 0.0 {
                    y = y.scaled((input_power / p).sqrt());
                }
                y = self.offset.process(&y);
            }
        }
        let sigma2 = self.noise_variance(x.sample_rate_hz(), input_power);
        y = self.noise.add(&y, sigma2);
        Ok(iq_imbalance(&y, &self.impairments))
    }
}

/// One-shot convenience wrapper around [`Channel`].
pub fn run_channel(
    x: &ComplexFrame,
    gains: &LinkGains,
    saleh: Option<&SalehParams>,
    imp: &ImpairmentConfig,
    mode: PowerMode,
) -> Result<ComplexFrame> {
    Channel::new(gains.clone(), saleh.copied(), imp.clone(), mode)?.process(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const FS: f64 = 50_000.0;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn frame(v: Vec<Complex64>) -> ComplexFrame {
        ComplexFrame::new(v, FS).unwrap()
    }

    fn ramp(n: usize) -> ComplexFrame {
        frame(
            (0..n)
                .map(|k| c((k as f64 * 0.37).sin() * 2.0, (k as f64 * 0.11).cos() - 0.5))
                .collect(),
        )
    }

    fn unscaled() -> SalehParams {
        SalehParams {
            input_scale_db: 0.0,
            output_scale_db: 0.0,
            ..SalehParams::default()
        }
    }

    #[test]
    fn saleh_zero_in_zero_out() {
        let y = saleh_amplify(&frame(vec![c(0.0, 0.0)]), &SalehParams::default());
        assert_eq!(y.samples()[0], c(0.0, 0.0));
    }

    #[test]
    fn saleh_closed_forms() {
        let p = unscaled();
        assert!((p.saturation_output() - 1.00576).abs() < 5e-6);
        assert!((p.saturation_input() - 0.93182).abs() < 5e-6);
        assert!((p.ampm_limit() - 0.43973).abs() < 5e-6);
        assert!((p.ampm_limit().to_degrees() - 25.19).abs() < 0.01);
    }

    #[test]
    fn saleh_amam_unimodal_on_grid() {
        let p = unscaled();
        let peak = p.saturation_input();
        let mut prev = p.am_am(0.0);
        for k in 1..=20_000 {
            let r = k as f64 * 1e-4;
            let a = p.am_am(r);
            if r < peak - 1e-4 {
                assert!(a > prev, "not increasing at {r}");
            } else if r > peak + 1e-4 {
                assert!(a < prev, "not decreasing at {r}");
            }
            assert!(a <= p.saturation_output() + 1e-15);
            prev = a;
        }
    }

    #[test]
    fn saleh_applies_scalings_and_phase() {
        let p = SalehParams::default();
        let x = c(0.0, 2.0);
        let y = saleh_amplify(&frame(vec![x]), &p).samples()[0];
        let r = 2.0 * db_to_amplitude(p.input_scale_db);
        assert_relative_eq!(
            y.norm(),
            p.am_am(r) * db_to_amplitude(p.output_scale_db),
            max_relative = 1e-12
        );
        assert_relative_eq!(y.arg(), PI / 2.0 + p.am_pm(r), max_relative = 1e-12);
    }

    #[test]
    fn saleh_without_ampm_preserves_phase() {
        let p = SalehParams {
            ampm_alpha: 0.0,
            ..SalehParams::default()
        };
        let x = ramp(200);
        let y = saleh_amplify(&x, &p);
        for (a, b) in x.samples().iter().zip(y.samples()) {
            if a.norm() > 1e-9 {
                assert!((a.arg() - b.arg()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gains() {
        let x = frame(vec![c(1.0, 0.0), c(0.0, -2.0)]);
        assert_eq!(apply_gain_db(&x, 0.0), x);
        let y = apply_gain_db(&frame(vec![c(1.0, 0.0)]), 20.0);
        assert!((y.samples()[0].norm() - 10.0).abs() < 1e-12);
        let back = apply_gain_db(&apply_gain_db(&x, -221.0), 221.0);
        for (a, b) in x.samples().iter().zip(back.samples()) {
            assert!((a - b).norm() <= 1e-12 * a.norm());
        }
    }

    #[test]
    fn fspl() {
        let x = frame(vec![c(1.0, 1.0)]);
        assert_eq!(fspl_attenuate(&x, 0.0).unwrap(), x);
        let up = fspl_attenuate(&x, 221.0).unwrap();
        assert_relative_eq!(
            up.samples()[0].re,
            10f64.powf(-221.0 / 20.0),
            max_relative = 1e-12
        );
        let down = fspl_attenuate(&x, 217.0).unwrap();
        assert_relative_eq!(
            down.samples()[0].im,
            10f64.powf(-217.0 / 20.0),
            max_relative = 1e-12
        );
        assert!(fspl_attenuate(&x, -1.0).is_err());
    }

    #[test]
    fn rotation_examples() {
        let x = ramp(64);
        let neg = phase_freq_offset(&x, 180.0, 0.0);
        for (a, b) in x.samples().iter().zip(neg.samples()) {
            assert!((a + b).norm() < 1e-12);
        }
        let full = phase_freq_offset(&x, 0.0, FS);
        for (a, b) in x.samples().iter().zip(full.samples()) {
            assert!((a - b).norm() < 1e-12);
        }
        let ones = frame(vec![c(1.0, 0.0); 3]);
        let r = phase_freq_offset(&ones, 15.0, 2.0);
        assert!((r.samples()[0].arg().to_degrees() - 15.0).abs() < 1e-12);
        let step = (r.samples()[1] / r.samples()[0]).arg().to_degrees();
        assert!((step - 0.0144).abs() < 1e-12);
    }

    #[test]
    fn rotation_counter_persists() {
        let x = ramp(1000);
        let whole = PhaseFreqOffset::new(15.0, 2.0).process(&x);
        let mut split = PhaseFreqOffset::new(15.0, 2.0);
        let (a, b) = x.split_at(333);
        let mut joined = split.process(&a);
        joined.extend_from(&split.process(&b)).unwrap();
        assert_eq!(split.samples_processed(), 1000);
        for (p, q) in whole.samples().iter().zip(joined.samples()) {
            assert!((p - q).norm() < 1e-13);
        }
    }

    #[test]
    fn noise_zero_temperature_is_identity() {
        let x = ramp(100);
        assert_eq!(thermal_noise(&x, 0.0, 1).unwrap(), x);
        assert!(thermal_noise(&x, -1.0, 1).is_err());
    }

    #[test]
    fn noise_variance_matches_ktb() {
        let sigma2 = thermal_noise_variance(45.0, FS);
        assert!((sigma2 - 3.1065e-17).abs() < 1e-21);
        let zeros = frame(vec![c(0.0, 0.0); 1_000_000]);
        let n = thermal_noise(&zeros, 45.0, 9).unwrap();
        let var = n.mean_power();
        assert!((var / sigma2 - 1.0).abs() < 0.02, "ratio {}", var / sigma2);
        let re_var = n.samples().iter().map(|s| s.re * s.re).sum::<f64>() / n.len() as f64;
        assert!((re_var / (sigma2 / 2.0) - 1.0).abs() < 0.02);
        assert_eq!(n, thermal_noise(&zeros, 45.0, 9).unwrap());
    }

    #[test]
    fn iq_imbalance_examples() {
        let x = ramp(50);
        let none = ImpairmentConfig::none();
        assert_eq!(iq_imbalance(&x, &none), x);
        let dc = ImpairmentConfig {
            dc_offset_i: 0.5,
            dc_offset_q: -0.25,
            ..ImpairmentConfig::none()
        };
        for (a, b) in x.samples().iter().zip(iq_imbalance(&x, &dc).samples()) {
            assert!((b - a - c(0.5, -0.25)).norm() < 1e-15);
        }
        let zero = frame(vec![c(0.0, 0.0); 10]);
        assert!(iq_imbalance(&zero, &dc)
            .samples()
            .iter()
            .all(|s| *s == c(0.5, -0.25)));
    }

    #[test]
    fn iq_imbalance_formula() {
        let cfg = ImpairmentConfig {
            iq_amplitude_imbalance_db: 1.0,
            iq_phase_imbalance_deg: 10.0,
            ..ImpairmentConfig::none()
        };
        let y = iq_imbalance(&frame(vec![c(1.0, 0.0), c(0.0, 1.0)]), &cfg);
        let g = 10f64.powf(1.0 / 20.0);
        let h = 5f64.to_radians();
        assert!((y.samples()[0] - c(h.cos(), h.sin())).norm() < 1e-15);
        assert!((y.samples()[1] - c(g * h.sin(), g * h.cos())).norm() < 1e-15);
    }

    #[test]
    fn closure_gain() {
        let g = LinkGains::default();
        let fixed = 52.48 - 221.0 + 38.2 + 31.0 - 217.0 + 36.85;
        assert!((g.fixed_gain_db() - fixed).abs() < 1e-9);
        assert!(g.net_gain_db().is_err());
        let closed = g.closed(20.0);
        assert!((closed.net_gain_db().unwrap() + 20.0).abs() < 1e-9);
        let fixed_t = LinkGains {
            transponder_amp_gain_db: Some(100.0),
            ..g
        };
        assert_eq!(fixed_t.closed(20.0).transponder_amp_gain_db, Some(100.0));
    }

    #[test]
    fn physical_chain_gain_is_db_sum() {
        let gains = LinkGains {
            transponder_amp_gain_db: Some(250.0),
            ..LinkGains::default()
        };
        let x = ramp(100);
        let y = run_channel(
            &x,
            &gains,
            None,
            &ImpairmentConfig::none(),
            PowerMode::Physical,
        )
        .unwrap();
        let expect = db_to_amplitude(gains.net_gain_db().unwrap());
        for (a, b) in x.samples().iter().zip(y.samples()) {
            assert!((b - a * expect).norm() <= 1e-12 * (a * expect).norm() + 1e-300);
        }
    }

    #[test]
    fn normalized_identity_chain() {
        let x = ramp(300);
        let y = run_channel(
            &x,
            &LinkGains::default(),
            None,
            &ImpairmentConfig::none(),
            PowerMode::Normalized {
                es_n0_db: None,
                samples_per_symbol: 8,
            },
        )
        .unwrap();
        for (a, b) in x.samples().iter().zip(y.samples()) {
            assert!((a - b).norm() <= 1e-9 * a.norm().max(1.0));
        }
    }

    #[test]
    fn normalized_noise_level() {
        let x = frame(vec![c(1.0, 0.0); 200_000]);
        let mut ch = Channel::new(
            LinkGains::default(),
            None,
            ImpairmentConfig::none(),
            PowerMode::Normalized {
                es_n0_db: Some(10.0),
                samples_per_symbol: 8,
            },
        )
        .unwrap();
        // Es = P * sps = 8, N0 = Es / 10.
        assert!((ch.noise_variance(FS, 1.0) - 0.8).abs() < 1e-12);
        let y = ch.process(&x).unwrap();
        let noise = y
            .samples()
            .iter()
            .map(|s| (s - 1.0).norm_sqr())
            .sum::<f64>()
            / y.len() as f64;
        assert!((noise / 0.8 - 1.0).abs() < 0.02);
    }

    #[test]
    fn pure_phase_offset_rotates_constellation() {
        let imp = ImpairmentConfig {
            phase_offset_deg: 15.0,
            ..ImpairmentConfig::none()
        };
        let x = ramp(100);
        let y = run_channel(
            &x,
            &LinkGains::default(),
            None,
            &imp,
            PowerMode::Normalized {
                es_n0_db: None,
                samples_per_symbol: 8,
            },
        )
        .unwrap();
        let rot = Complex64::from_polar(1.0, 15f64.to_radians());
        for (a, b) in x.samples().iter().zip(y.samples()) {
            assert!((a * rot - b).norm() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn gain_blocks_commute(g1 in -250.0..250.0f64, g2 in -250.0..250.0f64) {
            let x = ramp(16);
            let a = apply_gain_db(&apply_gain_db(&x, g1), g2);
            let b = apply_gain_db(&x, g1 + g2);
            for (p, q) in a.samples().iter().zip(b.samples()) {
                prop_assert!((p - q).norm() <= 1e-12 * q.norm());
            }
        }

        #[test]
        fn noise_reproducible(seed in any::<u64>()) {
            let x = ramp(64);
            prop_assert_eq!(thermal_noise(&x, 300.0, seed).unwrap(), thermal_noise(&x, 300.0, seed).unwrap());
        }
    }
}
