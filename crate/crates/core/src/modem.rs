//! Bit source, Gray-coded square M-QAM and root-raised-cosine shaping.
//!
//! Constellation convention: for `M = L^2`, each symbol carries `2·log2(L)`
//! bits. The first half of the bits (first on the wire) selects the in-phase
//! level and the second half the quadrature level. Within an axis the level
//! index `i` (0 = most negative) is labelled by the Gray code `i ^ (i >> 1)`,
//! so for 16-QAM the per-axis order is `00 → -3, 01 → -1, 11 → +1, 10 → +3`
//! (in units of `min_distance / 2`).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{ComplexFrame, Error, Result};

/// A block of hard bits, each exactly 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitFrame {
    bits: Vec<u8>,
}

impl BitFrame {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::param("bits", "frame must not be empty"));
        }
        if let Some(i) = bits.iter().position(|&b| b > 1) {
            return Err(Error::param(
                "bits",
                format!("element {i} is {}, expected 0 or 1", bits[i]),
            ));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Modem parameters. Defaults are the reference C-band 16-QAM link settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModemConfig {
    pub m_ary: usize,
    pub min_distance: f64,
    pub gray_coding: bool,
    pub rolloff: f64,
    pub samples_per_symbol: usize,
    pub filter_span_symbols: usize,
    /// Duration of one bit at the source, seconds.
    pub bit_sample_time_s: f64,
    /// Bits per source frame.
    pub frame_len: usize,
}

impl Default for ModemConfig {
    fn default() -> Self {
        Self {
            m_ary: 16,
            min_distance: 2.0,
            gray_coding: true,
            rolloff: 0.2,
            samples_per_symbol: 8,
            filter_span_symbols: 20,
            bit_sample_time_s: 4.0 / 100_000.0,
            frame_len: 512,
        }
    }
}

impl ModemConfig {
    /// Checks every invariant of the configuration.
    pub fn validate(&self) -> Result<()> {
        levels_per_axis(self.m_ary)?;
        if !(self.min_distance > 0.0 && self.min_distance.is_finite()) {
            return Err(Error::param("min_distance", "must be positive"));
        }
        validate_rrc(
            self.rolloff,
            self.samples_per_symbol,
            self.filter_span_symbols,
        )?;
        if !(self.bit_sample_time_s > 0.0 && self.bit_sample_time_s.is_finite()) {
            return Err(Error::param("bit_sample_time_s", "must be positive"));
        }
        if self.frame_len == 0 {
            return Err(Error::param("frame_len", "must be positive"));
        }
        Ok(())
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.m_ary.trailing_zeros() as usize
    }

    pub fn symbol_rate_hz(&self) -> f64 {
        1.0 / (self.bit_sample_time_s * self.bits_per_symbol() as f64)
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.symbol_rate_hz() * self.samples_per_symbol as f64
    }

    /// Mean of `|s|^2` over the equiprobable constellation: `d²(M−1)/6`.
    pub fn mean_symbol_energy(&self) -> f64 {
        self.min_distance * self.min_distance * (self.m_ary as f64 - 1.0) / 6.0
    }

    /// Mean per-sample power of the shaped waveform (unit-energy taps).
    pub fn mean_waveform_power(&self) -> f64 {
        self.mean_symbol_energy() / self.samples_per_symbol as f64
    }

    /// Matched-filter cascade delay, in symbols.
    pub fn group_delay_symbols(&self) -> usize {
        self.filter_span_symbols
    }
}

fn levels_per_axis(m_ary: usize) -> Result<usize> {
    // Square QAM with a Gray code per axis: M = 4^k, k >= 1.
    if m_ary < 4 || !m_ary.is_power_of_two() || !m_ary.trailing_zeros().is_multiple_of(2) {
        return Err(Error::param(
            "m_ary",
            format!("{m_ary} is not a power of 4 (square QAM)"),
        ));
    }
    Ok(1 << (m_ary.trailing_zeros() / 2))
}

fn validate_rrc(rolloff: f64, sps: usize, span: usize) -> Result<()> {
    if !(rolloff > 0.0 && rolloff <= 1.0) {
        return Err(Error::param("rolloff", format!("{rolloff} not in (0, 1]")));
    }
    if sps < 2 {
        return Err(Error::param("samples_per_symbol", "must be at least 2"));
    }
    if span == 0 || !span.is_multiple_of(2) {
        return Err(Error::param(
            "filter_span_symbols",
            format!("{span} must be positive and even"),
        ));
    }
    Ok(())
}

/// Draws `n` independent Bernoulli(`p_one`) bits from a seeded ChaCha8 stream.
pub fn generate_bits(n: usize, p_one: f64, seed: u64) -> Result<BitFrame> {
    if n == 0 {
        return Err(Error::param("n", "must be positive"));
    }
    let dist = Bernoulli::new(p_one)
        .map_err(|_| Error::param("p_one", format!("{p_one} is not a probability")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = (0..n).map(|_| dist.sample(&mut rng) as u8).collect();
    BitFrame::new(bits)
}

/// Per-axis labelling of a square constellation.
#[derive(Debug, Clone)]
struct AxisMap {
    levels: usize,
    bits: usize,
    half_distance: f64,
    gray: bool,
}

impl AxisMap {
    fn new(cfg: &ModemConfig) -> Result<Self> {
        let levels = levels_per_axis(cfg.m_ary)?;
        Ok(Self {
            levels,
            bits: levels.trailing_zeros() as usize,
            half_distance: cfg.min_distance / 2.0,
            gray: cfg.gray_coding,
        })
    }

    fn label_of_index(&self, index: usize) -> usize {
        if self.gray {
            index ^ (index >> 1)
        } else {
            index
        }
    }

    fn index_of_label(&self, label: usize) -> usize {
        if !self.gray {
            return label;
        }
        let mut index = label;
        let mut shift = label >> 1;
        while shift != 0 {
            index ^= shift;
            shift >>= 1;
        }
        index
    }

    fn level(&self, index: usize) -> f64 {
        (2.0 * index as f64 - (self.levels as f64 - 1.0)) * self.half_distance
    }

    /// Nearest level index; ties go to the lower level, out-of-range clamps.
    fn decide(&self, value: f64) -> usize {
        let pos = (value / self.half_distance + (self.levels as f64 - 1.0)) / 2.0;
        let idx = (pos - 0.5).ceil();
        idx.clamp(0.0, (self.levels - 1) as f64) as usize
    }

    fn read_label(&self, bits: &[u8]) -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    fn write_label(&self, label: usize, out: &mut Vec<u8>) {
        for k in (0..self.bits).rev() {
            out.push(((label >> k) & 1) as u8);
        }
    }
}

/// Maps bits to symbols, one complex sample per symbol at the symbol rate.
pub fn qam_modulate(bits: &BitFrame, cfg: &ModemConfig) -> Result<ComplexFrame> {
    let axis = AxisMap::new(cfg)?;
    let bps = 2 * axis.bits;
    if !bits.len().is_multiple_of(bps) {
        return Err(Error::Framing {
            bits: bits.len(),
            bits_per_symbol: bps,
        });
    }
    let symbols = bits
        .bits()
        .chunks_exact(bps)
        .map(|group| {
            let (i_bits, q_bits) = group.split_at(axis.bits);
            let i = axis.index_of_label(axis.read_label(i_bits));
            let q = axis.index_of_label(axis.read_label(q_bits));
            Complex64::new(axis.level(i), axis.level(q))
        })
        .collect();
    Ok(ComplexFrame::from_parts(symbols, cfg.symbol_rate_hz()))
}

/// Hard-decision demapper: nearest level per axis, clamped to the outer levels.
pub fn qam_demodulate(symbols: &ComplexFrame, cfg: &ModemConfig) -> Result<BitFrame> {
    let axis = AxisMap::new(cfg)?;
    if symbols.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut bits = Vec::with_capacity(symbols.len() * 2 * axis.bits);
    for s in symbols.samples() {
        axis.write_label(axis.label_of_index(axis.decide(s.re)), &mut bits);
        axis.write_label(axis.label_of_index(axis.decide(s.im)), &mut bits);
    }
    Ok(BitFrame { bits })
}

/// All `M` constellation points with their bit labels, in label order.
pub fn constellation(cfg: &ModemConfig) -> Result<Vec<(Vec<u8>, Complex64)>> {
    let bps = cfg.bits_per_symbol();
    levels_per_axis(cfg.m_ary)?;
    (0..cfg.m_ary)
        .map(|label| {
            let bits: Vec<u8> = (0..bps).rev().map(|k| ((label >> k) & 1) as u8).collect();
            let frame = BitFrame::new(bits.clone())?;
            let point = qam_modulate(&frame, cfg)?.samples()[0];
            Ok((bits, point))
        })
        .collect()
}

/// Square-root raised-cosine taps, `span·sps + 1` long, unit energy.
pub fn rrc_taps(rolloff: f64, samples_per_symbol: usize, span_symbols: usize) -> Result<Vec<f64>> {
    validate_rrc(rolloff, samples_per_symbol, span_symbols)?;
    let n_taps = span_symbols * samples_per_symbol + 1;
    let center = (n_taps / 2) as f64;
    let sps = samples_per_symbol as f64;
    let beta = rolloff;
    let singular = 1.0 / (4.0 * beta);

    let mut taps: Vec<f64> = (0..n_taps)
        .map(|i| {
            let t = (i as f64 - center) / sps;
            if t.abs() < 1e-12 {
                1.0 - beta + 4.0 * beta / PI
            } else if (t.abs() - singular).abs() < 1e-9 {
                beta / 2f64.sqrt()
                    * ((1.0 + 2.0 / PI) * (PI / (4.0 * beta)).sin()
                        + (1.0 - 2.0 / PI) * (PI / (4.0 * beta)).cos())
            } else {
                let num =
                    (PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos();
                let den = PI * t * (1.0 - (4.0 * beta * t).powi(2));
                num / den
            }
        })
        .collect();

    let norm = taps.iter().map(|h| h * h).sum::<f64>().sqrt();
    taps.iter_mut().for_each(|h| *h /= norm);
    Ok(taps)
}

/// Upsamples by `samples_per_symbol` and filters with the RRC taps.
///
/// The output keeps the full filter tail: `len·sps + span·sps` samples.
pub fn tx_shape(symbols: &ComplexFrame, cfg: &ModemConfig) -> Result<ComplexFrame> {
    let taps = rrc_taps(cfg.rolloff, cfg.samples_per_symbol, cfg.filter_span_symbols)?;
    let sps = cfg.samples_per_symbol;
    let out_len = symbols.len() * sps + cfg.filter_span_symbols * sps;
    let mut out = vec![Complex64::new(0.0, 0.0); out_len];
    for (k, &s) in symbols.samples().iter().enumerate() {
        let base = k * sps;
        for (j, &h) in taps.iter().enumerate() {
            if let Some(o) = out.get_mut(base + j) {
                *o += s * h;
            }
        }
    }
    Ok(ComplexFrame::from_parts(
        out,
        symbols.sample_rate_hz() * sps as f64,
    ))
}

/// Matched-filters with the RRC taps and decimates by `samples_per_symbol`.
///
/// Output index `m` is the filter output at input sample `m·sps`, so the
/// symbol transmitted at index `k` appears at `k + filter_span_symbols`.
/// The leading transient is kept; alignment happens in [`crate::analysis`].
pub fn rx_match(waveform: &ComplexFrame, cfg: &ModemConfig) -> Result<ComplexFrame> {
    let taps = rrc_taps(cfg.rolloff, cfg.samples_per_symbol, cfg.filter_span_symbols)?;
    let sps = cfg.samples_per_symbol;
    let delay = cfg.filter_span_symbols * sps;
    if waveform.len() < delay {
        return Err(Error::InsufficientData {
            needed: delay,
            got: waveform.len(),
        });
    }
    let x = waveform.samples();
    let full_len = x.len() + taps.len() - 1;
    let n_out = (full_len - 1) / sps + 1;
    let out = (0..n_out)
        .map(|m| {
            let n = m * sps;
            // y[n] = sum_j h[j] x[n - j]
            let j_lo = n.saturating_sub(x.len() - 1);
            let j_hi = n.min(taps.len() - 1);
            (j_lo..=j_hi).fold(Complex64::new(0.0, 0.0), |acc, j| acc + x[n - j] * taps[j])
        })
        .collect();
    Ok(ComplexFrame::from_parts(
        out,
        waveform.sample_rate_hz() / sps as f64,
    ))
}
