//! Measurement side: BER, delay alignment, spectra and constellations.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::modem::{BitFrame, ModemConfig};
use crate::{ComplexFrame, Error, Result};

/// Outcome of a bit-by-bit comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerReport {
    pub bit_errors: u64,
    pub bits_compared: u64,
    pub ber: f64,
    pub alignment_delay_bits: u64,
}

/// Compares `tx[i]` with `rx[i + delay_bits]` over the overlapping span.
pub fn measure_ber(tx_bits: &BitFrame, rx_bits: &BitFrame, delay_bits: usize) -> Result<BerReport> {
    let tx = tx_bits.bits();
    let rx = rx_bits.bits().get(delay_bits..).unwrap_or(&[]);
    let n = tx.len().min(rx.len());
    if n == 0 {
        return Err(Error::InsufficientData {
            needed: delay_bits + 1,
            got: rx_bits.len(),
        });
    }
    let errors = tx[..n].iter().zip(&rx[..n]).filter(|(a, b)| a != b).count() as u64;
    Ok(BerReport {
        bit_errors: errors,
        bits_compared: n as u64,
        ber: errors as f64 / n as f64,
        alignment_delay_bits: delay_bits as u64,
    })
}

/// Analytic Tx→Rx delay in bits: half a filter span on each side.
pub fn pipeline_delay_bits(cfg: &ModemConfig) -> usize {
    cfg.group_delay_symbols() * cfg.bits_per_symbol()
}

/// Correlation search for the lag (in symbols) of `rx` relative to `tx`.
///
/// Correlates in blocks of `block` symbols and sums magnitudes, so a slowly
/// rotating carrier does not cancel the peak. Returns `None` if no lag in
/// `0..=max_lag` fits.
pub fn estimate_delay_symbols(
    tx: &[Complex64],
    rx: &[Complex64],
    max_lag: usize,
    block: usize,
) -> Option<usize> {
    let block = block.max(1);
    (0..=max_lag)
        .filter(|&lag| rx.len() > lag)
        .map(|lag| {
            let n = tx.len().min(rx.len() - lag);
            let score: f64 = (0..n)
                .step_by(block)
                .map(|start| {
                    let end = (start + block).min(n);
                    (start..end)
                        .map(|k| rx[k + lag] * tx[k].conj())
                        .sum::<Complex64>()
                        .norm()
                })
                .sum();
            (lag, score / n.max(1) as f64)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(lag, _)| lag)
}

/// Two-sided power spectral density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub frequencies_hz: Vec<f64>,
    pub psd_w_per_hz: Vec<f64>,
    pub resolution_bw_hz: f64,
}

impl SpectrumEstimate {
    /// Rectangle-rule integral of the PSD over frequency.
    pub fn total_power(&self) -> f64 {
        let df = self
            .frequencies_hz
            .get(1)
            .zip(self.frequencies_hz.first())
            .map(|(b, a)| b - a)
            .unwrap_or(0.0);
        self.psd_w_per_hz.iter().sum::<f64>() * df
    }

    /// Index of the bin nearest to `freq_hz`.
    pub fn bin_of(&self, freq_hz: f64) -> usize {
        self.frequencies_hz
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - freq_hz).abs().total_cmp(&(b.1 - freq_hz).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

/// Welch estimate: Hann-windowed segments, averaged periodograms, bins
/// ordered from `−fs/2` upwards. Scaled so that the integral over frequency
/// equals the mean power of the input.
pub fn estimate_psd(
    x: &ComplexFrame,
    segment_len: usize,
    overlap_fraction: f64,
) -> Result<SpectrumEstimate> {
    if segment_len < 2 {
        return Err(Error::param("segment_len", "must be at least 2"));
    }
    if segment_len > x.len() {
        return Err(Error::param(
            "segment_len",
            format!("{segment_len} exceeds frame length {}", x.len()),
        ));
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::param("overlap_fraction", "must be in [0, 1)"));
    }
    let fs = x.sample_rate_hz();
    let n = segment_len;
    // Periodic Hann window.
    let window: Vec<f64> = (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect();
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let hop = (((1.0 - overlap_fraction) * n as f64).round() as usize).max(1);

    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut acc = vec![0.0; n];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut segments = 0usize;
    let samples = x.samples();
    let mut start = 0;
    while start + n <= samples.len() {
        for (b, (s, w)) in buf
            .iter_mut()
            .zip(samples[start..start + n].iter().zip(&window))
        {
            *b = s * w;
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += hop;
    }

    let scale = 1.0 / (fs * window_power * segments as f64);
    let half = n / 2;
    // fftshift: bin k ↦ frequency (k − n/2)·fs/n.
    let (frequencies_hz, psd_w_per_hz) = (0..n)
        .map(|k| {
            let src = (k + n - half) % n;
            ((k as f64 - half as f64) * fs / n as f64, acc[src] * scale)
        })
        .unzip();
    Ok(SpectrumEstimate {
        frequencies_hz,
        psd_w_per_hz,
        resolution_bw_hz: fs / n as f64,
    })
}

/// Up to `max_points` `(re, im)` pairs taken from the start of `x`.
pub fn constellation_snapshot(x: &ComplexFrame, max_points: usize) -> Vec<(f64, f64)> {
    x.samples()
        .iter()
        .take(max_points)
        .map(|s| (s.re, s.im))
        .collect()
}

/// Gray-coded square M-QAM bit error probability over AWGN, nearest
/// neighbour approximation:
/// `P_b ≈ (4/log2 M)(1 − 1/√M)·Q(√(3·Es/N0/(M − 1)))`.
pub fn theoretical_qam_ber(es_n0_db: f64, m_ary: usize) -> Result<f64> {
    if m_ary < 4 || !m_ary.is_power_of_two() || !m_ary.trailing_zeros().is_multiple_of(2) {
        return Err(Error::param(
            "m_ary",
            format!("{m_ary} is not a square QAM order"),
        ));
    }
    let m = m_ary as f64;
    let es_n0 = 10f64.powf(es_n0_db / 10.0);
    let q = |x: f64| 0.5 * libm::erfc(x / std::f64::consts::SQRT_2);
    Ok(4.0 / m.log2() * (1.0 - 1.0 / m.sqrt()) * q((3.0 * es_n0 / (m - 1.0)).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::AwgnSource;
    use proptest::prelude::*;

    fn bits(v: Vec<u8>) -> BitFrame {
        BitFrame::new(v).unwrap()
    }

    #[test]
    fn ber_counting() {
        let tx = bits((0..1000).map(|i| (i % 3 == 0) as u8).collect());
        assert_eq!(measure_ber(&tx, &tx, 0).unwrap().ber, 0.0);
        let inv = bits(tx.bits().iter().map(|b| 1 - b).collect());
        assert_eq!(measure_ber(&tx, &inv, 0).unwrap().ber, 1.0);
        let mut one = tx.bits().to_vec();
        one[500] ^= 1;
        let r = measure_ber(&tx, &bits(one), 0).unwrap();
        assert_eq!((r.bit_errors, r.bits_compared), (1, 1000));
        assert_eq!(r.ber, 0.001);
    }

    #[test]
    fn ber_with_delay() {
        let tx = bits(vec![1, 0, 1, 1, 0]);
        let rx = bits(vec![0, 0, 0, 1, 0, 1, 1, 0, 1, 1]);
        let r = measure_ber(&tx, &rx, 3).unwrap();
        assert_eq!(
            (r.bit_errors, r.bits_compared, r.alignment_delay_bits),
            (0, 5, 3)
        );
        assert!(matches!(
            measure_ber(&tx, &rx, 10),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn analytic_delay() {
        assert_eq!(pipeline_delay_bits(&ModemConfig::default()), 80);
    }

    #[test]
    fn correlation_finds_lag() {
        let tx: Vec<Complex64> = (0..500)
            .map(|k| {
                Complex64::new(
                    ((k * 7919) % 13) as f64 - 6.0,
                    ((k * 104729) % 11) as f64 - 5.0,
                )
            })
            .collect();
        let mut rx = vec![Complex64::new(0.0, 0.0); 10];
        rx.extend(tx.iter().map(|s| s * Complex64::from_polar(1.0, 0.7)));
        assert_eq!(estimate_delay_symbols(&tx, &rx, 20, 64), Some(10));
    }

    #[test]
    fn psd_tone_peak() {
        let fs = 1000.0;
        let f0 = 125.0;
        let x = ComplexFrame::new(
            (0..8192)
                .map(|n| {
                    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * f0 * n as f64 / fs)
                })
                .collect(),
            fs,
        )
        .unwrap();
        let psd = estimate_psd(&x, 256, 0.5).unwrap();
        let peak = psd
            .psd_w_per_hz
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(psd.frequencies_hz[peak], f0);
        assert_eq!(psd.frequencies_hz[0], -fs / 2.0);
        assert!((psd.total_power() - 1.0).abs() < 0.01);
    }

    #[test]
    fn psd_white_noise_is_flat() {
        let fs = 50_000.0;
        let sigma2 = 2.5;
        let zeros = ComplexFrame::new(vec![Complex64::new(0.0, 0.0); 256 * 2000], fs).unwrap();
        let x = AwgnSource::new(4).add(&zeros, sigma2);
        let psd = estimate_psd(&x, 256, 0.5).unwrap();
        let level = sigma2 / fs;
        for p in &psd.psd_w_per_hz {
            assert!((p / level - 1.0).abs() < 0.10, "{}", p / level);
        }
        assert!((psd.total_power() / x.mean_power() - 1.0).abs() < 0.01);
    }

    #[test]
    fn psd_errors() {
        let x = ComplexFrame::new(vec![Complex64::new(1.0, 0.0); 100], 1.0).unwrap();
        assert!(estimate_psd(&x, 200, 0.5).is_err());
        assert!(estimate_psd(&x, 64, 1.0).is_err());
        assert!(estimate_psd(&x, 64, -0.1).is_err());
    }

    #[test]
    fn snapshot_takes_prefix() {
        let x = ComplexFrame::new(
            (0..10)
                .map(|k| Complex64::new(k as f64, -(k as f64)))
                .collect(),
            1.0,
        )
        .unwrap();
        assert_eq!(
            constellation_snapshot(&x, 3),
            vec![(0.0, 0.0), (1.0, -1.0), (2.0, -2.0)]
        );
        assert_eq!(constellation_snapshot(&x, 100).len(), 10);
    }

    #[test]
    fn theory_limits_and_errors() {
        assert!(theoretical_qam_ber(60.0, 16).unwrap() < 1e-100);
        let mut prev = 1.0;
        for k in 0..40 {
            let p = theoretical_qam_ber(k as f64 * 0.5, 16).unwrap();
            assert!(p < prev);
            prev = p;
        }
        assert!(theoretical_qam_ber(10.0, 8).is_err());
        assert!(theoretical_qam_ber(10.0, 2).is_err());
        // QPSK closed form is exact: Q(√(Es/N0)).
        let q = theoretical_qam_ber(0.0, 4).unwrap();
        assert!((q - 0.5 * libm::erfc(1.0 / std::f64::consts::SQRT_2)).abs() < 1e-15);
    }

    // Exact per-axis BER by Simpson integration of the Gaussian over each
    // decision interval, weighting by Hamming distance of the Gray labels.
    fn integrated_16qam_ber(es_n0_db: f64) -> f64 {
        let es_n0 = 10f64.powf(es_n0_db / 10.0);
        let sigma = (10.0 / es_n0 / 2.0).sqrt();
        let levels = [-3.0, -1.0, 1.0, 3.0];
        let labels = [0b00u8, 0b01, 0b11, 0b10];
        let edges = [-1e3, -2.0, 0.0, 2.0, 1e3];
        let pdf = |x: f64, mu: f64| {
            (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp()
                / (sigma * (2.0 * std::f64::consts::PI).sqrt())
        };
        let simpson = |a: f64, b: f64, mu: f64| {
            let (a, b) = (a.max(mu - 12.0 * sigma), b.min(mu + 12.0 * sigma));
            if b <= a {
                return 0.0;
            }
            let n = 4000;
            let h = (b - a) / n as f64;
            let mut s = pdf(a, mu) + pdf(b, mu);
            for i in 1..n {
                s += pdf(a + i as f64 * h, mu) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        let mut bit_errors = 0.0;
        for (i, &mu) in levels.iter().enumerate() {
            for j in 0..4 {
                let p = simpson(edges[j], edges[j + 1], mu);
                bit_errors += p * (labels[i] ^ labels[j]).count_ones() as f64;
            }
        }
        // Per axis: 4 equiprobable levels, 2 bits each.
        bit_errors / 4.0 / 2.0
    }

    #[test]
    fn theory_matches_numeric_integration() {
        for tenth_db in (60..=200).step_by(5) {
            let db = tenth_db as f64 / 10.0;
            let exact = integrated_16qam_ber(db);
            if exact > 1e-2 {
                continue;
            }
            let approx = theoretical_qam_ber(db, 16).unwrap();
            assert!(
                (approx / exact - 1.0).abs() < 0.10,
                "{db} dB: {approx} vs {exact}"
            );
        }
    }

    proptest! {
        #[test]
        fn ber_symmetric(a in proptest::collection::vec(0u8..2, 1..200), seed in any::<u64>()) {
            let b: Vec<u8> = a.iter().enumerate().map(|(i, x)| x ^ (((seed >> (i % 64)) & 1) as u8)).collect();
            let (fa, fb) = (bits(a), bits(b));
            prop_assert_eq!(measure_ber(&fa, &fb, 0).unwrap(), measure_ber(&fb, &fa, 0).unwrap());
        }
    }
}
