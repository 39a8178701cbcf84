use num_complex::Complex64;

use crate::{Error, Result};

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Converts a gain in dB to an amplitude (voltage) ratio.
#[inline]
pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Converts a gain in dB to a power ratio.
#[inline]
pub fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a power ratio to dB.
#[inline]
pub fn power_to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// A block of complex baseband samples at a known sample rate.
///
/// Samples are dimensionless amplitudes; in physical mode they are read as
/// volts across a 1 ohm reference, so `|x|^2` is watts.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexFrame {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
}

impl ComplexFrame {
    /// Builds a frame, rejecting a non-positive sample rate or non-finite samples.
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::param(
                "sample_rate_hz",
                format!("must be positive and finite, got {sample_rate_hz}"),
            ));
        }
        if let Some(i) = samples
            .iter()
            .position(|s| !(s.re.is_finite() && s.im.is_finite()))
        {
            return Err(Error::param(
                "samples",
                format!("sample {i} is not finite ({})", samples[i]),
            ));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    // Internal constructor for blocks whose arithmetic cannot introduce NaN/Inf
    // from finite inputs.
    pub(crate) fn from_parts(samples: Vec<Complex64>, sample_rate_hz: f64) -> Self {
        debug_assert!(sample_rate_hz > 0.0);
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean of `|x|^2` over the frame; zero for an empty frame.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Applies `f` to every sample, keeping the sample rate.
    pub fn map(&self, f: impl FnMut(&Complex64) -> Complex64) -> Self {
        Self::from_parts(self.samples.iter().map(f).collect(), self.sample_rate_hz)
    }

    /// Multiplies every sample by a real factor.
    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|s| s * factor)
    }

    /// Splits the frame at `mid` into two frames at the same rate.
    pub fn split_at(&self, mid: usize) -> (Self, Self) {
        let (a, b) = self.samples.split_at(mid);
        (
            Self::from_parts(a.to_vec(), self.sample_rate_hz),
            Self::from_parts(b.to_vec(), self.sample_rate_hz),
        )
    }

    /// Appends another frame's samples; both must share a sample rate.
    pub fn extend_from(&mut self, other: &ComplexFrame) -> Result<()> {
        if other.sample_rate_hz != self.sample_rate_hz {
            return Err(Error::SampleRateMismatch {
                expected: self.sample_rate_hz,
                got: other.sample_rate_hz,
            });
        }
        self.samples.extend_from_slice(&other.samples);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_rate_and_nan() {
        assert!(ComplexFrame::new(vec![], 0.0).is_err());
        assert!(ComplexFrame::new(vec![], -1.0).is_err());
        assert!(ComplexFrame::new(vec![Complex64::new(f64::NAN, 0.0)], 1.0).is_err());
        assert!(ComplexFrame::new(vec![Complex64::new(0.0, f64::INFINITY)], 1.0).is_err());
        assert!(ComplexFrame::new(vec![Complex64::new(1.0, 2.0)], 1.0).is_ok());
    }

    #[test]
    fn db_helpers() {
        assert!((db_to_amplitude(20.0) - 10.0).abs() < 1e-12);
        assert!((db_to_power(10.0) - 10.0).abs() < 1e-12);
        assert!((power_to_db(100.0) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn mean_power_and_extend() {
        let mut a = ComplexFrame::new(vec![Complex64::new(1.0, 1.0)], 10.0).unwrap();
        let b = ComplexFrame::new(vec![Complex64::new(0.0, 0.0)], 10.0).unwrap();
        a.extend_from(&b).unwrap();
        assert_eq!(a.len(), 2);
        assert!((a.mean_power() - 1.0).abs() < 1e-15);
        let c = ComplexFrame::new(vec![], 20.0).unwrap();
        assert!(a.extend_from(&c).is_err());
    }
}
