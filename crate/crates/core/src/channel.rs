//! Flat Rayleigh fading per subcarrier with additive white Gaussian noise.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};

/// Per-subcarrier fading coefficients, each `CN(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// A channel with unit gain on every subcarrier.
    pub fn flat(n: usize) -> Self {
        ChannelRealization {
            h: vec![Complex64::new(1.0, 0.0); n],
        }
    }
}

/// Noise level for unit average symbol energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub snr_db: f64,
    pub n0: f64,
}

impl NoiseParams {
    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        let n0 = 10f64.powf(-snr_db / 10.0);
        if !(n0.is_finite() && n0 > 0.0) {
            return Err(invalid!("SNR {snr_db} dB gives an unusable noise level"));
        }
        Ok(NoiseParams { snr_db, n0 })
    }

    /// Average received SNR, `γ = 1/N0`.
    pub fn gamma(&self) -> f64 {
        1.0 / self.n0
    }
}

/// One `CN(0, variance)` draw.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

pub fn sample_realization<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ChannelRealization {
    ChannelRealization {
        h: (0..n).map(|_| complex_gaussian(rng, 1.0)).collect(),
    }
}

pub fn sample_noise<R: Rng + ?Sized>(rng: &mut R, n: usize, n0: f64) -> Vec<Complex64> {
    (0..n).map(|_| complex_gaussian(rng, n0)).collect()
}

/// `y_n = s_n h_n + noise_n`.
pub fn apply(s: &[Complex64], h: &[Complex64], noise: &[Complex64]) -> Result<Vec<Complex64>> {
    if s.len() != h.len() || s.len() != noise.len() {
        return Err(invalid!(
            "length mismatch: s={}, h={}, noise={}",
            s.len(),
            h.len(),
            noise.len()
        ));
    }
    Ok(s.iter()
        .zip(h)
        .zip(noise)
        .map(|((s, h), w)| s * h + w)
        .collect())
}
