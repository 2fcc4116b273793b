//! Closed-form and Monte-Carlo analysis: pairwise error probability, the
//! union bound on BER, achievable rate, decoding complexity per bit and
//! minimum-distance comparisons against PSK/QAM.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel;
use crate::error::{invalid, unsupported, Error, Result};
use crate::modem::Modem;

/// Largest `f` accepted by the exhaustive union bound.
pub const MAX_BOUND_BITS: usize = 14;
/// Largest `f` accepted by the achievable-rate estimator.
pub const MAX_RATE_BITS: usize = 12;
// codeword averages are exact up to this f, sampled above it
const EXACT_RATE_BITS: usize = 6;
const RATE_CHUNK: usize = 64;

/// Statistics of one ordered codeword pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairStats {
    pub i: usize,
    pub j: usize,
    /// `|s_i(n) - s_j(n)|^2` per subcarrier.
    pub sq_diff: Vec<f64>,
    /// Number of bits in which the two codewords' labels differ.
    pub bit_distance: u32,
}

impl PairStats {
    pub fn new(i: usize, j: usize, words: &[Vec<Complex64>]) -> Result<Self> {
        let (a, b) = match (words.get(i), words.get(j)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(invalid!("pair ({i}, {j}) outside codebook of {}", words.len())),
        };
        Ok(PairStats {
            i,
            j,
            sq_diff: a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).collect(),
            bit_distance: (i ^ j).count_ones(),
        })
    }
}

/// Two-exponential approximation of the PEP averaged over i.i.d. Rayleigh
/// fading.
pub fn pep_unconditional(sq_diff: &[f64], gamma: f64) -> f64 {
    let (mut a, mut b) = (1.0, 1.0);
    for &d in sq_diff {
        a *= 1.0 + gamma * d / 4.0;
        b *= 1.0 + gamma * d / 3.0;
    }
    1.0 / (12.0 * a) + 1.0 / (4.0 * b)
}

fn codebook_words(modem: &Modem, limit: usize, what: &str) -> Result<Vec<Vec<Complex64>>> {
    let f = modem.bits_per_group();
    if f > limit {
        return Err(unsupported!(
            "{}: {what} needs f <= {limit}, got f = {f}",
            modem.scheme()
        ));
    }
    Ok(modem.codebook()?.symbols(modem.alphabet()))
}

fn gamma_of(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

/// Union bound on BER at each SNR (dB).
pub fn union_bound_curve(modem: &Modem, snr_db: &[f64]) -> Result<Vec<f64>> {
    let words = codebook_words(modem, MAX_BOUND_BITS, "the union bound")?;
    let f = modem.bits_per_group();
    if f == 0 {
        return Ok(vec![0.0; snr_db.len()]);
    }
    let gammas: Vec<f64> = snr_db.iter().map(|&s| gamma_of(s)).collect();
    let rows: Vec<Vec<f64>> = (0..words.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![0.0; gammas.len()];
            let mut sq = vec![0.0; modem.n()];
            for j in i + 1..words.len() {
                for (d, (a, b)) in sq.iter_mut().zip(words[i].iter().zip(&words[j])) {
                    *d = (a - b).norm_sqr();
                }
                let weight = f64::from((i ^ j).count_ones());
                for (slot, &g) in acc.iter_mut().zip(&gammas) {
                    *slot += weight * pep_unconditional(&sq, g);
                }
            }
            acc
        })
        .collect();
    // both orders of a pair contribute equally
    let scale = 2.0 / (f as f64 * words.len() as f64);
    Ok((0..gammas.len())
        .map(|k| rows.iter().map(|r| r[k]).sum::<f64>() * scale)
        .collect())
}

pub fn union_bound_ber(modem: &Modem, snr_db: f64) -> Result<f64> {
    Ok(union_bound_curve(modem, &[snr_db])?[0])
}

/// One point of an achievable-rate sweep, in bits per subcarrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub snr_db: f64,
    pub rate: f64,
    pub samples: usize,
    pub stderr: f64,
}

fn log2_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    (max + sum.ln()) / std::f64::consts::LN_2
}

/// Monte-Carlo estimate of the rate with equiprobable codewords.
///
/// Every SNR point reuses the same fading and unit-variance noise draws.
/// For `f <= 6` the transmitted codeword is averaged exactly; above that
/// it is drawn uniformly per sample.
pub fn achievable_rate_curve(
    modem: &Modem,
    snr_db: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<RatePoint>> {
    if samples == 0 {
        return Err(invalid!("need at least one Monte-Carlo sample"));
    }
    let words = codebook_words(modem, MAX_RATE_BITS, "the achievable rate")?;
    let f = modem.bits_per_group();
    let n = modem.n();
    let exact = f <= EXACT_RATE_BITS;
    let scales: Vec<f64> = snr_db.iter().map(|&s| gamma_of(s).sqrt()).collect();
    let chunks = samples.div_ceil(RATE_CHUNK);

    let partial: Vec<Vec<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = RATE_CHUNK.min(samples - c * RATE_CHUNK);
            let mut acc = vec![(0.0, 0.0); scales.len()];
            let mut lambda = vec![0.0; words.len()];
            for _ in 0..count {
                let h = channel::sample_realization(&mut rng, n).h;
                let w = channel::sample_noise(&mut rng, n, 1.0);
                let w_energy: f64 = w.iter().map(|z| z.norm_sqr()).sum();
                let sent: Vec<usize> = if exact {
                    (0..words.len()).collect()
                } else {
                    vec![rng.random_range(0..words.len())]
                };
                for (slot, &scale) in acc.iter_mut().zip(&scales) {
                    let mut term = 0.0;
                    for &i in &sent {
                        for (l, wj) in lambda.iter_mut().zip(&words) {
                            let dist: f64 = (0..n)
                                .map(|k| (h[k] * (words[i][k] - wj[k]) * scale + w[k]).norm_sqr())
                                .sum();
                            *l = w_energy - dist;
                        }
                        term += log2_sum_exp(&lambda);
                    }
                    term /= sent.len() as f64;
                    slot.0 += term;
                    slot.1 += term * term;
                }
            }
            acc
        })
        .collect();

    Ok(snr_db
        .iter()
        .enumerate()
        .map(|(k, &snr)| {
            let (sum, sumsq) = partial
                .iter()
                .fold((0.0, 0.0), |(s, q), p| (s + p[k].0, q + p[k].1));
            let s = samples as f64;
            let mean = sum / s;
            let var = if samples > 1 {
                ((sumsq - s * mean * mean) / (s - 1.0)).max(0.0)
            } else {
                0.0
            };
            RatePoint {
                snr_db: snr,
                rate: (f as f64 - mean) / n as f64,
                samples,
                stderr: (var / s).sqrt() / n as f64,
            }
        })
        .collect())
}

pub fn achievable_rate(modem: &Modem, snr_db: f64, samples: usize, seed: u64) -> Result<RatePoint> {
    Ok(achievable_rate_curve(modem, &[snr_db], samples, seed)?[0])
}

/// Schemes compared by decoding complexity per bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComplexityScheme {
    MdsApm,
    MmOfdmIm,
    OfdmIm,
    Ofdm,
}

impl ComplexityScheme {
    pub const ALL: [ComplexityScheme; 4] = [
        ComplexityScheme::MdsApm,
        ComplexityScheme::MmOfdmIm,
        ComplexityScheme::OfdmIm,
        ComplexityScheme::Ofdm,
    ];
}

impl fmt::Display for ComplexityScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComplexityScheme::MdsApm => "mds-apm",
            ComplexityScheme::MmOfdmIm => "mm-ofdm-im",
            ComplexityScheme::OfdmIm => "ofdm-im",
            ComplexityScheme::Ofdm => "ofdm",
        })
    }
}

impl FromStr for ComplexityScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ComplexityScheme::ALL
            .into_iter()
            .find(|c| c.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| invalid!("unknown scheme '{s}'"))
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Common SE `η = (1/N) log2 N! + log2 M` of the matched schemes.
pub fn matched_spectral_efficiency(n: usize, m: f64) -> f64 {
    ln_factorial(n) / n as f64 / std::f64::consts::LN_2 + m.log2()
}

/// Metric calculations per information bit at the matched SE.
///
/// The OFDM baseline uses a `2^η`-ary constellation.
pub fn decoding_complexity_per_bit(n: usize, m: f64, scheme: ComplexityScheme) -> Result<f64> {
    if n < 2 {
        return Err(invalid!("N must be at least 2, got {n}"));
    }
    if !(m >= 1.0 && m.is_finite()) {
        return Err(invalid!("M must be at least 1, got {m}"));
    }
    let eta = matched_spectral_efficiency(n, m);
    let nf = n as f64;
    let per_subcarrier = match scheme {
        ComplexityScheme::MdsApm => {
            let kp = (ln_factorial(n) / (nf - 1.0)).exp();
            kp * m * (1.0 - 1.0 / nf) + m / nf
        }
        ComplexityScheme::MmOfdmIm => m * nf / 2.0 + m / 2.0,
        ComplexityScheme::OfdmIm => ((nf * m.ln() + ln_factorial(n - 1)) / (nf - 1.0)).exp(),
        ComplexityScheme::Ofdm => eta.exp2(),
    };
    Ok(per_subcarrier / eta)
}

/// Large-`N` forms with `KPM = M2 N / e`: `(ζ_APM, ζ_MM)`.
pub fn asymptotic_complexity(n: usize, m2: f64) -> (f64, f64) {
    let x = m2 * n as f64;
    let eta = (x / E).log2();
    (x / (E * eta), x / (2.0 * eta))
}

/// Per-subcarrier metric counts of the benchmark detectors: OFDM-IM (LLR),
/// MM-OFDM-IM (subcarrier-wise) and OFDM (ML).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkCounts {
    pub ofdm_im: f64,
    pub mm_ofdm_im: f64,
    pub ofdm: f64,
}

pub fn benchmark_counts(n: usize, m1: u32, m2: u32, m3: u32) -> BenchmarkCounts {
    let m2 = f64::from(m2);
    BenchmarkCounts {
        ofdm_im: f64::from(m1),
        mm_ofdm_im: m2 * n as f64 / 2.0 + m2 / 2.0,
        ofdm: f64::from(m3),
    }
}

/// Minimum distances of APM(N,M,M,M), IQM(N,M,M,sqrt M) and `M^2`-ary
/// PSK/QAM at unit energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedComparison {
    pub log2_m: u32,
    pub apm: f64,
    pub iqm: f64,
    pub psk: f64,
    pub qam: f64,
}

pub fn med_comparison(log2_m: u32) -> Result<MedComparison> {
    if log2_m == 0 || log2_m > 20 {
        return Err(invalid!("log2 M must be in 1..=20, got {log2_m}"));
    }
    let m = f64::from(1u32 << log2_m);
    let apm = 2.0 * 2f64.sqrt() / (m + 1.0).sqrt() * (PI / m).sin();
    // d1 with ξ = M and M-ary sets replaced by sqrt(M)-ary ones
    let iqm = (6.0 / (m - m.powi(-2))).sqrt();
    Ok(MedComparison {
        log2_m,
        apm,
        iqm,
        psk: 2.0 * (PI / (m * m)).sin(),
        qam: (6.0 / (m * m - 1.0)).sqrt(),
    })
}

/// Smallest `log2 M` in `1..=max` at which APM(N,M,M,M) no longer exceeds
/// `M^2`-QAM.
pub fn apm_qam_crossover(max_log2_m: u32) -> Result<Option<u32>> {
    for l in 1..=max_log2_m {
        let c = med_comparison(l)?;
        if c.apm <= c.qam {
            return Ok(Some(l));
        }
    }
    Ok(None)
}
