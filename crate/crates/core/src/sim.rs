//! Monte-Carlo BER sweeps.
//!
//! Frames are generated in fixed-size batches. Batch `b` of SNR point `i`
//! draws from a ChaCha8 stream keyed by `(seed, i, b)`, and batches are
//! reduced frame by frame in batch order, so results do not depend on the
//! number of worker threads.
//!
//! For ML detection of small codebooks the channel is drawn in polar form.
//! With `g_n = |h_n|^2 ~ Exp(1)` and `rho = ||n||^2 / N0 ~ Gamma(N, 1)`, the
//! ML decision can only be wrong when `rho` reaches a quarter of the faded
//! squared distance to the nearest other codeword. That distance is at least
//! `b * min_n g_n`, where `b` comes from the codebook, so groups outside the
//! event `rho >= b min_n g_n` are error-free. Such groups are skipped with a
//! geometric draw, and for the remaining ones `(min_n g_n, rho)` is drawn from
//! its exact conditional law before phases and the noise direction are added
//! and the detector runs. The joint law of `(h, n)` is unchanged.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Gamma, Geometric};
use rayon::prelude::*;

use crate::channel::{self, NoiseParams};
use crate::detect::{Detector, MlDetector, Receiver};
use crate::error::{invalid, Result};
use crate::modem::{Modem, SchemeConfig};

/// Frames simulated per batch.
pub const BATCH_FRAMES: u64 = 512;
// largest W^2 N for which pairwise distance tables are kept
const MAX_SCREEN_TABLE: usize = 1 << 20;
const MAX_SCREEN_N: usize = 32;

/// Stop once `min_bit_errors` errors are seen or `max_frames` frames are sent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRule {
    pub min_bit_errors: u64,
    pub max_frames: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            min_bit_errors: 200,
            max_frames: 10_000_000,
        }
    }
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        if self.min_bit_errors == 0 {
            return Err(invalid!("min_bit_errors must be at least 1"));
        }
        if self.max_frames == 0 {
            return Err(invalid!("max_frames must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub bits_sent: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub frames: u64,
    pub seed: u64,
    pub detector: Detector,
}

/// Everything fixed across the points of one sweep.
struct Sweep<'a> {
    config: &'a SchemeConfig,
    modem: &'a Modem,
    receiver: &'a Receiver,
    detector: Detector,
    stop: StopRule,
    seed: u64,
    screen: Option<Screen>,
}

/// Codeword symbols and per-subcarrier squared distances of all pairs.
struct Screen {
    words: usize,
    n: usize,
    symbols: Vec<Complex64>,
    // delta[(i * words + j) * n + k] = |s_i(k) - s_j(k)|^2
    delta: Vec<f64>,
    // min over pairs of sum_k g_k delta_ijk is at least floor * min_k g_k
    floor: f64,
}

/// Per-point sampling constants of the screened path.
struct ScreenPoint {
    n0: f64,
    // P(rho >= b min_n g_n)
    p_event: f64,
    skip: Geometric,
    total: Gamma<f64>,
}

impl Screen {
    fn new(modem: &Modem) -> Result<Option<Self>> {
        let n = modem.n();
        let f = modem.bits_per_group();
        if f >= 32 || n > MAX_SCREEN_N || (1usize << (2 * f)) * n > MAX_SCREEN_TABLE {
            return Ok(None);
        }
        let words = 1usize << f;
        let symbols: Vec<Complex64> = modem
            .codebook()?
            .symbols(modem.alphabet())
            .into_iter()
            .flatten()
            .collect();
        let mut delta = Vec::with_capacity(words * words * n);
        for i in 0..words {
            for j in 0..words {
                for k in 0..n {
                    delta.push((symbols[i * n + k] - symbols[j * n + k]).norm_sqr());
                }
            }
        }
        let mut min_delta = f64::INFINITY;
        let mut min_support = n;
        for i in 0..words {
            for j in 0..words {
                if i == j {
                    continue;
                }
                let d = &delta[(i * words + j) * n..(i * words + j + 1) * n];
                min_support = min_support.min(d.iter().filter(|&&x| x > 0.0).count());
                for &x in d.iter().filter(|&&x| x > 0.0) {
                    min_delta = min_delta.min(x);
                }
            }
        }
        let floor = if min_support == 0 || !min_delta.is_finite() {
            0.0
        } else {
            min_support as f64 * min_delta
        };
        Ok(Some(Screen { words, n, symbols, delta, floor }))
    }

    fn point(&self, n0: f64) -> Result<ScreenPoint> {
        let nf = self.n as f64;
        let b = self.floor / (4.0 * n0);
        // E = N min_n g_n ~ Exp(1); event is E <= s rho
        let s = nf / b;
        let p_event = if b > 0.0 { -(-nf * s.ln_1p()).exp_m1() } else { 1.0 };
        let skip = Geometric::new(p_event).map_err(|e| invalid!("screening probability: {e}"))?;
        let total = Gamma::new(nf + 1.0, 1.0).map_err(|e| invalid!("screening gamma: {e}"))?;
        Ok(ScreenPoint { n0, p_event, skip, total })
    }

    /// `min_j sum_k g_k |s_i(k) - s_j(k)|^2` over `j != i`.
    fn faded_distance(&self, i: usize, g: &[f64]) -> f64 {
        let row = &self.delta[i * self.words * self.n..(i + 1) * self.words * self.n];
        let mut best = f64::INFINITY;
        for (j, d) in row.chunks_exact(self.n).enumerate() {
            if j != i {
                let v: f64 = d.iter().zip(g).map(|(a, b)| a * b).sum();
                best = best.min(v);
            }
        }
        best
    }

    /// Bit errors of one group conditioned on the screening event.
    fn event(&self, rng: &mut ChaCha8Rng, ml: &MlDetector, sp: &ScreenPoint, g: &mut [f64]) -> Result<u32> {
        let n = self.n;
        let nf = n as f64;
        let i = (rng.next_u64() as usize) & (self.words - 1);
        // V = E / (E + rho) ~ Beta(1, N) independent of E + rho ~ Gamma(N + 1),
        // and the event is V <= s / (1 + s), which has CDF value p_event
        let u: f64 = rng.random();
        let v = -((-u * sp.p_event).ln_1p() / nf).exp_m1();
        let t = rng.sample(sp.total);
        let e = v * t;
        let rho = t - e;
        let low = e / nf;
        let m = rng.random_range(0..n);
        for (k, x) in g.iter_mut().enumerate() {
            *x = if k == m { low } else { low + rng.sample::<f64, _>(Exp1) };
        }
        if rho < self.faded_distance(i, g) / (4.0 * sp.n0) {
            return Ok(0);
        }
        let h: Vec<Complex64> = g
            .iter()
            .map(|&gk| Complex64::from_polar(gk.sqrt(), 2.0 * PI * rng.random::<f64>()))
            .collect();
        let w = channel::sample_noise(rng, n, 1.0);
        let scale = (sp.n0 * rho / w.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
        let y: Vec<Complex64> = (0..n)
            .map(|k| self.symbols[i * n + k] * h[k] + w[k] * scale)
            .collect();
        let est = ml.best_word(&y, &h)?;
        Ok((i ^ est).count_ones())
    }
}

/// Frames of one batch with their nonzero error counts as `(offset, errors)`.
struct BatchErrors {
    frames: u64,
    errors: Vec<(u64, u32)>,
}

impl Sweep<'_> {
    fn batch(&self, noise: NoiseParams, point: usize, batch: u64, frames: u64) -> Result<BatchErrors> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((point as u64) << 40) | batch);
        let modem = self.modem;
        let n = modem.n();
        let groups = self.config.groups as u64;
        let mut errors: Vec<(u64, u32)> = Vec::new();
        let mut record = |frame: u64, e: u32| {
            if e == 0 {
                return;
            }
            match errors.last_mut() {
                Some((f, acc)) if *f == frame => *acc += e,
                _ => errors.push((frame, e)),
            }
        };
        if let (Some(screen), Receiver::Ml(ml)) = (&self.screen, self.receiver) {
            let sp = screen.point(noise.n0)?;
            let mut g = vec![0.0; n];
            let end = frames * groups;
            let mut pos = 0u64;
            loop {
                pos = pos.saturating_add(rng.sample(sp.skip));
                if pos >= end {
                    break;
                }
                record(pos / groups, screen.event(&mut rng, ml, &sp, &mut g)?);
                pos += 1;
            }
            return Ok(BatchErrors { frames, errors });
        }
        let mut input = vec![false; modem.bits_per_group()];
        for frame in 0..frames {
            for _ in 0..groups {
                input.iter_mut().for_each(|b| *b = rng.random());
                let sv = modem.encode_group(&input)?;
                let h = channel::sample_realization(&mut rng, n).h;
                let w = channel::sample_noise(&mut rng, n, noise.n0);
                let y = channel::apply(&sv.values, &h, &w)?;
                let det = self.receiver.detect(&y, &h)?;
                record(frame, crate::bits::hamming(&det.bits, &input) as u32);
            }
        }
        Ok(BatchErrors { frames, errors })
    }

    fn point(&self, point: usize, snr_db: f64) -> Result<BerPoint> {
        let noise = NoiseParams::from_snr_db(snr_db)?;
        let stop = self.stop;
        let bits_per_frame = (self.modem.bits_per_group() * self.config.groups) as u64;
        let width = rayon::current_num_threads().max(1) as u64;
        let (mut frames, mut errors) = (0u64, 0u64);
        let mut next_batch = 0u64;
        'outer: while frames < stop.max_frames && errors < stop.min_bit_errors {
            let batches: Vec<(u64, u64)> = (next_batch..next_batch + width)
                .map(|b| (b, b * BATCH_FRAMES))
                .take_while(|&(_, start)| start < stop.max_frames)
                .map(|(b, start)| (b, BATCH_FRAMES.min(stop.max_frames - start)))
                .collect();
            next_batch += batches.len() as u64;
            let results: Vec<Result<BatchErrors>> = batches
                .par_iter()
                .map(|&(b, count)| self.batch(noise, point, b, count))
                .collect();
            for r in results {
                let r = r?;
                for &(offset, e) in &r.errors {
                    errors += u64::from(e);
                    if errors >= stop.min_bit_errors {
                        frames += offset + 1;
                        break 'outer;
                    }
                }
                frames += r.frames;
                if frames >= stop.max_frames {
                    break 'outer;
                }
            }
        }
        let bits_sent = frames * bits_per_frame;
        Ok(BerPoint {
            snr_db,
            bits_sent,
            bit_errors: errors,
            ber: if bits_sent == 0 { 0.0 } else { errors as f64 / bits_sent as f64 },
            frames,
            seed: self.seed,
            detector: self.detector,
        })
    }
}

/// BER over an SNR sweep.
pub fn run_ber_sweep(
    config: &SchemeConfig,
    snr_db: &[f64],
    detector: Detector,
    stop: StopRule,
    seed: u64,
) -> Result<Vec<BerPoint>> {
    stop.validate()?;
    if snr_db.is_empty() {
        return Err(invalid!("SNR list is empty"));
    }
    let modem = Modem::new(config.scheme)?;
    let receiver = Receiver::new(&modem, detector)?;
    let sweep = Sweep {
        config,
        modem: &modem,
        receiver: &receiver,
        detector,
        stop,
        seed,
        screen: match detector {
            Detector::Ml => Screen::new(&modem)?,
            Detector::Lcml => None,
        },
    };
    snr_db
        .iter()
        .enumerate()
        .map(|(i, &s)| sweep.point(i, s))
        .collect()
}

/// Runs `f` inside a pool of `threads` workers, or the global pool when
/// `threads` is `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(invalid!("thread count must be at least 1")),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| invalid!("cannot start {t} worker threads: {e}"))?;
            Ok(pool.install(f))
        }
    }
}
