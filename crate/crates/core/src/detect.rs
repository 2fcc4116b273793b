//! Maximum-likelihood and low-complexity ML detection of one group.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{invalid, unsupported, Error, Result};
use crate::mdscode;
use crate::modem::{Codebook, Modem, Provenance, Scheme};

/// Detector choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Detector {
    Ml,
    Lcml,
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Detector::Ml => "ml",
            Detector::Lcml => "lcml",
        })
    }
}

impl FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ml" => Ok(Detector::Ml),
            "lcml" | "lc-ml" => Ok(Detector::Lcml),
            _ => Err(invalid!("unknown detector '{s}' (expected ml or lcml)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionResult {
    pub provenance: Provenance,
    pub bits: Vec<bool>,
    pub metric_evaluations: u64,
}

fn check_lengths(n: usize, y: &[Complex64], h: &[Complex64]) -> Result<()> {
    if y.len() != n || h.len() != n {
        return Err(invalid!("expected {n} samples, got y={} h={}", y.len(), h.len()));
    }
    Ok(())
}

/// `|y_n - x h_n|^2` for every subcarrier and alphabet point, subcarrier-major.
fn metric_table(alphabet: &[Complex64], y: &[Complex64], h: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len() * alphabet.len());
    for (yn, hn) in y.iter().zip(h) {
        out.extend(alphabet.iter().map(|x| (yn - x * hn).norm_sqr()));
    }
    out
}

/// Exhaustive search over the `2^f` codewords.
#[derive(Debug, Clone)]
pub struct MlDetector {
    modem: Modem,
    codebook: Codebook,
}

impl MlDetector {
    pub fn new(modem: &Modem) -> Result<Self> {
        Ok(MlDetector {
            modem: modem.clone(),
            codebook: modem.codebook()?,
        })
    }

    pub fn modem(&self) -> &Modem {
        &self.modem
    }

    /// Codeword index minimising `||y - diag(s) h||^2`; lowest index on ties.
    pub fn best_word(&self, y: &[Complex64], h: &[Complex64]) -> Result<usize> {
        let n = self.modem.n();
        check_lengths(n, y, h)?;
        let alphabet = self.modem.alphabet();
        let a = alphabet.len();
        let table = metric_table(alphabet, y, h);
        let mut best = (f64::INFINITY, 0usize);
        for w in 0..self.codebook.len() {
            let metric: f64 = self
                .codebook
                .word(w)
                .iter()
                .enumerate()
                .map(|(i, &idx)| table[i * a + idx as usize])
                .sum();
            if metric < best.0 {
                best = (metric, w);
            }
        }
        Ok(best.1)
    }

    pub fn detect(&self, y: &[Complex64], h: &[Complex64]) -> Result<DetectionResult> {
        let w = self.best_word(y, h)?;
        let indices: Vec<usize> = self.codebook.word(w).iter().map(|&i| i as usize).collect();
        let provenance = self.modem.provenance_from_alphabet(&indices)?;
        let bits = crate::bits::from_u64(w as u64, self.codebook.bits());
        Ok(DetectionResult {
            provenance,
            bits,
            metric_evaluations: self.codebook.len() as u64,
        })
    }
}

/// Index of the weakest subcarrier; lowest position on ties.
pub fn weakest_subcarrier(h: &[Complex64]) -> usize {
    let mut best = (f64::INFINITY, 0usize);
    for (i, z) in h.iter().enumerate() {
        let g = z.norm_sqr();
        if g < best.0 {
            best = (g, i);
        }
    }
    best.1
}

fn argmin(values: impl Iterator<Item = (usize, f64)>) -> usize {
    let mut best = (f64::INFINITY, usize::MAX);
    for (i, v) in values {
        if v < best.0 || best.1 == usize::MAX {
            best = (v, i);
        }
    }
    best.1
}

/// Per-subcarrier decisions with the weakest subcarrier's set indices forced
/// by the single-parity constraint.
pub fn lcml_detect(modem: &Modem, y: &[Complex64], h: &[Complex64]) -> Result<DetectionResult> {
    let n = modem.n();
    check_lengths(n, y, h)?;
    let alphabet = modem.alphabet();
    let metric = |i: usize, x: usize| (y[i] - alphabet[x] * h[i]).norm_sqr();

    let (indices, evaluations) = match *modem.scheme() {
        Scheme::Plain { .. } => {
            let x = argmin((0..alphabet.len()).map(|x| (x, metric(0, x))));
            (vec![x], alphabet.len() as u64)
        }
        Scheme::Apm { .. } => {
            let c = modem.apm_constellation().expect("apm modem");
            let (k, p, m) = (c.rings(), c.phase_sets(), c.phases_per_set());
            let tau = weakest_subcarrier(h);
            let mut indices = vec![0usize; n];
            let (mut k_sum, mut p_sum) = (0u64, 0u64);
            for i in (0..n).filter(|&i| i != tau) {
                indices[i] = argmin((0..alphabet.len()).map(|x| (x, metric(i, x))));
                let (ki, pi, _) = c.coords_of(indices[i]);
                k_sum += u64::from(ki);
                p_sum += u64::from(pi);
            }
            let kf = mdscode::closing_symbol(k, k_sum);
            let pf = mdscode::closing_symbol(p, p_sum);
            let first = c.index_of(kf, pf, 0)?;
            indices[tau] = argmin((first..first + m as usize).map(|x| (x, metric(tau, x))));
            let per = u64::from(k) * u64::from(p) * u64::from(m);
            (indices, per * (n as u64 - 1) + u64::from(m))
        }
        Scheme::Iqm { .. } => {
            let c = modem.iqm_constellation().expect("iqm modem");
            let (r, t, m) = (c.in_phase_sets(), c.quadrature_sets(), c.levels_per_set());
            let tm = (t * m) as usize;
            let m_us = m as usize;
            let tau = weakest_subcarrier(h);
            let mut indices = vec![0usize; n];
            let (mut r_sum, mut t_sum) = (0u64, 0u64);
            for i in (0..n).filter(|&i| i != tau) {
                let x = argmin((0..alphabet.len()).map(|x| (x, metric(i, x))));
                indices[i] = x;
                r_sum += (x / tm / m_us) as u64 + 1;
                t_sum += (x % tm / m_us) as u64 + 1;
            }
            let rf = mdscode::closing_symbol(r, r_sum) as usize;
            let tf = mdscode::closing_symbol(t, t_sum) as usize;
            let candidates = (0..m_us).flat_map(|li| {
                (0..m_us).map(move |lq| ((rf - 1) * m_us + li) * tm + (tf - 1) * m_us + lq)
            });
            indices[tau] = argmin(candidates.map(|x| (x, metric(tau, x))));
            let per = u64::from(r) * u64::from(t) * u64::from(m) * u64::from(m);
            (indices, per * (n as u64 - 1) + u64::from(m) * u64::from(m))
        }
    };
    let provenance = modem.provenance_from_alphabet(&indices)?;
    let bits = modem.demap_group(&provenance)?;
    Ok(DetectionResult {
        provenance,
        bits,
        metric_evaluations: evaluations,
    })
}

/// A ready-to-use detector for one modem.
#[derive(Debug, Clone)]
pub enum Receiver {
    Ml(MlDetector),
    Lcml(Modem),
}

impl Receiver {
    pub fn new(modem: &Modem, detector: Detector) -> Result<Self> {
        Ok(match detector {
            Detector::Ml => Receiver::Ml(MlDetector::new(modem)?),
            Detector::Lcml => Receiver::Lcml(modem.clone()),
        })
    }

    pub fn detect(&self, y: &[Complex64], h: &[Complex64]) -> Result<DetectionResult> {
        match self {
            Receiver::Ml(d) => d.detect(y, h),
            Receiver::Lcml(m) => lcml_detect(m, y, h),
        }
    }
}

/// Closed-form metric count for one group and per subcarrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricCount {
    pub per_group: u128,
    pub per_subcarrier: f64,
}

fn pow(base: u128, exp: usize) -> Result<u128> {
    let exp = u32::try_from(exp).map_err(|_| unsupported!("exponent too large"))?;
    base.checked_pow(exp)
        .ok_or_else(|| unsupported!("metric count {base}^{exp} overflows 128 bits"))
}

/// ML counts `(KP)^(N-1) M^N` or `(RT)^(N-1) M^(2N)`; LC-ML counts
/// `KPM(N-1) + M` or `RTM^2(N-1) + M^2`. Baseline OFDM uses `M` per
/// subcarrier for both.
pub fn metric_count(scheme: &Scheme, detector: Detector) -> Result<MetricCount> {
    scheme.validate()?;
    let per_group = match (*scheme, detector) {
        (Scheme::Plain { m, .. }, _) => u128::from(m),
        (Scheme::Apm { n, k, p, m, .. }, Detector::Ml) => {
            let a = pow(u128::from(k) * u128::from(p), n - 1)?;
            let b = pow(u128::from(m), n)?;
            a.checked_mul(b).ok_or_else(|| unsupported!("metric count overflows 128 bits"))?
        }
        (Scheme::Iqm { n, r, t, m }, Detector::Ml) => {
            let a = pow(u128::from(r) * u128::from(t), n - 1)?;
            let b = pow(u128::from(m), 2 * n)?;
            a.checked_mul(b).ok_or_else(|| unsupported!("metric count overflows 128 bits"))?
        }
        (Scheme::Apm { n, k, p, m, .. }, Detector::Lcml) => {
            u128::from(k * p * m) * (n as u128 - 1) + u128::from(m)
        }
        (Scheme::Iqm { n, r, t, m }, Detector::Lcml) => {
            u128::from(r * t) * u128::from(m * m) * (n as u128 - 1) + u128::from(m * m)
        }
    };
    Ok(MetricCount {
        per_group,
        per_subcarrier: per_group as f64 / scheme.subcarriers() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits;
    use crate::channel;
    use crate::modem::Family;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn count(s: Scheme, d: Detector) -> MetricCount {
        metric_count(&s, d).unwrap()
    }

    #[test]
    fn table_iv_counts() {
        let rows = [(4, 2, 2, 52.0), (8, 2, 4, 114.0), (16, 4, 4, 241.0)];
        for (n, r, t, lc) in rows {
            let s = Scheme::iqm(n, r, t, 4);
            assert_eq!(count(s, Detector::Lcml).per_subcarrier, lc);
        }
        let ml = |n, r, t| count(Scheme::iqm(n, r, t, 4), Detector::Ml).per_subcarrier;
        assert_eq!(ml(4, 2, 2), 1_048_576.0);
        assert!((ml(8, 2, 4) / 1.13e15 - 1.0).abs() < 5e-3);
        assert!((ml(16, 4, 4) / 1.33e36 - 1.0).abs() < 5e-3);
        assert_eq!(count(Scheme::iqm(4, 2, 2, 4), Detector::Lcml).per_group, 208);
        assert_eq!(count(Scheme::iqm(8, 2, 4, 4), Detector::Lcml).per_group, 912);
    }

    #[test]
    fn apm_counts() {
        assert_eq!(count(Scheme::apm(4, 2, 2, 4), Detector::Ml).per_group, 16384);
        assert_eq!(count(Scheme::apm(4, 2, 8, 2), Detector::Lcml).per_group, 98);
        for s in [Scheme::apm(4, 2, 2, 4), Scheme::iqm(4, 2, 2, 2), Scheme::apm(3, 2, 2, 2)] {
            let f = Modem::new(s).unwrap().bits_per_group();
            let lc = count(s, Detector::Lcml).per_group;
            if (1u128 << f) > lc {
                assert!(lc < count(s, Detector::Ml).per_group);
            }
        }
    }

    #[test]
    fn detector_parse() {
        assert_eq!("ML".parse::<Detector>().unwrap(), Detector::Ml);
        assert_eq!("lcml".parse::<Detector>().unwrap(), Detector::Lcml);
        assert!("zf".parse::<Detector>().is_err());
    }

    fn noiseless_recovery(s: Scheme, det: Detector) {
        let modem = Modem::new(s).unwrap();
        let rx = Receiver::new(&modem, det).unwrap();
        let f = modem.bits_per_group();
        let ones = channel::ChannelRealization::flat(modem.n()).h;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for w in 0..1u64 << f {
            let input = bits::from_u64(w, f);
            let sv = modem.encode_group(&input).unwrap();
            let res = rx.detect(&sv.values, &ones).unwrap();
            assert_eq!(res.bits, input, "{s} {det} word {w}");
            // a random channel without noise must also decode exactly
            let h = channel::sample_realization(&mut rng, modem.n()).h;
            let y = channel::apply(&sv.values, &h, &vec![Complex64::new(0.0, 0.0); modem.n()]).unwrap();
            assert_eq!(rx.detect(&y, &h).unwrap().bits, input);
        }
    }

    #[test]
    fn zero_noise_recovery() {
        for s in [
            Scheme::apm(2, 2, 2, 1),
            Scheme::apm(3, 2, 2, 2),
            Scheme::apm(4, 2, 4, 2),
            Scheme::iqm(2, 2, 2, 1),
            Scheme::iqm(3, 2, 2, 2),
            Scheme::plain(16, Family::Qam),
        ] {
            noiseless_recovery(s, Detector::Ml);
            noiseless_recovery(s, Detector::Lcml);
        }
    }

    #[test]
    fn ml_is_exhaustive_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for s in [Scheme::apm(3, 2, 2, 2), Scheme::iqm(3, 2, 2, 2), Scheme::apm(2, 3, 2, 2)] {
            let modem = Modem::new(s).unwrap();
            let det = MlDetector::new(&modem).unwrap();
            let words = modem.codebook().unwrap().symbols(modem.alphabet());
            for _ in 0..50 {
                let h = channel::sample_realization(&mut rng, modem.n()).h;
                let y: Vec<_> = (0..modem.n())
                    .map(|_| channel::complex_gaussian(&mut rng, 1.0))
                    .collect();
                let res = det.detect(&y, &h).unwrap();
                assert_eq!(res.metric_evaluations, words.len() as u64);
                let m = |w: &[Complex64]| -> f64 {
                    w.iter().zip(&h).zip(&y).map(|((s, h), y)| (y - s * h).norm_sqr()).sum()
                };
                let chosen = bits::to_u64(&res.bits) as usize;
                let best = m(&words[chosen]);
                assert!(words.iter().all(|w| m(w) >= best));
                assert!(words[..chosen].iter().all(|w| m(w) > best));
            }
        }
    }

    #[test]
    fn lcml_output_is_valid_and_counted() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for s in [
            Scheme::apm(4, 2, 4, 2),
            Scheme::apm(3, 3, 2, 1),
            Scheme::iqm(4, 2, 2, 2),
            Scheme::iqm(3, 3, 2, 4),
        ] {
            let modem = Modem::new(s).unwrap();
            let expected = count(s, Detector::Lcml).per_group as u64;
            for _ in 0..200 {
                let h = channel::sample_realization(&mut rng, modem.n()).h;
                let y: Vec<_> = (0..modem.n())
                    .map(|_| {
                        let v = rng.random_range(0.1..2.0);
                        channel::complex_gaussian(&mut rng, v)
                    })
                    .collect();
                let res = lcml_detect(&modem, &y, &h).unwrap();
                assert_eq!(res.metric_evaluations, expected);
                assert_eq!(res.bits.len(), modem.bits_per_group());
                // alphabet_indices re-validates both MDS tuples
                modem.alphabet_indices(&res.provenance).unwrap();
            }
        }
    }

    #[test]
    fn weakest_ties_pick_lowest() {
        let h = [Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.2), Complex64::new(-0.2, 0.0)];
        assert_eq!(weakest_subcarrier(&h), 1);
    }

    #[test]
    fn lcml_agrees_with_ml_at_high_snr() {
        let modem = Modem::new(Scheme::apm(2, 2, 2, 1)).unwrap();
        let ml = MlDetector::new(&modem).unwrap();
        let n0 = 1e-4;
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let frames = 10_000;
        let mut agree = 0;
        for _ in 0..frames {
            let input: Vec<bool> = (0..modem.bits_per_group()).map(|_| rng.random()).collect();
            let sv = modem.encode_group(&input).unwrap();
            let h = channel::sample_realization(&mut rng, 2).h;
            let w = channel::sample_noise(&mut rng, 2, n0);
            let y = channel::apply(&sv.values, &h, &w).unwrap();
            if ml.detect(&y, &h).unwrap().bits == lcml_detect(&modem, &y, &h).unwrap().bits {
                agree += 1;
            }
        }
        assert!(agree as f64 >= 0.99 * frames as f64, "{agree}");
    }
}
