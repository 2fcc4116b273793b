//! Bit-to-symbol mapping for one subcarrier group.
//!
//! APM groups split their `f` bits into `f1` amplitude-tuple bits, `f2`
//! phase-set-tuple bits and `f3 = N log2 M` phase bits. IQM groups use
//! `f11 + f12` bits for the in-phase axis followed by `f21 + f22` bits for the
//! quadrature axis. Within-set indices are natural binary, subcarrier 1
//! first.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bits;
use crate::constellation::{ApmConstellation, IqmConstellation};
use crate::error::{invalid, unsupported, Result};
use crate::mdscode::{self, MdsParams, MdsTuple};

/// Largest `f` for which a full codebook table is built.
pub const MAX_CODEBOOK_BITS: usize = 20;

/// Baseline modulation family for conventional OFDM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Psk,
    Qam,
}

/// The modulation used on each subcarrier group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Apm {
        n: usize,
        k: u32,
        p: u32,
        m: u32,
        ring_rotation: bool,
    },
    Iqm {
        n: usize,
        r: u32,
        t: u32,
        m: u32,
    },
    /// Conventional OFDM; every subcarrier is its own group.
    Plain { m: u32, family: Family },
}

impl Scheme {
    pub fn apm(n: usize, k: u32, p: u32, m: u32) -> Self {
        Scheme::Apm {
            n,
            k,
            p,
            m,
            ring_rotation: true,
        }
    }

    pub fn iqm(n: usize, r: u32, t: u32, m: u32) -> Self {
        Scheme::Iqm { n, r, t, m }
    }

    pub fn plain(m: u32, family: Family) -> Self {
        Scheme::Plain { m, family }
    }

    /// Subcarriers per group.
    pub fn subcarriers(&self) -> usize {
        match *self {
            Scheme::Apm { n, .. } | Scheme::Iqm { n, .. } => n,
            Scheme::Plain { .. } => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Scheme::Apm { n, k, p, m, .. } => {
                if n < 2 {
                    return Err(invalid!("APM needs N >= 2, got {n}"));
                }
                if k == 0 || p == 0 {
                    return Err(invalid!("APM needs K, P >= 1"));
                }
                check_order(m)?;
                MdsParams::new(k, n)?;
                MdsParams::new(p, n)?;
            }
            Scheme::Iqm { n, r, t, m } => {
                if n < 2 {
                    return Err(invalid!("IQM needs N >= 2, got {n}"));
                }
                if r == 0 || t == 0 {
                    return Err(invalid!("IQM needs R, T >= 1"));
                }
                check_order(m)?;
                MdsParams::new(r, n)?;
                MdsParams::new(t, n)?;
            }
            Scheme::Plain { m, family } => {
                if m < 2 || !m.is_power_of_two() {
                    return Err(invalid!("baseline order must be a power of two >= 2, got {m}"));
                }
                if family == Family::Qam && m.trailing_zeros() % 2 != 0 {
                    return Err(invalid!("QAM order must be a square power of two, got {m}"));
                }
            }
        }
        Ok(())
    }
}

fn check_order(m: u32) -> Result<()> {
    if m == 0 || !m.is_power_of_two() {
        return Err(invalid!("M must be 1 or a power of two, got {m}"));
    }
    Ok(())
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Scheme::Apm { n, k, p, m, .. } => write!(f, "MDS-APM({n},{k},{p},{m})"),
            Scheme::Iqm { n, r, t, m } => write!(f, "MDS-IQM({n},{r},{t},{m})"),
            Scheme::Plain { m, family } => {
                let fam = match family {
                    Family::Psk => "PSK",
                    Family::Qam => "QAM",
                };
                write!(f, "OFDM({m}-{fam})")
            }
        }
    }
}

/// A scheme plus frame layout: `G` groups of `N` subcarriers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub groups: usize,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, groups: usize) -> Result<Self> {
        scheme.validate()?;
        if groups == 0 {
            return Err(invalid!("need at least one group"));
        }
        Ok(SchemeConfig { scheme, groups })
    }

    /// `N_T = G·N`.
    pub fn total_subcarriers(&self) -> usize {
        self.groups * self.scheme.subcarriers()
    }
}

/// Bit-field sizes of one group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitLayout {
    Apm { f1: usize, f2: usize, f3: usize },
    Iqm { f11: usize, f12: usize, f21: usize, f22: usize },
    Plain { bits: usize },
}

impl BitLayout {
    pub fn total(&self) -> usize {
        match *self {
            BitLayout::Apm { f1, f2, f3 } => f1 + f2 + f3,
            BitLayout::Iqm { f11, f12, f21, f22 } => f11 + f12 + f21 + f22,
            BitLayout::Plain { bits } => bits,
        }
    }
}

/// Spectral efficiency as the exact ratio `f / N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpectralEfficiency {
    pub bits: usize,
    pub subcarriers: usize,
}

impl SpectralEfficiency {
    pub fn value(&self) -> f64 {
        self.bits as f64 / self.subcarriers as f64
    }
}

/// The indices that generated a symbol vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Provenance {
    Apm {
        amplitude: MdsTuple,
        phase_set: MdsTuple,
        /// 0-based phase inside the selected set, per subcarrier.
        phase: Vec<u32>,
    },
    Iqm {
        in_phase_set: MdsTuple,
        in_phase_level: Vec<u32>,
        quadrature_set: MdsTuple,
        quadrature_level: Vec<u32>,
    },
    /// Per-subcarrier bit label of the baseline symbol.
    Plain { label: Vec<u32> },
}

/// `N` complex symbols and the indices that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolVector {
    pub values: Vec<Complex64>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone)]
enum Kind {
    Apm {
        constellation: ApmConstellation,
        amplitude: MdsParams,
        phase_set: MdsParams,
    },
    Iqm {
        constellation: IqmConstellation,
        in_phase: MdsParams,
        quadrature: MdsParams,
    },
    Plain {
        m: u32,
    },
}

/// Encoder/decoder for one scheme.
#[derive(Debug, Clone)]
pub struct Modem {
    scheme: Scheme,
    n: usize,
    kind: Kind,
    layout: BitLayout,
    // every point a single subcarrier can carry
    alphabet: Vec<Complex64>,
}

impl Modem {
    pub fn new(scheme: Scheme) -> Result<Self> {
        scheme.validate()?;
        match scheme {
            Scheme::Apm {
                n,
                k,
                p,
                m,
                ring_rotation,
            } => {
                let constellation = ApmConstellation::new(k, p, m, ring_rotation)?;
                let amplitude = MdsParams::new(k, n)?;
                let phase_set = MdsParams::new(p, n)?;
                let log2m = bits::exact_log2(m).expect("validated");
                let layout = BitLayout::Apm {
                    f1: amplitude.index_bits(),
                    f2: phase_set.index_bits(),
                    f3: n * log2m,
                };
                let alphabet = constellation.points().to_vec();
                Ok(Modem {
                    scheme,
                    n,
                    kind: Kind::Apm {
                        constellation,
                        amplitude,
                        phase_set,
                    },
                    layout,
                    alphabet,
                })
            }
            Scheme::Iqm { n, r, t, m } => {
                Self::iqm_with_constellation(n, IqmConstellation::new(r, t, m)?)
            }
            Scheme::Plain { m, family } => {
                let bits_per = bits::exact_log2(m).expect("validated");
                let alphabet = match family {
                    Family::Psk => (0..m)
                        .map(|i| Complex64::from_polar(1.0, 2.0 * PI * f64::from(i) / f64::from(m)))
                        .collect(),
                    Family::Qam => square_qam(m),
                };
                Ok(Modem {
                    scheme,
                    n: 1,
                    kind: Kind::Plain { m },
                    layout: BitLayout::Plain { bits: bits_per },
                    alphabet,
                })
            }
        }
    }

    /// IQM over `n` subcarriers with explicit PAM level tables.
    pub fn iqm_with_constellation(n: usize, constellation: IqmConstellation) -> Result<Self> {
        let r = constellation.in_phase_sets();
        let t = constellation.quadrature_sets();
        let m = constellation.levels_per_set();
        let scheme = Scheme::Iqm { n, r, t, m };
        scheme.validate()?;
        let in_phase = MdsParams::new(r, n)?;
        let quadrature = MdsParams::new(t, n)?;
        let log2m = bits::exact_log2(m).expect("validated");
        let layout = BitLayout::Iqm {
            f11: in_phase.index_bits(),
            f12: n * log2m,
            f21: quadrature.index_bits(),
            f22: n * log2m,
        };
        let mut alphabet = Vec::with_capacity(((r * m) * (t * m)) as usize);
        for rs in 1..=r {
            for i in 0..m {
                let re = constellation.in_phase_level(rs, i)?;
                for ts in 1..=t {
                    for q in 0..m {
                        let im = constellation.quadrature_level(ts, q)?;
                        alphabet.push(Complex64::new(re, im));
                    }
                }
            }
        }
        Ok(Modem {
            scheme,
            n,
            kind: Kind::Iqm {
                constellation,
                in_phase,
                quadrature,
            },
            layout,
            alphabet,
        })
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    /// Subcarriers per group.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layout(&self) -> BitLayout {
        self.layout
    }

    /// Information bits per group, `f`.
    pub fn bits_per_group(&self) -> usize {
        self.layout.total()
    }

    pub fn spectral_efficiency(&self) -> SpectralEfficiency {
        SpectralEfficiency {
            bits: self.bits_per_group(),
            subcarriers: self.n,
        }
    }

    /// All points a single subcarrier can carry.
    pub fn alphabet(&self) -> &[Complex64] {
        &self.alphabet
    }

    pub fn apm_constellation(&self) -> Option<&ApmConstellation> {
        match &self.kind {
            Kind::Apm { constellation, .. } => Some(constellation),
            _ => None,
        }
    }

    pub fn iqm_constellation(&self) -> Option<&IqmConstellation> {
        match &self.kind {
            Kind::Iqm { constellation, .. } => Some(constellation),
            _ => None,
        }
    }

    /// MDS parameters of the two index tuples (amplitude/phase-set or
    /// in-phase/quadrature). `None` for the baseline.
    pub fn index_codes(&self) -> Option<(MdsParams, MdsParams)> {
        match &self.kind {
            Kind::Apm {
                amplitude,
                phase_set,
                ..
            } => Some((*amplitude, *phase_set)),
            Kind::Iqm {
                in_phase,
                quadrature,
                ..
            } => Some((*in_phase, *quadrature)),
            Kind::Plain { .. } => None,
        }
    }

    /// Splits `f` bits into index tuples and per-subcarrier indices.
    pub fn provenance_from_bits(&self, input: &[bool]) -> Result<Provenance> {
        let f = self.bits_per_group();
        if input.len() != f {
            return Err(invalid!("expected {f} bits per group, got {}", input.len()));
        }
        let mut cursor = input;
        let mut take = |len: usize| {
            let (head, tail) = cursor.split_at(len);
            cursor = tail;
            head
        };
        match (&self.kind, self.layout) {
            (
                Kind::Apm {
                    amplitude,
                    phase_set,
                    constellation,
                },
                BitLayout::Apm { f1, f2, f3 },
            ) => {
                let amp = mdscode::bits_to_tuple(take(f1), amplitude)?;
                let set = mdscode::bits_to_tuple(take(f2), phase_set)?;
                let phase = split_indices(take(f3), self.n, constellation.phases_per_set());
                Ok(Provenance::Apm {
                    amplitude: amp,
                    phase_set: set,
                    phase,
                })
            }
            (
                Kind::Iqm {
                    in_phase,
                    quadrature,
                    constellation,
                },
                BitLayout::Iqm { f11, f12, f21, f22 },
            ) => {
                let m = constellation.levels_per_set();
                let in_set = mdscode::bits_to_tuple(take(f11), in_phase)?;
                let in_level = split_indices(take(f12), self.n, m);
                let q_set = mdscode::bits_to_tuple(take(f21), quadrature)?;
                let q_level = split_indices(take(f22), self.n, m);
                Ok(Provenance::Iqm {
                    in_phase_set: in_set,
                    in_phase_level: in_level,
                    quadrature_set: q_set,
                    quadrature_level: q_level,
                })
            }
            (Kind::Plain { m }, BitLayout::Plain { bits }) => Ok(Provenance::Plain {
                label: split_indices(take(bits), 1, *m),
            }),
            _ => unreachable!("layout matches kind"),
        }
    }

    /// Modulates the indices in `prov`.
    pub fn symbols(&self, prov: &Provenance) -> Result<Vec<Complex64>> {
        Ok(self
            .alphabet_indices(prov)?
            .into_iter()
            .map(|i| self.alphabet[i])
            .collect())
    }

    /// Position of every subcarrier's symbol inside [`alphabet`](Self::alphabet).
    pub fn alphabet_indices(&self, prov: &Provenance) -> Result<Vec<usize>> {
        match (&self.kind, prov) {
            (
                Kind::Apm {
                    constellation,
                    amplitude: amp_code,
                    phase_set: set_code,
                },
                Provenance::Apm {
                    amplitude,
                    phase_set,
                    phase,
                },
            ) => {
                self.check_tuple(amplitude, amp_code)?;
                self.check_tuple(phase_set, set_code)?;
                self.check_len(phase.len())?;
                (0..self.n)
                    .map(|i| constellation.index_of(amplitude[i], phase_set[i], phase[i]))
                    .collect()
            }
            (
                Kind::Iqm {
                    constellation,
                    in_phase,
                    quadrature,
                },
                Provenance::Iqm {
                    in_phase_set,
                    in_phase_level,
                    quadrature_set,
                    quadrature_level,
                },
            ) => {
                self.check_tuple(in_phase_set, in_phase)?;
                self.check_tuple(quadrature_set, quadrature)?;
                self.check_len(in_phase_level.len())?;
                self.check_len(quadrature_level.len())?;
                let m = constellation.levels_per_set();
                let t = constellation.quadrature_sets();
                (0..self.n)
                    .map(|i| {
                        let (li, lq) = (in_phase_level[i], quadrature_level[i]);
                        if li >= m || lq >= m {
                            return Err(invalid!("PAM level index out of range 0..{m}"));
                        }
                        let ip = (in_phase_set[i] - 1) * m + li;
                        let qp = (quadrature_set[i] - 1) * m + lq;
                        Ok((ip * t * m + qp) as usize)
                    })
                    .collect()
            }
            (Kind::Plain { m }, Provenance::Plain { label }) => {
                self.check_len(label.len())?;
                label
                    .iter()
                    .map(|&l| {
                        if l < *m {
                            Ok(l as usize)
                        } else {
                            Err(invalid!("label {l} out of range 0..{m}"))
                        }
                    })
                    .collect()
            }
            _ => Err(invalid!("provenance does not match scheme {}", self.scheme)),
        }
    }

    fn check_tuple(&self, tuple: &MdsTuple, params: &MdsParams) -> Result<()> {
        MdsTuple::new(tuple.symbols().to_vec(), params).map(|_| ())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(invalid!("expected {} per-subcarrier indices, got {len}", self.n));
        }
        Ok(())
    }

    pub fn encode_group(&self, input: &[bool]) -> Result<SymbolVector> {
        let provenance = self.provenance_from_bits(input)?;
        let values = self.symbols(&provenance)?;
        Ok(SymbolVector { values, provenance })
    }

    /// Recovers the `f` bits from detected indices.
    pub fn demap_group(&self, prov: &Provenance) -> Result<Vec<bool>> {
        let mut out = Vec::with_capacity(self.bits_per_group());
        match (&self.kind, prov) {
            (
                Kind::Apm {
                    amplitude: amp_code,
                    phase_set: set_code,
                    constellation,
                },
                Provenance::Apm {
                    amplitude,
                    phase_set,
                    phase,
                },
            ) => {
                out.extend(mdscode::tuple_to_bits(amplitude, amp_code)?);
                out.extend(mdscode::tuple_to_bits(phase_set, set_code)?);
                join_indices(&mut out, phase, constellation.phases_per_set())?;
            }
            (
                Kind::Iqm {
                    in_phase,
                    quadrature,
                    constellation,
                },
                Provenance::Iqm {
                    in_phase_set,
                    in_phase_level,
                    quadrature_set,
                    quadrature_level,
                },
            ) => {
                let m = constellation.levels_per_set();
                out.extend(mdscode::tuple_to_bits(in_phase_set, in_phase)?);
                join_indices(&mut out, in_phase_level, m)?;
                out.extend(mdscode::tuple_to_bits(quadrature_set, quadrature)?);
                join_indices(&mut out, quadrature_level, m)?;
            }
            (Kind::Plain { m }, Provenance::Plain { label }) => {
                join_indices(&mut out, label, *m)?;
            }
            _ => return Err(invalid!("provenance does not match scheme {}", self.scheme)),
        }
        Ok(out)
    }

    /// Rebuilds the provenance from per-subcarrier alphabet positions.
    ///
    /// Fails if the implied index tuples are not MDS codewords.
    pub fn provenance_from_alphabet(&self, indices: &[usize]) -> Result<Provenance> {
        self.check_len(indices.len())?;
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.alphabet.len()) {
            return Err(invalid!("alphabet index {bad} out of range"));
        }
        match &self.kind {
            Kind::Apm {
                constellation,
                amplitude,
                phase_set,
            } => {
                let coords: Vec<_> = indices.iter().map(|&i| constellation.coords_of(i)).collect();
                Ok(Provenance::Apm {
                    amplitude: MdsTuple::new(coords.iter().map(|c| c.0).collect(), amplitude)?,
                    phase_set: MdsTuple::new(coords.iter().map(|c| c.1).collect(), phase_set)?,
                    phase: coords.iter().map(|c| c.2).collect(),
                })
            }
            Kind::Iqm {
                constellation,
                in_phase,
                quadrature,
            } => {
                let m = constellation.levels_per_set();
                let tm = constellation.quadrature_sets() * m;
                let (mut is, mut il, mut qs, mut ql) = (vec![], vec![], vec![], vec![]);
                for &i in indices {
                    let (ip, qp) = (i as u32 / tm, i as u32 % tm);
                    is.push(ip / m + 1);
                    il.push(ip % m);
                    qs.push(qp / m + 1);
                    ql.push(qp % m);
                }
                Ok(Provenance::Iqm {
                    in_phase_set: MdsTuple::new(is, in_phase)?,
                    in_phase_level: il,
                    quadrature_set: MdsTuple::new(qs, quadrature)?,
                    quadrature_level: ql,
                })
            }
            Kind::Plain { .. } => Ok(Provenance::Plain {
                label: indices.iter().map(|&i| i as u32).collect(),
            }),
        }
    }

    /// Table of all `2^f` codewords, indexed by the integer value of their
    /// bits.
    pub fn codebook(&self) -> Result<Codebook> {
        let f = self.bits_per_group();
        if f > MAX_CODEBOOK_BITS {
            return Err(unsupported!(
                "{}: codebook of 2^{f} codewords exceeds the 2^{MAX_CODEBOOK_BITS} limit",
                self.scheme
            ));
        }
        let size = 1usize << f;
        let mut indices = Vec::with_capacity(size * self.n);
        for word in 0..size {
            let prov = self.provenance_from_bits(&bits::from_u64(word as u64, f))?;
            indices.extend(
                self.alphabet_indices(&prov)?
                    .into_iter()
                    .map(|i| i as u32),
            );
        }
        Ok(Codebook {
            bits: f,
            n: self.n,
            indices,
        })
    }
}

/// All `2^f` codewords of a group as alphabet positions.
#[derive(Debug, Clone)]
pub struct Codebook {
    bits: usize,
    n: usize,
    indices: Vec<u32>,
}

impl Codebook {
    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn len(&self) -> usize {
        1 << self.bits
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Alphabet positions of codeword `word`.
    pub fn word(&self, word: usize) -> &[u32] {
        &self.indices[word * self.n..(word + 1) * self.n]
    }

    /// Symbol vectors of every codeword.
    pub fn symbols(&self, alphabet: &[Complex64]) -> Vec<Vec<Complex64>> {
        self.indices
            .chunks(self.n)
            .map(|w| w.iter().map(|&i| alphabet[i as usize]).collect())
            .collect()
    }
}

fn split_indices(input: &[bool], n: usize, m: u32) -> Vec<u32> {
    let width = bits::exact_log2(m).expect("power of two");
    if width == 0 {
        return vec![0; n];
    }
    input
        .chunks(width)
        .map(|c| bits::to_u64(c) as u32)
        .collect()
}

fn join_indices(out: &mut Vec<bool>, indices: &[u32], m: u32) -> Result<()> {
    let width = bits::exact_log2(m).expect("power of two");
    for &i in indices {
        if i >= m {
            return Err(invalid!("index {i} out of range 0..{m}"));
        }
        out.extend(bits::from_u64(u64::from(i), width));
    }
    Ok(())
}

/// Unit-energy square QAM indexed by Gray label (I bits first, then Q).
fn square_qam(m: u32) -> Vec<Complex64> {
    let half = m.trailing_zeros() / 2;
    let side = 1u32 << half;
    let scale = (3.0 / (2.0 * (f64::from(m) - 1.0))).sqrt();
    let level = |g: u32| {
        let pos = gray_to_binary(g);
        (2.0 * f64::from(pos) - f64::from(side - 1)) * scale
    };
    (0..m)
        .map(|label| Complex64::new(level(label >> half), level(label & (side - 1))))
        .collect()
}

fn gray_to_binary(mut g: u32) -> u32 {
    let mut mask = g >> 1;
    while mask != 0 {
        g ^= mask;
        mask >>= 1;
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    const TOL: f64 = 1e-12;

    fn b(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    fn close(a: &[Complex64], e: &[Complex64]) -> bool {
        a.len() == e.len() && a.iter().zip(e).all(|(x, y)| (x - y).norm() < TOL)
    }

    #[test]
    fn spectral_efficiencies() {
        let se = |s: Scheme| Modem::new(s).unwrap().spectral_efficiency();
        assert_eq!(se(Scheme::apm(4, 2, 8, 2)), SpectralEfficiency { bits: 16, subcarriers: 4 });
        assert_eq!(se(Scheme::iqm(4, 8, 6, 1)).value(), 4.0);
        assert_eq!(se(Scheme::apm(4, 2, 4, 2)).value(), 3.25);
        assert_eq!(se(Scheme::plain(16, Family::Qam)).value(), 4.0);
        assert_eq!(se(Scheme::apm(2, 2, 2, 1)).value(), 1.0);
        assert_eq!(
            Modem::new(Scheme::iqm(4, 8, 6, 1)).unwrap().layout(),
            BitLayout::Iqm { f11: 9, f12: 0, f21: 7, f22: 0 }
        );
    }

    #[test]
    fn config_validation() {
        assert!(Scheme::apm(1, 2, 2, 1).validate().is_err());
        assert!(Scheme::apm(2, 2, 2, 3).validate().is_err());
        assert!(Scheme::iqm(2, 0, 2, 1).validate().is_err());
        assert!(Scheme::plain(8, Family::Qam).validate().is_err());
        assert!(Scheme::plain(1, Family::Psk).validate().is_err());
        assert!(SchemeConfig::new(Scheme::apm(2, 2, 2, 1), 0).is_err());
        let cfg = SchemeConfig::new(Scheme::apm(4, 2, 2, 1), 8).unwrap();
        assert_eq!(cfg.total_subcarriers(), 32);
    }

    #[test]
    fn all_zero_bits_give_inner_ring() {
        let modem = Modem::new(Scheme::apm(2, 2, 2, 1)).unwrap();
        let sv = modem.encode_group(&b("00")).unwrap();
        let r1 = (2.0f64 / 3.0).sqrt();
        assert!(close(&sv.values, &[Complex64::new(r1, 0.0); 2]));
        match &sv.provenance {
            Provenance::Apm { amplitude, phase_set, .. } => {
                assert_eq!(amplitude.symbols(), &[1, 1]);
                assert_eq!(phase_set.symbols(), &[1, 1]);
            }
            _ => panic!("wrong provenance"),
        }
    }

    #[test]
    fn apm_codeword_from_indices() {
        let modem = Modem::new(Scheme::Apm { n: 3, k: 2, p: 2, m: 1, ring_rotation: false }).unwrap();
        let (amp, set) = modem.index_codes().unwrap();
        let tuple = MdsTuple::new(vec![1, 2, 1], &amp).unwrap();
        let prov = Provenance::Apm {
            amplitude: tuple.clone(),
            phase_set: MdsTuple::new(vec![1, 2, 1], &set).unwrap(),
            phase: vec![0; 3],
        };
        let r1 = (2.0f64 / 3.0).sqrt();
        let r2 = (4.0f64 / 3.0).sqrt();
        let expected = [
            Complex64::new(r1, 0.0),
            Complex64::from_polar(r2, PI),
            Complex64::new(r1, 0.0),
        ];
        assert!(close(&modem.symbols(&prov).unwrap(), &expected));
    }

    #[test]
    fn iqm_codeword_from_custom_levels() {
        let h = SQRT_2 / 2.0;
        let s3 = 3.0f64.sqrt() / 2.0;
        let c = IqmConstellation::from_levels(vec![vec![h], vec![-h]], vec![vec![0.5], vec![-s3]]).unwrap();
        let modem = Modem::iqm_with_constellation(3, c).unwrap();
        let (ip, qp) = modem.index_codes().unwrap();
        let prov = Provenance::Iqm {
            in_phase_set: mdscode::tuple_at(1, &ip).unwrap(),
            in_phase_level: vec![0; 3],
            quadrature_set: mdscode::tuple_at(3, &qp).unwrap(),
            quadrature_level: vec![0; 3],
        };
        let expected = [Complex64::new(h, -s3), Complex64::new(-h, -s3), Complex64::new(h, -s3)];
        assert!(close(&modem.symbols(&prov).unwrap(), &expected));
    }

    #[test]
    fn unused_amplitude_tuple_demaps_to_zero() {
        let modem = Modem::new(Scheme::apm(3, 3, 1, 1)).unwrap();
        let (amp, set) = modem.index_codes().unwrap();
        let prov = Provenance::Apm {
            amplitude: MdsTuple::new(vec![3, 3, 3], &amp).unwrap(),
            phase_set: MdsTuple::new(vec![1, 1, 1], &set).unwrap(),
            phase: vec![0; 3],
        };
        assert_eq!(modem.demap_group(&prov).unwrap(), b("000"));
    }

    #[test]
    fn all_ones_tuples_give_zero_index_bits() {
        let modem = Modem::new(Scheme::apm(3, 3, 3, 2)).unwrap();
        let (amp, set) = modem.index_codes().unwrap();
        let prov = Provenance::Apm {
            amplitude: MdsTuple::new(vec![1, 1, 1], &amp).unwrap(),
            phase_set: MdsTuple::new(vec![1, 1, 1], &set).unwrap(),
            phase: vec![1, 0, 1],
        };
        assert_eq!(modem.demap_group(&prov).unwrap(), b("000000101"));
    }

    #[test]
    fn wrong_length_rejected() {
        let modem = Modem::new(Scheme::apm(3, 3, 3, 1)).unwrap();
        assert!(modem.encode_group(&b("00000")).is_err());
    }

    #[test]
    fn qam_is_gray_and_unit_energy() {
        for m in [4u32, 16, 64] {
            let pts = square_qam(m);
            let e = pts.iter().map(|z| z.norm_sqr()).sum::<f64>() / f64::from(m);
            assert!((e - 1.0).abs() < TOL);
            let dmin = crate::constellation::brute_force_med(&pts).unwrap().value;
            for a in 0..m {
                for c in a + 1..m {
                    if ((pts[a as usize] - pts[c as usize]).norm() - dmin).abs() < 1e-9 {
                        assert_eq!((a ^ c).count_ones(), 1, "M={m} {a} {c}");
                    }
                }
            }
        }
    }

    fn configs() -> Vec<Scheme> {
        vec![
            Scheme::apm(2, 2, 2, 1),
            Scheme::apm(3, 3, 3, 1),
            Scheme::apm(3, 2, 2, 2),
            Scheme::apm(4, 2, 4, 2),
            Scheme::apm(2, 4, 4, 1),
            Scheme::apm(3, 3, 1, 1),
            Scheme::Apm { n: 3, k: 2, p: 2, m: 2, ring_rotation: false },
            Scheme::iqm(2, 2, 2, 1),
            Scheme::iqm(2, 2, 2, 2),
            Scheme::iqm(3, 3, 2, 2),
            Scheme::iqm(4, 2, 2, 2),
            Scheme::iqm(3, 5, 3, 1),
            Scheme::plain(2, Family::Psk),
            Scheme::plain(8, Family::Psk),
            Scheme::plain(16, Family::Qam),
        ]
    }

    #[test]
    fn exhaustive_round_trip() {
        for s in configs() {
            let modem = Modem::new(s).unwrap();
            let f = modem.bits_per_group();
            assert!(f <= 16);
            for word in 0..1u64 << f {
                let input = bits::from_u64(word, f);
                let sv = modem.encode_group(&input).unwrap();
                assert_eq!(modem.demap_group(&sv.provenance).unwrap(), input, "{s}");
                let idx = modem.alphabet_indices(&sv.provenance).unwrap();
                assert_eq!(modem.provenance_from_alphabet(&idx).unwrap(), sv.provenance);
            }
        }
    }

    #[test]
    fn average_energy_is_one() {
        for s in configs() {
            let modem = Modem::new(s).unwrap();
            let cb = modem.codebook().unwrap();
            let words = cb.symbols(modem.alphabet());
            let e = words
                .iter()
                .map(|w| w.iter().map(|z| z.norm_sqr()).sum::<f64>() / w.len() as f64)
                .sum::<f64>()
                / words.len() as f64;
            // only reachable codewords are counted; the full index codebook is
            // balanced, the reachable subset is balanced when f is unfloored
            let (pow2_apm, _) = match s {
                Scheme::Apm { k, p, .. } => (k.is_power_of_two() && p.is_power_of_two(), 0),
                Scheme::Iqm { r, t, .. } => (r.is_power_of_two() && t.is_power_of_two(), 0),
                Scheme::Plain { .. } => (true, 0),
            };
            if pow2_apm {
                assert!((e - 1.0).abs() < 1e-9, "{s}: {e}");
            }
        }
    }

    fn hamming_positions(a: &[u32], b: &[u32]) -> usize {
        a.iter().zip(b).filter(|(x, y)| x != y).count()
    }

    #[test]
    fn codebook_hamming_floor() {
        for s in configs() {
            if matches!(s, Scheme::Plain { .. }) {
                continue;
            }
            let modem = Modem::new(s).unwrap();
            let cb = modem.codebook().unwrap();
            let mut dmin = usize::MAX;
            for i in 0..cb.len() {
                for j in i + 1..cb.len() {
                    dmin = dmin.min(hamming_positions(cb.word(i), cb.word(j)));
                }
            }
            let m = match s {
                Scheme::Apm { m, .. } | Scheme::Iqm { m, .. } => m,
                _ => unreachable!(),
            };
            assert_eq!(dmin, if m == 1 { 2 } else { 1 }, "{s}");
        }
    }

    #[test]
    fn ternary_amplitudes_subsume_permutations() {
        let modem = Modem::new(Scheme::apm(3, 3, 1, 1)).unwrap();
        let (amp, _) = modem.index_codes().unwrap();
        let all = mdscode::enumerate_codewords(&amp);
        for perm in [[1, 2, 3], [1, 3, 2], [2, 1, 3], [2, 3, 1], [3, 1, 2], [3, 2, 1]] {
            assert!(all.iter().any(|t| t.symbols() == perm));
        }
    }
}
