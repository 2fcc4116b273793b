//! Per-subcarrier constellations for MDS-APM and MDS-IQM.
//!
//! The APM constellation is a star-QAM: `K` rings of radius
//! `r_k = sqrt(2k / (K+1))`, each carrying `P` disjoint `M`-PSK phase sets.
//! Set `p` is the base `M`-PSK rotated by `2(p-1)π/(MP)`; with ring rotation
//! enabled, ring `k` is additionally rotated by `(k-1)π/(PM)`.
//!
//! The IQM constellation splits an `RM`-ary PAM alphabet of average energy
//! `1/2` round-robin into `R` disjoint `M`-PAM sets for the in-phase axis
//! (and likewise `TM`-ary into `T` sets for the quadrature axis).

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Amplitude/phase constellation with `K` rings, `P` phase sets and `M`
/// phases per set.
#[derive(Debug, Clone, PartialEq)]
pub struct ApmConstellation {
    k: u32,
    p: u32,
    m: u32,
    ring_rotation: bool,
    radii: Vec<f64>,
    // indexed by ((k-1)*P + (p-1))*M + m
    points: Vec<Complex64>,
}

impl ApmConstellation {
    pub fn new(k: u32, p: u32, m: u32, ring_rotation: bool) -> Result<Self> {
        if k == 0 || p == 0 || m == 0 {
            return Err(invalid!(
                "APM parameters must be positive (K={k}, P={p}, M={m})"
            ));
        }
        let radii: Vec<f64> = (1..=k)
            .map(|ring| (2.0 * f64::from(ring) / f64::from(k + 1)).sqrt())
            .collect();
        let pm = f64::from(p * m);
        let mut points = Vec::with_capacity((k * p * m) as usize);
        for ring in 0..k {
            let ring_angle = if ring_rotation {
                f64::from(ring) * PI / pm
            } else {
                0.0
            };
            for set in 0..p {
                for phase in 0..m {
                    let angle = 2.0 * PI * f64::from(phase) / f64::from(m)
                        + 2.0 * PI * f64::from(set) / pm
                        + ring_angle;
                    points.push(Complex64::from_polar(radii[ring as usize], angle));
                }
            }
        }
        Ok(ApmConstellation {
            k,
            p,
            m,
            ring_rotation,
            radii,
            points,
        })
    }

    pub fn rings(&self) -> u32 {
        self.k
    }

    pub fn phase_sets(&self) -> u32 {
        self.p
    }

    pub fn phases_per_set(&self) -> u32 {
        self.m
    }

    pub fn ring_rotation(&self) -> bool {
        self.ring_rotation
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// All `K·P·M` points, ring-major, then phase set, then phase.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Flat index of `(k, p, m)` with 1-based `k`, `p` and 0-based `m`.
    pub fn index_of(&self, k: u32, p: u32, m: u32) -> Result<usize> {
        if !(1..=self.k).contains(&k) || !(1..=self.p).contains(&p) || m >= self.m {
            return Err(invalid!(
                "point (k={k}, p={p}, m={m}) outside K={}, P={}, M={}",
                self.k,
                self.p,
                self.m
            ));
        }
        Ok((((k - 1) * self.p + (p - 1)) * self.m + m) as usize)
    }

    /// Inverse of [`index_of`](Self::index_of).
    pub fn coords_of(&self, index: usize) -> (u32, u32, u32) {
        let index = index as u32;
        let m = index % self.m;
        let p = (index / self.m) % self.p;
        let k = index / (self.m * self.p);
        (k + 1, p + 1, m)
    }

    pub fn point(&self, k: u32, p: u32, m: u32) -> Result<Complex64> {
        Ok(self.points[self.index_of(k, p, m)?])
    }
}

/// Closed-form distances of the APM constellation (rotation assumed on).
///
/// `None` marks a distance that does not exist for the configuration: `d1`
/// needs at least two points per ring, `d2` two rings, `d3` three rings and
/// `d4` two phases per set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApmDistances {
    /// Closest pair on the innermost ring.
    pub d1: Option<f64>,
    /// Closest pair across the two innermost rings.
    pub d2: Option<f64>,
    /// Closest pair across rings `K-2` and `K`.
    pub d3: Option<f64>,
    /// Closest pair inside one phase set on the innermost ring.
    pub d4: Option<f64>,
    /// `sqrt(2) * min(d1, d2, d3)` over the distances that exist.
    pub d_min: Option<f64>,
}

impl ApmDistances {
    /// The point-level candidates `d1, d2, d3` that exist.
    pub fn point_candidates(&self) -> Vec<f64> {
        [self.d1, self.d2, self.d3].into_iter().flatten().collect()
    }
}

pub fn analytic_med_apm(c: &ApmConstellation) -> ApmDistances {
    let k = f64::from(c.k);
    let pm = f64::from(c.p * c.m);
    let d1 = (c.p * c.m >= 2).then(|| 2.0 * SQRT_2 / (k + 1.0).sqrt() * (PI / pm).sin());
    let d2 = (c.k >= 2).then(|| ((6.0 - 4.0 * SQRT_2 * (PI / pm).cos()) / (k + 1.0)).sqrt());
    let d3 = (c.k >= 3).then(|| (2.0 / (k + 1.0)).sqrt() * (k.sqrt() - (k - 2.0).sqrt()));
    let d4 = (c.m >= 2)
        .then(|| 2.0 * SQRT_2 / (k + 1.0).sqrt() * (PI / f64::from(c.m)).sin());
    let d_min = [d1, d2, d3]
        .into_iter()
        .flatten()
        .map(|d| SQRT_2 * d)
        .reduce(f64::min);
    ApmDistances {
        d1,
        d2,
        d3,
        d4,
        d_min,
    }
}

/// Disjoint PAM sets for the in-phase and quadrature components.
#[derive(Debug, Clone, PartialEq)]
pub struct IqmConstellation {
    m: u32,
    in_phase: Vec<Vec<f64>>,
    quadrature: Vec<Vec<f64>>,
    spacing: Option<(f64, f64)>,
}

/// Energy budget of one subcarrier.
pub const IQM_ENERGY: f64 = 1.0;

impl IqmConstellation {
    /// Interleaves an `RM`-PAM (`TM`-PAM) alphabet round-robin into `R`
    /// (`T`) sets of `M` ascending levels.
    pub fn new(r: u32, t: u32, m: u32) -> Result<Self> {
        if r == 0 || t == 0 || m == 0 {
            return Err(invalid!(
                "IQM parameters must be positive (R={r}, T={t}, M={m})"
            ));
        }
        let (in_phase, d_i) = interleaved_pam(r, m);
        let (quadrature, d_q) = interleaved_pam(t, m);
        Ok(IqmConstellation {
            m,
            in_phase,
            quadrature,
            spacing: Some((d_i, d_q)),
        })
    }

    /// Builds a constellation from explicit level tables, one inner vector
    /// per set. All sets must have the same number of levels.
    pub fn from_levels(in_phase: Vec<Vec<f64>>, quadrature: Vec<Vec<f64>>) -> Result<Self> {
        let m = in_phase.first().map_or(0, Vec::len);
        if m == 0 || quadrature.is_empty() {
            return Err(invalid!("level tables must be non-empty"));
        }
        if in_phase.iter().chain(&quadrature).any(|set| set.len() != m) {
            return Err(invalid!("all PAM sets must have {m} levels"));
        }
        if in_phase.iter().chain(&quadrature).flatten().any(|x| !x.is_finite()) {
            return Err(invalid!("levels must be finite"));
        }
        Ok(IqmConstellation {
            m: m as u32,
            in_phase,
            quadrature,
            spacing: None,
        })
    }

    pub fn in_phase_sets(&self) -> u32 {
        self.in_phase.len() as u32
    }

    pub fn quadrature_sets(&self) -> u32 {
        self.quadrature.len() as u32
    }

    pub fn levels_per_set(&self) -> u32 {
        self.m
    }

    /// Level table of in-phase set `r` (1-based).
    pub fn in_phase_set(&self, r: u32) -> &[f64] {
        &self.in_phase[(r - 1) as usize]
    }

    /// Level table of quadrature set `t` (1-based).
    pub fn quadrature_set(&self, t: u32) -> &[f64] {
        &self.quadrature[(t - 1) as usize]
    }

    /// Adjacent spacing of the composite in-phase and quadrature alphabets,
    /// when the constellation was built by interleaving.
    pub fn composite_spacing(&self) -> Option<(f64, f64)> {
        self.spacing
    }

    pub fn in_phase_level(&self, r: u32, level: u32) -> Result<f64> {
        self.in_phase
            .get(r.wrapping_sub(1) as usize)
            .and_then(|set| set.get(level as usize))
            .copied()
            .ok_or_else(|| invalid!("in-phase level (r={r}, index={level}) out of range"))
    }

    pub fn quadrature_level(&self, t: u32, level: u32) -> Result<f64> {
        self.quadrature
            .get(t.wrapping_sub(1) as usize)
            .and_then(|set| set.get(level as usize))
            .copied()
            .ok_or_else(|| invalid!("quadrature level (t={t}, index={level}) out of range"))
    }
}

fn interleaved_pam(sets: u32, m: u32) -> (Vec<Vec<f64>>, f64) {
    let size = sets * m;
    let spacing = if size > 1 {
        (6.0 / (f64::from(size).powi(2) - 1.0)).sqrt()
    } else {
        0.0
    };
    let level = |u: u32| {
        if size == 1 {
            // a single level carries the whole per-axis energy
            (IQM_ENERGY / 2.0).sqrt()
        } else {
            (2.0 * f64::from(u) - f64::from(size - 1)) * spacing / 2.0
        }
    };
    let table = (0..sets)
        .map(|r| (0..m).map(|j| level(j * sets + r)).collect())
        .collect();
    (table, spacing)
}

/// Closed-form distances of the IQM codebook.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IqmDistances {
    /// `ξ = max(R, T)`.
    pub xi: u32,
    /// Codebook MED, `sqrt(2)` times the `ξM`-PAM spacing.
    pub d_min: Option<f64>,
    /// Spacing inside one disjoint PAM set.
    pub d1: Option<f64>,
}

pub fn analytic_med_iqm(c: &IqmConstellation) -> IqmDistances {
    let xi = c.in_phase_sets().max(c.quadrature_sets());
    let xm = f64::from(xi * c.m);
    let m = f64::from(c.m);
    let d_min = (xi * c.m >= 2).then(|| 2.0 * (3.0 / (xm * xm - 1.0)).sqrt());
    let d1 = (c.m >= 2).then(|| (6.0 / (m * m - f64::from(xi).powi(-2))).sqrt());
    IqmDistances { xi, d_min, d1 }
}

/// Minimum pairwise distance and the first pair (in scan order) attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Med {
    pub value: f64,
    pub pair: (usize, usize),
}

/// Exhaustive minimum distance over a set of complex points.
pub fn brute_force_med(points: &[Complex64]) -> Result<Med> {
    if points.len() < 2 {
        return Err(invalid!("need at least two points, got {}", points.len()));
    }
    let mut best = Med {
        value: f64::INFINITY,
        pair: (0, 1),
    };
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = (points[i] - points[j]).norm();
            if d < best.value {
                best = Med {
                    value: d,
                    pair: (i, j),
                };
            }
        }
    }
    Ok(best)
}

/// Exhaustive minimum Euclidean distance between symbol vectors.
pub fn brute_force_codebook_med<V: AsRef<[Complex64]>>(codebook: &[V]) -> Result<Med> {
    if codebook.len() < 2 {
        return Err(invalid!("need at least two codewords, got {}", codebook.len()));
    }
    let mut best_sq = f64::INFINITY;
    let mut pair = (0, 1);
    for i in 0..codebook.len() {
        let a = codebook[i].as_ref();
        for (j, b) in codebook.iter().enumerate().skip(i + 1) {
            let mut acc = 0.0;
            for (x, y) in a.iter().zip(b.as_ref()) {
                acc += (x - y).norm_sqr();
                if acc >= best_sq {
                    break;
                }
            }
            if acc < best_sq {
                best_sq = acc;
                pair = (i, j);
            }
        }
    }
    Ok(Med {
        value: best_sq.sqrt(),
        pair,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < TOL
    }

    #[test]
    fn table_one_geometry() {
        let c = ApmConstellation::new(2, 2, 1, false).unwrap();
        assert!((c.radii()[0] - (2.0f64 / 3.0).sqrt()).abs() < TOL);
        assert!((c.radii()[1] - (4.0f64 / 3.0).sqrt()).abs() < TOL);
        let expected = Complex64::from_polar((4.0f64 / 3.0).sqrt(), PI);
        assert!(close(c.point(2, 2, 0).unwrap(), expected));
        assert!(close(c.point(1, 2, 0).unwrap(), Complex64::new(-(2.0f64 / 3.0).sqrt(), 0.0)));
    }

    #[test]
    fn rotated_rings() {
        let c = ApmConstellation::new(4, 2, 2, true).unwrap();
        let expected = Complex64::from_polar((4.0f64 / 5.0).sqrt(), PI / 4.0);
        assert!(close(c.point(2, 1, 0).unwrap(), expected));
        let ring1 = c.point(1, 1, 0).unwrap();
        assert!((c.point(2, 1, 0).unwrap().arg() - ring1.arg() - PI / 4.0).abs() < TOL);
    }

    #[test]
    fn degenerate_psk() {
        let c = ApmConstellation::new(1, 1, 4, true).unwrap();
        for m in 0..4 {
            let z = c.point(1, 1, m).unwrap();
            assert!(close(z, Complex64::from_polar(1.0, PI / 2.0 * f64::from(m))));
        }
        assert!((brute_force_med(c.points()).unwrap().value - SQRT_2).abs() < TOL);
        assert!((analytic_med_apm(&c).d1.unwrap() - SQRT_2).abs() < TOL);
    }

    #[test]
    fn first_point_is_on_positive_axis() {
        for (k, p, m) in [(1, 1, 1), (3, 2, 4), (4, 4, 8)] {
            let c = ApmConstellation::new(k, p, m, true).unwrap();
            assert!(close(c.point(1, 1, 0).unwrap(), Complex64::new(c.radii()[0], 0.0)));
        }
    }

    #[test]
    fn index_checks() {
        let c = ApmConstellation::new(2, 2, 2, true).unwrap();
        assert!(c.point(0, 1, 0).is_err());
        assert!(c.point(3, 1, 0).is_err());
        assert!(c.point(1, 3, 0).is_err());
        assert!(c.point(1, 1, 2).is_err());
        assert!(ApmConstellation::new(0, 1, 1, true).is_err());
        for i in 0..c.points().len() {
            let (k, p, m) = c.coords_of(i);
            assert_eq!(c.index_of(k, p, m).unwrap(), i);
        }
    }

    #[test]
    fn apm_distance_values() {
        let c = ApmConstellation::new(2, 2, 1, true).unwrap();
        let d = analytic_med_apm(&c);
        assert!((d.d2.unwrap() - SQRT_2).abs() < TOL);
        assert_eq!(d.d3, None);
        assert_eq!(d.d4, None);
        // oracle: scan of the four points
        let bf = brute_force_med(c.points()).unwrap().value;
        let cands = d.point_candidates();
        assert!((bf - cands.iter().cloned().fold(f64::INFINITY, f64::min)).abs() < TOL);

        let d = analytic_med_apm(&ApmConstellation::new(4, 2, 2, true).unwrap());
        assert!((d.d3.unwrap() - 0.370_483_873_067_435_8).abs() < 1e-12);
    }

    #[test]
    fn unit_energy_and_distinct_points() {
        for k in 1..=4 {
            for p in 1..=4 {
                for m in [1, 2, 4, 8] {
                    let c = ApmConstellation::new(k, p, m, true).unwrap();
                    let e: f64 = c.points().iter().map(|z| z.norm_sqr()).sum::<f64>()
                        / c.points().len() as f64;
                    assert!((e - 1.0).abs() < TOL);
                    if c.points().len() > 1 {
                        assert!(brute_force_med(c.points()).unwrap().value > 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn brute_force_matches_candidates_on_small_grid() {
        for k in 1..=4 {
            for p in 1..=4 {
                for m in [1, 2, 4, 8] {
                    let c = ApmConstellation::new(k, p, m, true).unwrap();
                    if c.points().len() < 2 {
                        continue;
                    }
                    let bf = brute_force_med(c.points()).unwrap().value;
                    let cands = analytic_med_apm(&c).point_candidates();
                    let min = cands.iter().cloned().fold(f64::INFINITY, f64::min);
                    assert!(bf >= min - TOL, "K={k} P={p} M={m}");
                    assert!(cands.iter().any(|d| (d - bf).abs() < TOL), "K={k} P={p} M={m}");
                }
            }
        }
    }

    #[test]
    fn phase_sets_are_disjoint() {
        let c = ApmConstellation::new(1, 4, 4, true).unwrap();
        for p in 1..=4 {
            for q in p + 1..=4 {
                for a in 0..4 {
                    for b in 0..4 {
                        let x = c.point(1, p, a).unwrap();
                        let y = c.point(1, q, b).unwrap();
                        assert!((x - y).norm() > 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn iqm_four_pam_split() {
        let c = IqmConstellation::new(2, 2, 2).unwrap();
        let d = (6.0f64 / 15.0).sqrt();
        let (di, dq) = c.composite_spacing().unwrap();
        assert!((di - d).abs() < TOL && (dq - d).abs() < TOL);
        assert!((c.in_phase_set(1)[0] + 1.5 * d).abs() < TOL);
        assert!((c.in_phase_set(1)[1] - 0.5 * d).abs() < TOL);
        assert!((c.in_phase_set(2)[0] + 0.5 * d).abs() < TOL);
        assert!((c.in_phase_set(2)[1] - 1.5 * d).abs() < TOL);
        let mean: f64 = (0..4).map(|u| ((2.0 * u as f64 - 3.0) * d / 2.0).powi(2)).sum::<f64>() / 4.0;
        assert!((mean - 0.5).abs() < TOL);
    }

    #[test]
    fn iqm_binary_pam() {
        let c = IqmConstellation::new(1, 1, 2).unwrap();
        let h = 1.0 / SQRT_2;
        assert!((c.in_phase_set(1)[0] + h).abs() < TOL);
        assert!((c.in_phase_set(1)[1] - h).abs() < TOL);
        assert!((c.quadrature_set(1)[1] - h).abs() < TOL);
        let d = analytic_med_iqm(&c);
        assert!((d.d_min.unwrap() - 2.0).abs() < TOL);
    }

    #[test]
    fn iqm_distance_values() {
        let c = IqmConstellation::new(2, 2, 2).unwrap();
        let d = analytic_med_iqm(&c);
        assert!((d.d1.unwrap() - (6.0f64 / 3.75).sqrt()).abs() < TOL);
        assert!((d.d1.unwrap() - 1.264_911_064).abs() < 1e-9);
        assert!((d.d_min.unwrap() - 0.894_427_191).abs() < 1e-9);
        assert_eq!(analytic_med_iqm(&IqmConstellation::new(2, 2, 1).unwrap()).d1, None);
    }

    #[test]
    fn iqm_energy_and_spacing() {
        for r in 1..=5 {
            for t in 1..=5 {
                for m in [1, 2, 4, 8] {
                    let c = IqmConstellation::new(r, t, m).unwrap();
                    let all: Vec<f64> = (1..=r).flat_map(|s| c.in_phase_set(s).to_vec()).collect();
                    let e = all.iter().map(|x| x * x).sum::<f64>() / all.len() as f64;
                    assert!((e - 0.5).abs() < TOL, "R={r} M={m}");
                    let (di, dq) = c.composite_spacing().unwrap();
                    if m >= 2 && r * m >= 2 {
                        for s in 1..=r {
                            let set = c.in_phase_set(s);
                            for w in set.windows(2) {
                                assert!(w[1] > w[0]);
                                assert!(((w[1] - w[0]) / di - f64::from(r)).abs() < 1e-9);
                            }
                        }
                    }
                    if m >= 2 && t * m >= 2 {
                        let set = c.quadrature_set(1);
                        assert!(((set[1] - set[0]) / dq - f64::from(t)).abs() < 1e-9);
                    }
                    // disjointness
                    for a in 1..=r {
                        for b in a + 1..=r {
                            for x in c.in_phase_set(a) {
                                assert!(c.in_phase_set(b).iter().all(|y| (x - y).abs() > 1e-9));
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn custom_levels() {
        let h = SQRT_2 / 2.0;
        let c = IqmConstellation::from_levels(
            vec![vec![h], vec![-h]],
            vec![vec![0.5], vec![-(3.0f64).sqrt() / 2.0]],
        )
        .unwrap();
        assert_eq!(c.levels_per_set(), 1);
        assert_eq!(c.quadrature_level(2, 0).unwrap(), -(3.0f64).sqrt() / 2.0);
        assert!(c.in_phase_level(3, 0).is_err());
        assert!(IqmConstellation::from_levels(vec![vec![1.0], vec![1.0, 2.0]], vec![vec![0.0]]).is_err());
    }

    #[test]
    fn brute_force_needs_two() {
        assert!(brute_force_med(&[Complex64::new(1.0, 0.0)]).is_err());
        let cb: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0)]];
        assert!(brute_force_codebook_med(&cb).is_err());
    }
}
