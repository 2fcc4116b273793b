//! Command-line front end.
//!
//! Every command writes CSV (`,` separator, `.` decimal point, header row,
//! LF line endings) to `--out` or stdout. `tables` writes plain text.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Deserialize;

use crate::analysis::{self, ComplexityScheme};
use crate::bits;
use crate::constellation::{self, ApmConstellation, IqmConstellation};
use crate::detect::{self, Detector};
use crate::error::{invalid, Error, Result};
use crate::mdscode::{self, MdsParams};
use crate::modem::{Family, Modem, Provenance, Scheme, SchemeConfig};
use crate::sim::{self, StopRule};

/// Environment variable holding the default seed.
pub const SEED_ENV: &str = "MDSMOD_SEED";
/// Seed used when neither a flag, config file nor environment sets one.
pub const DEFAULT_SEED: u64 = 1;
/// Default Monte-Carlo samples per SNR point for `rate`.
pub const DEFAULT_RATE_SAMPLES: usize = 10_000;
/// Largest `f` for which `med` scans the whole codebook.
pub const MAX_MED_BITS: usize = 12;

#[derive(Debug, Parser)]
#[command(name = "mdsmod", version, about = "OFDM with MDS-coded amplitude/phase and I/Q index modulation")]
struct Cli {
    /// Flat JSON file supplying defaults for any flag; flags take precedence
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte-Carlo BER sweep
    Ber(BerArgs),
    /// Union bound on BER
    Bound(BoundArgs),
    /// Achievable rate estimate
    Rate(RateArgs),
    /// Minimum Euclidean distances
    Med(MedArgs),
    /// Detection complexity
    Complexity(ComplexityArgs),
    /// Worked examples of the mapping rules
    Tables(TablesArgs),
    /// Named figure-reproduction experiments
    Preset(PresetArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum SchemeKind {
    Apm,
    Iqm,
    Psk,
    Qam,
}

#[derive(Debug, Default, Args)]
struct SchemeArgs {
    /// Modulation scheme
    #[arg(long, value_enum)]
    scheme: Option<SchemeKind>,
    /// Subcarriers per group
    #[arg(long)]
    n: Option<usize>,
    /// Amplitude rings (APM)
    #[arg(long)]
    k: Option<u32>,
    /// Disjoint phase sets (APM)
    #[arg(long)]
    p: Option<u32>,
    /// Points per set (APM/IQM, default 1) or constellation order (PSK/QAM)
    #[arg(long)]
    m: Option<u32>,
    /// Disjoint in-phase PAM sets (IQM)
    #[arg(long)]
    r: Option<u32>,
    /// Disjoint quadrature PAM sets (IQM)
    #[arg(long)]
    t: Option<u32>,
    /// Rotate ring k by (k-1)pi/(PM) (APM, default true)
    #[arg(long, value_name = "BOOL")]
    ring_rotation: Option<bool>,
}

#[derive(Debug, Default, Args)]
struct SweepArgs {
    /// SNR sweep in dB as start:step:stop (inclusive) or a single value
    #[arg(long, value_name = "START:STEP:STOP")]
    snr: Option<String>,
}

#[derive(Debug, Default, Args)]
struct OutputArgs {
    /// Output file (default: stdout)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct BerArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[command(flatten)]
    sweep: SweepArgs,
    /// Detector: ml or lcml
    #[arg(long)]
    detector: Option<Detector>,
    /// Subcarrier groups per frame
    #[arg(long)]
    groups: Option<usize>,
    /// Master seed (default: $MDSMOD_SEED, else 1)
    #[arg(long)]
    seed: Option<u64>,
    /// Stop a point after this many bit errors
    #[arg(long)]
    min_errors: Option<u64>,
    /// Stop a point after this many frames
    #[arg(long)]
    max_frames: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[command(flatten)]
    sweep: SweepArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct RateArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[command(flatten)]
    sweep: SweepArgs,
    /// Monte-Carlo samples per SNR point
    #[arg(long)]
    samples: Option<usize>,
    /// Master seed (default: $MDSMOD_SEED, else 1)
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct MedArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Compare APM(N,M,M,M) and IQM(N,M,M,sqrt M) with M^2-PSK/QAM
    #[arg(long)]
    compare: bool,
    /// Largest log2 M in the comparison
    #[arg(long, default_value_t = 10)]
    max_log2m: u32,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct ComplexityArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Decoding complexity per bit at matched SE instead of metric counts
    #[arg(long)]
    per_bit: bool,
    /// Group sizes for --per-bit
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16,32")]
    n_list: Vec<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct TablesArgs {
    /// Table to print
    #[arg(long, default_value = "all", value_parser = ["1", "2", "3", "4", "all"])]
    which: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct PresetArgs {
    #[command(subcommand)]
    action: PresetAction,
}

#[derive(Debug, Subcommand)]
enum PresetAction {
    /// List preset names
    List,
    /// Print the commands a preset runs
    Show { name: String },
    /// Run a preset, writing one CSV per curve
    Run {
        name: String,
        /// Directory for the CSV files
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Master seed (default: $MDSMOD_SEED, else 1)
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        min_errors: Option<u64>,
        #[arg(long)]
        max_frames: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

/// Contents of a `--config` file. Keys mirror the long flag names.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    scheme: Option<SchemeKind>,
    n: Option<usize>,
    k: Option<u32>,
    p: Option<u32>,
    m: Option<u32>,
    r: Option<u32>,
    t: Option<u32>,
    ring_rotation: Option<bool>,
    snr: Option<String>,
    detector: Option<String>,
    groups: Option<usize>,
    seed: Option<u64>,
    min_errors: Option<u64>,
    max_frames: Option<u64>,
    samples: Option<usize>,
    out: Option<PathBuf>,
    threads: Option<usize>,
}

fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| invalid!("cannot read config {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| invalid!("bad config {}: {e}", path.display()))
}

fn resolve_seed(flag: Option<u64>, file: &FileConfig) -> Result<u64> {
    if let Some(s) = flag.or(file.seed) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| invalid!("{SEED_ENV}='{v}' is not an unsigned integer")),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

impl SchemeArgs {
    fn resolve(&self, file: &FileConfig) -> Result<Scheme> {
        let kind = self
            .scheme
            .or(file.scheme)
            .ok_or_else(|| invalid!("--scheme is required (apm, iqm, psk or qam)"))?;
        let need = |v: Option<u32>, f: Option<u32>, name: &str| {
            v.or(f).ok_or_else(|| invalid!("--{name} is required for this scheme"))
        };
        let n = || {
            self.n
                .or(file.n)
                .ok_or_else(|| invalid!("--n is required for this scheme"))
        };
        let m = self.m.or(file.m);
        let scheme = match kind {
            SchemeKind::Apm => Scheme::Apm {
                n: n()?,
                k: need(self.k, file.k, "k")?,
                p: need(self.p, file.p, "p")?,
                m: m.unwrap_or(1),
                ring_rotation: self.ring_rotation.or(file.ring_rotation).unwrap_or(true),
            },
            SchemeKind::Iqm => Scheme::Iqm {
                n: n()?,
                r: need(self.r, file.r, "r")?,
                t: need(self.t, file.t, "t")?,
                m: m.unwrap_or(1),
            },
            SchemeKind::Psk => Scheme::plain(need(m, None, "m")?, Family::Psk),
            SchemeKind::Qam => Scheme::plain(need(m, None, "m")?, Family::Qam),
        };
        scheme.validate()?;
        Ok(scheme)
    }
}

/// Parses `start:step:stop` (inclusive) or a single value.
pub fn parse_snr_range(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| invalid!("bad SNR value '{s}'"))
    };
    match parts.as_slice() {
        [single] => Ok(vec![num(single)?]),
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if step <= 0.0 {
                return Err(invalid!("SNR step must be positive"));
            }
            if stop < start {
                return Err(invalid!("SNR stop {stop} is below start {start}"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count)
                .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
                .collect())
        }
        _ => Err(invalid!("SNR must be start:step:stop or a single value, got '{text}'")),
    }
}

fn resolve_snr(sweep: &SweepArgs, file: &FileConfig) -> Result<Vec<f64>> {
    let text = sweep
        .snr
        .as_deref()
        .or(file.snr.as_deref())
        .ok_or_else(|| invalid!("--snr is required"))?;
    parse_snr_range(text)
}

/// What an experiment computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Ber(Detector),
    Bound,
    Rate,
}

/// A fully resolved `ber`, `bound` or `rate` run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub config: SchemeConfig,
    pub snr_db: Vec<f64>,
    pub seed: u64,
    pub stop: StopRule,
    pub samples: usize,
}

fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Runs an experiment and returns its CSV.
pub fn execute(spec: &ExperimentSpec) -> Result<String> {
    let modem = Modem::new(spec.config.scheme)?;
    match spec.kind {
        ExperimentKind::Ber(det) => {
            let pts = sim::run_ber_sweep(&spec.config, &spec.snr_db, det, spec.stop, spec.seed)?;
            Ok(csv(
                &["snr_db", "ber", "bit_errors", "bits_sent", "frames", "detector", "seed"],
                pts.iter().map(|p| {
                    vec![
                        p.snr_db.to_string(),
                        p.ber.to_string(),
                        p.bit_errors.to_string(),
                        p.bits_sent.to_string(),
                        p.frames.to_string(),
                        p.detector.to_string(),
                        p.seed.to_string(),
                    ]
                }),
            ))
        }
        ExperimentKind::Bound => {
            let ub = analysis::union_bound_curve(&modem, &spec.snr_db)?;
            Ok(csv(
                &["snr_db", "ber_upper_bound"],
                spec.snr_db
                    .iter()
                    .zip(ub)
                    .map(|(s, b)| vec![s.to_string(), b.to_string()]),
            ))
        }
        ExperimentKind::Rate => {
            let pts = analysis::achievable_rate_curve(&modem, &spec.snr_db, spec.samples, spec.seed)?;
            Ok(csv(
                &["snr_db", "rate_bps", "samples", "stderr"],
                pts.iter().map(|p| {
                    vec![
                        p.snr_db.to_string(),
                        p.rate.to_string(),
                        p.samples.to_string(),
                        p.stderr.to_string(),
                    ]
                }),
            ))
        }
    }
}

fn scheme_flags(s: &Scheme) -> String {
    match *s {
        Scheme::Apm { n, k, p, m, ring_rotation } => {
            let mut f = format!("--scheme apm --n {n} --k {k} --p {p} --m {m}");
            if !ring_rotation {
                f.push_str(" --ring-rotation false");
            }
            f
        }
        Scheme::Iqm { n, r, t, m } => format!("--scheme iqm --n {n} --r {r} --t {t} --m {m}"),
        Scheme::Plain { m, family: Family::Psk } => format!("--scheme psk --m {m}"),
        Scheme::Plain { m, family: Family::Qam } => format!("--scheme qam --m {m}"),
    }
}

fn snr_flag(snr: &[f64]) -> String {
    match snr {
        [single] => single.to_string(),
        [first, second, ..] => {
            format!("{}:{}:{}", first, second - first, snr[snr.len() - 1])
        }
        [] => String::new(),
    }
}

/// The equivalent command line for `spec`.
pub fn command_line(spec: &ExperimentSpec) -> String {
    let scheme = scheme_flags(&spec.config.scheme);
    let snr = snr_flag(&spec.snr_db);
    match spec.kind {
        ExperimentKind::Ber(d) => format!(
            "mdsmod ber {scheme} --groups {} --snr {snr} --detector {d} --seed {} --min-errors {} --max-frames {}",
            spec.config.groups, spec.seed, spec.stop.min_bit_errors, spec.stop.max_frames
        ),
        ExperimentKind::Bound => format!("mdsmod bound {scheme} --snr {snr}"),
        ExperimentKind::Rate => format!(
            "mdsmod rate {scheme} --snr {snr} --samples {} --seed {}",
            spec.samples, spec.seed
        ),
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| invalid!("cannot write {}: {e}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn na(v: Option<f64>) -> String {
    v.map_or_else(|| "na".to_string(), |x| x.to_string())
}

fn codebook_med(modem: &Modem) -> Result<Option<f64>> {
    if modem.bits_per_group() > MAX_MED_BITS || modem.bits_per_group() == 0 {
        return Ok(None);
    }
    let words = modem.codebook()?.symbols(modem.alphabet());
    Ok(Some(constellation::brute_force_codebook_med(&words)?.value))
}

fn min_within_set_spacing(sets: impl Iterator<Item = Vec<f64>>) -> Option<f64> {
    sets.flat_map(|mut s| {
        s.sort_by(f64::total_cmp);
        s.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>()
    })
    .reduce(f64::min)
}

fn med_report(scheme: &Scheme) -> Result<String> {
    let modem = Modem::new(*scheme)?;
    let point = constellation::brute_force_med(modem.alphabet()).ok().map(|m| m.value);
    let mut rows: Vec<(&str, Option<f64>)> = Vec::new();
    if let Some(c) = modem.apm_constellation() {
        let d = constellation::analytic_med_apm(c);
        rows.extend([("d1", d.d1), ("d2", d.d2), ("d3", d.d3), ("d4", d.d4), ("d_min", d.d_min)]);
    } else if let Some(c) = modem.iqm_constellation() {
        let d = constellation::analytic_med_iqm(c);
        rows.extend([("xi", Some(f64::from(d.xi))), ("d_min", d.d_min), ("d1", d.d1)]);
        let sets = (1..=c.in_phase_sets())
            .map(|r| c.in_phase_set(r).to_vec())
            .chain((1..=c.quadrature_sets()).map(|t| c.quadrature_set(t).to_vec()));
        rows.push(("bf_set_spacing", min_within_set_spacing(sets)));
    }
    rows.push(("bf_point_med", point));
    rows.push(("bf_codebook_med", codebook_med(&modem)?));
    Ok(csv(
        &["quantity", "value"],
        rows.into_iter().map(|(k, v)| vec![k.to_string(), na(v)]),
    ))
}

fn med_compare(max_log2m: u32) -> Result<String> {
    let rows = (1..=max_log2m)
        .map(|l| {
            let c = analysis::med_comparison(l)?;
            Ok(vec![
                l.to_string(),
                c.apm.to_string(),
                c.iqm.to_string(),
                c.psk.to_string(),
                c.qam.to_string(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(csv(&["log2_m", "apm_d4", "iqm_d1", "psk", "qam"], rows))
}

fn complexity_report(scheme: &Scheme) -> Result<String> {
    let rows = [Detector::Ml, Detector::Lcml]
        .into_iter()
        .map(|d| {
            let c = detect::metric_count(scheme, d)?;
            Ok(vec![d.to_string(), c.per_group.to_string(), c.per_subcarrier.to_string()])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(csv(&["detector", "per_group", "per_subcarrier"], rows))
}

fn complexity_per_bit(ns: &[usize], m: u32) -> Result<String> {
    let m = f64::from(m);
    let rows = ns
        .iter()
        .map(|&n| {
            let mut row = vec![n.to_string(), m.to_string()];
            row.push(analysis::matched_spectral_efficiency(n, m).to_string());
            for s in ComplexityScheme::ALL {
                row.push(analysis::decoding_complexity_per_bit(n, m, s)?.to_string());
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(csv(&["n", "m", "eta", "mds_apm", "mm_ofdm_im", "ofdm_im", "ofdm"], rows))
}

/// Smallest-denominator rational `p/q` (q <= 64) equal to `x`.
fn rational(x: f64) -> Option<(i64, i64)> {
    (1..=64i64).find_map(|q| {
        let p = (x * q as f64).round();
        ((x * q as f64 - p).abs() < 1e-9).then_some((p as i64, q))
    })
}

fn isqrt(v: i64) -> Option<i64> {
    let r = (v as f64).sqrt().round() as i64;
    (r * r == v).then_some(r)
}

/// ASCII form of a real value such as `sqrt(2/3)` or `-sqrt(3)/2`.
pub fn render_real(v: f64) -> String {
    if v.abs() < 1e-12 {
        return "0".into();
    }
    let sign = if v < 0.0 { "-" } else { "" };
    let Some((p, q)) = rational(v * v) else {
        return v.to_string();
    };
    let body = match (isqrt(p), isqrt(q)) {
        (Some(a), Some(1)) => a.to_string(),
        (Some(a), Some(b)) => format!("{a}/{b}"),
        (None, Some(1)) => format!("sqrt({p})"),
        (None, Some(b)) => format!("sqrt({p})/{b}"),
        _ if p == 1 => format!("sqrt({q})/{q}"),
        _ => format!("sqrt({p}/{q})"),
    };
    format!("{sign}{body}")
}

/// ASCII form of a unit phasor such as `exp(j*pi)`.
pub fn render_phasor(z: Complex64) -> String {
    let Some((a, b)) = rational(z.arg() / std::f64::consts::PI) else {
        return format!("exp(j*{})", z.arg());
    };
    let phase = match (a, b) {
        (0, _) => "1".to_string(),
        (1, 1) => "exp(j*pi)".to_string(),
        (-1, 1) => "exp(-j*pi)".to_string(),
        (a, b) if a < 0 => format!("exp(-j*pi*{}/{b})", -a),
        (a, b) => format!("exp(j*pi*{a}/{b})"),
    };
    if (z.norm() - 1.0).abs() < 1e-12 {
        phase
    } else {
        format!("{}*{phase}", render_real(z.norm()))
    }
}

fn tuple_text<T: ToString>(v: impl IntoIterator<Item = T>) -> String {
    let items: Vec<String> = v.into_iter().map(|x| x.to_string()).collect();
    format!("({})", items.join(", "))
}

fn table_text(title: &str, header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        padded.join(" | ").trim_end().to_string()
    };
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let mut out = format!("{title}\n");
    out.push_str(&line(header.to_vec()));
    out.push('\n');
    out.push_str(&rule.join("-+-"));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

fn table_one() -> Result<String> {
    let (k, p, n) = (2, 2, 3);
    let c = ApmConstellation::new(k, p, 1, false)?;
    let amp = MdsParams::new(k, n)?;
    let rows = mdscode::codewords(&amp)
        .map(|tuple| {
            let amplitudes = tuple.symbols().iter().map(|&i| render_real(c.radii()[i as usize - 1]));
            let phases = tuple
                .symbols()
                .iter()
                .map(|&i| c.point(1, i, 0).map(|z| render_phasor(z / z.norm())))
                .collect::<Result<Vec<_>>>()?;
            Ok(vec![
                tuple_text(&tuple.symbols()[..n - 1]),
                tuple_text(tuple.symbols()),
                tuple_text(amplitudes),
                tuple_text(phases),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(table_text(
        "Table I: amplitude and phase vectors, K = P = 2, N = 3 (no ring rotation)",
        &["(N-1)-tuple", "N-tuple", "amplitudes", "phases"],
        &rows,
    ))
}

fn table_two() -> Result<String> {
    let params = MdsParams::new(3, 3)?;
    let f = params.index_bits();
    let rows = (0..1u64 << f)
        .map(|d| {
            let b = bits::from_u64(d, f);
            let tuple = mdscode::bits_to_tuple(&b, &params)?;
            let head = &tuple.symbols()[..2];
            Ok(vec![
                b.iter().map(|&x| if x { '1' } else { '0' }).collect(),
                mdscode::tuple_index(&tuple, &params).to_string(),
                tuple_text(head.iter().map(|s| s - 1)),
                tuple_text(head),
                tuple_text(tuple.symbols()),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(table_text(
        "Table II: bit-to-index mapping, K = 3, N = 3",
        &["bits", "decimal", "alpha", "(N-1)-tuple", "N-tuple"],
        &rows,
    ))
}

/// The R = T = 2 example levels: in-phase ±sqrt(2)/2, quadrature 1/2 and
/// -sqrt(3)/2.
pub fn example_iqm_levels() -> Result<IqmConstellation> {
    let h = std::f64::consts::SQRT_2 / 2.0;
    IqmConstellation::from_levels(
        vec![vec![h], vec![-h]],
        vec![vec![0.5], vec![-(3f64.sqrt()) / 2.0]],
    )
}

fn table_three() -> Result<String> {
    let n = 3;
    let modem = Modem::iqm_with_constellation(n, example_iqm_levels()?)?;
    let (ip, _) = modem.index_codes().expect("iqm");
    let rows = mdscode::codewords(&ip)
        .map(|tuple| {
            let prov = Provenance::Iqm {
                in_phase_set: tuple.clone(),
                in_phase_level: vec![0; n],
                quadrature_set: tuple.clone(),
                quadrature_level: vec![0; n],
            };
            let s = modem.symbols(&prov)?;
            Ok(vec![
                tuple_text(&tuple.symbols()[..n - 1]),
                tuple_text(tuple.symbols()),
                tuple_text(s.iter().map(|z| render_real(z.re))),
                tuple_text(s.iter().map(|z| render_real(z.im))),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(table_text(
        "Table III: in-phase and quadrature components, R = T = 2, N = 3",
        &["(N-1)-tuple", "N-tuple", "in-phase", "quadrature"],
        &rows,
    ))
}

/// One complexity-table row: `(N, R, T, M, K1, M1, M2, M3)`.
pub type ComplexityRow = (usize, u32, u32, u32, u32, u32, u32, u32);

/// Parameters of the three complexity-table rows.
pub const TABLE_IV_ROWS: [ComplexityRow; 3] = [
    (4, 2, 2, 4, 3, 102, 23, 46),
    (8, 2, 4, 4, 7, 142, 27, 99),
    (16, 4, 4, 4, 15, 256, 32, 216),
];

fn table_four() -> Result<String> {
    let rows = TABLE_IV_ROWS
        .iter()
        .map(|&(n, r, t, m, k1, m1, m2, m3)| {
            let s = Scheme::iqm(n, r, t, m);
            let ml = detect::metric_count(&s, Detector::Ml)?.per_subcarrier;
            let lc = detect::metric_count(&s, Detector::Lcml)?.per_subcarrier;
            let b = analysis::benchmark_counts(n, m1, m2, m3);
            Ok(vec![
                format!("N={n} R={r} T={t} M={m} K1={k1} M1={m1} M2={m2} M3={m3}"),
                format!("{ml:.2e}"),
                lc.to_string(),
                b.ofdm_im.to_string(),
                b.mm_ofdm_im.to_string(),
                b.ofdm.to_string(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(table_text(
        "Table IV: metric calculations per subcarrier",
        &["parameters", "IQM ML", "IQM LC-ML", "OFDM-IM LLR", "MM-OFDM-IM", "OFDM ML"],
        &rows,
    ))
}

/// Text of table `which` ("1".."4" or "all").
pub fn render_tables(which: &str) -> Result<String> {
    let parts: Vec<fn() -> Result<String>> = match which {
        "1" => vec![table_one],
        "2" => vec![table_two],
        "3" => vec![table_three],
        "4" => vec![table_four],
        "all" => vec![table_one, table_two, table_three, table_four],
        other => return Err(invalid!("unknown table '{other}'")),
    };
    let texts = parts.into_iter().map(|f| f()).collect::<Result<Vec<_>>>()?;
    Ok(texts.join("\n"))
}

/// One curve of a preset.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetRun {
    /// File stem of the CSV.
    pub label: String,
    pub spec: ExperimentSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub runs: Vec<PresetRun>,
}

pub const PRESET_NAMES: [&str; 6] = ["fig4", "fig5", "fig6", "fig8", "fig9a", "fig9b"];

fn slug(s: &Scheme) -> String {
    match *s {
        Scheme::Apm { n, k, p, m, .. } => format!("apm_{n}_{k}_{p}_{m}"),
        Scheme::Iqm { n, r, t, m } => format!("iqm_{n}_{r}_{t}_{m}"),
        Scheme::Plain { m, family: Family::Psk } => format!("ofdm_{m}psk"),
        Scheme::Plain { m, family: Family::Qam } => format!("ofdm_{m}qam"),
    }
}

/// Builds a named preset with the given seed, stop rule and sample count.
pub fn preset(name: &str, seed: u64, stop: StopRule, samples: usize) -> Result<Preset> {
    let snr = |a: f64, b: f64, c: f64| parse_snr_range(&format!("{a}:{b}:{c}"));
    let mk = |kind: ExperimentKind, scheme: Scheme, snr_db: Vec<f64>| -> Result<PresetRun> {
        let tag = match kind {
            ExperimentKind::Ber(d) => format!("ber_{d}"),
            ExperimentKind::Bound => "bound".into(),
            ExperimentKind::Rate => "rate".into(),
        };
        Ok(PresetRun {
            label: format!("{}_{tag}", slug(&scheme)),
            spec: ExperimentSpec {
                kind,
                config: SchemeConfig::new(scheme, 1)?,
                snr_db,
                seed,
                stop,
                samples,
            },
        })
    };
    let ml = ExperimentKind::Ber(Detector::Ml);
    let lc = ExperimentKind::Ber(Detector::Lcml);
    let (description, runs) = match name {
        "fig4" => {
            let s = snr(0.0, 5.0, 40.0)?;
            (
                "BER at 1 bps: APM(2,2,2,1), IQM(2,2,2,1), BPSK; ML detection",
                vec![
                    mk(ml, Scheme::apm(2, 2, 2, 1), s.clone())?,
                    mk(ml, Scheme::iqm(2, 2, 2, 1), s.clone())?,
                    mk(ml, Scheme::plain(2, Family::Psk), s)?,
                ],
            )
        }
        "fig5" => {
            let s = snr(0.0, 5.0, 35.0)?;
            (
                "BER near 3 bps: IQM(4,4,4,1), APM(4,2,8,1), APM(4,2,4,2); 8-PSK baseline",
                vec![
                    mk(ml, Scheme::iqm(4, 4, 4, 1), s.clone())?,
                    mk(ml, Scheme::apm(4, 2, 8, 1), s.clone())?,
                    mk(ml, Scheme::apm(4, 2, 4, 2), s.clone())?,
                    mk(ml, Scheme::plain(8, Family::Psk), s)?,
                ],
            )
        }
        "fig6" => {
            let s = snr(0.0, 5.0, 35.0)?;
            (
                "BER at 4 bps: APM(4,2,8,2), IQM(4,8,6,1) with LC-ML; 16-QAM with ML",
                vec![
                    mk(lc, Scheme::apm(4, 2, 8, 2), s.clone())?,
                    mk(lc, Scheme::iqm(4, 8, 6, 1), s.clone())?,
                    mk(ml, Scheme::plain(16, Family::Qam), s)?,
                ],
            )
        }
        "fig8" => {
            let s = snr(0.0, 5.0, 40.0)?;
            let mut runs = Vec::new();
            for scheme in [
                Scheme::apm(2, 4, 4, 1),
                Scheme::apm(4, 2, 4, 2),
                Scheme::iqm(4, 2, 2, 2),
                Scheme::iqm(2, 2, 2, 1),
            ] {
                runs.push(mk(ml, scheme, s.clone())?);
                runs.push(mk(lc, scheme, s.clone())?);
            }
            runs.push(mk(ExperimentKind::Bound, Scheme::apm(2, 4, 4, 1), s.clone())?);
            runs.push(mk(ExperimentKind::Bound, Scheme::iqm(2, 2, 2, 1), s)?);
            ("LC-ML versus ML, with union bounds", runs)
        }
        "fig9a" => {
            let s = snr(0.0, 2.0, 30.0)?;
            (
                "Achievable rate at 4 bps: APM(2,4,4,4), IQM(2,4,4,2), 16-QAM",
                vec![
                    mk(ExperimentKind::Rate, Scheme::apm(2, 4, 4, 4), s.clone())?,
                    mk(ExperimentKind::Rate, Scheme::iqm(2, 4, 4, 2), s.clone())?,
                    mk(ExperimentKind::Rate, Scheme::plain(16, Family::Qam), s)?,
                ],
            )
        }
        "fig9b" => {
            let s = snr(0.0, 2.0, 30.0)?;
            (
                "Achievable rate at 5 bps: APM(2,4,4,8), IQM(2,8,8,2), 32-PSK",
                vec![
                    mk(ExperimentKind::Rate, Scheme::apm(2, 4, 4, 8), s.clone())?,
                    mk(ExperimentKind::Rate, Scheme::iqm(2, 8, 8, 2), s.clone())?,
                    mk(ExperimentKind::Rate, Scheme::plain(32, Family::Psk), s)?,
                ],
            )
        }
        other => {
            return Err(invalid!(
                "unknown preset '{other}' (known: {})",
                PRESET_NAMES.join(", ")
            ))
        }
    };
    let name = PRESET_NAMES.iter().find(|&&p| p == name).expect("matched above");
    Ok(Preset {
        name,
        description,
        runs,
    })
}

fn stop_rule(min_errors: Option<u64>, max_frames: Option<u64>, file: &FileConfig) -> StopRule {
    let d = StopRule::default();
    StopRule {
        min_bit_errors: min_errors.or(file.min_errors).unwrap_or(d.min_bit_errors),
        max_frames: max_frames.or(file.max_frames).unwrap_or(d.max_frames),
    }
}

fn run_command(cli: Cli) -> Result<()> {
    let file = load_config(cli.config.as_deref())?;
    let out_path = |o: &OutputArgs| o.out.clone().or_else(|| file.out.clone());
    let threads = |o: &OutputArgs| o.threads.or(file.threads);
    match cli.command {
        Command::Ber(a) => {
            let detector = match a.detector {
                Some(d) => d,
                None => file.detector.as_deref().unwrap_or("ml").parse()?,
            };
            let spec = ExperimentSpec {
                kind: ExperimentKind::Ber(detector),
                config: SchemeConfig::new(a.scheme.resolve(&file)?, a.groups.or(file.groups).unwrap_or(1))?,
                snr_db: resolve_snr(&a.sweep, &file)?,
                seed: resolve_seed(a.seed, &file)?,
                stop: stop_rule(a.min_errors, a.max_frames, &file),
                samples: 0,
            };
            let text = sim::with_threads(threads(&a.output), || execute(&spec))??;
            write_output(out_path(&a.output).as_deref(), &text)
        }
        Command::Bound(a) => {
            let spec = ExperimentSpec {
                kind: ExperimentKind::Bound,
                config: SchemeConfig::new(a.scheme.resolve(&file)?, 1)?,
                snr_db: resolve_snr(&a.sweep, &file)?,
                seed: 0,
                stop: StopRule::default(),
                samples: 0,
            };
            let text = sim::with_threads(threads(&a.output), || execute(&spec))??;
            write_output(out_path(&a.output).as_deref(), &text)
        }
        Command::Rate(a) => {
            let spec = ExperimentSpec {
                kind: ExperimentKind::Rate,
                config: SchemeConfig::new(a.scheme.resolve(&file)?, 1)?,
                snr_db: resolve_snr(&a.sweep, &file)?,
                seed: resolve_seed(a.seed, &file)?,
                stop: StopRule::default(),
                samples: a.samples.or(file.samples).unwrap_or(DEFAULT_RATE_SAMPLES),
            };
            let text = sim::with_threads(threads(&a.output), || execute(&spec))??;
            write_output(out_path(&a.output).as_deref(), &text)
        }
        Command::Med(a) => {
            let text = if a.compare {
                let text = med_compare(a.max_log2m)?;
                match analysis::apm_qam_crossover(a.max_log2m)? {
                    Some(l) => eprintln!("APM(N,M,M,M) falls to or below M^2-QAM from log2 M = {l}"),
                    None => eprintln!("APM(N,M,M,M) exceeds M^2-QAM up to log2 M = {}", a.max_log2m),
                }
                text
            } else {
                med_report(&a.scheme.resolve(&file)?)?
            };
            write_output(out_path(&a.output).as_deref(), &text)
        }
        Command::Complexity(a) => {
            let text = if a.per_bit {
                let m = a.scheme.m.or(file.m).unwrap_or(4);
                complexity_per_bit(&a.n_list, m)?
            } else {
                complexity_report(&a.scheme.resolve(&file)?)?
            };
            write_output(out_path(&a.output).as_deref(), &text)
        }
        Command::Tables(a) => write_output(out_path(&a.output).as_deref(), &render_tables(&a.which)?),
        Command::Preset(a) => match a.action {
            PresetAction::List => {
                let mut text = String::new();
                for name in PRESET_NAMES {
                    let p = preset(name, DEFAULT_SEED, StopRule::default(), DEFAULT_RATE_SAMPLES)?;
                    let _ = writeln!(text, "{name}\t{}", p.description);
                }
                write_output(None, &text)
            }
            PresetAction::Show { name } => {
                let seed = resolve_seed(None, &file)?;
                let p = preset(&name, seed, stop_rule(None, None, &file), DEFAULT_RATE_SAMPLES)?;
                let mut text = format!("# {}: {}\n", p.name, p.description);
                for run in &p.runs {
                    let _ = writeln!(text, "{} --out {}.csv", command_line(&run.spec), run.label);
                }
                write_output(None, &text)
            }
            PresetAction::Run {
                name,
                out_dir,
                seed,
                min_errors,
                max_frames,
                samples,
                threads: t,
            } => {
                let seed = resolve_seed(seed, &file)?;
                let stop = stop_rule(min_errors, max_frames, &file);
                let samples = samples.or(file.samples).unwrap_or(DEFAULT_RATE_SAMPLES);
                let p = preset(&name, seed, stop, samples)?;
                fs::create_dir_all(&out_dir)
                    .map_err(|e| invalid!("cannot create {}: {e}", out_dir.display()))?;
                for run in &p.runs {
                    let text = sim::with_threads(t.or(file.threads), || execute(&run.spec))??;
                    let path = out_dir.join(format!("{}.csv", run.label));
                    write_output(Some(&path), &text)?;
                    eprintln!("wrote {}", path.display());
                }
                Ok(())
            }
        },
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run_command(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::InvalidArgument(_)) => {
            eprintln!("error: {e}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

pub fn main() -> ExitCode {
    run(std::env::args_os())
}
