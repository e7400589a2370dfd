//! Monte Carlo BLER/BER estimation, sweep CSV output and the flat
//! key-value configuration format used by the command line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::channel::{ebn0_to_sigma, frame_rng, modulate, sample_codeword, transmit_with, CodewordMode};
use crate::code_graph::{derive_generator, parse_alist, GeneratorMatrix, TannerGraph};
use crate::decimation::{nbp_d_decode_with, DecimatorParams, NbpdConfig, Selection};
use crate::decoder::{hard_decision, NbpDecoder, WeightSet};
use crate::error::{Error, Result};
use crate::oracle::{ml_decode, Codebook};

pub const CSV_HEADER: &str =
    "decoder,ebn0_db,frames,block_errors,bit_errors,bler,ber,ci95_low,ci95_high,wall_seconds";

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// A code together with its encoder.
#[derive(Debug, Clone)]
pub struct Code {
    pub graph: TannerGraph,
    pub gen: GeneratorMatrix,
}

impl Code {
    pub fn new(graph: TannerGraph) -> Result<Self> {
        let gen = derive_generator(&graph)?;
        Ok(Self { graph, gen })
    }

    pub fn from_alist_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(parse_alist(&std::fs::read_to_string(path)?)?)
    }

    /// Length-`n` code without checks (rate 1), for the uncoded reference.
    pub fn uncoded(n: usize) -> Result<Self> {
        Self::new(TannerGraph::from_vn_checks(0, &vec![Vec::new(); n])?)
    }

    pub fn rate(&self) -> f64 {
        self.gen.rate()
    }
}

/// A decoder with everything it needs loaded.
#[derive(Debug, Clone)]
pub enum Decoder {
    /// Hard decision on the channel LLRs.
    Uncoded,
    /// Unit-weight BP with early exit.
    Bp { l_max: usize },
    /// Weighted BP with early exit.
    Nbp { weights: WeightSet, l_max: usize },
    Nbpd {
        weights: WeightSet,
        params: Option<DecimatorParams>,
        cfg: NbpdConfig,
        selection: Selection,
    },
    /// Brute-force soft-decision ML.
    Ml { codebook: Codebook },
}

impl Decoder {
    pub fn name(&self) -> String {
        match self {
            Self::Uncoded => "uncoded".into(),
            Self::Bp { l_max } => format!("BP({l_max})"),
            Self::Nbp { l_max, .. } => format!("NBP({l_max})"),
            Self::Nbpd { cfg, .. } => cfg.to_string(),
            Self::Ml { .. } => "ML".into(),
        }
    }

    /// Checks that the loaded resources fit `code`.
    pub fn validate(&self, code: &Code) -> Result<()> {
        match self {
            Self::Uncoded => Ok(()),
            Self::Bp { l_max } | Self::Nbp { l_max, .. } if *l_max == 0 => {
                Err(Error::InvalidParameter("l_max must be at least 1".into()))
            }
            Self::Bp { .. } => Ok(()),
            Self::Nbp { weights, .. } => weights.validate(&code.graph),
            Self::Nbpd { weights, params, cfg, .. } => {
                weights.validate(&code.graph)?;
                cfg.validate(code.graph.n())?;
                match (cfg.n_ld, params) {
                    (0, _) => Ok(()),
                    (_, Some(p)) => p.validate(),
                    (_, None) => Err(Error::InvalidParameter(
                        "learned decimation requires decimator parameters".into(),
                    )),
                }
            }
            Self::Ml { codebook } => {
                if codebook.n() == code.graph.n() {
                    Ok(())
                } else {
                    Err(Error::LengthMismatch {
                        what: "codebook length",
                        expected: code.graph.n(),
                        actual: codebook.n(),
                    })
                }
            }
        }
    }

    /// Decodes one frame given channel outputs and LLRs.
    pub fn decode(&self, graph: &TannerGraph, y: &[f64], llr: &[f64]) -> Result<Vec<u8>> {
        Ok(match self {
            Self::Uncoded => hard_decision(llr),
            Self::Bp { l_max } => {
                let w = WeightSet::uniform(graph);
                NbpDecoder::new(graph, &w)?.decode(llr, *l_max, true)?.final_hard_decision
            }
            Self::Nbp { weights, l_max } => {
                NbpDecoder::new(graph, weights)?.decode(llr, *l_max, true)?.final_hard_decision
            }
            Self::Nbpd {
                weights,
                params,
                cfg,
                selection,
            } => nbp_d_decode_with(graph, weights, params.as_ref(), llr, y, *cfg, *selection)?.codeword,
            Self::Ml { codebook } => ml_decode(y, codebook)?,
        })
    }
}

/// Stop after `min_errors` block errors or `max_frames` frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRule {
    pub min_errors: u64,
    pub max_frames: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_errors: 100,
            max_frames: 10_000_000,
        }
    }
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        if self.min_errors == 0 || self.max_frames == 0 {
            return Err(Error::Config(
                "min_errors and max_frames must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Wilson score interval at 95% for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlerRecord {
    pub decoder: String,
    pub ebn0_db: f64,
    pub frames: u64,
    pub block_errors: u64,
    /// Code-bit errors over all `frames · n` transmitted bits.
    pub bit_errors: u64,
    pub bler: f64,
    pub ber: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub wall_seconds: f64,
}

impl BlerRecord {
    fn new(decoder: String, ebn0_db: f64, n: usize, frames: u64, block_errors: u64, bit_errors: u64, wall: f64) -> Self {
        let (ci95_low, ci95_high) = wilson_interval(block_errors, frames);
        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Self {
            decoder,
            ebn0_db,
            frames,
            block_errors,
            bit_errors,
            bler: ratio(block_errors, frames),
            ber: ratio(bit_errors, frames * n as u64),
            ci95_low,
            ci95_high,
            wall_seconds: wall,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{:.3}",
            self.decoder,
            self.ebn0_db,
            self.frames,
            self.block_errors,
            self.bit_errors,
            self.bler,
            self.ber,
            self.ci95_low,
            self.ci95_high,
            self.wall_seconds
        )
    }

    /// True when the two 95% intervals are disjoint and this one lies above.
    pub fn separated_above(&self, other: &Self) -> bool {
        self.ci95_low > other.ci95_high
    }
}

/// Header plus one row per record.
pub fn to_csv(records: &[BlerRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

pub fn write_csv(path: impl AsRef<Path>, records: &[BlerRecord]) -> Result<()> {
    std::fs::write(path, to_csv(records))?;
    Ok(())
}

/// First Eb/N0 at which `curve` falls from `>= target` to `< target`,
/// interpolated linearly in log10 (linearly if either end is zero).
fn crossing(points: &[(f64, f64)], target: f64) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if !(y0 >= target && y1 < target) {
            return None;
        }
        let (a, b, t) = if y1 > 0.0 {
            (y0.log10(), y1.log10(), target.log10())
        } else {
            (y0, y1, target)
        };
        Some(x0 + (x1 - x0) * (a - t) / (a - b))
    })
}

/// Eb/N0 where a sweep of one decoder crosses `target` BLER, as
/// `(estimate, low, high)`. `low` and `high` are the crossings of the lower
/// and upper 95% interval curves. Records are sorted by Eb/N0 first.
pub fn snr_at_bler(records: &[BlerRecord], target: f64) -> Option<(f64, f64, f64)> {
    let mut sorted: Vec<&BlerRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.ebn0_db.total_cmp(&b.ebn0_db));
    let curve = |f: fn(&BlerRecord) -> f64| -> Vec<(f64, f64)> {
        sorted.iter().map(|r| (r.ebn0_db, f(r))).collect()
    };
    Some((
        crossing(&curve(|r| r.bler), target)?,
        crossing(&curve(|r| r.ci95_low), target)?,
        crossing(&curve(|r| r.ci95_high), target)?,
    ))
}

/// splitmix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the frames simulated at `ebn0_db`; independent of the decoder,
/// so every decoder sees the same noise at a given point.
pub fn point_seed(master: u64, ebn0_db: f64) -> u64 {
    mix(mix(master) ^ ebn0_db.to_bits())
}

/// Runs frames at one SNR point.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    pub code: &'a Code,
    pub decoder: &'a Decoder,
    pub stop: StopRule,
    pub seed: u64,
    pub codeword_mode: CodewordMode,
    /// Frames decoded per parallel batch.
    pub chunk: usize,
}

impl<'a> Simulator<'a> {
    pub fn new(code: &'a Code, decoder: &'a Decoder) -> Self {
        Self {
            code,
            decoder,
            stop: StopRule::default(),
            seed: 0,
            codeword_mode: CodewordMode::AllZero,
            chunk: 64,
        }
    }

    /// `(block error, bit errors)` of frame `index`.
    pub fn frame(&self, sigma: f64, seed: u64, index: u64) -> Result<(bool, u64)> {
        let mut rng = frame_rng(seed, index);
        let bits = sample_codeword(&self.code.gen, self.codeword_mode, &mut rng);
        let obs = transmit_with(&modulate(&bits)?, sigma, &mut rng)?;
        let decided = self.decoder.decode(&self.code.graph, &obs.y, &obs.llr)?;
        let bit_errors = decided.iter().zip(&bits).filter(|(a, b)| a != b).count() as u64;
        Ok((bit_errors > 0, bit_errors))
    }

    /// Simulates until the stop rule fires. Frames are tallied in index
    /// order and the run ends at exactly the frame that meets the rule, so
    /// the record does not depend on `chunk` or the thread count.
    pub fn run_point(&self, ebn0_db: f64) -> Result<BlerRecord> {
        self.stop.validate()?;
        self.decoder.validate(self.code)?;
        let start = Instant::now();
        let sigma = ebn0_to_sigma(ebn0_db, self.code.rate())?;
        let seed = point_seed(self.seed, ebn0_db);
        let chunk = self.chunk.max(1) as u64;
        let (mut frames, mut block_errors, mut bit_errors) = (0u64, 0u64, 0u64);
        'outer: while frames < self.stop.max_frames {
            let end = (frames + chunk).min(self.stop.max_frames);
            let results: Vec<(bool, u64)> = (frames..end)
                .into_par_iter()
                .map(|i| self.frame(sigma, seed, i))
                .collect::<Result<_>>()?;
            for (block, bits) in results {
                frames += 1;
                block_errors += u64::from(block);
                bit_errors += bits;
                if block_errors >= self.stop.min_errors {
                    break 'outer;
                }
            }
        }
        Ok(BlerRecord::new(
            self.decoder.name(),
            ebn0_db,
            self.code.graph.n(),
            frames,
            block_errors,
            bit_errors,
            start.elapsed().as_secs_f64(),
        ))
    }

    pub fn run_sweep(&self, ebn0_db: &[f64]) -> Result<Vec<BlerRecord>> {
        ebn0_db
            .iter()
            .map(|&snr| {
                let r = self.run_point(snr)?;
                log::info!("{} @ {snr} dB: {}/{} block errors", r.decoder, r.block_errors, r.frames);
                Ok(r)
            })
            .collect()
    }
}

/// Flat `key = value` configuration. `#` and `;` start comments; keys are
/// case-sensitive and may not repeat.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
    /// Directory that relative paths resolve against.
    base: Option<PathBuf>,
}

impl FromStr for KeyValues {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected key = value", i + 1)));
            };
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", i + 1)));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {key:?}", i + 1)));
            }
        }
        Ok(Self { entries, base: None })
    }
}

impl KeyValues {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut kv: Self = std::fs::read_to_string(path)?.parse()?;
        kv.base = path.parent().map(Path::to_path_buf);
        Ok(kv)
    }

    /// Sets or replaces a key, as a command-line override does.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
            })
            .transpose()
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.parse(key)?
            .ok_or_else(|| Error::Config(format!("missing key {key:?}")))
    }

    /// A path value, resolved against the config file's directory.
    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(|v| match &self.base {
            Some(base) if Path::new(v).is_relative() => base.join(v),
            _ => PathBuf::from(v),
        })
    }

    /// Comma- or whitespace-separated list of numbers.
    pub fn list(&self, key: &str) -> Result<Vec<f64>> {
        let Some(v) = self.get(key) else {
            return Ok(Vec::new());
        };
        v.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::Config(format!("{key}: cannot parse {s:?}")))
            })
            .collect()
    }
}

/// Everything `simulate` needs.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub code: Code,
    pub decoder: Decoder,
    pub ebn0_db: Vec<f64>,
    pub stop: StopRule,
    pub seed: u64,
    pub codeword_mode: CodewordMode,
    pub output: Option<PathBuf>,
}

impl SimConfig {
    /// Reads the keys `alist`, `decoder` (`uncoded`, `bp`, `nbp`, `nbpd`,
    /// `ml`), `l_max`, `n_d`, `n_ld`, `weights`, `mlp`, `selection`, `ebn0`,
    /// `min_errors`, `max_frames`, `seed`, `codeword_mode`, `output`, and
    /// `n` for the uncoded reference.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let kind: String = kv.require("decoder")?;
        let code = match (kv.path("alist"), kind.as_str()) {
            (Some(p), _) => Code::from_alist_file(p)?,
            (None, "uncoded") => Code::uncoded(kv.require("n")?)?,
            (None, _) => return Err(Error::Config("missing key \"alist\"".into())),
        };
        let l_max = kv.parse_or("l_max", 10)?;
        let weights = || -> Result<WeightSet> {
            match kv.path("weights") {
                Some(p) => WeightSet::load(&code.graph, p),
                None => Ok(WeightSet::uniform(&code.graph)),
            }
        };
        let decoder = match kind.as_str() {
            "uncoded" => Decoder::Uncoded,
            "bp" => Decoder::Bp { l_max },
            "nbp" => Decoder::Nbp { weights: weights()?, l_max },
            "nbpd" => {
                let cfg = NbpdConfig::new(l_max, kv.parse_or("n_d", 0)?, kv.parse_or("n_ld", 0)?);
                let params = kv.path("mlp").map(DecimatorParams::load).transpose()?;
                let selection = match kv.get("selection") {
                    None | Some("codeword-first") => Selection::CodewordFirst,
                    Some("correlation") => Selection::Correlation,
                    Some(other) => {
                        return Err(Error::Config(format!("unknown selection {other:?}")))
                    }
                };
                Decoder::Nbpd {
                    weights: weights()?,
                    params,
                    cfg,
                    selection,
                }
            }
            "ml" => Decoder::Ml {
                codebook: Codebook::from_generator(&code.gen)?,
            },
            other => return Err(Error::Config(format!("unknown decoder {other:?}"))),
        };
        let defaults = StopRule::default();
        Ok(Self {
            decoder,
            ebn0_db: kv.list("ebn0")?,
            stop: StopRule {
                min_errors: kv.parse_or("min_errors", defaults.min_errors)?,
                max_frames: kv.parse_or("max_frames", defaults.max_frames)?,
            },
            seed: kv.parse_or("seed", 0)?,
            codeword_mode: kv.parse_or("codeword_mode", CodewordMode::AllZero)?,
            output: kv.path("output"),
            code,
        })
    }

    pub fn simulator(&self) -> Simulator<'_> {
        Simulator {
            stop: self.stop,
            seed: self.seed,
            codeword_mode: self.codeword_mode,
            ..Simulator::new(&self.code, &self.decoder)
        }
    }

    /// Runs every point and writes the CSV when `output` is set.
    pub fn run_sweep(&self) -> Result<Vec<BlerRecord>> {
        let records = self.simulator().run_sweep(&self.ebn0_db)?;
        if let Some(path) = &self.output {
            write_csv(path, &records)?;
        }
        Ok(records)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_graph::ccsds_128_64;
    use approx::assert_abs_diff_eq;

    fn hamming() -> Code {
        Code::new(
            TannerGraph::from_dense(&[
                vec![1, 1, 0, 1, 1, 0, 0],
                vec![1, 0, 1, 1, 0, 1, 0],
                vec![0, 1, 1, 1, 0, 0, 1],
            ])
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert_abs_diff_eq!(hi, 0.036_994, epsilon = 1e-5);
        // Textbook value for 10/100.
        let (lo, hi) = wilson_interval(10, 100);
        assert_abs_diff_eq!(lo, 0.055_229, epsilon = 1e-5);
        assert_abs_diff_eq!(hi, 0.174_366, epsilon = 1e-5);
        let (lo, hi) = wilson_interval(7, 7);
        assert!(lo < 1.0 && hi == 1.0);
    }

    #[test]
    fn crossing_interpolates_in_log_domain() {
        let rec = |db: f64, k: u64| BlerRecord::new("x".into(), db, 8, 1000, k, k, 0.0);
        // 1e-1 at 2 dB, 1e-3 at 4 dB: 1e-2 sits halfway.
        let sweep = [rec(4.0, 1), rec(2.0, 100)];
        let (est, lo, hi) = snr_at_bler(&sweep, 1e-2).unwrap();
        assert_abs_diff_eq!(est, 3.0, epsilon = 1e-12);
        assert!(lo < est && est < hi);
        assert!(snr_at_bler(&sweep, 0.5).is_none());
        // Zero errors at the high end falls back to linear interpolation.
        let (est, ..) = snr_at_bler(&[rec(2.0, 20), rec(3.0, 0)], 1e-2).unwrap();
        assert_abs_diff_eq!(est, 2.5, epsilon = 1e-12);
    }

    #[test]
    fn high_snr_has_no_errors() {
        let code = hamming();
        let dec = Decoder::Bp { l_max: 5 };
        let sim = Simulator {
            stop: StopRule { min_errors: 1, max_frames: 500 },
            ..Simulator::new(&code, &dec)
        };
        let r = sim.run_point(30.0).unwrap();
        assert_eq!((r.frames, r.block_errors, r.bit_errors), (500, 0, 0));
        assert_eq!(r.ci95_low, 0.0);
    }

    #[test]
    fn stop_rule_and_chunking() {
        let code = hamming();
        let dec = Decoder::Uncoded;
        let base = Simulator {
            stop: StopRule { min_errors: 25, max_frames: 100_000 },
            seed: 4,
            codeword_mode: CodewordMode::Random,
            ..Simulator::new(&code, &dec)
        };
        let a = base.run_point(2.0).unwrap();
        let b = Simulator { chunk: 7, ..base.clone() }.run_point(2.0).unwrap();
        assert_eq!(a.block_errors, 25);
        assert_eq!((a.frames, a.bit_errors), (b.frames, b.bit_errors));
        assert!(a.ci95_low <= a.bler && a.bler <= a.ci95_high);
    }

    #[test]
    fn sweep_rows_follow_points() {
        let code = hamming();
        let dec = Decoder::Bp { l_max: 5 };
        let sim = Simulator {
            stop: StopRule { min_errors: 5, max_frames: 2000 },
            seed: 9,
            ..Simulator::new(&code, &dec)
        };
        let fwd = sim.run_sweep(&[1.0, 3.0]).unwrap();
        let rev = sim.run_sweep(&[3.0, 1.0]).unwrap();
        assert_eq!(fwd[0].frames, rev[1].frames);
        assert_eq!(fwd[1].bit_errors, rev[0].bit_errors);
        assert_eq!(to_csv(&[]), format!("{CSV_HEADER}\n"));
        let csv = to_csv(&fwd);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().starts_with("BP(5),1,"));
    }

    #[test]
    fn key_values() {
        let kv: KeyValues = "# comment\n decoder = nbpd\nl_max=10 ; trailing\n\nebn0 = 2, 2.5 3\n"
            .parse()
            .unwrap();
        assert_eq!(kv.get("decoder"), Some("nbpd"));
        assert_eq!(kv.require::<usize>("l_max").unwrap(), 10);
        assert_eq!(kv.list("ebn0").unwrap(), vec![2.0, 2.5, 3.0]);
        assert!(kv.require::<usize>("n_d").is_err());
        assert!(kv.parse::<usize>("decoder").is_err());
        assert!("novalue".parse::<KeyValues>().is_err());
        assert!("a = 1\na = 2".parse::<KeyValues>().is_err());
        let mut kv = kv;
        kv.set("l_max", "5");
        assert_eq!(kv.require::<usize>("l_max").unwrap(), 5);
    }

    #[test]
    fn sim_config_from_keys() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("c.alist"), ccsds_128_64().to_alist()).unwrap();
        let text = "alist = c.alist\ndecoder = nbpd\nl_max = 5\nn_d = 2\nebn0 = 3\nmax_frames = 3\noutput = out.csv\n";
        std::fs::write(dir.path().join("sim.ini"), text).unwrap();
        let cfg = SimConfig::from_kv(&KeyValues::load(dir.path().join("sim.ini")).unwrap()).unwrap();
        assert_eq!(cfg.decoder.name(), "NBP-D(5,2,0)");
        let recs = cfg.run_sweep().unwrap();
        assert_eq!(recs[0].frames, 3);
        let csv = std::fs::read_to_string(dir.path().join("out.csv")).unwrap();
        assert!(csv.starts_with(CSV_HEADER));

        let mut kv: KeyValues = "decoder = uncoded\nn = 8".parse().unwrap();
        assert_abs_diff_eq!(SimConfig::from_kv(&kv).unwrap().code.rate(), 1.0);
        kv.set("decoder", "nbpd");
        assert!(SimConfig::from_kv(&kv).is_err());
        let kv: KeyValues = "decoder = turbo\nn = 8".parse().unwrap();
        assert!(SimConfig::from_kv(&kv).is_err());
    }

    #[test]
    fn missing_mlp_is_rejected() {
        let code = hamming();
        let dec = Decoder::Nbpd {
            weights: WeightSet::uniform(&code.graph),
            params: None,
            cfg: NbpdConfig::new(3, 1, 1),
            selection: Selection::CodewordFirst,
        };
        assert!(Simulator::new(&code, &dec).run_point(3.0).is_err());
    }
}
