//! The `nbpd` command line. [`run`] returns the process exit code: 0 on
//! success, 1 on a runtime error, 2 on a usage error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};

use crate::channel::{correlation, CodewordMode};
use crate::code_graph::{ccsds_128_64, parse_alist, TannerGraph};
use crate::decimation::{complexity, count_decimator_params, nbp_d_decode_with, DecimatorParams, NbpdConfig, Selection};
use crate::decoder::{count_weights, WeightSet};
use crate::error::{Error, Result};
use crate::harness::{to_csv, KeyValues, SimConfig};
use crate::training::{train_decimator, train_nbp, TrainConfig, TrainReport};

#[derive(Debug, Parser)]
#[command(name = "nbpd", version, about = "Neural BP with decimation for short LDPC codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the size and degree profile of a code.
    Info { alist: PathBuf },
    /// Check-node update count of NBP-D(lmax, nd, nld).
    Complexity {
        #[arg(long)]
        lmax: usize,
        #[arg(long, default_value_t = 0)]
        nd: usize,
        #[arg(long, default_value_t = 0)]
        nld: usize,
        /// Code to take d̄_c and m from (default: the CCSDS (128,64) code).
        #[arg(long, conflicts_with_all = ["dc", "m"])]
        alist: Option<PathBuf>,
        #[arg(long, requires = "m")]
        dc: Option<f64>,
        #[arg(long, requires = "dc")]
        m: Option<usize>,
    },
    /// Train NBP weights; writes weight JSON to `output`.
    TrainNbp(JobArgs),
    /// Train the decimation MLP on frozen weights; writes MLP JSON to `output`.
    TrainDec(JobArgs),
    /// Run a BLER sweep; writes CSV to `output` (or standard output).
    Simulate(JobArgs),
    /// Decode one LLR vector with NBP-D and list every branch.
    Decode {
        #[arg(long)]
        alist: PathBuf,
        /// Whitespace- or comma-separated channel LLRs.
        #[arg(long)]
        llr: PathBuf,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        mlp: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        lmax: usize,
        #[arg(long, default_value_t = 0)]
        nd: usize,
        #[arg(long, default_value_t = 0)]
        nld: usize,
        /// Pure correlation instead of codeword-first selection.
        #[arg(long)]
        correlation: bool,
    },
}

/// A config file plus overrides. Named flags and `--set key=value` both
/// replace the file's value for that key.
#[derive(Debug, Args)]
struct JobArgs {
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    alist: Option<String>,
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    mlp: Option<String>,
    #[arg(long)]
    decoder: Option<String>,
    #[arg(long)]
    lmax: Option<String>,
    #[arg(long)]
    nd: Option<String>,
    #[arg(long)]
    nld: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    ebn0: Option<String>,
    #[arg(long)]
    max_frames: Option<String>,
    #[arg(long)]
    min_errors: Option<String>,
}

impl JobArgs {
    fn key_values(&self) -> std::result::Result<KeyValues, String> {
        let mut kv = match &self.config {
            Some(path) => KeyValues::load(path).map_err(|e| e.to_string())?,
            None => KeyValues::default(),
        };
        let named = [
            ("alist", &self.alist),
            ("output", &self.output),
            ("weights", &self.weights),
            ("mlp", &self.mlp),
            ("decoder", &self.decoder),
            ("l_max", &self.lmax),
            ("n_d", &self.nd),
            ("n_ld", &self.nld),
            ("seed", &self.seed),
            ("steps", &self.steps),
            ("ebn0", &self.ebn0),
            ("max_frames", &self.max_frames),
            ("min_errors", &self.min_errors),
        ];
        for (key, value) in named {
            if let Some(v) = value {
                kv.set(key, v.clone());
            }
        }
        for pair in &self.set {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| format!("--set expects KEY=VALUE, got {pair:?}"))?;
            kv.set(k.trim(), v.trim());
        }
        Ok(kv)
    }
}

fn load_graph(path: &Path) -> Result<TannerGraph> {
    parse_alist(&std::fs::read_to_string(path)?)
}

fn required_path(kv: &KeyValues, key: &str) -> Result<PathBuf> {
    kv.path(key)
        .ok_or_else(|| Error::Config(format!("missing key {key:?}")))
}

/// Training keys: `batch_size`, `learning_rate`, `steps`, `ebn0_min`,
/// `ebn0_max`, `seed`, `codeword_mode`, `l_max`, `heldout_frames`.
fn train_config(kv: &KeyValues, defaults: TrainConfig) -> Result<TrainConfig> {
    let cfg = TrainConfig {
        batch_size: kv.parse_or("batch_size", defaults.batch_size)?,
        learning_rate: kv.parse_or("learning_rate", defaults.learning_rate)?,
        steps: kv.parse_or("steps", defaults.steps)?,
        ebn0_range_db: (
            kv.parse_or("ebn0_min", defaults.ebn0_range_db.0)?,
            kv.parse_or("ebn0_max", defaults.ebn0_range_db.1)?,
        ),
        seed: kv.parse_or("seed", defaults.seed)?,
        codeword_mode: kv.parse_or::<CodewordMode>("codeword_mode", defaults.codeword_mode)?,
        l_max: kv.parse_or("l_max", defaults.l_max)?,
        heldout_frames: kv.parse_or("heldout_frames", defaults.heldout_frames)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Writes `<output>.train.json` next to a trained artifact.
fn write_sidecar(output: &Path, cfg: &TrainConfig, report: &TrainReport, extra: Option<&NbpdConfig>) -> Result<()> {
    let sidecar = serde_json::json!({
        "train_config": cfg,
        "nbpd_config": extra,
        "report": report,
    });
    let mut name = output.as_os_str().to_owned();
    name.push(".train.json");
    std::fs::write(PathBuf::from(name), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

fn print_report(out: &mut dyn Write, report: &TrainReport) -> Result<()> {
    writeln!(
        out,
        "held-out loss: baseline {:.6}, initial {:.6}, final {:.6}",
        report.baseline_heldout_loss, report.initial_heldout_loss, report.final_heldout_loss
    )?;
    Ok(())
}

fn bits_string(bits: &[u8]) -> String {
    bits.iter().map(|b| char::from(b'0' + b)).collect()
}

fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Info { alist } => {
            let g = load_graph(&alist)?;
            writeln!(out, "n={} m={} E={}", g.n(), g.m(), g.num_edges())?;
            let profile = |p: Vec<(usize, usize)>| {
                p.iter()
                    .map(|(d, c)| format!("{d}:{c}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            writeln!(out, "vn degrees (degree:count): {}", profile(g.vn_degree_profile()))?;
            writeln!(out, "cn degrees (degree:count): {}", profile(g.cn_degree_profile()))?;
            writeln!(out, "average cn degree: {}", g.avg_cn_degree())?;
            writeln!(out, "weights {}", count_weights(&g))?;
            writeln!(out, "decimator parameters {}", count_decimator_params(g.max_vn_degree()))?;
        }
        Command::Complexity {
            lmax,
            nd,
            nld,
            alist,
            dc,
            m,
        } => {
            let (dc, m) = match (alist, dc, m) {
                (Some(path), _, _) => {
                    let g = load_graph(&path)?;
                    (g.avg_cn_degree(), g.m())
                }
                (None, Some(dc), Some(m)) => (dc, m),
                _ => {
                    let g = ccsds_128_64();
                    (g.avg_cn_degree(), g.m())
                }
            };
            writeln!(out, "{}", complexity(lmax, nd, nld, dc, m))?;
        }
        Command::TrainNbp(args) => {
            let kv = args.key_values().map_err(Error::Config)?;
            let g = load_graph(&required_path(&kv, "alist")?)?;
            let output = required_path(&kv, "output")?;
            let cfg = train_config(&kv, TrainConfig::default())?;
            let (weights, report) = train_nbp(&g, &cfg)?;
            weights.save(&g, &output)?;
            write_sidecar(&output, &cfg, &report, None)?;
            print_report(out, &report)?;
            writeln!(out, "wrote {}", output.display())?;
        }
        Command::TrainDec(args) => {
            let kv = args.key_values().map_err(Error::Config)?;
            let g = load_graph(&required_path(&kv, "alist")?)?;
            let output = required_path(&kv, "output")?;
            let frozen = WeightSet::load(&g, required_path(&kv, "weights")?)?;
            let nbpd = NbpdConfig::new(
                kv.parse_or("l_max", 10)?,
                kv.parse_or("n_d", 0)?,
                kv.parse_or("n_ld", 1)?,
            );
            let cfg = train_config(&kv, TrainConfig::for_decimator())?;
            let (params, report) = train_decimator(&g, &frozen, &cfg, &nbpd)?;
            params.save(&output)?;
            write_sidecar(&output, &cfg, &report, Some(&nbpd))?;
            print_report(out, &report)?;
            writeln!(out, "wrote {}", output.display())?;
        }
        Command::Simulate(args) => {
            let kv = args.key_values().map_err(Error::Config)?;
            let cfg = SimConfig::from_kv(&kv)?;
            let records = cfg.run_sweep()?;
            match &cfg.output {
                Some(path) => writeln!(out, "wrote {} rows to {}", records.len(), path.display())?,
                None => write!(out, "{}", to_csv(&records))?,
            }
        }
        Command::Decode {
            alist,
            llr,
            weights,
            mlp,
            lmax,
            nd,
            nld,
            correlation: pure,
        } => {
            let g = load_graph(&alist)?;
            let text = std::fs::read_to_string(&llr)?;
            let mu: Vec<f64> = text
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|_| Error::Format(format!("LLR file: cannot parse {s:?}")))
                })
                .collect::<Result<_>>()?;
            let weights = match weights {
                Some(p) => WeightSet::load(&g, p)?,
                None => WeightSet::uniform(&g),
            };
            let params = mlp.map(DecimatorParams::load).transpose()?;
            let selection = if pure { Selection::Correlation } else { Selection::CodewordFirst };
            let cfg = NbpdConfig::new(lmax, nd, nld);
            // The LLRs are a positive multiple of y, so they select the same word.
            let res = nbp_d_decode_with(&g, &weights, params.as_ref(), &mu, &mu, cfg, selection)?;
            writeln!(out, "codeword {}", bits_string(&res.codeword))?;
            writeln!(out, "selected branch {}", res.selected)?;
            for (j, c) in res.candidates.iter().enumerate() {
                writeln!(
                    out,
                    "branch {j}: {} correlation {} codeword {}",
                    bits_string(c),
                    correlation(&mu, c),
                    g.syndrome_ok(c)?
                )?;
            }
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = writeln!(err, "{}", e.render());
                    let _ = write!(err, "{}", Cli::command().render_help());
                    2
                }
            };
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
