//! Command-line front end for `normlab`.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage or configuration error,
//! 3 a resource budget was exceeded.

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use normlab::blockstats;
use normlab::dimension::{self, Codec};
use normlab::experiments::{self, ExperimentResult};
use normlab::martingale::{self, FsMartingale, Growth, Thresholds};
use normlab::numstream::cache::{self, CacheSource};
use normlab::numstream::{self, RealSpec};
use normlab::repsys::{self, FileResources, RepSystem, SearchOptions};
use normlab::search::{self, ComplexityEntry};
use normlab::transducer::{InputCost, Transducer};
use normlab::{Error, Result};

/// Environment variable overriding the digit cache directory.
pub const CACHE_DIR_VAR: &str = "NORMLAB_CACHE_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "normlab",
    version,
    about = "Finite-scale normality experiments"
)]
pub struct Cli {
    /// Directory receiving `<command>.csv` and `<command>.txt`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the first n digits of a real.
    Digits {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        base: u32,
        #[arg(long)]
        n: usize,
        /// Serve and extend digits through the cache directory.
        #[arg(long)]
        cache: bool,
    },
    /// Block discrepancies for every k <= K at every n.
    #[command(after_help = "CSV columns: spec,base,k,n,discrepancy_num,discrepancy_den")]
    Blocks {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        base: u32,
        /// Largest block length.
        #[arg(long)]
        k: usize,
        /// Prefix lengths, e.g. `1000,10000` or `10..20`.
        #[arg(long)]
        n: NList,
    },
    #[command(subcommand)]
    Transducer(TransducerCmd),
    #[command(subcommand)]
    Martingale(MartingaleCmd),
    #[command(subcommand)]
    Repsys(RepsysCmd),
    /// Upper bounds on computable dimension from a codec family.
    #[command(
        after_help = "CSV columns: spec,n,codec,k_m,ratio (codec `min` is the family bound)"
    )]
    Dim {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        base: u32,
        /// Codec names: passthrough, rle, lz, repsys, repsys:<declaration>.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "passthrough,rle,lz,repsys"
        )]
        codecs: Vec<String>,
        #[arg(long)]
        grid: NList,
    },
    #[command(subcommand)]
    Experiment(ExperimentCmd),
    /// Cache digits on disk; existing prefixes are extended, never rewritten.
    Cache {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        base: u32,
        #[arg(long)]
        n: usize,
        /// Cache file; defaults to a file named after the spec in the cache directory.
        #[arg(long)]
        path: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum TransducerCmd {
    /// Print a machine in canonical form.
    Check {
        #[arg(long)]
        machine: PathBuf,
    },
    /// Run a machine on an input.
    Run {
        #[arg(long)]
        machine: PathBuf,
        /// Input digits; `-` for the empty string.
        #[arg(long, allow_hyphen_values = true)]
        input: String,
    },
    /// Shortest input producing sigma exactly.
    Cd {
        #[arg(long)]
        machine: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        sigma: String,
    },
    /// C_{n,D}(x) for each n.
    #[command(after_help = "CSV columns: spec,n,value,cap_hit")]
    Cnd {
        #[arg(long)]
        machine: PathBuf,
        #[arg(long)]
        spec: String,
        #[arg(long)]
        n: NList,
        #[command(flatten)]
        budget: Budget,
    },
}

#[derive(Debug, Subcommand)]
pub enum MartingaleCmd {
    /// Verify that every stake vector is nonnegative and sums to 1.
    Check {
        #[arg(long)]
        machine: PathBuf,
    },
    /// Track log2 capital along a stream; fails if a threshold is crossed after settle-in.
    #[command(after_help = "CSV columns: n,log2_capital,crossed_eps_<e>...,crossed_h")]
    Profile {
        #[arg(long)]
        machine: PathBuf,
        #[arg(long)]
        spec: String,
        /// Prefix length.
        #[arg(long)]
        n: usize,
        /// Reporting grid; defaults to powers of ten up to n.
        #[arg(long)]
        grid: Option<NList>,
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.1")]
        eps: Vec<f64>,
        /// `sqrt`, `log2sq`, or `pow:<e>` with 0 < e < 1.
        #[arg(long, default_value = "sqrt")]
        h: GrowthArg,
        #[arg(long, default_value_t = 1000)]
        settle: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum RepsysCmd {
    /// C^f_n(x).
    #[command(after_help = "CSV columns: spec,base,f,n,value,cap_hit")]
    Cfn {
        #[command(flatten)]
        target: RepsysTarget,
        #[arg(long)]
        n: NList,
        #[command(flatten)]
        budget: Budget,
        /// Enumerate even for the identity system.
        #[arg(long)]
        no_prune: bool,
    },
    /// C^f_{n,D}(x).
    #[command(after_help = "CSV columns: spec,base,f,n,value,cap_hit")]
    Cfnd {
        #[command(flatten)]
        target: RepsysTarget,
        #[arg(long)]
        machine: PathBuf,
        #[arg(long)]
        n: NList,
        #[command(flatten)]
        budget: Budget,
    },
    /// Ratios C^f_n(x)/n; fails on a violation of some epsilon after settle-in.
    #[command(after_help = "CSV columns: label,n,value,cap_hit,ratio")]
    Weak {
        #[command(flatten)]
        target: RepsysTarget,
        #[arg(long)]
        n: NList,
        #[arg(long, value_delimiter = ',', default_value = "0.1")]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        settle: usize,
    },
    /// Ratios C^f_{n,D}(x)/n for each transducer.
    #[command(after_help = "CSV columns: label,n,value,cap_hit,ratio")]
    Strong {
        #[command(flatten)]
        target: RepsysTarget,
        #[arg(long, value_delimiter = ',')]
        machine: Vec<PathBuf>,
        #[arg(long)]
        n: NList,
        #[arg(long, value_delimiter = ',', default_value = "0.1")]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        settle: usize,
    },
}

#[derive(Debug, Args)]
pub struct RepsysTarget {
    #[arg(long)]
    pub spec: String,
    #[arg(long)]
    pub base: u32,
    /// Representation system declaration, e.g. `identity` or `complement:identity`.
    #[arg(long, default_value = "identity")]
    pub f: String,
}

#[derive(Debug, Args)]
pub struct Budget {
    /// Most candidate strings an enumeration may visit.
    #[arg(long, default_value_t = search::DEFAULT_BUDGET)]
    pub budget: u128,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCmd {
    /// C^f_n(x) = n against C^f_{n,D}(x) near n/2 for x = (b-2)/(b-1).
    Separation {
        #[arg(long)]
        base: u32,
        #[arg(long)]
        nmax: usize,
    },
    /// Binary Champernowne against its two parity masks.
    Interleave {
        #[arg(long)]
        n: usize,
    },
    /// Complement and digit-shift transport for the identity system.
    Closure {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        base: u32,
        #[arg(long, default_value_t = 1)]
        shift: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// f∘D against C^f_{n,D} on seeded random instances.
    Compose {
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run every job of a configuration file.
    Batch {
        #[arg(long)]
        config: PathBuf,
    },
}

/// A list of counts: comma-separated values and inclusive `a..b` ranges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NList(pub Vec<usize>);

impl FromStr for NList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut out = Vec::new();
        for part in s.split(',') {
            let bad = || format!("`{part}` is not a count or an `a..b` range");
            match part.split_once("..") {
                Some((a, b)) => {
                    let a: usize = a.trim().parse().map_err(|_| bad())?;
                    let b: usize = b.trim().parse().map_err(|_| bad())?;
                    if a > b {
                        return Err(bad());
                    }
                    out.extend(a..=b);
                }
                None => out.push(part.trim().parse().map_err(|_| bad())?),
            }
        }
        Ok(NList(out))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GrowthArg(pub Growth);

impl FromStr for GrowthArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sqrt" => Ok(GrowthArg(Growth::Sqrt)),
            "log2sq" => Ok(GrowthArg(Growth::Log2Squared)),
            _ => s
                .strip_prefix("pow:")
                .and_then(|e| e.parse::<f64>().ok())
                .filter(|e| *e > 0.0 && *e < 1.0)
                .map(|e| GrowthArg(Growth::Power(e)))
                .ok_or_else(|| format!("unknown growth `{s}`")),
        }
    }
}

/// The outcome of one command.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub name: String,
    pub text: String,
    pub csv: String,
    /// Exit status the report maps to; nonzero when a check failed.
    pub status: i32,
}

impl Report {
    fn new(name: &str, text: String, csv: String) -> Self {
        Report {
            name: name.into(),
            text,
            csv,
            status: EXIT_OK,
        }
    }

    pub fn failed(&self) -> bool {
        self.status != EXIT_OK
    }

    fn fail_if(mut self, failed: bool) -> Self {
        if failed {
            self.status = EXIT_CHECK_FAILED;
        }
        self
    }

    fn from_experiment(r: &ExperimentResult) -> Self {
        Report {
            name: format!("experiment-{}", r.name),
            text: r.to_text(),
            csv: r.to_csv(),
            status: if r.passed() {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.status
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BudgetExceeded { .. } | Error::TieUnresolvable { .. } => EXIT_BUDGET,
        Error::Invariant(_) | Error::CodecInvalid(_) => EXIT_CHECK_FAILED,
        _ => EXIT_USAGE,
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match &cli.command {
        Command::Experiment(ExperimentCmd::Batch { config }) => batch(config, cli.out.as_deref()),
        command => execute(command),
    };
    match outcome {
        Ok(report) => {
            print!("{}", report.text);
            if let Some(dir) = &cli.out {
                if let Err(e) = write_report(dir, &report.name, &report) {
                    eprintln!("error: {e}");
                    return exit_code(&e);
                }
            }
            report.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes `<stem>.csv` and `<stem>.txt` into `dir`, each by rename.
pub fn write_report(dir: &Path, stem: &str, report: &Report) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (ext, body) in [("csv", &report.csv), ("txt", &report.text)] {
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(body.as_bytes())?;
        tmp.persist(dir.join(format!("{stem}.{ext}")))
            .map_err(|e| Error::Io(e.error))?;
    }
    Ok(())
}

fn spec_arg(text: &str) -> Result<RealSpec> {
    text.parse()
}

fn digit_arg(text: &str, base: u32) -> Result<Vec<u8>> {
    if text == "-" {
        return Ok(Vec::new());
    }
    cache::parse_digits(text, base, 1)
}

fn read_transducer(path: &Path) -> Result<Transducer> {
    fs::read_to_string(path)?.parse()
}

fn read_martingale(path: &Path) -> Result<FsMartingale> {
    fs::read_to_string(path)?.parse()
}

fn repsys_arg(decl: &str, base: u32) -> Result<RepSystem> {
    repsys::parse_repsys_with(decl, base, &FileResources(Path::new(".")))
}

/// `NORMLAB_CACHE_DIR`, or `.normlab-cache` in the working directory.
pub fn cache_dir() -> PathBuf {
    std::env::var_os(CACHE_DIR_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".normlab-cache"))
}

pub fn default_cache_path(spec: &RealSpec, base: u32) -> PathBuf {
    let stem: String = spec
        .to_string()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    cache_dir().join(format!("{stem}-b{base}.digits"))
}

fn cached(
    spec: &RealSpec,
    base: u32,
    n: usize,
    path: Option<&Path>,
) -> Result<(numstream::DigitPrefix, CacheSource, PathBuf)> {
    let path = path.map_or_else(|| default_cache_path(spec, base), Path::to_path_buf);
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let (prefix, source) = cache::cache_digits(spec, base, n, &path)?;
    Ok((prefix, source, path))
}

fn entry_rows(out: &mut String, text: &mut String, prefix: &str, entries: &[ComplexityEntry]) {
    for e in entries {
        let _ = writeln!(out, "{prefix},{},{},{}", e.n, e.value, e.cap_hit as u8);
    }
    if let [single] = entries {
        let _ = writeln!(text, "{}", single.value);
    } else {
        for e in entries {
            let _ = writeln!(
                text,
                "n={} {}{}",
                e.n,
                e.value,
                if e.cap_hit { " (cap)" } else { "" }
            );
        }
    }
}

pub fn execute(cmd: &Command) -> Result<Report> {
    match cmd {
        Command::Digits {
            spec,
            base,
            n,
            cache: use_cache,
        } => {
            let spec = spec_arg(spec)?;
            let prefix = if *use_cache {
                cached(&spec, *base, *n, None)?.0
            } else {
                numstream::digits(&spec, *base, *n)?
            };
            let body = cache::format_digits(prefix.digits(), *base);
            Ok(Report::new(
                "digits",
                format!("{body}\n"),
                format!("spec,base,n,digits\n{spec},{base},{n},{body}\n"),
            ))
        }
        Command::Blocks { spec, base, k, n } => {
            let spec = spec_arg(spec)?;
            let r = blockstats::normality_profile(&spec, *base, *k, &n.0)?;
            let mut text = String::new();
            for p in &r.points {
                let _ = writeln!(
                    text,
                    "k={} n={} discrepancy={} ({:.6})",
                    p.k,
                    p.n,
                    normlab::ratio::format_rational(&p.discrepancy),
                    blockstats::approx(&p.discrepancy)
                );
            }
            Ok(Report::new("blocks", text, r.to_csv()))
        }
        Command::Transducer(t) => transducer_cmd(t),
        Command::Martingale(m) => martingale_cmd(m),
        Command::Repsys(r) => repsys_cmd(r),
        Command::Dim {
            spec,
            base,
            codecs,
            grid,
        } => {
            let spec = spec_arg(spec)?;
            let family = codecs
                .iter()
                .map(|c| dimension::codec_by_name(c, *base))
                .collect::<Result<Vec<Box<dyn Codec>>>>()?;
            let p = dimension::dim_profile(&spec, *base, &family, &grid.0)?;
            let mut text = String::new();
            for pt in &p.points {
                let _ = writeln!(
                    text,
                    "n={} best K_M={} ratio={:.6}",
                    pt.n,
                    pt.best(),
                    pt.ratio()
                );
            }
            let _ = writeln!(
                text,
                "upper bound on dimension over {{{}}}: {:.6}",
                p.codecs.join(", "),
                p.estimate()
            );
            Ok(Report::new("dim", text, p.to_csv()))
        }
        Command::Experiment(e) => experiment_cmd(e),
        Command::Cache {
            spec,
            base,
            n,
            path,
        } => {
            let spec = spec_arg(spec)?;
            let (prefix, source, path) = cached(&spec, *base, *n, path.as_deref())?;
            let how = match source {
                CacheSource::Hit => "hit",
                CacheSource::Extended => "extended",
                CacheSource::Created => "created",
            };
            Ok(Report::new(
                "cache",
                format!("{how} {} ({} digits)\n", path.display(), prefix.len()),
                format!(
                    "spec,base,n,source,path\n{spec},{base},{n},{how},{}\n",
                    path.display()
                ),
            ))
        }
    }
}

fn transducer_cmd(cmd: &TransducerCmd) -> Result<Report> {
    match cmd {
        TransducerCmd::Check { machine } => {
            let d = read_transducer(machine)?;
            Ok(Report::new(
                "transducer-check",
                d.to_string(),
                String::new(),
            ))
        }
        TransducerCmd::Run { machine, input } => {
            let d = read_transducer(machine)?;
            let p = digit_arg(input, d.base())?;
            let out = d.run(&p);
            let shown = if out.is_empty() {
                "-".to_string()
            } else {
                cache::format_digits(&out, d.base())
            };
            Ok(Report::new(
                "transducer-run",
                format!("{shown}\n"),
                format!("input,output\n{input},{shown}\n"),
            ))
        }
        TransducerCmd::Cd { machine, sigma } => {
            let d = read_transducer(machine)?;
            let s = digit_arg(sigma, d.base())?;
            let shown = match d.c_d(&s) {
                InputCost::Finite(c) => c.to_string(),
                InputCost::NotAnOutput => "not an output".to_string(),
            };
            Ok(Report::new(
                "transducer-cd",
                format!("{shown}\n"),
                format!("sigma,c_d\n{sigma},{shown}\n"),
            ))
        }
        TransducerCmd::Cnd {
            machine,
            spec,
            n,
            budget,
        } => {
            let d = read_transducer(machine)?;
            let spec = spec_arg(spec)?;
            let entries =
                n.0.iter()
                    .map(|&n| d.c_nd_with_budget(&spec, n, budget.budget))
                    .collect::<Result<Vec<_>>>()?;
            let mut csv = String::from("spec,n,value,cap_hit\n");
            let mut text = String::new();
            entry_rows(&mut csv, &mut text, &spec.to_string(), &entries);
            Ok(Report::new("transducer-cnd", text, csv))
        }
    }
}

fn default_grid(n: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = std::iter::successors(Some(10usize), |g| g.checked_mul(10))
        .take_while(|&g| g < n)
        .collect();
    grid.push(n);
    grid
}

fn martingale_cmd(cmd: &MartingaleCmd) -> Result<Report> {
    match cmd {
        MartingaleCmd::Check { machine } => {
            let m = read_martingale(machine)?;
            let mut r = Report::new("martingale-check", String::new(), String::new());
            match m.fairness_check() {
                Ok(()) => {
                    r.text = "fair\n".into();
                    r.csv = "fair,state,sum\n1,,\n".into();
                }
                Err(v) => {
                    r.text = format!("unfair: {v}\n");
                    r.csv = format!(
                        "fair,state,sum\n0,{},{}\n",
                        v.state,
                        normlab::ratio::format_rational(&v.sum)
                    );
                    r.status = EXIT_CHECK_FAILED;
                }
            }
            Ok(r)
        }
        MartingaleCmd::Profile {
            machine,
            spec,
            n,
            grid,
            eps,
            h,
            settle,
        } => {
            let m = read_martingale(machine)?;
            if let Err(v) = m.fairness_check() {
                return Err(Error::InvalidArgument(format!(
                    "martingale is not fair: {v}"
                )));
            }
            let spec = spec_arg(spec)?;
            let grid = grid
                .as_ref()
                .map_or_else(|| default_grid(*n), |g| g.0.clone());
            let t = Thresholds {
                epsilons: eps.clone(),
                h: h.0,
                settle_in: *settle,
            };
            let p = martingale::success_profile(&m, &spec, *n, &grid, &t)?;
            let mut text = String::new();
            for row in &p.rows {
                let _ = writeln!(text, "n={} log2 d={:.6}", row.n, row.log2_capital);
            }
            for (e, last) in p.epsilons.iter().zip(&p.last_eps_crossing) {
                let _ = writeln!(text, "last crossing of 2^({e} n): {}", show_opt(*last));
            }
            let _ = writeln!(
                text,
                "last crossing of 2^h(n): {}",
                show_opt(p.last_h_crossing)
            );
            let _ = writeln!(text, "trend: {:?}", p.trend);
            let consistent = p.consistent_with_normality();
            let _ = writeln!(
                text,
                "verdict: {}",
                if consistent {
                    "consistent with normality w.r.t. this martingale"
                } else {
                    "martingale succeeds after settle-in"
                }
            );
            Ok(Report::new("martingale-profile", text, p.to_csv()).fail_if(!consistent))
        }
    }
}

fn show_opt(v: Option<usize>) -> String {
    v.map_or_else(|| "none".into(), |n| n.to_string())
}

fn ratio_report(name: &str, profiles: &[repsys::RatioProfile], settle: usize) -> Report {
    let mut csv = String::new();
    let mut text = String::new();
    let mut failed = false;
    for (i, p) in profiles.iter().enumerate() {
        let body = p.to_csv();
        csv.push_str(if i == 0 {
            &body
        } else {
            body.split_once('\n').map_or("", |x| x.1)
        });
        let _ = writeln!(text, "{}", p.label);
        for c in &p.entries {
            let _ = writeln!(text, "  n={} C={} ratio={:.4}", c.n, c.value, c.ratio());
        }
        for (e, v) in p.epsilons.iter().zip(&p.last_violation) {
            let _ = writeln!(text, "  eps={e}: last violation {}", show_opt(*v));
        }
        failed |= !p.clean_after(settle);
    }
    Report::new(name, text, csv).fail_if(failed)
}

fn repsys_cmd(cmd: &RepsysCmd) -> Result<Report> {
    match cmd {
        RepsysCmd::Cfn {
            target,
            n,
            budget,
            no_prune,
        } => {
            let spec = spec_arg(&target.spec)?;
            let f = repsys_arg(&target.f, target.base)?;
            let opts = SearchOptions {
                budget: budget.budget,
                prune_identity: !no_prune,
            };
            let entries =
                n.0.iter()
                    .map(|&n| repsys::c_f_n_with(&spec, &f, n, &opts))
                    .collect::<Result<Vec<_>>>()?;
            let mut csv = String::from("spec,base,f,n,value,cap_hit\n");
            let mut text = String::new();
            entry_rows(
                &mut csv,
                &mut text,
                &format!("{spec},{},{f}", target.base),
                &entries,
            );
            Ok(Report::new("repsys-cfn", text, csv))
        }
        RepsysCmd::Cfnd {
            target,
            machine,
            n,
            budget,
        } => {
            let spec = spec_arg(&target.spec)?;
            let f = repsys_arg(&target.f, target.base)?;
            let d = read_transducer(machine)?;
            let entries =
                n.0.iter()
                    .map(|&n| repsys::c_f_nd_with_budget(&spec, &f, &d, n, budget.budget))
                    .collect::<Result<Vec<_>>>()?;
            let mut csv = String::from("spec,base,f,n,value,cap_hit\n");
            let mut text = String::new();
            entry_rows(
                &mut csv,
                &mut text,
                &format!("{spec},{},{f}", target.base),
                &entries,
            );
            Ok(Report::new("repsys-cfnd", text, csv))
        }
        RepsysCmd::Weak {
            target,
            n,
            eps,
            settle,
        } => {
            let spec = spec_arg(&target.spec)?;
            let f = repsys_arg(&target.f, target.base)?;
            let p = repsys::weak_profile(&spec, &f, &n.0, eps)?;
            Ok(ratio_report("repsys-weak", &[p], *settle))
        }
        RepsysCmd::Strong {
            target,
            machine,
            n,
            eps,
            settle,
        } => {
            let spec = spec_arg(&target.spec)?;
            let f = repsys_arg(&target.f, target.base)?;
            let ds = machine
                .iter()
                .map(|p| Ok((p.display().to_string(), read_transducer(p)?)))
                .collect::<Result<Vec<_>>>()?;
            let ps = repsys::strong_profile(&spec, &f, &ds, &n.0, eps)?;
            Ok(ratio_report("repsys-strong", &ps, *settle))
        }
    }
}

fn experiment_cmd(cmd: &ExperimentCmd) -> Result<Report> {
    let r = match cmd {
        ExperimentCmd::Separation { base, nmax } => {
            experiments::run_separation_example(*base, *nmax)?
        }
        ExperimentCmd::Interleave { n } => experiments::run_interleave_experiment(*n)?,
        ExperimentCmd::Closure {
            spec,
            base,
            shift,
            n,
            seed,
        } => experiments::run_closure_experiments(&spec_arg(spec)?, *base, *shift, *n, *seed)?,
        ExperimentCmd::Compose { trials, seed } => {
            experiments::run_compose_identity_suite(*trials, *seed)?
        }
        ExperimentCmd::Batch { config } => return batch(config, None),
    };
    Ok(Report::from_experiment(&r))
}

/// Outcome of one batch job.
#[derive(Debug)]
pub struct JobOutcome {
    pub line: usize,
    pub label: String,
    pub result: Result<Report>,
}

impl JobOutcome {
    pub fn exit_code(&self) -> i32 {
        match &self.result {
            Ok(r) => r.exit_code(),
            Err(e) => exit_code(e),
        }
    }
}

/// Runs every job of a loaded configuration; jobs run concurrently and
/// outcomes come back in file order.
pub fn run_jobs(cfg: &config::ExperimentConfig) -> Vec<JobOutcome> {
    cfg.jobs
        .par_iter()
        .map(|job| JobOutcome {
            line: job.line,
            label: job.label.clone(),
            result: execute(&job.cli.command),
        })
        .collect()
}

/// Job reports go to the configuration's `out`, else to `fallback_out`.
fn batch(path: &Path, fallback_out: Option<&Path>) -> Result<Report> {
    let cfg = config::load_config(path)?;
    let out = cfg.out.as_deref().or(fallback_out);
    let outcomes = run_jobs(&cfg);
    let mut text = format!("batch {} seed={}\n", path.display(), cfg.seed);
    let mut csv = String::from("job,line,label,status,exit\n");
    let mut worst = EXIT_OK;
    for (i, o) in outcomes.iter().enumerate() {
        let code = o.exit_code();
        let status = match &o.result {
            Ok(r) if r.failed() => "check failed".to_string(),
            Ok(_) => "ok".to_string(),
            Err(e) => format!("error: {e}"),
        };
        let _ = writeln!(
            text,
            "job {} (line {}) {}: {status}",
            i + 1,
            o.line,
            o.label
        );
        let _ = writeln!(
            csv,
            "{},{},{},{},{code}",
            i + 1,
            o.line,
            csv_field(&o.label),
            csv_field(&status)
        );
        if let (Some(dir), Ok(r)) = (out, &o.result) {
            write_report(dir, &format!("{:02}-{}", i + 1, r.name), r)?;
        }
        worst = worst.max(code);
    }
    Ok(Report {
        name: "batch".into(),
        text,
        csv,
        status: worst,
    })
}
